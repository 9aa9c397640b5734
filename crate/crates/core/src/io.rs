//! Artifact formats: binary field dumps, 16-bit PGM magnitude images and CSV
//! tables for spectra, data and errors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};
use crate::inversion::LevelResult;
use crate::measurement::Provenance;
use crate::spectral::{FrequencyGrid, NodeStatus, SpectrumTable};

const FIELD_MAGIC: &str = "HELMFIELD v1";

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Header line `HELMFIELD v1 n=<n>`, then `n^2` little-endian `(re, im)` f64 pairs, row-major.
pub fn write_field_dump(path: &Path, field: &ScalarField2D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{FIELD_MAGIC} n={}", field.grid().n())?;
    for v in field.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_dump(path: &Path) -> Result<ScalarField2D> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let n: usize = header
        .trim_end()
        .strip_prefix(FIELD_MAGIC)
        .and_then(|rest| rest.trim().strip_prefix("n="))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| format_err(path, format!("bad header {:?}", header.trim_end())))?;
    let grid = Grid2D::new(n)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * grid.len() {
        return Err(format_err(
            path,
            format!(
                "expected {} payload bytes, found {}",
                16 * grid.len(),
                bytes.len()
            ),
        ));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let values = bytes
        .chunks_exact(16)
        .map(|c| Complex64::new(f(&c[..8]), f(&c[8..])))
        .collect();
    ScalarField2D::from_values(grid, values).map_err(|e| format_err(path, e.to_string()))
}

/// Binary 16-bit PGM of `|field|`, scaled to the largest magnitude, with `y`
/// increasing upward.
pub fn write_pgm(path: &Path, field: &ScalarField2D) -> Result<()> {
    let n = field.grid().n();
    let peak = field.max_abs();
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{n} {n}\n65535\n")?;
    for j in (0..n).rev() {
        for i in 0..n {
            let v = if peak > 0.0 {
                (field.get(i, j).norm() / peak * 65535.0).round() as u16
            } else {
                0
            };
            w.write_all(&v.to_be_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `ell, p, q, xi_x, xi_y, re, im, synthetic_flag`.
pub fn write_spectrum_csv(path: &Path, table: &SpectrumTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "ell",
        "p",
        "q",
        "xi_x",
        "xi_y",
        "re",
        "im",
        "synthetic_flag",
    ])?;
    for (p, q, v, s) in table.entries() {
        let [x, y] = table.grid().xi(p, q);
        w.write_record([
            table.ell().to_string(),
            p.to_string(),
            q.to_string(),
            x.to_string(),
            y.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            s.synthetic_flag().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `ell, xi_x, xi_y, re, im, provenance`, computed nodes only.
pub fn write_measurement_csv(
    path: &Path,
    table: &SpectrumTable,
    provenance: Provenance,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ell", "xi_x", "xi_y", "re", "im", "provenance"])?;
    for (p, q, v, s) in table.entries() {
        if !matches!(s, NodeStatus::Band | NodeStatus::Margin) {
            continue;
        }
        let [x, y] = table.grid().xi(p, q);
        w.write_record([
            table.ell().to_string(),
            x.to_string(),
            y.to_string(),
            v.re.to_string(),
            v.im.to_string(),
            provenance.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a measurement CSV onto `fgrid`; every row must sit on a lattice node
/// of the stored disk and carry the table's `ell`.
pub fn read_measurement_csv(
    path: &Path,
    ell: usize,
    fgrid: &FrequencyGrid,
) -> Result<(SpectrumTable, Provenance)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let expected = ["ell", "xi_x", "xi_y", "re", "im", "provenance"];
    if headers.iter().ne(expected) {
        return Err(format_err(path, format!("unexpected header {headers:?}")));
    }
    let mut table = SpectrumTable::new(ell, *fgrid);
    let mut provenance = None;
    let s = fgrid.spacing();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| format_err(path, format!("row {}: {what}", row + 1));
        let num =
            |i: usize| -> Result<f64> { rec[i].parse::<f64>().map_err(|_| bad("not a number")) };
        let row_ell: usize = rec[0].parse().map_err(|_| bad("bad ell"))?;
        if row_ell != ell {
            return Err(bad(&format!("ell {row_ell} in a table for ell {ell}")));
        }
        let (x, y) = (num(1)?, num(2)?);
        let (p, q) = ((x / s).round() as i32, (y / s).round() as i32);
        let [lx, ly] = fgrid.xi(p, q);
        if (lx - x).abs() > 1e-9 * s || (ly - y).abs() > 1e-9 * s || !fgrid.in_stored_disk(p, q) {
            return Err(bad("frequency is not a lattice node of the table"));
        }
        let prov: Provenance = rec[5].parse().map_err(|_| bad("bad provenance"))?;
        if provenance.replace(prov).is_some_and(|old| old != prov) {
            return Err(bad("mixed provenance"));
        }
        let status = if fgrid.in_band(p, q) {
            NodeStatus::Band
        } else {
            NodeStatus::Margin
        };
        table.set(p, q, Complex64::new(num(3)?, num(4)?), status)?;
    }
    let provenance = provenance.ok_or_else(|| format_err(path, "no data rows"))?;
    Ok((table, provenance))
}

/// Columns `ell, naive_rel_err, corrected_rel_err, naive_truth_err,
/// corrected_truth_err, reference_is_zero`.
pub fn write_errors_csv(path: &Path, levels: &[LevelResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "ell",
        "naive_rel_err",
        "corrected_rel_err",
        "naive_truth_err",
        "corrected_truth_err",
        "reference_is_zero",
    ])?;
    for l in levels {
        w.write_record([
            l.ell.to_string(),
            l.naive_error.value.to_string(),
            l.corrected_error.value.to_string(),
            l.naive_truth_error.value.to_string(),
            l.corrected_truth_error.value.to_string(),
            u8::from(l.corrected_error.absolute).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub ell: usize,
    pub naive: f64,
    pub corrected: f64,
    pub naive_truth: f64,
    pub corrected_truth: f64,
    pub reference_is_zero: bool,
}

pub fn read_errors_csv(path: &Path) -> Result<Vec<ErrorRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = || format_err(path, format!("row {}: malformed", row + 1));
        if rec.len() != 6 {
            return Err(bad());
        }
        let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad());
        out.push(ErrorRow {
            ell: rec[0].parse().map_err(|_| bad())?,
            naive: f(1)?,
            corrected: f(2)?,
            naive_truth: f(3)?,
            corrected_truth: f(4)?,
            reference_is_zero: &rec[5] == "1",
        });
    }
    Ok(out)
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut f = File::open(path)?;
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{fourier_table, DcPolicy};

    #[test]
    fn field_dump_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new(9).unwrap();
        let f = ScalarField2D::from_fn(g, |x, y| Complex64::new(x.sin(), y * 3.0));
        let p = dir.path().join("f.helm");
        write_field_dump(&p, &f).unwrap();
        assert_eq!(read_field_dump(&p).unwrap(), f);
        let raw = std::fs::read(&p).unwrap();
        assert!(raw.starts_with(b"HELMFIELD v1 n=9\n"));
        assert_eq!(raw.len(), "HELMFIELD v1 n=9\n".len() + 81 * 16);
        std::fs::write(&p, &raw[..raw.len() - 3]).unwrap();
        assert!(matches!(read_field_dump(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn pgm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new(5).unwrap();
        let f = ScalarField2D::from_fn(g, |x, y| Complex64::new(x + y + 1.0, 0.0));
        let p = dir.path().join("f.pgm");
        write_pgm(&p, &f).unwrap();
        let raw = std::fs::read(&p).unwrap();
        let head = b"P5\n5 5\n65535\n";
        assert!(raw.starts_with(head));
        assert_eq!(raw.len(), head.len() + 50);
        // First pixel is the top-left corner (x = -0.5, y = 0.5).
        let px = u16::from_be_bytes([raw[head.len()], raw[head.len() + 1]]);
        assert_eq!(px, (0.5f64 * 65535.0).round() as u16);
    }

    #[test]
    fn measurement_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new(21).unwrap();
        let f = ScalarField2D::from_fn(g, |x, y| Complex64::new((x * y).cos(), 0.0));
        let fg = FrequencyGrid::new(15.0, 2, 2).unwrap();
        let t = fourier_table(&f, 2, &fg, DcPolicy::Synthetic).unwrap();
        let p = dir.path().join("d.csv");
        write_measurement_csv(&p, &t, Provenance::Oracle).unwrap();
        let (back, prov) = read_measurement_csv(&p, 2, &fg).unwrap();
        assert_eq!(prov, Provenance::Oracle);
        for (pp, qq, v, s) in t.entries() {
            if matches!(s, NodeStatus::Band | NodeStatus::Margin) {
                assert_eq!(back.get(pp, qq).unwrap(), v);
            }
        }
        assert!(read_measurement_csv(&p, 1, &fg).is_err());
    }

    #[test]
    fn checksums() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
