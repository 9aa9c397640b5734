//! Fourier modes `F[c](xi) = int c(x) e^{+i x.xi} dx` on a square frequency
//! lattice, spectrum interpolation, truncated synthesis and band limiting.
//!
//! The lattice spacing is `2 pi / L` for an oversampling factor `L >= 1`. Since
//! every coefficient vanishes outside the unit square, its restriction is one
//! period of an `L`-periodic function, and
//! `c(x) = L^{-2} sum_xi F(xi) e^{-i x.xi}` over the lattice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};

/// Relative slack when deciding whether a lattice node is inside a band.
pub const BAND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Catmull-Rom bicubic, falling back to bilinear where its 4x4 stencil
    /// reaches an empty node.
    Bicubic,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Interpolation::Bilinear),
            "bicubic" => Ok(Interpolation::Bicubic),
            other => Err(Error::arg(format!("unknown interpolation {other:?}"))),
        }
    }
}

impl Interpolation {
    pub fn as_str(self) -> &'static str {
        match self {
            Interpolation::Bilinear => "bilinear",
            Interpolation::Bicubic => "bicubic",
        }
    }
}

/// How the value at `xi = 0` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DcPolicy {
    /// Quadrature at `xi = 0`.
    #[default]
    Exact,
    /// Mean of the four nearest lattice values, tagged synthetic.
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Absent,
    /// Computed value inside the band.
    Band,
    /// Computed value in the margin ring beyond the band.
    Margin,
    /// Copied from the nearest computed node.
    Filled,
    ExactDc,
    SyntheticDc,
}

impl NodeStatus {
    pub fn is_present(self) -> bool {
        self != NodeStatus::Absent
    }

    /// 0 for computed values, 1 for a synthetic origin, 2 for filled nodes.
    pub fn synthetic_flag(self) -> u8 {
        match self {
            NodeStatus::SyntheticDc => 1,
            NodeStatus::Filled => 2,
            _ => 0,
        }
    }
}

/// Lattice `xi = (2 pi / L) (p, q)` holding a band of radius `R` plus a margin ring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid {
    radius: f64,
    oversample: u32,
    margin_cells: usize,
    half: i32,
}

impl FrequencyGrid {
    pub fn new(radius: f64, oversample: u32, margin_cells: usize) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::arg(format!(
                "band radius must be finite and >= 0, got {radius}"
            )));
        }
        if oversample < 1 {
            return Err(Error::arg("lattice oversampling must be at least 1"));
        }
        let spacing = 2.0 * std::f64::consts::PI / f64::from(oversample);
        let half = ((radius / spacing).ceil() as i32) + margin_cells as i32 + 1;
        Ok(Self {
            radius,
            oversample,
            margin_cells,
            half,
        })
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn oversample(&self) -> u32 {
        self.oversample
    }

    #[inline]
    pub fn margin_cells(&self) -> usize {
        self.margin_cells
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / f64::from(self.oversample)
    }

    /// Largest |p| or |q| of the dense storage square.
    #[inline]
    pub fn half_width(&self) -> i32 {
        self.half
    }

    #[inline]
    pub fn side(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    #[inline]
    pub fn xi(&self, p: i32, q: i32) -> [f64; 2] {
        let s = self.spacing();
        [s * f64::from(p), s * f64::from(q)]
    }

    #[inline]
    pub fn index(&self, p: i32, q: i32) -> Option<usize> {
        if p.abs() > self.half || q.abs() > self.half {
            return None;
        }
        Some(((q + self.half) as usize) * self.side() + (p + self.half) as usize)
    }

    pub fn in_band(&self, p: i32, q: i32) -> bool {
        let [x, y] = self.xi(p, q);
        x.hypot(y) <= self.radius * (1.0 + BAND_SLACK)
    }

    /// Inside the band plus margin ring.
    pub fn in_stored_disk(&self, p: i32, q: i32) -> bool {
        let [x, y] = self.xi(p, q);
        x.hypot(y) <= (self.radius + self.margin_cells as f64 * self.spacing()) * (1.0 + BAND_SLACK)
    }

    /// Non-origin in-band nodes, `q` outer and `p` inner, both ascending.
    pub fn band_nodes(&self) -> Vec<(i32, i32)> {
        self.nodes_where(|p, q| self.in_band(p, q))
    }

    /// Nodes of the margin ring.
    pub fn margin_nodes(&self) -> Vec<(i32, i32)> {
        self.nodes_where(|p, q| self.in_stored_disk(p, q) && !self.in_band(p, q))
    }

    fn nodes_where(&self, pred: impl Fn(i32, i32) -> bool) -> Vec<(i32, i32)> {
        let h = self.half;
        let mut out = Vec::new();
        for q in -h..=h {
            for p in -h..=h {
                if (p, q) != (0, 0) && pred(p, q) {
                    out.push((p, q));
                }
            }
        }
        out
    }
}

/// Values on a [`FrequencyGrid`], stored densely with a status per node.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable {
    ell: usize,
    grid: FrequencyGrid,
    values: Vec<Complex64>,
    status: Vec<NodeStatus>,
}

impl SpectrumTable {
    pub fn new(ell: usize, grid: FrequencyGrid) -> Self {
        let len = grid.side() * grid.side();
        Self {
            ell,
            grid,
            values: vec![Complex64::new(0.0, 0.0); len],
            status: vec![NodeStatus::Absent; len],
        }
    }

    #[inline]
    pub fn ell(&self) -> usize {
        self.ell
    }

    #[inline]
    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn get(&self, p: i32, q: i32) -> Option<Complex64> {
        let idx = self.grid.index(p, q)?;
        self.status[idx].is_present().then(|| self.values[idx])
    }

    pub fn status(&self, p: i32, q: i32) -> NodeStatus {
        self.grid
            .index(p, q)
            .map_or(NodeStatus::Absent, |i| self.status[i])
    }

    pub fn set(&mut self, p: i32, q: i32, value: Complex64, status: NodeStatus) -> Result<()> {
        let idx = self.grid.index(p, q).ok_or_else(|| {
            let [x, y] = self.grid.xi(p, q);
            Error::OutOfBand {
                xi_x: x,
                xi_y: y,
                radius: self.grid.radius(),
            }
        })?;
        self.values[idx] = value;
        self.status[idx] = status;
        Ok(())
    }

    /// Every present node as `(p, q, value, status)` in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (i32, i32, Complex64, NodeStatus)> + '_ {
        let h = self.grid.half_width();
        let side = self.grid.side();
        self.status
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_present())
            .map(move |(idx, s)| {
                let p = (idx % side) as i32 - h;
                let q = (idx / side) as i32 - h;
                (p, q, self.values[idx], *s)
            })
    }

    /// Replace the origin with the mean of its four neighbours.
    pub fn synthesize_dc(&mut self) -> Result<()> {
        let mut sum = Complex64::new(0.0, 0.0);
        for (p, q) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            sum += self.get(p, q).ok_or(Error::EmptyBand(self.ell))?;
        }
        self.set(0, 0, sum / 4.0, NodeStatus::SyntheticDc)
    }

    /// Give every empty node of the stored disk the value of the nearest
    /// computed node (`Band` or `Margin`); ties go to the first in storage order.
    pub fn clamp_fill(&mut self) -> Result<usize> {
        let sources: Vec<(i32, i32, Complex64)> = self
            .entries()
            .filter(|(_, _, _, s)| matches!(s, NodeStatus::Band | NodeStatus::Margin))
            .map(|(p, q, v, _)| (p, q, v))
            .collect();
        if sources.is_empty() {
            return Err(Error::EmptyBand(self.ell));
        }
        let targets: Vec<(i32, i32)> = self
            .grid
            .nodes_where(|p, q| self.grid.in_stored_disk(p, q) && !self.status(p, q).is_present());
        for &(p, q) in &targets {
            let mut best = (i64::MAX, Complex64::new(0.0, 0.0));
            for &(sp, sq, v) in &sources {
                let d = i64::from(sp - p).pow(2) + i64::from(sq - q).pow(2);
                if d < best.0 {
                    best = (d, v);
                }
            }
            self.set(p, q, best.1, NodeStatus::Filled)?;
        }
        Ok(targets.len())
    }

    /// Value at an arbitrary frequency. Lattice points return the stored value
    /// bitwise.
    pub fn interpolate(&self, xi: [f64; 2], order: Interpolation) -> Result<Complex64> {
        let out_of_band = || Error::OutOfBand {
            xi_x: xi[0],
            xi_y: xi[1],
            radius: self.grid.radius(),
        };
        let limit = self.grid.radius() + self.grid.margin_cells() as f64 * self.grid.spacing();
        if !(xi[0].hypot(xi[1]) <= limit * (1.0 + BAND_SLACK)) {
            return Err(out_of_band());
        }
        let s = self.grid.spacing();
        let gx = xi[0] / s;
        let gy = xi[1] / s;
        let (p0, q0) = (gx.floor(), gy.floor());
        let (tx, ty) = (gx - p0, gy - q0);
        let (p0, q0) = (p0 as i32, q0 as i32);
        if order == Interpolation::Bicubic {
            if let Some(v) = self.stencil(p0 - 1, q0 - 1, &catmull_rom(tx), &catmull_rom(ty)) {
                return Ok(v);
            }
        }
        self.stencil(p0, q0, &[1.0 - tx, tx], &[1.0 - ty, ty])
            .ok_or_else(out_of_band)
    }

    fn stencil(&self, p0: i32, q0: i32, wx: &[f64], wy: &[f64]) -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, &wq) in wy.iter().enumerate() {
            if wq == 0.0 {
                continue;
            }
            let mut row = Complex64::new(0.0, 0.0);
            for (a, &wp) in wx.iter().enumerate() {
                if wp == 0.0 {
                    continue;
                }
                row += self.get(p0 + a as i32, q0 + b as i32)? * wp;
            }
            acc += row * wq;
        }
        Some(acc)
    }

    /// Largest `|F(-xi) - conj F(xi)|` relative to the largest magnitude.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (p, q, v, _) in self.entries() {
            scale = scale.max(v.norm());
            if let Some(w) = self.get(-p, -q) {
                worst = worst.max((w - v.conj()).norm());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        (-t3 + 2.0 * t2 - t) / 2.0,
        (3.0 * t3 - 5.0 * t2 + 2.0) / 2.0,
        (-3.0 * t3 + 4.0 * t2 + t) / 2.0,
        (t3 - t2) / 2.0,
    ]
}

/// Trapezoidal `int c(x) e^{+i x.xi} dx` over the square.
pub fn direct_fourier(field: &ScalarField2D, xi: [f64; 2]) -> Complex64 {
    let grid = field.grid();
    let n = grid.n();
    let w = grid.trapezoid_weights();
    let iu = Complex64::new(0.0, 1.0);
    let ex: Vec<Complex64> = (0..n)
        .map(|i| (iu * xi[0] * grid.coord(i)).exp() * w[i])
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let row = &field.values()[j * n..(j + 1) * n];
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, e) in row.iter().zip(&ex) {
            acc += v * e;
        }
        if acc != Complex64::new(0.0, 0.0) {
            total += acc * (iu * xi[1] * grid.coord(j)).exp() * w[j];
        }
    }
    total
}

/// `e^{sign i x_t xi_p}` for all nodes `t` and lattice indices `p = -h..=h`,
/// laid out `[p][t]`.
fn axis_table(grid: &Grid2D, fgrid: &FrequencyGrid, sign: f64) -> Vec<Complex64> {
    let h = fgrid.half_width();
    let n = grid.n();
    let s = fgrid.spacing();
    let mut out = Vec::with_capacity(fgrid.side() * n);
    for p in -h..=h {
        let xi = s * f64::from(p);
        for t in 0..n {
            out.push(Complex64::new(0.0, sign * xi * grid.coord(t)).exp());
        }
    }
    out
}

/// Direct transform of `field` at every node of the stored disk (band and
/// margin), with the origin set by `dc`.
pub fn fourier_table(
    field: &ScalarField2D,
    ell: usize,
    fgrid: &FrequencyGrid,
    dc: DcPolicy,
) -> Result<SpectrumTable> {
    let grid = field.grid();
    let n = grid.n();
    let side = fgrid.side();
    let w = grid.trapezoid_weights();
    let e = axis_table(grid, fgrid, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    // hrow[j][p] = sum_i w_i c[j][i] e^{i x_i xi_p}
    let mut hrow = vec![zero; n * side];
    for j in 0..n {
        let row = &field.values()[j * n..(j + 1) * n];
        if row.iter().all(|v| *v == zero) {
            continue;
        }
        for p in 0..side {
            let ep = &e[p * n..(p + 1) * n];
            let mut acc = zero;
            for i in 0..n {
                acc += row[i] * ep[i] * w[i];
            }
            hrow[j * side + p] = acc;
        }
    }
    let mut table = SpectrumTable::new(ell, *fgrid);
    let h = fgrid.half_width();
    for q in -h..=h {
        let eq = &e[((q + h) as usize) * n..((q + h) as usize + 1) * n];
        for p in -h..=h {
            let is_origin = (p, q) == (0, 0);
            if !is_origin && !fgrid.in_stored_disk(p, q) {
                continue;
            }
            let pi = (p + h) as usize;
            let mut acc = zero;
            for j in 0..n {
                acc += hrow[j * side + pi] * eq[j] * w[j];
            }
            let status = if is_origin {
                NodeStatus::ExactDc
            } else if fgrid.in_band(p, q) {
                NodeStatus::Band
            } else {
                NodeStatus::Margin
            };
            table.set(p, q, acc, status)?;
        }
    }
    if dc == DcPolicy::Synthetic {
        table.synthesize_dc()?;
    }
    Ok(table)
}

/// `L^{-2} sum F(xi) e^{-i x.xi}` over present in-band nodes and the origin.
pub fn inverse_fourier_truncated(table: &SpectrumTable, out: &Grid2D) -> Result<ScalarField2D> {
    let fgrid = table.grid();
    let h = fgrid.half_width();
    let side = fgrid.side();
    let n = out.n();
    let zero = Complex64::new(0.0, 0.0);
    let mut any = false;
    // Masked coefficients, laid out [q][p].
    let mut coef = vec![zero; side * side];
    for (p, q, v, _) in table.entries() {
        if (p, q) == (0, 0) || fgrid.in_band(p, q) {
            if (p, q) != (0, 0) {
                any = true;
            }
            coef[((q + h) as usize) * side + (p + h) as usize] = v;
        }
    }
    if !any {
        return Err(Error::EmptyBand(table.ell()));
    }
    let e = axis_table(out, fgrid, -1.0);
    // g[q][i] = sum_p coef[q][p] e^{-i x_i xi_p}
    let mut g = vec![zero; side * n];
    for q in 0..side {
        let row = &coef[q * side..(q + 1) * side];
        if row.iter().all(|v| *v == zero) {
            continue;
        }
        let gq = &mut g[q * n..(q + 1) * n];
        for (p, c) in row.iter().enumerate() {
            if *c == zero {
                continue;
            }
            let ep = &e[p * n..(p + 1) * n];
            for (gi, ei) in gq.iter_mut().zip(ep) {
                *gi += c * ei;
            }
        }
    }
    let norm = 1.0 / f64::from(fgrid.oversample()).powi(2);
    let mut values = vec![zero; n * n];
    for q in 0..side {
        let gq = &g[q * n..(q + 1) * n];
        if gq.iter().all(|v| *v == zero) {
            continue;
        }
        let eq = &e[q * n..(q + 1) * n];
        for j in 0..n {
            let f = eq[j] * norm;
            let row = &mut values[j * n..(j + 1) * n];
            for (v, gi) in row.iter_mut().zip(gq) {
                *v += f * gi;
            }
        }
    }
    ScalarField2D::from_values(*out, values)
}

/// Project onto the lattice modes with `|xi| <= radius`.
pub fn band_limit(
    field: &ScalarField2D,
    radius: f64,
    oversample: u32,
    dc: DcPolicy,
) -> Result<ScalarField2D> {
    let fgrid = FrequencyGrid::new(radius, oversample, 0)?;
    let table = fourier_table(field, 0, &fgrid, dc)?;
    inverse_fourier_truncated(&table, field.grid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synth_coefficient, Bump, SupportSpec};

    fn bump_field(n: usize) -> ScalarField2D {
        let g = Grid2D::new(n).unwrap();
        synth_coefficient(
            &g,
            &[Bump::new([0.1, 0.05], 1.0, 0.15)],
            &SupportSpec::default(),
        )
        .unwrap()
    }

    fn rel(a: &ScalarField2D, b: &ScalarField2D) -> f64 {
        let d = a
            .combine(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0))
            .unwrap();
        d.l2_norm() / b.l2_norm()
    }

    #[test]
    fn lattice_geometry() {
        let g = FrequencyGrid::new(20.0, 1, 2).unwrap();
        assert!(g.in_band(3, 0) && !g.in_band(4, 0));
        assert!(g.in_stored_disk(5, 0) && !g.in_stored_disk(6, 0));
        assert!(!g.band_nodes().contains(&(0, 0)));
        let g2 = FrequencyGrid::new(20.0, 2, 2).unwrap();
        assert!((g2.spacing() - std::f64::consts::PI).abs() < 1e-15);
        assert!(g2.band_nodes().len() > 3 * g.band_nodes().len());
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = Grid2D::new(21).unwrap();
        let z = ScalarField2D::zeros(g);
        assert_eq!(direct_fourier(&z, [3.0, -1.0]), Complex64::new(0.0, 0.0));
        let b = band_limit(&z, 30.0, 1, DcPolicy::Exact).unwrap();
        assert!(b.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn dc_is_volume_integral() {
        let f = bump_field(41);
        let a = direct_fourier(&f, [0.0, 0.0]);
        let b = crate::grid::volume_quadrature(&f);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_on_affine_data() {
        let fg = FrequencyGrid::new(30.0, 2, 2).unwrap();
        let mut t = SpectrumTable::new(1, fg);
        let h = fg.half_width();
        for q in -h..=h {
            for p in -h..=h {
                if fg.in_stored_disk(p, q) || (p, q) == (0, 0) {
                    let [x, y] = fg.xi(p, q);
                    t.set(
                        p,
                        q,
                        Complex64::new(0.7 * x - 0.2, 0.1 * y + 1.0),
                        NodeStatus::Band,
                    )
                    .unwrap();
                }
            }
        }
        for order in [Interpolation::Bilinear, Interpolation::Bicubic] {
            for (p, q) in [(1, 2), (-5, 3), (0, -9)] {
                assert_eq!(
                    t.interpolate(fg.xi(p, q), order).unwrap(),
                    t.get(p, q).unwrap()
                );
            }
            for xi in [[1.3, -2.7], [15.1, 20.2], [-25.0, 0.4]] {
                let v = t.interpolate(xi, order).unwrap();
                let expect = Complex64::new(0.7 * xi[0] - 0.2, 0.1 * xi[1] + 1.0);
                assert!((v - expect).norm() < 1e-12, "{order:?} {xi:?}");
            }
        }
        assert!(matches!(
            t.interpolate([60.0, 0.0], Interpolation::Bilinear),
            Err(Error::OutOfBand { .. })
        ));
    }

    #[test]
    fn single_mode_synthesis() {
        let fg = FrequencyGrid::new(10.0, 1, 0).unwrap();
        let mut t = SpectrumTable::new(1, fg);
        let v = Complex64::new(0.5, -0.25);
        t.set(1, 0, v, NodeStatus::Band).unwrap();
        let grid = Grid2D::new(17).unwrap();
        let f = inverse_fourier_truncated(&t, &grid).unwrap();
        let xi = fg.xi(1, 0);
        for (i, j) in [(0, 0), (4, 9), (16, 3)] {
            let [x, _] = grid.point(i, j);
            let expect = v * Complex64::new(0.0, -xi[0] * x).exp();
            assert!((f.get(i, j) - expect).norm() < 1e-14);
        }
        let empty = SpectrumTable::new(2, fg);
        assert!(matches!(
            inverse_fourier_truncated(&empty, &grid),
            Err(Error::EmptyBand(2))
        ));
    }

    #[test]
    fn band_limit_is_idempotent_on_the_unit_lattice() {
        let f = bump_field(101);
        let once = band_limit(&f, 60.0, 1, DcPolicy::Exact).unwrap();
        let twice = band_limit(&once, 60.0, 1, DcPolicy::Exact).unwrap();
        assert!(rel(&twice, &once) < 1e-12, "{}", rel(&twice, &once));
    }

    // R = 10k at the default k = 20.
    #[test]
    fn wide_band_reproduces_the_field() {
        let f = bump_field(101);
        for l in [1, 2] {
            let b = band_limit(&f, 200.0, l, DcPolicy::Exact).unwrap();
            assert!(rel(&b, &f) < 1e-3, "L={l}: {}", rel(&b, &f));
        }
    }

    #[test]
    fn real_fields_have_hermitian_spectra() {
        let f = bump_field(61);
        let fg = FrequencyGrid::new(40.0, 2, 2).unwrap();
        let t = fourier_table(&f, 1, &fg, DcPolicy::Synthetic).unwrap();
        assert!(t.hermitian_defect() < 1e-12);
        let g = inverse_fourier_truncated(&t, f.grid()).unwrap();
        let im = g.values().iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let re = g.values().iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        assert!(im < 1e-10 * re);
    }

    #[test]
    fn clamp_fill_uses_nearest_computed_node() {
        let fg = FrequencyGrid::new(10.0, 1, 2).unwrap();
        let mut t = SpectrumTable::new(1, fg);
        for (p, q) in fg.band_nodes() {
            t.set(
                p,
                q,
                Complex64::new(f64::from(p), f64::from(q)),
                NodeStatus::Band,
            )
            .unwrap();
        }
        let filled = t.clamp_fill().unwrap();
        assert_eq!(filled, fg.margin_nodes().len());
        assert_eq!(t.get(3, 0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(t.status(3, 0), NodeStatus::Filled);
    }
}
