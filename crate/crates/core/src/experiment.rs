//! Experiment configuration and orchestration: truth synthesis, data
//! generation, inversion and the artifact tree.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::grid::{synth_coefficient, Bump, Grid2D, ScalarField2D, SupportSpec};
use crate::inversion::{
    build_data_tables, invert, DataTables, MeasuredProvider, OracleProvider, ReconstructionPlan,
    ReconstructionResult,
};
use crate::io;
use crate::measurement::{MeasurementOptions, Provenance};
use crate::solver::{plane_wave_trace, HelmholtzOperator, NeumannStencil, PicardOptions};
use crate::spectral::Interpolation;
use crate::wavevectors::WaveVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Data from volume quadrature, no forward solves.
    Oracle,
    /// Data from simulated boundary measurements.
    Full,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Full => "full",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Mode::Oracle),
            "full" => Ok(Mode::Full),
            other => Err(Error::Config(format!(
                "mode must be \"oracle\" or \"full\", got {other:?}"
            ))),
        }
    }
}

fn stencil_name(s: NeumannStencil) -> &'static str {
    match s {
        NeumannStencil::OneSidedSecondOrder => "one-sided",
        NeumannStencil::SummationByParts => "sbp",
    }
}

fn parse_stencil(s: &str) -> Result<NeumannStencil> {
    match s {
        "one-sided" => Ok(NeumannStencil::OneSidedSecondOrder),
        "sbp" => Ok(NeumannStencil::SummationByParts),
        other => Err(Error::Config(format!(
            "stencil must be \"sbp\" or \"one-sided\", got {other:?}"
        ))),
    }
}

pub const PRESETS: [(&str, &str); 2] = [
    ("m2-paper", include_str!("../presets/m2-paper.toml")),
    ("m3-paper", include_str!("../presets/m3-paper.toml")),
];

/// Default bump for `c_l`: unit amplitude, width 0.15, centred 0.1 from the origin.
pub fn default_bumps(ell: usize) -> Vec<Bump> {
    let center = match ell {
        1 => [0.1, 0.05],
        2 => [-0.1, 0.0],
        3 => [0.0, -0.1],
        _ => {
            let t = 2.0 * ell as f64;
            [0.1 * t.cos(), 0.1 * t.sin()]
        }
    };
    vec![Bump::new(center, 1.0, 0.15)]
}

/// One reconstruction run. Keys of the flat TOML form match the field names;
/// `c1`, `c2`, ... hold `[[x, y, amplitude, width], ...]` bump lists.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub k: f64,
    pub m: usize,
    pub forward_n: usize,
    pub inverse_n: usize,
    /// Global scale applied to every bump amplitude.
    pub amplitude: f64,
    pub support_radius: f64,
    /// Explicit bump lists by `l`; missing levels use [`default_bumps`].
    pub bumps: BTreeMap<usize, Vec<Bump>>,
    pub mode: Mode,
    pub interpolation: Interpolation,
    pub oversample: u32,
    pub margin_cells: usize,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    pub noise: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub picard_rel_tol: f64,
    pub picard_max_iters: usize,
    pub stencil: NeumannStencil,
    pub dispersion_matched: bool,
    pub growth_cap: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 20.0,
            m: 2,
            forward_n: 201,
            inverse_n: 191,
            amplitude: 0.25,
            support_radius: SupportSpec::DEFAULT_RADIUS,
            bumps: BTreeMap::new(),
            mode: Mode::Full,
            interpolation: Interpolation::Bilinear,
            oversample: 2,
            margin_cells: 2,
            workers: 0,
            noise: 0.0,
            out_dir: PathBuf::from("out"),
            seed: 0,
            picard_rel_tol: 1e-10,
            picard_max_iters: 50,
            stencil: NeumannStencil::SummationByParts,
            dispersion_matched: true,
            growth_cap: std::f64::consts::E,
        }
    }
}

fn cfg_err(key: &str, want: &str, got: &Value) -> Error {
    Error::Config(format!("{key}: expected {want}, got {got}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(cfg_err(key, "a number", other)),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(cfg_err(key, "a non-negative integer", other)),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| cfg_err(key, "a string", v))
}

fn parse_bumps(key: &str, v: &Value) -> Result<Vec<Bump>> {
    let list = v
        .as_array()
        .ok_or_else(|| cfg_err(key, "an array of [x, y, amplitude, width]", v))?;
    list.iter()
        .map(|b| {
            let parts = b
                .as_array()
                .filter(|a| a.len() == 4)
                .ok_or_else(|| cfg_err(key, "[x, y, amplitude, width]", b))?;
            let f = |i: usize| as_f64(key, &parts[i]);
            Ok(Bump::new([f(0)?, f(1)?], f(2)?, f(3)?))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::Config(format!(
                "unknown preset {name:?}; available: {}",
                names.join(", ")
            ))
        })?;
        Self::from_toml_str(text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_toml_str(text)?;
        Ok(cfg)
    }

    /// Layer the keys of a flat TOML document over the current values.
    pub fn apply_toml_str(&mut self, text: &str) -> Result<()> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        self.apply_table(&table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn apply_table(&mut self, table: &Table) -> Result<()> {
        for (key, v) in table {
            self.apply_value(key, v)?;
        }
        Ok(())
    }

    /// Apply one `KEY=VALUE` override. The value is read as a TOML value, or
    /// as a bare string if that fails.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not KEY=VALUE")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        self.apply_value(key, &value)
    }

    fn apply_value(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "k" => self.k = as_f64(key, v)?,
            "m" => self.m = as_usize(key, v)?,
            "forward_n" => self.forward_n = as_usize(key, v)?,
            "inverse_n" => self.inverse_n = as_usize(key, v)?,
            "amplitude" => self.amplitude = as_f64(key, v)?,
            "support_radius" => self.support_radius = as_f64(key, v)?,
            "mode" => self.mode = as_str(key, v)?.parse()?,
            "interpolation" => {
                self.interpolation = as_str(key, v)?
                    .parse()
                    .map_err(|e: Error| Error::Config(e.to_string()))?
            }
            "oversample" => self.oversample = as_usize(key, v)? as u32,
            "margin_cells" => self.margin_cells = as_usize(key, v)?,
            "workers" => self.workers = as_usize(key, v)?,
            "noise" => self.noise = as_f64(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(as_str(key, v)?),
            "seed" => self.seed = as_usize(key, v)? as u64,
            "picard_rel_tol" => self.picard_rel_tol = as_f64(key, v)?,
            "picard_max_iters" => self.picard_max_iters = as_usize(key, v)?,
            "stencil" => self.stencil = parse_stencil(as_str(key, v)?)?,
            "dispersion_matched" => {
                self.dispersion_matched = v.as_bool().ok_or_else(|| cfg_err(key, "a boolean", v))?
            }
            "growth_cap" => self.growth_cap = as_f64(key, v)?,
            _ => {
                let ell = key
                    .strip_prefix('c')
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|l| *l >= 1)
                    .ok_or_else(|| Error::Config(format!("unknown key {key:?}")))?;
                self.bumps.insert(ell, parse_bumps(key, v)?);
            }
        }
        Ok(())
    }

    /// Every violated constraint, one per line.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.k > 0.0 && self.k.is_finite()) {
            out.push(format!("k must be positive, got {}", self.k));
        }
        if self.m < 2 {
            out.push(format!("m must be at least 2, got {}", self.m));
        }
        if self.m > crate::combinatorics::SUBSET_CAP {
            out.push(format!(
                "m must not exceed {}",
                crate::combinatorics::SUBSET_CAP
            ));
        }
        for (name, n) in [("forward_n", self.forward_n), ("inverse_n", self.inverse_n)] {
            if n < 4 {
                out.push(format!("{name} must be at least 4, got {n}"));
            }
        }
        if self.mode == Mode::Full && self.forward_n == self.inverse_n {
            out.push(format!(
                "full mode needs distinct forward and inverse grids, both are {}",
                self.forward_n
            ));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            out.push(format!(
                "amplitude must be non-negative, got {}",
                self.amplitude
            ));
        }
        if !(self.support_radius > 0.0 && self.support_radius < 0.5) {
            out.push(format!(
                "support_radius must lie in (0, 0.5), got {}",
                self.support_radius
            ));
        }
        if self.oversample < 1 {
            out.push("oversample must be at least 1".into());
        }
        if !(self.noise >= 0.0) {
            out.push(format!("noise must be non-negative, got {}", self.noise));
        }
        if !(self.picard_rel_tol > 0.0) || self.picard_max_iters < 1 {
            out.push("picard_rel_tol must be positive and picard_max_iters at least 1".into());
        }
        if !(self.growth_cap >= 1.0) {
            out.push(format!(
                "growth_cap must be at least 1, got {}",
                self.growth_cap
            ));
        }
        if let Some(&ell) = self.bumps.keys().find(|&&l| l > self.m) {
            out.push(format!("c{ell} is given but m = {}", self.m));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn bumps_for(&self, ell: usize) -> Vec<Bump> {
        self.bumps
            .get(&ell)
            .cloned()
            .unwrap_or_else(|| default_bumps(ell))
    }

    /// `c_1..c_m` sampled on a grid with `n` points per side.
    pub fn truth(&self, n: usize) -> Result<Vec<ScalarField2D>> {
        let grid = Grid2D::new(n)?;
        let support = SupportSpec::new(self.support_radius)?;
        (1..=self.m)
            .map(|ell| {
                let bumps: Vec<Bump> = self
                    .bumps_for(ell)
                    .into_iter()
                    .map(|b| Bump::new(b.center, b.amplitude * self.amplitude, b.width))
                    .collect();
                synth_coefficient(&grid, &bumps, &support)
            })
            .collect()
    }

    pub fn plan(&self) -> ReconstructionPlan {
        ReconstructionPlan {
            m: self.m,
            k: self.k,
            oversample: self.oversample,
            margin_cells: self.margin_cells,
            interpolation: self.interpolation,
        }
    }

    pub fn measurement_options(&self) -> MeasurementOptions {
        MeasurementOptions {
            picard: PicardOptions {
                rel_tol: self.picard_rel_tol,
                max_iters: self.picard_max_iters,
            },
            stencil: self.stencil,
            dispersion_matched: self.dispersion_matched,
            growth_cap: self.growth_cap,
            noise: self.noise,
            seed: self.seed,
        }
    }

    /// Canonical flat TOML with every key, in a fixed order.
    pub fn to_toml_string(&self) -> String {
        let mut t = Table::new();
        t.insert("k".into(), Value::Float(self.k));
        t.insert("m".into(), Value::Integer(self.m as i64));
        t.insert("forward_n".into(), Value::Integer(self.forward_n as i64));
        t.insert("inverse_n".into(), Value::Integer(self.inverse_n as i64));
        t.insert("amplitude".into(), Value::Float(self.amplitude));
        t.insert("support_radius".into(), Value::Float(self.support_radius));
        t.insert("mode".into(), Value::String(self.mode.as_str().into()));
        t.insert(
            "interpolation".into(),
            Value::String(self.interpolation.as_str().into()),
        );
        t.insert(
            "oversample".into(),
            Value::Integer(i64::from(self.oversample)),
        );
        t.insert(
            "margin_cells".into(),
            Value::Integer(self.margin_cells as i64),
        );
        t.insert("workers".into(), Value::Integer(self.workers as i64));
        t.insert("noise".into(), Value::Float(self.noise));
        t.insert(
            "out_dir".into(),
            Value::String(self.out_dir.display().to_string()),
        );
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert("picard_rel_tol".into(), Value::Float(self.picard_rel_tol));
        t.insert(
            "picard_max_iters".into(),
            Value::Integer(self.picard_max_iters as i64),
        );
        t.insert(
            "stencil".into(),
            Value::String(stencil_name(self.stencil).into()),
        );
        t.insert(
            "dispersion_matched".into(),
            Value::Boolean(self.dispersion_matched),
        );
        t.insert("growth_cap".into(), Value::Float(self.growth_cap));
        for ell in 1..=self.m {
            let list = self
                .bumps_for(ell)
                .iter()
                .map(|b| {
                    Value::Array(
                        [b.center[0], b.center[1], b.amplitude, b.width]
                            .into_iter()
                            .map(Value::Float)
                            .collect(),
                    )
                })
                .collect();
            t.insert(format!("c{ell}"), Value::Array(list));
        }
        toml::to_string(&t).expect("plain table serializes")
    }

    /// Hash of the settings that determine the results (everything except
    /// `out_dir` and `workers`).
    pub fn results_hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        c.workers = 0;
        io::sha256_bytes(c.to_toml_string().as_bytes())
    }

    fn with_pool<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(f)
    }
}

/// Evaluate the data tables `d_1..d_m` per the configured mode.
pub fn generate_data(cfg: &ExperimentConfig) -> Result<DataTables> {
    cfg.validate()?;
    let plan = cfg.plan();
    let coefficients = cfg.truth(cfg.forward_n)?;
    cfg.with_pool(|| match cfg.mode {
        Mode::Oracle => build_data_tables(
            &plan,
            &OracleProvider {
                k: cfg.k,
                coefficients,
            },
        ),
        Mode::Full => {
            let op = HelmholtzOperator::assemble(Grid2D::new(cfg.forward_n)?, cfg.k)?;
            build_data_tables(
                &plan,
                &MeasuredProvider {
                    operator: &op,
                    coefficients,
                    options: cfg.measurement_options(),
                },
            )
        }
    })
}

/// Back-substitute `data` and compare against the truth on the inverse grid.
pub fn reconstruct_from_data(
    cfg: &ExperimentConfig,
    data: &DataTables,
) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let grid = Grid2D::new(cfg.inverse_n)?;
    let truth = cfg.truth(cfg.inverse_n)?;
    cfg.with_pool(|| invert(&cfg.plan(), data, &truth, &grid))
}

fn data_file(ell: usize) -> String {
    format!("data_l{ell}.csv")
}

/// Write `data_l<l>.csv` for every level.
pub fn write_data(dir: &Path, data: &DataTables) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut names = Vec::new();
    for t in &data.tables {
        let name = data_file(t.ell());
        io::write_measurement_csv(&dir.join(&name), t, data.provenance)?;
        names.push(name);
    }
    Ok(names)
}

/// Read `data_l<l>.csv` files written by [`write_data`].
pub fn read_data(cfg: &ExperimentConfig, dir: &Path) -> Result<DataTables> {
    let plan = cfg.plan();
    let mut tables = Vec::with_capacity(cfg.m);
    let mut evaluated = Vec::with_capacity(cfg.m);
    let mut provenance = None;
    for ell in 1..=cfg.m {
        let (t, p) =
            io::read_measurement_csv(&dir.join(data_file(ell)), ell, &plan.frequency_grid(ell)?)?;
        if provenance.replace(p).is_some_and(|old| old != p) {
            return Err(Error::Config(
                "data files mix oracle and measured provenance".into(),
            ));
        }
        evaluated.push(t.entries().count());
        tables.push(t);
    }
    Ok(DataTables {
        tables,
        provenance: provenance.unwrap_or(Provenance::Oracle),
        unavailable: vec![0; evaluated.len()],
        evaluated,
        forward_solves: 0,
        linear_solves: 0,
    })
}

/// Files written for one run, with checksums.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub artifacts: Vec<(String, String)>,
    pub forward_solves: usize,
    pub expected_forward_solves: usize,
    pub seconds: f64,
}

fn write_result_artifacts(dir: &Path, result: &ReconstructionResult) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for l in &result.levels {
        let e = l.ell;
        let spec = [
            (format!("spectrum_l{e}.csv"), &l.corrected_table),
            (format!("spectrum_naive_l{e}.csv"), &l.naive_table),
        ];
        for (name, table) in spec {
            io::write_spectrum_csv(&dir.join(&name), table)?;
            names.push(name);
        }
        let fields = [
            ("corrected", &l.corrected),
            ("naive", &l.naive),
            ("reference", &l.reference),
            ("truth", &l.truth),
        ];
        for (tag, field) in fields {
            let dump = format!("field_l{e}_{tag}.helm");
            io::write_field_dump(&dir.join(&dump), field)?;
            names.push(dump);
            if tag != "reference" {
                let img = format!("image_l{e}_{tag}.pgm");
                io::write_pgm(&dir.join(&img), field)?;
                names.push(img);
            }
        }
    }
    io::write_errors_csv(&dir.join("errors.csv"), &result.levels)?;
    names.push("errors.csv".into());
    Ok(names)
}

fn int_array(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Integer(x as i64)).collect())
}

fn write_manifest(
    dir: &Path,
    cfg: &ExperimentConfig,
    stage: &str,
    names: &[String],
    data: Option<&DataTables>,
    timings: &[(&str, f64)],
) -> Result<Vec<(String, String)>> {
    let mut artifacts = Vec::new();
    let mut art = Table::new();
    for name in names {
        let sum = io::sha256_file(&dir.join(name))?;
        art.insert(name.clone(), Value::String(sum.clone()));
        artifacts.push((name.clone(), sum));
    }
    let mut t = Table::new();
    t.insert("stage".into(), Value::String(stage.into()));
    t.insert("mode".into(), Value::String(cfg.mode.as_str().into()));
    t.insert("config_sha256".into(), Value::String(cfg.results_hash()));
    if let Some(d) = data {
        t.insert(
            "provenance".into(),
            Value::String(d.provenance.as_str().into()),
        );
        let mut s = Table::new();
        s.insert("forward".into(), Value::Integer(d.forward_solves as i64));
        s.insert(
            "expected_forward".into(),
            Value::Integer(d.expected_forward_solves() as i64),
        );
        s.insert("linear".into(), Value::Integer(d.linear_solves as i64));
        s.insert("evaluated".into(), int_array(&d.evaluated));
        s.insert("unavailable_margin".into(), int_array(&d.unavailable));
        t.insert("solves".into(), Value::Table(s));
    }
    let mut tm = Table::new();
    for (k, v) in timings {
        tm.insert((*k).into(), Value::Float(*v));
    }
    t.insert("timings".into(), Value::Table(tm));
    t.insert("artifacts".into(), Value::Table(art));
    fs::write(
        dir.join("manifest.toml"),
        toml::to_string(&t).expect("plain table serializes"),
    )?;
    Ok(artifacts)
}

/// Write a machine-readable record of a failed run.
pub fn write_error_record(dir: &Path, err: &Error) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut t = Table::new();
    t.insert("kind".into(), Value::String(err.kind().into()));
    t.insert("message".into(), Value::String(err.to_string()));
    fs::write(
        dir.join("error.toml"),
        toml::to_string(&t).expect("plain table serializes"),
    )?;
    Ok(())
}

fn prepare(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

fn guarded<T>(cfg: &ExperimentConfig, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().inspect_err(|e| {
        // The original error is what the caller needs; a failed record write is secondary.
        let _ = write_error_record(&cfg.out_dir, e);
    })
}

/// Data generation only: `config.toml`, `data_l*.csv` and `manifest.toml`.
pub fn run_measure(cfg: &ExperimentConfig) -> Result<RunSummary> {
    guarded(cfg, || {
        prepare(cfg)?;
        let start = Instant::now();
        let data = generate_data(cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        let mut names = vec!["config.toml".to_string()];
        names.extend(write_data(&cfg.out_dir, &data)?);
        let artifacts = write_manifest(
            &cfg.out_dir,
            cfg,
            "measure",
            &names,
            Some(&data),
            &[("data_seconds", seconds)],
        )?;
        Ok(RunSummary {
            out_dir: cfg.out_dir.clone(),
            artifacts,
            forward_solves: data.forward_solves,
            expected_forward_solves: data.expected_forward_solves(),
            seconds,
        })
    })
}

/// Inversion of previously written data tables.
pub fn run_invert(
    cfg: &ExperimentConfig,
    data_dir: &Path,
) -> Result<(RunSummary, ReconstructionResult)> {
    guarded(cfg, || {
        prepare(cfg)?;
        let start = Instant::now();
        let data = read_data(cfg, data_dir)?;
        let result = reconstruct_from_data(cfg, &data)?;
        let seconds = start.elapsed().as_secs_f64();
        let mut names = vec!["config.toml".to_string()];
        names.extend(write_result_artifacts(&cfg.out_dir, &result)?);
        let artifacts = write_manifest(
            &cfg.out_dir,
            cfg,
            "invert",
            &names,
            None,
            &[("inversion_seconds", seconds)],
        )?;
        Ok((
            RunSummary {
                out_dir: cfg.out_dir.clone(),
                artifacts,
                forward_solves: 0,
                expected_forward_solves: 0,
                seconds,
            },
            result,
        ))
    })
}

/// The whole pipeline: data, inversion, artifacts and manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunSummary, ReconstructionResult)> {
    guarded(cfg, || {
        prepare(cfg)?;
        let start = Instant::now();
        let data = generate_data(cfg)?;
        let data_seconds = start.elapsed().as_secs_f64();
        let mut result = reconstruct_from_data(cfg, &data)?;
        result.diagnostics.data_seconds = data_seconds;
        let mut names = vec!["config.toml".to_string()];
        names.extend(write_data(&cfg.out_dir, &data)?);
        names.extend(write_result_artifacts(&cfg.out_dir, &result)?);
        let seconds = start.elapsed().as_secs_f64();
        let artifacts = write_manifest(
            &cfg.out_dir,
            cfg,
            "run",
            &names,
            Some(&data),
            &[
                ("data_seconds", data_seconds),
                ("inversion_seconds", result.diagnostics.inversion_seconds),
                ("total_seconds", seconds),
            ],
        )?;
        Ok((
            RunSummary {
                out_dir: cfg.out_dir.clone(),
                artifacts,
                forward_solves: data.forward_solves,
                expected_forward_solves: data.expected_forward_solves(),
                seconds,
            },
            result,
        ))
    })
}

#[derive(Clone, Debug)]
pub struct ForwardSummary {
    pub iterations: usize,
    pub updates: Vec<f64>,
    pub residual: f64,
    pub max_scattered: f64,
}

/// One nonlinear solve on the forward grid with Dirichlet data
/// `e^{i k x.(cos t, sin t)}`; writes `u.helm`, `u0.helm`, `u1.helm` and images.
pub fn run_forward(cfg: &ExperimentConfig, angle: f64) -> Result<ForwardSummary> {
    guarded(cfg, || {
        prepare(cfg)?;
        let grid = Grid2D::new(cfg.forward_n)?;
        let op = HelmholtzOperator::assemble(grid, cfg.k)?;
        let c = cfg.truth(cfg.forward_n)?;
        let zeta = WaveVector::real(cfg.k * angle.cos(), cfg.k * angle.sin());
        let f = plane_wave_trace(op.geometry(), &zeta);
        let out = op.solve_nonlinear(&c, &f, &cfg.measurement_options().picard)?;
        let scattered = out.solution.combine(
            Complex64::new(1.0, 0.0),
            &out.background,
            Complex64::new(-1.0, 0.0),
        )?;
        let dir = &cfg.out_dir;
        io::write_field_dump(&dir.join("u.helm"), &out.solution)?;
        io::write_field_dump(&dir.join("u0.helm"), &out.background)?;
        io::write_field_dump(&dir.join("u1.helm"), &scattered)?;
        io::write_pgm(&dir.join("u.pgm"), &out.solution)?;
        io::write_pgm(&dir.join("u1.pgm"), &scattered)?;
        Ok(ForwardSummary {
            iterations: out.iterations,
            updates: out.updates,
            residual: out.residual,
            max_scattered: scattered.max_abs(),
        })
    })
}

/// Human-readable summary of a run directory.
pub fn report(dir: &Path) -> Result<String> {
    let mut s = String::new();
    let manifest = dir.join("manifest.toml");
    if manifest.exists() {
        let t: Table = fs::read_to_string(&manifest)?
            .parse()
            .map_err(|e: toml::de::Error| Error::Format {
                path: manifest.clone(),
                reason: e.to_string(),
            })?;
        for key in ["stage", "mode", "provenance"] {
            if let Some(v) = t.get(key).and_then(Value::as_str) {
                s.push_str(&format!("{key}: {v}\n"));
            }
        }
        if let Some(solves) = t.get("solves").and_then(Value::as_table) {
            let get = |k: &str| solves.get(k).and_then(Value::as_integer).unwrap_or(0);
            s.push_str(&format!(
                "forward solves: {} (expected {}), linear solves: {}\n",
                get("forward"),
                get("expected_forward"),
                get("linear")
            ));
        }
        if let Some(tm) = t.get("timings").and_then(Value::as_table) {
            for (k, v) in tm {
                if let Some(x) = v.as_float() {
                    s.push_str(&format!("{k}: {x:.2}\n"));
                }
            }
        }
    }
    let errors = dir.join("errors.csv");
    if errors.exists() {
        s.push_str("ell  naive_rel_err  corrected_rel_err  corrected_vs_truth\n");
        for r in io::read_errors_csv(&errors)? {
            s.push_str(&format!(
                "{:>3}  {:>13.4e}  {:>17.4e}  {:>18.4e}{}\n",
                r.ell,
                r.naive,
                r.corrected,
                r.corrected_truth,
                if r.reference_is_zero {
                    "  (absolute)"
                } else {
                    ""
                }
            ));
        }
    }
    if s.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            reason: "no manifest.toml or errors.csv found".into(),
        });
    }
    Ok(s)
}
