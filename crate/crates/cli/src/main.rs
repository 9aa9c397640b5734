use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polyhelm_core::experiment::{self, ExperimentConfig, Mode};
use polyhelm_core::verify::{verify_suite, Suite};

/// Reconstruct polynomial Helmholtz coefficients from linearized boundary data.
#[derive(Parser)]
#[command(name = "polyhelm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one nonlinear forward problem with plane-wave Dirichlet data.
    Forward {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Incidence angle of the Dirichlet plane wave, in radians.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    /// Generate the data tables d_1..d_m.
    Measure {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Reconstruct from data tables written by `measure`.
    Invert {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Directory holding data_l<l>.csv.
        #[arg(long)]
        data: PathBuf,
    },
    /// Data generation, reconstruction and all artifacts in one go.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run self-check suites: pie, zeta, solver, spectral, scaling.
    Verify {
        suites: Vec<String>,
        /// Run every suite.
        #[arg(long, conflicts_with = "suites")]
        all: bool,
    },
    /// Summarize a run directory.
    Report { dir: PathBuf },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration (m2-paper, m3-paper), applied before --config.
    #[arg(long)]
    preset: Option<String>,
    /// Override one key, e.g. --set k=10 --set 'c1=[[0,0,1,0.1]]'.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_parser = ["oracle", "full"])]
    mode: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.preset {
            Some(name) => ExperimentConfig::preset(name)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_toml_str(&text)
                .with_context(|| format!("loading {}", path.display()))?;
        }
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(m) = &self.mode {
            cfg.mode = m.parse::<Mode>()?;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let problems = cfg.violations();
        if !problems.is_empty() {
            for p in &problems {
                eprintln!("config: {p}");
            }
            if let Err(e) = cfg.validate() {
                experiment::write_error_record(&cfg.out_dir, &e).context("writing error record")?;
            }
            bail!("{} configuration problem(s)", problems.len());
        }
        Ok(cfg)
    }
}

fn print_levels(result: &polyhelm_core::ReconstructionResult) {
    println!("ell  naive_rel_err  corrected_rel_err  corrected_vs_truth");
    for l in &result.levels {
        println!(
            "{:>3}  {:>13.4e}  {:>17.4e}  {:>18.4e}",
            l.ell, l.naive_error.value, l.corrected_error.value, l.corrected_truth_error.value
        );
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Forward { cfg, angle } => {
            let cfg = cfg.resolve()?;
            let s = experiment::run_forward(&cfg, angle)?;
            println!(
                "picard iterations {}, residual {:.3e}, max |u - u0| {:.3e}",
                s.iterations, s.residual, s.max_scattered
            );
            println!("fields written to {}", cfg.out_dir.display());
        }
        Command::Measure { cfg } => {
            let cfg = cfg.resolve()?;
            let s = experiment::run_measure(&cfg)?;
            println!(
                "{} forward solves (expected {}), {:.1} s, output in {}",
                s.forward_solves,
                s.expected_forward_solves,
                s.seconds,
                s.out_dir.display()
            );
        }
        Command::Invert { cfg, data } => {
            let cfg = cfg.resolve()?;
            let (s, result) = experiment::run_invert(&cfg, &data)?;
            print_levels(&result);
            println!("{:.1} s, output in {}", s.seconds, s.out_dir.display());
        }
        Command::Run { cfg } => {
            let cfg = cfg.resolve()?;
            let (s, result) = experiment::run_experiment(&cfg)?;
            print_levels(&result);
            println!(
                "{} forward solves (expected {}), {:.1} s, output in {}",
                s.forward_solves,
                s.expected_forward_solves,
                s.seconds,
                s.out_dir.display()
            );
        }
        Command::Verify { suites, all } => {
            let selection: Vec<Suite> = if all {
                Suite::ALL.to_vec()
            } else {
                suites.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
            };
            let report = verify_suite(&selection);
            print!("{report}");
            let failed = report.checks.iter().filter(|c| !c.passed()).count();
            println!("{} checks, {failed} failed", report.checks.len());
            return Ok(failed == 0);
        }
        Command::Report { dir } => print!("{}", experiment::report(&dir)?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
