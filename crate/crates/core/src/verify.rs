//! Self-checks that exercise the invariants of each module and report the
//! measured quantity next to its tolerance.

use std::fmt;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::combinatorics::{pie_closed_form, pie_evaluate};
use crate::error::{Error, Result};
use crate::experiment::default_bumps;
use crate::grid::{synth_coefficient, Bump, Grid2D, ScalarField2D, SupportSpec};
use crate::inversion::ReconstructionPlan;
use crate::measurement::{measure_d, oracle_d, MeasurementOptions};
use crate::solver::{plane_wave_field, plane_wave_trace, HelmholtzOperator};
use crate::spectral::{band_limit, DcPolicy};
use crate::wavevectors::{build_wavevector_set, in_real_band, WaveVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Pie,
    Zeta,
    Solver,
    Spectral,
    Scaling,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Pie,
        Suite::Zeta,
        Suite::Solver,
        Suite::Spectral,
        Suite::Scaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Pie => "pie",
            Suite::Zeta => "zeta",
            Suite::Solver => "solver",
            Suite::Spectral => "spectral",
            Suite::Scaling => "scaling",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown check suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn admits(self, v: f64) -> bool {
        match self {
            Bound::AtMost(t) => v <= t,
            Bound::Within(lo, hi) => (lo..=hi).contains(&v),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(t) => write!(f, "<= {t:e}"),
            Bound::Within(lo, hi) => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    fn new(suite: Suite, name: &str, measured: f64, bound: Bound) -> Self {
        Self {
            suite,
            name: name.into(),
            measured,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        self.bound.admits(self.measured)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: {:.4e} {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.suite.as_str(),
            self.name,
            self.measured,
            self.bound
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Run the selected suites in the order given; failures are report content.
pub fn verify_suite(selection: &[Suite]) -> VerifyReport {
    let mut checks = Vec::new();
    for &s in selection {
        let out = match s {
            Suite::Pie => pie_checks(),
            Suite::Zeta => zeta_checks(),
            Suite::Solver => solver_checks(),
            Suite::Spectral => spectral_checks(),
            Suite::Scaling => scaling_checks(),
        };
        match out {
            Ok(c) => checks.extend(c),
            Err(e) => checks.push(Check::new(
                s,
                &format!("error: {e}"),
                f64::NAN,
                Bound::AtMost(0.0),
            )),
        }
    }
    VerifyReport { checks }
}

fn random_weights(rng: &mut StdRng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Largest relative gap between the signed-subset sum and its closed form over
/// `l in 1..=5`, `l' in 1..=l+3`, `trials` random weight vectors each.
pub fn pie_battery(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for l in 1..=5usize {
        for lp in 1..=(l as u32 + 3) {
            for _ in 0..trials {
                let w = random_weights(&mut rng, l);
                let got = pie_evaluate(l, lp, &w)?;
                let want = pie_closed_form(l, lp, &w)?;
                let scale = want.norm().max(f64::MIN_POSITIVE);
                worst = worst.max(if want.norm() == 0.0 {
                    got.norm()
                } else {
                    (got - want).norm() / scale
                });
            }
        }
    }
    Ok(worst)
}

fn pie_checks() -> Result<Vec<Check>> {
    Ok(vec![Check::new(
        Suite::Pie,
        "max relative gap to closed form",
        pie_battery(50, 1)?,
        Bound::AtMost(1e-10),
    )])
}

/// Outcome of [`zeta_battery`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ZetaStats {
    /// Largest `|zeta.zeta - k^2| / k^2`.
    pub dispersion: f64,
    /// Largest `|sum zeta - xi| / k`.
    pub sum: f64,
    /// Cases where realness disagrees with band membership.
    pub realness_mismatches: usize,
    pub cases: usize,
}

/// `samples` random `(l <= 5, xi, k in {1.5, 5, 20})`; a quarter of the
/// frequencies lie outside the real band to exercise the converse.
pub fn zeta_battery(samples: usize, seed: u64) -> Result<ZetaStats> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut s = ZetaStats::default();
    for i in 0..samples {
        let ell = rng.random_range(1..=5usize);
        let k = [1.5, 5.0, 20.0][rng.random_range(0..3)];
        let band = (ell + 1) as f64 * k;
        let r = if i % 4 == 3 {
            band * rng.random_range(1.01..2.0)
        } else {
            band * rng.random_range(0.01..=1.0)
        };
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        let xi = [r * t.cos(), r * t.sin()];
        let set = build_wavevector_set(ell, xi, k)?;
        let self_dot = set
            .zetas
            .iter()
            .chain(std::iter::once(&set.zeta0))
            .map(|z| (z.self_dot() - k * k).norm() / (k * k))
            .fold(0.0, f64::max);
        let total = set.zetas.iter().fold(set.zeta0, |acc, z| acc + *z);
        let sum = (total.x() - xi[0]).norm().max((total.y() - xi[1]).norm()) / k;
        s.dispersion = s.dispersion.max(self_dot);
        s.sum = s.sum.max(sum);
        if set.is_real != in_real_band(ell, xi, k) {
            s.realness_mismatches += 1;
        }
        s.cases += 1;
    }
    Ok(s)
}

fn zeta_checks() -> Result<Vec<Check>> {
    let s = zeta_battery(200, 2)?;
    Ok(vec![
        Check::new(
            Suite::Zeta,
            "max |zeta.zeta - k^2| / k^2",
            s.dispersion,
            Bound::AtMost(1e-12),
        ),
        Check::new(
            Suite::Zeta,
            "max |sum zeta - xi| / k",
            s.sum,
            Bound::AtMost(1e-12),
        ),
        Check::new(
            Suite::Zeta,
            "realness vs band mismatches",
            s.realness_mismatches as f64,
            Bound::AtMost(0.0),
        ),
    ])
}

/// Max-norm error of the discrete solution with plane-wave Dirichlet data
/// `e^{i k x.(cos 0.3, sin 0.3)}` and no source.
pub fn plane_wave_error(n: usize, k: f64) -> Result<f64> {
    let grid = Grid2D::new(n)?;
    let op = HelmholtzOperator::assemble(grid, k)?;
    let z = WaveVector::real(k * 0.3f64.cos(), k * 0.3f64.sin());
    let exact = plane_wave_field(&grid, &z);
    let u = op.solve_linear(
        &ScalarField2D::zeros(grid),
        &plane_wave_trace(op.geometry(), &z),
    )?;
    Ok(u.values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Successive error ratios for `n = 51, 101, 201` at `k = 10`.
pub fn solver_order_ratios() -> Result<[f64; 2]> {
    let e: Vec<f64> = [51, 101, 201]
        .into_iter()
        .map(|n| plane_wave_error(n, 10.0))
        .collect::<Result<_>>()?;
    Ok([e[0] / e[1], e[1] / e[2]])
}

fn solver_checks() -> Result<Vec<Check>> {
    let [r1, r2] = solver_order_ratios()?;
    let grid = Grid2D::new(65)?;
    let op = HelmholtzOperator::assemble(grid, 10.0)?;
    let rhs = ScalarField2D::from_fn(grid, |x, y| Complex64::new((7.0 * x).sin() * y, x * x));
    let g = op.geometry().trace_fn(|x, y| Complex64::new(x + y, x * y));
    let u = op.solve_linear(&rhs, &g)?;
    Ok(vec![
        Check::new(
            Suite::Solver,
            "error ratio 51 -> 101",
            r1,
            Bound::Within(3.4, 4.6),
        ),
        Check::new(
            Suite::Solver,
            "error ratio 101 -> 201",
            r2,
            Bound::Within(3.4, 4.6),
        ),
        Check::new(
            Suite::Solver,
            "relative linear residual",
            op.linear_residual(&u, &rhs)?,
            Bound::AtMost(1e-12),
        ),
    ])
}

fn rel_l2(a: &ScalarField2D, b: &ScalarField2D) -> Result<f64> {
    let d = a.combine(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0))?;
    Ok(d.l2_norm() / b.l2_norm())
}

fn spectral_checks() -> Result<Vec<Check>> {
    let grid = Grid2D::new(101)?;
    let f = synth_coefficient(&grid, &default_bumps(1), &SupportSpec::default())?;
    let once = band_limit(&f, 60.0, 1, DcPolicy::Exact)?;
    let twice = band_limit(&once, 60.0, 1, DcPolicy::Exact)?;
    let wide = band_limit(&f, 200.0, 2, DcPolicy::Exact)?;
    Ok(vec![
        Check::new(
            Suite::Spectral,
            "band-limit idempotence on the unit lattice",
            rel_l2(&twice, &once)?,
            Bound::AtMost(1e-12),
        ),
        Check::new(
            Suite::Spectral,
            "wide band reproduces a smooth field",
            rel_l2(&wide, &f)?,
            Bound::AtMost(1e-3),
        ),
    ])
}

/// `max over in-band xi and l <= m` of `|measure_d - oracle_d|` for the
/// default bumps at the given amplitude, on an `n`-point grid.
pub fn linearization_gap(k: f64, n: usize, m: usize, amplitude: f64) -> Result<f64> {
    let grid = Grid2D::new(n)?;
    let op = HelmholtzOperator::assemble(grid, k)?;
    let support = SupportSpec::default();
    let coeffs: Vec<ScalarField2D> = (1..=m)
        .map(|ell| {
            let bumps: Vec<Bump> = default_bumps(ell)
                .into_iter()
                .map(|b| Bump::new(b.center, b.amplitude * amplitude, b.width))
                .collect();
            synth_coefficient(&grid, &bumps, &support)
        })
        .collect::<Result<_>>()?;
    let plan = ReconstructionPlan::new(m, k)?;
    let opts = MeasurementOptions::default();
    let mut jobs = Vec::new();
    for ell in 1..=m {
        let fg = plan.frequency_grid(ell)?;
        jobs.extend(fg.band_nodes().into_iter().map(|(p, q)| (ell, fg.xi(p, q))));
    }
    let gaps: Vec<f64> = jobs
        .par_iter()
        .map(|&(ell, xi)| {
            let got = measure_d(ell, xi, &op, &coeffs, &opts)?.value;
            Ok((got - oracle_d(ell, xi, k, &coeffs)?).norm())
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

fn scaling_checks() -> Result<Vec<Check>> {
    let d1 = linearization_gap(10.0, 101, 2, 0.25)?;
    let d2 = linearization_gap(10.0, 101, 2, 0.125)?;
    Ok(vec![Check::new(
        Suite::Scaling,
        "gap ratio D(0.25) / D(0.125)",
        d1 / d2,
        Bound::Within(3.2, 4.8),
    )])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_selection_is_an_empty_pass() {
        let r = verify_suite(&[]);
        assert!(r.checks.is_empty() && r.passed());
    }

    #[test]
    fn fast_suites_pass() {
        let r = verify_suite(&[Suite::Pie, Suite::Zeta]);
        assert_eq!(r.checks.len(), 4);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn suite_names_roundtrip() {
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn bounds() {
        assert!(Bound::AtMost(1.0).admits(1.0) && !Bound::AtMost(1.0).admits(1.5));
        assert!(Bound::Within(3.2, 4.8).admits(4.0) && !Bound::Within(3.2, 4.8).admits(f64::NAN));
    }
}
