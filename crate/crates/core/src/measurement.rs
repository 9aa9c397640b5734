//! Inclusion-exclusion data `d_l(xi)` from simulated boundary measurements and
//! from direct volume quadrature.

use std::hash::{DefaultHasher, Hash, Hasher};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::boundary::{boundary_integral, linearized_neumann, BoundaryTrace};
use crate::combinatorics::signed_subsets;
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};
use crate::solver::{
    neumann_trace, plane_wave_trace, HelmholtzOperator, NeumannStencil, PicardOptions,
};
use crate::wavevectors::{build_wavevector_set, dispersion_matched, WaveVector, WaveVectorSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Measured,
    Oracle,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Measured => "measured",
            Provenance::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "measured" => Ok(Provenance::Measured),
            "oracle" => Ok(Provenance::Oracle),
            other => Err(Error::arg(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementOptions {
    pub picard: PicardOptions,
    pub stencil: NeumannStencil,
    /// Rescale each wave vector so its grid plane wave solves the discrete equation.
    pub dispersion_matched: bool,
    /// Largest allowed `exp(max |Im zeta| * sqrt 2)`.
    pub growth_cap: f64,
    /// Relative standard deviation of complex Gaussian noise on the linearized trace.
    pub noise: f64,
    pub seed: u64,
}

impl Default for MeasurementOptions {
    fn default() -> Self {
        Self {
            picard: PicardOptions::default(),
            stencil: NeumannStencil::SummationByParts,
            dispersion_matched: true,
            growth_cap: std::f64::consts::E,
            noise: 0.0,
            seed: 0,
        }
    }
}

/// One subset's simulated experiment.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub ell: usize,
    pub xi: [f64; 2],
    pub subset: Vec<usize>,
    pub dirichlet: BoundaryTrace,
    pub linearized_neumann: BoundaryTrace,
    pub provenance: Provenance,
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub value: Complex64,
    /// Nonlinear forward problems solved, one per subset.
    pub forward_solves: usize,
    pub linear_solves: usize,
    pub max_picard_iterations: usize,
    pub records: Vec<MeasurementRecord>,
}

/// `exp(max |Im zeta| * sqrt 2)`, the largest modulus ratio of the set's plane
/// waves across the unit square.
pub fn evanescent_growth(set: &WaveVectorSet) -> f64 {
    (set.max_abs_im() * std::f64::consts::SQRT_2).exp()
}

fn factorial_f64(l: usize) -> f64 {
    (1..=l).map(|v| v as f64).product()
}

fn noise_rng(seed: u64, ell: usize, xi: [f64; 2], subset: usize) -> StdRng {
    let mut h = DefaultHasher::new();
    (seed, ell, xi[0].to_bits(), xi[1].to_bits(), subset).hash(&mut h);
    StdRng::seed_from_u64(h.finish())
}

/// Data from simulated measurements: for each subset `S`, solve the nonlinear
/// problem with Dirichlet data `sum_{j in S} e^{i x.zeta_j}`, take the linearized
/// Neumann trace and pair it with `e^{i x.zeta_0}` on the boundary.
pub fn measure_d(
    ell: usize,
    xi: [f64; 2],
    op: &HelmholtzOperator,
    coefficients: &[ScalarField2D],
    opts: &MeasurementOptions,
) -> Result<Measurement> {
    measure_d_impl(ell, xi, op, coefficients, opts, false)
}

/// As [`measure_d`], also returning the per-subset boundary traces.
pub fn measure_d_with_records(
    ell: usize,
    xi: [f64; 2],
    op: &HelmholtzOperator,
    coefficients: &[ScalarField2D],
    opts: &MeasurementOptions,
) -> Result<Measurement> {
    measure_d_impl(ell, xi, op, coefficients, opts, true)
}

fn measure_d_impl(
    ell: usize,
    xi: [f64; 2],
    op: &HelmholtzOperator,
    coefficients: &[ScalarField2D],
    opts: &MeasurementOptions,
    keep_records: bool,
) -> Result<Measurement> {
    if !(opts.noise >= 0.0) {
        return Err(Error::arg("noise level must be non-negative"));
    }
    let set = build_wavevector_set(ell, xi, op.k())?;
    let growth = evanescent_growth(&set);
    if growth > opts.growth_cap {
        return Err(Error::EvanescentGrowth {
            growth,
            cap: opts.growth_cap,
        });
    }
    let geometry = op.geometry();
    let h = op.grid().spacing();
    let adjust = |z: &WaveVector| {
        if opts.dispersion_matched {
            dispersion_matched(z, h, op.k())
        } else {
            *z
        }
    };
    let phi = plane_wave_trace(geometry, &adjust(&set.zeta0));
    let waves: Vec<BoundaryTrace> = set
        .zetas
        .iter()
        .map(|z| plane_wave_trace(geometry, &adjust(z)))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut out = Measurement {
        value: total,
        forward_solves: 0,
        linear_solves: 0,
        max_picard_iterations: 0,
        records: Vec::new(),
    };
    for (s_idx, subset) in signed_subsets(ell)?.into_iter().enumerate() {
        let annotate = |source: Error| Error::Measurement {
            ell,
            xi_x: xi[0],
            xi_y: xi[1],
            subset: subset.members.iter().map(|j| j + 1).collect(),
            source: Box::new(source),
        };
        let mut f = BoundaryTrace::zeros(geometry.len());
        for &j in &subset.members {
            f.add_assign(&waves[j])?;
        }
        let picard = op
            .solve_nonlinear(coefficients, &f, &opts.picard)
            .map_err(annotate)?;
        out.forward_solves += 1;
        out.linear_solves += picard.linear_solves;
        out.max_picard_iterations = out.max_picard_iterations.max(picard.iterations);
        let full = neumann_trace(&picard.solution, geometry, opts.stencil)?;
        let background = neumann_trace(&picard.background, geometry, opts.stencil)?;
        let mut lin = linearized_neumann(&full, &background)?;
        if opts.noise > 0.0 {
            let sigma = opts.noise * lin.rms() * std::f64::consts::FRAC_1_SQRT_2;
            let mut rng = noise_rng(opts.seed, ell, xi, s_idx);
            for v in lin.values_mut() {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                *v += Complex64::new(a, b) * sigma;
            }
        }
        total += f64::from(subset.sign) * boundary_integral(&phi, &lin, geometry)?;
        if keep_records {
            out.records.push(MeasurementRecord {
                ell,
                xi,
                subset: subset.members.clone(),
                dirichlet: f,
                linearized_neumann: lin,
                provenance: Provenance::Measured,
            });
        }
    }
    out.value = total / factorial_f64(ell);
    Ok(out)
}

/// Index box `[i0, i1] x [j0, j1]` containing every node where some coefficient
/// is nonzero, or `None` if all vanish.
pub fn support_box(coefficients: &[ScalarField2D]) -> Option<([usize; 2], [usize; 2])> {
    let grid = coefficients.first()?.grid();
    let n = grid.n();
    let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
    for j in 0..n {
        for i in 0..n {
            if coefficients
                .iter()
                .any(|c| c.get(i, j) != Complex64::new(0.0, 0.0))
            {
                i0 = i0.min(i);
                i1 = i1.max(i);
                j0 = j0.min(j);
                j1 = j1.max(j);
            }
        }
    }
    (i0 != usize::MAX).then_some(([i0, i1], [j0, j1]))
}

/// Data computed without the forward solver:
/// `(1/l!) sum_S sign * int e^{i x.zeta_0} P(x, sum_{j in S} e^{i x.zeta_j}) dx`
/// by trapezoidal quadrature with analytic plane waves.
pub fn oracle_d(
    ell: usize,
    xi: [f64; 2],
    k: f64,
    coefficients: &[ScalarField2D],
) -> Result<Complex64> {
    let set = build_wavevector_set(ell, xi, k)?;
    oracle_d_with_set(&set, coefficients)
}

pub fn oracle_d_with_set(set: &WaveVectorSet, coefficients: &[ScalarField2D]) -> Result<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let Some(first) = coefficients.first() else {
        return Ok(zero);
    };
    let grid: Grid2D = *first.grid();
    for c in coefficients {
        first.ensure_same_grid(c)?;
    }
    let subsets = signed_subsets(set.ell)?;
    let Some(([i0, i1], [j0, j1])) = support_box(coefficients) else {
        return Ok(zero);
    };
    let w = grid.trapezoid_weights();
    let coords = grid.coords();
    let iu = Complex64::new(0.0, 1.0);
    let axis = |z: Complex64, lo: usize, hi: usize| -> Vec<Complex64> {
        (lo..=hi).map(|t| (iu * z * coords[t]).exp()).collect()
    };
    let all: Vec<&WaveVector> = std::iter::once(&set.zeta0).chain(&set.zetas).collect();
    let ex: Vec<Vec<Complex64>> = all.iter().map(|z| axis(z.x(), i0, i1)).collect();
    let ey: Vec<Vec<Complex64>> = all.iter().map(|z| axis(z.y(), j0, j1)).collect();
    let n = grid.n();
    let mut sums = vec![zero; subsets.len()];
    let mut waves = vec![zero; set.ell];
    for j in j0..=j1 {
        let mut row = vec![zero; subsets.len()];
        for i in i0..=i1 {
            let idx = j * n + i;
            let (ti, tj) = (i - i0, j - j0);
            for (q, wv) in waves.iter_mut().enumerate() {
                *wv = ex[q + 1][ti] * ey[q + 1][tj];
            }
            let phi = ex[0][ti] * ey[0][tj] * w[i];
            for (acc, s) in row.iter_mut().zip(&subsets) {
                let u: Complex64 = s.members.iter().map(|&q| waves[q]).sum();
                let mut p = coefficients[coefficients.len() - 1].values()[idx];
                for c in coefficients[..coefficients.len() - 1].iter().rev() {
                    p = c.values()[idx] + u * p;
                }
                *acc += phi * u * p;
            }
        }
        for (s, r) in sums.iter_mut().zip(row) {
            *s += r * w[j];
        }
    }
    let mut total = zero;
    for (s, v) in subsets.iter().zip(sums) {
        total += f64::from(s.sign) * v;
    }
    Ok(total / factorial_f64(set.ell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synth_coefficient, Bump, SupportSpec};
    use crate::spectral::direct_fourier;

    fn truth(grid: &Grid2D, m: usize) -> Vec<ScalarField2D> {
        let centers = [[0.1, 0.05], [-0.1, 0.0], [0.0, -0.1]];
        (0..m)
            .map(|l| {
                synth_coefficient(
                    grid,
                    &[Bump::new(centers[l], 0.25, 0.15)],
                    &SupportSpec::default(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn oracle_top_level_is_fourier_transform() {
        let grid = Grid2D::new(61).unwrap();
        let c = truth(&grid, 3);
        for xi in [[3.0, 4.0], [-20.0, 11.0], [0.0, 38.0]] {
            let d = oracle_d(3, xi, 10.0, &c).unwrap();
            let f = direct_fourier(&c[2], xi);
            assert!((d - f).norm() <= 1e-10 * f.norm().max(1.0), "{d} vs {f}");
        }
    }

    #[test]
    fn oracle_first_level_with_two_coefficients() {
        let grid = Grid2D::new(61).unwrap();
        let c = truth(&grid, 2);
        let k = 10.0;
        let xi = [7.0, -12.0];
        let set = build_wavevector_set(1, xi, k).unwrap();
        let s = set.zetas[0].re();
        let expect =
            direct_fourier(&c[0], xi) + direct_fourier(&c[1], [xi[0] + s[0], xi[1] + s[1]]);
        let got = oracle_d(1, xi, k, &c).unwrap();
        assert!((got - expect).norm() < 1e-10);
    }

    #[test]
    fn oracle_of_zero_is_zero() {
        let grid = Grid2D::new(21).unwrap();
        let z = vec![ScalarField2D::zeros(grid); 2];
        assert_eq!(
            oracle_d(2, [5.0, 1.0], 4.0, &z).unwrap(),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn oracle_is_hermitian_for_real_coefficients() {
        let grid = Grid2D::new(41).unwrap();
        let c = truth(&grid, 3);
        for l in 1..=3 {
            let xi = [9.0, -4.0];
            let a = oracle_d(l, xi, 5.0, &c).unwrap();
            let b = oracle_d(l, [-xi[0], -xi[1]], 5.0, &c).unwrap();
            assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1e-3));
        }
    }

    #[test]
    fn zero_coefficients_give_zero_measurement() {
        let grid = Grid2D::new(41).unwrap();
        let op = HelmholtzOperator::assemble(grid, 10.0).unwrap();
        let z = vec![ScalarField2D::zeros(grid); 2];
        for l in 1..=2 {
            let m = measure_d(l, [12.0, 5.0], &op, &z, &MeasurementOptions::default()).unwrap();
            assert!(m.value.norm() < 1e-8);
            assert_eq!(m.forward_solves, (1 << l) - 1);
        }
    }

    #[test]
    fn measurement_is_deterministic_and_close_to_oracle() {
        let grid = Grid2D::new(61).unwrap();
        let op = HelmholtzOperator::assemble(grid, 10.0).unwrap();
        let c = truth(&grid, 2);
        let xi = [10.0, 3.0];
        let opts = MeasurementOptions::default();
        let a = measure_d(2, xi, &op, &c, &opts).unwrap();
        let b = measure_d(2, xi, &op, &c, &opts).unwrap();
        assert_eq!(a.value, b.value);
        let o = oracle_d(2, xi, 10.0, &c).unwrap();
        assert!((a.value - o).norm() < 0.1 * o.norm(), "{} vs {o}", a.value);
    }

    #[test]
    fn evanescent_growth_cap_trips() {
        let grid = Grid2D::new(21).unwrap();
        let op = HelmholtzOperator::assemble(grid, 10.0).unwrap();
        let z = vec![ScalarField2D::zeros(grid); 2];
        let err = measure_d(1, [30.0, 0.0], &op, &z, &MeasurementOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EvanescentGrowth { .. }));
    }
}
