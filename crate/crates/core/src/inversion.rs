//! Triangular back-substitution from the data tables `d_l` to the Fourier
//! modes `F[c_l]`, synthesis of the coefficient fields and error metrics.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::combinatorics::{q_polynomial, MultiIndex};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};
use crate::measurement::{measure_d, oracle_d_with_set, MeasurementOptions, Provenance};
use crate::solver::HelmholtzOperator;
use crate::spectral::{
    band_limit, inverse_fourier_truncated, DcPolicy, FrequencyGrid, Interpolation, NodeStatus,
    SpectrumTable,
};
use crate::wavevectors::build_wavevector_set;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionPlan {
    pub m: usize,
    pub k: f64,
    pub oversample: u32,
    pub margin_cells: usize,
    pub interpolation: Interpolation,
}

impl ReconstructionPlan {
    pub fn new(m: usize, k: f64) -> Result<Self> {
        let plan = Self {
            m,
            k,
            oversample: 2,
            margin_cells: 2,
            interpolation: Interpolation::Bilinear,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::arg("degree m must be at least 1"));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::arg(format!(
                "wavenumber must be positive, got {}",
                self.k
            )));
        }
        if self.oversample < 1 {
            return Err(Error::arg("lattice oversampling must be at least 1"));
        }
        Ok(())
    }

    /// `R_l = (l + 1) k`.
    pub fn radius(&self, ell: usize) -> f64 {
        (ell + 1) as f64 * self.k
    }

    pub fn frequency_grid(&self, ell: usize) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.radius(ell), self.oversample, self.margin_cells)
    }

    /// Lattice nodes at which `d_l` is evaluated: the band, plus the margin
    /// ring on the top level only.
    pub fn data_nodes(&self, ell: usize) -> Result<Vec<(i32, i32)>> {
        let g = self.frequency_grid(ell)?;
        let mut nodes = g.band_nodes();
        if ell == self.m {
            nodes.extend(g.margin_nodes());
        }
        Ok(nodes)
    }
}

/// One evaluation of `d_l(xi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataPoint {
    pub value: Complex64,
    pub forward_solves: usize,
    pub linear_solves: usize,
}

/// Source of the data `d_l(xi)`.
pub trait DataProvider: Sync {
    fn provenance(&self) -> Provenance;
    fn evaluate(&self, ell: usize, xi: [f64; 2]) -> Result<DataPoint>;
}

/// Volume quadrature with analytic plane waves.
pub struct OracleProvider {
    pub k: f64,
    pub coefficients: Vec<ScalarField2D>,
}

impl DataProvider for OracleProvider {
    fn provenance(&self) -> Provenance {
        Provenance::Oracle
    }

    fn evaluate(&self, ell: usize, xi: [f64; 2]) -> Result<DataPoint> {
        let set = build_wavevector_set(ell, xi, self.k)?;
        Ok(DataPoint {
            value: oracle_d_with_set(&set, &self.coefficients)?,
            forward_solves: 0,
            linear_solves: 0,
        })
    }
}

/// Simulated boundary measurements through the forward solver.
pub struct MeasuredProvider<'a> {
    pub operator: &'a HelmholtzOperator,
    pub coefficients: Vec<ScalarField2D>,
    pub options: MeasurementOptions,
}

impl DataProvider for MeasuredProvider<'_> {
    fn provenance(&self) -> Provenance {
        Provenance::Measured
    }

    fn evaluate(&self, ell: usize, xi: [f64; 2]) -> Result<DataPoint> {
        let m = measure_d(ell, xi, self.operator, &self.coefficients, &self.options)?;
        Ok(DataPoint {
            value: m.value,
            forward_solves: m.forward_solves,
            linear_solves: m.linear_solves,
        })
    }
}

#[derive(Clone, Debug)]
pub struct DataTables {
    /// Index `l - 1` holds `d_l`.
    pub tables: Vec<SpectrumTable>,
    pub provenance: Provenance,
    /// `N_l`: nodes at which `d_l` was actually evaluated.
    pub evaluated: Vec<usize>,
    /// Margin nodes skipped because the evanescent growth cap tripped.
    pub unavailable: Vec<usize>,
    pub forward_solves: usize,
    pub linear_solves: usize,
}

impl DataTables {
    /// `sum_l (2^l - 1) N_l`.
    pub fn expected_forward_solves(&self) -> usize {
        self.evaluated
            .iter()
            .enumerate()
            .map(|(i, n)| ((1usize << (i + 1)) - 1) * n)
            .sum()
    }
}

/// Evaluate `d_l` on every plan node, in parallel over frequencies.
pub fn build_data_tables(
    plan: &ReconstructionPlan,
    provider: &dyn DataProvider,
) -> Result<DataTables> {
    plan.validate()?;
    let mut out = DataTables {
        tables: Vec::with_capacity(plan.m),
        provenance: provider.provenance(),
        evaluated: Vec::with_capacity(plan.m),
        unavailable: Vec::with_capacity(plan.m),
        forward_solves: 0,
        linear_solves: 0,
    };
    for ell in 1..=plan.m {
        let fgrid = plan.frequency_grid(ell)?;
        let nodes = plan.data_nodes(ell)?;
        let results: Vec<Result<DataPoint>> = nodes
            .par_iter()
            .map(|&(p, q)| provider.evaluate(ell, fgrid.xi(p, q)))
            .collect();
        let mut table = SpectrumTable::new(ell, fgrid);
        let (mut evaluated, mut unavailable) = (0, 0);
        for (&(p, q), res) in nodes.iter().zip(results) {
            let in_band = fgrid.in_band(p, q);
            match res {
                Ok(point) => {
                    evaluated += 1;
                    out.forward_solves += point.forward_solves;
                    out.linear_solves += point.linear_solves;
                    let status = if in_band {
                        NodeStatus::Band
                    } else {
                        NodeStatus::Margin
                    };
                    table.set(p, q, point.value, status)?;
                }
                Err(Error::EvanescentGrowth { .. }) if !in_band => unavailable += 1,
                Err(e) => return Err(e),
            }
        }
        out.tables.push(table);
        out.evaluated.push(evaluated);
        out.unavailable.push(unavailable);
    }
    Ok(out)
}

/// Complete a table for synthesis and interpolation: fill the empty stored
/// nodes from the nearest computed ones and synthesize the origin.
fn finish(table: &mut SpectrumTable) -> Result<()> {
    table.clamp_fill()?;
    table.synthesize_dc()
}

/// Naive spectra: `d_l` taken as `F[c_l]` with no correction.
pub fn naive_tables(d_tables: &[SpectrumTable]) -> Result<Vec<SpectrumTable>> {
    d_tables
        .iter()
        .map(|d| {
            let mut t = d.clone();
            finish(&mut t)?;
            Ok(t)
        })
        .collect()
}

/// Recover `F[c_m], ..., F[c_1]` in that order. Index `l - 1` of the result
/// holds `F[c_l]`.
pub fn back_substitute(
    d_tables: &[SpectrumTable],
    plan: &ReconstructionPlan,
) -> Result<Vec<SpectrumTable>> {
    plan.validate()?;
    let m = plan.m;
    if d_tables.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: d_tables.len(),
        });
    }
    let mut recovered: Vec<Option<SpectrumTable>> = vec![None; m];
    for ell in (1..=m).rev() {
        let d = &d_tables[ell - 1];
        let fgrid = plan.frequency_grid(ell)?;
        let mut table = SpectrumTable::new(ell, fgrid);
        if ell == m {
            for (p, q, v, s) in d.entries() {
                if matches!(s, NodeStatus::Band | NodeStatus::Margin) {
                    table.set(p, q, v, s)?;
                }
            }
        } else {
            // Weights of Q_{l,a} for every a, in term order.
            let terms: Vec<(usize, Vec<(MultiIndex, f64)>)> = (1..=m - ell)
                .map(|a| {
                    let q = q_polynomial(ell, a as u32)?;
                    let w = q.float_weights();
                    Ok((a, q.terms.into_iter().map(|(al, _)| al).zip(w).collect()))
                })
                .collect::<Result<_>>()?;
            let higher = &recovered;
            let nodes = fgrid.band_nodes();
            let values: Vec<Result<Complex64>> = nodes
                .par_iter()
                .map(|&(p, q)| {
                    let xi = fgrid.xi(p, q);
                    let base = d.get(p, q).ok_or(Error::EmptyBand(ell))?;
                    let shifts = build_wavevector_set(ell, xi, plan.k)?.real_shifts();
                    let mut correction = Complex64::new(0.0, 0.0);
                    for (a, alphas) in &terms {
                        let target = higher[ell + a - 1]
                            .as_ref()
                            .expect("higher tables are recovered first");
                        for (alpha, w) in alphas {
                            let mut at = xi;
                            for (s, &e) in shifts.iter().zip(alpha.entries()) {
                                at[0] += f64::from(e) * s[0];
                                at[1] += f64::from(e) * s[1];
                            }
                            let v = target.interpolate(at, plan.interpolation).map_err(|_| {
                                Error::CorrectionOutOfBand {
                                    ell,
                                    target: ell + a,
                                    xi_x: xi[0],
                                    xi_y: xi[1],
                                    alpha: alpha.entries().to_vec(),
                                }
                            })?;
                            correction += v * *w;
                        }
                    }
                    Ok(base - correction)
                })
                .collect();
            for (&(p, q), v) in nodes.iter().zip(values) {
                table.set(p, q, v?, NodeStatus::Band)?;
            }
        }
        finish(&mut table)?;
        recovered[ell - 1] = Some(table);
    }
    Ok(recovered
        .into_iter()
        .map(|t| t.expect("all levels recovered"))
        .collect())
}

/// Relative L2 error, or the absolute norm when the reference vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeError {
    pub value: f64,
    pub absolute: bool,
}

pub fn relative_l2_error(
    recon: &ScalarField2D,
    reference: &ScalarField2D,
) -> Result<RelativeError> {
    recon.ensure_same_grid(reference)?;
    let diff = recon.combine(
        Complex64::new(1.0, 0.0),
        reference,
        Complex64::new(-1.0, 0.0),
    )?;
    let den = reference.l2_norm();
    Ok(if den > 0.0 {
        RelativeError {
            value: diff.l2_norm() / den,
            absolute: false,
        }
    } else {
        RelativeError {
            value: recon.l2_norm(),
            absolute: true,
        }
    })
}

#[derive(Clone, Debug)]
pub struct LevelResult {
    pub ell: usize,
    pub data: SpectrumTable,
    pub corrected_table: SpectrumTable,
    pub naive_table: SpectrumTable,
    pub corrected: ScalarField2D,
    pub naive: ScalarField2D,
    /// Band-limited truth with the same synthetic-origin rule as the recovery.
    pub reference: ScalarField2D,
    pub truth: ScalarField2D,
    pub corrected_error: RelativeError,
    pub naive_error: RelativeError,
    pub corrected_truth_error: RelativeError,
    pub naive_truth_error: RelativeError,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub forward_solves: usize,
    pub expected_forward_solves: usize,
    pub linear_solves: usize,
    pub evaluated: Vec<usize>,
    pub unavailable: Vec<usize>,
    pub data_seconds: f64,
    pub inversion_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub levels: Vec<LevelResult>,
    pub provenance: Provenance,
    pub diagnostics: Diagnostics,
}

/// Back-substitute given data tables, synthesize on `grid` and compare with `truth`
/// (sampled on `grid`, index `l - 1` holds `c_l`).
pub fn invert(
    plan: &ReconstructionPlan,
    data: &DataTables,
    truth: &[ScalarField2D],
    grid: &Grid2D,
) -> Result<ReconstructionResult> {
    if truth.len() != plan.m {
        return Err(Error::DimensionMismatch {
            expected: plan.m,
            got: truth.len(),
        });
    }
    let start = Instant::now();
    let corrected = back_substitute(&data.tables, plan)?;
    let naive = naive_tables(&data.tables)?;
    let mut levels = Vec::with_capacity(plan.m);
    for (idx, ((c_table, n_table), truth_l)) in
        corrected.into_iter().zip(naive).zip(truth).enumerate()
    {
        let ell = idx + 1;
        if truth_l.grid() != grid {
            return Err(Error::DimensionMismatch {
                expected: grid.n(),
                got: truth_l.grid().n(),
            });
        }
        let c_field = inverse_fourier_truncated(&c_table, grid)?;
        let n_field = inverse_fourier_truncated(&n_table, grid)?;
        let reference = band_limit(
            truth_l,
            plan.radius(ell),
            plan.oversample,
            DcPolicy::Synthetic,
        )?;
        levels.push(LevelResult {
            ell,
            data: data.tables[idx].clone(),
            corrected_error: relative_l2_error(&c_field, &reference)?,
            naive_error: relative_l2_error(&n_field, &reference)?,
            corrected_truth_error: relative_l2_error(&c_field, truth_l)?,
            naive_truth_error: relative_l2_error(&n_field, truth_l)?,
            corrected_table: c_table,
            naive_table: n_table,
            corrected: c_field,
            naive: n_field,
            reference,
            truth: truth_l.clone(),
        });
    }
    Ok(ReconstructionResult {
        levels,
        provenance: data.provenance,
        diagnostics: Diagnostics {
            forward_solves: data.forward_solves,
            expected_forward_solves: data.expected_forward_solves(),
            linear_solves: data.linear_solves,
            evaluated: data.evaluated.clone(),
            unavailable: data.unavailable.clone(),
            data_seconds: 0.0,
            inversion_seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// Build the data tables from `provider`, then [`invert`].
pub fn reconstruct(
    plan: &ReconstructionPlan,
    provider: &dyn DataProvider,
    truth: &[ScalarField2D],
    grid: &Grid2D,
) -> Result<ReconstructionResult> {
    let start = Instant::now();
    let data = build_data_tables(plan, provider)?;
    let data_seconds = start.elapsed().as_secs_f64();
    let mut result = invert(plan, &data, truth, grid)?;
    result.diagnostics.data_seconds = data_seconds;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{synth_coefficient, Bump, SupportSpec};
    use crate::spectral::direct_fourier;

    fn zero_tables(plan: &ReconstructionPlan) -> Vec<SpectrumTable> {
        (1..=plan.m)
            .map(|ell| {
                let g = plan.frequency_grid(ell).unwrap();
                let mut t = SpectrumTable::new(ell, g);
                for (p, q) in plan.data_nodes(ell).unwrap() {
                    let s = if g.in_band(p, q) {
                        NodeStatus::Band
                    } else {
                        NodeStatus::Margin
                    };
                    t.set(p, q, Complex64::new(0.0, 0.0), s).unwrap();
                }
                t
            })
            .collect()
    }

    #[test]
    fn zero_data_recovers_zero() {
        let plan = ReconstructionPlan::new(3, 4.0).unwrap();
        let out = back_substitute(&zero_tables(&plan), &plan).unwrap();
        for t in out {
            assert!(t
                .entries()
                .all(|(_, _, v, _)| v == Complex64::new(0.0, 0.0)));
        }
    }

    // With d_2 = F[c_2] exact, F[c_1] = d_1 - F[c_2](xi + zeta_{1,1}).
    #[test]
    fn two_level_formula() {
        let grid = Grid2D::new(41).unwrap();
        let s = SupportSpec::default();
        let c2 = synth_coefficient(&grid, &[Bump::new([0.0, 0.1], 0.3, 0.2)], &s).unwrap();
        let mut plan = ReconstructionPlan::new(2, 5.0).unwrap();
        plan.oversample = 1;
        let mut tables = zero_tables(&plan);
        let g2 = plan.frequency_grid(2).unwrap();
        for (p, q) in plan.data_nodes(2).unwrap() {
            let s = tables[1].status(p, q);
            tables[1]
                .set(p, q, direct_fourier(&c2, g2.xi(p, q)), s)
                .unwrap();
        }
        let g1 = plan.frequency_grid(1).unwrap();
        let d1 = Complex64::new(0.25, -0.5);
        for (p, q) in g1.band_nodes() {
            tables[0].set(p, q, d1, NodeStatus::Band).unwrap();
        }
        let out = back_substitute(&tables, &plan).unwrap();
        for (p, q) in g1.band_nodes() {
            let xi = g1.xi(p, q);
            let z = build_wavevector_set(1, xi, plan.k).unwrap().real_shifts()[0];
            let expect = d1
                - out[1]
                    .interpolate([xi[0] + z[0], xi[1] + z[1]], Interpolation::Bilinear)
                    .unwrap();
            assert_eq!(out[0].get(p, q).unwrap(), expect);
        }
    }

    #[test]
    fn relative_error_examples() {
        let g = Grid2D::new(11).unwrap();
        let r = ScalarField2D::from_fn(g, |x, y| Complex64::new(1.0 + x, y));
        assert_eq!(relative_l2_error(&r, &r).unwrap().value, 0.0);
        let two = r.scaled(Complex64::new(2.0, 0.0));
        assert!((relative_l2_error(&two, &r).unwrap().value - 1.0).abs() < 1e-15);
        let z = ScalarField2D::zeros(g);
        let e = relative_l2_error(&r, &z).unwrap();
        assert!(e.absolute && (e.value - r.l2_norm()).abs() < 1e-15);
    }
}
