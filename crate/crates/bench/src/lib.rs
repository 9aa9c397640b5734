//! Shared fixtures for the benchmarks.

use polyhelm_core::experiment::default_bumps;
use polyhelm_core::grid::synth_coefficient;
use polyhelm_core::{Bump, Grid2D, ScalarField2D, SupportSpec};

/// Default bumps for `c_1..c_m` scaled by `amplitude`.
pub fn truth(grid: &Grid2D, m: usize, amplitude: f64) -> Vec<ScalarField2D> {
    (1..=m)
        .map(|ell| {
            let bumps: Vec<Bump> = default_bumps(ell)
                .into_iter()
                .map(|b| Bump::new(b.center, b.amplitude * amplitude, b.width))
                .collect();
            synth_coefficient(grid, &bumps, &SupportSpec::default())
                .expect("default bumps fit the support")
        })
        .collect()
}
