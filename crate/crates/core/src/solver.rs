//! Discrete Helmholtz operator `Delta_h + k^2` with Dirichlet boundary values,
//! Picard iteration for the polynomial nonlinearity, plane waves and Neumann
//! traces.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::boundary::{BoundaryGeometry, BoundaryTrace, Side};
use crate::dst::{transpose, Dst1, DstScratch};
use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};
use crate::wavevectors::WaveVector;

/// Resonance threshold relative to the largest eigenvalue magnitude.
pub const RESONANCE_TOL: f64 = 1e-10;

#[derive(Default)]
struct Workspace {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    dst: DstScratch,
}

thread_local! {
    static WORKSPACE: RefCell<Workspace> = RefCell::new(Workspace::default());
}

/// The 5-point operator on the interior nodes, diagonalized by a 2-D sine
/// transform. Immutable after assembly and shareable across threads.
pub struct HelmholtzOperator {
    grid: Grid2D,
    k: f64,
    geometry: BoundaryGeometry,
    dst: Dst1,
    // (lambda_p + lambda_q + k^2)^{-1}, with the inverse transform scale folded in.
    inv_eig: Vec<f64>,
    min_eig: f64,
    max_eig: f64,
}

impl std::fmt::Debug for HelmholtzOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzOperator")
            .field("n", &self.grid.n())
            .field("k", &self.k)
            .field("min_eig", &self.min_eig)
            .finish()
    }
}

/// Eigenvalue of the Dirichlet 5-point Laplacian for mode `(p, q)`, `1 <= p, q <= n-2`.
pub fn laplacian_eigenvalue(grid: &Grid2D, p: usize, q: usize) -> f64 {
    let h = grid.spacing();
    let s = |m: usize| (std::f64::consts::PI * m as f64 * h / 2.0).sin().powi(2);
    -4.0 / (h * h) * (s(p) + s(q))
}

impl HelmholtzOperator {
    pub fn assemble(grid: Grid2D, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::arg(format!("wavenumber must be positive, got {k}")));
        }
        let n_int = grid.n() - 2;
        let h = grid.spacing();
        let lam: Vec<f64> = (1..=n_int)
            .map(|p| -4.0 / (h * h) * (std::f64::consts::PI * p as f64 * h / 2.0).sin().powi(2))
            .collect();
        let k2 = k * k;
        let scale = (2.0 / (n_int + 1) as f64).powi(2);
        let mut inv_eig = Vec::with_capacity(n_int * n_int);
        let mut min_eig = f64::INFINITY;
        let mut max_eig = 0.0f64;
        for lp in &lam {
            for lq in &lam {
                let e = lp + lq + k2;
                min_eig = min_eig.min(e.abs());
                max_eig = max_eig.max(e.abs());
                inv_eig.push(scale / e);
            }
        }
        if min_eig < RESONANCE_TOL * max_eig {
            return Err(Error::ResonantWavenumber {
                k,
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self {
            grid,
            k,
            geometry: BoundaryGeometry::new(grid),
            dst: Dst1::new(n_int),
            inv_eig,
            min_eig,
            max_eig,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    #[inline]
    pub fn geometry(&self) -> &BoundaryGeometry {
        &self.geometry
    }

    /// Smallest eigenvalue magnitude of the interior operator.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eig
    }

    fn check_field(&self, f: &ScalarField2D) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n(),
                got: f.grid().n(),
            });
        }
        Ok(())
    }

    /// Solve `(Delta_h + k^2) u = rhs` in the interior with `u = g` on the boundary.
    pub fn solve_linear(&self, rhs: &ScalarField2D, g: &BoundaryTrace) -> Result<ScalarField2D> {
        self.check_field(rhs)?;
        self.geometry.check(g)?;
        let mut out = ScalarField2D::zeros(self.grid);
        self.solve_into(Some(rhs.values()), g, out.values_mut());
        Ok(out)
    }

    fn solve_into(&self, rhs: Option<&[Complex64]>, g: &BoundaryTrace, out: &mut [Complex64]) {
        let n = self.grid.n();
        let m = n - 2;
        let ih2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        for (node, v) in self.geometry.nodes().iter().zip(g.values()) {
            out[node.j * n + node.i] = *v;
        }
        WORKSPACE.with(|cell| {
            let ws = &mut *cell.borrow_mut();
            let zero = Complex64::new(0.0, 0.0);
            ws.a.clear();
            ws.a.resize(m * m, zero);
            ws.b.clear();
            ws.b.resize(m * m, zero);
            let a = &mut ws.a;
            for jj in 0..m {
                let j = jj + 1;
                for ii in 0..m {
                    let i = ii + 1;
                    let mut v = match rhs {
                        Some(r) => r[j * n + i],
                        None => zero,
                    };
                    if ii == 0 {
                        v -= out[j * n] * ih2;
                    }
                    if ii == m - 1 {
                        v -= out[j * n + n - 1] * ih2;
                    }
                    if jj == 0 {
                        v -= out[i] * ih2;
                    }
                    if jj == m - 1 {
                        v -= out[(n - 1) * n + i] * ih2;
                    }
                    a[jj * m + ii] = v;
                }
            }
            self.dst.rows(&mut ws.a, &mut ws.dst);
            transpose(&ws.a, &mut ws.b, m);
            self.dst.rows(&mut ws.b, &mut ws.dst);
            for (v, s) in ws.b.iter_mut().zip(&self.inv_eig) {
                *v *= *s;
            }
            self.dst.rows(&mut ws.b, &mut ws.dst);
            transpose(&ws.b, &mut ws.a, m);
            self.dst.rows(&mut ws.a, &mut ws.dst);
            for jj in 0..m {
                let row = &ws.a[jj * m..(jj + 1) * m];
                out[(jj + 1) * n + 1..(jj + 1) * n + 1 + m].copy_from_slice(row);
            }
        });
    }

    /// `(Delta_h + k^2) u` at interior nodes; boundary entries are zero.
    pub fn apply(&self, u: &ScalarField2D) -> Result<ScalarField2D> {
        self.check_field(u)?;
        let n = self.grid.n();
        let ih2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        let k2 = self.k * self.k;
        let v = u.values();
        let mut out = ScalarField2D::zeros(self.grid);
        let o = out.values_mut();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = j * n + i;
                o[c] = (v[c - 1] + v[c + 1] + v[c - n] + v[c + n] - 4.0 * v[c]) * ih2 + k2 * v[c];
            }
        }
        Ok(out)
    }

    /// Interior residual `||A u - rhs||` relative to the norm of the interior
    /// system's right-hand side, i.e. `rhs` with the boundary couplings moved
    /// across (absolute when that vanishes).
    pub fn linear_residual(&self, u: &ScalarField2D, rhs: &ScalarField2D) -> Result<f64> {
        let au = self.apply(u)?;
        let (num, _) = interior_diff_norms(&au, rhs);
        let mut lift = u.clone();
        let n = self.grid.n();
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                lift.set(i, j, Complex64::new(0.0, 0.0));
            }
        }
        let coupling = self.apply(&lift)?;
        let system_rhs = rhs.combine(
            Complex64::new(1.0, 0.0),
            &coupling,
            Complex64::new(-1.0, 0.0),
        )?;
        let (den, _) = interior_diff_norms(&system_rhs, &ScalarField2D::zeros(self.grid));
        Ok(if den > 0.0 { num / den } else { num })
    }

    /// Picard iteration for `(Delta_h + k^2) u = P(x, u)`, `u = f` on the boundary.
    pub fn solve_nonlinear(
        &self,
        coefficients: &[ScalarField2D],
        f: &BoundaryTrace,
        opts: &PicardOptions,
    ) -> Result<PicardOutcome> {
        opts.validate()?;
        for c in coefficients {
            self.check_field(c)?;
        }
        self.geometry.check(f)?;
        let mut background = ScalarField2D::zeros(self.grid);
        self.solve_into(None, f, background.values_mut());
        let mut linear_solves = 1;
        let mut u = background.clone();
        let mut next = ScalarField2D::zeros(self.grid);
        let mut updates = Vec::new();
        let mut rhs = ScalarField2D::zeros(self.grid);
        for iteration in 1..=opts.max_iters {
            polynomial_into(coefficients, &u, rhs.values_mut());
            self.solve_into(Some(rhs.values()), f, next.values_mut());
            linear_solves += 1;
            let (diff, norm) = diff_norms(next.values(), u.values());
            let update = if norm > 0.0 { diff / norm } else { diff };
            updates.push(update);
            std::mem::swap(&mut u, &mut next);
            if !update.is_finite() {
                break;
            }
            if update < opts.rel_tol {
                let residual = self.nonlinear_residual(coefficients, &u)?;
                return Ok(PicardOutcome {
                    solution: u,
                    background,
                    iterations: iteration,
                    updates,
                    residual,
                    linear_solves,
                });
            }
        }
        Err(Error::NonConvergence {
            iterations: updates.len(),
            last_update: updates.last().copied().unwrap_or(f64::NAN),
        })
    }

    /// `||Delta_h u + k^2 u - P(x,u)|| / ||u||` over interior nodes.
    pub fn nonlinear_residual(
        &self,
        coefficients: &[ScalarField2D],
        u: &ScalarField2D,
    ) -> Result<f64> {
        let au = self.apply(u)?;
        let p = evaluate_polynomial(coefficients, u)?;
        let (num, _) = interior_diff_norms(&au, &p);
        let unorm = u.l2_norm();
        Ok(if unorm > 0.0 { num / unorm } else { num })
    }
}

fn diff_norms(a: &[Complex64], b: &[Complex64]) -> (f64, f64) {
    let mut d = 0.0;
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        d += (x - y).norm_sqr();
        s += x.norm_sqr();
    }
    (d.sqrt(), s.sqrt())
}

fn interior_diff_norms(a: &ScalarField2D, b: &ScalarField2D) -> (f64, f64) {
    let n = a.grid().n();
    let mut d = 0.0;
    let mut s = 0.0;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let x = a.get(i, j);
            let y = b.get(i, j);
            d += (x - y).norm_sqr();
            s += y.norm_sqr();
        }
    }
    (d.sqrt(), s.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iters: 50,
        }
    }
}

impl PicardOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || self.max_iters < 1 {
            return Err(Error::arg(format!(
                "Picard options need rel_tol > 0 and max_iters >= 1, got {} and {}",
                self.rel_tol, self.max_iters
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub solution: ScalarField2D,
    /// The seed `u0`, i.e. the solution with all coefficients zero.
    pub background: ScalarField2D,
    pub iterations: usize,
    /// Relative update per iteration.
    pub updates: Vec<f64>,
    pub residual: f64,
    pub linear_solves: usize,
}

fn polynomial_into(coefficients: &[ScalarField2D], u: &ScalarField2D, out: &mut [Complex64]) {
    let zero = Complex64::new(0.0, 0.0);
    let Some((top, rest)) = coefficients.split_last() else {
        out.fill(zero);
        return;
    };
    for (idx, (o, &uv)) in out.iter_mut().zip(u.values()).enumerate() {
        let mut acc = top.values()[idx];
        for c in rest.iter().rev() {
            acc = c.values()[idx] + uv * acc;
        }
        *o = uv * acc;
    }
}

/// Pointwise `sum_l c_l(x) u(x)^l` for `c = [c_1, ..., c_m]`.
pub fn evaluate_polynomial(
    coefficients: &[ScalarField2D],
    u: &ScalarField2D,
) -> Result<ScalarField2D> {
    for c in coefficients {
        u.ensure_same_grid(c)?;
    }
    let mut out = ScalarField2D::zeros(*u.grid());
    polynomial_into(coefficients, u, out.values_mut());
    Ok(out)
}

/// `e^{i x . zeta}` at every node.
pub fn plane_wave_field(grid: &Grid2D, zeta: &WaveVector) -> ScalarField2D {
    let i = Complex64::new(0.0, 1.0);
    let coords = grid.coords();
    let ex: Vec<Complex64> = coords.iter().map(|&x| (i * zeta.x() * x).exp()).collect();
    let ey: Vec<Complex64> = coords.iter().map(|&y| (i * zeta.y() * y).exp()).collect();
    let mut values = Vec::with_capacity(grid.len());
    for vy in &ey {
        for vx in &ex {
            values.push(vx * vy);
        }
    }
    ScalarField2D::from_values(*grid, values).unwrap_or_else(|_| ScalarField2D::zeros(*grid))
}

/// Dirichlet trace of `e^{i x . zeta}`.
pub fn plane_wave_trace(geometry: &BoundaryGeometry, zeta: &WaveVector) -> BoundaryTrace {
    let i = Complex64::new(0.0, 1.0);
    geometry.trace_fn(|x, y| (i * (zeta.x() * x + zeta.y() * y)).exp())
}

/// Finite-difference rule for the outward normal derivative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NeumannStencil {
    /// `(3u_b - 4u_{b-1} + u_{b-2}) / (2h)`.
    #[default]
    OneSidedSecondOrder,
    /// `(u_b - u_{b-1}) / h`, the difference for which the discrete Green
    /// identity of the 5-point operator is exact.
    SummationByParts,
}

/// Outward normal derivative at each boundary node. Corners take the mean of
/// the two edge-normal derivatives.
pub fn neumann_trace(
    u: &ScalarField2D,
    geometry: &BoundaryGeometry,
    stencil: NeumannStencil,
) -> Result<BoundaryTrace> {
    if *u.grid() != *geometry.grid() {
        return Err(Error::DimensionMismatch {
            expected: geometry.grid().n(),
            got: u.grid().n(),
        });
    }
    let grid = geometry.grid();
    let n = grid.n();
    if n < 4 && stencil == NeumannStencil::OneSidedSecondOrder {
        return Err(Error::arg(format!(
            "one-sided Neumann stencil needs at least 4 points per side, got {n}"
        )));
    }
    let h = grid.spacing();
    let last = n - 1;
    let at = |i: usize, j: usize| u.get(i, j);
    let side_derivative = |i: usize, j: usize, side: Side| {
        // Inward neighbours along the normal.
        let (p1, p2) = match side {
            Side::Left => ((i + 1, j), (i + 2, j)),
            Side::Right => ((last - 1, j), (last.saturating_sub(2), j)),
            Side::Bottom => ((i, j + 1), (i, j + 2)),
            Side::Top => ((i, last - 1), (i, last.saturating_sub(2))),
        };
        let ub = at(i, j);
        match stencil {
            NeumannStencil::OneSidedSecondOrder => {
                (3.0 * ub - 4.0 * at(p1.0, p1.1) + at(p2.0, p2.1)) / (2.0 * h)
            }
            NeumannStencil::SummationByParts => (ub - at(p1.0, p1.1)) / h,
        }
    };
    let values = geometry
        .nodes()
        .iter()
        .map(|b| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut count = 0.0;
            for side in b.kind.sides() {
                acc += side_derivative(b.i, b.j, side);
                count += 1.0;
            }
            acc / count
        })
        .collect();
    Ok(BoundaryTrace::new(values))
}
