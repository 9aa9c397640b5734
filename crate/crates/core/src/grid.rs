//! Uniform grids over the unit square `[-0.5, 0.5]^2`, complex fields sampled on
//! them, compactly supported coefficient truths and trapezoidal volume quadrature.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform tensor grid with `n` points per side covering `[-0.5, 0.5]^2`.
///
/// Node `(i, j)` sits at `x = -0.5 + i h`, `y = -0.5 + j h`. Fields are stored
/// row-major with `j` as the row index, so the flat index is `j * n + i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    n: usize,
    h: f64,
}

impl Grid2D {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self {
            n,
            h: 1.0 / (n - 1) as f64,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of grid line `i`; endpoints are exactly `-0.5` and `0.5`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 / (self.n - 1) as f64 - 0.5
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.coord(i), self.coord(j)]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// 1-D trapezoid weights along one side (they sum to 1).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        w[0] = 0.5 * self.h;
        w[self.n - 1] = 0.5 * self.h;
        w
    }
}

/// Complex samples of a function on a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D {
    grid: Grid2D,
    values: Vec<Complex64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::arg("field values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n() {
            let y = grid.coord(j);
            for i in 0..grid.n() {
                values.push(f(grid.coord(i), y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let idx = self.grid.index(i, j);
        self.values[idx] = v;
    }

    pub fn ensure_same_grid(&self, other: &ScalarField2D) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n(),
                got: other.grid.n(),
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: Complex64, other: &ScalarField2D, b: Complex64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Discrete L2 norm over all nodes (no quadrature weights).
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Disk centred at the origin that must contain every coefficient's support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportSpec {
    pub radius: f64,
}

impl SupportSpec {
    pub const DEFAULT_RADIUS: f64 = 0.35;

    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < 0.5) {
            return Err(Error::arg(format!(
                "support radius must lie in (0, 0.5), got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x * x + y * y <= self.radius * self.radius
    }
}

impl Default for SupportSpec {
    fn default() -> Self {
        Self {
            radius: Self::DEFAULT_RADIUS,
        }
    }
}

/// Smooth compactly supported bump `A (1 - r^2/w^2)^3` for `r < w`, zero beyond.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub amplitude: f64,
    pub width: f64,
}

impl Bump {
    pub fn new(center: [f64; 2], amplitude: f64, width: f64) -> Self {
        Self {
            center,
            amplitude,
            width,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        let s = 1.0 - (dx * dx + dy * dy) / (self.width * self.width);
        if s <= 0.0 {
            0.0
        } else {
            self.amplitude * s * s * s
        }
    }
}

/// Sum of bumps, forced to zero outside the support disk.
///
/// A bump is rejected unless its whole closed support lies inside the disk, so
/// the resulting field is smooth and vanishes identically outside it.
pub fn synth_coefficient(
    grid: &Grid2D,
    bumps: &[Bump],
    support: &SupportSpec,
) -> Result<ScalarField2D> {
    for b in bumps {
        if !(b.width > 0.0) {
            return Err(Error::arg(format!(
                "bump width must be positive, got {}",
                b.width
            )));
        }
        let dist = b.center[0].hypot(b.center[1]);
        if dist + b.width > support.radius {
            return Err(Error::BumpOutsideSupport {
                x: b.center[0],
                y: b.center[1],
                width: b.width,
                radius: support.radius,
            });
        }
    }
    Ok(ScalarField2D::from_fn(*grid, |x, y| {
        if !support.contains(x, y) {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(bumps.iter().map(|b| b.eval(x, y)).sum(), 0.0)
    }))
}

/// 2-D trapezoidal rule over the unit square.
pub fn volume_quadrature(field: &ScalarField2D) -> Complex64 {
    let grid = field.grid();
    let w = grid.trapezoid_weights();
    let n = grid.n();
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let row = &field.values()[j * n..(j + 1) * n];
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, wi) in row.iter().zip(&w) {
            acc += v * wi;
        }
        total += acc * w[j];
    }
    total
}
