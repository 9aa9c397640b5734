//! Square-perimeter measurement boundary, traces on it and the bilinear
//! boundary pairing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

impl Side {
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, -1.0],
            Side::Right => [1.0, 0.0],
            Side::Top => [0.0, 1.0],
            Side::Left => [-1.0, 0.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Edge(Side),
    Corner(Side, Side),
}

impl NodeKind {
    pub fn sides(self) -> impl Iterator<Item = Side> {
        let (a, b) = match self {
            NodeKind::Edge(s) => (s, None),
            NodeKind::Corner(s, t) => (s, Some(t)),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryNode {
    pub i: usize,
    pub j: usize,
    pub normal: [f64; 2],
    pub weight: f64,
    pub kind: NodeKind,
}

/// Perimeter nodes traversed counterclockwise from `(-0.5, -0.5)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGeometry {
    grid: Grid2D,
    nodes: Vec<BoundaryNode>,
}

impl BoundaryGeometry {
    pub fn new(grid: Grid2D) -> Self {
        let n = grid.n();
        let h = grid.spacing();
        let last = n - 1;
        let mut nodes = Vec::with_capacity(4 * last);
        let diag = std::f64::consts::FRAC_1_SQRT_2;
        let mut push = |i: usize, j: usize, kind: NodeKind| {
            let normal = match kind {
                NodeKind::Edge(s) => s.normal(),
                NodeKind::Corner(a, b) => {
                    let (na, nb) = (a.normal(), b.normal());
                    [(na[0] + nb[0]) * diag, (na[1] + nb[1]) * diag]
                }
            };
            nodes.push(BoundaryNode {
                i,
                j,
                normal,
                weight: h,
                kind,
            });
        };
        push(0, 0, NodeKind::Corner(Side::Left, Side::Bottom));
        for i in 1..last {
            push(i, 0, NodeKind::Edge(Side::Bottom));
        }
        push(last, 0, NodeKind::Corner(Side::Bottom, Side::Right));
        for j in 1..last {
            push(last, j, NodeKind::Edge(Side::Right));
        }
        push(last, last, NodeKind::Corner(Side::Right, Side::Top));
        for i in (1..last).rev() {
            push(i, last, NodeKind::Edge(Side::Top));
        }
        push(0, last, NodeKind::Corner(Side::Top, Side::Left));
        for j in (1..last).rev() {
            push(0, j, NodeKind::Edge(Side::Left));
        }
        Self { grid, nodes }
    }

    #[inline]
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Dirichlet trace of a field.
    pub fn trace_of(&self, field: &ScalarField2D) -> Result<BoundaryTrace> {
        if *field.grid() != self.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n(),
                got: field.grid().n(),
            });
        }
        Ok(BoundaryTrace::new(
            self.nodes.iter().map(|b| field.get(b.i, b.j)).collect(),
        ))
    }

    /// Trace of `x -> f(x, y)` sampled at the boundary nodes.
    pub fn trace_fn(&self, mut f: impl FnMut(f64, f64) -> Complex64) -> BoundaryTrace {
        BoundaryTrace::new(
            self.nodes
                .iter()
                .map(|b| {
                    let [x, y] = self.grid.point(b.i, b.j);
                    f(x, y)
                })
                .collect(),
        )
    }

    pub fn check(&self, trace: &BoundaryTrace) -> Result<()> {
        if trace.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: trace.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    values: Vec<Complex64>,
}

impl BoundaryTrace {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add_assign(&mut self, other: &BoundaryTrace) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// `sum_b a_b * b_b * weight_b`, without conjugation.
pub fn boundary_integral(
    a: &BoundaryTrace,
    b: &BoundaryTrace,
    geometry: &BoundaryGeometry,
) -> Result<Complex64> {
    geometry.check(a)?;
    geometry.check(b)?;
    let mut total = Complex64::new(0.0, 0.0);
    for ((x, y), node) in a.values().iter().zip(b.values()).zip(geometry.nodes()) {
        total += x * y * node.weight;
    }
    Ok(total)
}

/// Pointwise `full - background`.
pub fn linearized_neumann(
    full: &BoundaryTrace,
    background: &BoundaryTrace,
) -> Result<BoundaryTrace> {
    if full.len() != background.len() {
        return Err(Error::DimensionMismatch {
            expected: full.len(),
            got: background.len(),
        });
    }
    Ok(BoundaryTrace::new(
        full.values()
            .iter()
            .zip(background.values())
            .map(|(a, b)| a - b)
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_a_closed_loop() {
        for n in [3, 4, 11, 101] {
            let g = Grid2D::new(n).unwrap();
            let geo = BoundaryGeometry::new(g);
            assert_eq!(geo.len(), 4 * (n - 1));
            assert!((geo.total_weight() - 4.0).abs() < 1e-12);
            let nodes = geo.nodes();
            for w in 0..nodes.len() {
                let a = nodes[w];
                let b = nodes[(w + 1) % nodes.len()];
                let step = a.i.abs_diff(b.i) + a.j.abs_diff(b.j);
                assert_eq!(step, 1, "nodes {w} and {} are not adjacent", w + 1);
                let len = a.normal[0].hypot(a.normal[1]);
                assert!((len - 1.0).abs() < 1e-15);
            }
            let mut seen: Vec<_> = nodes.iter().map(|b| (b.i, b.j)).collect();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), nodes.len());
        }
    }

    #[test]
    fn loop_is_counterclockwise() {
        let g = Grid2D::new(9).unwrap();
        let geo = BoundaryGeometry::new(g);
        // Shoelace area is positive for counterclockwise traversal.
        let pts: Vec<[f64; 2]> = geo.nodes().iter().map(|b| g.point(b.i, b.j)).collect();
        let mut area = 0.0;
        for w in 0..pts.len() {
            let p = pts[w];
            let q = pts[(w + 1) % pts.len()];
            area += p[0] * q[1] - q[0] * p[1];
        }
        assert!((area / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_examples() {
        let g = Grid2D::new(21).unwrap();
        let geo = BoundaryGeometry::new(g);
        let one = BoundaryTrace::new(vec![Complex64::new(1.0, 0.0); geo.len()]);
        let zero = BoundaryTrace::zeros(geo.len());
        assert!((boundary_integral(&one, &one, &geo).unwrap().re - 4.0).abs() < 1e-12);
        assert_eq!(
            boundary_integral(&one, &zero, &geo).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let short = BoundaryTrace::zeros(3);
        assert!(boundary_integral(&one, &short, &geo).is_err());
        assert!(linearized_neumann(&one, &short).is_err());
    }

    #[test]
    fn linearized_neumann_of_equal_traces_is_zero() {
        let t = BoundaryTrace::new(vec![Complex64::new(0.3, -2.0); 8]);
        let d = linearized_neumann(&t, &t).unwrap();
        assert!(d.values().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    // A trace that is smooth around the loop, except at the corners, still
    // converges at second order under the node-weight rule.
    #[test]
    fn pairing_converges_under_refinement() {
        let exact = {
            // Integral of cos(x) * e^{i y} around the square, computed by edges.
            // Bottom/top: integral of cos(x) dx over [-1/2, 1/2] times e^{-i/2} or e^{i/2}.
            let cx = 2.0 * (0.5f64).sin();
            let bottom = Complex64::new(0.0, -0.5).exp() * cx;
            let top = Complex64::new(0.0, 0.5).exp() * cx;
            // Left/right: cos(1/2) * integral of e^{i y} dy.
            let ey = Complex64::new(2.0 * (0.5f64).sin(), 0.0);
            bottom + top + 2.0 * (0.5f64).cos() * ey
        };
        let err = |n: usize| {
            let geo = BoundaryGeometry::new(Grid2D::new(n).unwrap());
            let a = geo.trace_fn(|x, _| Complex64::new(x.cos(), 0.0));
            let b = geo.trace_fn(|_, y| Complex64::new(0.0, y).exp());
            (boundary_integral(&a, &b, &geo).unwrap() - exact).norm()
        };
        let (e1, e2, e3) = (err(21), err(41), err(81));
        assert!((3.4..4.6).contains(&(e1 / e2)), "ratio {}", e1 / e2);
        assert!((3.4..4.6).contains(&(e2 / e3)), "ratio {}", e2 / e3);
    }
}
