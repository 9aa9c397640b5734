//! Auxiliary complex wave vectors whose bilinear self-product is `k^2` and whose
//! sum is a prescribed frequency.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Two complex components. `dot` is bilinear, not Hermitian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveVector(pub [Complex64; 2]);

impl WaveVector {
    pub fn real(x: f64, y: f64) -> Self {
        Self([Complex64::new(x, 0.0), Complex64::new(y, 0.0)])
    }

    #[inline]
    pub fn x(&self) -> Complex64 {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> Complex64 {
        self.0[1]
    }

    #[inline]
    pub fn dot(&self, other: &WaveVector) -> Complex64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    #[inline]
    pub fn self_dot(&self) -> Complex64 {
        self.dot(self)
    }

    pub fn re(&self) -> [f64; 2] {
        [self.0[0].re, self.0[1].re]
    }

    pub fn max_abs_im(&self) -> f64 {
        self.0[0].im.abs().max(self.0[1].im.abs())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self([self.0[0] * s, self.0[1] * s])
    }
}

impl std::ops::Add for WaveVector {
    type Output = WaveVector;
    fn add(self, o: WaveVector) -> WaveVector {
        WaveVector([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveVectorSet {
    pub ell: usize,
    pub xi: [f64; 2],
    pub k: f64,
    pub zeta0: WaveVector,
    pub zetas: Vec<WaveVector>,
    pub is_real: bool,
}

impl WaveVectorSet {
    /// Real parts of the `zeta_{l,j}`, used to form shifted frequencies.
    pub fn real_shifts(&self) -> Vec<[f64; 2]> {
        self.zetas.iter().map(WaveVector::re).collect()
    }

    /// Largest |Im| over all members.
    pub fn max_abs_im(&self) -> f64 {
        self.zetas
            .iter()
            .map(WaveVector::max_abs_im)
            .fold(self.zeta0.max_abs_im(), f64::max)
    }

    /// Largest constraint residual, `max(|zeta.zeta - k^2| / k^2, |sum - xi| / k)`.
    pub fn constraint_residual(&self) -> f64 {
        let k2 = self.k * self.k;
        let mut worst = (self.zeta0.self_dot() - k2).norm() / k2;
        let mut sum = self.zeta0;
        for z in &self.zetas {
            worst = worst.max((z.self_dot() - k2).norm() / k2);
            sum = sum + *z;
        }
        let dx = sum.x() - self.xi[0];
        let dy = sum.y() - self.xi[1];
        worst.max((dx.norm_sqr() + dy.norm_sqr()).sqrt() / self.k)
    }
}

fn validate(xi: [f64; 2], k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::arg(format!("wavenumber must be positive, got {k}")));
    }
    if !xi[0].is_finite() || !xi[1].is_finite() {
        return Err(Error::arg("frequency must be finite"));
    }
    let r = xi[0].hypot(xi[1]);
    if r == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    Ok(r)
}

/// `(zeta^+, zeta^-)` for the given `l`.
pub fn build_zeta_pm(ell: usize, xi: [f64; 2], k: f64) -> Result<(WaveVector, WaveVector)> {
    if ell < 1 {
        return Err(Error::arg("ell must be at least 1"));
    }
    let r = validate(xi, k)?;
    let e1 = [xi[0] / r, xi[1] / r];
    let e2 = [-e1[1], e1[0]];
    let a = if ell % 2 == 1 {
        r / (ell + 1) as f64
    } else {
        (r - k) / ell as f64
    };
    let mut radicand = k * k - a * a;
    // Band-edge frequencies can land a rounding error below zero.
    if radicand < 0.0 && radicand > -1e-12 * k * k {
        radicand = 0.0;
    }
    let b = if radicand >= 0.0 {
        Complex64::new(radicand.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-radicand).sqrt())
    };
    let comp = |sign: f64| {
        WaveVector([
            Complex64::new(a * e1[0], 0.0) + sign * b * e2[0],
            Complex64::new(a * e1[1], 0.0) + sign * b * e2[1],
        ])
    };
    Ok((comp(1.0), comp(-1.0)))
}

pub fn build_wavevector_set(ell: usize, xi: [f64; 2], k: f64) -> Result<WaveVectorSet> {
    let (plus, minus) = build_zeta_pm(ell, xi, k)?;
    let r = xi[0].hypot(xi[1]);
    let zeta0 = if ell % 2 == 1 {
        minus
    } else {
        WaveVector::real(k * xi[0] / r, k * xi[1] / r)
    };
    let zetas: Vec<WaveVector> = (0..ell)
        .map(|j| if j % 2 == 0 { plus } else { minus })
        .collect();
    let is_real = plus.max_abs_im() == 0.0 && minus.max_abs_im() == 0.0;
    Ok(WaveVectorSet {
        ell,
        xi,
        k,
        zeta0,
        zetas,
        is_real,
    })
}

/// True when `|xi| <= (l + 1) k`, up to a relative slack of `1e-9`.
pub fn in_real_band(ell: usize, xi: [f64; 2], k: f64) -> bool {
    let band = (ell + 1) as f64 * k;
    xi[0].hypot(xi[1]) <= band * (1.0 + 1e-9)
}

/// Rescale `zeta` by a complex factor so that the 5-point symbol
/// `(4/h^2)(sin^2(zeta_x h/2) + sin^2(zeta_y h/2))` equals `k^2`.
///
/// The resulting grid plane wave is an exact solution of the discrete
/// homogeneous equation.
pub fn dispersion_matched(zeta: &WaveVector, h: f64, k: f64) -> WaveVector {
    let k2 = k * k;
    let symbol = |s: Complex64| {
        let ax = s * zeta.x() * (h / 2.0);
        let ay = s * zeta.y() * (h / 2.0);
        let f = (ax.sin().powu(2) + ay.sin().powu(2)) * (4.0 / (h * h)) - k2;
        let df =
            ((s * zeta.x() * h).sin() * zeta.x() + (s * zeta.y() * h).sin() * zeta.y()) * (2.0 / h);
        (f, df)
    };
    let mut s = Complex64::new(1.0, 0.0);
    for _ in 0..60 {
        let (f, df) = symbol(s);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        s -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    zeta.scale(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: f64) -> bool {
        (a - Complex64::new(b, 0.0)).norm() < 1e-12
    }

    #[test]
    fn band_edge_odd() {
        let k = 3.0;
        let (p, m) = build_zeta_pm(1, [2.0 * k, 0.0], k).unwrap();
        assert!(close(p.x(), k) && close(p.y(), 0.0));
        assert!(close(m.x(), k) && close(m.y(), 0.0));
        let set = build_wavevector_set(1, [2.0 * k, 0.0], k).unwrap();
        assert!(set.is_real);
        assert!(set.constraint_residual() < 1e-14);
    }

    #[test]
    fn even_at_k() {
        let k = 5.0;
        let (p, m) = build_zeta_pm(2, [k, 0.0], k).unwrap();
        assert!(close(p.x(), 0.0) && close(p.y(), k));
        assert!(close(m.x(), 0.0) && close(m.y(), -k));
    }

    #[test]
    fn odd_three() {
        let s3 = 3f64.sqrt();
        let (p, m) = build_zeta_pm(3, [4.0, 0.0], 2.0).unwrap();
        assert!(close(p.x(), 1.0) && close(p.y(), s3));
        assert!(close(m.x(), 1.0) && close(m.y(), -s3));
        let set = build_wavevector_set(3, [4.0, 0.0], 2.0).unwrap();
        assert_eq!(set.zetas, vec![p, m, p]);
        assert_eq!(set.zeta0, m);
        let sum = set.zetas.iter().fold(set.zeta0, |a, b| a + *b);
        assert!(close(sum.x(), 4.0) && close(sum.y(), 0.0));
    }

    #[test]
    fn zero_frequency_rejected() {
        assert!(matches!(
            build_zeta_pm(1, [0.0, 0.0], 1.0),
            Err(Error::ZeroFrequency)
        ));
        assert!(matches!(
            build_wavevector_set(2, [0.0, 0.0], 1.0),
            Err(Error::ZeroFrequency)
        ));
    }

    #[test]
    fn evanescent_outside_band() {
        let set = build_wavevector_set(1, [25.0, 0.0], 10.0).unwrap();
        assert!(!set.is_real);
        assert!(set.constraint_residual() < 1e-12);
        let set = build_wavevector_set(2, [0.0, 35.0], 10.0).unwrap();
        assert!(!set.is_real);
        assert!(set.constraint_residual() < 1e-12);
    }

    #[test]
    fn dispersion_matching_hits_discrete_symbol() {
        let h = 0.01;
        let k = 10.0;
        for xi in [[15.0, 3.0], [35.0, -20.0]] {
            let set = build_wavevector_set(2, xi, k).unwrap();
            for z in std::iter::once(&set.zeta0).chain(&set.zetas) {
                let d = dispersion_matched(z, h, k);
                let sym = ((d.x() * h / 2.0).sin().powu(2) + (d.y() * h / 2.0).sin().powu(2))
                    * (4.0 / (h * h));
                assert!((sym - k * k).norm() < 1e-9 * k * k);
                // Correction is small: O(k^2 h^2).
                assert!((d.x() - z.x()).norm() + (d.y() - z.y()).norm() < 0.05 * k);
            }
        }
    }
}
