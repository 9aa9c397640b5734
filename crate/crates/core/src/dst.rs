//! Type-I discrete sine transform on complex rows, through an odd extension of
//! length `2(N+1)` fed to a complex FFT.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

/// Scratch buffers reused across transforms.
#[derive(Default)]
pub(crate) struct DstScratch {
    ext: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl Dst1 {
    pub(crate) fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self { n, fft }
    }

    /// In-place unnormalized DST-I of every contiguous length-`n` row:
    /// `X_k = sum_t x_t sin(pi (k+1)(t+1) / (n+1))`.
    pub(crate) fn rows(&self, data: &mut [Complex64], scratch: &mut DstScratch) {
        let n = self.n;
        let m = 2 * (n + 1);
        let rows = data.len() / n;
        let zero = Complex64::new(0.0, 0.0);
        scratch.ext.clear();
        scratch.ext.resize(rows * m, zero);
        for (row, ext) in data.chunks_exact(n).zip(scratch.ext.chunks_exact_mut(m)) {
            ext[1..=n].copy_from_slice(row);
            for t in 0..n {
                ext[n + 2 + t] = -row[n - 1 - t];
            }
        }
        let len = self.fft.get_inplace_scratch_len();
        if scratch.fft.len() < len {
            scratch.fft.resize(len, zero);
        }
        self.fft
            .process_with_scratch(&mut scratch.ext, &mut scratch.fft[..len]);
        let half_i = Complex64::new(0.0, 0.5);
        for (row, ext) in data.chunks_exact_mut(n).zip(scratch.ext.chunks_exact(m)) {
            for (k, v) in row.iter_mut().enumerate() {
                *v = ext[k + 1] * half_i;
            }
        }
    }
}

/// Square transpose of an `n x n` row-major block into `out`.
pub(crate) fn transpose(src: &[Complex64], out: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for jb in (0..n).step_by(B) {
        for ib in (0..n).step_by(B) {
            for j in jb..(jb + B).min(n) {
                for i in ib..(ib + B).min(n) {
                    out[i * n + j] = src[j * n + i];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let n = 7;
        let x: Vec<Complex64> = (0..2 * n)
            .map(|t| Complex64::new((t as f64 * 0.7).sin(), (t as f64).cos()))
            .collect();
        let mut y = x.clone();
        Dst1::new(n).rows(&mut y, &mut DstScratch::default());
        for r in 0..2 {
            for k in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for t in 0..n {
                    let arg = std::f64::consts::PI * ((k + 1) * (t + 1)) as f64 / (n + 1) as f64;
                    s += x[r * n + t] * arg.sin();
                }
                assert!((s - y[r * n + k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn applied_twice_scales_identity() {
        let n = 12;
        let x: Vec<Complex64> = (0..n).map(|t| Complex64::new(t as f64, -1.0)).collect();
        let mut y = x.clone();
        let d = Dst1::new(n);
        let mut s = DstScratch::default();
        d.rows(&mut y, &mut s);
        d.rows(&mut y, &mut s);
        let scale = (n + 1) as f64 / 2.0;
        for (a, b) in x.iter().zip(&y) {
            assert!((a * scale - b).norm() < 1e-11);
        }
    }

    #[test]
    fn transpose_roundtrip() {
        let n = 45;
        let x: Vec<Complex64> = (0..n * n).map(|t| Complex64::new(t as f64, 0.0)).collect();
        let mut y = vec![Complex64::new(0.0, 0.0); n * n];
        transpose(&x, &mut y, n);
        assert_eq!(y[3 * n + 5], x[5 * n + 3]);
        let mut z = y.clone();
        transpose(&y, &mut z, n);
        assert_eq!(x, z);
    }
}
