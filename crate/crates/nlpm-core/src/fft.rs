//! Radix-2 complex FFT and a cached Toeplitz product built on it.
//!
//! `rustfft` needs `std`, so the core carries its own small power-of-two
//! transform. Reduction order is fixed, which keeps results bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;
use core::f64::consts::PI;
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct FftPlan {
    n: usize,
    twiddles: Vec<Complex64>,
    rev: Vec<usize>,
}

impl FftPlan {
    /// Plan for length `n`, which must be a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft length must be a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(a.cos(), a.sin())
            })
            .collect();
        Self { n, twiddles, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddles[k * step];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * w;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
        if inverse {
            let s = 1.0 / n as f64;
            for v in data.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }
}

/// Angular wavenumber of FFT bin `k` for a period of `n` samples spaced `h`.
pub fn wavenumber(k: usize, n: usize, h: f64) -> f64 {
    let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * kk / (n as f64 * h)
}

/// Product with a Toeplitz matrix: `y_i = sum_o c[o] u_{i+o}` for offsets
/// `o` in `-(n-1)..=n-1`, evaluated by zero-padded FFT.
#[derive(Debug, Clone)]
pub struct Toeplitz {
    n: usize,
    plan: FftPlan,
    spectrum: Vec<Complex64>,
}

impl Toeplitz {
    /// `coef[o + n - 1]` holds the coefficient for offset `o`.
    pub fn new(n: usize, coef: &[f64]) -> Self {
        assert_eq!(coef.len(), 2 * n - 1);
        let size = (2 * n).next_power_of_two();
        let plan = FftPlan::new(size);
        // y_i = sum_j k[i-j] u_j with k[d] = c[-d]
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        for (idx, &c) in coef.iter().enumerate() {
            let o = idx as isize - (n as isize - 1);
            let d = (-o).rem_euclid(size as isize) as usize;
            spectrum[d] = Complex64::new(c, 0.0);
        }
        plan.forward(&mut spectrum);
        Self { n, plan, spectrum }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.plan.len()];
        for (b, &v) in buf.iter_mut().zip(u) {
            b.re = v;
        }
        self.plan.forward(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.plan.inverse(&mut buf);
        buf[..self.n].iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_parseval() {
        let plan = FftPlan::new(64);
        let orig: Vec<Complex64> = (0..64).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i * i % 7) as f64)).collect();
        let mut d = orig.clone();
        plan.forward(&mut d);
        let e1: f64 = orig.iter().map(|c| c.norm_sqr()).sum();
        let e2: f64 = d.iter().map(|c| c.norm_sqr()).sum::<f64>() / 64.0;
        assert!((e1 - e2).abs() < 1e-10 * e1);
        plan.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let plan = FftPlan::new(32);
        let mut d: Vec<Complex64> = (0..32).map(|i| Complex64::from_polar(1.0, 2.0 * PI * 3.0 * i as f64 / 32.0)).collect();
        plan.forward(&mut d);
        for (k, c) in d.iter().enumerate() {
            let want = if k == 3 { 32.0 } else { 0.0 };
            assert!((c.norm() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn toeplitz_matches_direct_sum() {
        let n = 13;
        let coef: Vec<f64> = (0..2 * n - 1).map(|k| ((k * 31 % 17) as f64 - 8.0) / 3.0).collect();
        let u: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let y = Toeplitz::new(n, &coef).apply(&u);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += coef[j + n - 1 - i] * u[j];
            }
            assert!((y[i] - s).abs() < 1e-12);
        }
    }
}
