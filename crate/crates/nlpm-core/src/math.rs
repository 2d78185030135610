//! Special functions and small numerical utilities.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;
use core::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles return infinity).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::INFINITY;
        }
        PI / (s * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

// B_{2j} / (2j)!
const BERNOULLI_OVER_FACT: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
    1.0 / 74_724_249_600.0,
    -3617.0 / 10_670_622_842_880_000.0,
];

/// Hurwitz zeta `sum_{k>=0} (q+k)^{-s}` for `s > 1`, `q > 0`.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    const N: usize = 12;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-s);
    }
    let a = q + N as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // Euler-Maclaurin remainder with rising factorials of s
    let mut rising = s;
    let mut pw = a.powf(-s - 1.0);
    for (j, b) in BERNOULLI_OVER_FACT.iter().enumerate() {
        sum += b * rising * pw;
        let k = 2 * j as i32 + 1;
        rising *= (s + k as f64) * (s + k as f64 + 1.0);
        pw /= a * a;
    }
    sum
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Fixed Gauss-Legendre rule mapped to an interval.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * x);
        }
        s * r
    }
}

/// Least-squares line `y = slope*x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln y` against `ln x` over the pairs with both entries positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (a, b) in x.iter().zip(y) {
        if *a > 0.0 && *b > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
        }
    }
    linear_fit(&lx, &ly).map(|(s, _)| s)
}

/// Smooth step used for cut-offs: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = f(x);
    let b = f(1.0 - x);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Safeguarded Newton iteration for an increasing function on `[lo, hi]`
/// with `f(lo) <= 0 <= f(hi)`.
pub fn bracketed_root(
    mut lo: f64,
    mut hi: f64,
    guess: f64,
    mut f: impl FnMut(f64) -> (f64, f64),
) -> f64 {
    let mut x = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = if dfx.is_finite() && dfx > 0.0 { x - fx / dfx } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= f64::EPSILON * hi.abs() {
            return next;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_spot_values() {
        // reference digits from 50-digit arithmetic
        assert_relative_eq!(gamma(0.5), 1.772_453_850_905_516, max_relative = 1e-14);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(-0.5), -3.544_907_701_811_032, max_relative = 1e-14);
        assert_relative_eq!(gamma(0.1), 9.513_507_698_668_732, max_relative = 1e-13);
        assert_relative_eq!(gamma(-0.25), -4.901_666_809_860_711, max_relative = 1e-13);
    }

    #[test]
    fn hurwitz_matches_riemann_zeta() {
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0), PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(hurwitz_zeta(4.0, 1.0), PI.powi(4) / 90.0, max_relative = 1e-14);
        // zeta(1.5, 0.5) = (2^1.5 - 1) zeta(1.5)
        assert_relative_eq!(hurwitz_zeta(1.5, 0.5), 1.828_427_124_746_19 * 2.612_375_348_685_488, max_relative = 1e-13);
        // tiny q is dominated by the first term
        let q = 0.1;
        assert_relative_eq!(hurwitz_zeta(2.5, q) - q.powf(-2.5), hurwitz_zeta(2.5, 1.0 + q), max_relative = 1e-12);
    }

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let g = GaussRule::new(8);
        let v = g.integrate(0.0, 2.0, |x| x.powi(15) + 3.0 * x * x);
        assert_relative_eq!(v, 2f64.powi(16) / 16.0 + 8.0, max_relative = 1e-14);
    }

    #[test]
    fn fit_recovers_power() {
        let x: Vec<f64> = (1..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v.powf(0.667)).collect();
        assert_relative_eq!(loglog_slope(&x, &y).unwrap(), 0.667, max_relative = 1e-12);
    }

    #[test]
    fn smooth_step_is_a_partition_of_unity() {
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_relative_eq!(smooth_step(x) + smooth_step(1.0 - x), 1.0, max_relative = 1e-15);
        }
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.1), 1.0);
    }

    #[test]
    fn root_of_mobility_equation() {
        // y + a y^{0.5} = b
        let (a, b) = (3.0, 2.0);
        let y = bracketed_root(0.0, b, b, |y| (y + a * y.sqrt() - b, 1.0 + 0.5 * a / y.sqrt()));
        assert_relative_eq!(y + a * y.sqrt(), b, max_relative = 1e-14);
    }
}
