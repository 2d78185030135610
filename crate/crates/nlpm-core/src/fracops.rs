//! Riesz potentials, the fractional Laplacian and the gradient of the Riesz
//! potential on a uniform 1D grid.
//!
//! Each operator has a quadrature form ([`OperatorKernel`]) and an independent
//! spectral form ([`SpectralOperator`]) so the two can be checked against one
//! another.
//!
//! Conventions: the fractional Laplacian has symbol `|xi|^{2 alpha}`, the
//! Riesz potential `K_s` has symbol `|xi|^{-2s}` and kernel
//! `kappa_s |x|^{2s-1}`.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{check_param, Result};
use crate::fft::{wavenumber, FftPlan, Toeplitz};
use crate::grid::{Field, Grid};
use crate::math::{gamma, hurwitz_zeta, GaussRule};

/// Offsets handled by direct summation; the rest goes through the FFT.
const NEAR_BAND: usize = 32;
/// Terms summed exactly in the symbol-matching correction.
const MOMENT_TERMS: usize = 200_000;

/// Normalizing constant of the fractional Laplacian in 1D:
/// `(-Delta)^a u(x) = sigma PV int (u(x)-u(y)) / |x-y|^{1+2a} dy`.
pub fn frac_laplacian_constant(alpha: f64) -> f64 {
    4f64.powf(alpha) * gamma(0.5 + alpha) / (PI.sqrt() * gamma(-alpha).abs())
}

/// `kappa_s` with `K_s(x) = kappa_s |x|^{2s-1}` in 1D, `0 < s < 1/2`.
pub fn riesz_constant(s: f64) -> f64 {
    gamma(0.5 - s) / (4f64.powf(s) * PI.sqrt() * gamma(s))
}

/// Pointwise Riesz kernel `kappa_s |x|^{2s-1}`.
pub fn riesz_kernel_value(s: f64, x: f64) -> f64 {
    riesz_constant(s) * x.abs().powf(2.0 * s - 1.0)
}

/// `g_s = (2s-1) kappa_s`, so that `d/dx K_s = g_s sign(x) |x|^{2s-2}`.
/// Finite for every `s` in (0,1); equals `-1/pi` at `s = 1/2`.
pub fn grad_riesz_constant(s: f64) -> f64 {
    -2.0 * gamma(1.5 - s) / (4f64.powf(s) * PI.sqrt() * gamma(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `K_s`, order `s` in (0, 1/2).
    Riesz,
    /// `H_s = K_{s/2}`, order stored as `s/2`.
    HalfRiesz,
    /// `(-Delta)^alpha`.
    FracLaplacian,
    /// `d/dx K_s`.
    GradRiesz,
}

/// How the field is continued outside the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// `u = 0` outside.
    Zero,
    /// `u` equals its edge value outside. For the integrable kernels the
    /// continuation stops at the kernel truncation radius.
    Edge,
    /// `u(y) = u_edge ((|y|+shift)/(|x_edge|+shift))^{-exponent}` outside,
    /// where `x_edge` is the outermost cell center.
    /// Only the fractional Laplacian uses it; other kinds treat it as zero.
    Power { exponent: f64, shift: f64 },
}

impl TailModel {
    /// Power tail with the exponent fitted on the outermost cells.
    pub fn fit_power(u: &Field, shift: f64) -> Option<TailModel> {
        let n = u.len();
        let k = 8.min(n / 4);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in (0..k).chain(n - k..n) {
            let v = u.values[i];
            if v > 0.0 {
                xs.push((u.grid.x(i).abs() + shift).ln());
                ys.push(v.ln());
            }
        }
        crate::math::linear_fit(&xs, &ys).map(|(slope, _)| TailModel::Power { exponent: -slope, shift })
    }
}

/// Precomputed quadrature weights for one operator on one grid.
#[derive(Debug, Clone)]
pub struct OperatorKernel {
    pub kind: KernelKind,
    pub grid: Grid,
    /// Order of the underlying power kernel (`s`, `s/2` or `alpha`).
    pub order: f64,
    pub eps: f64,
    pub tail: TailModel,
    /// `coef[o + n - 1]` multiplies `u_{i+o}`. For the fractional Laplacian
    /// it multiplies `u_i - u_{i+o}` and the center entry is zero.
    coef: Vec<f64>,
    /// Fractional Laplacian only: weight of all offsets `>= k`, `k >= 1`.
    far_sums: Vec<f64>,
    /// Fractional Laplacian only: `w_j = lap_scale (..) + [j == 1] lap_center`.
    lap_scale: f64,
    lap_center: f64,
    /// Row sums of the far in-box coefficients (fractional Laplacian).
    far_row: Vec<f64>,
    /// Cumulative sums of `coef` for the edge continuation.
    prefix: Vec<f64>,
    far: Option<Toeplitz>,
}

impl OperatorKernel {
    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Weight for offset `o`, `|o| < n`.
    pub fn weight(&self, o: isize) -> f64 {
        self.coef[(o + self.n() as isize - 1) as usize]
    }

    /// `(offset, weight)` rows for dumps.
    pub fn weights_table(&self) -> Vec<(isize, f64)> {
        let n = self.n() as isize;
        (-(n - 1)..n).map(|o| (o, self.weight(o))).collect()
    }

    pub fn raw_weights(&self) -> &[f64] {
        &self.coef
    }

    pub fn with_tail(mut self, tail: TailModel) -> Self {
        self.tail = tail;
        self
    }

    /// Total weight of the fractional Laplacian row for cell `i`, i.e. the
    /// coefficient of `u_i` under zero continuation.
    pub fn diagonal(&self, i: usize) -> f64 {
        assert_eq!(self.kind, KernelKind::FracLaplacian);
        let n = self.n();
        let mut s = self.far_sums[i + 1] + self.far_sums[n - i];
        for j in 0..n {
            if j != i {
                s += self.coef[j + n - 1 - i];
            }
        }
        s
    }

    /// Largest row sum; an upper bound for the spectrum of the Laplacian.
    pub fn max_diagonal(&self) -> f64 {
        // rows are largest in the middle of the box
        let n = self.n();
        self.diagonal(n / 2).max(self.diagonal(0)).max(self.diagonal(n - 1))
    }

    fn finish(mut self) -> Self {
        let n = self.n();
        let mut prefix = vec![0.0; 2 * n];
        for (k, c) in self.coef.iter().enumerate() {
            prefix[k + 1] = prefix[k] + c;
        }
        self.prefix = prefix;
        if n > 2 * NEAR_BAND + 1 {
            let mut far = self.coef.clone();
            for o in 0..=NEAR_BAND {
                far[n - 1 + o] = 0.0;
                far[n - 1 - o] = 0.0;
            }
            if self.kind == KernelKind::FracLaplacian {
                let mut row = vec![0.0; n];
                let mut pf = vec![0.0; 2 * n];
                for (k, c) in far.iter().enumerate() {
                    pf[k + 1] = pf[k] + c;
                }
                for (i, r) in row.iter_mut().enumerate() {
                    // offsets -i ..= n-1-i
                    *r = pf[2 * n - 1 - i] - pf[n - 1 - i];
                }
                self.far_row = row;
                for v in far.iter_mut() {
                    *v = -*v;
                }
            }
            self.far = Some(Toeplitz::new(n, &far));
        }
        self
    }

    /// Sum of `coef` over offsets `lo..=hi`.
    fn coef_sum(&self, lo: isize, hi: isize) -> f64 {
        if hi < lo {
            return 0.0;
        }
        let n = self.n() as isize;
        self.prefix[(hi + n) as usize] - self.prefix[(lo + n - 1) as usize]
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        u.check_grid(&self.grid)?;
        let values = match self.kind {
            KernelKind::FracLaplacian => self.apply_laplacian(&u.values),
            _ => self.apply_convolution(&u.values),
        };
        Ok(Field { grid: self.grid, values })
    }

    fn apply_convolution(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let ni = n as isize;
        let band = if self.far.is_some() { NEAR_BAND as isize } else { ni - 1 };
        let mut out = match &self.far {
            Some(t) => t.apply(u),
            None => vec![0.0; n],
        };
        for (i, y) in out.iter_mut().enumerate() {
            let ii = i as isize;
            let lo = (-band).max(-ii);
            let hi = band.min(ni - 1 - ii);
            let mut acc = 0.0;
            for o in lo..=hi {
                acc += self.coef[(o + ni - 1) as usize] * u[(ii + o) as usize];
            }
            *y += acc;
            if let TailModel::Edge = self.tail {
                *y += u[0] * self.coef_sum(-(ni - 1), -ii - 1) + u[n - 1] * self.coef_sum(ni - ii, ni - 1);
            }
        }
        out
    }

    fn apply_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let ni = n as isize;
        let band = if self.far.is_some() { NEAR_BAND as isize } else { ni - 1 };
        let mut out = match &self.far {
            Some(t) => {
                let mut v = t.apply(u);
                for (i, y) in v.iter_mut().enumerate() {
                    *y += self.far_row[i] * u[i];
                }
                v
            }
            None => vec![0.0; n],
        };
        let tail_integrals = match self.tail {
            TailModel::Power { exponent, shift } => Some(self.power_tail_integrals(u, exponent, shift)),
            _ => None,
        };
        for (i, y) in out.iter_mut().enumerate() {
            let ii = i as isize;
            let ui = u[i];
            let lo = (-band).max(-ii);
            let hi = band.min(ni - 1 - ii);
            let mut acc = 0.0;
            for o in lo..=hi {
                if o != 0 {
                    acc += self.coef[(o + ni - 1) as usize] * (ui - u[(ii + o) as usize]);
                }
            }
            let wl = self.far_sums[i + 1];
            let wr = self.far_sums[n - i];
            acc += match self.tail {
                TailModel::Zero => ui * (wl + wr),
                TailModel::Edge => wl * (ui - u[0]) + wr * (ui - u[n - 1]),
                TailModel::Power { .. } => {
                    let (a, b) = tail_integrals.as_ref().map(|t| t[i]).unwrap_or((0.0, 0.0));
                    ui * (wl + wr) - a - b
                }
            };
            *y += acc;
        }
        out
    }

    /// One-sided Laplacian weight for offset `j >= 1`.
    fn lap_weight(&self, j: usize) -> f64 {
        let a2 = 2.0 * self.order;
        let jf = j as f64;
        let w = self.lap_scale * ((jf - 0.5).powf(-a2) - (jf + 0.5).powf(-a2));
        if j == 1 { w + self.lap_center } else { w }
    }

    /// `sum_{y outside} w u_tail(y)` for the left and right continuations.
    /// The first `POWER_CELLS` outside cells use the discrete weights, so the
    /// edge rows see the same stencil as interior rows; beyond that the
    /// kernel is integrated against the continuous tail.
    fn power_tail_integrals(&self, u: &[f64], p: f64, shift: f64) -> Vec<(f64, f64)> {
        const POWER_CELLS: usize = 64;
        let g = self.grid;
        let n = g.n;
        let h = g.h;
        let a2 = 2.0 * self.order;
        let c = frac_laplacian_constant(self.order);
        let rule = GaussRule::new(12);
        let side = |x_edge: f64, u_edge: f64, i_dist: usize, x: f64, dir: f64| -> f64 {
            if u_edge == 0.0 {
                return 0.0;
            }
            let tail = |y: f64| u_edge * ((y.abs() + shift) / (x_edge.abs() + shift)).powf(-p);
            let mut total = 0.0;
            // outside cell k (1-based) sits at offset i_dist + k
            for k in 1..=POWER_CELLS {
                let off = i_dist + k;
                total += self.lap_weight(off) * tail(x + dir * off as f64 * h);
            }
            let d0 = (i_dist + POWER_CELLS) as f64 * h + 0.5 * h;
            let mut r0 = d0;
            for _ in 0..80 {
                let r1 = 2.0 * r0;
                total += c * rule.integrate(r0, r1, |r| tail(x + dir * r) * r.powf(-1.0 - a2));
                if r1 > 1e8 * (1.0 + d0) {
                    break;
                }
                r0 = r1;
            }
            total
        };
        (0..n)
            .map(|i| {
                let x = g.x(i);
                (side(g.x(0), u[0], i, x, -1.0), side(g.x(n - 1), u[n - 1], n - 1 - i, x, 1.0))
            })
            .collect()
    }
}

fn empty_kernel(kind: KernelKind, grid: Grid, order: f64, eps: f64, coef: Vec<f64>) -> OperatorKernel {
    OperatorKernel {
        kind,
        grid,
        order,
        eps,
        tail: TailModel::Zero,
        coef,
        far_sums: Vec::new(),
        lap_scale: 0.0,
        lap_center: 0.0,
        far_row: Vec::new(),
        prefix: Vec::new(),
        far: None,
    }
}

/// Cell integrals of `kappa_s |z|^{2s-1}` for offsets `0..len`.
fn riesz_cell_integrals(h: f64, s: f64, len: usize) -> Vec<f64> {
    let k = riesz_constant(s);
    let b = 2.0 * s;
    (0..len)
        .map(|j| {
            if j == 0 {
                2.0 * k * (0.5 * h).powf(b) / b
            } else {
                let j = j as f64;
                k * (((j + 0.5) * h).powf(b) - ((j - 0.5) * h).powf(b)) / b
            }
        })
        .collect()
}

/// Discrete mollifier `sigma`: an even polynomial bump of radius `r`
/// sampled on the grid and normalized to unit discrete mass.
pub fn mollifier_sigma(h: f64, radius: f64) -> Vec<f64> {
    let m = (radius / h).floor() as usize;
    let mut w: Vec<f64> = (0..=2 * m)
        .map(|k| {
            let x = (k as f64 - m as f64) * h / radius;
            let b = 1.0 - x * x;
            if b > 0.0 { b * b } else { 0.0 }
        })
        .collect();
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
    w
}

/// `rho = sigma * sigma` with `sigma` of radius `eps/2`, so `rho` has radius `eps`.
pub fn mollifier_rho(h: f64, eps: f64) -> Vec<f64> {
    let s = mollifier_sigma(h, 0.5 * eps);
    discrete_convolve(&s, &s)
}

fn discrete_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Symmetric coefficient vector from one-sided values, mollified by `rho`.
fn even_coef(n: usize, one_side: &dyn Fn(usize) -> f64, rho: Option<&[f64]>) -> Vec<f64> {
    let raw = |o: isize| one_side(o.unsigned_abs());
    mollified(n, &raw, rho)
}

fn mollified(n: usize, raw: &dyn Fn(isize) -> f64, rho: Option<&[f64]>) -> Vec<f64> {
    let ni = n as isize;
    match rho {
        None => (-(ni - 1)..ni).map(raw).collect(),
        Some(r) if r.len() == 1 => (-(ni - 1)..ni).map(|o| raw(o) * r[0]).collect(),
        Some(r) => {
            let m = (r.len() / 2) as isize;
            (-(ni - 1)..ni)
                .map(|o| {
                    let mut acc = 0.0;
                    for (k, rk) in r.iter().enumerate() {
                        acc += rk * raw(o - (k as isize - m));
                    }
                    acc
                })
                .collect()
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    check_param(eps >= 0.0 && eps.is_finite(), "eps", eps, "mollification radius must be >= 0")
}

fn rho_for(grid: &Grid, eps: f64) -> Option<Vec<f64>> {
    if eps > 0.0 {
        Some(mollifier_rho(grid.h, eps))
    } else {
        None
    }
}

fn riesz_kernel(kind: KernelKind, grid: Grid, order: f64, eps: f64, rho: Option<Vec<f64>>) -> OperatorKernel {
    let n = grid.n;
    let extra = rho.as_ref().map(|r| r.len()).unwrap_or(0);
    let cells = riesz_cell_integrals(grid.h, order, n + extra + 1);
    let coef = even_coef(n, &|j| cells[j], rho.as_deref());
    empty_kernel(kind, grid, order, eps, coef).finish()
}

/// Quadrature Riesz potential `K_s^eps`, `0 < s < 1/2`. Weights are exact
/// cell integrals of the kernel (they include the cell width).
pub fn build_riesz_kernel(grid: &Grid, s: f64, eps: f64) -> Result<OperatorKernel> {
    check_param(s > 0.0 && s < 0.5, "s", s, "raw potential needs 0 < s < 1/2 in 1D")?;
    check_eps(eps)?;
    Ok(riesz_kernel(KernelKind::Riesz, *grid, s, eps, rho_for(grid, eps)))
}

/// `H_s^eps = K_{s/2} * sigma`, the square root of `K_s^eps`; any `s` in (0,1).
pub fn half_operator(grid: &Grid, s: f64, eps: f64) -> Result<OperatorKernel> {
    check_param(s > 0.0 && s < 1.0, "s", s, "order must lie in (0,1)")?;
    check_eps(eps)?;
    let sigma = if eps > 0.0 { Some(mollifier_sigma(grid.h, 0.25 * eps)) } else { None };
    Ok(riesz_kernel(KernelKind::HalfRiesz, *grid, 0.5 * s, eps, sigma))
}

/// Sum of the symbol-matching integrals; see `build_frac_laplacian`.
fn laplacian_moment_correction(alpha: f64) -> f64 {
    let a2 = 2.0 * alpha;
    let b = 2.0 - a2;
    let mut s = 0.0;
    // summed from the far end so that small terms go first
    for j in (1..=MOMENT_TERMS).rev() {
        let j = j as f64;
        let lo = j - 0.5;
        let hi = j + 0.5;
        s += j * j * (lo.powf(-a2) - hi.powf(-a2)) / a2 - (hi.powf(b) - lo.powf(b)) / b;
    }
    let jl = MOMENT_TERMS as f64 + 0.5;
    s + (1.0 + 2.0 * a2) / 12.0 * jl.powf(-a2) / a2
}

/// Quadrature fractional Laplacian, `((-Delta)^a u)_i = sum_o w_o (u_i - u_{i+o})`.
///
/// `w_o` is the exact cell integral of `sigma |z|^{-1-2a}`. The nearest
/// weights absorb the second-order Taylor term of the singular cell and a
/// correction making the discrete second moment match the continuum one, so
/// the symbol is reproduced to second order for resolved modes.
pub fn build_frac_laplacian(grid: &Grid, alpha: f64) -> Result<OperatorKernel> {
    check_param(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "order must lie in (0,1)")?;
    let n = grid.n;
    let h = grid.h;
    let c = frac_laplacian_constant(alpha);
    let a2 = 2.0 * alpha;
    let scale = c * h.powf(-a2) / a2;
    let center = c * (0.5 * h).powf(2.0 - a2) / ((2.0 - a2) * h * h) - c * h.powf(-a2) * laplacian_moment_correction(alpha);
    let one_side = |j: usize| -> f64 {
        if j == 0 {
            return 0.0;
        }
        let jf = j as f64;
        let w = scale * ((jf - 0.5).powf(-a2) - (jf + 0.5).powf(-a2));
        if j == 1 { w + center } else { w }
    };
    let coef = even_coef(n, &one_side, None);
    // far_sums[k] = sum_{j >= k} w_j
    let far_sums = (0..=n + 1)
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let base = scale * (k as f64 - 0.5).powf(-a2);
            if k == 1 { base + center } else { base }
        })
        .collect();
    let mut k = empty_kernel(KernelKind::FracLaplacian, *grid, alpha, 0.0, coef);
    k.far_sums = far_sums;
    k.lap_scale = scale;
    k.lap_center = center;
    Ok(k.finish())
}

/// Quadrature `d/dx K_s`. For `s >= 1/2` the odd kernel `g_s sign(x)|x|^{2s-2}`
/// is integrated cell by cell, with the singular cell folded into the
/// nearest pair. For `s < 1/2` it is the centered difference of `K_s`.
pub fn build_grad_riesz(grid: &Grid, s: f64) -> Result<OperatorKernel> {
    build_grad_riesz_mollified(grid, s, 0.0)
}

pub fn build_grad_riesz_mollified(grid: &Grid, s: f64, eps: f64) -> Result<OperatorKernel> {
    check_param(s > 0.0 && s < 1.0, "s", s, "order must lie in (0,1)")?;
    check_eps(eps)?;
    let n = grid.n;
    let h = grid.h;
    let rho = rho_for(grid, eps);
    let extra = rho.as_ref().map(|r| r.len()).unwrap_or(0);
    let len = n + extra + 2;
    let coef = if s < 0.5 {
        let cells = riesz_cell_integrals(h, s, len + 1);
        let w = |o: isize| cells[o.unsigned_abs()];
        let raw = |o: isize| (w(o - 1) - w(o + 1)) / (2.0 * h);
        mollified(n, &raw, rho.as_deref())
    } else {
        let g = grad_riesz_constant(s);
        let b = 2.0 * s - 1.0;
        let near = g * (0.5 * h).powf(2.0 * s) / (2.0 * s * h);
        // w[k]: contribution of input cells k to the left of the output cell
        let w: Vec<f64> = (0..len)
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let kf = k as f64;
                let base = if b.abs() < 1e-14 {
                    g * ((kf + 0.5) / (kf - 0.5)).ln()
                } else {
                    g * (((kf + 0.5) * h).powf(b) - ((kf - 0.5) * h).powf(b)) / b
                };
                if k == 1 { base + near } else { base }
            })
            .collect();
        let raw = |o: isize| {
            let k = o.unsigned_abs();
            if o < 0 { w[k] } else { -w[k] }
        };
        mollified(n, &raw, rho.as_deref())
    };
    Ok(empty_kernel(KernelKind::GradRiesz, *grid, s, eps, coef).finish())
}

/// Spectral realization on the zero-padded periodic extension.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    pub kind: KernelKind,
    pub grid: Grid,
    pub order: f64,
    pub pad: usize,
    plan: FftPlan,
    /// Real multipliers; for `GradRiesz` the true multiplier is `i * m`.
    multipliers: Vec<f64>,
    /// Periodic-image correction (fractional Laplacian only).
    images: Option<Toeplitz>,
}

/// `int_0^{pi k} t^{b-1} cos t dt` (or `sin`) for `k = 0..=kmax`.
fn oscillatory_moments(kmax: usize, b: f64, sine: bool) -> Vec<f64> {
    let rule = GaussRule::new(16);
    let f = |t: f64| t.powf(b - 1.0) * if sine { t.sin() } else { t.cos() };
    let mut series = 0.0;
    let mut fact = 1.0;
    for k in 0..25 {
        let p = if sine { 2 * k + 1 } else { 2 * k };
        if k > 0 {
            fact *= (p as f64 - 1.0) * p as f64;
        } else if sine {
            fact = 1.0;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        series += sign / fact / (p as f64 + b);
    }
    let mut out = vec![0.0; kmax + 1];
    if kmax >= 1 {
        out[1] = series + rule.integrate(1.0, PI, f);
    }
    for k in 1..kmax {
        out[k + 1] = out[k] + rule.integrate(PI * k as f64, PI * (k + 1) as f64, f);
    }
    out
}

impl SpectralOperator {
    /// `pad` is rounded so that `pad * n` is a power of two and `>= 2n`.
    pub fn new(kind: KernelKind, grid: &Grid, order: f64, pad: usize) -> Result<Self> {
        let n = grid.n;
        let size = (pad.max(2) * n).next_power_of_two();
        let h = grid.h;
        let period = size as f64 * h;
        match kind {
            KernelKind::Riesz | KernelKind::HalfRiesz => {
                check_param(order > 0.0 && order < 0.5, "s", order, "potential order must lie in (0,1/2)")?
            }
            _ => check_param(order > 0.0 && order < 1.0, "order", order, "must lie in (0,1)")?,
        }
        let half = size / 2;
        let multipliers: Vec<f64> = match kind {
            KernelKind::FracLaplacian => (0..size).map(|k| wavenumber(k, size, h).abs().powf(2.0 * order)).collect(),
            KernelKind::Riesz | KernelKind::HalfRiesz => {
                let b = 2.0 * order;
                let kap = riesz_constant(order);
                let g = oscillatory_moments(half, b, false);
                (0..size)
                    .map(|k| {
                        let ak = if k <= half { k } else { size - k };
                        if ak == 0 {
                            2.0 * kap * (0.5 * period).powf(b) / b
                        } else {
                            let xi = 2.0 * PI * ak as f64 / period;
                            2.0 * kap * xi.powf(-b) * g[ak]
                        }
                    })
                    .collect()
            }
            KernelKind::GradRiesz => {
                let b = 2.0 * order - 1.0;
                let gs = grad_riesz_constant(order);
                if order < 0.5 {
                    // i xi times the Riesz multiplier
                    let kap = riesz_constant(order);
                    let g = oscillatory_moments(half, 2.0 * order, false);
                    (0..size)
                        .map(|k| {
                            let ak = if k <= half { k } else { size - k };
                            if ak == 0 || ak == half {
                                0.0
                            } else {
                                let xi = wavenumber(k, size, h);
                                xi * 2.0 * kap * xi.abs().powf(-2.0 * order) * g[ak]
                            }
                        })
                        .collect()
                } else {
                    let g = oscillatory_moments(half, b, true);
                    (0..size)
                        .map(|k| {
                            let ak = if k <= half { k } else { size - k };
                            if ak == 0 || ak == half {
                                0.0
                            } else {
                                let xi = 2.0 * PI * ak as f64 / period;
                                let sign = if k <= half { 1.0 } else { -1.0 };
                                -2.0 * gs * sign * xi.powf(-b) * g[ak]
                            }
                        })
                        .collect()
                }
            }
        };
        let images = if kind == KernelKind::FracLaplacian {
            let sp = 1.0 + 2.0 * order;
            let c = frac_laplacian_constant(order) * h;
            let coef: Vec<f64> = (0..2 * n - 1)
                .map(|k| {
                    let d = (k as f64 - (n as f64 - 1.0)) * h / period;
                    c * period.powf(-sp) * (hurwitz_zeta(sp, 1.0 - d) + hurwitz_zeta(sp, 1.0 + d))
                })
                .collect();
            Some(Toeplitz::new(n, &coef))
        } else {
            None
        };
        Ok(Self { kind, grid: *grid, order, pad: size / n, plan: FftPlan::new(size), multipliers, images })
    }

    /// `(frequency index, multiplier)` rows for dumps.
    pub fn multipliers_table(&self) -> Vec<(usize, f64)> {
        self.multipliers.iter().copied().enumerate().collect()
    }

    pub fn apply(&self, u: &Field) -> Result<Field> {
        u.check_grid(&self.grid)?;
        let n = self.grid.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.plan.len()];
        for (b, &v) in buf.iter_mut().zip(&u.values) {
            b.re = v;
        }
        self.plan.forward(&mut buf);
        let imaginary = self.kind == KernelKind::GradRiesz;
        for (b, &m) in buf.iter_mut().zip(&self.multipliers) {
            *b = if imaginary { Complex64::new(-b.im * m, b.re * m) } else { *b * m };
        }
        self.plan.inverse(&mut buf);
        let mut values: Vec<f64> = buf[..n].iter().map(|c| c.re).collect();
        if let Some(t) = &self.images {
            for (v, c) in values.iter_mut().zip(t.apply(&u.values)) {
                *v += c;
            }
        }
        Ok(Field { grid: self.grid, values })
    }
}

/// Both sides of the Stroock-Varopoulos inequality
/// `int u^{q-1} (-Delta)^a u >= 4(q-1)/q^2 int |(-Delta)^{a/2} u^{q/2}|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StroockVaropoulos {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// The right side is evaluated as the quadratic form `<w, (-Delta)^a w>`
/// with `w = u^{q/2}`, which equals `int |(-Delta)^{a/2} w|^2` and keeps
/// both sides on the same discrete operator.
pub fn check_stroock_varopoulos(u: &Field, alpha: f64, q: f64) -> Result<StroockVaropoulos> {
    check_param(q > 1.0, "q", q, "exponent must exceed 1")?;
    u.check_nonnegative()?;
    let lap = build_frac_laplacian(&u.grid, alpha)?;
    let lu = lap.apply(u)?;
    let lhs: f64 = u.values.iter().zip(&lu.values).map(|(a, b)| a.powf(q - 1.0) * b).sum::<f64>() * u.grid.h;
    let w = Field { grid: u.grid, values: u.values.iter().map(|v| v.powf(0.5 * q)).collect() };
    let lw = lap.apply(&w)?;
    let rhs = 4.0 * (q - 1.0) / (q * q) * w.dot(&lw);
    let tol = 1e-12 * (lhs.abs() + rhs.abs()) + 1e-300;
    Ok(StroockVaropoulos { lhs, rhs, holds: lhs >= rhs - tol })
}
