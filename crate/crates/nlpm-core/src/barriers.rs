//! Explicit comparison functions and their numerical verification: an
//! exponential tail and a parabola above the density, and a power-law
//! subsolution below the integrated profile built on a compactly supported
//! bump `G` with a negative fractional Laplacian far away.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::LN_2;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;

use crate::error::{check_param, Error, Result};
use crate::evolve::Trajectory;
use crate::fracops::{build_frac_laplacian, frac_laplacian_constant, TailModel};
use crate::grid::{Field, Grid};
use crate::integrated::IntegratedTrajectory;
use crate::math::smooth_step;

/// First place a comparison fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub x: f64,
    pub t: f64,
    /// Signed amount by which the ordering is broken (positive).
    pub gap: f64,
}

/// Scans snapshots with `t <= t_max` for `u > bound + slack * max(1, bound)`.
/// The initial slice must lie strictly below the bound.
fn scan_upper(traj: &Trajectory, t_max: f64, slack: f64, bound: impl Fn(f64, f64) -> f64) -> Result<Option<Violation>> {
    let first = traj.snapshots.first().ok_or(Error::Insufficient("empty trajectory"))?;
    let g = first.field.grid;
    for (i, &u) in first.field.values.iter().enumerate() {
        if u > 0.0 && u >= bound(g.x(i), first.t) {
            return Err(Error::Precondition("initial datum not strictly below the barrier"));
        }
    }
    for s in &traj.snapshots[1..] {
        if s.t > t_max * (1.0 + 1e-12) {
            break;
        }
        for (i, &u) in s.field.values.iter().enumerate() {
            let x = g.x(i);
            let b = bound(x, s.t);
            if u > b + slack * b.abs().max(1.0) {
                return Ok(Some(Violation { x, t: s.t, gap: u - b }));
            }
        }
    }
    Ok(None)
}

/// `amp e^{growth t - rate |x|} + lift amp e^{lift_rate t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTail {
    pub amp: f64,
    pub rate: f64,
    pub growth: f64,
    pub lift: f64,
    pub lift_rate: f64,
}

impl ExpTail {
    pub fn new(amp: f64, rate: f64, growth: f64) -> Result<Self> {
        check_param(amp > 0.0, "amp", amp, "must be positive")?;
        check_param(rate > 0.0, "rate", rate, "must be positive")?;
        check_param(growth > 0.0, "growth", growth, "must be positive")?;
        Ok(Self { amp, rate, growth, lift: 0.0, lift_rate: 0.0 })
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.amp * (self.growth * t - self.rate * x.abs()).exp() + self.lift * self.amp * (self.lift_rate * t).exp()
    }
}

/// Speed constant under the scaling `u -> L u(a x, b t)`:
/// `C(L, a) = C(1,1) L^{m - 3/2 + s} a^{1/2 - s}`.
pub fn scaled_speed(c11: f64, l: f64, a: f64, m: f64, s: f64) -> f64 {
    c11 * l.powf(m - 1.5 + s) * a.powf(0.5 - s)
}

pub fn verify_upper_barrier(traj: &Trajectory, spec: &ExpTail, slack: f64) -> Result<Option<Violation>> {
    scan_upper(traj, f64::INFINITY, slack, |x, t| spec.eval(x, t))
}

/// Doubles `growth` from the given start until the barrier holds.
/// Returns the passing barrier and the ladder of tried constants.
pub fn fit_upper_barrier(traj: &Trajectory, start: ExpTail, slack: f64, max_doublings: usize) -> Result<(Option<ExpTail>, Vec<(f64, bool)>)> {
    let mut spec = start;
    let mut ladder = Vec::new();
    for _ in 0..=max_doublings {
        let ok = verify_upper_barrier(traj, &spec, slack)?.is_none();
        ladder.push((spec.growth, ok));
        if ok {
            return Ok((Some(spec), ladder));
        }
        spec.growth *= 2.0;
    }
    Ok((None, ladder))
}

/// One time window of the restarted exponential barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub t0: f64,
    pub t1: f64,
    pub amp: f64,
    pub growth: f64,
}

/// Exponential barrier restarted every `q ln 2 / C_k`, each stage with its
/// own growth constant; the amplitude doubles `q` times per stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StagedExpTail {
    pub rate: f64,
    pub q: u32,
    pub stages: Vec<Stage>,
    /// `1 <= q < 1/(2s-1)` has no integer solution.
    pub q_window_empty: bool,
}

impl StagedExpTail {
    pub fn eval(&self, x: f64, t: f64) -> Option<f64> {
        self.stages
            .iter()
            .find(|st| t >= st.t0 && t <= st.t1 * (1.0 + 1e-12))
            .map(|st| st.amp * (st.growth * (t - st.t0) - self.rate * x.abs()).exp())
    }

    pub fn horizon(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.t1)
    }
}

/// Fits restarted stages by doubling each stage's growth constant, until the
/// stages cover the trajectory or `max_stages` is reached. Every stage must
/// contain at least two snapshots after its start.
pub fn fit_staged_barrier(traj: &Trajectory, amp: f64, rate: f64, s: f64, max_stages: usize, c_start: f64, slack: f64) -> Result<StagedExpTail> {
    check_param(s > 0.5 && s < 1.0, "s", s, "staged barrier is for 1/2 < s < 1")?;
    let q = 1u32;
    let q_window_empty = !(1.0 < 1.0 / (2.0 * s - 1.0));
    let mut staged = StagedExpTail { rate, q, stages: Vec::new(), q_window_empty };
    let mut t0 = 0.0;
    let mut a = amp;
    let t_end = traj.snapshots.last().map_or(0.0, |sn| sn.t);
    for _ in 0..max_stages {
        if t0 >= t_end {
            break;
        }
        let mut c = c_start;
        let mut found = None;
        for _ in 0..40 {
            let t1 = t0 + q as f64 * LN_2 / c;
            let inside = traj.snapshots.iter().filter(|sn| sn.t > t0 && sn.t <= t1 * (1.0 + 1e-12)).count();
            if inside < 2 {
                return Err(Error::Insufficient("stage holds fewer than two snapshots"));
            }
            let st = Stage { t0, t1, amp: a, growth: c };
            let bound = |x: f64, t: f64| if t < t0 { f64::INFINITY } else { st.amp * (st.growth * (t - t0) - rate * x.abs()).exp() };
            let ok = traj
                .snapshots
                .iter()
                .filter(|sn| sn.t >= t0 && sn.t <= t1 * (1.0 + 1e-12))
                .all(|sn| sn.field.values.iter().enumerate().all(|(i, &u)| {
                    let b = bound(sn.field.grid.x(i), sn.t);
                    u <= b + slack * b.max(1.0)
                }));
            if ok {
                found = Some(st);
                break;
            }
            c *= 2.0;
        }
        let st = found.ok_or(Error::Infeasible("stage growth constant"))?;
        staged.stages.push(st);
        t0 = st.t1;
        a = st.amp * 2f64.powi(q as i32);
    }
    Ok(staged)
}

/// `a (C t - (|x| - b))^2` inside the moving support `|x| < b + C t`,
/// optionally raised by `floor (1 + floor_rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parabola {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub floor: f64,
    pub floor_rate: f64,
}

impl Parabola {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            check_param(v > 0.0, name, v, "must be positive")?;
        }
        Ok(Self { a, b, c, floor: 0.0, floor_rate: 0.0 })
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let d = self.c * t - (x.abs() - self.b);
        let core = if d > 0.0 && x.abs() < self.b + self.c * t { self.a * d * d } else { 0.0 };
        core + self.floor * (1.0 + self.floor_rate * t)
    }

    /// Support radius at time `t`.
    pub fn edge(&self, t: f64) -> f64 {
        self.b + self.c * t
    }
}

/// Upper comparison with the parabola; only the clean `s < 1/2` statement
/// is supported.
pub fn verify_parabola(traj: &Trajectory, p: &Parabola, slack: f64) -> Result<Option<Violation>> {
    let s = traj.params.s;
    check_param(s < 0.5, "s", s, "staged-C regime: parabola bound needs s < 1/2")?;
    scan_upper(traj, f64::INFINITY, slack, |x, t| p.eval(x, t))
}

/// Doubles the parabola speed until the comparison holds.
pub fn fit_parabola(traj: &Trajectory, start: Parabola, slack: f64, max_doublings: usize) -> Result<Option<Parabola>> {
    let mut p = start;
    for _ in 0..=max_doublings {
        if verify_parabola(traj, &p, slack)?.is_none() {
            return Ok(Some(p));
        }
        p.c *= 2.0;
    }
    Ok(None)
}

/// Cut-off `1` on `[-1,1]`, `0` outside `[-2,2]`, built from `e^{-1/x}`.
pub fn cutoff(x: f64) -> f64 {
    smooth_step(2.0 - x.abs())
}

/// Compactly supported bump with far-field `(-Delta)^s G <= -C2 |x|^{-1-2s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GSpec {
    pub c1: f64,
    pub c2: f64,
    pub s: f64,
    /// Dilation radius; `supp G = [-R, R]`.
    pub radius: f64,
    /// `|G_1|_1 = 3/2 C1`.
    pub base_l1: f64,
    pub sampled: Field,
}

impl GSpec {
    /// Base bump `G_1(x) = C1 cutoff(2x)`, supported on `[-1, 1]`.
    pub fn base(&self, x: f64) -> f64 {
        self.c1 * cutoff(2.0 * x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.base(x / self.radius)
    }
}

/// `R = C2 2^{1+2s} / (sigma_s |G_1|_1)`, with `G` sampled on `grid`.
pub fn build_g(c1: f64, c2: f64, s: f64, grid: &Grid) -> Result<GSpec> {
    check_param(c1 > 0.0, "c1", c1, "must be positive")?;
    check_param(c2 > 0.0, "c2", c2, "must be positive")?;
    check_param(s > 0.0 && s < 1.0, "s", s, "order must lie in (0,1)")?;
    let base_l1 = 1.5 * c1;
    let radius = c2 * 2f64.powf(1.0 + 2.0 * s) / (frac_laplacian_constant(s) * base_l1);
    let mut g = GSpec { c1, c2, s, radius, base_l1, sampled: Field::zeros(*grid) };
    g.sampled = Field::from_fn(*grid, |x| g.eval(x));
    Ok(g)
}

/// Largest `(-Delta)^s G(x) |x|^{1+2s} / C2` over sample points at distance
/// `>= 1` from the support with `|x| <= x_max`; the far-field property asks
/// for a value `<= -1`.
pub fn g_far_field_ratio(g: &GSpec, x_max: f64) -> Result<f64> {
    let op = build_frac_laplacian(&g.sampled.grid, g.s)?;
    let lg = op.apply(&g.sampled)?;
    let grid = g.sampled.grid;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..grid.n {
        let x = grid.x(i);
        if x.abs() >= g.radius + 1.0 && x.abs() <= x_max {
            worst = worst.max(lg.values[i] * x.abs().powf(1.0 + 2.0 * g.s) / g.c2);
        }
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::Insufficient("no sample at distance >= 1 from the support"));
    }
    Ok(worst)
}

/// `(|x| + xi)^{-gamma}`.
pub fn power_profile(x: f64, xi: f64, gamma: f64) -> f64 {
    (x.abs() + xi).powf(-gamma)
}

/// `sup |x|^{1+2 alpha} |(-Delta)^alpha (|x|+xi)^{-gamma}|` over grid points
/// with `|x|` in `[r_lo, r_hi]`. The profile is continued by its own power
/// law outside the grid.
pub fn power_profile_bound(xi: f64, gamma: f64, alpha: f64, grid: &Grid, r_lo: f64, r_hi: f64) -> Result<f64> {
    let u = Field::from_fn(*grid, |x| power_profile(x, xi, gamma));
    let op = build_frac_laplacian(grid, alpha)?.with_tail(TailModel::Power { exponent: gamma, shift: xi });
    let lu = op.apply(&u)?;
    let mut best = 0.0f64;
    let mut any = false;
    for i in 0..grid.n {
        let r = grid.x(i).abs();
        if r >= r_lo && r <= r_hi {
            best = best.max(r.powf(1.0 + 2.0 * alpha) * lu.values[i].abs());
            any = true;
        }
    }
    if !any {
        return Err(Error::Insufficient("bound region holds no grid point"));
    }
    Ok(best)
}

/// Self-similar exponents of the integrated equation.
pub fn lower_exponents(m: f64, alpha: f64) -> Result<(f64, f64)> {
    check_param(m > 1.0 && m < 2.0, "m", m, "lower barrier needs 1 < m < 2")?;
    let gamma = (2.0 * alpha + m) / (2.0 - m);
    let b = 1.0 / (m - 1.0 + 2.0 * alpha);
    Ok((gamma, b))
}

/// Output of [`choose_barrier_params`]. `t_max` is the horizon on which the
/// lateral comparison is guaranteed; `horizon_ok` says whether it exceeds `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamChoice {
    pub eps: f64,
    pub xi: f64,
    pub t_max: f64,
    pub horizon_ok: bool,
}

/// The six inequalities behind the lower barrier, in the order
/// `xi > x0 + eps^{-1/g}`, `t_max` formula, `xi > (k1-C1)^{-1/g}`,
/// `xi < x1 + (t1+1)^b eps^{-1/g}`, and the two upper bounds on `eps`.
pub fn barrier_inequalities(m: f64, alpha: f64, x0: f64, x1: f64, t1: f64, k1: f64, c1: f64, p: &ParamChoice) -> Result<[bool; 6]> {
    let (g, b) = lower_exponents(m, alpha)?;
    let ie = p.eps.powf(-1.0 / g);
    let t_formula = (k1 / (p.xi.powf(-g) + c1)).powf(1.0 / (b * g)) - 1.0;
    Ok([
        p.xi > x0 + ie,
        p.t_max <= t_formula * (1.0 + 1e-12) && p.t_max > 0.0,
        p.xi > (k1 - c1).powf(-1.0 / g),
        p.xi < x1 + (t1 + 1.0).powf(b) * ie,
        p.eps < (((t1 + 1.0).powf(b) - 1.0) / (x0 - x1)).powf(g),
        p.eps < ((t1 + 1.0).powf(b) / ((k1 - c1).powf(-1.0 / g) - x1)).powf(g),
    ])
}

/// Picks `eps` as half the smaller of its two upper bounds and `xi` at the
/// midpoint of its feasible interval.
pub fn choose_barrier_params(m: f64, alpha: f64, x0: f64, x1: f64, t1: f64, k1: f64, c1: f64) -> Result<ParamChoice> {
    let (g, b) = lower_exponents(m, alpha)?;
    check_param(x1 < x0 && x0 < 0.0, "x1", x1, "need x1 < x0 < 0")?;
    check_param(t1 > 0.0, "t1", t1, "must be positive")?;
    check_param(k1 > c1 && c1 > 0.0, "k1", k1, "need k1 > C1 > 0")?;
    let grow = (t1 + 1.0).powf(b);
    let e1 = ((grow - 1.0) / (x0 - x1)).powf(g);
    let floor_xi = (k1 - c1).powf(-1.0 / g);
    let denom = floor_xi - x1;
    let e2 = (grow / denom).powf(g);
    let eps = 0.5 * e1.min(e2);
    let ie = eps.powf(-1.0 / g);
    let lo = (x0 + ie).max(floor_xi);
    let hi = x1 + grow * ie;
    if !(lo < hi) {
        return Err(Error::Infeasible("xi interval"));
    }
    let xi = 0.5 * (lo + hi);
    let t_max = (k1 / (xi.powf(-g) + c1)).powf(1.0 / (b * g)) - 1.0;
    if !(t_max > 0.0) {
        return Err(Error::Infeasible("t_max"));
    }
    Ok(ParamChoice { eps, xi, t_max, horizon_ok: t1 < t_max })
}

/// Inputs of the lower-barrier construction, in simulation coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerInputs {
    /// Lateral boundary; the barrier is asserted on `x < x0`.
    pub x0: f64,
    /// Target point outside the initial support, `x1 < x0`.
    pub x1: f64,
    pub t1: f64,
    /// `min v` on `x >= x0` over the time window.
    pub k1: f64,
    /// Height of `G`, below `k1`.
    pub c1: f64,
    /// Cells per unit length for the `C3` measurement.
    pub resolution: f64,
}

/// `Phi(x,t) = (t+1)^{b gamma} ((|X|+xi)^{-gamma} + G(X)) - eps`, `X = x - shift`.
///
/// The barrier lives in a frame centered on `G`; `shift` places the
/// lateral boundary at `X0 = -(R + 1)`, one unit outside `supp G`, so the
/// far-field bound on `G` applies on the whole region `x < x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBarrier {
    pub m: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub b: f64,
    pub eps: f64,
    pub xi: f64,
    pub shift: f64,
    pub c2: f64,
    pub c3: f64,
    pub t_max: f64,
    pub g: GSpec,
    pub inputs: LowerInputs,
}

impl LowerBarrier {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let xx = x - self.shift;
        (t + 1.0).powf(self.b * self.gamma) * (power_profile(xx, self.xi, self.gamma) + self.g.eval(xx)) - self.eps
    }

    pub fn frame_x0(&self) -> f64 {
        self.inputs.x0 - self.shift
    }
}

fn frame_grid(radius: f64, x0f: f64, width: f64, resolution: f64) -> Result<Grid> {
    let lo = x0f - width;
    let hi = radius + 2.0;
    let n = (((hi - lo) * resolution).ceil() as usize).next_power_of_two().max(64);
    Grid::new(lo, hi, n)
}

/// Builds the barrier. `C3` (the power-profile constant) depends on `xi`,
/// which depends on the frame and hence on `C2`; the loop stops once the
/// `C2` chosen with 10% headroom still dominates the measured `C3`.
pub fn build_lower_barrier(m: f64, alpha: f64, inputs: LowerInputs) -> Result<LowerBarrier> {
    let (gamma, b) = lower_exponents(m, alpha)?;
    check_param(inputs.x1 < inputs.x0, "x1", inputs.x1, "must lie left of x0")?;
    check_param(inputs.k1 > inputs.c1 && inputs.c1 > 0.0, "c1", inputs.c1, "need 0 < C1 < k1")?;
    check_param(inputs.resolution > 0.0, "resolution", inputs.resolution, "must be positive")?;
    let lead = b * gamma.powf(2.0 - m);
    let width = inputs.x0 - inputs.x1 + 4.0;
    let mut c3 = 0.0;
    for _ in 0..20 {
        let c2 = 1.1 * (c3 + lead);
        let unit = Grid::new(-1.0, 1.0, 8)?;
        let radius = build_g(inputs.c1, c2, alpha, &unit)?.radius;
        let x0f = -(radius + 1.0);
        let shift = inputs.x0 - x0f;
        let x1f = inputs.x1 - shift;
        let p = choose_barrier_params(m, alpha, x0f, x1f, inputs.t1, inputs.k1, inputs.c1)?;
        let grid = frame_grid(radius, x0f, width, inputs.resolution)?;
        let measured = power_profile_bound(p.xi, gamma, alpha, &grid, -x0f, f64::INFINITY)?;
        // beyond the grid the ratio tends to sigma |psi|_1
        let far = frac_laplacian_constant(alpha) * 2.0 * p.xi.powf(1.0 - gamma) / (gamma - 1.0);
        let c3_new = measured.max(far);
        if c2 > c3_new + lead {
            let g = build_g(inputs.c1, c2, alpha, &grid)?;
            return Ok(LowerBarrier { m, alpha, gamma, b, eps: p.eps, xi: p.xi, shift, c2, c3: c3_new, t_max: p.t_max, g, inputs });
        }
        c3 = c3_new;
    }
    Err(Error::Infeasible("C2 fixed point"))
}

/// Largest relative subsolution residual on `x < x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    /// `max (Phi_t + |Phi_x|^{m-1} L Phi) / Phi_t` on the fine grid.
    pub max_rel: f64,
    /// Two-grid difference of the same ratio.
    pub slack: f64,
    pub holds: bool,
}

fn residual_on(bar: &LowerBarrier, grid: &Grid, region_lo: f64, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    let x0f = bar.frame_x0();
    let lo = region_lo - bar.shift;
    let profile = Field::from_fn(*grid, |x| power_profile(x, bar.xi, bar.gamma) + bar.g.eval(x));
    let op = build_frac_laplacian(grid, bar.alpha)?.with_tail(TailModel::Power { exponent: bar.gamma, shift: bar.xi });
    let lp = op.apply(&profile)?;
    let mut out = Vec::new();
    for i in 0..grid.n {
        let x = grid.x(i);
        if x >= x0f || x < lo {
            continue;
        }
        let psi = power_profile(x, bar.xi, bar.gamma);
        let dpsi = bar.gamma * (x.abs() + bar.xi).powf(-bar.gamma - 1.0);
        let mut worst = f64::NEG_INFINITY;
        for &t in times {
            let tg = (t + 1.0).powf(bar.b * bar.gamma);
            let phi_t = bar.b * bar.gamma * (t + 1.0).powf(bar.b * bar.gamma - 1.0) * psi;
            let r = phi_t + (tg * dpsi).powf(bar.m - 1.0) * tg * lp.values[i];
            worst = worst.max(r / phi_t);
        }
        out.push((x, worst));
    }
    Ok(out)
}

/// Residual of the subsolution inequality on the frame region
/// `[region_lo, x0)` (simulation coordinates) for `t` in `[0, t_max]`,
/// evaluated on a grid with `resolution` cells per unit and on one twice
/// as fine; the fine grid decides, the difference is the slack.
pub fn subsolution_residual(bar: &LowerBarrier, region_lo: f64, resolution: f64) -> Result<Residual> {
    let x0f = bar.frame_x0();
    let width = bar.inputs.x0 - region_lo + 2.0;
    let coarse = frame_grid(bar.g.radius, x0f, width, resolution)?;
    let fine = coarse.refined(2);
    let times: Vec<f64> = (0..=8).map(|k| bar.t_max * k as f64 / 8.0).collect();
    let rc = residual_on(bar, &coarse, region_lo, &times)?;
    let rf = residual_on(bar, &fine, region_lo, &times)?;
    let max_rel = rf.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut slack = 0.0f64;
    for &(x, r) in &rc {
        // fine cells i and i+1 straddle the coarse center x
        if let Some(k) = rf.iter().position(|p| p.0 > x) {
            if k > 0 {
                let (xa, ra) = rf[k - 1];
                let (xb, rb) = rf[k];
                let w = (x - xa) / (xb - xa);
                slack = slack.max((r - (ra + w * (rb - ra))).abs());
            }
        }
    }
    Ok(Residual { max_rel, slack, holds: max_rel <= slack })
}

/// Checks the parabolic-boundary ordering and then `v >= Phi - slack` on
/// `region_lo <= x < x0` for snapshots with `0 < t <= t_max`.
pub fn verify_lower_barrier(v: &IntegratedTrajectory, bar: &LowerBarrier, region_lo: f64, slack: f64) -> Result<Option<Violation>> {
    let grid = v.states.first().ok_or(Error::Insufficient("empty trajectory"))?.grid;
    let x0 = bar.inputs.x0;
    let scale = slack * v.mass;
    for (k, (&t, st)) in v.times.iter().zip(&v.states).enumerate() {
        if t > bar.t_max * (1.0 + 1e-12) {
            break;
        }
        for i in 0..grid.n {
            let x = grid.x(i);
            if x < region_lo {
                continue;
            }
            let phi = bar.eval(x, t);
            let vv = st.values[i];
            if k == 0 {
                if !(phi < vv || (phi < 0.0 && vv >= 0.0)) {
                    return Err(Error::Precondition("barrier not below the initial profile"));
                }
            } else if x >= x0 {
                if !(phi < vv) {
                    return Err(Error::Precondition("barrier not below the profile on the lateral boundary"));
                }
            } else if vv < phi - scale {
                return Ok(Some(Violation { x, t, gap: phi - vv }));
            }
        }
    }
    Ok(None)
}

/// Shrinking bump `scale e^{-a t} F(|x|)`, `F(r) = smooth_step(1 - 2r)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Persistence {
    pub scale: f64,
    pub decay: f64,
}

impl Persistence {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        0.5 * self.scale * (-self.decay * t).exp() * smooth_step(1.0 - 2.0 * x.abs())
    }
}

/// First point where the solution drops below the shrinking bump.
pub fn verify_persistence(traj: &Trajectory, p: &Persistence) -> Result<Option<Violation>> {
    for s in &traj.snapshots {
        let g = s.field.grid;
        for (i, &u) in s.field.values.iter().enumerate() {
            let x = g.x(i);
            let b = p.eval(x, s.t);
            if u < b {
                if s.t == 0.0 {
                    return Err(Error::Precondition("initial datum below the bump"));
                }
                return Ok(Some(Violation { x, t: s.t, gap: b - u }));
            }
        }
    }
    Ok(None)
}

/// Rate of change of `int F(u)` style residual for the bump: sign of
/// `w_t - (w^{m-1} (K_s w)_x)_x` at the bump center, which must be `<= 0`
/// for the bump to be a subsolution there.
pub fn persistence_center_residual(p: &Persistence, m: f64, s: f64, grid: &Grid) -> Result<f64> {
    let w = Field::from_fn(*grid, |x| p.eval(x, 0.0));
    let ev = crate::evolve::PressureOp::new(grid, s, 0.0)?;
    let (g, _) = ev.gradient(&w.values);
    let h = grid.h;
    let i = grid.cell_of(0.0).ok_or(Error::Precondition("grid misses the origin"))?;
    let mob = |u: f64| u.max(0.0).powf(m - 1.0);
    let flux_r = mob(0.5 * (w.values[i] + w.values[i + 1])) * g[i];
    let flux_l = mob(0.5 * (w.values[i - 1] + w.values[i])) * g[i - 1];
    let div = (flux_r - flux_l) / h;
    Ok(-p.decay * w.values[i] - div)
}

/// Decay rates to try for the persistence bump.
pub fn decay_ladder(start: f64, count: usize) -> Vec<f64> {
    let mut v = vec![start];
    for k in 1..count {
        v.push(v[k - 1] * 2.0);
    }
    v
}
