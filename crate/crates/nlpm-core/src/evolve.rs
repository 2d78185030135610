//! Conservative upwind time stepping for
//! `u_t = delta u_xx + (d_mu(u) p_x)_x`, `p = K_s^eps[u]`, on a Dirichlet box.
//!
//! The pressure gradient is explicit. The mobility of the upwind cell is
//! taken at the new time level, which makes every step conservative and
//! positivity preserving: each cell solves `y + a d_mu(y) = b` once its
//! upwind neighbors are known, and in 1D the dependency graph is two sweeps.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{check_param, Error, Result};
use crate::fracops::{build_grad_riesz_mollified, build_riesz_kernel, OperatorKernel};
use crate::grid::{Field, Grid};
use crate::math::bracketed_root;

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub m: f64,
    pub s: f64,
    pub eps: f64,
    pub delta: f64,
    pub mu: f64,
    pub grid: Grid,
    pub t_end: f64,
    pub cfl: f64,
    pub snapshot_every: f64,
    /// Cap on the step when the transport speed vanishes.
    pub dt_max: f64,
    /// Admit `m = 1` (linear fractional heat flow) for validation runs.
    pub allow_linear: bool,
}

impl SimParams {
    pub fn new(m: f64, s: f64, grid: Grid, t_end: f64) -> Self {
        Self {
            m,
            s,
            eps: 0.0,
            delta: 0.0,
            mu: 0.0,
            grid,
            t_end,
            cfl: 0.5,
            snapshot_every: t_end / 20.0,
            dt_max: 1e-2,
            allow_linear: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lo_ok = if self.allow_linear { self.m >= 1.0 } else { self.m > 1.0 };
        check_param(lo_ok && self.m < 3.0, "m", self.m, "existence range is 1 < m < 3")?;
        check_param(self.s > 0.0 && self.s < 1.0, "s", self.s, "potential order must lie in (0,1)")?;
        for (name, v) in [("eps", self.eps), ("delta", self.delta), ("mu", self.mu)] {
            check_param(v >= 0.0 && v.is_finite(), name, v, "regularization must be >= 0")?;
        }
        check_param(self.cfl > 0.0 && self.cfl < 1.0, "cfl", self.cfl, "safety factor must lie in (0,1)")?;
        check_param(self.t_end > 0.0, "t_end", self.t_end, "must be positive")?;
        check_param(self.snapshot_every > 0.0, "snapshot_every", self.snapshot_every, "must be positive")?;
        check_param(self.dt_max > 0.0, "dt_max", self.dt_max, "must be positive")?;
        Ok(())
    }
}

/// `d_mu(u) = (u + mu)^{m-1}`.
pub fn mobility(u: f64, m: f64, mu: f64) -> Result<f64> {
    if !(u >= 0.0) {
        return Err(Error::Negative { index: 0, value: u });
    }
    Ok(mob(u, m, mu))
}

#[inline]
fn mob(u: f64, m: f64, mu: f64) -> f64 {
    let v = u + mu;
    if m == 1.0 {
        1.0
    } else if v <= 0.0 {
        0.0
    } else {
        v.powf(m - 1.0)
    }
}

/// Interface pressure gradients `g_{i+1/2}` and a matching pressure.
#[derive(Debug, Clone)]
pub struct PressureOp {
    kernel: OperatorKernel,
    /// `true` when the kernel is `K_s` itself, `false` for `d/dx K_s`.
    potential: bool,
    lambda: f64,
}

impl PressureOp {
    /// `K_s^eps` for `s < 1/2`, `d/dx K_s^eps` otherwise.
    pub fn new(grid: &Grid, s: f64, eps: f64) -> Result<Self> {
        let (kernel, potential) = if s < 0.5 {
            (build_riesz_kernel(grid, s, eps)?, true)
        } else {
            (build_grad_riesz_mollified(grid, s, eps)?, false)
        };
        let lambda = unit_mobility_rate(&kernel, potential);
        Ok(Self { kernel, potential, lambda })
    }

    pub fn kernel(&self) -> &OperatorKernel {
        &self.kernel
    }

    /// Largest decay rate of the transport step for unit mobility.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Gradients on the `n-1` interior interfaces and a pressure whose
    /// differences reproduce them. For `s >= 1/2` the pressure is the
    /// antiderivative of the gradient, gauged to vanish in the first cell.
    pub fn gradient(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let field = Field { grid: self.kernel.grid, values: u.to_vec() };
        let c = self.kernel.apply(&field).expect("grid checked at construction").values;
        let h = self.kernel.grid.h;
        let n = u.len();
        if self.potential {
            let g = (0..n - 1).map(|i| (c[i + 1] - c[i]) / h).collect();
            (g, c)
        } else {
            let g: Vec<f64> = (0..n - 1).map(|i| 0.5 * (c[i] + c[i + 1])).collect();
            let mut p = vec![0.0; n];
            for i in 0..n - 1 {
                p[i + 1] = p[i] + h * g[i];
            }
            (g, p)
        }
    }
}

fn unit_mobility_rate(k: &OperatorKernel, potential: bool) -> f64 {
    let h = k.grid.h;
    let table = k.weights_table();
    let mut best = 0.0f64;
    for step in 1..=256 {
        let th = PI * step as f64 / 256.0;
        let mut khat = Complex64::new(0.0, 0.0);
        for &(o, w) in &table {
            khat += Complex64::from_polar(w, o as f64 * th);
        }
        let e = Complex64::from_polar(1.0, th);
        let ghat = if potential { khat * (e - 1.0) / h } else { khat * (e + 1.0) * 0.5 };
        let rate = (ghat * (Complex64::new(1.0, 0.0) - e.conj()) / h).norm();
        best = best.max(rate);
    }
    best
}

/// Result of one step.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub u: Vec<f64>,
    /// Interface fluxes; positive values move mass to the left.
    pub flux: Vec<f64>,
    /// Mass removed at the Dirichlet cells.
    pub outflow: f64,
    /// Mass added by clipping negative values.
    pub clipped: f64,
}

/// Stepper holding the pressure operator for one parameter set.
#[derive(Debug, Clone)]
pub struct Evolver {
    pub params: SimParams,
    pub op: PressureOp,
}

impl Evolver {
    pub fn new(params: SimParams) -> Result<Self> {
        params.validate()?;
        let op = PressureOp::new(&params.grid, params.s, params.eps)?;
        Ok(Self { params, op })
    }

    fn stability_limit(&self, u: &[f64]) -> f64 {
        let p = &self.params;
        let umax = u.iter().fold(0.0f64, |a, &b| a.max(b));
        let d = mob(umax, p.m, p.mu);
        let transport = if d * self.op.lambda > 0.0 { 1.0 / (d * self.op.lambda) } else { f64::INFINITY };
        let diffusive = if p.delta > 0.0 { p.grid.h * p.grid.h / (2.0 * p.delta) } else { f64::INFINITY };
        transport.min(diffusive)
    }

    /// `cfl * min(1/(lambda d_mu(max u)), h^2/(2 delta), dt_max)`.
    pub fn cfl_dt(&self, u: &Field) -> f64 {
        self.params.cfl * self.stability_limit(&u.values).min(self.params.dt_max)
    }

    pub fn step(&self, u: &Field, dt: f64) -> Result<StepOutput> {
        u.check_grid(&self.params.grid)?;
        let limit = self.stability_limit(&u.values);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        let (g, _) = self.op.gradient(&u.values);
        Ok(self.step_with_gradient(&u.values, &g, dt))
    }

    pub(crate) fn step_with_gradient(&self, u: &[f64], g: &[f64], dt: f64) -> StepOutput {
        let p = &self.params;
        let n = u.len();
        let h = p.grid.h;
        let r = dt / h;
        let nu = p.delta * dt / (h * h);
        let mut base = u.to_vec();
        if nu > 0.0 {
            for i in 0..n {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                base[i] = u[i] + nu * (left - 2.0 * u[i] + right);
            }
        }
        let mut un = vec![0.0; n];
        let mut flux = vec![0.0; n - 1];
        let mut clipped = 0.0;
        let mut solve = |i: usize, un: &mut [f64], flux: &mut [f64]| {
            let mut a = 0.0;
            let mut b = base[i];
            if i + 1 < n {
                if g[i] < 0.0 {
                    a += r * -g[i];
                } else {
                    b += r * flux[i];
                }
            }
            if i > 0 {
                if g[i - 1] > 0.0 {
                    a += r * g[i - 1];
                } else {
                    b -= r * flux[i - 1];
                }
            }
            if b < 0.0 {
                clipped -= b;
                b = 0.0;
            }
            let y = solve_cell(a, b, p.m, p.mu);
            un[i] = y;
            let d = mob(y, p.m, p.mu);
            if i + 1 < n && g[i] < 0.0 {
                flux[i] = d * g[i];
            }
            if i > 0 && g[i - 1] > 0.0 {
                flux[i - 1] = d * g[i - 1];
            }
            let lost = a * d - (b - y);
            if p.m == 1.0 && lost > 0.0 {
                // linear mobility can overdraw a cell; the excess is clipping
                clipped += lost;
            }
        };
        // cells with no downstream-to-the-right dependency, left to right
        for i in 0..n {
            if !(i + 1 < n && g[i] > 0.0) {
                solve(i, &mut un, &mut flux);
            }
        }
        for i in (0..n).rev() {
            if i + 1 < n && g[i] > 0.0 {
                solve(i, &mut un, &mut flux);
            }
        }
        let outflow = (un[0] + un[n - 1]) * h;
        un[0] = 0.0;
        un[n - 1] = 0.0;
        StepOutput { u: un, flux, outflow, clipped: clipped * h }
    }

    /// `sum (u_{i+1}-u_i) g_i`, the discrete `int u_x p_x = int |d_x H_s u|^2`.
    fn gradient_energy_rate(u: &[f64], g: &[f64]) -> f64 {
        g.iter().enumerate().map(|(i, gi)| (u[i + 1] - u[i]) * gi).sum()
    }

    /// `sum h d_mu(u_upwind) g^2`, the discrete `int d_mu(u) |p_x|^2`.
    fn pressure_rate(&self, u: &[f64], g: &[f64]) -> f64 {
        let p = &self.params;
        let h = p.grid.h;
        g.iter()
            .enumerate()
            .map(|(i, &gi)| {
                let up = if gi < 0.0 { u[i] } else { u[i + 1] };
                h * mob(up, p.m, p.mu) * gi * gi
            })
            .sum()
    }

    /// `delta int F''(u) |u_x|^2` with `F'' = 1/d_mu`; zero when `delta = 0`.
    fn viscous_rate(&self, u: &[f64]) -> f64 {
        let p = &self.params;
        if p.delta == 0.0 {
            return 0.0;
        }
        let h = p.grid.h;
        (0..u.len() - 1)
            .map(|i| {
                let d = mob(0.5 * (u[i] + u[i + 1]), p.m, p.mu);
                let du = u[i + 1] - u[i];
                if d > 0.0 { du * du / (h * d) } else if du == 0.0 { 0.0 } else { f64::INFINITY }
            })
            .sum()
    }

    fn snapshot(&self, t: f64, u: &[f64], acc: &Accumulators, p: &[f64]) -> Snapshot {
        let h = self.params.grid.h;
        let hs_sq = u.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() * h;
        Snapshot {
            t,
            field: Field { grid: self.params.grid, values: u.to_vec() },
            hs_sq,
            diss_grad_hs: acc.grad_hs,
            diss_pressure: acc.pressure,
            diss_viscous: acc.viscous,
            outflow: acc.outflow,
            clipped: acc.clipped,
        }
    }

    /// Integrates to `t_end`, recording snapshots every `snapshot_every`.
    pub fn run(&self, u0: &Field) -> Result<Trajectory> {
        u0.check_grid(&self.params.grid)?;
        u0.check_nonnegative()?;
        let p = &self.params;
        let mut u = u0.values.clone();
        let n = u.len();
        // Dirichlet cells start empty; their content counts as outflow
        let mut acc = Accumulators { outflow: (u[0] + u[n - 1]) * p.grid.h, ..Default::default() };
        u[0] = 0.0;
        u[n - 1] = 0.0;
        let (mut g, mut pr) = self.op.gradient(&u);
        let mut rates = (Self::gradient_energy_rate(&u, &g), self.pressure_rate(&u, &g), self.viscous_rate(&u));
        let mut traj = Trajectory {
            params: p.clone(),
            snapshots: vec![self.snapshot(0.0, &u, &acc, &pr)],
            steps: 0,
            aborted: None,
        };
        let mut t = 0.0;
        let mut next_snap = 1usize;
        let snap_time = |k: usize| (k as f64 * p.snapshot_every).min(p.t_end);
        while t < p.t_end * (1.0 - 1e-14) {
            let target = snap_time(next_snap);
            let dt_cfl = p.cfl * self.stability_limit(&u).min(p.dt_max);
            let (dt, hits) = if t + dt_cfl >= target * (1.0 - 1e-13) { (target - t, true) } else { (dt_cfl, false) };
            if !(dt > 0.0) {
                traj.aborted = Some(Error::Cfl { dt, limit: dt_cfl });
                break;
            }
            let out = self.step_with_gradient(&u, &g, dt);
            if let Some(i) = out.u.iter().position(|v| !v.is_finite()) {
                traj.aborted = Some(Error::NotFinite { index: i });
                break;
            }
            acc.outflow += out.outflow;
            acc.clipped += out.clipped;
            u = out.u;
            t = if hits { target } else { t + dt };
            let (g1, p1) = self.op.gradient(&u);
            let r1 = (Self::gradient_energy_rate(&u, &g1), self.pressure_rate(&u, &g1), self.viscous_rate(&u));
            acc.grad_hs += 0.5 * dt * (rates.0 + r1.0);
            acc.pressure += 0.5 * dt * (rates.1 + r1.1);
            acc.viscous += 0.5 * dt * (rates.2 + r1.2);
            g = g1;
            pr = p1;
            rates = r1;
            traj.steps += 1;
            if hits {
                traj.snapshots.push(self.snapshot(t, &u, &acc, &pr));
                next_snap += 1;
            }
        }
        Ok(traj)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulators {
    grad_hs: f64,
    pressure: f64,
    viscous: f64,
    outflow: f64,
    clipped: f64,
}

/// Root of `y + a (y+mu)^{m-1} = b` on `[0, b]`.
pub fn solve_cell(a: f64, b: f64, m: f64, mu: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return b;
    }
    if m == 1.0 {
        return (b - a).max(0.0);
    }
    let f0 = a * mob(0.0, m, mu) - b;
    if f0 >= 0.0 {
        return 0.0;
    }
    let guess = if m < 2.0 { b / (1.0 + a * mob(b, m, mu) / (b + mu)) } else { b / (1.0 + a * mob(b, m, mu) / b.max(1e-300)) };
    bracketed_root(0.0, b, guess, |y| {
        let v = y + mu;
        let d = if v > 0.0 { v.powf(m - 1.0) } else { 0.0 };
        let dd = if v > 0.0 { (m - 1.0) * v.powf(m - 2.0) } else { f64::INFINITY };
        (y + a * d - b, 1.0 + a * dd)
    })
}

/// One recorded state with cumulative diagnostics up to its time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: Field,
    /// `<u, p>`: the squared `H_s` seminorm (renormalized for `s >= 1/2`).
    pub hs_sq: f64,
    /// `int_0^t int |d_x H_s u|^2`.
    pub diss_grad_hs: f64,
    /// `int_0^t int d_mu(u) |d_x K_s u|^2`.
    pub diss_pressure: f64,
    /// `int_0^t int |u_x|^2 / d_mu(u)` (times `delta` in the energy balance).
    pub diss_viscous: f64,
    /// Mass that left through the Dirichlet cells.
    pub outflow: f64,
    /// Mass created by clipping negative values.
    pub clipped: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: SimParams,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// Set when the run stopped early; snapshots hold the last valid state.
    pub aborted: Option<Error>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory holds the initial state")
    }
}

/// Convenience wrapper: build an [`Evolver`] and run it.
pub fn run(u0: &Field, params: &SimParams) -> Result<Trajectory> {
    Evolver::new(params.clone())?.run(u0)
}

/// Convenience wrapper for a single step.
pub fn step(u: &Field, params: &SimParams, dt: f64) -> Result<Field> {
    let ev = Evolver::new(params.clone())?;
    let out = ev.step(u, dt)?;
    Ok(Field { grid: params.grid, values: out.u })
}

pub fn cfl_dt(u: &Field, params: &SimParams) -> Result<f64> {
    Ok(Evolver::new(params.clone())?.cfl_dt(u))
}

/// Decreasing parameter sequences for the regularization ladder. Each
/// stage varies one parameter with the others at the first entry of their
/// ladders (later stages keep the last value of earlier ones).
#[derive(Debug, Clone, Default)]
pub struct Ladder {
    pub eps: Vec<f64>,
    /// Box enlargement factors (cells are added at fixed `h`).
    pub box_factor: Vec<usize>,
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LadderRun {
    pub stage: &'static str,
    pub value: f64,
    pub trajectory: Trajectory,
    /// `||u_k(t_end) - u_{k-1}(t_end)||_{L1}`; `None` for the first run.
    pub l1_step: Option<f64>,
}

/// Runs the ladder in the order eps, box, mu, delta.
pub fn regularization_sweep(u0: &dyn Fn(f64) -> f64, base: &SimParams, ladder: &Ladder) -> Result<Vec<LadderRun>> {
    let mut cur = base.clone();
    if let Some(&e) = ladder.eps.first() {
        cur.eps = e;
    }
    if let Some(&m) = ladder.mu.first() {
        cur.mu = m;
    }
    if let Some(&d) = ladder.delta.first() {
        cur.delta = d;
    }
    let mut plan: Vec<(&'static str, f64, SimParams)> = Vec::new();
    let stage = |name: &'static str, vals: &[f64], cur: &mut SimParams, plan: &mut Vec<_>, set: &dyn Fn(&mut SimParams, f64)| {
        for &v in vals {
            set(cur, v);
            plan.push((name, v, cur.clone()));
        }
    };
    stage("eps", &ladder.eps, &mut cur, &mut plan, &|p, v| p.eps = v);
    let base_grid = cur.grid;
    let factors: Vec<f64> = ladder.box_factor.iter().map(|&f| f as f64).collect();
    stage("box", &factors, &mut cur, &mut plan, &|p, v| {
        let f = v as usize;
        let c = 0.5 * (base_grid.x_min + base_grid.x_max);
        let half = 0.5 * (base_grid.x_max - base_grid.x_min) * v;
        p.grid = Grid { x_min: c - half, x_max: c + half, n: base_grid.n * f, h: base_grid.h };
    });
    stage("mu", &ladder.mu, &mut cur, &mut plan, &|p, v| p.mu = v);
    stage("delta", &ladder.delta, &mut cur, &mut plan, &|p, v| p.delta = v);
    if plan.is_empty() {
        plan.push(("base", 0.0, cur.clone()));
    }
    let mut out: Vec<LadderRun> = Vec::new();
    for (name, v, params) in plan {
        let u = Field::from_fn(params.grid, u0);
        let traj = run(&u, &params)?;
        let l1_step = out.last().map(|prev| l1_distance(&prev.trajectory.last().field, &traj.last().field));
        out.push(LadderRun { stage: name, value: v, trajectory: traj, l1_step });
    }
    Ok(out)
}

/// L1 distance of two fields with the same cell width whose cells align;
/// values outside a field count as zero.
pub fn l1_distance(a: &Field, b: &Field) -> f64 {
    let h = a.grid.h;
    let (small, big) = if a.grid.n <= b.grid.n { (a, b) } else { (b, a) };
    let shift = ((small.grid.x_min - big.grid.x_min) / h).round() as usize;
    let mut s = 0.0;
    for (j, v) in big.values.iter().enumerate() {
        let w = if j >= shift && j - shift < small.grid.n { small.values[j - shift] } else { 0.0 };
        s += (v - w).abs();
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(m: f64, s: f64, n: usize, half: f64, t_end: f64) -> SimParams {
        SimParams::new(m, s, Grid::symmetric(half, n).unwrap(), t_end)
    }

    #[test]
    fn mobility_values() {
        assert_eq!(mobility(0.0, 1.5, 0.0).unwrap(), 0.0);
        assert_eq!(mobility(1.0, 2.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(mobility(0.5, 2.5, 0.1).unwrap(), 0.6f64.powf(1.5), max_relative = 1e-15);
        assert!(mobility(-1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn cell_solve_inverts_the_mobility_equation() {
        for &(a, b, m, mu) in &[(0.3, 1.0, 1.5, 0.0), (5.0, 0.01, 1.2, 0.0), (2.0, 3.0, 2.5, 0.1), (1e3, 1e-6, 1.5, 0.0)] {
            let y = solve_cell(a, b, m, mu);
            assert!(y >= 0.0 && y <= b);
            assert_relative_eq!(y + a * (y + mu).powf(m - 1.0), b, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_is_fixed() {
        let p = params(1.5, 0.3, 64, 4.0, 0.1);
        let z = Field::zeros(p.grid);
        let ev = Evolver::new(p).unwrap();
        let out = ev.step(&z, ev.cfl_dt(&z)).unwrap();
        assert!(out.u.iter().all(|v| *v == 0.0));
        assert_eq!(ev.cfl_dt(&z), 0.5 * 1e-2);
    }

    #[test]
    fn step_conserves_interior_mass_and_parity() {
        for &s in &[0.25, 0.5, 0.75] {
            let p = params(1.5, s, 256, 8.0, 0.1);
            let u = Field::from_fn(p.grid, |x| (-x * x).exp());
            let ev = Evolver::new(p).unwrap();
            let out = ev.step(&u, ev.cfl_dt(&u)).unwrap();
            let m0 = u.integral();
            let m1: f64 = out.u.iter().sum::<f64>() * u.grid.h;
            assert!((m1 + out.outflow - m0).abs() < 1e-14 * m0);
            for i in 0..out.u.len() {
                assert!((out.u[i] - out.u[out.u.len() - 1 - i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let p = params(2.0, 0.25, 128, 4.0, 0.1);
        let u = Field::from_fn(p.grid, |x| (-x * x).exp());
        let ev = Evolver::new(p).unwrap();
        let dt = ev.cfl_dt(&u) * 10.0;
        assert!(matches!(ev.step(&u, dt), Err(Error::Cfl { .. })));
    }

    #[test]
    fn viscosity_bounds_the_step() {
        let mut p = params(2.0, 0.25, 128, 4.0, 0.1);
        p.delta = 0.5;
        p.dt_max = 10.0;
        let u = Field::from_fn(p.grid, |x| 1e-6 * (-x * x).exp());
        let dt1 = cfl_dt(&u, &p).unwrap();
        p.delta = 1.0;
        let dt2 = cfl_dt(&u, &p).unwrap();
        assert!(dt2 >= 0.5 * dt1 * (1.0 - 1e-12));
    }

    #[test]
    fn parameter_guards() {
        assert!(Evolver::new(params(3.5, 0.25, 64, 4.0, 1.0)).is_err());
        assert!(Evolver::new(params(1.0, 0.25, 64, 4.0, 1.0)).is_err());
        let mut p = params(1.0, 0.25, 64, 4.0, 1.0);
        p.allow_linear = true;
        assert!(Evolver::new(p).is_ok());
    }

    #[test]
    fn short_run_keeps_invariants() {
        let mut p = params(2.0, 0.25, 256, 8.0, 0.2);
        p.snapshot_every = 0.02;
        let u0 = Field::from_fn(p.grid, |x| (-x * x).exp());
        let tr = run(&u0, &p).unwrap();
        assert!(tr.aborted.is_none());
        assert_eq!(tr.snapshots.len(), 11);
        let m0 = tr.snapshots[0].field.integral();
        for w in tr.snapshots.windows(2) {
            assert!(w[1].field.max() <= w[0].field.max() + 1e-12);
            assert!(w[1].hs_sq <= w[0].hs_sq + 1e-12);
            assert!(w[1].t > w[0].t);
        }
        let last = tr.last();
        assert!((last.field.integral() + last.outflow - tr.snapshots[0].outflow - m0).abs() < 1e-12 * m0);
        assert_eq!(last.clipped, 0.0);
    }

    #[test]
    fn ladder_of_one_matches_run() {
        let mut p = params(1.5, 0.25, 128, 6.0, 0.05);
        p.snapshot_every = 0.05;
        let f = |x: f64| (-x * x).exp();
        let runs = regularization_sweep(&f, &p, &Ladder::default()).unwrap();
        assert_eq!(runs.len(), 1);
        let direct = run(&Field::from_fn(p.grid, f), &p).unwrap();
        assert_eq!(runs[0].trajectory.last().field, direct.last().field);
    }
}
