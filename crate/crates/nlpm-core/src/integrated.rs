//! Monotone scheme for the integrated equation
//! `v_t = -|v_x|^{m-1} (-Delta)^alpha v`, `alpha = 1 - s`, where `v` is the
//! primitive of the density.
//!
//! The Hamiltonian is upwinded by the sign of `L v`. Where `L v < 0` the
//! profile rises and information comes from the right, so the forward
//! difference is used; where `L v > 0` it falls and the backward difference
//! is used. The one-sided difference is taken against the neighbor's new
//! value, which turns each cell update into a scalar root bracketed by that
//! neighbor and keeps the update monotone even when `m - 1 < 1` makes the
//! Hamiltonian non-Lipschitz at zero slope.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed when a dependency links std
use num_traits::Float;

use crate::error::{check_param, Error, Result};
use crate::evolve::Trajectory;
use crate::fracops::{build_frac_laplacian, OperatorKernel, TailModel};
use crate::grid::{Field, Grid};
use crate::math::{bracketed_root, loglog_slope};

/// Non-decreasing primitive with its total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedState {
    pub v: Field,
    pub mass: f64,
}

impl IntegratedState {
    /// Checks range and monotonicity with slack `tol * mass`.
    pub fn check(&self, tol: f64) -> Result<()> {
        let slack = tol * self.mass.abs().max(f64::MIN_POSITIVE);
        for (i, w) in self.v.values.windows(2).enumerate() {
            if !w[1].is_finite() {
                return Err(Error::NotFinite { index: i + 1 });
            }
            if w[1] < w[0] - slack {
                return Err(Error::Monotonicity { index: i + 1, drop: w[0] - w[1] });
            }
        }
        if self.v.min() < -slack || self.v.max() > self.mass + slack {
            return Err(Error::Precondition("primitive left the range [0, M]"));
        }
        Ok(())
    }
}

/// `v_i = h sum_{j <= i} u_j`; the mass is the last entry.
pub fn cumulative(u: &Field) -> Result<IntegratedState> {
    u.check_nonnegative()?;
    let h = u.grid.h;
    let mut acc = 0.0;
    let values: Vec<f64> = u
        .values
        .iter()
        .map(|&x| {
            acc += x * h;
            acc
        })
        .collect();
    Ok(IntegratedState { v: Field { grid: u.grid, values }, mass: acc })
}

/// `(v_i - v_{i-1})/h` with `v_{-1} = 0`.
pub fn density(state: &IntegratedState) -> Field {
    let h = state.v.grid.h;
    let v = &state.v.values;
    let values = (0..v.len()).map(|i| (v[i] - if i > 0 { v[i - 1] } else { 0.0 }) / h).collect();
    Field { grid: state.v.grid, values }
}

/// Stepper for one `(m, alpha)` on one grid.
#[derive(Debug, Clone)]
pub struct IntegratedScheme {
    pub m: f64,
    pub alpha: f64,
    op: OperatorKernel,
    w_tot: f64,
}

impl IntegratedScheme {
    pub fn new(grid: &Grid, m: f64, alpha: f64) -> Result<Self> {
        check_param(m > 1.0 && m < 3.0, "m", m, "existence range is 1 < m < 3")?;
        check_param(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "order must lie in (0,1)")?;
        // constant continuation reproduces the limits 0 and M at infinity
        let op = build_frac_laplacian(grid, alpha)?.with_tail(TailModel::Edge);
        let w_tot = op.max_diagonal();
        Ok(Self { m, alpha, op, w_tot })
    }

    pub fn operator(&self) -> &OperatorKernel {
        &self.op
    }

    /// Largest row sum of the discrete operator.
    pub fn lambda_max(&self) -> f64 {
        self.w_tot
    }

    /// Stable step: `dt max|D v|^{m-1} lambda_max = cfl`.
    pub fn cfl_dt(&self, state: &IntegratedState, cfl: f64) -> f64 {
        let h = state.v.grid.h;
        let dmax = state.v.values.windows(2).map(|w| (w[1] - w[0]) / h).fold(0.0, f64::max);
        let rate = dmax.powf(self.m - 1.0) * self.w_tot;
        if rate > 0.0 { cfl / rate } else { f64::INFINITY }
    }

    /// One step. Boundary cells stay at `0` and `M`.
    pub fn step(&self, state: &IntegratedState, dt: f64) -> Result<IntegratedState> {
        state.v.check_grid(&self.op.grid)?;
        let limit = self.cfl_dt(state, 1.0);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl { dt, limit });
        }
        let v = &state.v.values;
        let n = v.len();
        let h = state.v.grid.h;
        let m = self.m;
        let lv = self.op.apply(&state.v)?.values;
        #[derive(Clone, Copy, PartialEq)]
        enum Kind {
            Fixed,
            Rise,
            Fall,
        }
        let kind: Vec<Kind> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 || lv[i] == 0.0 {
                    Kind::Fixed
                } else if lv[i] < 0.0 {
                    Kind::Rise
                } else {
                    Kind::Fall
                }
            })
            .collect();
        let mut out = v.clone();
        out[0] = 0.0;
        out[n - 1] = state.mass;
        // falling cells lean on their left neighbor, left to right
        for i in 1..n - 1 {
            if kind[i] != Kind::Fall {
                continue;
            }
            let l = if kind[i - 1] == Kind::Rise { v[i - 1] } else { out[i - 1] };
            let c = dt * lv[i];
            let vi = v[i];
            out[i] = if l >= vi {
                vi
            } else {
                bracketed_root(l, vi, vi, |y| {
                    let g = ((y - l) / h).max(0.0);
                    (y - vi + c * g.powf(m - 1.0), 1.0 + c * (m - 1.0) * g.powf(m - 2.0) / h)
                })
            };
        }
        // rising cells lean on their right neighbor, right to left
        for i in (1..n - 1).rev() {
            if kind[i] != Kind::Rise {
                continue;
            }
            let r = if kind[i + 1] == Kind::Fall { v[i + 1] } else { out[i + 1] };
            let c = -dt * lv[i];
            let vi = v[i];
            out[i] = if r <= vi {
                vi
            } else {
                bracketed_root(vi, r, vi, |y| {
                    let g = ((r - y) / h).max(0.0);
                    (y - vi - c * g.powf(m - 1.0), 1.0 + c * (m - 1.0) * g.powf(m - 2.0) / h)
                })
            };
        }
        let next = IntegratedState { v: Field { grid: state.v.grid, values: out }, mass: state.mass };
        next.check(1e-10)?;
        Ok(next)
    }

    pub fn run(&self, v0: &IntegratedState, t_end: f64, snapshot_every: f64, cfl: f64) -> Result<IntegratedTrajectory> {
        check_param(t_end > 0.0, "t_end", t_end, "must be positive")?;
        check_param(snapshot_every > 0.0, "snapshot_every", snapshot_every, "must be positive")?;
        check_param(cfl > 0.0 && cfl <= 1.0, "cfl", cfl, "safety factor must lie in (0,1]")?;
        v0.check(1e-10)?;
        let mut state = v0.clone();
        let n = state.v.len();
        state.v.values[0] = 0.0;
        state.v.values[n - 1] = state.mass;
        let mut traj = IntegratedTrajectory {
            m: self.m,
            alpha: self.alpha,
            mass: state.mass,
            times: vec![0.0],
            states: vec![state.v.clone()],
            steps: 0,
        };
        let mut t = 0.0;
        let mut k = 1usize;
        while t < t_end * (1.0 - 1e-14) {
            let target = (k as f64 * snapshot_every).min(t_end);
            let dt_cfl = self.cfl_dt(&state, cfl);
            let (dt, hits) = if t + dt_cfl >= target * (1.0 - 1e-13) { (target - t, true) } else { (dt_cfl, false) };
            state = self.step(&state, dt)?;
            t = if hits { target } else { t + dt };
            traj.steps += 1;
            if hits {
                traj.times.push(t);
                traj.states.push(state.v.clone());
                k += 1;
            }
        }
        Ok(traj)
    }
}

/// Recorded primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratedTrajectory {
    pub m: f64,
    pub alpha: f64,
    pub mass: f64,
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    pub steps: usize,
}

/// Convenience wrapper for a single step.
pub fn step_integrated(state: &IntegratedState, m: f64, alpha: f64, dt: f64) -> Result<IntegratedState> {
    IntegratedScheme::new(&state.v.grid, m, alpha)?.step(state, dt)
}

/// Largest `|cumulative(u(t)) - v(t)|_inf / M` over the shared snapshot times.
pub fn consistency_check(u_traj: &Trajectory, v_traj: &IntegratedTrajectory) -> Result<f64> {
    if u_traj.snapshots.len() != v_traj.times.len() {
        return Err(Error::GridMismatch { want: u_traj.snapshots.len(), got: v_traj.times.len() });
    }
    let mut worst = 0.0f64;
    for (s, (t, v)) in u_traj.snapshots.iter().zip(v_traj.times.iter().zip(&v_traj.states)) {
        s.field.check_grid(&v.grid)?;
        if (s.t - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Precondition("snapshot times differ"));
        }
        let c = cumulative(&s.field)?;
        let d = c.v.values.iter().zip(&v.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    Ok(if v_traj.mass > 0.0 { worst / v_traj.mass } else { worst })
}

/// Smallest value of `v` at the probe points over snapshots with `t > 0`,
/// and whether it stays above `floor`.
pub fn positivity_certificate(traj: &IntegratedTrajectory, probes: &[f64], floor: f64) -> Result<(f64, bool)> {
    let grid = traj.states.first().ok_or(Error::Insufficient("empty trajectory"))?.grid;
    let cells: Vec<usize> = probes
        .iter()
        .map(|&x| grid.cell_of(x).ok_or(Error::Precondition("probe outside the grid")))
        .collect::<Result<_>>()?;
    if traj.times.len() < 2 {
        return Err(Error::Insufficient("need a snapshot after t = 0"));
    }
    let mut lo = f64::INFINITY;
    for st in &traj.states[1..] {
        for &i in &cells {
            lo = lo.min(st.values[i]);
        }
    }
    Ok((lo, lo > floor))
}

/// `100` units of round-off relative to the mass.
pub fn positivity_floor(mass: f64) -> f64 {
    100.0 * 0.5 * f64::EPSILON * mass
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulus {
    /// No snapshot differs from any other.
    Flat,
    Exponent(f64),
}

/// Fitted exponent of `sup_x |v(t_j) - v(t_i)|` against `t_j - t_i` over all
/// pairs of positive-time snapshots.
pub fn holder_time_modulus(traj: &IntegratedTrajectory) -> Result<Modulus> {
    if traj.times.len() < 8 {
        return Err(Error::Insufficient("need at least 8 snapshots"));
    }
    let mut dt = Vec::new();
    let mut dv = Vec::new();
    for i in 1..traj.times.len() {
        for j in i + 1..traj.times.len() {
            let d = traj.states[i].values.iter().zip(&traj.states[j].values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            dt.push(traj.times[j] - traj.times[i]);
            dv.push(d);
        }
    }
    if dv.iter().all(|&d| d == 0.0) {
        return Ok(Modulus::Flat);
    }
    loglog_slope(&dt, &dv).map(Modulus::Exponent).ok_or(Error::Insufficient("degenerate fit"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn heaviside(g: Grid, x0: f64, mass: f64) -> IntegratedState {
        IntegratedState { v: Field::from_fn(g, |x| if x >= x0 { mass } else { 0.0 }), mass }
    }

    #[test]
    fn cumulative_round_trip() {
        let g = Grid::symmetric(3.0, 64).unwrap();
        let z = cumulative(&Field::zeros(g)).unwrap();
        assert_eq!(z.mass, 0.0);
        assert!(z.v.values.iter().all(|&v| v == 0.0));
        let mut u = Field::zeros(g);
        u.values[20] = 1.0 / g.h;
        let c = cumulative(&u).unwrap();
        assert!((c.mass - 1.0).abs() < 1e-14);
        assert!(c.v.values[..20].iter().all(|&v| v == 0.0));
        assert!(c.v.values[20..].iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let u = Field::from_fn(g, |x| (-x * x).exp());
        let back = density(&cumulative(&u).unwrap());
        for (a, b) in back.values.iter().zip(&u.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plateau_is_stationary() {
        // a constant primitive has zero slope and zero operator
        let g = Grid::symmetric(4.0, 128).unwrap();
        let st = IntegratedState { v: Field::from_fn(g, |_| 0.0), mass: 0.0 };
        let sch = IntegratedScheme::new(&g, 1.5, 0.5).unwrap();
        let next = sch.step(&st, 1e-3).unwrap();
        assert_eq!(next.v.values, st.v.values);
    }

    #[test]
    fn step_lifts_everything_left_of_a_jump() {
        let g = Grid::symmetric(4.0, 128).unwrap();
        let st = heaviside(g, 0.0, 1.0);
        let sch = IntegratedScheme::new(&g, 1.5, 0.5).unwrap();
        let dt = sch.cfl_dt(&st, 0.5);
        let next = sch.step(&st, dt).unwrap();
        let jump = g.cell_of(0.0).unwrap();
        for i in 1..jump {
            assert!(next.v.values[i] > st.v.values[i], "cell {i} did not rise");
        }
    }

    #[test]
    fn operator_of_a_step_is_negative_left_of_the_jump() {
        // direct quadrature: (-Delta)^a H(x) = -C int_0^inf (y - x)^{-1-2a} dy = -C |x|^{-2a}/(2a) for x < 0
        let alpha = 0.5;
        let g = Grid::symmetric(4.0, 256).unwrap();
        let st = heaviside(g, 0.0, 1.0);
        let sch = IntegratedScheme::new(&g, 1.5, alpha).unwrap();
        let lv = sch.operator().apply(&st.v).unwrap();
        let c = crate::fracops::frac_laplacian_constant(alpha);
        for i in [40usize, 80, 110] {
            let x = g.x(i);
            let exact = -c * x.abs().powf(-2.0 * alpha) / (2.0 * alpha);
            assert!(lv.values[i] < 0.0);
            assert!((lv.values[i] - exact).abs() < 0.02 * exact.abs(), "{} vs {}", lv.values[i], exact);
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let g = Grid::symmetric(4.0, 64).unwrap();
        let st = heaviside(g, 0.0, 1.0);
        let sch = IntegratedScheme::new(&g, 1.5, 0.5).unwrap();
        let dt = sch.cfl_dt(&st, 1.0);
        assert!(matches!(sch.step(&st, 2.0 * dt), Err(Error::Cfl { .. })));
    }

    #[test]
    fn ordered_pairs_stay_ordered() {
        let g = Grid::symmetric(4.0, 96).unwrap();
        let sch = IntegratedScheme::new(&g, 1.5, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut incr: Vec<f64> = (0..g.n).map(|_| if rng.random::<f64>() < 0.3 { rng.random::<f64>() } else { 0.0 }).collect();
            incr[0] = 0.0;
            let a: Vec<f64> = incr.iter().scan(0.0, |s, x| { *s += x; Some(*s) }).collect();
            let mass = *a.last().unwrap();
            let b: Vec<f64> = a.iter().enumerate().map(|(i, &x)| if i == 0 { 0.0 } else { (x + rng.random::<f64>() * 0.3).min(mass) }).collect();
            let b: Vec<f64> = b.iter().scan(0.0f64, |s, &x| { *s = s.max(x); Some(*s) }).collect();
            let sa = IntegratedState { v: Field { grid: g, values: a }, mass };
            let sb = IntegratedState { v: Field { grid: g, values: b }, mass };
            let dt = sch.cfl_dt(&sa, 0.5).min(sch.cfl_dt(&sb, 0.5));
            let na = sch.step(&sa, dt).unwrap();
            let nb = sch.step(&sb, dt).unwrap();
            for (x, y) in na.v.values.iter().zip(&nb.v.values) {
                assert!(x <= &(y + 1e-10 * mass));
            }
        }
    }

    #[test]
    fn compact_primitive_fails_the_certificate() {
        let g = Grid::symmetric(4.0, 64).unwrap();
        let v = heaviside(g, 0.0, 1.0).v;
        let tr = IntegratedTrajectory { m: 1.5, alpha: 0.5, mass: 1.0, times: alloc::vec![0.0, 1.0], states: alloc::vec![v.clone(), v], steps: 1 };
        let (lo, ok) = positivity_certificate(&tr, &[-2.0], positivity_floor(1.0)).unwrap();
        assert_eq!(lo, 0.0);
        assert!(!ok);
        assert!(positivity_certificate(&tr, &[-9.0], 0.0).is_err());
    }

    #[test]
    fn holder_modulus_sentinels() {
        let g = Grid::symmetric(4.0, 64).unwrap();
        let flat = IntegratedTrajectory {
            m: 1.5,
            alpha: 0.5,
            mass: 0.0,
            times: (0..9).map(|k| k as f64).collect(),
            states: alloc::vec![Field::zeros(g); 9],
            steps: 8,
        };
        assert_eq!(holder_time_modulus(&flat).unwrap(), Modulus::Flat);
        let short = IntegratedTrajectory { times: alloc::vec![0.0; 3], states: alloc::vec![Field::zeros(g); 3], ..flat };
        assert!(holder_time_modulus(&short).is_err());
    }
}
