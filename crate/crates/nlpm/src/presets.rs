//! Ready-made configurations used by the CLI and the acceptance runs.

use crate::config::*;

fn base(name: &str, m: f64, s: f64, half_width: f64, n: usize, t_end: f64, datum: Datum) -> RunConfig {
    RunConfig {
        schema: SCHEMA_VERSION,
        name: name.into(),
        seed: 0,
        output: None,
        plots: false,
        physics: Physics { m, s, eps: 0.0, delta: 0.0, mu: 0.0 },
        grid: GridSpec { x_min: -half_width, x_max: half_width, n },
        time: TimeSpec { t_end, cfl: 0.5, snapshot_every: t_end / 20.0, dt_max: 1.0 },
        datum,
        solvers: Solvers { evolve: true, integrated: false, integrated_cfl: 0.5 },
        diagnostics: Diagnostics {
            enabled: true,
            front_threshold: 1e-8,
            mass_tol: 1e-10,
            linf_slack: 1e-12,
            second_energy_tol: 0.02,
            positivity_probes: Vec::new(),
        },
        barrier: Vec::new(),
    }
}

/// Gaussian datum, `m = 1.5`, `s = 1/2`, on `[-8, 8]`.
pub fn canonical(n: usize) -> RunConfig {
    base("canonical", 1.5, 0.5, 8.0, n, 1.0, Datum::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 })
}

/// `e^{-|x|}/2`, `m = 2.5`, `s = 1/4`, on `[-12, 12]`.
pub fn exp_tail(n: usize) -> RunConfig {
    base("exp_tail", 2.5, 0.25, 12.0, n, 1.0, Datum::ExpTail { amplitude: 0.5, rate: 1.0 })
}

/// Box datum on `[-1, 1]` with both solvers and probes at `x = -2, -4`.
pub fn dichotomy_base(m: f64, s: f64) -> RunConfig {
    let mut c = base(&crate::sweep::cell_name(m, s), m, s, 8.0, 1024, 1.0, Datum::Box { lo: -1.0, hi: 1.0, height: 1.0 });
    c.time.snapshot_every = 0.05;
    c.solvers.integrated = true;
    c.diagnostics.positivity_probes = vec![-2.0, -4.0];
    c
}

/// Lower-barrier certificate for `m = 3/2`, `s = 1/2` on the box datum.
pub fn lower_barrier() -> RunConfig {
    let mut c = dichotomy_base(1.5, 0.5);
    c.name = "lower_barrier".into();
    c.solvers.evolve = false;
    c.time.t_end = 0.5;
    c.time.snapshot_every = 0.025;
    c.diagnostics.positivity_probes.clear();
    c.barrier.push(BarrierSpec::Lower { x0: -0.5, x1: -2.0, t1: 0.2, c1_fraction: 0.25, resolution: 8.0, region_lo: -7.9, slack: 1e-12 });
    c
}

pub fn by_name(name: &str) -> Option<RunConfig> {
    let mut c = match name {
        "canonical" => canonical(2048),
        "exp_tail" => exp_tail(2048),
        "dichotomy_infinite" => dichotomy_base(1.5, 0.25),
        "dichotomy_finite" => dichotomy_base(2.5, 0.25),
        "lower_barrier" => lower_barrier(),
        _ => return None,
    };
    c.name = name.into();
    Some(c)
}

pub const NAMES: &[&str] = &["canonical", "exp_tail", "dichotomy_infinite", "dichotomy_finite", "lower_barrier"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_pass_the_schema_checks() {
        for n in NAMES {
            let c = by_name(n).unwrap();
            assert_eq!(parse_config(&c.to_toml()).unwrap(), c, "{n}");
        }
    }
}
