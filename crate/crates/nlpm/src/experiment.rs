//! One configured run: solve, diagnose, check barriers, write everything,
//! then the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use nlpm_core::barriers::{
    build_lower_barrier, fit_parabola, fit_staged_barrier, fit_upper_barrier, subsolution_residual, verify_lower_barrier,
    ExpTail, LowerInputs, Parabola, Violation,
};
use nlpm_core::diagnostics::{
    conservation, energy_series, first_energy_residual, fit_front, front_trace, second_energy_check, sign_of_u3m_drift,
    EnergyReport, FitWindow, FrontTrace, Regime,
};
use nlpm_core::evolve::{Evolver, Trajectory};
use nlpm_core::grid::Field;
use nlpm_core::integrated::{
    consistency_check, holder_time_modulus, positivity_certificate, positivity_floor, IntegratedScheme,
    IntegratedTrajectory, Modulus,
};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{BarrierSpec, RunConfig, SCHEMA_VERSION};
use crate::datum;
use crate::io::{csv, field_csv, hash_f64s, num, RunDir};
use crate::plot::{Chart, Series};

/// What a finished run reports back to the caller.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Value,
    /// 0 when every check passed and no module failed, 1 otherwise.
    pub exit_code: i32,
    pub regime: Option<Regime>,
}

impl RunOutcome {
    pub fn summary(&self, key: &str) -> Option<&Value> {
        self.manifest.get("summary").and_then(|s| s.get(key))
    }

    pub fn check(&self, key: &str) -> Option<bool> {
        self.manifest.get("checks").and_then(|c| c.get(key)).and_then(Value::as_bool)
    }
}

#[derive(Default)]
struct Record {
    summary: Map<String, Value>,
    checks: BTreeMap<String, bool>,
    errors: Vec<String>,
}

impl Record {
    fn put(&mut self, k: &str, v: impl Into<Value>) {
        self.summary.insert(k.to_string(), v.into());
    }

    fn fail(&mut self, stage: &str, e: impl std::fmt::Display) {
        self.errors.push(format!("{stage}: {e}"));
    }
}

/// Runs the config into `root/<name>`. Errors only for I/O problems; module
/// errors are recorded in the manifest and give exit code 1.
pub fn run_experiment(cfg: &RunConfig, root: &Path) -> Result<RunOutcome> {
    let mut dir = RunDir::create(&root.join(&cfg.name))?;
    dir.write("config.toml", cfg.to_toml().as_bytes())?;
    let mut rec = Record::default();
    let grid = cfg.grid();
    let s = cfg.physics.s;
    let mut kernel_hash = Sha256::new();

    let mut traj: Option<Trajectory> = None;
    let mut u0_hash = Value::Null;
    if cfg.solvers.evolve {
        match datum::density(&cfg.datum, &grid, s) {
            Ok(u0) => {
                u0_hash = hash_f64s(&u0.values).into();
                match Evolver::new(cfg.sim_params()) {
                    Ok(ev) => {
                        kernel_hash.update(hash_f64s(ev.op.kernel().raw_weights()));
                        match ev.run(&u0) {
                            Ok(t) => {
                                if let Some(e) = &t.aborted {
                                    rec.fail("evolve", e);
                                }
                                rec.put("evolve_steps", t.steps);
                                traj = Some(t);
                            }
                            Err(e) => rec.fail("evolve", e),
                        }
                    }
                    Err(e) => rec.fail("evolve", e),
                }
            }
            Err(e) => rec.fail("datum", e),
        }
    }
    if let Some(t) = &traj {
        let mut index = Vec::new();
        for (k, snap) in t.snapshots.iter().enumerate() {
            dir.write(&format!("snapshots/u_{k:04}.csv"), field_csv(&snap.field, "u").as_bytes())?;
            index.push(vec![k.to_string(), num(snap.t)]);
        }
        dir.write("snapshots/u_index.csv", csv(&["k", "t"], &index).as_bytes())?;
    }

    let mut vtraj: Option<IntegratedTrajectory> = None;
    if cfg.solvers.integrated {
        let built = datum::integrated(&cfg.datum, &grid, s)
            .and_then(|v0| Ok((v0, IntegratedScheme::new(&grid, cfg.physics.m, 1.0 - s)?)));
        match built {
            Ok((v0, scheme)) => {
                if u0_hash.is_null() {
                    u0_hash = hash_f64s(&v0.v.values).into();
                }
                kernel_hash.update(hash_f64s(scheme.operator().raw_weights()));
                match scheme.run(&v0, cfg.time.t_end, cfg.time.snapshot_every, cfg.solvers.integrated_cfl) {
                    Ok(vt) => {
                        rec.put("integrated_steps", vt.steps);
                        vtraj = Some(vt);
                    }
                    Err(e) => rec.fail("integrated", e),
                }
            }
            Err(e) => rec.fail("integrated", e),
        }
    }
    if let Some(vt) = &vtraj {
        let mut index = Vec::new();
        for (k, (t, v)) in vt.times.iter().zip(&vt.states).enumerate() {
            dir.write(&format!("snapshots/v_{k:04}.csv"), field_csv(v, "v").as_bytes())?;
            index.push(vec![k.to_string(), num(*t)]);
        }
        dir.write("snapshots/v_index.csv", csv(&["k", "t"], &index).as_bytes())?;
    }

    let mut regime = None;
    let mut series = Vec::new();
    let mut trace = None;
    if cfg.diagnostics.enabled {
        let mut bounded = None;
        if let Some(t) = &traj {
            series = energy_series(t);
            trace = diagnose_density(cfg, t, &series, &mut rec, &mut bounded);
            dir.write("diagnostics.csv", diagnostics_csv(&series, trace.as_ref()).as_bytes())?;
        }
        let mut positive = None;
        if let Some(vt) = &vtraj {
            positive = diagnose_integrated(cfg, vt, &mut rec);
            if let Some(t) = &traj {
                match consistency_check(t, vt) {
                    Ok(gap) => rec.put("consistency_gap", gap),
                    Err(e) => rec.fail("consistency", e),
                }
            }
        }
        if positive.is_some() || bounded.is_some() {
            let r = Regime::classify(positive.unwrap_or(false), bounded);
            rec.put("regime", r.label());
            regime = Some(r);
        }
    }

    for (i, spec) in cfg.barrier.iter().enumerate() {
        let report = run_barrier(cfg, spec, traj.as_ref(), vtraj.as_ref());
        let pass = report.get("pass").and_then(Value::as_bool).unwrap_or(false);
        if let Some(e) = report.get("error").and_then(Value::as_str) {
            rec.fail(&format!("barrier {i} ({})", spec.kind()), e);
        }
        rec.checks.insert(format!("barrier_{i}_{}", spec.kind()), pass);
        dir.write(&format!("barriers/{i}_{}.json", spec.kind()), pretty(&report).as_bytes())?;
    }

    if cfg.plots {
        for (name, chart) in charts(traj.as_ref(), vtraj.as_ref(), &series, trace.as_ref()) {
            dir.write(&format!("plots/{name}.svg"), chart.to_svg().as_bytes())?;
        }
    }

    let exit_code = if rec.errors.is_empty() && rec.checks.values().all(|&c| c) { 0 } else { 1 };
    let kernel_hash: String = kernel_hash.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "run",
        "name": cfg.name,
        "status": if rec.errors.is_empty() { "complete" } else { "error" },
        "exit_code": exit_code,
        "errors": rec.errors,
        "checks": rec.checks,
        "summary": rec.summary,
        "kernel_tables_sha256": kernel_hash,
        "u0_sha256": u0_hash,
        "config": serde_json::to_value(cfg)?,
        "files": dir.files,
    });
    dir.write_manifest(pretty(&manifest).as_bytes())?;
    Ok(RunOutcome { dir: dir.root, manifest, exit_code, regime })
}

pub(crate) fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn diagnose_density(
    cfg: &RunConfig,
    t: &Trajectory,
    series: &[EnergyReport],
    rec: &mut Record,
    bounded: &mut Option<bool>,
) -> Option<FrontTrace> {
    let d = &cfg.diagnostics;
    match conservation(series, d.linf_slack) {
        Ok(c) => {
            rec.put("mass_drift", c.mass_drift);
            rec.checks.insert("mass".into(), c.mass_drift <= d.mass_tol);
            rec.checks.insert("linf_monotone".into(), c.linf_monotone);
            rec.checks.insert("l2_monotone".into(), c.l2_monotone);
            rec.checks.insert("l3_monotone".into(), c.l3_monotone);
        }
        Err(e) => rec.fail("conservation", e),
    }
    match first_energy_residual(t) {
        Ok(r) => rec.put("first_energy_residual", r),
        Err(e) => rec.put("first_energy_residual", e.to_string()),
    }
    let se = second_energy_check(t, d.second_energy_tol);
    rec.put("second_energy_max_excess", se.max_excess);
    rec.checks.insert("second_energy".into(), se.holds);
    match sign_of_u3m_drift(t) {
        Ok((trend, frac)) => {
            rec.put("u3m_drift", trend.label());
            rec.put("u3m_drift_fraction", frac);
        }
        Err(e) => rec.put("u3m_drift", e.to_string()),
    }
    let threshold = d.front_threshold * t.snapshots[0].field.max();
    let trace = match front_trace(t, threshold) {
        Ok(tr) => tr,
        Err(e) => {
            rec.fail("front", e);
            return None;
        }
    };
    match fit_front(&trace, cfg.physics.s, cfg.grid().h, FitWindow::default()) {
        Ok(f) => {
            rec.put("front_exponent", f.exponent);
            rec.put("front_exponent_predicted", f.predicted);
            rec.put("front_c_bound", f.c_bound);
            rec.put("front_bounded", f.bounded);
            *bounded = Some(f.bounded);
        }
        // a front that does not move is not a module failure
        Err(e) => rec.put("front_fit", e.to_string()),
    }
    Some(trace)
}

fn diagnose_integrated(cfg: &RunConfig, vt: &IntegratedTrajectory, rec: &mut Record) -> Option<bool> {
    match holder_time_modulus(vt) {
        Ok(Modulus::Exponent(a)) => rec.put("holder_exponent", a),
        Ok(Modulus::Flat) => rec.put("holder_exponent", "flat"),
        Err(e) => rec.put("holder_exponent", e.to_string()),
    }
    let probes = &cfg.diagnostics.positivity_probes;
    if probes.is_empty() {
        return None;
    }
    match positivity_certificate(vt, probes, positivity_floor(vt.mass)) {
        Ok((lo, ok)) => {
            rec.put("positivity_min", lo);
            rec.put("positivity_floor", positivity_floor(vt.mass));
            rec.put("positive", ok);
            Some(ok)
        }
        Err(e) => {
            rec.fail("positivity", e);
            None
        }
    }
}

fn diagnostics_csv(series: &[EnergyReport], trace: Option<&FrontTrace>) -> String {
    let header = [
        "t", "mass", "linf", "l2", "l3", "f_mu", "hs_sq", "diss_grad_hs", "diss_pressure", "front_left", "front_right",
    ];
    let rows: Vec<Vec<String>> = series
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let (l, rt) = trace.map_or((f64::NAN, f64::NAN), |tr| (tr.left[k], tr.right[k]));
            vec![
                num(r.t),
                num(r.mass),
                num(r.linf),
                num(r.l2),
                num(r.l3),
                num(r.f_mu.unwrap_or(f64::NAN)),
                num(r.hs_sq),
                num(r.diss_grad_hs),
                num(r.diss_pressure),
                num(l),
                num(rt),
            ]
        })
        .collect();
    csv(&header, &rows)
}

fn violation_json(v: &Option<Violation>) -> Value {
    match v {
        None => Value::Null,
        Some(v) => json!({ "x": v.x, "t": v.t, "gap": v.gap }),
    }
}

fn region(cfg: &RunConfig) -> Value {
    json!({ "x_min": cfg.grid.x_min, "x_max": cfg.grid.x_max, "t_min": 0.0, "t_max": cfg.time.t_end })
}

/// Fits or verifies one barrier; the report always names the family, the
/// parameters, the region and the verdict.
fn run_barrier(cfg: &RunConfig, spec: &BarrierSpec, traj: Option<&Trajectory>, vt: Option<&IntegratedTrajectory>) -> Value {
    let mut out = json!({
        "family": spec.kind(),
        "spec": serde_json::to_value(spec).expect("plain data"),
        "region": region(cfg),
    });
    let res: std::result::Result<Value, String> = match (spec, traj, vt) {
        (BarrierSpec::ExpTail { amp, rate, growth_start, slack, max_doublings }, Some(t), _) => {
            ExpTail::new(*amp, *rate, *growth_start)
                .and_then(|start| fit_upper_barrier(t, start, *slack, *max_doublings))
                .map(|(fit, ladder)| {
                    let ladder: Vec<Value> = ladder.iter().map(|(c, ok)| json!({ "growth": c, "holds": ok })).collect();
                    json!({ "pass": fit.is_some(), "growth": fit.map(|f| f.growth), "ladder": ladder })
                })
                .map_err(|e| e.to_string())
        }
        (BarrierSpec::Staged { amp, rate, growth_start, max_stages, slack }, Some(t), _) => {
            fit_staged_barrier(t, *amp, *rate, cfg.physics.s, *max_stages, *growth_start, *slack)
                .map(|st| {
                    let stages: Vec<Value> = st
                        .stages
                        .iter()
                        .map(|g| json!({ "t0": g.t0, "t1": g.t1, "amp": g.amp, "growth": g.growth }))
                        .collect();
                    json!({ "pass": true, "q": st.q, "q_window_empty": st.q_window_empty, "horizon": st.horizon(), "stages": stages })
                })
                .map_err(|e| e.to_string())
        }
        (BarrierSpec::Parabola { a, b, c_start, slack, max_doublings }, Some(t), _) => {
            Parabola::new(*a, *b, *c_start)
                .and_then(|p| fit_parabola(t, p, *slack, *max_doublings))
                .map(|fit| json!({ "pass": fit.is_some(), "c": fit.map(|p| p.c) }))
                .map_err(|e| e.to_string())
        }
        (BarrierSpec::Lower { x0, x1, t1, c1_fraction, resolution, region_lo, slack }, _, Some(v)) => {
            lower_pipeline(cfg, v, *x0, *x1, *t1, *c1_fraction, *resolution, *region_lo, *slack)
        }
        _ => Err("the solver this barrier checks did not produce a trajectory".into()),
    };
    let obj = out.as_object_mut().expect("object literal");
    match res {
        Ok(Value::Object(m)) => obj.extend(m),
        Ok(other) => {
            obj.insert("result".into(), other);
        }
        Err(e) => {
            obj.insert("pass".into(), false.into());
            obj.insert("error".into(), e.into());
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn lower_pipeline(
    cfg: &RunConfig,
    v: &IntegratedTrajectory,
    x0: f64,
    x1: f64,
    t1: f64,
    c1_fraction: f64,
    resolution: f64,
    region_lo: f64,
    slack: f64,
) -> std::result::Result<Value, String> {
    let grid = cfg.grid();
    let i0 = grid.cell_of(x0).ok_or("x0 outside the grid")?;
    let i1 = grid.cell_of(x1).ok_or("x1 outside the grid")?;
    let k1 = v.states.iter().map(|f| f.values[i0]).fold(f64::INFINITY, f64::min);
    let inputs = LowerInputs { x0: grid.x(i0), x1: grid.x(i1), t1, k1, c1: c1_fraction * k1, resolution };
    let bar = build_lower_barrier(cfg.physics.m, 1.0 - cfg.physics.s, inputs).map_err(|e| e.to_string())?;
    let residual = subsolution_residual(&bar, region_lo, resolution).map_err(|e| e.to_string())?;
    let violation = verify_lower_barrier(v, &bar, region_lo, slack).map_err(|e| e.to_string())?;
    // snapshot closest to t1
    let k = v
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t1).abs().total_cmp(&(b.1 - t1).abs()))
        .map(|(k, _)| k)
        .ok_or("empty trajectory")?;
    let tk = v.times[k];
    let value = v.states[k].values[i1];
    let phi = bar.eval(grid.x(i1), tk);
    let horizon_ok = tk < bar.t_max;
    let certified = residual.holds && violation.is_none() && horizon_ok && phi > 0.0 && value >= phi;
    Ok(json!({
        "pass": certified,
        "region": { "x_min": region_lo, "x_max": inputs.x0, "t_min": 0.0, "t_max": bar.t_max.min(cfg.time.t_end) },
        "k1": k1,
        "c1": inputs.c1,
        "radius": bar.g.radius,
        "eps": bar.eps,
        "xi": bar.xi,
        "c2": bar.c2,
        "c3": bar.c3,
        "t_max": bar.t_max,
        "horizon_ok": horizon_ok,
        "residual_max_rel": residual.max_rel,
        "residual_slack": residual.slack,
        "residual_holds": residual.holds,
        "violation": violation_json(&violation),
        "certificate": { "x": grid.x(i1), "t": tk, "v": value, "phi": phi },
    }))
}

fn charts(
    traj: Option<&Trajectory>,
    vt: Option<&IntegratedTrajectory>,
    series: &[EnergyReport],
    trace: Option<&FrontTrace>,
) -> Vec<(&'static str, Chart)> {
    fn waterfall(fields: Vec<(f64, &Field)>, y: &str) -> Chart {
        let pick = (fields.len() / 8).max(1);
        let series = fields
            .iter()
            .enumerate()
            .filter(|(k, _)| k % pick == 0 || *k + 1 == fields.len())
            .map(|(_, (t, f))| Series {
                label: format!("t = {t:.3}"),
                points: f.values.iter().enumerate().map(|(i, &v)| (f.grid.x(i), v)).collect(),
            })
            .collect();
        Chart { title: format!("{y}(x, t)"), x_label: "x".into(), y_label: y.into(), log_y: false, series }
    }
    let mut out = Vec::new();
    if let Some(t) = traj {
        out.push(("waterfall_u", waterfall(t.snapshots.iter().map(|s| (s.t, &s.field)).collect(), "u")));
    }
    if let Some(v) = vt {
        out.push(("waterfall_v", waterfall(v.times.iter().copied().zip(&v.states).collect(), "v")));
    }
    if let Some(tr) = trace {
        let pts = |xs: &[f64]| tr.times.iter().copied().zip(xs.iter().copied()).collect();
        out.push((
            "front",
            Chart {
                title: "support edges".into(),
                x_label: "t".into(),
                y_label: "x".into(),
                log_y: false,
                series: vec![Series { label: "left".into(), points: pts(&tr.left) }, Series { label: "right".into(), points: pts(&tr.right) }],
            },
        ));
    }
    if !series.is_empty() {
        let line = |label: &str, f: &dyn Fn(&EnergyReport) -> f64| Series {
            label: label.into(),
            points: series.iter().map(|r| (r.t, f(r))).collect(),
        };
        out.push((
            "energy",
            Chart {
                title: "norms and energies".into(),
                x_label: "t".into(),
                y_label: "value".into(),
                log_y: true,
                series: vec![
                    line("sup", &|r| r.linf),
                    line("L2", &|r| r.l2),
                    line("L3", &|r| r.l3),
                    line("<u,p>", &|r| r.hs_sq),
                ],
            },
        ));
    }
    out
}
