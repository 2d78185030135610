use std::fs;
use std::path::Path;

use nlpm::config::{parse_config, BarrierSpec, Datum, RunConfig};
use nlpm::io::{read_manifest, MANIFEST};
use nlpm::presets::dichotomy_base;
use nlpm::sweep::{parse_plan, run_sweep, SweepPlan};
use nlpm::{report, run_experiment};
use nlpm_core::diagnostics::Regime;

fn small(m: f64, s: f64) -> RunConfig {
    let mut c = dichotomy_base(m, s);
    c.grid.n = 256;
    c.time.t_end = 0.2;
    c.time.snapshot_every = 0.02;
    c
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn rerun_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(1.5, 0.25);
    cfg.plots = true;
    let a = run_experiment(&cfg, &tmp.path().join("a")).unwrap();
    let b = run_experiment(&cfg, &tmp.path().join("b")).unwrap();
    assert_eq!(a.exit_code, 0, "{:#}", a.manifest);
    assert_eq!(tree(&a.dir), tree(&b.dir));
    // rerunning into the same directory replaces it
    let c = run_experiment(&cfg, &tmp.path().join("a")).unwrap();
    assert_eq!(c.manifest, a.manifest);
    assert!(a.dir.join("plots/front.svg").exists());
}

#[test]
fn manifest_hashes_every_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(2.5, 0.25), tmp.path()).unwrap();
    let files = out.manifest["files"].as_object().unwrap();
    assert!(files.contains_key("diagnostics.csv"));
    assert!(files.contains_key("snapshots/u_0000.csv") && files.contains_key("snapshots/v_0010.csv"));
    for (rel, hash) in files {
        let bytes = fs::read(out.dir.join(rel)).unwrap();
        assert_eq!(nlpm::io::sha256_hex(&bytes), hash.as_str().unwrap(), "{rel}");
    }
    assert_eq!(out.manifest["schema_version"], 1);
    assert_eq!(out.manifest["kernel_tables_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn disabled_diagnostics_write_no_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(1.5, 0.25);
    cfg.diagnostics.enabled = false;
    let out = run_experiment(&cfg, tmp.path()).unwrap();
    assert!(!out.dir.join("diagnostics.csv").exists());
    assert!(out.regime.is_none());
}

#[test]
fn dichotomy_pair_flags_both_regimes() {
    let tmp = tempfile::tempdir().unwrap();
    let inf = run_experiment(&dichotomy_base(1.5, 0.25), tmp.path()).unwrap();
    let fin = run_experiment(&dichotomy_base(2.5, 0.25), tmp.path()).unwrap();
    assert_eq!(inf.regime, Some(Regime::Infinite));
    assert_eq!(fin.regime, Some(Regime::Finite));
    assert_eq!(inf.summary("regime").unwrap(), "infinite");
}

#[test]
fn module_errors_land_in_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(1.5, 0.25);
    cfg.datum = Datum::File { path: tmp.path().join("missing.csv") };
    let out = run_experiment(&cfg, &tmp.path().join("runs")).unwrap();
    assert_eq!(out.exit_code, 1);
    assert_eq!(out.manifest["status"], "error");
    assert!(out.manifest["errors"][0].as_str().unwrap().contains("missing.csv"));
    assert!(out.dir.join(MANIFEST).exists());
}

#[test]
fn failed_barrier_gives_exit_code_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small(2.5, 0.25);
    // no doublings allowed from a tiny constant: the fit must fail
    cfg.barrier.push(BarrierSpec::Parabola { a: 1.0, b: 2.0, c_start: 1e-9, slack: 0.0, max_doublings: 0 });
    let out = run_experiment(&cfg, tmp.path()).unwrap();
    assert_eq!(out.check("barrier_0_parabola"), Some(false));
    assert_eq!(out.exit_code, 1);
    let rep: serde_json::Value = serde_json::from_slice(&fs::read(out.dir.join("barriers/0_parabola.json")).unwrap()).unwrap();
    assert_eq!(rep["family"], "parabola");
    assert_eq!(rep["pass"], false);
}

#[test]
fn missing_manifest_reads_as_incomplete() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_experiment(&small(1.5, 0.25), tmp.path()).unwrap();
    fs::remove_file(out.dir.join(MANIFEST)).unwrap();
    let err = read_manifest(&out.dir).unwrap_err();
    assert!(err.to_string().contains("incomplete"));
    assert!(report::regenerate(&out.dir).is_err());
}

#[test]
fn one_by_one_sweep_matches_a_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(1.5, 0.25);
    let plan = SweepPlan::new("one", &cfg, vec![1.5], vec![0.25], Some(1)).unwrap();
    let rep = run_sweep(&plan, tmp.path(), None).unwrap();
    assert_eq!(rep.rows.len(), 1);
    let single = run_experiment(&plan.cells[0], &tmp.path().join("single")).unwrap();
    assert_eq!(tree(&single.dir), tree(&rep.dir.join("cells").join(&plan.cells[0].name)));
    assert_eq!(rep.table_csv().lines().count(), 2);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = SweepPlan::new("grid", &small(1.5, 0.25), vec![1.5, 2.5, 1.25], vec![0.4, 0.25], None).unwrap();
    let a = run_sweep(&plan, &tmp.path().join("t1"), Some(1)).unwrap();
    let b = run_sweep(&plan, &tmp.path().join("t4"), Some(4)).unwrap();
    assert_eq!(tree(&a.dir), tree(&b.dir));
    // plan order: m ascending, then s
    let order: Vec<(f64, f64)> = a.rows.iter().map(|r| (r.m, r.s)).collect();
    assert_eq!(order[0], (1.25, 0.25));
    assert_eq!(order[1], (1.25, 0.4));
    assert_eq!(a.regime_map_csv().lines().next().unwrap(), "s\\m,1.25,1.5,2.5");
}

#[test]
fn failing_cells_do_not_abort_the_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let mut base = small(1.5, 0.5);
    base.solvers.evolve = false;
    base.barrier.push(BarrierSpec::Lower { x0: -0.5, x1: -2.0, t1: 0.1, c1_fraction: 0.25, resolution: 4.0, region_lo: -7.9, slack: 1e-12 });
    // the lower barrier exists only for m < 2
    let plan = SweepPlan::new("mixed", &base, vec![1.5, 2.5], vec![0.5], None).unwrap();
    let rep = run_sweep(&plan, tmp.path(), None).unwrap();
    assert_eq!(rep.rows[1].status, "error");
    assert_eq!(rep.rows[1].regime, "error");
    assert!(rep.rows[1].message.contains("1 < m < 2"), "{}", rep.rows[1].message);
    assert_ne!(rep.rows[0].status, "error");
    assert_eq!(rep.exit_code(), 1);
}

#[test]
fn report_regenerates_sweep_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = SweepPlan::new("r", &small(1.5, 0.25), vec![1.5, 2.5], vec![0.25], None).unwrap();
    let rep = run_sweep(&plan, tmp.path(), None).unwrap();
    let before = fs::read(rep.dir.join("sweep.csv")).unwrap();
    fs::remove_file(rep.dir.join("sweep.csv")).unwrap();
    let (text, code) = report::regenerate(&rep.dir).unwrap();
    assert_eq!(fs::read(rep.dir.join("sweep.csv")).unwrap(), before);
    assert!(text.contains("infinite") && text.contains("finite"));
    assert_eq!(code, rep.exit_code());
}

#[test]
fn plan_files_are_checked_per_cell() {
    let base = small(1.5, 0.25).to_toml();
    let nested: String = base
        .lines()
        .map(|l| if l.starts_with('[') { format!("[base.{}", &l[1..]) } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    // top-level keys of the run config must sit under [base] too
    let (top, tables) = nested.split_at(nested.find("[base.").unwrap());
    let text = format!("schema = 1\nname = \"p\"\nm = [1.5, 3.5]\ns = [0.25]\n[base]\n{top}\n{tables}\n");
    let err = parse_plan(&text).unwrap_err();
    assert_eq!(err.problems.len(), 1, "{err}");
    assert!(err.problems[0].contains("m=3.5") && err.problems[0].contains("1 < m < 3"));
    let ok = parse_plan(&text.replace("3.5", "2.5")).unwrap();
    assert_eq!(ok.cells.len(), 2);
    assert_eq!(ok.cells[1], parse_config(&ok.cells[1].to_toml()).unwrap());
}

#[test]
fn shipped_configs_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = nlpm::config::load_config(&root.join("box_infinite.toml")).unwrap();
    assert_eq!(cfg.physics.m, 1.5);
    let plan = parse_plan(&fs::read_to_string(root.join("small_sweep.toml")).unwrap()).unwrap();
    assert_eq!(plan.cells.len(), 6);
}
