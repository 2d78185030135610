//! Parameter sweeps over `(m, s)` with a bounded worker pool.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use toml::{Table, Value as Toml};

use crate::config::{duplicate_keys, parse_table, ConfigError, RunConfig, SCHEMA_VERSION};
use crate::experiment::{pretty, run_experiment};
use crate::io::{csv, num, read_manifest, RunDir};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub name: String,
    /// Cells in report order: `m` ascending, then `s` ascending.
    pub cells: Vec<RunConfig>,
    pub m_values: Vec<f64>,
    pub s_values: Vec<f64>,
    /// Worker limit; `None` uses the pool default.
    pub threads: Option<usize>,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn cell_name(m: f64, s: f64) -> String {
    format!("m{m}_s{s}")
}

impl SweepPlan {
    /// Builds every cell from `base` and checks each against the guards.
    pub fn new(name: &str, base: &RunConfig, m_values: Vec<f64>, s_values: Vec<f64>, threads: Option<usize>) -> Result<Self, ConfigError> {
        let t: Table = toml::from_str(&base.to_toml()).expect("canonical text parses");
        Self::from_base_table(name, t, m_values, s_values, threads)
    }

    fn from_base_table(name: &str, base: Table, m_values: Vec<f64>, s_values: Vec<f64>, threads: Option<usize>) -> Result<Self, ConfigError> {
        let m_values = sorted(m_values);
        let s_values = sorted(s_values);
        let mut problems = Vec::new();
        if m_values.is_empty() || s_values.is_empty() {
            problems.push("plan needs at least one `m` and one `s`".to_string());
        }
        let mut cells = Vec::new();
        for &m in &m_values {
            for &s in &s_values {
                let mut t = base.clone();
                t.insert("name".into(), Toml::String(cell_name(m, s)));
                if !t.contains_key("schema") {
                    t.insert("schema".into(), Toml::Integer(SCHEMA_VERSION as i64));
                }
                let ph = t.entry("physics").or_insert_with(|| Toml::Table(Table::new()));
                if let Toml::Table(ph) = ph {
                    ph.insert("m".into(), Toml::Float(m));
                    ph.insert("s".into(), Toml::Float(s));
                }
                match parse_table(t) {
                    Ok(c) => cells.push(c),
                    Err(e) => problems.extend(e.problems.into_iter().map(|p| format!("cell (m={m}, s={s}): {p}"))),
                }
            }
        }
        if problems.is_empty() {
            Ok(Self { name: name.to_string(), cells, m_values, s_values, threads })
        } else {
            problems.dedup();
            Err(ConfigError { problems })
        }
    }

    /// The propagation-dichotomy sweep: box datum on `[-1, 1]`, both
    /// solvers, positivity probes at twice and four times the support.
    pub fn dichotomy() -> Self {
        let base = crate::presets::dichotomy_base(1.5, 0.25);
        Self::new("dichotomy", &base, vec![1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75], vec![0.25, 0.4], None)
            .expect("preset is valid")
    }
}

/// Plan file: `schema`, `name`, `m = [...]`, `s = [...]`, optional
/// `threads`, and a `[base]` run config whose `physics.m/s` are filled per cell.
pub fn parse_plan(text: &str) -> Result<SweepPlan, ConfigError> {
    let dups = duplicate_keys(text);
    if !dups.is_empty() {
        return Err(ConfigError { problems: dups });
    }
    let mut t: Table = toml::from_str(text).map_err(|e| ConfigError { problems: vec![format!("syntax: {}", e.message())] })?;
    let mut problems = Vec::new();
    match t.remove("schema") {
        Some(Toml::Integer(v)) if v == SCHEMA_VERSION as i64 => {}
        Some(v) => problems.push(format!("`schema` = {v} is not supported (current version is {SCHEMA_VERSION})")),
        None => problems.push("missing `schema` (current version is 1)".into()),
    }
    let name = match t.remove("name") {
        Some(Toml::String(s)) => s,
        _ => {
            problems.push("missing string `name`".into());
            String::new()
        }
    };
    let mut nums = |k: &str| -> Vec<f64> {
        match t.remove(k) {
            Some(Toml::Array(a)) => a
                .iter()
                .filter_map(|v| v.as_float().or_else(|| v.as_integer().map(|i| i as f64)))
                .collect(),
            _ => {
                problems.push(format!("`{k}` must be an array of numbers"));
                Vec::new()
            }
        }
    };
    let ms = nums("m");
    let ss = nums("s");
    let threads = match t.remove("threads") {
        None => None,
        Some(Toml::Integer(n)) if n >= 1 => Some(n as usize),
        Some(v) => {
            problems.push(format!("`threads` = {v} must be a positive integer"));
            None
        }
    };
    let base = match t.remove("base") {
        Some(Toml::Table(b)) => b,
        _ => {
            problems.push("missing `[base]` run configuration".into());
            Table::new()
        }
    };
    for k in t.keys() {
        problems.push(format!("unknown key `{k}`"));
    }
    if !problems.is_empty() {
        return Err(ConfigError { problems });
    }
    SweepPlan::from_base_table(&name, base, ms, ss, threads)
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRow {
    pub m: f64,
    pub s: f64,
    /// "pass", "fail" or "error".
    pub status: String,
    /// "finite", "infinite", "indeterminate" or "error".
    pub regime: String,
    pub front_exponent: Option<f64>,
    pub positivity_min: Option<f64>,
    pub message: String,
}

impl CellRow {
    pub fn from_manifest(m: f64, s: f64, man: &Value) -> Self {
        let errors: Vec<String> = man["errors"].as_array().map_or(Vec::new(), |a| a.iter().filter_map(|e| e.as_str().map(String::from)).collect());
        let status = if !errors.is_empty() {
            "error"
        } else if man["exit_code"].as_i64() == Some(0) {
            "pass"
        } else {
            "fail"
        };
        let regime = if status == "error" {
            "error".to_string()
        } else {
            man["summary"]["regime"].as_str().unwrap_or("indeterminate").to_string()
        };
        CellRow {
            m,
            s,
            status: status.into(),
            regime,
            front_exponent: man["summary"]["front_exponent"].as_f64(),
            positivity_min: man["summary"]["positivity_min"].as_f64(),
            message: errors.join("; "),
        }
    }

    fn error(m: f64, s: f64, msg: String) -> Self {
        CellRow { m, s, status: "error".into(), regime: "error".into(), front_exponent: None, positivity_min: None, message: msg }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub dir: PathBuf,
    pub rows: Vec<CellRow>,
    pub m_values: Vec<f64>,
    pub s_values: Vec<f64>,
}

impl SweepReport {
    pub fn regime(&self, m: f64, s: f64) -> Option<&str> {
        self.rows.iter().find(|r| r.m == m && r.s == s).map(|r| r.regime.as_str())
    }

    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().all(|r| r.status == "pass") {
            0
        } else {
            1
        }
    }

    pub fn table_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), num);
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    num(r.m),
                    num(r.s),
                    r.status.clone(),
                    r.regime.clone(),
                    opt(r.front_exponent),
                    opt(r.positivity_min),
                    format!("\"{}\"", r.message.replace('"', "'")),
                ]
            })
            .collect();
        csv(&["m", "s", "status", "regime", "front_exponent", "positivity_min", "message"], &rows)
    }

    /// Rows are `s`, columns are `m`.
    pub fn regime_map_csv(&self) -> String {
        let mut header = vec!["s\\m".to_string()];
        header.extend(self.m_values.iter().map(|m| num(*m)));
        let rows: Vec<Vec<String>> = self
            .s_values
            .iter()
            .map(|&s| {
                let mut r = vec![num(s)];
                r.extend(self.m_values.iter().map(|&m| self.regime(m, s).unwrap_or("missing").to_string()));
                r
            })
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        csv(&h, &rows)
    }

    /// Plain-text regime map for terminals.
    pub fn regime_map_text(&self) -> String {
        let mut out = format!("{:>8}", "s \\ m");
        for m in &self.m_values {
            out.push_str(&format!(" {:>13}", num(*m)));
        }
        out.push('\n');
        for &s in &self.s_values {
            out.push_str(&format!("{:>8}", num(s)));
            for &m in &self.m_values {
                out.push_str(&format!(" {:>13}", self.regime(m, s).unwrap_or("missing")));
            }
            out.push('\n');
        }
        out
    }

    fn write(&self, name: &str, cells: &[(f64, f64, String)]) -> Result<()> {
        let mut dir = RunDir { root: self.dir.clone(), files: Default::default() };
        dir.write("sweep.csv", self.table_csv().as_bytes())?;
        dir.write("regime_map.csv", self.regime_map_csv().as_bytes())?;
        dir.write("regime_map.txt", self.regime_map_text().as_bytes())?;
        let cells: Vec<Value> = cells.iter().map(|(m, s, d)| json!({ "m": m, "s": s, "dir": d })).collect();
        let manifest = json!({
            "schema_version": SCHEMA_VERSION,
            "kind": "sweep",
            "name": name,
            "exit_code": self.exit_code(),
            "m_values": self.m_values,
            "s_values": self.s_values,
            "cells": cells,
            "files": dir.files,
        });
        dir.write_manifest(pretty(&manifest).as_bytes())
    }
}

/// Runs every cell under `root/<plan name>/`. Cell failures become "error"
/// rows; aggregation happens in plan order, so the report does not depend
/// on the thread count.
pub fn run_sweep(plan: &SweepPlan, root: &Path, threads: Option<usize>) -> Result<SweepReport> {
    let dir = RunDir::create(&root.join(&plan.name))?;
    let limit = threads.or(plan.threads).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(limit).build().context("building the worker pool")?;
    let cells_root = dir.root.join("cells");
    let rows: Vec<CellRow> = pool.install(|| {
        plan.cells
            .par_iter()
            .map(|c| {
                let (m, s) = (c.physics.m, c.physics.s);
                match run_experiment(c, &cells_root) {
                    Ok(out) => CellRow::from_manifest(m, s, &out.manifest),
                    Err(e) => CellRow::error(m, s, format!("{e:#}")),
                }
            })
            .collect()
    });
    let report = SweepReport { dir: dir.root.clone(), rows, m_values: plan.m_values.clone(), s_values: plan.s_values.clone() };
    let cells: Vec<(f64, f64, String)> = plan.cells.iter().map(|c| (c.physics.m, c.physics.s, format!("cells/{}", c.name))).collect();
    report.write(&plan.name, &cells)?;
    Ok(report)
}

/// Rebuilds the sweep tables from the cell manifests on disk.
pub fn regenerate(dir: &Path) -> Result<SweepReport> {
    let man = read_manifest(dir)?;
    let fnums = |k: &str| -> Vec<f64> { man[k].as_array().map_or(Vec::new(), |a| a.iter().filter_map(Value::as_f64).collect()) };
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for c in man["cells"].as_array().context("sweep manifest lists no cells")? {
        let (m, s) = (c["m"].as_f64().unwrap_or(f64::NAN), c["s"].as_f64().unwrap_or(f64::NAN));
        let rel = c["dir"].as_str().unwrap_or_default().to_string();
        rows.push(match read_manifest(&dir.join(&rel)) {
            Ok(cm) => CellRow::from_manifest(m, s, &cm),
            Err(e) => CellRow::error(m, s, format!("{e:#}")),
        });
        cells.push((m, s, rel));
    }
    let report = SweepReport { dir: dir.to_path_buf(), rows, m_values: fnums("m_values"), s_values: fnums("s_values") };
    let name = man["name"].as_str().unwrap_or_default().to_string();
    report.write(&name, &cells)?;
    Ok(report)
}
