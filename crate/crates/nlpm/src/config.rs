//! Run configuration: a versioned TOML schema, checked in full so that one
//! pass reports every problem.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use nlpm_core::evolve::SimParams;
use nlpm_core::grid::Grid;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Every problem found in a config file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration problem(s)", self.problems.len())?;
        for p in &self.problems {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub m: f64,
    pub s: f64,
    pub eps: f64,
    pub delta: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub t_end: f64,
    pub cfl: f64,
    pub snapshot_every: f64,
    pub dt_max: f64,
}

/// Initial datum. `heaviside_integrated` is a point mass, usable only by
/// the integrated solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Datum {
    Box { lo: f64, hi: f64, height: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
    ExpTail { amplitude: f64, rate: f64 },
    HeavisideIntegrated { mass: f64, at: f64 },
    Huang { lambda: f64, radius: f64 },
    File { path: PathBuf },
}

impl Datum {
    pub fn kind(&self) -> &'static str {
        match self {
            Datum::Box { .. } => "box",
            Datum::Gaussian { .. } => "gaussian",
            Datum::ExpTail { .. } => "exp_tail",
            Datum::HeavisideIntegrated { .. } => "heaviside_integrated",
            Datum::Huang { .. } => "huang",
            Datum::File { .. } => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solvers {
    pub evolve: bool,
    pub integrated: bool,
    pub integrated_cfl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub enabled: bool,
    /// Front threshold relative to the initial maximum.
    pub front_threshold: f64,
    pub mass_tol: f64,
    pub linf_slack: f64,
    pub second_energy_tol: f64,
    /// Points where the integrated state must stay positive.
    pub positivity_probes: Vec<f64>,
}

/// A barrier family with its fitting controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BarrierSpec {
    ExpTail { amp: f64, rate: f64, growth_start: f64, slack: f64, max_doublings: usize },
    Staged { amp: f64, rate: f64, growth_start: f64, max_stages: usize, slack: f64 },
    Parabola { a: f64, b: f64, c_start: f64, slack: f64, max_doublings: usize },
    /// Positivity subsolution of the integrated equation. `k1` is read off
    /// the run at `x0`, and `c1 = c1_fraction * k1`.
    Lower { x0: f64, x1: f64, t1: f64, c1_fraction: f64, resolution: f64, region_lo: f64, slack: f64 },
}

impl BarrierSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            BarrierSpec::ExpTail { .. } => "exp_tail",
            BarrierSpec::Staged { .. } => "staged",
            BarrierSpec::Parabola { .. } => "parabola",
            BarrierSpec::Lower { .. } => "lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    pub name: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub plots: bool,
    pub physics: Physics,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub datum: Datum,
    pub solvers: Solvers,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub barrier: Vec<BarrierSpec>,
}

impl RunConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.grid.x_min, self.grid.x_max, self.grid.n).expect("validated at parse time")
    }

    pub fn sim_params(&self) -> SimParams {
        let p = &self.physics;
        let mut sp = SimParams::new(p.m, p.s, self.grid(), self.time.t_end);
        sp.eps = p.eps;
        sp.delta = p.delta;
        sp.mu = p.mu;
        sp.cfl = self.time.cfl;
        sp.snapshot_every = self.time.snapshot_every;
        sp.dt_max = self.time.dt_max;
        sp
    }

    /// Canonical TOML text; parsing it gives back the same config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    /// Same config at another `(m, s)`, re-checked against the guards.
    pub fn with_exponents(&self, m: f64, s: f64) -> Result<RunConfig, ConfigError> {
        let mut t: Table = toml::from_str(&self.to_toml()).expect("canonical text parses");
        if let Some(Value::Table(ph)) = t.get_mut("physics") {
            ph.insert("m".into(), Value::Float(m));
            ph.insert("s".into(), Value::Float(s));
        }
        parse_table(t)
    }
}

/// Parses and checks a config. Paths in `file` datums stay as written;
/// use [`load_config`] to resolve them against the file location.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let dups = duplicate_keys(text);
    if !dups.is_empty() {
        return Err(ConfigError { problems: dups });
    }
    let table: Table = toml::from_str(text).map_err(|e| ConfigError { problems: vec![format!("syntax: {}", e.message())] })?;
    parse_table(table)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { problems: vec![format!("cannot read {}: {e}", path.display())] })?;
    let mut cfg = parse_config(&text)?;
    if let Datum::File { path: p } = &mut cfg.datum {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(cfg)
}

/// Keys (and table headers) defined more than once. A line scan, since the
/// TOML parser stops at the first repeat.
pub fn duplicate_keys(text: &str) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut headers: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = Vec::new();
    let mut table = String::new();
    let mut depth = 0i32;
    for (ln, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim().to_string();
        if depth > 0 {
            depth += bracket_balance(&line);
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("[[").and_then(|l| l.strip_suffix("]]")) {
            let name = name.trim();
            let k = headers.entry(name.to_string()).or_insert(0);
            table = format!("{name}#{k}");
            *k += 1;
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            table = name.trim().to_string();
            if !seen.insert(format!("[{table}]")) {
                out.push(format!("line {}: table [{table}] defined more than once", ln + 1));
            }
            continue;
        }
        if let Some((key, rest)) = line.split_once('=') {
            let key: String = key.split('.').map(|p| p.trim().trim_matches('"')).collect::<Vec<_>>().join(".");
            let full = if table.is_empty() { key.clone() } else { format!("{table}.{key}") };
            if !seen.insert(full.clone()) {
                out.push(format!("line {}: duplicate key `{}`", ln + 1, display_key(&full)));
            }
            depth = bracket_balance(rest);
        }
    }
    out
}

fn display_key(full: &str) -> String {
    // "barrier#1.amp" -> "barrier[1].amp"
    match full.split_once('#') {
        Some((head, rest)) => match rest.split_once('.') {
            Some((idx, tail)) => format!("{head}[{idx}].{tail}"),
            None => format!("{head}[{rest}]"),
        },
        None => full.to_string(),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn bracket_balance(s: &str) -> i32 {
    let mut in_str = false;
    let mut d = 0;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '[' | '{' if !in_str => d += 1,
            ']' | '}' if !in_str => d -= 1,
            _ => {}
        }
    }
    d
}

/// Collects problems while the table is walked.
struct Sec {
    path: String,
    t: Table,
}

impl Sec {
    fn new(path: &str, t: Table) -> Self {
        Self { path: path.to_string(), t }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.path)
        }
    }

    fn num(&mut self, k: &str, errs: &mut Vec<String>) -> Option<f64> {
        match self.t.remove(k)? {
            Value::Float(v) => Some(v),
            Value::Integer(v) => Some(v as f64),
            other => {
                errs.push(format!("`{}` must be a number, got {}", self.key(k), other.type_str()));
                None
            }
        }
    }

    fn num_or(&mut self, k: &str, default: f64, errs: &mut Vec<String>) -> f64 {
        self.num(k, errs).unwrap_or(default)
    }

    fn req_num(&mut self, k: &str, errs: &mut Vec<String>) -> f64 {
        let present = self.t.contains_key(k);
        match self.num(k, errs) {
            Some(v) => v,
            None => {
                if !present {
                    errs.push(format!("missing `{}`", self.key(k)));
                }
                f64::NAN
            }
        }
    }

    fn uint_or(&mut self, k: &str, default: u64, errs: &mut Vec<String>) -> u64 {
        match self.t.remove(k) {
            None => default,
            Some(Value::Integer(v)) if v >= 0 => v as u64,
            Some(other) => {
                errs.push(format!("`{}` must be a non-negative integer, got {other}", self.key(k)));
                default
            }
        }
    }

    fn bool_or(&mut self, k: &str, default: bool, errs: &mut Vec<String>) -> bool {
        match self.t.remove(k) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(other) => {
                errs.push(format!("`{}` must be true or false, got {other}", self.key(k)));
                default
            }
        }
    }

    fn string(&mut self, k: &str, errs: &mut Vec<String>) -> Option<String> {
        match self.t.remove(k)? {
            Value::String(s) => Some(s),
            other => {
                errs.push(format!("`{}` must be a string, got {other}", self.key(k)));
                None
            }
        }
    }

    fn nums(&mut self, k: &str, errs: &mut Vec<String>) -> Vec<f64> {
        match self.t.remove(k) {
            None => Vec::new(),
            Some(Value::Array(a)) => a
                .iter()
                .filter_map(|v| match v {
                    Value::Float(x) => Some(*x),
                    Value::Integer(x) => Some(*x as f64),
                    other => {
                        errs.push(format!("`{}` entries must be numbers, got {other}", self.key(k)));
                        None
                    }
                })
                .collect(),
            Some(other) => {
                errs.push(format!("`{}` must be an array of numbers, got {other}", self.key(k)));
                Vec::new()
            }
        }
    }

    fn sub(&mut self, k: &str, errs: &mut Vec<String>) -> Sec {
        let path = self.key(k);
        match self.t.remove(k) {
            Some(Value::Table(t)) => Sec::new(&path, t),
            None => Sec::new(&path, Table::new()),
            Some(other) => {
                errs.push(format!("`{path}` must be a table, got {}", other.type_str()));
                Sec::new(&path, Table::new())
            }
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        for k in self.t.keys() {
            errs.push(format!("unknown key `{}`", self.key(k)));
        }
    }
}

fn guard(errs: &mut Vec<String>, ok: bool, key: &str, v: f64, why: &str) {
    if !ok {
        errs.push(format!("`{key}` = {v} rejected: {why}"));
    }
}

/// Checks an already-parsed table against the schema.
pub fn parse_table(table: Table) -> Result<RunConfig, ConfigError> {
    let mut e = Vec::new();
    let mut root = Sec::new("", table);

    let schema = root.uint_or("schema", u64::MAX, &mut e);
    if schema == u64::MAX {
        e.push("missing `schema` (current version is 1)".into());
    } else if schema != SCHEMA_VERSION as u64 {
        e.push(format!("`schema` = {schema} is not supported (current version is {SCHEMA_VERSION})"));
    }
    let name = root.string("name", &mut e).unwrap_or_else(|| {
        e.push("missing `name`".into());
        String::new()
    });
    if !name.is_empty() && !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        e.push(format!("`name` = {name:?} must use only letters, digits, '-', '_' and '.'"));
    }
    let seed = root.uint_or("seed", 0, &mut e);
    let output = root.string("output", &mut e).map(PathBuf::from);
    let plots = root.bool_or("plots", false, &mut e);

    let mut ph = root.sub("physics", &mut e);
    let physics = Physics {
        m: ph.req_num("m", &mut e),
        s: ph.req_num("s", &mut e),
        eps: ph.num_or("eps", 0.0, &mut e),
        delta: ph.num_or("delta", 0.0, &mut e),
        mu: ph.num_or("mu", 0.0, &mut e),
    };
    ph.finish(&mut e);
    if !physics.m.is_nan() {
        guard(&mut e, physics.m > 1.0 && physics.m < 3.0, "physics.m", physics.m, "outside the existence range 1 < m < 3");
    }
    if !physics.s.is_nan() {
        guard(&mut e, physics.s > 0.0 && physics.s < 1.0, "physics.s", physics.s, "potential order must lie in (0, 1)");
    }
    for (k, v) in [("physics.eps", physics.eps), ("physics.delta", physics.delta), ("physics.mu", physics.mu)] {
        guard(&mut e, v >= 0.0 && v.is_finite(), k, v, "regularization must be >= 0");
    }

    let mut gr = root.sub("grid", &mut e);
    let half = gr.num("half_width", &mut e);
    let (x_min, x_max) = match (half, gr.t.contains_key("x_min") || gr.t.contains_key("x_max")) {
        (Some(_), true) => {
            e.push("`grid`: give either `half_width` or `x_min`/`x_max`, not both".into());
            gr.t.remove("x_min");
            gr.t.remove("x_max");
            (f64::NAN, f64::NAN)
        }
        (Some(w), false) => (-w, w),
        (None, _) => (gr.req_num("x_min", &mut e), gr.req_num("x_max", &mut e)),
    };
    let n = gr.uint_or("n", 0, &mut e) as usize;
    gr.finish(&mut e);
    if !(x_min.is_nan() || x_max.is_nan()) {
        guard(&mut e, x_max > x_min && x_min.is_finite() && x_max.is_finite(), "grid.x_max", x_max, "box must be finite with x_max > x_min");
    }
    guard(&mut e, n >= 16, "grid.n", n as f64, "need at least 16 cells");

    let mut tm = root.sub("time", &mut e);
    let t_end = tm.req_num("t_end", &mut e);
    let time = TimeSpec {
        t_end,
        cfl: tm.num_or("cfl", 0.5, &mut e),
        snapshot_every: tm.num_or("snapshot_every", t_end / 20.0, &mut e),
        dt_max: tm.num_or("dt_max", 1.0, &mut e),
    };
    tm.finish(&mut e);
    if !t_end.is_nan() {
        guard(&mut e, t_end > 0.0 && t_end.is_finite(), "time.t_end", t_end, "must be positive");
        guard(&mut e, time.snapshot_every > 0.0, "time.snapshot_every", time.snapshot_every, "must be positive");
    }
    guard(&mut e, time.cfl > 0.0 && time.cfl < 1.0, "time.cfl", time.cfl, "safety factor must lie in (0, 1)");
    guard(&mut e, time.dt_max > 0.0, "time.dt_max", time.dt_max, "must be positive");

    let mut dt = root.sub("datum", &mut e);
    let datum = parse_datum(&mut dt, &mut e);
    dt.finish(&mut e);

    let mut sv = root.sub("solvers", &mut e);
    let solvers = Solvers {
        evolve: sv.bool_or("evolve", true, &mut e),
        integrated: sv.bool_or("integrated", false, &mut e),
        integrated_cfl: sv.num_or("integrated_cfl", 0.5, &mut e),
    };
    sv.finish(&mut e);
    if !solvers.evolve && !solvers.integrated {
        e.push("`solvers`: enable at least one of `evolve` and `integrated`".into());
    }
    guard(&mut e, solvers.integrated_cfl > 0.0 && solvers.integrated_cfl <= 1.0, "solvers.integrated_cfl", solvers.integrated_cfl, "must lie in (0, 1]");
    if solvers.evolve && matches!(datum, Some(Datum::HeavisideIntegrated { .. })) {
        e.push("`datum.kind` = \"heaviside_integrated\" is a point mass; it needs `solvers.evolve = false`".into());
    }

    let mut dg = root.sub("diagnostics", &mut e);
    let diagnostics = Diagnostics {
        enabled: dg.bool_or("enabled", true, &mut e),
        front_threshold: dg.num_or("front_threshold", 1e-8, &mut e),
        mass_tol: dg.num_or("mass_tol", 1e-10, &mut e),
        linf_slack: dg.num_or("linf_slack", 1e-12, &mut e),
        second_energy_tol: dg.num_or("second_energy_tol", 0.02, &mut e),
        positivity_probes: dg.nums("positivity_probes", &mut e),
    };
    dg.finish(&mut e);
    guard(&mut e, diagnostics.front_threshold > 0.0 && diagnostics.front_threshold < 1.0, "diagnostics.front_threshold", diagnostics.front_threshold, "relative threshold must lie in (0, 1)");
    if !(x_min.is_nan() || x_max.is_nan()) {
        for &p in &diagnostics.positivity_probes {
            guard(&mut e, p > x_min && p < x_max, "diagnostics.positivity_probes", p, "probe lies outside the grid");
        }
    }

    let barrier = match root.t.remove("barrier") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .enumerate()
            .filter_map(|(i, v)| match v {
                Value::Table(t) => {
                    let mut b = Sec::new(&format!("barrier[{i}]"), t);
                    let spec = parse_barrier(&mut b, physics.s, &mut e);
                    b.finish(&mut e);
                    spec
                }
                _ => {
                    e.push(format!("`barrier[{i}]` must be a table"));
                    None
                }
            })
            .collect(),
        Some(_) => {
            e.push("`barrier` must be an array of tables ([[barrier]])".into());
            Vec::new()
        }
    };
    for b in &barrier {
        let needs_integrated = matches!(b, BarrierSpec::Lower { .. });
        if needs_integrated && !solvers.integrated {
            e.push(format!("barrier `{}` checks the integrated solution; set `solvers.integrated = true`", b.kind()));
        }
        if !needs_integrated && !solvers.evolve {
            e.push(format!("barrier `{}` checks the density; set `solvers.evolve = true`", b.kind()));
        }
    }
    root.finish(&mut e);

    match datum {
        Some(datum) if e.is_empty() => Ok(RunConfig {
            schema: SCHEMA_VERSION,
            name,
            seed,
            output,
            plots,
            physics,
            grid: GridSpec { x_min, x_max, n },
            time,
            datum,
            solvers,
            diagnostics,
            barrier,
        }),
        _ => Err(ConfigError { problems: e }),
    }
}

fn parse_datum(d: &mut Sec, e: &mut Vec<String>) -> Option<Datum> {
    let kind = match d.string("kind", e) {
        Some(k) => k,
        None => {
            e.push("missing `datum.kind`".into());
            return None;
        }
    };
    let before = e.len();
    let datum = match kind.as_str() {
        "box" => {
            let lo = d.num_or("lo", -1.0, e);
            let hi = d.num_or("hi", 1.0, e);
            guard(e, hi > lo, "datum.hi", hi, "must exceed datum.lo");
            Datum::Box { lo, hi, height: d.num_or("height", 1.0, e) }
        }
        "gaussian" => {
            let width = d.num_or("width", 1.0, e);
            guard(e, width > 0.0, "datum.width", width, "must be positive");
            Datum::Gaussian { amplitude: d.num_or("amplitude", 1.0, e), center: d.num_or("center", 0.0, e), width }
        }
        "exp_tail" => {
            let rate = d.num_or("rate", 1.0, e);
            guard(e, rate > 0.0, "datum.rate", rate, "must be positive");
            Datum::ExpTail { amplitude: d.num_or("amplitude", 0.5, e), rate }
        }
        "heaviside_integrated" => {
            let mass = d.num_or("mass", 1.0, e);
            guard(e, mass > 0.0, "datum.mass", mass, "must be positive");
            Datum::HeavisideIntegrated { mass, at: d.num_or("at", 0.0, e) }
        }
        "huang" => {
            let lambda = d.num_or("lambda", 1.0, e);
            let radius = d.num_or("radius", 1.0, e);
            guard(e, lambda > 0.0, "datum.lambda", lambda, "must be positive");
            guard(e, radius > 0.0, "datum.radius", radius, "must be positive");
            Datum::Huang { lambda, radius }
        }
        "file" => match d.string("path", e) {
            Some(p) => Datum::File { path: PathBuf::from(p) },
            None => {
                e.push("`datum.path` is required for kind \"file\"".into());
                return None;
            }
        },
        other => {
            e.push(format!(
                "`datum.kind` = {other:?} is not one of box, gaussian, exp_tail, heaviside_integrated, huang, file"
            ));
            d.t.clear();
            return None;
        }
    };
    if let Datum::Box { height: a, .. } | Datum::Gaussian { amplitude: a, .. } | Datum::ExpTail { amplitude: a, .. } = datum {
        guard(e, a > 0.0, "datum amplitude", a, "must be positive");
    }
    (e.len() == before).then_some(datum)
}

fn parse_barrier(b: &mut Sec, s: f64, e: &mut Vec<String>) -> Option<BarrierSpec> {
    let path = b.path.clone();
    let kind = match b.string("kind", e) {
        Some(k) => k,
        None => {
            e.push(format!("missing `{path}.kind`"));
            return None;
        }
    };
    let before = e.len();
    let pos = |e: &mut Vec<String>, k: &str, v: f64| guard(e, v > 0.0, &format!("{path}.{k}"), v, "must be positive");
    let spec = match kind.as_str() {
        "exp_tail" => {
            let spec = BarrierSpec::ExpTail {
                amp: b.req_num("amp", e),
                rate: b.num_or("rate", 1.0, e),
                growth_start: b.num_or("growth_start", 0.01, e),
                slack: b.num_or("slack", 0.0, e),
                max_doublings: b.uint_or("max_doublings", 40, e) as usize,
            };
            if let BarrierSpec::ExpTail { amp, rate, growth_start, .. } = spec {
                pos(e, "amp", amp);
                pos(e, "rate", rate);
                pos(e, "growth_start", growth_start);
            }
            spec
        }
        "staged" => {
            if !s.is_nan() && !(s > 0.5) {
                e.push(format!("`{path}`: the staged barrier is for 1/2 < s < 1, got s = {s}"));
            }
            let spec = BarrierSpec::Staged {
                amp: b.req_num("amp", e),
                rate: b.num_or("rate", 1.0, e),
                growth_start: b.num_or("growth_start", 0.01, e),
                max_stages: b.uint_or("max_stages", 10, e) as usize,
                slack: b.num_or("slack", 0.0, e),
            };
            if let BarrierSpec::Staged { amp, rate, growth_start, .. } = spec {
                pos(e, "amp", amp);
                pos(e, "rate", rate);
                pos(e, "growth_start", growth_start);
            }
            spec
        }
        "parabola" => {
            if !s.is_nan() && s >= 0.5 {
                e.push(format!("`{path}`: the parabola barrier is for 0 < s < 1/2, got s = {s}"));
            }
            let spec = BarrierSpec::Parabola {
                a: b.num_or("a", 1.0, e),
                b: b.req_num("b", e),
                c_start: b.num_or("c_start", 0.01, e),
                slack: b.num_or("slack", 0.0, e),
                max_doublings: b.uint_or("max_doublings", 40, e) as usize,
            };
            if let BarrierSpec::Parabola { a, b: bb, c_start, .. } = spec {
                pos(e, "a", a);
                pos(e, "b", bb);
                pos(e, "c_start", c_start);
            }
            spec
        }
        "lower" => {
            let spec = BarrierSpec::Lower {
                x0: b.req_num("x0", e),
                x1: b.req_num("x1", e),
                t1: b.req_num("t1", e),
                c1_fraction: b.num_or("c1_fraction", 0.25, e),
                resolution: b.num_or("resolution", 8.0, e),
                region_lo: b.req_num("region_lo", e),
                slack: b.num_or("slack", 1e-12, e),
            };
            if let BarrierSpec::Lower { x0, x1, t1, c1_fraction, resolution, .. } = spec {
                pos(e, "t1", t1);
                pos(e, "resolution", resolution);
                guard(e, c1_fraction > 0.0 && c1_fraction < 1.0, &format!("{path}.c1_fraction"), c1_fraction, "must lie in (0, 1)");
                guard(e, x1 < x0, &format!("{path}.x1"), x1, "target point must lie left of x0");
            }
            spec
        }
        other => {
            e.push(format!("`{path}.kind` = {other:?} is not one of exp_tail, staged, parabola, lower"));
            b.t.clear();
            return None;
        }
    };
    (e.len() == before).then_some(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema = 1
name = "minimal"

[physics]
m = 2
s = 0.25

[grid]
half_width = 8.0
n = 256

[time]
t_end = 0.5

[datum]
kind = "gaussian"
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.physics.m, 2.0);
        assert_eq!(c.grid.x_min, -8.0);
        assert_eq!(c.time.snapshot_every, 0.025);
        assert_eq!(c.datum, Datum::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 });
        assert!(c.solvers.evolve && !c.solvers.integrated);
        assert!(c.diagnostics.enabled);
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut c = parse_config(MINIMAL).unwrap();
        c.barrier.push(BarrierSpec::Parabola { a: 1.0, b: 2.0, c_start: 0.01, slack: 0.0, max_doublings: 10 });
        c.diagnostics.positivity_probes = vec![-2.0, -4.0];
        let back = parse_config(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn exponent_outside_range_names_the_guard() {
        let err = parse_config(&MINIMAL.replace("m = 2", "m = 3.5")).unwrap_err();
        assert_eq!(err.problems.len(), 1);
        assert!(err.problems[0].contains("1 < m < 3"), "{err}");
    }

    #[test]
    fn all_duplicates_are_listed() {
        let text = MINIMAL.replace("s = 0.25", "s = 0.25\nm = 1.5\ns = 0.3").replace("n = 256", "n = 256\nn = 512");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.problems.len(), 3, "{err}");
        assert!(err.problems.iter().any(|p| p.contains("`physics.m`")));
        assert!(err.problems.iter().any(|p| p.contains("`physics.s`")));
        assert!(err.problems.iter().any(|p| p.contains("`grid.n`")));
    }

    #[test]
    fn duplicates_inside_barrier_arrays_are_per_entry() {
        let text = format!("{MINIMAL}\n[[barrier]]\nkind = \"parabola\"\nb = 2\n[[barrier]]\nkind = \"parabola\"\nb = 3\nb = 4\n");
        let d = duplicate_keys(&text);
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("barrier[1].b"), "{d:?}");
    }

    #[test]
    fn every_problem_is_reported() {
        let text = MINIMAL
            .replace("m = 2", "m = 0.5\nmm = 1")
            .replace("n = 256", "n = 4")
            .replace("kind = \"gaussian\"", "kind = \"gaussian\"\nwidth = -1");
        let err = parse_config(&text).unwrap_err();
        let all = err.problems.join("\n");
        assert!(all.contains("physics.mm"), "{all}");
        assert!(all.contains("1 < m < 3"), "{all}");
        assert!(all.contains("grid.n"), "{all}");
        assert!(all.contains("datum.width"), "{all}");
        assert_eq!(err.problems.len(), 4, "{all}");
    }

    #[test]
    fn schema_version_is_required_and_checked() {
        let err = parse_config(&MINIMAL.replace("schema = 1", "schema = 9")).unwrap_err();
        assert!(err.problems[0].contains("not supported"));
        let err = parse_config(&MINIMAL.replace("schema = 1", "")).unwrap_err();
        assert!(err.problems[0].contains("missing `schema`"));
    }

    #[test]
    fn barrier_needs_its_solver() {
        let text = format!("{MINIMAL}\n[[barrier]]\nkind = \"lower\"\nx0 = -0.5\nx1 = -2\nt1 = 0.2\nregion_lo = -7.9\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.problems[0].contains("solvers.integrated"), "{err}");
    }

    #[test]
    fn point_mass_datum_is_integrated_only() {
        let text = MINIMAL.replace("kind = \"gaussian\"", "kind = \"heaviside_integrated\"");
        assert!(parse_config(&text).is_err());
        let text = format!("{text}\n[solvers]\nevolve = false\nintegrated = true\n");
        assert!(parse_config(&text).is_ok());
    }

    #[test]
    fn retargeting_exponents_rechecks_guards() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.with_exponents(1.5, 0.4).unwrap().physics.m, 1.5);
        assert!(c.with_exponents(3.0, 0.4).is_err());
    }
}
