//! Human-readable summaries regenerated from manifests, and operator table
//! dumps.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use nlpm_core::evolve::PressureOp;
use nlpm_core::fracops::{build_frac_laplacian, KernelKind, SpectralOperator};
use serde_json::{json, Value};

use crate::config::{RunConfig, SCHEMA_VERSION};
use crate::experiment::pretty;
use crate::io::{csv, num, read_manifest, RunDir};
use crate::sweep;

/// Text summary of one run manifest.
pub fn run_summary(man: &Value) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run {}: {} (exit {})", man["name"].as_str().unwrap_or("?"), man["status"].as_str().unwrap_or("?"), man["exit_code"]);
    if let Some(errs) = man["errors"].as_array() {
        for e in errs {
            let _ = writeln!(s, "  error: {}", e.as_str().unwrap_or_default());
        }
    }
    if let Some(checks) = man["checks"].as_object() {
        for (k, v) in checks {
            let _ = writeln!(s, "  {:<28} {}", k, if v.as_bool() == Some(true) { "PASS" } else { "FAIL" });
        }
    }
    if let Some(sum) = man["summary"].as_object() {
        for (k, v) in sum {
            let _ = writeln!(s, "  {:<28} {}", k, v);
        }
    }
    s
}

/// Regenerates the summary of a run or sweep directory and returns the
/// text together with the recorded exit code.
pub fn regenerate(dir: &Path) -> Result<(String, i32)> {
    let man = read_manifest(dir)?;
    match man["kind"].as_str() {
        Some("run") => {
            let text = run_summary(&man);
            std::fs::write(dir.join("summary.txt"), &text)?;
            Ok((text, man["exit_code"].as_i64().unwrap_or(1) as i32))
        }
        Some("sweep") => {
            let rep = sweep::regenerate(dir)?;
            Ok((rep.regime_map_text(), rep.exit_code()))
        }
        Some("kernels") => Ok((pretty(&man), 0)),
        _ => bail!("{}: manifest has no recognized `kind`", dir.display()),
    }
}

/// Writes the quadrature weights `(offset, weight)` and the spectral
/// multipliers `(frequency_index, multiplier)` of the pressure operator and
/// of `(-Delta)^{1-s}` into `root/<name>-kernels`.
pub fn dump_kernels(cfg: &RunConfig, root: &Path) -> Result<PathBuf> {
    let grid = cfg.grid();
    let s = cfg.physics.s;
    let mut dir = RunDir::create(&root.join(format!("{}-kernels", cfg.name)))?;
    let weights = |t: Vec<(isize, f64)>| {
        let rows: Vec<Vec<String>> = t.into_iter().map(|(o, w)| vec![o.to_string(), num(w)]).collect();
        csv(&["offset", "weight"], &rows)
    };
    let multipliers = |t: Vec<(usize, f64)>| {
        let rows: Vec<Vec<String>> = t.into_iter().map(|(k, w)| vec![k.to_string(), num(w)]).collect();
        csv(&["frequency_index", "multiplier"], &rows)
    };
    let op = PressureOp::new(&grid, s, cfg.physics.eps)?;
    dir.write("pressure_weights.csv", weights(op.kernel().weights_table()).as_bytes())?;
    let kind = if s < 0.5 { KernelKind::Riesz } else { KernelKind::GradRiesz };
    let spec = SpectralOperator::new(kind, &grid, s, 2)?;
    dir.write("pressure_multipliers.csv", multipliers(spec.multipliers_table()).as_bytes())?;
    let lap = build_frac_laplacian(&grid, 1.0 - s)?;
    dir.write("frac_laplacian_weights.csv", weights(lap.weights_table()).as_bytes())?;
    let spec = SpectralOperator::new(KernelKind::FracLaplacian, &grid, 1.0 - s, 2)?;
    dir.write("frac_laplacian_multipliers.csv", multipliers(spec.multipliers_table()).as_bytes())?;
    let man = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "kernels",
        "name": cfg.name,
        "grid": cfg.grid,
        "s": s,
        "eps": cfg.physics.eps,
        "files": dir.files,
    });
    dir.write_manifest(pretty(&man).as_bytes())?;
    Ok(dir.root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_lists_checks_and_errors() {
        let man = json!({
            "name": "x", "status": "error", "exit_code": 1,
            "errors": ["evolve: boom"], "checks": { "mass": true, "second_energy": false },
            "summary": { "regime": "finite" },
        });
        let s = run_summary(&man);
        assert!(s.contains("error: evolve: boom"));
        assert!(s.contains("mass") && s.contains("PASS"));
        assert!(s.contains("second_energy") && s.contains("FAIL"));
        assert!(s.contains("\"finite\""));
    }
}
