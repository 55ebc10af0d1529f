//! Bridge to an external SDPA-format solver.
//!
//! The executable is called as `<exe> <input.dat-s> <output>` and must write
//! SDPA-style `key = value` lines. `objValPrimal` is the optimal value of
//! `min c^T x` in the exported form, i.e. minus our objective.

use crate::error::{Error, Result};
use crate::model::sdpa::export_sdpa;
use crate::model::{ConicProblem, Residuals, Solution, Status};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

static COUNTER: AtomicUsize = AtomicUsize::new(0);

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalResult {
    pub phase: String,
    pub primal: f64,
    pub dual: f64,
}

/// Extracts `phase.value`, `objValPrimal` and `objValDual`.
pub fn parse_output(text: &str) -> Result<ExternalResult> {
    let mut phase = None;
    let mut primal = None;
    let mut dual = None;
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else { continue };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "phase.value" => phase = Some(v.to_string()),
            "objValPrimal" => primal = v.parse::<f64>().ok(),
            "objValDual" => dual = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    match (phase, primal, dual) {
        (Some(phase), Some(primal), Some(dual)) => Ok(ExternalResult { phase, primal, dual }),
        _ => Err(Error::External("output lacks phase.value, objValPrimal or objValDual".into())),
    }
}

fn scratch_dir() -> Result<PathBuf> {
    let dir = std::env::temp_dir().join(format!("cophi-{}-{}", std::process::id(), COUNTER.fetch_add(1, Ordering::SeqCst)));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Solves `p` with an external executable. Only status and objective are
/// filled in; primal values are not read back.
pub fn solve_external(p: &ConicProblem, exe: &Path) -> Result<Solution> {
    let dir = scratch_dir()?;
    let input = dir.join("problem.dat-s");
    let output = dir.join("problem.out");
    std::fs::write(&input, export_sdpa(p)?)?;
    let run = Command::new(exe).arg(&input).arg(&output).output().map_err(|e| Error::External(format!("{}: {e}", exe.display())))?;
    if !run.status.success() {
        let msg = String::from_utf8_lossy(&run.stderr).trim().to_string();
        let _ = std::fs::remove_dir_all(&dir);
        return Err(Error::External(format!("{} exited with {}: {msg}", exe.display(), run.status)));
    }
    let text = std::fs::read_to_string(&output)?;
    let _ = std::fs::remove_dir_all(&dir);
    let r = parse_output(&text)?;
    let status = match r.phase.as_str() {
        "pdOPT" => Status::Optimal,
        // SDPA's primal is the LMI problem in `x`, i.e. our problem
        "pINF_dFEAS" | "pINF" => Status::Infeasible,
        "pFEAS_dINF" | "dINF" | "pUNBD" => Status::Unbounded,
        _ => Status::Stalled,
    };
    Ok(Solution {
        status,
        objective: -r.primal,
        dual_objective: -r.dual,
        x: vec![],
        eq_duals: vec![],
        cone_duals: vec![],
        residuals: Residuals { primal: f64::NAN, dual: f64::NAN, gap: ((r.primal - r.dual).abs()) / (1.0 + r.primal.abs() + r.dual.abs()) },
        iterations: 0,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sdpa_style_output() {
        let r = parse_output("phase.value = pdOPT\nobjValPrimal = -1.0000000e+00\nobjValDual   = -0.99999999\n").unwrap();
        assert_eq!(r.phase, "pdOPT");
        assert_eq!(r.primal, -1.0);
        assert!(parse_output("nothing").is_err());
    }
}
