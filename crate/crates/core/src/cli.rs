//! Command-line front end: `build`, `solve`, `reproduce` and `verify`.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 solver stall, 4 budget exceeded.

use crate::error::{Error, Result};
use crate::frame::dp_member;
use crate::jordan::{check_symmetric, ConeShape, SymMatrix};
use crate::lasserre::MomentTable;
use crate::model::copp::{assemble_copp_with, membership_margin, BuildOptions};
use crate::model::sdpa::{export_sdpa, import_sdpa};
use crate::model::{random_pd, ConicProblem, Hierarchy, Solution, Status};
use crate::oracle::{grid_cone_min, sample_cone_min, yildirim_refutation, ExactWitness};
use crate::solver::external::solve_external;
use crate::solver::{solve, SolverConfig};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_STALL: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cophi", version, about = "Approximation hierarchies for copositivity over R_+^n1 x L^n2")]
pub struct Cli {
    /// JSON file overriding the built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Internal,
    External,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random positive-definite C, benchmark problem written as JSON and SDPA.
    Build {
        hierarchy: String,
        r: u32,
        n1: usize,
        n2: usize,
        #[arg(long)]
        concise: Option<bool>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output stem; `.json` and `.dat-s` are appended.
        #[arg(long, default_value = "problem")]
        out: PathBuf,
    },
    /// Solve a `.json` or `.dat-s` problem file.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum)]
        solver: Option<SolverKind>,
        /// Executable called as `<exe> in.dat-s out` for the external solver.
        #[arg(long)]
        exe: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Increase the depth of every hierarchy until the time budget runs out.
    Reproduce {
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 2)]
        r_max: u32,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        budget_seconds: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        concise: Option<bool>,
        /// Comma separated subset, e.g. `dp,yildirim`.
        #[arg(long)]
        hierarchies: Option<String>,
        /// Use raw instead of `y_0`-normalized Lasserre moments.
        #[arg(long)]
        raw_moments: bool,
        /// Directory for `results.csv` and `results.md`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide copositivity of a matrix: certificate, refutation or undecided.
    Verify {
        matrix: PathBuf,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        n2: usize,
        #[arg(long, default_value_t = 2)]
        depth: u32,
        #[arg(long)]
        json: bool,
    },
}

/// Defaults that a `--config` file may override. Command-line flags win.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub concise: bool,
    pub solver: SolverConfig,
    pub solver_kind: SolverKind,
    pub external_exe: Option<PathBuf>,
    pub trials: usize,
    pub budget_seconds: f64,
    /// Margin above which an inner certificate counts.
    pub verify_tol: f64,
    pub grid_k: u32,
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            concise: true,
            solver: SolverConfig::default(),
            solver_kind: SolverKind::Internal,
            external_exe: None,
            trials: 1,
            budget_seconds: 7200.0,
            verify_tol: 1e-7,
            grid_k: 6,
            samples: 20_000,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Config = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.solver.validate()?;
        Ok(cfg)
    }
}

/// What `build` writes next to the `.dat-s` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildFile {
    pub hierarchy: Hierarchy,
    pub n1: usize,
    pub n2: usize,
    pub seed: u64,
    pub concise: bool,
    pub c: Vec<Vec<f64>>,
    pub problem: ConicProblem,
}

fn matrix_rows(m: &SymMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Invalid("matrix must be square".into()));
    }
    Ok(SymMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Reads a matrix as a JSON array of rows or as whitespace separated rows.
pub fn read_matrix(path: &Path) -> Result<SymMatrix> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        let rows: Vec<Vec<f64>> = serde_json::from_str(&text)?;
        return matrix_from_rows(&rows);
    }
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, tok) in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).enumerate() {
            row.push(tok.parse::<f64>().map_err(|_| Error::Parse { line: ln + 1, column: col + 1, message: format!("bad number '{tok}'") })?);
        }
        rows.push(row);
    }
    matrix_from_rows(&rows)
}

/// Loads a problem from `.dat-s`, a `build` JSON file or bare problem JSON.
pub fn read_problem(path: &Path) -> Result<ConicProblem> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "dat-s" || e == "dat") {
        return import_sdpa(&text);
    }
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let p: ConicProblem = if value.get("problem").is_some() {
        serde_json::from_value::<BuildFile>(value)?.problem
    } else {
        serde_json::from_value(value)?
    };
    p.validate()?;
    Ok(p)
}

fn shape(n1: usize, n2: usize) -> Result<ConeShape> {
    ConeShape::new(n1, n2)
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn cmd_build(h: Hierarchy, n1: usize, n2: usize, concise: bool, seed: u64, out: &Path, w: &mut dyn Write) -> Result<i32> {
    let sh = shape(n1, n2)?;
    let c = random_pd(sh.n(), seed);
    let t0 = Instant::now();
    let problem = assemble_copp_with(&c, h, sh, BuildOptions { concise, ..Default::default() })?;
    let build_seconds = t0.elapsed().as_secs_f64();
    let sdpa = export_sdpa(&problem)?;
    let file = BuildFile { hierarchy: h, n1, n2, seed, concise, c: matrix_rows(&c), problem };
    let json_path = with_ext(out, "json");
    let sdpa_path = with_ext(out, "dat-s");
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    // no timings in the file, so equal seeds give identical bytes
    std::fs::write(&json_path, serde_json::to_string_pretty(&file)?)?;
    std::fs::write(&sdpa_path, sdpa)?;
    writeln!(w, "{h} on ({n1},{n2}): {} variables, {} cone constraints, {} equalities", file.problem.num_vars(), file.problem.cones.len(), file.problem.equalities.len())?;
    writeln!(w, "wrote {} and {} ({build_seconds:.3} s)", json_path.display(), sdpa_path.display())?;
    Ok(EXIT_OK)
}

fn run_solver(cfg: &Config, kind: SolverKind, exe: Option<&Path>, p: &ConicProblem) -> Result<Solution> {
    match kind {
        SolverKind::Internal => solve(p, &cfg.solver),
        SolverKind::External => {
            let exe = exe.or(cfg.external_exe.as_deref()).ok_or_else(|| Error::Invalid("external solver needs --exe".into()))?;
            solve_external(p, exe)
        }
    }
}

pub fn cmd_solve(cfg: &Config, file: &Path, kind: SolverKind, exe: Option<&Path>, json: bool, w: &mut dyn Write) -> Result<i32> {
    let t0 = Instant::now();
    let p = read_problem(file)?;
    let build = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let sol = run_solver(cfg, kind, exe, &p)?;
    let solve_time = t1.elapsed().as_secs_f64();
    if json {
        let out = serde_json::json!({
            "status": sol.status,
            "objective": sol.objective,
            "dual_objective": sol.dual_objective,
            "residuals": sol.residuals,
            "iterations": sol.iterations,
            "build_seconds": build,
            "solve_seconds": solve_time,
            "x": sol.x,
        });
        writeln!(w, "{}", serde_json::to_string_pretty(&out)?)?;
    } else {
        writeln!(w, "problem     {}", p.name)?;
        writeln!(w, "status      {}", sol.status)?;
        writeln!(w, "objective   {}", sol.objective)?;
        writeln!(w, "dual        {}", sol.dual_objective)?;
        writeln!(w, "residuals   primal {:.3e}  dual {:.3e}  gap {:.3e}", sol.residuals.primal, sol.residuals.dual, sol.residuals.gap)?;
        writeln!(w, "iterations  {}", sol.iterations)?;
        writeln!(w, "time        build {build:.3} s  solve {solve_time:.3} s  total {:.3} s", build + solve_time)?;
    }
    Ok(if sol.status == Status::Stalled { EXIT_STALL } else { EXIT_OK })
}

/// One `(trial, hierarchy, r)` cell of a reproduction table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cell {
    pub trial: usize,
    pub hierarchy: String,
    pub r: u32,
    pub status: Option<Status>,
    /// `-inf` for infeasible, `+inf` for unbounded, `None` when skipped.
    pub optv: Option<f64>,
    pub solt: f64,
    pub tott: f64,
    pub exceeded: bool,
    pub underflow: bool,
}

impl Cell {
    fn optv_text(&self) -> String {
        if self.exceeded {
            return "*".into();
        }
        match (self.optv, self.status) {
            (Some(v), _) if v == f64::INFINITY => "+inf".into(),
            (Some(v), _) if v == f64::NEG_INFINITY => "-inf".into(),
            (Some(v), Some(Status::Stalled)) => format!("{v:.4}?"),
            (Some(v), _) => format!("{v:.4}"),
            (None, _) => "".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub n1: usize,
    pub n2: usize,
    pub cells: Vec<Cell>,
}

impl ReproduceReport {
    pub fn get(&self, trial: usize, h: &str, r: u32) -> Option<&Cell> {
        self.cells.iter().find(|c| c.trial == trial && c.hierarchy == h && c.r == r)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("trial,hierarchy,r,status,optv,solt,tott,exceeded,underflow\n");
        for c in &self.cells {
            let status = c.status.map(|s| s.to_string()).unwrap_or_default();
            let optv = c.optv.map(|v| v.to_string()).unwrap_or_default();
            s += &format!("{},{},{},{},{},{:.4},{:.4},{},{}\n", c.trial, c.hierarchy, c.r, status, optv, c.solt, c.tott, c.exceeded, c.underflow);
        }
        s
    }

    /// One table per trial: rows are depths, column groups are hierarchies.
    pub fn markdown(&self) -> String {
        let mut names: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !names.contains(&c.hierarchy.as_str()) {
                names.push(&c.hierarchy);
            }
        }
        let trials = self.cells.iter().map(|c| c.trial + 1).max().unwrap_or(0);
        let r_max = self.cells.iter().map(|c| c.r).max().unwrap_or(0);
        let mut s = String::new();
        for t in 0..trials {
            s += &format!("### ({}, {}), trial {t}\n\n| r |", self.n1, self.n2);
            for n in &names {
                s += &format!(" {n} optv | solt | tott |");
            }
            s += "\n|---|";
            s += &"---:|---:|---:|".repeat(names.len());
            s += "\n";
            for r in 0..=r_max {
                s += &format!("| {r} |");
                for n in &names {
                    match self.get(t, n, r) {
                        Some(c) if c.status.is_some() || c.exceeded => {
                            let flag = if c.underflow { " (u)" } else { "" };
                            s += &format!(" {}{flag} | {:.2} | {:.2} |", c.optv_text(), c.solt, c.tott);
                        }
                        _ => s += " | | |",
                    }
                }
                s += "\n";
            }
            s += "\n";
        }
        if self.cells.iter().any(|c| c.underflow) {
            s += "(u): moment table has nonzero entries below 1e-12\n";
        }
        if self.cells.iter().any(|c| c.exceeded) {
            s += "*: total time exceeded the budget\n";
        }
        s
    }
}

pub struct ReproduceOptions {
    pub n1: usize,
    pub n2: usize,
    pub r_max: u32,
    pub trials: usize,
    pub budget_seconds: f64,
    pub seed: u64,
    pub concise: bool,
    pub normalized_moments: bool,
    pub hierarchies: Vec<Hierarchy>,
}

fn optv(sol: &Solution) -> f64 {
    match sol.status {
        Status::Infeasible => f64::NEG_INFINITY,
        Status::Unbounded => f64::INFINITY,
        _ => sol.objective,
    }
}

pub fn reproduce(cfg: &Config, o: &ReproduceOptions) -> Result<ReproduceReport> {
    let sh = shape(o.n1, o.n2)?;
    let opts = BuildOptions { concise: o.concise, normalized_moments: o.normalized_moments };
    let mut cells = Vec::new();
    for trial in 0..o.trials {
        let c = random_pd(sh.n(), o.seed + trial as u64);
        for h in &o.hierarchies {
            let mut stopped = false;
            for r in 0..=o.r_max {
                let h = h.with_depth(r);
                let mut cell = Cell { trial, hierarchy: h.name().into(), r, status: None, optv: None, solt: 0.0, tott: 0.0, exceeded: false, underflow: false };
                if stopped {
                    cells.push(cell);
                    continue;
                }
                if let Hierarchy::Lasserre(r) = h {
                    let d = 2 * r + 2;
                    cell.underflow = MomentTable::build(sh, d, o.normalized_moments).underflow_flag(d);
                }
                let t0 = Instant::now();
                let p = assemble_copp_with(&c, h, sh, opts)?;
                let t1 = Instant::now();
                let sol = solve(&p, &cfg.solver)?;
                cell.solt = t1.elapsed().as_secs_f64();
                cell.tott = t0.elapsed().as_secs_f64();
                cell.status = Some(sol.status);
                cell.optv = Some(optv(&sol));
                if cell.tott > o.budget_seconds {
                    cell.exceeded = true;
                    stopped = true;
                }
                cells.push(cell);
            }
        }
    }
    Ok(ReproduceReport { n1: o.n1, n2: o.n2, cells })
}

/// Outcome of `verify`.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Certified { depth: u32, hierarchy: Hierarchy, margin: f64 },
    Refuted { witness: ExactWitness, source: &'static str },
    Undecided { sample_min: f64 },
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Certified { depth, .. } => write!(f, "certified-copositive({depth})"),
            Verdict::Refuted { .. } => write!(f, "refuted"),
            Verdict::Undecided { .. } => write!(f, "undecided"),
        }
    }
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Verdict::Certified { depth, hierarchy, margin } => serde_json::json!({
                "verdict": "certified-copositive", "depth": depth, "hierarchy": hierarchy.name(), "margin": margin,
            }),
            Verdict::Refuted { witness, source } => serde_json::json!({
                "verdict": "refuted", "source": source, "witness": witness.to_json(),
            }),
            Verdict::Undecided { sample_min } => serde_json::json!({ "verdict": "undecided", "sample_min": sample_min }),
        }
    }
}

/// Exact refutation first, then inner certificates by increasing depth.
/// A refutation is an exact point of `K`, so the two answers never clash.
pub fn verify(cfg: &Config, a: &SymMatrix, sh: ConeShape, depth: u32) -> Result<Verdict> {
    check_symmetric(a, sh.n())?;
    let scale = a.amax().max(1.0);
    if let Some(found) = yildirim_refutation(a, sh, depth, 1e-12 * scale)? {
        return Ok(Verdict::Refuted { witness: found.witness, source: "yildirim" });
    }
    let grid = grid_cone_min(a, sh, cfg.grid_k)?;
    if let Some(witness) = grid.witness {
        return Ok(Verdict::Refuted { witness, source: "grid" });
    }
    let opts = BuildOptions { concise: cfg.concise, normalized_moments: true };
    for r in 0..=depth {
        if dp_member(a, r, sh, cfg.concise, 0.0)? {
            return Ok(Verdict::Certified { depth: r, hierarchy: Hierarchy::Dp(r), margin: 0.0 });
        }
        for h in [Hierarchy::Zvp(r), Hierarchy::Nn(r)] {
            let p = membership_margin(a, h, sh, opts)?;
            let sol = solve(&p, &cfg.solver)?;
            if sol.status == Status::Optimal && sol.objective >= -cfg.verify_tol * scale {
                return Ok(Verdict::Certified { depth: r, hierarchy: h, margin: sol.objective });
            }
        }
    }
    let s = sample_cone_min(a, sh, cfg.samples, cfg.seed);
    Ok(Verdict::Undecided { sample_min: s.min })
}

pub fn cmd_verify(cfg: &Config, matrix: &Path, n1: usize, n2: usize, depth: u32, json: bool, w: &mut dyn Write) -> Result<i32> {
    let a = read_matrix(matrix)?;
    let sh = shape(n1, n2)?;
    let v = verify(cfg, &a, sh, depth)?;
    if json {
        writeln!(w, "{}", serde_json::to_string_pretty(&v.to_json())?)?;
        return Ok(EXIT_OK);
    }
    writeln!(w, "{v}")?;
    match &v {
        Verdict::Certified { hierarchy, margin, .. } => writeln!(w, "certificate {hierarchy}, margin {margin:.3e}")?,
        Verdict::Refuted { witness, source } => {
            writeln!(w, "witness ({source}) x = [{}]", witness.point.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", "))?;
            writeln!(w, "x^T A x = {} ~ {:.6e}", witness.value, crate::scalar::rational_to_f64(&witness.value))?;
        }
        Verdict::Undecided { sample_min } => writeln!(w, "sampled minimum over Delta(K): {sample_min:.6e}")?,
    }
    Ok(EXIT_OK)
}

fn parse_hierarchies(list: Option<&str>) -> Result<Vec<Hierarchy>> {
    match list {
        None => Ok(Hierarchy::all(0).to_vec()),
        Some(s) => s.split(',').map(|t| Hierarchy::parse(t.trim(), 0)).collect(),
    }
}

fn dispatch(cli: Cli, w: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Build { hierarchy, r, n1, n2, concise, seed, out } => {
            let h = Hierarchy::parse(&hierarchy, r)?;
            cmd_build(h, n1, n2, concise.unwrap_or(cfg.concise), seed.unwrap_or(cfg.seed), &out, w)
        }
        Command::Solve { file, solver, exe, tol, json } => {
            if let Some(t) = tol {
                cfg.solver = cfg.solver.with_tol(t);
                cfg.solver.validate()?;
            }
            cmd_solve(&cfg, &file, solver.unwrap_or(cfg.solver_kind), exe.as_deref(), json, w)
        }
        Command::Reproduce { n1, n2, r_max, trials, budget_seconds, seed, concise, hierarchies, raw_moments, out } => {
            let o = ReproduceOptions {
                n1,
                n2,
                r_max,
                trials: trials.unwrap_or(cfg.trials),
                budget_seconds: budget_seconds.unwrap_or(cfg.budget_seconds),
                seed: seed.unwrap_or(cfg.seed),
                concise: concise.unwrap_or(cfg.concise),
                normalized_moments: !raw_moments,
                hierarchies: parse_hierarchies(hierarchies.as_deref())?,
            };
            if o.trials == 0 || o.budget_seconds.is_nan() || o.budget_seconds <= 0.0 {
                return Err(Error::Invalid("trials and budget must be positive".into()));
            }
            let report = reproduce(&cfg, &o)?;
            let md = report.markdown();
            write!(w, "{md}")?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("results.csv"), report.csv())?;
                std::fs::write(dir.join("results.md"), md)?;
            }
            let code = if report.cells.iter().any(|c| c.exceeded) {
                EXIT_BUDGET
            } else if report.cells.iter().any(|c| c.status == Some(Status::Stalled)) {
                EXIT_STALL
            } else {
                EXIT_OK
            };
            Ok(code)
        }
        Command::Verify { matrix, n1, n2, depth, json } => cmd_verify(&cfg, &matrix, n1, n2, depth, json, w),
    }
}

/// Parses `args` (program name first) and runs the command, writing to `out`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}
