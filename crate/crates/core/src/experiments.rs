//! Experiment drivers behind the CLI and the acceptance tests: effectivity
//! tables on uniform and stretched meshes, the conditioning sweep and the
//! adaptation study. Every driver is deterministic for a fixed config.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use crate::adapt::{adapt_loop, AdaptConfig, AdaptOutcome, AdaptTrace, DirectionFrame, IndicatorKind};
use crate::error::{Error, Result};
use crate::estimate::{element_indicators, Effectivity};
use crate::fem::{classify, solve_aps_with, solve_p_direct, ApsOptions, StabilizationSize};
use crate::mesh::{build_perturbed_mesh, build_structured_mesh, Mesh};
use crate::problem::{CaseKind, Problem};

pub const TABLE_CSV_HEADER: &str = "block,h1,h2,nv,ei_zz,ei_a,ei_sa,err,status";
pub const CONDITIONING_CSV_HEADER: &str = "eps,h,nv,p_condition,p_err,aps_err,aps_residual,status";
pub const ADAPT_CSV_HEADER: &str =
    "tol,indicator,iterations,converged,nv,nt,ratio,err,aspect_max,aspect_avg,ei_zz,ei_a,ei_sa";

/// Uniform ladder `h = 0.1 · 2^-k`.
pub const UNIFORM_LADDER: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];
/// ε values of the conditioning sweep.
pub const CONDITIONING_EPS: [f64; 6] = [1.0, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10];
/// TOL ladder of the adaptation tables.
pub const TOL_LADDER: [f64; 4] = [0.25, 0.125, 0.0625, 0.03125];
/// Jitter of the stretched-mesh family used by the anisotropic table.
pub const ANISO_JITTER: f64 = 0.2;
/// Jitter and size of the initial mesh of the adaptive loop.
pub const ADAPT_INITIAL_JITTER: f64 = 0.15;
pub const ADAPT_INITIAL_H: f64 = 0.02;
/// Size of the uniform baseline quoted next to the adaptation tables.
pub const BASELINE_H: f64 = 0.00625;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    UniformTable,
    AnisoTable,
    Conditioning,
    AdaptStudy,
    SingleSolve,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform_table" | "table-uniform" => Self::UniformTable,
            "aniso_table" | "table-aniso" => Self::AnisoTable,
            "conditioning" => Self::Conditioning,
            "adapt_study" | "adapt" => Self::AdaptStudy,
            "single_solve" | "solve" => Self::SingleSolve,
            _ => return Err(Error::InvalidArgument(format!("unknown experiment '{s}'"))),
        })
    }
}

/// Flat experiment configuration; see [`ExperimentConfig::set`] for keys.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub case: CaseKind,
    pub alpha: f64,
    pub eps: f64,
    /// Overrides the layer width of `case`.
    pub delta: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    pub tols: Vec<f64>,
    pub indicator: IndicatorKind,
    pub max_iterations: usize,
    /// Run the fixed iteration count instead of stopping in the band.
    pub fixed_iterations: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub jitter: f64,
    pub stabilization: StabilizationSize,
    pub frame: DirectionFrame,
    /// Number of rungs kept from each table ladder (`None` = all).
    pub levels: Option<usize>,
    /// Also solve on the uniform `h = 0.00625` mesh in the adaptation study.
    pub baseline: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::SingleSolve,
            case: CaseKind::Smooth,
            alpha: 0.0,
            eps: 1.0,
            delta: None,
            nx: 20,
            ny: 20,
            tols: TOL_LADDER.to_vec(),
            indicator: IndicatorKind::Full,
            max_iterations: 15,
            fixed_iterations: true,
            output_dir: PathBuf::from("out"),
            seed: 1,
            jitter: ANISO_JITTER,
            stabilization: StabilizationSize::default(),
            frame: DirectionFrame::default(),
            levels: None,
            baseline: false,
        }
    }
}

fn parse<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value '{value}' for key '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("bad value '{value}' for key '{key}'"))),
    }
}

impl ExperimentConfig {
    /// Sets one key. Keys: experiment, case, alpha, eps, delta, nx, ny,
    /// tol (comma list), indicator, max_iter, fixed_iterations, out, seed,
    /// jitter, stab_size, frame, levels, baseline.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "experiment" => self.experiment = value.parse()?,
            "case" => self.case = value.parse()?,
            "alpha" => self.alpha = parse(key, value)?,
            "eps" => self.eps = parse(key, value)?,
            "delta" => self.delta = Some(parse(key, value)?),
            "nx" => self.nx = parse(key, value)?,
            "ny" => self.ny = parse(key, value)?,
            "tol" | "tols" => {
                self.tols = value
                    .split(',')
                    .map(|t| parse(key, t.trim()))
                    .collect::<Result<_>>()?
            }
            "indicator" => self.indicator = value.parse()?,
            "max_iter" | "max_iterations" => self.max_iterations = parse(key, value)?,
            "fixed_iterations" => self.fixed_iterations = parse_bool(key, value)?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "jitter" => self.jitter = parse(key, value)?,
            "stab_size" => self.stabilization = value.parse()?,
            "frame" => self.frame = value.parse()?,
            "levels" => self.levels = Some(parse(key, value)?),
            "baseline" => self.baseline = parse_bool(key, value)?,
            other => return Err(Error::InvalidArgument(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return bad(format!("eps = {} outside (0, 1]", self.eps));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha = {} must be >= 0", self.alpha));
        }
        if let Some(d) = self.delta {
            if !(d >= 0.0) {
                return bad(format!("delta = {d} must be >= 0"));
            }
        }
        if self.tols.is_empty() || self.tols.iter().any(|&t| !(t > 0.0)) {
            return bad("every TOL must be positive".into());
        }
        if self.nx == 0 || self.ny == 0 {
            return bad("nx and ny must be positive".into());
        }
        if !(0.0..0.25).contains(&self.jitter) {
            return bad(format!("jitter = {} outside [0, 0.25)", self.jitter));
        }
        if self.max_iterations == 0 {
            return bad("max_iter must be positive".into());
        }
        if self.levels == Some(0) {
            return bad("levels must be positive".into());
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem<f64>> {
        self.problem_with_eps(self.eps)
    }

    fn problem_with_eps(&self, eps: f64) -> Result<Problem<f64>> {
        let delta = self.delta.unwrap_or_else(|| self.case.delta());
        Problem::manufactured_with_delta(self.alpha, eps, delta)
    }

    fn solver(&self) -> ApsOptions<f64> {
        ApsOptions {
            stabilization_size: self.stabilization,
            ..ApsOptions::default()
        }
    }

    fn trim<T: Clone>(&self, ladder: &[T]) -> Vec<T> {
        ladder[..self.levels.unwrap_or(ladder.len()).min(ladder.len())].to_vec()
    }

    pub fn adapt_config(&self, tol: f64) -> AdaptConfig<f64> {
        let mut c = AdaptConfig::new(tol, self.indicator);
        c.max_iterations = self.max_iterations;
        c.stop_on_band = !self.fixed_iterations;
        c.frame = self.frame;
        c.solver = self.solver();
        c
    }
}

/// Mesh with `round(1/h1)` columns and `round(1/h2)` rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshFamily {
    Structured,
    Perturbed { jitter: f64, seed: u64 },
}

fn cells(h: f64) -> Result<usize> {
    let n = (1.0 / h).round();
    if !(n >= 1.0) || ((n * h) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("h = {h} does not divide the unit interval")));
    }
    Ok(n as usize)
}

pub fn ladder_mesh(h1: f64, h2: f64, family: MeshFamily) -> Result<Mesh<f64>> {
    let (nx, ny) = (cells(h1)?, cells(h2)?);
    match family {
        MeshFamily::Structured => build_structured_mesh(nx, ny, h1, h2),
        MeshFamily::Perturbed { jitter, seed } => build_perturbed_mesh(nx, ny, jitter, seed),
    }
}

/// One table row; `status` holds the error message of a failed solve.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub block: String,
    pub h1: f64,
    pub h2: f64,
    pub nv: usize,
    pub effectivity: Effectivity<f64>,
    pub status: Option<String>,
}

impl TableRow {
    pub fn error(&self) -> Option<f64> {
        self.effectivity.relative_error
    }
}

fn solve_row(
    problem: &Problem<f64>,
    opts: &ApsOptions<f64>,
    block: &str,
    (h1, h2): (f64, f64),
    family: MeshFamily,
) -> TableRow {
    let mut row = TableRow {
        block: block.to_string(),
        h1,
        h2,
        nv: 0,
        effectivity: Effectivity::default(),
        status: None,
    };
    let run = || -> Result<(usize, Effectivity<f64>)> {
        let mesh = classify(&ladder_mesh(h1, h2, family)?, problem)?;
        let sol = solve_aps_with(&mesh, problem, opts)?;
        let report = element_indicators(&mesh, &sol, problem)?;
        Ok((mesh.num_vertices(), report.effectivity.unwrap_or_default()))
    };
    match run() {
        Ok((nv, eff)) => {
            row.nv = nv;
            row.effectivity = eff;
        }
        Err(e) => row.status = Some(e.to_string()),
    }
    row
}

pub fn run_ladder(
    problem: &Problem<f64>,
    opts: &ApsOptions<f64>,
    block: &str,
    pairs: &[(f64, f64)],
    family: MeshFamily,
) -> Vec<TableRow> {
    pairs.iter().map(|&p| solve_row(problem, opts, block, p, family)).collect()
}

/// Isotropic ladder on structured alternating-diagonal meshes.
pub fn run_uniform_table(cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let pairs: Vec<_> = cfg.trim(&UNIFORM_LADDER).into_iter().map(|h| (h, h)).collect();
    let block = format!("alpha={} eps={:e}", cfg.alpha, cfg.eps);
    Ok(run_ladder(&problem, &cfg.solver(), &block, &pairs, MeshFamily::Structured))
}

/// `h1 = 0.1` along the field, `h2 = 0.01 · 2^-k`, aspect 10 to 1280.
pub fn right_direction_pairs() -> Vec<(f64, f64)> {
    (0..8).map(|k| (0.1, 0.01 / f64::powi(2.0, k))).collect()
}

/// `h2 = 0.1` across the field, `h1 = 0.1 · 2^-k`, aspect 1 to 16.
pub fn wrong_direction_pairs() -> Vec<(f64, f64)> {
    (0..5).map(|k| (0.1 / f64::powi(2.0, k), 0.1)).collect()
}

/// Fixed 4:1 cells stretched across the field, refined in both directions.
pub fn four_to_one_pairs() -> Vec<(f64, f64)> {
    (0..5)
        .map(|k| {
            let s = f64::powi(2.0, k);
            (0.025 / s, 0.1 / s)
        })
        .collect()
}

/// The three stretched-mesh blocks on jittered grids.
pub fn run_aniso_table(cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let family = MeshFamily::Perturbed {
        jitter: cfg.jitter,
        seed: cfg.seed,
    };
    let opts = cfg.solver();
    let mut rows = run_ladder(&problem, &opts, "right", &cfg.trim(&right_direction_pairs()), family);
    rows.extend(run_ladder(&problem, &opts, "wrong", &cfg.trim(&wrong_direction_pairs()), family));
    rows.extend(run_ladder(&problem, &opts, "four_to_one", &cfg.trim(&four_to_one_pairs()), family));
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v:e}"))
}

pub fn write_table_csv<W: Write>(rows: &[TableRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TABLE_CSV_HEADER}")?;
    for r in rows {
        let e = &r.effectivity;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.block.replace(',', ";"),
            r.h1,
            r.h2,
            r.nv,
            opt(e.zz),
            opt(e.full),
            opt(e.simplified),
            opt(e.relative_error),
            r.status.as_deref().unwrap_or("ok").replace(',', ";"),
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditioningRow {
    pub eps: f64,
    pub h: f64,
    pub nv: usize,
    /// `None` when the P-model factorization failed.
    pub p_condition: Option<f64>,
    pub p_error: Option<f64>,
    pub aps_error: Option<f64>,
    pub aps_relative_residual: Option<f64>,
    pub status: Option<String>,
}

/// P-model condition estimate and APS error for each ε of the sweep on the
/// `nx × nx` structured mesh.
pub fn run_conditioning(cfg: &ExperimentConfig) -> Result<Vec<ConditioningRow>> {
    cfg.validate()?;
    let h = 1.0 / cfg.nx as f64;
    let mut rows = Vec::new();
    for &eps in &CONDITIONING_EPS {
        let problem = cfg.problem_with_eps(eps)?;
        let mesh = classify(&build_structured_mesh(cfg.nx, cfg.nx, h, h)?, &problem)?;
        let exact = problem.exact.clone();
        let mut row = ConditioningRow {
            eps,
            h,
            nv: mesh.num_vertices(),
            p_condition: None,
            p_error: None,
            aps_error: None,
            aps_relative_residual: None,
            status: None,
        };
        let mut notes = Vec::new();
        match solve_p_direct(&mesh, &problem) {
            Ok(p) => {
                row.p_condition = p.stats.condition;
                row.p_error = exact
                    .as_deref()
                    .and_then(|ex| crate::fem::h1_relative_error(&mesh, &p.phi, ex).ok());
            }
            Err(e) => notes.push(format!("P unsolvable: {e}")),
        }
        match solve_aps_with(&mesh, &problem, &cfg.solver()) {
            Ok(s) => {
                row.aps_relative_residual = Some(s.stats.relative_residual());
                row.aps_error = exact
                    .as_deref()
                    .and_then(|ex| crate::fem::h1_relative_error(&mesh, &s.phi, ex).ok());
            }
            Err(e) => notes.push(format!("APS failed: {e}")),
        }
        if !notes.is_empty() {
            row.status = Some(notes.join("; "));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_conditioning_csv<W: Write>(rows: &[ConditioningRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CONDITIONING_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:e},{},{},{},{},{},{},{}",
            r.eps,
            r.h,
            r.nv,
            opt(r.p_condition),
            opt(r.p_error),
            opt(r.aps_error),
            opt(r.aps_relative_residual),
            r.status.as_deref().unwrap_or("ok").replace(',', ";"),
        )?;
    }
    Ok(())
}

/// Final state of one adaptive run.
#[derive(Clone, Debug)]
pub struct AdaptRun {
    pub tol: f64,
    pub outcome: std::result::Result<AdaptOutcome<f64>, String>,
    pub trace: AdaptTrace<f64>,
}

impl AdaptRun {
    pub fn final_nv(&self) -> Option<usize> {
        self.trace.last().map(|r| r.nv)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.error)
    }
}

/// Uniform-mesh comparison point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baseline {
    pub h: f64,
    pub nv: usize,
    pub error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct AdaptStudy {
    pub runs: Vec<AdaptRun>,
    pub baseline: Option<Baseline>,
}

pub fn adapt_initial_mesh(seed: u64) -> Result<Mesh<f64>> {
    let n = (1.0 / ADAPT_INITIAL_H).round() as usize;
    build_perturbed_mesh(n, n, ADAPT_INITIAL_JITTER, seed)
}

/// One adaptive run per TOL, each from the same initial mesh.
pub fn run_adapt_study(cfg: &ExperimentConfig) -> Result<AdaptStudy> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let initial = adapt_initial_mesh(cfg.seed)?;
    let runs = cfg
        .tols
        .iter()
        .map(|&tol| match adapt_loop(&initial, &problem, &cfg.adapt_config(tol)) {
            Ok(o) => AdaptRun {
                tol,
                trace: o.trace.clone(),
                outcome: Ok(o),
            },
            Err(f) => AdaptRun {
                tol,
                outcome: Err(f.to_string()),
                trace: f.trace,
            },
        })
        .collect();
    let baseline = if cfg.baseline {
        let row = solve_row(&problem, &cfg.solver(), "baseline", (BASELINE_H, BASELINE_H), MeshFamily::Structured);
        Some(Baseline {
            h: BASELINE_H,
            nv: row.nv,
            error: row.error(),
        })
    } else {
        None
    };
    Ok(AdaptStudy { runs, baseline })
}

pub fn write_adapt_csv<W: Write>(
    study: &AdaptStudy,
    indicator: IndicatorKind,
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{ADAPT_CSV_HEADER}")?;
    for run in &study.runs {
        let Some(r) = run.trace.last() else { continue };
        writeln!(
            out,
            "{},{},{},{},{},{},{:e},{},{:e},{:e},{},{},{}",
            run.tol,
            indicator.name(),
            run.trace.records.len(),
            run.trace.converged,
            r.nv,
            r.nt,
            r.ratio,
            opt(r.error),
            r.aspect_max,
            r.aspect_avg,
            opt(r.ei_zz),
            opt(r.ei_full),
            opt(r.ei_simpl),
        )?;
    }
    Ok(())
}

/// Plain-text rendering of a table for the terminal.
pub fn format_table(rows: &[TableRow]) -> String {
    let mut s = String::new();
    let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    let _ = writeln!(s, "{:<22} {:>10}-{:<10} {:>8} {:>7} {:>7} {:>7} {:>10}", "block", "h1", "h2", "NV", "eiZZ", "eiA", "eiSA", "err");
    for r in rows {
        let e = &r.effectivity;
        let _ = write!(
            s,
            "{:<22} {:>10}-{:<10} {:>8} {:>7} {:>7} {:>7} {:>10}",
            r.block,
            r.h1,
            r.h2,
            r.nv,
            f(e.zz),
            f(e.full),
            f(e.simplified),
            e.relative_error.map_or("-".to_string(), |v| format!("{v:.2e}")),
        );
        if let Some(st) = &r.status {
            let _ = write!(s, "  [{st}]");
        }
        s.push('\n');
    }
    s
}
