use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use aps_core::estimate::element_indicators;
use aps_core::experiments::{self as ex, ExperimentConfig, ExperimentKind};
use aps_core::fem::{classify, solve_aps_with, ApsOptions};
use aps_core::mesh::io::{write_mesh, write_vtk};
use aps_core::mesh::{build_perturbed_mesh, build_structured_mesh};

#[derive(Parser)]
#[command(name = "aps", version, about = "APS finite elements for anisotropic diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once on a structured (or jittered) grid and write VTK/CSV output.
    Solve(Opts),
    /// Effectivity table on the isotropic ladder h = 0.1 ... 0.00625.
    TableUniform(Opts),
    /// Effectivity tables on stretched meshes (right, wrong, 4:1).
    TableAniso(Opts),
    /// P-model conditioning against APS accuracy for eps = 1 ... 1e-10.
    Conditioning(Opts),
    /// Adaptive runs over a TOL ladder.
    Adapt(Opts),
    /// Run whatever experiment the config file names.
    Run(Opts),
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// key = value file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// smooth | layer
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Layer width override.
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated TOL list.
    #[arg(long)]
    tol: Option<String>,
    /// full | simplified
    #[arg(long)]
    indicator: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    jitter: Option<f64>,
    /// stretch | min | diameter
    #[arg(long)]
    stab_size: Option<String>,
    /// target | element
    #[arg(long)]
    frame: Option<String>,
    /// true: run max-iter iterations; false: stop once in the band.
    #[arg(long)]
    fixed_iterations: Option<bool>,
    /// Keep only the first N rungs of each table ladder.
    #[arg(long)]
    levels: Option<usize>,
    /// Add the uniform h = 0.00625 baseline to the adaptation study.
    #[arg(long)]
    baseline: bool,
}

impl Opts {
    fn config(&self, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(kind) = kind {
            cfg.experiment = kind;
            // the solve command means "plain grid" unless told otherwise
            if kind == ExperimentKind::SingleSolve {
                cfg.jitter = 0.0;
            }
        }
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_kv(&text)?;
            if let Some(kind) = kind {
                if cfg.experiment != kind {
                    bail!("config names experiment {:?} but the subcommand is {:?}", cfg.experiment, kind);
                }
            }
        }
        let mut set = |k: &str, v: Option<String>| -> Result<()> {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
            Ok(())
        };
        set("case", self.case.clone())?;
        set("alpha", self.alpha.map(|v| v.to_string()))?;
        set("eps", self.eps.map(|v| v.to_string()))?;
        set("delta", self.delta.map(|v| v.to_string()))?;
        set("tol", self.tol.clone())?;
        set("indicator", self.indicator.clone())?;
        set("nx", self.nx.map(|v| v.to_string()))?;
        set("ny", self.ny.map(|v| v.to_string()))?;
        set("out", self.out.as_ref().map(|p| p.display().to_string()))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("max_iter", self.max_iter.map(|v| v.to_string()))?;
        set("jitter", self.jitter.map(|v| v.to_string()))?;
        set("stab_size", self.stab_size.clone())?;
        set("frame", self.frame.clone())?;
        set("fixed_iterations", self.fixed_iterations.map(|v| v.to_string()))?;
        set("levels", self.levels.map(|v| v.to_string()))?;
        if self.baseline {
            cfg.baseline = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn solve(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.problem()?;
    let (hx, hy) = (1.0 / cfg.nx as f64, 1.0 / cfg.ny as f64);
    let mesh = if cfg.jitter > 0.0 {
        build_perturbed_mesh(cfg.nx, cfg.ny, cfg.jitter, cfg.seed)?
    } else {
        build_structured_mesh(cfg.nx, cfg.ny, hx, hy)?
    };
    let mesh = classify(&mesh, &problem)?;
    let opts = ApsOptions {
        stabilization_size: cfg.stabilization,
        ..ApsOptions::default()
    };
    let sol = solve_aps_with(&mesh, &problem, &opts)?;
    let report = element_indicators(&mesh, &sol, &problem)?;
    let p = sol.p();
    write_vtk(
        &mesh,
        &[
            ("phi", &sol.phi[..]),
            ("q", &sol.q[..]),
            ("p", &p[..]),
            ("eta4_full", &report.nodal_full.eta4[..]),
            ("eta4_simpl", &report.nodal_simpl.eta4[..]),
        ],
        create(&cfg.output_dir, "solution.vtk")?,
    )?;
    write_mesh(&mesh, create(&cfg.output_dir, "mesh.txt")?)?;
    report.write_element_csv(create(&cfg.output_dir, "elements.csv")?)?;
    println!(
        "NV={} NT={} eps={:e} alpha={} case={}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        cfg.eps,
        cfg.alpha,
        cfg.case.name()
    );
    println!(
        "residual={:.3e} eta_A={:.4e} eta_SA={:.4e} eta_ZZ={:.4e}",
        sol.stats.relative_residual(),
        report.eta_global_full,
        report.eta_global_simpl,
        report.eta_global_zz
    );
    if let Some(e) = report.effectivity {
        let f = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.4}"));
        println!(
            "err={} ei_ZZ={} ei_A={} ei_SA={}",
            e.relative_error.map_or("-".into(), |v| format!("{v:.4e}")),
            f(e.zz),
            f(e.full),
            f(e.simplified)
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

fn table(cfg: &ExperimentConfig, aniso: bool) -> Result<()> {
    let (rows, name) = if aniso {
        (ex::run_aniso_table(cfg)?, "table_aniso.csv")
    } else {
        (ex::run_uniform_table(cfg)?, "table_uniform.csv")
    };
    print!("{}", ex::format_table(&rows));
    ex::write_table_csv(&rows, create(&cfg.output_dir, name)?)?;
    println!("wrote {}", cfg.output_dir.join(name).display());
    Ok(())
}

fn conditioning(cfg: &ExperimentConfig) -> Result<()> {
    let rows = ex::run_conditioning(cfg)?;
    let f = |v: Option<f64>| v.map_or("unsolvable".to_string(), |v| format!("{v:.3e}"));
    println!("{:>8} {:>12} {:>12} {:>12}", "eps", "cond(P)", "err(P)", "err(APS)");
    for r in &rows {
        println!("{:>8.0e} {:>12} {:>12} {:>12}", r.eps, f(r.p_condition), f(r.p_error), f(r.aps_error));
    }
    ex::write_conditioning_csv(&rows, create(&cfg.output_dir, "conditioning.csv")?)?;
    Ok(())
}

fn adapt(cfg: &ExperimentConfig) -> Result<()> {
    let study = ex::run_adapt_study(cfg)?;
    for run in &study.runs {
        let tag = format!("tol{}_{}", run.tol, cfg.indicator.name());
        run.trace.write_csv(create(&cfg.output_dir, &format!("trace_{tag}.csv"))?)?;
        match &run.outcome {
            Ok(o) => {
                write_vtk(
                    &o.mesh,
                    &[("phi", &o.solution.phi[..]), ("q", &o.solution.q[..])],
                    create(&cfg.output_dir, &format!("mesh_{tag}.vtk"))?,
                )?;
            }
            Err(e) => eprintln!("TOL {}: {e}", run.tol),
        }
        if let Some(r) = run.trace.last() {
            println!(
                "TOL={:<8} it={:<3} NV={:<7} err={} aspect max/avg={:.0}/{:.1} in_band={}",
                run.tol,
                run.trace.records.len(),
                r.nv,
                r.error.map_or("-".into(), |e| format!("{e:.4}")),
                r.aspect_max,
                r.aspect_avg,
                r.in_band
            );
        }
    }
    if let Some(b) = &study.baseline {
        println!(
            "uniform h={} NV={} err={}",
            b.h,
            b.nv,
            b.error.map_or("-".into(), |e| format!("{e:.4}"))
        );
    }
    ex::write_adapt_csv(&study, cfg.indicator, create(&cfg.output_dir, "adapt.csv")?)?;
    Ok(())
}

fn dispatch(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.experiment {
        ExperimentKind::SingleSolve => solve(cfg),
        ExperimentKind::UniformTable => table(cfg, false),
        ExperimentKind::AnisoTable => table(cfg, true),
        ExperimentKind::Conditioning => conditioning(cfg),
        ExperimentKind::AdaptStudy => adapt(cfg),
    }
}

fn main() -> std::process::ExitCode {
    match run(Cli::parse()) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.command {
        Command::Solve(o) => o.config(Some(ExperimentKind::SingleSolve))?,
        Command::TableUniform(o) => o.config(Some(ExperimentKind::UniformTable))?,
        Command::TableAniso(o) => o.config(Some(ExperimentKind::AnisoTable))?,
        Command::Conditioning(o) => o.config(Some(ExperimentKind::Conditioning))?,
        Command::Adapt(o) => o.config(Some(ExperimentKind::AdaptStudy))?,
        Command::Run(o) => {
            if o.config.is_none() {
                bail!("run needs --config");
            }
            o.config(None)?
        }
    };
    dispatch(&cfg)
}
