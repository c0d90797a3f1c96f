//! Command-line front end of the decomposed solver.
//!
//! Three subcommands:
//!
//! * `run <config>` — one full decomposed solve; writes `solution.csv`,
//!   `interface_nodes.csv` (when an interface stage ran), and `report.json`
//!   into the output directory.
//! * `bench <config> --subdomains 1,2,4,8` — repeats the run across
//!   subdomain counts (matching the worker count to the subdomain count
//!   unless `--workers` pins it) and writes a combined `report.json` with
//!   idealized speedups.
//! * `check <config>` — runs the branching growth checker only and reports
//!   whether the configured horizon is admissible.
//!
//! All subcommands accept `--seed`, `--workers`, and `--out-dir` overrides;
//! the config file itself is optional and every field has a default. Errors
//! exit with the class code of [`PddError::exit_code`].

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use pdd::error::{PddError, Result};
use pdd::branching::{check_marked_assumptions, AssumptionCase};
use pdd::orchestrator::{
    measure_speedup, preset, run_pdd, PddConfig, PddRun, RunSettings, Stage1,
};

#[derive(Parser)]
#[command(
    name = "pdd-solve",
    version,
    about = "Probabilistic domain decomposition PDE solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one decomposed solve and write its outputs.
    Run(RunArgs),
    /// Time the pipeline across several subdomain counts.
    Bench(BenchArgs),
    /// Run the branching assumption checker only.
    Check(CheckArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-thread count override.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Problem override: kpp, heat, cva, or elliptic.
    #[arg(long)]
    problem: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Subdomain count override.
    #[arg(long)]
    subdomains: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated subdomain counts to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    subdomains: Vec<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Horizon override for the admissibility question.
    #[arg(long)]
    horizon: Option<f64>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Check(args) => cmd_check(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(i32::from(e.exit_code()));
    }
}

fn pretty_json(value: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| PddError::Config(format!("report serialization: {e}")))
}

fn load_config(common: &CommonArgs) -> Result<PddConfig> {
    match &common.config {
        Some(path) => PddConfig::from_path(path),
        None => Ok(PddConfig::default()),
    }
}

fn build_settings(common: &CommonArgs, cfg: &PddConfig) -> Result<RunSettings> {
    let mut s = cfg.resolve()?;
    if let Some(problem) = &common.problem {
        s.kind = problem.parse()?;
    }
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    if let Some(workers) = common.workers {
        s.workers = workers;
    }
    s.validate()?;
    Ok(s)
}

fn output_dir(common: &CommonArgs, cfg: &PddConfig) -> PathBuf {
    common
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(cfg.out_dir()))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let mut settings = build_settings(&args.common, &cfg)?;
    if let Some(p) = args.subdomains {
        settings.subdomains = p;
        settings.validate()?;
    }
    let out_dir = output_dir(&args.common, &cfg);
    fs::create_dir_all(&out_dir)?;

    let run = run_pdd(&settings)?;
    print_run_summary(&run);

    let solution_path = out_dir.join("solution.csv");
    write_solution_csv(&solution_path, &run)?;
    let mut written = vec![solution_path.display().to_string()];

    if run.interface.is_some() {
        let interface_path = out_dir.join("interface_nodes.csv");
        write_interface_csv(&interface_path, &run)?;
        written.push(interface_path.display().to_string());
    }

    let report_path = out_dir.join("report.json");
    let report = run_report(&settings, &run);
    fs::write(&report_path, pretty_json(&report)? + "\n")?;
    written.push(report_path.display().to_string());

    println!("wrote {}", written.join(", "));
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.subdomains.is_empty() {
        return Err(PddError::InvalidArgument(
            "bench needs at least one subdomain count".into(),
        ));
    }
    let cfg = load_config(&args.common)?;
    let base = build_settings(&args.common, &cfg)?;
    let out_dir = output_dir(&args.common, &cfg);
    fs::create_dir_all(&out_dir)?;

    let mut runs: Vec<(usize, RunSettings, PddRun)> = Vec::new();
    for &p in &args.subdomains {
        // The scaling story wants the worker count to track the subdomain
        // count; an explicit --workers pins it instead.
        let workers = args.common.workers.unwrap_or(p);
        let settings = base.clone().with_subdomains(p).with_workers(workers);
        settings.validate()?;
        println!("benchmarking p = {p} (workers = {workers}) ...");
        let run = run_pdd(&settings)?;
        println!(
            "  stage1 ideal {:.4} s | stage2 ideal {:.4} s | wall {:.4} s",
            run.timings.stage1_ideal_seconds,
            run.timings.stage2_ideal_seconds,
            run.timings.stage1_wall_seconds + run.timings.stage2_wall_seconds,
        );
        runs.push((p, settings, run));
    }

    let baseline = runs
        .iter()
        .find(|(p, _, _)| *p == 1)
        .map(|(_, _, run)| run.timings.stage2_ideal_seconds);
    let mut entries = Vec::new();
    for (p, settings, run) in &runs {
        let stage2_speedup = match baseline {
            Some(t1) if *p > 1 => {
                Some(measure_speedup(t1, run.timings.stage2_ideal_seconds)?)
            }
            _ => None,
        };
        if let Some(s) = stage2_speedup {
            println!("p = {p}: stage-2 speedup {s:.2} (ideal {p})");
        }
        entries.push(serde_json::json!({
            "subdomains": p,
            "workers": settings.workers,
            "timings": run.timings,
            "restarts": run.restarts,
            "max_interface_std_error": run.max_interface_std_error,
            "errors": run.errors,
            "stage2_speedup_vs_monolithic": stage2_speedup,
        }));
    }

    let (_, _, first) = &runs[0];
    let report = serde_json::json!({
        "mode": "bench",
        "problem": {
            "kind": first.kind,
            "label": first.label,
            "stationary": first.stationary,
        },
        "seed": base.seed,
        "subdomain_counts": args.subdomains,
        "runs": entries,
    });
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, pretty_json(&report)? + "\n")?;
    println!("wrote {}", report_path.display());
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let settings = build_settings(&args.common, &cfg)?;
    let horizon = args.horizon.or(settings.horizon);
    let preset = preset(settings.kind, settings.domain.as_deref(), horizon)?;
    println!("problem: {} ({})", preset.kind, preset.label);
    match &preset.stage1 {
        Stage1::Linear(_) => {
            println!("estimator: linear pathwise estimator");
            println!("verdict: admissible (no branching growth assumptions apply)");
            Ok(())
        }
        Stage1::Branching(spec) => {
            let t_final = preset
                .horizon
                .expect("branching presets are evolution problems");
            println!(
                "estimator: {} branching tree",
                if spec.classical { "classical" } else { "marked" }
            );
            let report = check_marked_assumptions(spec, t_final)?;
            println!("case: {}", case_name(report.case));
            println!("l(1) = {}", report.l_at_one);
            match report.t_star {
                Some(t) => println!("blow-up bound T* = {t}"),
                None => println!("blow-up bound T* = none (growth stays bounded)"),
            }
            println!("horizon = {}", report.horizon);
            if let Some(note) = &report.note {
                println!("note: {note}");
            }
            if report.admissible() {
                println!("verdict: admissible");
                Ok(())
            } else {
                println!("verdict: violated");
                Err(PddError::AssumptionViolated(format!(
                    "horizon {} exceeds the square-integrability bound",
                    report.horizon
                )))
            }
        }
    }
}

fn case_name(case: AssumptionCase) -> &'static str {
    match case {
        AssumptionCase::Contraction => "contraction",
        AssumptionCase::BoundedGrowth => "bounded_growth",
        AssumptionCase::WithinHorizonBound => "within_horizon_bound",
        AssumptionCase::Violated => "violated",
    }
}

fn print_run_summary(run: &PddRun) {
    println!("problem: {} ({})", run.kind, run.label);
    println!(
        "subdomains: {} | interface nodes: {}",
        run.subdomains,
        run.interface.as_ref().map_or(0, |g| g.node_count()),
    );
    println!(
        "stage 1: wall {:.4} s, ideal {:.4} s on {} workers ({} units)",
        run.timings.stage1_wall_seconds,
        run.timings.stage1_ideal_seconds,
        run.timings.workers,
        run.timings.stage1_unit_seconds.len(),
    );
    println!(
        "stage 2: wall {:.4} s, ideal {:.4} s ({} units)",
        run.timings.stage2_wall_seconds,
        run.timings.stage2_ideal_seconds,
        run.timings.stage2_unit_seconds.len(),
    );
    if run.restarts > 0 {
        println!("pruned-and-restarted trees: {}", run.restarts);
    }
    if run.max_interface_std_error > 0.0 {
        println!(
            "max interface std error: {:.3e}",
            run.max_interface_std_error
        );
    }
    if let Some(errors) = &run.errors {
        println!(
            "error vs closed form: max {:.3e}, rms {:.3e}",
            errors.max_abs, errors.rms
        );
    }
}

fn run_report(settings: &RunSettings, run: &PddRun) -> serde_json::Value {
    serde_json::json!({
        "mode": "run",
        "problem": {
            "kind": run.kind,
            "label": run.label,
            "stationary": run.stationary,
        },
        "settings": settings,
        "decomposition": {
            "subdomains": run.subdomains,
            "cuts": run.cuts,
            "levels": run.levels,
        },
        "timings": run.timings,
        "restarts": run.restarts,
        "max_interface_std_error": run.max_interface_std_error,
        "solution": {
            "shape": run.solution.shape(),
            "max_residual": run.solution.max_residual,
        },
        "errors": run.errors,
        "assumption": run.assumption,
    })
}

/// `solution.csv`: one row per grid point, shortest round-trip decimals.
fn write_solution_csv(path: &Path, run: &PddRun) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let level_name = if run.stationary { "y" } else { "t" };
    writeln!(w, "x,{level_name},u")?;
    let xs = &run.solution.axes[0];
    let levels = &run.solution.axes[1];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &level) in levels.iter().enumerate() {
            writeln!(w, "{x},{level},{}", run.solution.values[i * levels.len() + j])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `interface_nodes.csv`: the priced interface, one row per node.
fn write_interface_csv(path: &Path, run: &PddRun) -> Result<()> {
    let grid = run
        .interface
        .as_ref()
        .expect("caller checked the interface exists");
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "cut,t,estimate,std_error,n")?;
    for c in 0..grid.cuts().len() {
        for j in 0..grid.levels().len() {
            let (cut, level) = grid.node(c, j);
            let v = grid
                .value(c, j)
                .expect("a finished run has a fully priced interface");
            writeln!(
                w,
                "{cut},{level},{},{},{}",
                v.estimate, v.std_error, v.n_samples
            )?;
        }
    }
    w.flush()?;
    Ok(())
}
