//! `dchaos`: runs experiment configs and single analyses from the command
//! line.
//!
//! Exit codes: 0 when every analysis ran (whatever the verdicts), 2 for an
//! invalid config or flag, 3 when a finer precision window is needed, 4 when
//! a construction would run past what it materializes, 1 otherwise.

mod config;
mod error;
mod output;
mod runner;
mod specs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dchaos::chaos::Strategy;

use config::{AnalysisSpec, ExperimentConfig, Measure, PairMode, TupleSpec};
use error::{CliError, CliResult};
use output::{explicit_dir, resolve_dir, OutputDir};
use runner::{Envelope, Outcome};
use specs::{parse_range, ScheduleSpec};

#[derive(Parser)]
#[command(name = "dchaos", version, about = "Distributional-chaos statistics along index sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis of a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides DCHAOS_OUTPUT_DIR and the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density of P along Q, cluster bound or lower Banach density.
    Density(DensityArgs),
    /// One Φ profile of the config's tuple.
    Profile(ProfileArgs),
    /// Scrambling verdict for the config's tuple.
    Classify(ClassifyArgs),
    /// Build a construction and export a window of its points.
    Construct(ConstructArgs),
    /// Verify construction certificates.
    Verify {
        #[command(subcommand)]
        what: VerifyCommand,
    },
}

#[derive(Args)]
struct Common {
    /// Config supplying the system, tuple and named sequences.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write artifacts here as well as printing the report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    p: String,
    #[arg(long, default_value = "naturals")]
    q: String,
    #[arg(long, value_enum, default_value = "upper")]
    measure: MeasureArg,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k_bound: Option<u64>,
    #[arg(long)]
    w: Option<u64>,
    #[arg(long)]
    bound: Option<u64>,
    /// Print the JSON report instead of the bare value.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Upper,
    Cluster,
    Banach,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Lower,
    Upper,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Auto,
    Enumerate,
    Segmented,
}

#[derive(Args)]
struct Overrides {
    /// `FROM:TO` binary exponents, or `design`.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    window: Option<u32>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    sequence: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    slack: Option<f64>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    SparseBlocks,
    FullshiftQp,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(value_enum)]
    construction: ConstructionArg,
    #[arg(long)]
    n: u8,
    /// Coordinates `FROM:TO` (end exclusive) to export.
    #[arg(long, default_value = "0:1024")]
    window: String,
    /// Sparse blocks: number of materialized blocks.
    #[arg(long)]
    blocks: Option<usize>,
    /// Full-shift tuple: proximal sequence.
    #[arg(long, default_value = "naturals")]
    q: String,
    /// Full-shift tuple: separated sequence.
    #[arg(long, default_value = "naturals")]
    p: String,
    #[arg(long, default_value_t = 4)]
    growth: u64,
    #[arg(long, default_value_t = 8)]
    windows: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Coincidence certificates on random tuples of the sparse-block subshift.
    Pigeonhole {
        #[arg(long)]
        n: u8,
        #[arg(long)]
        radius: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        blocks: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dchaos: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = resolve_dir(out.as_deref(), cfg.output_dir.as_deref());
            let mut sink = OutputDir::new(dir);
            let done = runner::run(&cfg, &mut sink, &mut |line| eprintln!("{line}"))?;
            for e in &done {
                println!("{} {}", e.kind, e.name);
            }
            eprintln!("wrote {} files to {}", sink.written().len(), sink.root().display());
            Ok(())
        }
        Command::Density(a) => density(a),
        Command::Profile(a) => profile(a),
        Command::Classify(a) => classify(a),
        Command::Construct(a) => construct(a),
        Command::Verify {
            what:
                VerifyCommand::Pigeonhole {
                    n,
                    radius,
                    samples,
                    seed,
                    blocks,
                    out,
                },
        } => {
            let mut cfg = ExperimentConfig::empty();
            cfg.seed = seed;
            cfg.analyses.push(AnalysisSpec::VerifyPigeonhole {
                name: "pigeonhole".into(),
                n,
                radius,
                samples,
                blocks: blocks.unwrap_or(dchaos::constructions::SparseBlockParams::DEFAULT_BLOCKS),
            });
            let o = single(&cfg, out.as_deref())?;
            let r = &o.envelope.report;
            println!("{} of {} certificates verified", r["verified"], r["samples"]);
            Ok(())
        }
    }
}

fn base_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::empty()), ExperimentConfig::load)
}

/// Runs the config's only analysis, writing artifacts when an output
/// directory was given by flag or environment.
fn single(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<Outcome> {
    cfg.validate()?;
    let a = &cfg.analyses[0];
    let built = if a.needs_tuple() { runner::build_tuple(cfg)? } else { None };
    let o = runner::run_analysis(cfg, built.as_ref(), 0, a)?;
    if let Some(dir) = explicit_dir(out) {
        let mut sink = OutputDir::new(dir);
        if let Some(c) = built.as_ref().and_then(|b| b.construction.as_ref()) {
            sink.write_json("construction.json", c)?;
        }
        runner::write_outcome(&mut sink, &o)?;
    }
    Ok(o)
}

fn print_json(e: &Envelope) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(e)?);
    Ok(())
}

fn density(a: DensityArgs) -> CliResult<()> {
    let mut cfg = base_config(a.common.config.as_deref())?;
    let measure = match a.measure {
        MeasureArg::Upper => Measure::Upper,
        MeasureArg::Cluster => Measure::Cluster,
        MeasureArg::Banach => Measure::Banach,
    };
    cfg.analyses = vec![AnalysisSpec::Density {
        name: "density".into(),
        measure,
        p: a.p,
        q: a.q,
        m: a.m,
        n: a.n,
        k_bound: a.k_bound,
        w: a.w,
        bound: a.bound,
    }];
    let o = single(&cfg, a.common.out.as_deref())?;
    let r = &o.envelope.report;
    if a.json {
        return print_json(&o.envelope);
    }
    match measure {
        Measure::Cluster => match r["k"].as_u64() {
            Some(k) => println!("{k}"),
            None => println!("none"),
        },
        _ => println!("{}", r["value"]["decimal"].as_str().unwrap_or_default()),
    }
    Ok(())
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) -> CliResult<()> {
    if let Some(s) = &o.schedule {
        cfg.schedule = ScheduleSpec::parse(s)?;
    }
    if o.window.is_some() {
        cfg.window = o.window;
    }
    Ok(())
}

fn take_first(cfg: &mut ExperimentConfig, kind: &str) -> Option<AnalysisSpec> {
    let i = cfg.analyses.iter().position(|a| a.kind() == kind)?;
    Some(cfg.analyses.swap_remove(i))
}

fn missing(flag: &str) -> CliError {
    CliError::Schema(format!("--{flag} is required when the config has no matching analysis"))
}

fn profile(a: ProfileArgs) -> CliResult<()> {
    let mut cfg = base_config(a.common.config.as_deref())?;
    apply_overrides(&mut cfg, &a.overrides)?;
    let base = take_first(&mut cfg, "profile");
    let (name, mut mode, mut threshold, mut sequence, mut strategy, tolerance) = match base {
        Some(AnalysisSpec::Profile {
            name,
            mode,
            threshold,
            sequence,
            strategy,
            tolerance,
        }) => (name, Some(mode), Some(threshold), sequence, strategy, tolerance),
        _ => ("profile".into(), None, None, "naturals".into(), Strategy::Auto, 0.0),
    };
    if let Some(m) = a.mode {
        mode = Some(match m {
            ModeArg::Lower => PairMode::Lower,
            ModeArg::Upper => PairMode::Upper,
        });
    }
    threshold = a.threshold.or(threshold);
    if let Some(s) = a.sequence {
        sequence = s;
    }
    if let Some(s) = a.strategy {
        strategy = match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Enumerate => Strategy::Enumerate,
            StrategyArg::Segmented => Strategy::Segmented,
        };
    }
    cfg.analyses = vec![AnalysisSpec::Profile {
        name,
        mode: mode.ok_or_else(|| missing("mode"))?,
        threshold: threshold.ok_or_else(|| missing("threshold"))?,
        sequence,
        strategy,
        tolerance,
    }];
    print_json(&single(&cfg, a.common.out.as_deref())?.envelope)
}

fn classify(a: ClassifyArgs) -> CliResult<()> {
    let mut cfg = base_config(a.common.config.as_deref())?;
    apply_overrides(&mut cfg, &a.overrides)?;
    let mut spec = match take_first(&mut cfg, "classify") {
        Some(s) => s,
        None => AnalysisSpec::Classify {
            name: "classify".into(),
            delta: a.delta.ok_or_else(|| missing("delta"))?,
            q: "naturals".into(),
            p: "naturals".into(),
            a: 1.0,
            b: 1.0,
            slack: 0.0,
            eps_ladder: None,
        },
    };
    if let AnalysisSpec::Classify {
        delta, q, p, slack, ..
    } = &mut spec
    {
        *delta = a.delta.unwrap_or(*delta);
        *slack = a.slack.unwrap_or(*slack);
        if let Some(v) = a.q {
            *q = v;
        }
        if let Some(v) = a.p {
            *p = v;
        }
    }
    cfg.analyses = vec![spec];
    print_json(&single(&cfg, a.common.out.as_deref())?.envelope)
}

fn construct(a: ConstructArgs) -> CliResult<()> {
    let (from, to) = parse_range(&a.window)?;
    let mut cfg = ExperimentConfig::empty();
    cfg.tuple = Some(match a.construction {
        ConstructionArg::SparseBlocks => TupleSpec::SparseBlocks {
            n: a.n,
            blocks: a.blocks.unwrap_or(dchaos::constructions::SparseBlockParams::DEFAULT_BLOCKS),
            selectors: None,
            design_last_block: 4,
        },
        ConstructionArg::FullshiftQp => TupleSpec::FullshiftQp {
            n: a.n,
            q: a.q,
            p: a.p,
            growth: a.growth,
            windows: a.windows,
            first_len: 16,
            guard: None,
            horizon: None,
        },
    });
    cfg.validate()?;
    let spec = cfg.tuple.as_ref().expect("set above");
    runner::check_export(spec, &to)?;
    let built = runner::build_tuple(&cfg)?.expect("tuple present");
    let (start, rows) = runner::export_window(&built.tuple, &from, &to)?;
    let mut sink = OutputDir::new(resolve_dir(a.out.as_deref(), None));
    if let Some(c) = &built.construction {
        sink.write_json("construction.json", c)?;
    }
    sink.write_json_compact(
        "window.json",
        &json!({
            "schema_version": runner::SCHEMA_VERSION,
            "kind": "window",
            "name": built.construction.as_ref().map_or("explicit", |c| c.name.as_str()),
            "report": {"from": start, "to": to.to_string(), "points": rows},
        }),
    )?;
    for (i, r) in rows.iter().enumerate() {
        sink.write_bytes(&format!("point-{i}.bin"), r)?;
    }
    for p in sink.written() {
        println!("{}", p.display());
    }
    Ok(())
}
