use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use webtrails::ingest::{parse_events_path, SpatialResolution};
use webtrails::trajectory::TrajectoryKind;

use webtrails_cli::compare::{parse_groups, run_compare};
use webtrails_cli::config::{CliError, RunConfig, SweepDimension};
use webtrails_cli::convergence::run_convergence;
use webtrails_cli::pipeline::{analyze_users, build_trajectory};
use webtrails_cli::report;
use webtrails_cli::report::RunSummary;
use webtrails_cli::sweep::run_sweep;
use webtrails_cli::synthspec::{generate_events, load_specs};

#[derive(Parser)]
#[command(
    name = "webtrails",
    version,
    about = "Entropy and predictability-limit reports for visitation logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Visit log (CSV with header, or .jsonl/.ndjson line records)
    #[arg(long)]
    input: PathBuf,
    /// Output directory for report files
    #[arg(long)]
    out: PathBuf,
    /// Bin width in seconds for time-binned trajectories
    #[arg(long, default_value_t = 60)]
    delta_t: u64,
    /// Location resolution: url, domain or category
    #[arg(long, default_value = "domain")]
    resolution: String,
    /// Trajectory kinds to compute, comma-separated
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "stat,bin-nonstat,seq-nonstat"
    )]
    kinds: Vec<String>,
    /// Exclude users whose bin-nonstat trajectory is shorter than this
    #[arg(long, default_value_t = 100)]
    min_length: usize,
    /// Seed for the bin tie-break generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid step for the convergence analysis
    #[arg(long, default_value_t = 1)]
    step: usize,
    /// Mean-delta threshold for the minimum sufficient length
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    /// Family-wise significance level before Bonferroni adjustment
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Worker threads (0 = default pool size)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user entropy and predictability report
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Ensemble means over a bin-width or resolution grid
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// temporal or spatial
        #[arg(long)]
        dimension: String,
        /// Grid override: seconds for temporal, resolution names for spatial
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<String>>,
    },
    /// Mean absolute predictability change with growing trajectory length
    Converge {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Pairwise group comparisons of maximum predictability
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV mapping user_id,group
        #[arg(long)]
        groups: PathBuf,
    },
    /// Generate synthetic visit events in the ingest CSV format
    Synth {
        /// JSON ensemble description
        #[arg(long)]
        spec: PathBuf,
        /// Output CSV file
        #[arg(long)]
        out: PathBuf,
    },
    /// Write every user's trajectories in the dump format
    DumpTrajectories {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn parse_kinds(tokens: &[String]) -> Result<Vec<TrajectoryKind>, CliError> {
    let mut kinds = Vec::new();
    for token in tokens {
        let kind = TrajectoryKind::from_str(token).map_err(CliError::Config)?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    Ok(kinds)
}

fn to_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let resolution = SpatialResolution::from_str(&common.resolution).map_err(CliError::Config)?;
    let cfg = RunConfig {
        input: common.input.clone(),
        out_dir: common.out.clone(),
        resolution,
        delta_t_seconds: common.delta_t,
        kinds: parse_kinds(&common.kinds)?,
        min_length: common.min_length,
        seed: common.seed,
        step: common.step,
        threshold: common.threshold,
        alpha: common.alpha,
        threads: common.threads,
        ..RunConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_input(cfg: &RunConfig) -> Result<BTreeMap<String, Vec<webtrails::VisitEvent>>, CliError> {
    parse_events_path(&cfg.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", cfg.input.display())))
}

fn cmd_analyze(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = to_config(common)?;
    let started = Instant::now();
    let users = parse_input(&cfg)?;
    let parsed = started.elapsed();

    let computing = Instant::now();
    let pipeline = analyze_users(&users, &cfg);
    let computed = computing.elapsed();

    let writing = Instant::now();
    report::write_report_csv(&cfg.out_dir, &pipeline)?;
    report::write_exclusions_csv(&cfg.out_dir, &pipeline)?;
    let mut summary = RunSummary::new("analyze", &cfg);
    summary
        .count("users_total", pipeline.total_users as u64)
        .count(
            "users_included",
            (pipeline.total_users - pipeline.exclusions.len()) as u64,
        )
        .count("users_excluded", pipeline.exclusions.len() as u64)
        .count("rows", pipeline.rows.len() as u64)
        .timing("parse", parsed)
        .timing("compute", computed)
        .timing("write", writing.elapsed());
    report::write_summary_json(&cfg.out_dir, &summary)?;
    println!(
        "analyze: {} users in, {} included, {} excluded, {} rows -> {}",
        pipeline.total_users,
        pipeline.total_users - pipeline.exclusions.len(),
        pipeline.exclusions.len(),
        pipeline.rows.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_sweep(
    common: &CommonArgs,
    dimension: &str,
    grid: &Option<Vec<String>>,
) -> Result<(), CliError> {
    let mut cfg = to_config(common)?;
    let dimension = SweepDimension::from_str(dimension).map_err(CliError::Config)?;
    if let Some(tokens) = grid {
        match dimension {
            SweepDimension::Temporal => {
                cfg.temporal_grid_seconds = tokens
                    .iter()
                    .map(|t| {
                        t.parse::<u64>()
                            .map_err(|e| CliError::Config(format!("bad grid entry {t:?}: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            SweepDimension::Spatial => {
                cfg.spatial_grid = tokens
                    .iter()
                    .map(|t| SpatialResolution::from_str(t).map_err(CliError::Config))
                    .collect::<Result<_, _>>()?;
            }
        }
        cfg.validate()?;
    }
    let started = Instant::now();
    let users = parse_input(&cfg)?;
    let sweep = run_sweep(&users, &cfg, dimension)?;
    report::write_sweep_csv(&cfg.out_dir, &sweep)?;
    let mut summary = RunSummary::new("sweep", &cfg);
    summary
        .count("users_included", sweep.users_included as u64)
        .count("users_excluded", sweep.users_excluded as u64)
        .count("grid_rows", sweep.rows.len() as u64)
        .timing("total", started.elapsed());
    report::write_summary_json(&cfg.out_dir, &summary)?;
    println!(
        "sweep: {} grid rows over {} users -> {}",
        sweep.rows.len(),
        sweep.users_included,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_converge(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = to_config(common)?;
    let started = Instant::now();
    let users = parse_input(&cfg)?;
    let convergence = run_convergence(&users, &cfg)?;
    report::write_convergence_csv(&cfg.out_dir, &convergence)?;
    let mut summary = RunSummary::new("converge", &cfg);
    summary
        .count("users_analyzed", convergence.users_analyzed as u64)
        .count("users_skipped", convergence.users_skipped as u64)
        .count("common_length", convergence.common_length as u64)
        .min_length(convergence.min_sufficient)
        .timing("total", started.elapsed());
    report::write_summary_json(&cfg.out_dir, &summary)?;
    let reported = match convergence.min_sufficient {
        webtrails::predictability::MinLengthResult::Reached(length) => length.to_string(),
        webtrails::predictability::MinLengthResult::NotReached => "not reached".to_owned(),
    };
    println!(
        "converge: {} users, minimum sufficient length at threshold {}: {}",
        convergence.users_analyzed, cfg.threshold, reported
    );
    Ok(())
}

fn cmd_compare(common: &CommonArgs, groups_path: &Path) -> Result<(), CliError> {
    let cfg = to_config(common)?;
    let started = Instant::now();
    let users = parse_input(&cfg)?;
    let groups = parse_groups(groups_path)?;
    let comparisons = run_compare(&users, &cfg, &groups)?;
    report::write_comparisons_csv(&cfg.out_dir, &comparisons)?;
    let mut summary = RunSummary::new("compare", &cfg);
    summary
        .count("pairs", comparisons.n_pairs as u64)
        .count("rows", comparisons.rows.len() as u64)
        .timing("total", started.elapsed());
    summary.warnings = comparisons.warnings.clone();
    report::write_summary_json(&cfg.out_dir, &summary)?;
    for warning in &comparisons.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "compare: {} comparisons across {} pairs at adjusted alpha {} -> {}",
        comparisons.rows.len(),
        comparisons.n_pairs,
        comparisons.alpha_adjusted,
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_synth(spec_path: &Path, out: &Path) -> Result<(), CliError> {
    let specs = load_specs(spec_path)?;
    let events = generate_events(&specs)?;
    report::write_events_csv(out, &events)?;
    println!(
        "synth: {} events for {} users -> {}",
        events.len(),
        specs.len(),
        out.display()
    );
    Ok(())
}

fn cmd_dump(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = to_config(common)?;
    let users = parse_input(&cfg)?;
    let mut trajectories = BTreeMap::new();
    for (user_id, events) in &users {
        let list: Vec<_> = cfg
            .kinds
            .iter()
            .map(|&kind| {
                build_trajectory(events, kind, cfg.delta_t_seconds, cfg.resolution, cfg.seed)
            })
            .collect();
        trajectories.insert(user_id.clone(), list);
    }
    let path = report::write_trajectories_tsv(&cfg.out_dir, &trajectories)?;
    println!(
        "dump-trajectories: {} users, {} kinds -> {}",
        trajectories.len(),
        cfg.kinds.len(),
        path.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Analyze { common } => cmd_analyze(common),
        Command::Sweep {
            common,
            dimension,
            grid,
        } => cmd_sweep(common, dimension, grid),
        Command::Converge { common } => cmd_converge(common),
        Command::Compare { common, groups } => cmd_compare(common, groups),
        Command::Synth { spec, out } => cmd_synth(spec, out),
        Command::DumpTrajectories { common } => cmd_dump(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
