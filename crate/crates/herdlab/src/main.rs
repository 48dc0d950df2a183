use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use herdlab::error::Error;
use herdlab::pipeline::{
    self, run_pipeline, stage_analyze, sweep, sweep_csv, PipelineOptions, StageName, SweepGrid,
    TraceFormats,
};
use herdlab::scenario::load_scenario;
use herdlab::trace::import_trace_jsonl;

#[derive(Parser)]
#[command(name = "herdlab", about = "Herding-attack laboratory for mobile robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; the ATTACKLAB_OUT environment variable takes
    /// precedence when set.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl Common {
    fn out_dir(&self) -> PathBuf {
        match std::env::var_os("ATTACKLAB_OUT") {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.out_dir.clone(),
        }
    }

    fn load(&self) -> Result<herdlab::scenario::Scenario, Error> {
        let mut scenario = load_scenario(&self.scenario)?;
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        Ok(scenario)
    }
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    common: Common,
    /// shortest | handsoff | simple
    #[arg(long, default_value = "shortest")]
    strategy: String,
    /// Use ground-truth sector/goal/prediction instead of learned ones.
    #[arg(long)]
    oracle: bool,
    /// Trace format: jsonl | csv | both
    #[arg(long, default_value = "both")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Learn the victim's detection sector and goal.
    Probe(Common),
    /// Collect reaction samples inside the learned sector.
    Collect {
        #[command(flatten)]
        common: Common,
        /// Use the ground-truth sector and goal instead of probe output.
        #[arg(long)]
        oracle: bool,
    },
    /// Fit the reaction model from the collected dataset.
    Train(Common),
    /// Run one herding attack.
    Attack(AttackArgs),
    /// Write the closed-form bound table and measured reaction radii;
    /// with --trace, recompute metrics for an exported trace.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a parameter grid of attack scenarios.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid file: {"axes": [{"path": "attack.candidate_count", "values": [16, 32]}]}
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "shortest")]
        strategy: String,
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
    },
    /// Full pipeline: probe, collect, train, attack.
    Run(AttackArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err((stage, err)) => {
            eprintln!("error: stage={stage} code={} message={err}", err.code());
            ExitCode::from(2)
        }
    }
}

type CliResult = Result<ExitCode, (String, Error)>;

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Probe(common) => {
            let scenario = common.load().map_err(tag("probe"))?;
            let out = common.out_dir();
            let stages = BTreeSet::from([StageName::Probe]);
            let opts = opts(&out, "shortest", false, "both").map_err(tag("probe"))?;
            run_pipeline(&scenario, &stages, &opts).map_err(tag("probe"))?;
            println!("probe: wrote {}", pipeline::probe_path(&out).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Collect { common, oracle } => {
            let scenario = common.load().map_err(tag("collect"))?;
            let out = common.out_dir();
            let stages = BTreeSet::from([StageName::Collect]);
            let opts = opts(&out, "shortest", oracle, "both").map_err(tag("collect"))?;
            run_pipeline(&scenario, &stages, &opts).map_err(tag("collect"))?;
            println!("collect: wrote {}", pipeline::dataset_path(&out).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train(common) => {
            let scenario = common.load().map_err(tag("train"))?;
            let out = common.out_dir();
            let stages = BTreeSet::from([StageName::Train]);
            let opts = opts(&out, "shortest", false, "both").map_err(tag("train"))?;
            run_pipeline(&scenario, &stages, &opts).map_err(tag("train"))?;
            println!("train: wrote {}", pipeline::model_path(&out).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack(args) => run_attack_stages(args, BTreeSet::from([StageName::Attack])),
        Command::Run(args) => run_attack_stages(
            args,
            BTreeSet::from([
                StageName::Probe,
                StageName::Collect,
                StageName::Train,
                StageName::Attack,
            ]),
        ),
        Command::Analyze { common, trace } => {
            let scenario = common.load().map_err(tag("analyze"))?;
            let out = common.out_dir();
            stage_analyze(&scenario, &out).map_err(tag("analyze"))?;
            if let Some(path) = trace {
                let records = import_trace_jsonl(&path).map_err(tag("analyze"))?;
                let metrics = herdlab::analysis::trace_metrics(&records, scenario.trap.center)
                    .map_err(tag("analyze"))?;
                let text = serde_json::to_string_pretty(&metrics)
                    .map_err(|e| tag("analyze")(Error::Json(e)))?;
                println!("{text}");
            }
            println!("analyze: wrote {}", out.join("bounds.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            common,
            grid,
            strategy,
            oracle,
            parallelism,
        } => {
            let scenario = common.load().map_err(tag("sweep"))?;
            let out = common.out_dir();
            let grid_text = std::fs::read_to_string(&grid)
                .map_err(|e| tag("sweep")(Error::Io(e)))?;
            let grid: SweepGrid =
                serde_json::from_str(&grid_text).map_err(|e| tag("sweep")(Error::Json(e)))?;
            let strategy = strategy.parse().map_err(tag("sweep"))?;
            let rows =
                sweep(&scenario, &grid, strategy, oracle, parallelism).map_err(tag("sweep"))?;
            let csv = sweep_csv(&rows);
            let path = out.join("sweep.csv");
            pipeline::write_text(&path, &csv).map_err(tag("sweep"))?;
            println!("sweep: wrote {} ({} rows)", path.display(), rows.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_attack_stages(args: AttackArgs, stages: BTreeSet<StageName>) -> CliResult {
    let scenario = args.common.load().map_err(tag("attack"))?;
    let out = args.common.out_dir();
    let opts = opts(&out, &args.strategy, args.oracle, &args.format).map_err(tag("attack"))?;
    let summary = run_pipeline(&scenario, &stages, &opts).map_err(tag("attack"))?;
    match summary {
        Some(s) => {
            println!(
                "attack: success={} steps={} path_after_entry={:.3} active={} handsoff={:.3}",
                s.success,
                s.metrics.horizon,
                s.metrics.path_length_after_entry,
                s.metrics.active_count,
                s.metrics.hands_off_ratio,
            );
            if s.success {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        None => Ok(ExitCode::SUCCESS),
    }
}

fn opts(
    out: &std::path::Path,
    strategy: &str,
    oracle: bool,
    format: &str,
) -> Result<PipelineOptions, Error> {
    Ok(PipelineOptions {
        strategy: strategy.parse()?,
        oracle,
        out_dir: out.to_path_buf(),
        trace_format: format.parse::<TraceFormats>()?,
    })
}

fn tag(stage: &'static str) -> impl Fn(Error) -> (String, Error) {
    move |err| (stage.to_string(), err)
}
