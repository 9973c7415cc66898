use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use neurodeck::analyze::{analyze, select_bands};
use neurodeck::context::CONFIG_FILE;
use neurodeck::data::{generate, preprocess};
use neurodeck::neeg::{read_epochs, read_json};
use neurodeck::parallel::resolve_threads;
use neurodeck::pipeline::{full_run, plan};
use neurodeck::training::{report, train};
use neurodeck::verify::{verify, write_index};
use neurodeck::{CliError, Context, ModelChoice, PipelineConfig, Result};
use neurodeck_core::dataset::SyntheticSpec;

#[derive(Parser)]
#[command(
    name = "neurodeck",
    version,
    about = "Synthetic inter-paradigm EEG: generation, analysis and classification"
)]
struct Cli {
    /// Master seed; overrides the config and every seed derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-run and per-epoch parallelism.
    #[arg(long, global = true, env = "NEURODECK_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline config (JSON); defaults to the built-in demo config.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default pipeline config.
    InitConfig {
        #[arg(long)]
        out: PathBuf,
        /// Use the full 200-pass training schedule.
        #[arg(long)]
        paper: bool,
    },
    /// Synthesize NEEG1 recordings.
    Generate {
        #[command(flatten)]
        config: ConfigArg,
        /// Synthetic spec (JSON) replacing the config's `synthetic` block.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter, resample, epoch and balance recordings into an epoch set.
    Preprocess {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Band-power statistics, topographies and ERSP maps.
    Analyze {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        epochs: PathBuf,
        /// `all` or a comma-separated list of band names.
        #[arg(long, default_value = "all")]
        bands: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the repeated-split training protocol for one model.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum)]
        model: ModelChoice,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Shuffle labels first (chance-level control).
        #[arg(long)]
        permute_labels: bool,
    },
    /// Aggregate train reports into a per-model accuracy table.
    Report {
        #[arg(long)]
        runs: PathBuf,
        /// Defaults to the runs directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every stage end to end under one output directory.
    FullRun {
        #[command(flatten)]
        config: ConfigArg,
        /// Exact output directory; by default a timestamped directory under
        /// the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved stage plan without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Re-hash a directory's config and check every artifact against it.
    Verify {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn load_config(arg: &ConfigArg, seed: Option<u64>) -> Result<PipelineConfig> {
    let cfg = match &arg.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn context(cfg: PipelineConfig, threads: Option<usize>) -> Result<Context> {
    Context::new(cfg, resolve_threads(threads))
}

fn timestamped(root: &Path) -> PathBuf {
    root.join(format!(
        "run-{}",
        chrono::Utc::now().format("%Y%m%dT%H%M%SZ")
    ))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let threads = cli.threads;
    match cli.command {
        Command::InitConfig { out, paper } => {
            let cfg = if paper {
                PipelineConfig::paper()
            } else {
                PipelineConfig::default()
            };
            cfg.with_seed(cli.seed.unwrap_or(0)).save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::Generate { config, spec, out } => {
            let mut cfg = load_config(&config, None)?;
            if let Some(p) = spec {
                cfg.synthetic =
                    read_json::<SyntheticSpec>(&p).map_err(|e| CliError::Config(e.to_string()))?;
            }
            let seed = cli.seed.unwrap_or(cfg.seed);
            let cfg = cfg.with_seed(seed);
            let ctx = context(cfg, threads)?;
            ctx.prepare_dir(&out)?;
            for dir in generate(&ctx, &out)? {
                println!("wrote {}", dir.display());
            }
            write_index(&out, &ctx.hash)?;
        }
        Command::Preprocess { config, raw, out } => {
            let ctx = context(load_config(&config, cli.seed)?, threads)?;
            ctx.prepare_dir(&out)?;
            let m = preprocess(&ctx, &raw, &out)?;
            write_index(&out, &ctx.hash)?;
            println!(
                "{} epochs {:?} of {}x{} at {} Hz -> {}",
                m.n_epochs,
                m.class_counts,
                m.n_channels,
                m.n_samples,
                m.fs_hz,
                out.display()
            );
            for note in &m.provenance.notes {
                println!("note: {note}");
            }
        }
        Command::Analyze {
            config,
            epochs,
            bands,
            out,
        } => {
            let ctx = context(load_config(&config, cli.seed)?, threads)?;
            let bands = select_bands(&ctx.config.bands, &bands)?;
            let (set, _) = read_epochs(&epochs)?;
            ctx.prepare_dir(&out)?;
            let r = analyze(&ctx, &set, &bands, &out)?;
            write_index(&out, &ctx.hash)?;
            for b in &r.bands {
                if let Some(row) = b.anova.row("paradigm") {
                    println!(
                        "{:<11} paradigm F = {:.3}, p = {:.3e}",
                        b.band, row.f, row.p
                    );
                }
            }
        }
        Command::Train {
            config,
            model,
            data,
            out,
            permute_labels,
        } => {
            let mut cfg = load_config(&config, cli.seed)?;
            cfg.permute_labels |= permute_labels;
            let ctx = context(cfg, threads)?;
            let (set, _) = read_epochs(&data)?;
            ctx.prepare_dir(&out)?;
            let r = train(&ctx, &set, model, &out)?;
            write_index(&out, &ctx.hash)?;
            print_protocol(&r.protocol);
            if r.diverged() {
                return Ok(ExitCode::from(4));
            }
        }
        Command::Report { runs, out } => {
            let out = out.unwrap_or_else(|| runs.clone());
            let s = report(&runs, &out)?;
            let cfg_path = out.join(CONFIG_FILE);
            if cfg_path.is_file() {
                write_index(&out, &PipelineConfig::load(&cfg_path)?.hash())?;
            }
            print!("{}", neurodeck::training::summary_csv(&s));
        }
        Command::FullRun {
            config,
            out,
            dry_run,
        } => {
            let ctx = context(load_config(&config, cli.seed)?, threads)?;
            let out = out.unwrap_or_else(|| timestamped(&ctx.config.paths.output_dir));
            let p = plan(&ctx, &out);
            print!("{p}");
            if dry_run {
                return Ok(ExitCode::SUCCESS);
            }
            let r = full_run(&ctx, &out)?;
            for t in &r.train {
                print_protocol(&t.protocol);
            }
            if r.diverged() {
                return Ok(ExitCode::from(4));
            }
        }
        Command::Verify { dir } => {
            let v = verify(&dir)?;
            println!(
                "ok: {} artifacts match config hash {}",
                v.checked.len(),
                v.config_hash
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_protocol(p: &neurodeck_core::train::ProtocolReport) {
    let runs: Vec<String> = p
        .runs
        .iter()
        .map(|r| {
            r.report
                .as_ref()
                .map_or_else(|| "failed".to_string(), |x| format!("{:.4}", x.accuracy))
        })
        .collect();
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "{:<8} runs [{}] average {} std {}",
        p.model,
        runs.join(", "),
        fmt(p.mean),
        fmt(p.std)
    );
    if p.selection_uses_test {
        println!("{:<8} note: checkpoints chosen on test loss", p.model);
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
