use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drowsy::eval::render_table;
use drowsy::pipeline::{self, RunConfig, Target};
use drowsy::Result;

#[derive(Parser)]
#[command(name = "drowsy", version, about = "Drowsiness classification pipeline over windowed facial-feature streams")]
struct Cli {
    /// JSON run configuration; fields left out take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; every module seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus of frame CSVs and a manifest.
    Generate,
    /// Window, resample, split and fit the normalizer.
    Prepare,
    /// Train one model (rf-baseline, mlp-stats, ..., conv2d-raw-smote).
    Train {
        model: String,
        /// Oversample the training split before training.
        #[arg(long)]
        smote: bool,
    },
    /// Tune class thresholds on the validation split.
    Tune {
        model: String,
        #[arg(long)]
        smote: bool,
    },
    /// Score the test split, optionally with tuned thresholds.
    Evaluate {
        model: String,
        #[arg(long)]
        smote: bool,
        /// Threshold file; without a value, the model's own thresholds.json.
        #[arg(long, num_args = 0..=1)]
        thresholds: Option<Option<PathBuf>>,
    },
    /// Consolidate every evaluation into one table.
    Report,
    /// generate, prepare, then train, tune and evaluate every configured model.
    RunAll,
    /// Print the effective configuration.
    Config,
}

fn target(model: &str, smote: bool) -> Result<Target> {
    if smote && !model.ends_with("-smote") {
        format!("{model}-smote").parse()
    } else {
        model.parse()
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let top = cli.seed.unwrap_or(cfg.seed);
    cfg = cfg.with_seed(top);
    if let Some(w) = cli.workdir {
        cfg.workdir = w;
    }
    match cli.command {
        Command::Generate => {
            let m = pipeline::cmd_generate(&cfg)?;
            println!(
                "{} participants, {} videos, consensus frames per state {:?}, no-consensus {}",
                m.participants.len(),
                m.videos.len(),
                m.consensus_frames,
                m.no_consensus_frames
            );
        }
        Command::Prepare => {
            let m = pipeline::cmd_prepare(&cfg)?;
            println!(
                "train {:?} ({} participants), val {:?} ({}), test {:?} ({})",
                m.train_counts,
                m.train_participants.len(),
                m.val_counts,
                m.val_participants.len(),
                m.test_counts,
                m.test_participants.len()
            );
        }
        Command::Train { model, smote } => {
            let t = target(&model, smote)?;
            let log = pipeline::cmd_train(&cfg, t)?;
            println!("{t}: trained on class counts {:?}", log.class_counts);
            if let Some(h) = &log.history {
                if let Some(l) = h.train_loss.last() {
                    println!("final train loss {l:.6}");
                }
            }
        }
        Command::Tune { model, smote } => {
            let t = target(&model, smote)?;
            let f = pipeline::cmd_tune(&cfg, t)?;
            println!(
                "t_slight {:.6} (J {:.4}), t_modext {:.6} (J {:.4})",
                f.thresholds.t_slight, f.slight.objective, f.thresholds.t_modext, f.modext.objective
            );
        }
        Command::Evaluate { model, smote, thresholds } => {
            let t = target(&model, smote)?;
            let path = thresholds.map(|p| p.unwrap_or_else(|| cfg.model_dir(&t).join("thresholds.json")));
            let e = pipeline::cmd_evaluate(&cfg, t, path.as_deref())?;
            print!("{}", e.render());
        }
        Command::Report => {
            let r = pipeline::cmd_report(&cfg)?;
            print!("{}", r.render());
        }
        Command::RunAll => {
            let r = pipeline::cmd_run_all(&cfg, |m| eprintln!("{m}"))?;
            print!("{}", render_table(&r.rows));
        }
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
