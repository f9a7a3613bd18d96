//! Command-line front end: corpus synthesis, feature extraction, layer-wise
//! pretraining, fine-tuning, evaluation, and per-file prediction.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ddnn_vad::dataset::{build_corpus, read_wav, CorpusConfig, CorpusManifest, NoiseKind};
use ddnn_vad::eval::{
    default_exclusions, depth_sweep, eval_cell_model, EvalCell, EvalReport, Method,
};
use ddnn_vad::features::{normalize, save_labels, FeatureExtractor, FrameSpec};
use ddnn_vad::finetune::{assemble_classifier, finetune, predict_batch, FinetuneConfig};
use ddnn_vad::network::{load_model, save_model};
use ddnn_vad::pipeline::{extract_corpus, load_cell, FeatureSetManifest};
use ddnn_vad::pretrain::{run_pretraining, PretrainConfig};
use ddnn_vad::{Error, Result};

#[derive(Parser)]
#[command(name = "ddnn-vad", about = "Frame-level voice activity detection", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a paired noisy/clean corpus with frame labels.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract feature matrices for every recording in a corpus manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Layer-wise pretraining on one noise/SNR cell; writes the model plus a
    /// checkpoint per completed level.
    Pretrain {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cell: CellArgs,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Supervised fine-tuning of a pretrained model; writes the tuned model
    /// and a CSV training log alongside it.
    Finetune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        cell: CellArgs,
        #[command(flatten)]
        overrides: TrainOverrides,
    },
    /// Evaluate a model on a cell's test split and write a report.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        cell: CellArgs,
    },
    /// Train and evaluate across all cells, depths, and seeds; writes CSV and
    /// aligned text tables.
    Sweep {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Classify each frame of a WAV file; writes one 0/1 label per line.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CellArgs {
    /// Noise type of the cell to use (white, pink, babble).
    #[arg(long, default_value = "white")]
    noise: NoiseKind,
    /// SNR in dB of the cell to use.
    #[arg(long, default_value_t = 10.0)]
    snr: f64,
}

#[derive(Args)]
struct TrainOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
}

/// One config file covers every stage; each section falls back to the
/// standard defaults when absent.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AppConfig {
    #[serde(default)]
    corpus: Option<CorpusConfig>,
    #[serde(default)]
    pretrain: Option<PretrainConfig>,
    #[serde(default)]
    finetune: Option<FinetuneConfig>,
    #[serde(default)]
    sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    methods: Vec<Method>,
    depths: Vec<usize>,
    seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            methods: vec![Method::Ddnn],
            depths: vec![1, 2, 3],
            seeds: (1..=10).collect(),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        None => Ok(AppConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("config parse: {e}")))
        }
    }
}

fn pretrain_config(app: &AppConfig, ov: &TrainOverrides) -> Result<PretrainConfig> {
    let mut cfg = app.pretrain.clone().unwrap_or_default();
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(e) = ov.epochs {
        cfg.max_epochs = e;
    }
    if let Some(lr) = ov.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(b) = ov.batch_size {
        cfg.batch_size = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn finetune_config(app: &AppConfig, ov: &TrainOverrides) -> Result<FinetuneConfig> {
    let mut cfg = app.finetune.clone().unwrap_or_default();
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(e) = ov.epochs {
        cfg.max_epochs = e;
    }
    if let Some(lr) = ov.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(b) = ov.batch_size {
        cfg.batch_size = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn features_manifest(dir: &Path) -> Result<FeatureSetManifest> {
    FeatureSetManifest::load(&dir.join("features.toml"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, out } => {
            let cfg = load_config(config.as_deref())?.corpus.unwrap_or_default();
            let manifest = build_corpus(&cfg, &out)?;
            println!(
                "wrote {} recordings to {}",
                manifest.recordings.len(),
                out.display()
            );
        }
        Command::Extract { manifest, out } => {
            let corpus = CorpusManifest::load(&manifest)?;
            let fsm = extract_corpus(&corpus, &out)?;
            let frames: usize = fsm.entries.iter().map(|e| e.n_frames).sum();
            println!(
                "extracted {} feature files ({frames} frames) to {}",
                fsm.entries.len(),
                out.display()
            );
        }
        Command::Pretrain {
            features,
            config,
            out,
            cell,
            overrides,
        } => {
            let app = load_config(config.as_deref())?;
            let cfg = pretrain_config(&app, &overrides)?;
            let data = load_cell(&features_manifest(&features)?, cell.noise, cell.snr)?;
            let (state, log) = run_pretraining(&data.train_noisy, &data.train_clean, &cfg)?;
            for depth in 1..=cfg.depth() {
                // Checkpoint per completed level: first `depth` encoders only.
                let partial = ddnn_vad::pretrain::PretrainState {
                    input_dim: state.input_dim,
                    noisy_path: state.noisy_path[..depth].to_vec(),
                    clean_path: Vec::new(),
                };
                let model = assemble_classifier(&partial, depth, data.norm.clone(), cfg.seed)?;
                let checkpoint = out.with_extension(format!("level{depth}.ddnn"));
                save_model(&model, &checkpoint)?;
                if depth == cfg.depth() {
                    save_model(&model, &out)?;
                }
            }
            for level in &log.levels {
                println!(
                    "{} level {}: reconstruction loss {:.4} -> {:.4}",
                    if level.clean_path { "clean" } else { "noisy" },
                    level.level,
                    level.epoch_losses.first().copied().unwrap_or(f64::NAN),
                    level.epoch_losses.last().copied().unwrap_or(f64::NAN),
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Finetune {
            model,
            features,
            config,
            out,
            cell,
            overrides,
        } => {
            let app = load_config(config.as_deref())?;
            let cfg = finetune_config(&app, &overrides)?;
            let mut net = load_model(&model)?;
            let data = load_cell(&features_manifest(&features)?, cell.noise, cell.snr)?;
            let log = finetune(
                &mut net,
                &data.train_noisy,
                &data.train_labels,
                Some((&data.dev, &data.dev_labels)),
                &cfg,
            )?;
            save_model(&net, &out)?;
            let log_path = out.with_extension("log.csv");
            std::fs::write(&log_path, log.to_csv())?;
            if let Some(last) = log.epochs.last() {
                println!(
                    "epoch {}: train loss {:.4}, dev accuracy {:.2}%",
                    last.epoch,
                    last.train_loss,
                    last.dev_accuracy.unwrap_or(f64::NAN)
                );
            }
            println!("wrote {} and {}", out.display(), log_path.display());
        }
        Command::Eval {
            model,
            features,
            report,
            cell,
        } => {
            let net = load_model(&model)?;
            let data = load_cell(&features_manifest(&features)?, cell.noise, cell.snr)?;
            let acc = eval_cell_model(&data, &net)?;
            let rep = EvalReport {
                cells: vec![EvalCell {
                    noise: cell.noise,
                    snr_db: cell.snr,
                    method: Method::Ddnn,
                    depth: net.depth(),
                    seed: net.config.seed,
                    accuracy: Some(acc),
                    n_frames: data.test_labels.len(),
                    error: None,
                }],
                excluded: Vec::new(),
            };
            write_report(&rep, &report)?;
            println!("test accuracy {acc:.2}% ({} frames)", data.test_labels.len());
            println!("wrote {}", report.display());
        }
        Command::Sweep {
            features,
            config,
            report,
        } => {
            let app = load_config(config.as_deref())?;
            let sweep = app.sweep.clone().unwrap_or_default();
            if sweep.depths.is_empty() || sweep.seeds.is_empty() || sweep.methods.is_empty() {
                return Err(Error::Config("sweep needs methods, depths, and seeds".into()));
            }
            let pcfg = app.pretrain.clone().unwrap_or_default();
            let fcfg = app.finetune.clone().unwrap_or_default();
            pcfg.validate()?;
            fcfg.validate()?;
            let manifest = features_manifest(&features)?;
            let mut cell_keys: Vec<(NoiseKind, f64)> = Vec::new();
            for e in &manifest.entries {
                if !cell_keys
                    .iter()
                    .any(|&(n, s)| n == e.noise && (s - e.snr_db).abs() < 1e-9)
                {
                    cell_keys.push((e.noise, e.snr_db));
                }
            }
            let cells = cell_keys
                .iter()
                .map(|&(n, s)| load_cell(&manifest, n, s))
                .collect::<Result<Vec<_>>>()?;
            let mut rep = depth_sweep(
                &cells,
                &sweep.methods,
                &sweep.depths,
                &sweep.seeds,
                &pcfg,
                &fcfg,
            )?;
            rep.excluded = default_exclusions();
            write_report(&rep, &report)?;
            print!("{}", rep.render_tables());
            println!("wrote {}", report.display());
        }
        Command::Predict { model, wav, out } => {
            let net = load_model(&model)?;
            let signal = read_wav(&wav)?;
            let spec = FrameSpec {
                frame_length: 200,
                frame_shift: 80,
            };
            let extractor = FeatureExtractor::new(signal.sample_rate, spec)?;
            let raw = extractor.extract_utterance(&signal)?;
            let rows = raw
                .iter()
                .map(|r| normalize(r, &net.norm_stats))
                .collect::<Result<Vec<_>>>()?;
            let decisions: Vec<u8> = predict_batch(&net, &rows)?
                .into_iter()
                .map(|(_, d)| d)
                .collect();
            save_labels(&decisions, &out)?;
            let speech = decisions.iter().filter(|&&d| d == 1).count();
            println!(
                "{} frames, {speech} speech; wrote {}",
                decisions.len(),
                out.display()
            );
        }
    }
    Ok(())
}

/// Reports are written twice: stable CSV and aligned text tables.
fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_csv())?;
    std::fs::write(path.with_extension("txt"), report.render_tables())?;
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Numerical(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
