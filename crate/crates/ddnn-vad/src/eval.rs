//! Evaluation harness: frame accuracy, per-(noise, SNR, depth) sweeps with
//! multi-seed averaging, and text/CSV table rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::NoiseKind;
use crate::features::NormStats;
use crate::finetune::{assemble_classifier, finetune, predict_batch, FinetuneConfig};
use crate::pretrain::{run_dbn_pretraining, run_pretraining, PretrainConfig, PretrainState};
use crate::{Error, Result};

/// Percentage of frames where decision equals label.
pub fn accuracy(decisions: &[u8], labels: &[u8]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::Data("cannot compute accuracy of an empty set".into()));
    }
    if decisions.len() != labels.len() {
        return Err(Error::dim(decisions.len(), labels.len(), "accuracy lengths"));
    }
    let matches = decisions
        .iter()
        .zip(labels)
        .filter(|(d, l)| d == l)
        .count();
    Ok(100.0 * matches as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ddnn,
    Dbn,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Ddnn => write!(f, "DDNN"),
            Method::Dbn => write!(f, "DBN"),
        }
    }
}

/// Normalized features and labels of one (noise, SNR) corpus cell.
#[derive(Debug, Clone)]
pub struct CellDataset {
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub train_noisy: Vec<Vec<f64>>,
    pub train_clean: Vec<Vec<f64>>,
    pub train_labels: Vec<u8>,
    pub dev: Vec<Vec<f64>>,
    pub dev_labels: Vec<u8>,
    pub test: Vec<Vec<f64>>,
    pub test_labels: Vec<u8>,
    pub norm: NormStats,
}

/// Train one model on a cell: layer-wise pretraining (denoising or DBN)
/// followed by supervised fine-tuning.
pub fn train_cell_model(
    cell: &CellDataset,
    depth: usize,
    method: Method,
    pretrain_cfg: &PretrainConfig,
    finetune_cfg: &FinetuneConfig,
    seed: u64,
) -> Result<crate::network::DdnnModel> {
    if depth == 0 || depth > pretrain_cfg.layer_sizes.len() {
        return Err(Error::Config(format!(
            "depth {depth} outside configured sizes {:?}",
            pretrain_cfg.layer_sizes
        )));
    }
    let pcfg = PretrainConfig {
        layer_sizes: pretrain_cfg.layer_sizes[..depth].to_vec(),
        seed,
        ..pretrain_cfg.clone()
    };
    let state = match method {
        Method::Ddnn => run_pretraining(&cell.train_noisy, &cell.train_clean, &pcfg)?.0,
        Method::Dbn => PretrainState {
            input_dim: cell.train_noisy[0].len(),
            noisy_path: run_dbn_pretraining(&cell.train_noisy, &pcfg)?,
            clean_path: Vec::new(),
        },
    };
    let mut model = assemble_classifier(&state, depth, cell.norm.clone(), seed)?;
    let fcfg = FinetuneConfig {
        seed,
        ..finetune_cfg.clone()
    };
    finetune(
        &mut model,
        &cell.train_noisy,
        &cell.train_labels,
        Some((&cell.dev, &cell.dev_labels)),
        &fcfg,
    )?;
    Ok(model)
}

/// Test accuracy of one trained model on its cell.
pub fn eval_cell_model(
    cell: &CellDataset,
    model: &crate::network::DdnnModel,
) -> Result<f64> {
    let decisions: Vec<u8> = predict_batch(model, &cell.test)?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    accuracy(&decisions, &cell.test_labels)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalCell {
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub method: Method,
    pub depth: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub n_frames: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub cells: Vec<EvalCell>,
    /// (noise, snr) cells excluded from averages.
    pub excluded: Vec<(NoiseKind, f64)>,
}

/// The analogous rule to the paper-style exclusion of babble at low SNR.
pub fn default_exclusions() -> Vec<(NoiseKind, f64)> {
    vec![(NoiseKind::Babble, -5.0), (NoiseKind::Babble, 0.0)]
}

/// Train and evaluate one model per (cell, method, depth, seed). Jobs run in
/// parallel; failures are recorded per cell without aborting the sweep, and
/// the result is sorted deterministically.
pub fn depth_sweep(
    cells: &[CellDataset],
    methods: &[Method],
    depths: &[usize],
    seeds: &[u64],
    pretrain_cfg: &PretrainConfig,
    finetune_cfg: &FinetuneConfig,
) -> Result<EvalReport> {
    let mut jobs = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for &method in methods {
            for &depth in depths {
                for &seed in seeds {
                    jobs.push((ci, method, depth, seed, cell.test_labels.len()));
                }
            }
        }
    }
    let mut results: Vec<EvalCell> =
        crate::par::try_map_indexed(&jobs, |&(ci, method, depth, seed, n_frames)| {
            let cell = &cells[ci];
            let outcome = train_cell_model(cell, depth, method, pretrain_cfg, finetune_cfg, seed)
                .and_then(|model| eval_cell_model(cell, &model));
            Ok(match outcome {
                Ok(acc) => EvalCell {
                    noise: cell.noise,
                    snr_db: cell.snr_db,
                    method,
                    depth,
                    seed,
                    accuracy: Some(acc),
                    n_frames,
                    error: None,
                },
                Err(e) => EvalCell {
                    noise: cell.noise,
                    snr_db: cell.snr_db,
                    method,
                    depth,
                    seed,
                    accuracy: None,
                    n_frames,
                    error: Some(e.to_string()),
                },
            })
        })?;
    results.sort_by(|a, b| {
        (a.noise.to_string(), a.snr_db as i64, a.method.to_string(), a.depth, a.seed).cmp(&(
            b.noise.to_string(),
            b.snr_db as i64,
            b.method.to_string(),
            b.depth,
            b.seed,
        ))
    });
    Ok(EvalReport {
        cells: results,
        excluded: default_exclusions(),
    })
}

impl EvalReport {
    /// Mean accuracy over seeds for one (noise, snr, method, depth) cell.
    pub fn cell_mean(
        &self,
        noise: NoiseKind,
        snr_db: f64,
        method: Method,
        depth: usize,
    ) -> Option<f64> {
        let accs: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| {
                c.noise == noise && c.snr_db == snr_db && c.method == method && c.depth == depth
            })
            .filter_map(|c| c.accuracy)
            .collect();
        if accs.is_empty() {
            None
        } else {
            Some(accs.iter().sum::<f64>() / accs.len() as f64)
        }
    }

    fn is_excluded(&self, noise: NoiseKind, snr_db: f64) -> bool {
        self.excluded
            .iter()
            .any(|&(n, s)| n == noise && (s - snr_db).abs() < 1e-9)
    }

    /// Mean over all non-excluded (noise, snr) cell means for one method/depth.
    pub fn overall_average(&self, method: Method, depth: usize) -> Option<f64> {
        let mut values = Vec::new();
        for (noise, snr_db) in self.cell_keys() {
            if self.is_excluded(noise, snr_db) {
                continue;
            }
            if let Some(v) = self.cell_mean(noise, snr_db, method, depth) {
                values.push(v);
            }
        }
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    fn cell_keys(&self) -> Vec<(NoiseKind, f64)> {
        let mut keys: Vec<(NoiseKind, f64)> = Vec::new();
        for c in &self.cells {
            if !keys
                .iter()
                .any(|&(n, s)| n == c.noise && (s - c.snr_db).abs() < 1e-9)
            {
                keys.push((c.noise, c.snr_db));
            }
        }
        keys
    }

    fn row_keys(&self) -> Vec<(Method, usize)> {
        let mut keys: Vec<(Method, usize)> = Vec::new();
        for c in &self.cells {
            if !keys.iter().any(|&(m, d)| m == c.method && d == c.depth) {
                keys.push((c.method, c.depth));
            }
        }
        keys.sort_by_key(|&(m, d)| (m.to_string(), d));
        keys
    }

    fn snrs(&self) -> Vec<f64> {
        let mut snrs: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !snrs.iter().any(|&s| (s - c.snr_db).abs() < 1e-9) {
                snrs.push(c.snr_db);
            }
        }
        snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        snrs
    }

    fn noises(&self) -> Vec<NoiseKind> {
        let mut out: Vec<NoiseKind> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.noise) {
                out.push(c.noise);
            }
        }
        out.sort_by_key(|n| n.to_string());
        out
    }

    /// CSV of every per-seed result. Byte-stable for a given report.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("noise,snr_db,method,depth,seed,accuracy,n_frames,error\n");
        for c in &self.cells {
            let acc = c
                .accuracy
                .map(|a| format!("{a:.4}"))
                .unwrap_or_default();
            let err = c.error.clone().unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.noise, c.snr_db, c.method, c.depth, c.seed, acc, c.n_frames, err
            );
        }
        out
    }

    /// Aligned plain-text tables, one per noise kind, with SNR columns,
    /// method/depth rows, and average rows honoring the exclusion flags.
    pub fn render_tables(&self) -> String {
        let mut out = String::new();
        let snrs = self.snrs();
        let rows = self.row_keys();
        for noise in self.noises() {
            let _ = writeln!(out, "== {noise} ==");
            let _ = write!(out, "{:<10}", "method");
            for &snr in &snrs {
                let _ = write!(out, "{:>9}", format!("{snr:+.0}dB"));
            }
            let _ = writeln!(out);
            for &(method, depth) in &rows {
                let _ = write!(out, "{:<10}", format!("{method}{depth}"));
                for &snr in &snrs {
                    match self.cell_mean(noise, snr, method, depth) {
                        Some(v) => {
                            let _ = write!(out, "{:>9}", format!("{v:.2}"));
                        }
                        None => {
                            let _ = write!(out, "{:>9}", "—");
                        }
                    }
                }
                let _ = writeln!(out);
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(out, "== AVR (excluding flagged cells) ==");
        for &(method, depth) in &rows {
            match self.overall_average(method, depth) {
                Some(v) => {
                    let _ = writeln!(out, "{:<10}{v:.2}", format!("{method}{depth}"));
                }
                None => {
                    let _ = writeln!(out, "{:<10}—", format!("{method}{depth}"));
                }
            }
        }
        out
    }
}
