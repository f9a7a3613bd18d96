//! Glue between the on-disk corpus and the training/eval stages: batch
//! feature extraction over a corpus manifest and assembly of normalized
//! per-cell datasets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{CorpusManifest, NoiseKind, RecordingEntry, Split};
use crate::eval::CellDataset;
use crate::features::{
    fit_norm_stats, load_feature_matrix, load_labels, normalize, save_feature_matrix,
    FeatureExtractor, FrameSpec,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub split: Split,
    pub noisy_features: PathBuf,
    pub clean_features: PathBuf,
    pub labels: PathBuf,
    pub n_frames: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSetManifest {
    pub sample_rate: u32,
    pub frame_length: usize,
    pub frame_shift: usize,
    pub entries: Vec<FeatureEntry>,
}

impl FeatureSetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("feature manifest serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Data(format!("feature manifest parse: {e}")))
    }
}

/// Extract raw features for every recording in the corpus manifest. One
/// `.ddnf` pair (noisy, clean) per recording; recordings run in parallel.
pub fn extract_corpus(manifest: &CorpusManifest, out_dir: &Path) -> Result<FeatureSetManifest> {
    std::fs::create_dir_all(out_dir)?;
    let spec = FrameSpec {
        frame_length: manifest.frame_length,
        frame_shift: manifest.frame_shift,
    };
    let extractor = FeatureExtractor::new(manifest.sample_rate, spec)?;
    let entries: Vec<FeatureEntry> =
        crate::par::try_map_indexed(&manifest.recordings, |rec: &RecordingEntry| {
            let stem = format!("{}_{:+05.1}db_{}", rec.noise, rec.snr_db, rec.split);
            let noisy = extractor.extract_utterance(&crate::dataset::read_wav(&rec.noisy_wav)?)?;
            let clean = extractor.extract_utterance(&crate::dataset::read_wav(&rec.clean_wav)?)?;
            let labels = load_labels(&rec.labels)?;
            if labels.len() != noisy.len() {
                return Err(Error::dim(noisy.len(), labels.len(), "frame labels"));
            }
            let noisy_path = out_dir.join(format!("{stem}_noisy.ddnf"));
            let clean_path = out_dir.join(format!("{stem}_clean.ddnf"));
            let labels_path = out_dir.join(format!("{stem}.labels"));
            save_feature_matrix(&noisy, &noisy_path)?;
            save_feature_matrix(&clean, &clean_path)?;
            crate::features::save_labels(&labels, &labels_path)?;
            Ok(FeatureEntry {
                noise: rec.noise,
                snr_db: rec.snr_db,
                split: rec.split,
                noisy_features: noisy_path,
                clean_features: clean_path,
                labels: labels_path,
                n_frames: noisy.len(),
            })
        })?;
    let fsm = FeatureSetManifest {
        sample_rate: manifest.sample_rate,
        frame_length: manifest.frame_length,
        frame_shift: manifest.frame_shift,
        entries,
    };
    fsm.save(&out_dir.join("features.toml"))?;
    Ok(fsm)
}

fn find_entry<'a>(
    manifest: &'a FeatureSetManifest,
    noise: NoiseKind,
    snr_db: f64,
    split: Split,
) -> Result<&'a FeatureEntry> {
    manifest
        .entries
        .iter()
        .find(|e| e.noise == noise && (e.snr_db - snr_db).abs() < 1e-9 && e.split == split)
        .ok_or_else(|| {
            Error::Data(format!(
                "no {split} features for noise {noise} at {snr_db} dB"
            ))
        })
}

/// Load one (noise, SNR) cell and normalize everything with stats fitted on
/// the noisy training features.
pub fn load_cell(
    manifest: &FeatureSetManifest,
    noise: NoiseKind,
    snr_db: f64,
) -> Result<CellDataset> {
    let train = find_entry(manifest, noise, snr_db, Split::Train)?;
    let dev = find_entry(manifest, noise, snr_db, Split::Dev)?;
    let test = find_entry(manifest, noise, snr_db, Split::Test)?;

    let train_noisy_raw = load_feature_matrix(&train.noisy_features)?;
    let train_clean_raw = load_feature_matrix(&train.clean_features)?;
    let norm = fit_norm_stats(&train_noisy_raw)?;

    let norm_all = |rows: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        crate::par::try_map_indexed(rows, |r| normalize(r, &norm))
    };
    Ok(CellDataset {
        noise,
        snr_db,
        train_noisy: norm_all(&train_noisy_raw)?,
        train_clean: norm_all(&train_clean_raw)?,
        train_labels: load_labels(&train.labels)?,
        dev: norm_all(&load_feature_matrix(&dev.noisy_features)?)?,
        dev_labels: load_labels(&dev.labels)?,
        test: norm_all(&load_feature_matrix(&test.noisy_features)?)?,
        test_labels: load_labels(&test.labels)?,
        norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_corpus, CorpusConfig};

    #[test]
    fn corpus_extract_load_cell_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let config = CorpusConfig {
            n_utterances: 10,
            utterance_s: 1.5,
            noise_kinds: vec![NoiseKind::White],
            snrs_db: vec![10.0],
            ..Default::default()
        };
        let manifest = build_corpus(&config, &dir.path().join("corpus")).unwrap();
        assert_eq!(manifest.recordings.len(), 3);
        let fsm = extract_corpus(&manifest, &dir.path().join("features")).unwrap();
        assert_eq!(fsm.entries.len(), 3);
        let cell = load_cell(&fsm, NoiseKind::White, 10.0).unwrap();
        assert_eq!(cell.train_noisy.len(), cell.train_labels.len());
        assert_eq!(cell.train_noisy.len(), cell.train_clean.len());
        assert!(!cell.test.is_empty());
        for row in cell.train_noisy.iter().take(20) {
            assert_eq!(row.len(), crate::features::FEATURE_DIM);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn missing_cell_is_data_error() {
        let fsm = FeatureSetManifest {
            sample_rate: 8000,
            frame_length: 200,
            frame_shift: 80,
            entries: vec![],
        };
        assert!(load_cell(&fsm, NoiseKind::Pink, 5.0).is_err());
    }
}
