//! Supervised fine-tuning: assemble the classifier from the pretrained
//! encoder stack plus a fresh logistic output unit, then run end-to-end
//! minibatch SGD on the classification cross-entropy.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::NormStats;
use crate::network::{classifier_grad, sgd_step, DdnnModel, LayerParams, NetworkConfig};
use crate::pretrain::PretrainState;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            learning_rate: 0.005,
            max_epochs: 130,
            batch_size: 512,
            seed: 1,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || self.batch_size == 0 {
            return Err(Error::Config(
                "learning rate and batch size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Copy the pretrained encoders into a classification model with a fresh
/// seeded classifier head. Decoders and the clean path never make it into
/// the model.
pub fn assemble_classifier(
    state: &PretrainState,
    expected_depth: usize,
    norm_stats: NormStats,
    seed: u64,
) -> Result<DdnnModel> {
    if state.noisy_path.len() != expected_depth {
        return Err(Error::Config(format!(
            "pretraining incomplete: {} of {expected_depth} levels done",
            state.noisy_path.len()
        )));
    }
    if state.noisy_path.is_empty() {
        return Err(Error::Config("cannot assemble an empty encoder stack".into()));
    }
    let last_width = state.noisy_path.last().unwrap().output_width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6865_6164);
    let classifier = LayerParams::seeded_init(last_width, 1, &mut rng);
    Ok(DdnnModel {
        encoder_layers: state.noisy_path.clone(),
        classifier,
        norm_stats,
        config: NetworkConfig {
            input_dim: state.input_dim,
            hidden_sizes: state.noisy_path.iter().map(|l| l.output_width()).collect(),
            seed,
        },
    })
}

/// Per-epoch training loss and dev accuracy.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FinetuneLog {
    pub epochs: Vec<FinetuneEpoch>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinetuneEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: Option<f64>,
}

impl FinetuneLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,dev_accuracy\n");
        for e in &self.epochs {
            match e.dev_accuracy {
                Some(acc) => out.push_str(&format!("{},{:.6},{:.4}\n", e.epoch, e.train_loss, acc)),
                None => out.push_str(&format!("{},{:.6},\n", e.epoch, e.train_loss)),
            }
        }
        out
    }
}

/// Fixed-epoch end-to-end SGD. The dev set, when given, is only used for the
/// logged accuracy curve; the returned model is always the last-epoch one.
pub fn finetune(
    model: &mut DdnnModel,
    inputs: &[Vec<f64>],
    labels: &[u8],
    dev: Option<(&[Vec<f64>], &[u8])>,
    config: &FinetuneConfig,
) -> Result<FinetuneLog> {
    config.validate()?;
    if inputs.is_empty() {
        return Err(Error::Data("empty fine-tuning set".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::dim(inputs.len(), labels.len(), "finetune labels"));
    }
    let n = inputs.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = FinetuneLog::default();
    for epoch in 0..config.max_epochs {
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(config.seed ^ (epoch as u64).wrapping_mul(0x2545_f491));
        for i in (1..n).rev() {
            use rand::Rng;
            let j = shuffle_rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let batch_inputs: Vec<Vec<f64>> = batch.iter().map(|&i| inputs[i].clone()).collect();
            let batch_labels: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            let grad = classifier_grad(model, &batch_inputs, &batch_labels)?;
            epoch_loss += grad.loss * batch.len() as f64;
            for (layer, g) in model.encoder_layers.iter_mut().zip(&grad.encoder_layers) {
                sgd_step(layer, g, config.learning_rate)?;
            }
            sgd_step(&mut model.classifier, &grad.classifier, config.learning_rate)?;
        }
        let train_loss = epoch_loss / n as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "classification loss diverged at epoch {epoch}"
            )));
        }
        let dev_accuracy = match dev {
            Some((dx, dy)) => Some(accuracy_of(model, dx, dy)?),
            None => None,
        };
        log.epochs.push(FinetuneEpoch {
            epoch,
            train_loss,
            dev_accuracy,
        });
    }
    if !model.is_finite() {
        return Err(Error::Numerical("non-finite parameters after fine-tuning".into()));
    }
    Ok(log)
}

/// Speech score and hard H0/H1 decision. Ties at 0.5 go to H1.
pub fn predict_frame(model: &DdnnModel, features: &[f64]) -> Result<(f64, u8)> {
    let score = model.forward(features)?;
    Ok((score, if score >= 0.5 { 1 } else { 0 }))
}

pub fn predict_batch(model: &DdnnModel, inputs: &[Vec<f64>]) -> Result<Vec<(f64, u8)>> {
    crate::par::try_map_indexed(inputs, |x| predict_frame(model, x))
}

fn accuracy_of(model: &DdnnModel, inputs: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
    let decisions: Vec<u8> = predict_batch(model, inputs)?
        .into_iter()
        .map(|(_, d)| d)
        .collect();
    crate::eval::accuracy(&decisions, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretrain::{run_pretraining, CleanPretrainer, PretrainConfig};
    use rand::{Rng, SeedableRng};

    fn small_pretrain(depth: usize) -> (PretrainState, Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let clean: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..6).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let labels: Vec<u8> = (0..80).map(|i| (i % 2) as u8).collect();
        let config = PretrainConfig {
            layer_sizes: vec![5, 4, 3][..depth].to_vec(),
            learning_rate: 0.05,
            max_epochs: 2,
            batch_size: 32,
            seed: 4,
            clean_pretrainer: CleanPretrainer::Autoencoder,
        };
        let (state, _) = run_pretraining(&clean, &clean, &config).unwrap();
        (state, clean, labels)
    }

    #[test]
    fn assembled_widths() {
        let (state, _, _) = small_pretrain(3);
        let model = assemble_classifier(&state, 3, NormStats::unit(6), 1).unwrap();
        assert_eq!(model.input_dim(), 6);
        assert_eq!(model.config.hidden_sizes, vec![5, 4, 3]);
        assert_eq!(model.classifier.input_width(), 3);
        assert_eq!(model.classifier.output_width(), 1);
    }

    #[test]
    fn assembly_rejects_incomplete_pretraining() {
        let (state, _, _) = small_pretrain(2);
        assert!(assemble_classifier(&state, 3, NormStats::unit(6), 1).is_err());
    }

    #[test]
    fn assembled_forward_matches_propagate_plus_head() {
        let (state, data, _) = small_pretrain(2);
        let model = assemble_classifier(&state, 2, NormStats::unit(6), 9).unwrap();
        for x in data.iter().take(5) {
            let hidden = state.propagate_noisy(x, 2).unwrap();
            let via_head = model.classifier.forward(&hidden).unwrap()[0];
            let direct = model.forward(x).unwrap();
            assert!((via_head - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn assembly_does_not_alias_pretrain_state() {
        let (state, data, labels) = small_pretrain(1);
        let snapshot = state.clone();
        let mut model = assemble_classifier(&state, 1, NormStats::unit(6), 3).unwrap();
        finetune(
            &mut model,
            &data,
            &labels,
            None,
            &FinetuneConfig {
                max_epochs: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(state, snapshot);
    }

    #[test]
    fn zero_epochs_leaves_model_unchanged() {
        let (state, data, labels) = small_pretrain(1);
        let mut model = assemble_classifier(&state, 1, NormStats::unit(6), 3).unwrap();
        let before = model.clone();
        finetune(
            &mut model,
            &data,
            &labels,
            None,
            &FinetuneConfig {
                max_epochs: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (state, data, labels) = small_pretrain(2);
        let config = FinetuneConfig {
            max_epochs: 5,
            learning_rate: 0.1,
            ..Default::default()
        };
        let mut a = assemble_classifier(&state, 2, NormStats::unit(6), 3).unwrap();
        let mut b = a.clone();
        finetune(&mut a, &data, &labels, None, &config).unwrap();
        finetune(&mut b, &data, &labels, None, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separable_toy_set_reaches_99() {
        // 2-dim features, label = x0 > x1.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inputs: Vec<Vec<f64>> = (0..400)
            .map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
            .collect();
        let labels: Vec<u8> = inputs
            .iter()
            .map(|v| ((v[0] - v[1]).abs() > 0.05 && v[0] > v[1]) as u8)
            .collect();
        let keep: Vec<usize> = inputs
            .iter()
            .enumerate()
            .filter(|(_, v)| (v[0] - v[1]).abs() > 0.05)
            .map(|(i, _)| i)
            .collect();
        let inputs: Vec<Vec<f64>> = keep.iter().map(|&i| inputs[i].clone()).collect();
        let labels: Vec<u8> = keep.iter().map(|&i| labels[i]).collect();

        let mut model = DdnnModel::random(
            NetworkConfig {
                input_dim: 2,
                hidden_sizes: vec![4],
                seed: 7,
            },
            NormStats::unit(2),
        )
        .unwrap();
        finetune(
            &mut model,
            &inputs,
            &labels,
            None,
            &FinetuneConfig {
                learning_rate: 0.5,
                max_epochs: 130,
                batch_size: 64,
                seed: 7,
            },
        )
        .unwrap();
        let correct = predict_batch(&model, &inputs)
            .unwrap()
            .iter()
            .zip(&labels)
            .filter(|((_, d), &l)| *d == l)
            .count();
        let acc = correct as f64 / labels.len() as f64;
        assert!(acc >= 0.99, "train accuracy {acc}");
    }

    #[test]
    fn predict_threshold_and_ties() {
        let (state, _, _) = small_pretrain(1);
        let mut model = assemble_classifier(&state, 1, NormStats::unit(6), 3).unwrap();
        // Zero head: score exactly 0.5, tie goes to H1.
        model.classifier = LayerParams::zeros(5, 1);
        let (score, decision) = predict_frame(&model, &[0.5; 6]).unwrap();
        assert_eq!(score, 0.5);
        assert_eq!(decision, 1);

        model.classifier.bias[0] = 3.0;
        assert_eq!(predict_frame(&model, &[0.5; 6]).unwrap().1, 1);
        model.classifier.bias[0] = -3.0;
        assert_eq!(predict_frame(&model, &[0.5; 6]).unwrap().1, 0);
    }

    #[test]
    fn batch_predict_matches_per_frame() {
        let (state, data, _) = small_pretrain(2);
        let model = assemble_classifier(&state, 2, NormStats::unit(6), 3).unwrap();
        let batch = predict_batch(&model, &data).unwrap();
        for (x, &(score, decision)) in data.iter().zip(&batch) {
            let (s, d) = predict_frame(&model, x).unwrap();
            assert_eq!(s.to_bits(), score.to_bits());
            assert_eq!(d, decision);
        }
    }

    #[test]
    fn empty_training_set_rejected() {
        let (state, _, _) = small_pretrain(1);
        let mut model = assemble_classifier(&state, 1, NormStats::unit(6), 3).unwrap();
        assert!(finetune(&mut model, &[], &[], None, &FinetuneConfig::default()).is_err());
    }
}
