//! Minimal neural-network engine: affine layers with logistic activation,
//! forward propagation, cross-entropy losses, and exact analytic gradients
//! via backpropagation. Everything is `f64`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::NormStats;
use crate::linalg::{add_scaled_vec, Mat};
use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs so
/// saturated units cannot produce an infinite loss.
pub const PROB_CLAMP: f64 = 1e-7;

/// Numerically stable logistic function `1/(1+e^{-x})`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// One affine layer: weight matrix (rows = output units) and bias vector.
/// Used for both encoders and decoders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Mat,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(input_width: usize, output_width: usize) -> Self {
        LayerParams {
            weights: Mat::zeros(output_width, input_width),
            bias: vec![0.0; output_width],
        }
    }

    /// Uniform(-r, r) weights with r = sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn seeded_init<R: Rng>(input_width: usize, output_width: usize, rng: &mut R) -> Self {
        let r = (6.0 / (input_width + output_width) as f64).sqrt();
        let mut weights = Mat::zeros(output_width, input_width);
        for w in weights.data_mut() {
            *w = rng.gen_range(-r..r);
        }
        LayerParams {
            weights,
            bias: vec![0.0; output_width],
        }
    }

    pub fn input_width(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_width(&self) -> usize {
        self.weights.rows()
    }

    /// `logistic(Wx + b)` elementwise.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.affine(input)?;
        for v in &mut z {
            *v = logistic(*v);
        }
        Ok(z)
    }

    /// Pre-activation `Wx + b`.
    pub fn affine(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_width() {
            return Err(Error::dim(self.input_width(), input.len(), "layer input"));
        }
        let mut z = self.weights.mul_vec(input)?;
        for (v, b) in z.iter_mut().zip(&self.bias) {
            *v += b;
        }
        Ok(z)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|v| v.is_finite())
    }
}

/// Gradient with the same shapes as a `LayerParams`.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub weights: Mat,
    pub bias: Vec<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &LayerParams) -> Self {
        LayerGrad {
            weights: Mat::zeros(layer.output_width(), layer.input_width()),
            bias: vec![0.0; layer.output_width()],
        }
    }

    pub fn add(&mut self, other: &LayerGrad) -> Result<()> {
        self.weights.add_scaled(&other.weights, 1.0)?;
        add_scaled_vec(&mut self.bias, &other.bias, 1.0);
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.weights.scale(s);
        for b in &mut self.bias {
            *b *= s;
        }
    }

    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for v in self.weights.data() {
            acc += v * v;
        }
        for v in &self.bias {
            acc += v * v;
        }
        acc.sqrt()
    }
}

/// `p ← p − lr · g` elementwise.
pub fn sgd_step(params: &mut LayerParams, grad: &LayerGrad, learning_rate: f64) -> Result<()> {
    if params.output_width() != grad.bias.len() || params.input_width() != grad.weights.cols() {
        return Err(Error::dim(
            params.output_width(),
            grad.bias.len(),
            "sgd_step shape",
        ));
    }
    params.weights.add_scaled(&grad.weights, -learning_rate)?;
    add_scaled_vec(&mut params.bias, &grad.bias, -learning_rate);
    Ok(())
}

/// Reconstruction cross-entropy
/// `L(x; z) = -Σ_d (x_d log z_d + (1 - x_d) log(1 - z_d))`.
pub fn reconstruction_loss(target: &[f64], reconstruction: &[f64]) -> Result<f64> {
    if target.len() != reconstruction.len() {
        return Err(Error::dim(
            target.len(),
            reconstruction.len(),
            "reconstruction_loss lengths",
        ));
    }
    let mut loss = 0.0;
    for (&x, &z) in target.iter().zip(reconstruction) {
        let z = clamp_prob(z);
        loss -= x * z.ln() + (1.0 - x) * (1.0 - z).ln();
    }
    Ok(loss)
}

/// Binary cross-entropy for a single speech/non-speech score. `label` is 1 for
/// the speech hypothesis H1, 0 for H0.
pub fn classification_loss(label: u8, score: f64) -> f64 {
    let p = clamp_prob(score);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Gradients of the reconstruction loss of a one-hidden-layer autoencoder
/// with respect to all four parameter blocks.
#[derive(Debug, Clone)]
pub struct AutoencoderGrad {
    pub encoder: LayerGrad,
    pub decoder: LayerGrad,
    pub loss: f64,
}

/// Exact analytic gradient of `reconstruction_loss(target, g(f(input)))` by
/// backpropagation. The logistic output plus cross-entropy makes the
/// output-layer delta `z - target`.
pub fn autoencoder_grad(
    encoder: &LayerParams,
    decoder: &LayerParams,
    input: &[f64],
    target: &[f64],
) -> Result<AutoencoderGrad> {
    if decoder.output_width() != target.len() {
        return Err(Error::dim(
            decoder.output_width(),
            target.len(),
            "autoencoder target",
        ));
    }
    if encoder.output_width() != decoder.input_width() {
        return Err(Error::dim(
            encoder.output_width(),
            decoder.input_width(),
            "encoder/decoder widths",
        ));
    }
    let hidden = encoder.forward(input)?;
    let recon = decoder.forward(&hidden)?;
    let loss = reconstruction_loss(target, &recon)?;

    let delta_out: Vec<f64> = recon.iter().zip(target).map(|(&z, &x)| z - x).collect();
    let mut dec = LayerGrad::zeros_like(decoder);
    dec.weights.add_outer_scaled(&delta_out, &hidden, 1.0)?;
    dec.bias.copy_from_slice(&delta_out);

    let back = decoder.weights.mul_vec_transposed(&delta_out)?;
    let delta_hidden: Vec<f64> = back
        .iter()
        .zip(&hidden)
        .map(|(&g, &h)| g * h * (1.0 - h))
        .collect();
    let mut enc = LayerGrad::zeros_like(encoder);
    enc.weights.add_outer_scaled(&delta_hidden, input, 1.0)?;
    enc.bias.copy_from_slice(&delta_hidden);

    Ok(AutoencoderGrad {
        encoder: enc,
        decoder: dec,
        loss,
    })
}

/// Layer sizes, seed, and input dimension of a classification network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub seed: u64,
}

/// The assembled classifier: stacked encoder layers plus a single logistic
/// output unit, together with the normalization statistics fitted on the
/// training split.
#[derive(Debug, Clone, PartialEq)]
pub struct DdnnModel {
    pub encoder_layers: Vec<LayerParams>,
    pub classifier: LayerParams,
    pub norm_stats: NormStats,
    pub config: NetworkConfig,
}

/// Per-layer post-activations cached during a forward pass, for
/// backpropagation. `activations[0]` is the input itself.
#[derive(Debug, Clone)]
pub struct ActivationRecord {
    pub activations: Vec<Vec<f64>>,
    pub score: f64,
}

impl DdnnModel {
    /// Fresh seeded model with untrained layers, mostly for baselines and tests.
    pub fn random(config: NetworkConfig, norm_stats: NormStats) -> Result<Self> {
        if config.hidden_sizes.is_empty() {
            return Err(Error::Config("at least one hidden layer required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut layers = Vec::new();
        let mut prev = config.input_dim;
        for &w in &config.hidden_sizes {
            layers.push(LayerParams::seeded_init(prev, w, &mut rng));
            prev = w;
        }
        let classifier = LayerParams::seeded_init(prev, 1, &mut rng);
        Ok(DdnnModel {
            encoder_layers: layers,
            classifier,
            norm_stats,
            config,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn depth(&self) -> usize {
        self.encoder_layers.len()
    }

    /// Speech score in (0,1).
    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        let mut x = input.to_vec();
        for layer in &self.encoder_layers {
            x = layer.forward(&x)?;
        }
        let out = self.classifier.forward(&x)?;
        Ok(out[0])
    }

    pub fn forward_recorded(&self, input: &[f64]) -> Result<ActivationRecord> {
        let mut activations = Vec::with_capacity(self.encoder_layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.encoder_layers {
            let next = layer.forward(activations.last().unwrap())?;
            activations.push(next);
        }
        let score = self.classifier.forward(activations.last().unwrap())?[0];
        Ok(ActivationRecord { activations, score })
    }

    pub fn is_finite(&self) -> bool {
        self.encoder_layers.iter().all(|l| l.is_finite()) && self.classifier.is_finite()
    }
}

/// Gradient for every layer of a `DdnnModel`.
#[derive(Debug, Clone)]
pub struct ModelGrad {
    pub encoder_layers: Vec<LayerGrad>,
    pub classifier: LayerGrad,
    pub loss: f64,
}

impl ModelGrad {
    pub fn zeros_like(model: &DdnnModel) -> Self {
        ModelGrad {
            encoder_layers: model
                .encoder_layers
                .iter()
                .map(LayerGrad::zeros_like)
                .collect(),
            classifier: LayerGrad::zeros_like(&model.classifier),
            loss: 0.0,
        }
    }

    pub fn add(&mut self, other: &ModelGrad) -> Result<()> {
        for (a, b) in self.encoder_layers.iter_mut().zip(&other.encoder_layers) {
            a.add(b)?;
        }
        self.classifier.add(&other.classifier)?;
        self.loss += other.loss;
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for g in &mut self.encoder_layers {
            g.scale(s);
        }
        self.classifier.scale(s);
        self.loss *= s;
    }

    pub fn norm(&self) -> f64 {
        let mut acc = self.classifier.norm().powi(2);
        for g in &self.encoder_layers {
            acc += g.norm().powi(2);
        }
        acc.sqrt()
    }
}

/// Gradient of the classification loss for a single example, through the
/// classifier head and all encoder layers.
pub fn classifier_grad_single(model: &DdnnModel, input: &[f64], label: u8) -> Result<ModelGrad> {
    let record = model.forward_recorded(input)?;
    let mut grad = ModelGrad::zeros_like(model);
    grad.loss = classification_loss(label, record.score);

    let delta_out = vec![record.score - label as f64];
    let top = record.activations.last().unwrap();
    grad.classifier.weights.add_outer_scaled(&delta_out, top, 1.0)?;
    grad.classifier.bias[0] = delta_out[0];

    let mut delta = model.classifier.weights.mul_vec_transposed(&delta_out)?;
    for l in (0..model.encoder_layers.len()).rev() {
        let act = &record.activations[l + 1];
        for (d, &h) in delta.iter_mut().zip(act) {
            *d *= h * (1.0 - h);
        }
        grad.encoder_layers[l]
            .weights
            .add_outer_scaled(&delta, &record.activations[l], 1.0)?;
        grad.encoder_layers[l].bias.copy_from_slice(&delta);
        if l > 0 {
            delta = model.encoder_layers[l].weights.mul_vec_transposed(&delta)?;
        }
    }
    Ok(grad)
}

/// Mean-over-batch gradient of the classification loss.
pub fn classifier_grad(model: &DdnnModel, inputs: &[Vec<f64>], labels: &[u8]) -> Result<ModelGrad> {
    if inputs.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    if inputs.len() != labels.len() {
        return Err(Error::dim(inputs.len(), labels.len(), "batch labels"));
    }
    let examples: Vec<(&Vec<f64>, u8)> = inputs.iter().zip(labels.iter().copied()).collect();
    let mut grad = crate::par::batch_sum(&examples, |(x, y): &(&Vec<f64>, u8)| {
        classifier_grad_single(model, x, *y)
    })?;
    grad.scale(1.0 / inputs.len() as f64);
    Ok(grad)
}

impl crate::par::Accum for ModelGrad {
    fn accum(&mut self, other: &Self) -> Result<()> {
        self.add(other)
    }
}

impl crate::par::Accum for AutoencoderGrad {
    fn accum(&mut self, other: &Self) -> Result<()> {
        self.encoder.add(&other.encoder)?;
        self.decoder.add(&other.decoder)?;
        self.loss += other.loss;
        Ok(())
    }
}

impl AutoencoderGrad {
    pub fn scale(&mut self, s: f64) {
        self.encoder.scale(s);
        self.decoder.scale(s);
        self.loss *= s;
    }
}

// ---------------------------------------------------------------------------
// Model file format.
//
// Little-endian binary container:
//   magic "DDNN" (4 bytes), format version u32, seed u64,
//   input_dim u32, n_encoder_layers u32, each hidden width u32,
//   then for each layer bottom-up including the classifier head:
//     row-major weights (out*in f64) followed by bias (out f64),
//   then norm min (input_dim f64) and norm max (input_dim f64).
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 4] = b"DDNN";
const FORMAT_VERSION: u32 = 1;

pub fn save_model(model: &DdnnModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&model.config.seed.to_le_bytes())?;
    w.write_all(&(model.config.input_dim as u32).to_le_bytes())?;
    w.write_all(&(model.encoder_layers.len() as u32).to_le_bytes())?;
    for &h in &model.config.hidden_sizes {
        w.write_all(&(h as u32).to_le_bytes())?;
    }
    for layer in model.encoder_layers.iter().chain([&model.classifier]) {
        for v in layer.weights.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &layer.bias {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for v in &model.norm_stats.min {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &model.norm_stats.max {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64_vec(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn load_model(path: &Path) -> Result<DdnnModel> {
    let file = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat("bad magic, not a model file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version}"
        )));
    }
    let seed = read_u64(&mut r)?;
    let input_dim = read_u32(&mut r)? as usize;
    let n_layers = read_u32(&mut r)? as usize;
    let mut hidden_sizes = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        hidden_sizes.push(read_u32(&mut r)? as usize);
    }
    let mut layers = Vec::with_capacity(n_layers);
    let mut prev = input_dim;
    for &h in &hidden_sizes {
        let weights = Mat::from_vec(h, prev, read_f64_vec(&mut r, h * prev)?)?;
        let bias = read_f64_vec(&mut r, h)?;
        layers.push(LayerParams { weights, bias });
        prev = h;
    }
    let classifier = LayerParams {
        weights: Mat::from_vec(1, prev, read_f64_vec(&mut r, prev)?)?,
        bias: read_f64_vec(&mut r, 1)?,
    };
    let min = read_f64_vec(&mut r, input_dim)?;
    let max = read_f64_vec(&mut r, input_dim)?;
    Ok(DdnnModel {
        encoder_layers: layers,
        classifier,
        norm_stats: NormStats { min, max },
        config: NetworkConfig {
            input_dim,
            hidden_sizes,
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn logistic_symmetry_point() {
        assert_eq!(logistic(0.0), 0.5);
    }

    #[test]
    fn logistic_saturation() {
        assert!((logistic(40.0) - 1.0).abs() < 1e-15);
        assert!(logistic(-745.0) >= 0.0);
        assert!(logistic(745.0).is_finite());
    }

    #[test]
    fn logistic_complement_identity() {
        let x = 1.37;
        assert_abs_diff_eq!(logistic(-x), 1.0 - logistic(x), epsilon = 1e-15);
    }

    #[test]
    fn zero_layer_outputs_half() {
        let layer = LayerParams::zeros(3, 4);
        let out = layer.forward(&[0.2, -0.5, 1.0]).unwrap();
        assert_eq!(out, vec![0.5; 4]);
    }

    #[test]
    fn one_by_one_layer() {
        let layer = LayerParams {
            weights: Mat::from_vec(1, 1, vec![1.0]).unwrap(),
            bias: vec![0.0],
        };
        assert_eq!(layer.forward(&[0.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn layer_forward_matches_scalar_oracle() {
        let mut r = rng(7);
        let layer = LayerParams::seeded_init(2, 2, &mut r);
        let input = [0.3, -0.8];
        let out = layer.forward(&input).unwrap();
        for j in 0..2 {
            let mut acc = layer.bias[j];
            for k in 0..2 {
                acc += layer.weights.get(j, k) * input[k];
            }
            assert_abs_diff_eq!(out[j], logistic(acc), epsilon = 1e-12);
        }
    }

    #[test]
    fn layer_forward_dim_mismatch() {
        let layer = LayerParams::zeros(3, 2);
        let err = layer.forward(&[1.0]).unwrap_err();
        assert!(err.to_string().contains("3"));
        assert!(err.to_string().contains("1"));
    }

    #[test]
    fn reconstruction_loss_uniform_entropy() {
        let l = reconstruction_loss(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(l, 2.0 * std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_loss_perfect_match_limit() {
        let l = reconstruction_loss(&[1.0, 0.0], &[1.0 - 1e-7, 1e-7]).unwrap();
        assert!(l > 0.0 && l < 3e-7, "loss {l}");
    }

    #[test]
    fn reconstruction_loss_matches_scalar_oracle() {
        let mut r = rng(11);
        let target: Vec<f64> = (0..5).map(|_| r.gen_range(0.0..1.0)).collect();
        let recon: Vec<f64> = (0..5).map(|_| r.gen_range(0.01..0.99)).collect();
        let l = reconstruction_loss(&target, &recon).unwrap();
        let mut expected = 0.0;
        for d in 0..5 {
            expected -= target[d] * recon[d].ln() + (1.0 - target[d]) * (1.0 - recon[d]).ln();
        }
        assert_abs_diff_eq!(l, expected, epsilon = 1e-12);
    }

    #[test]
    fn reconstruction_loss_length_mismatch() {
        assert!(reconstruction_loss(&[0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn classification_loss_values() {
        assert_abs_diff_eq!(classification_loss(1, 0.5), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(classification_loss(0, 0.5), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(classification_loss(1, 0.9), -(0.9f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn autoencoder_grad_zero_at_stationary_target() {
        let mut r = rng(3);
        let enc = LayerParams::seeded_init(3, 2, &mut r);
        let dec = LayerParams::seeded_init(2, 3, &mut r);
        let input = [0.2, 0.7, 0.4];
        let target = dec.forward(&enc.forward(&input).unwrap()).unwrap();
        let g = autoencoder_grad(&enc, &dec, &input, &target).unwrap();
        assert!(g.encoder.norm() < 1e-12);
        assert!(g.decoder.norm() < 1e-12);
    }

    #[test]
    fn autoencoder_grad_bias_sign_single_unit() {
        let enc = LayerParams {
            weights: Mat::from_vec(1, 1, vec![1.0]).unwrap(),
            bias: vec![0.0],
        };
        let dec = enc.clone();
        let g = autoencoder_grad(&enc, &dec, &[1.0], &[1.0]).unwrap();
        // z < 1, so dL/db' = z - 1 < 0
        assert!(g.decoder.bias[0] < 0.0);
    }

    #[test]
    fn sgd_step_arithmetic() {
        let mut layer = LayerParams {
            weights: Mat::from_vec(1, 1, vec![1.0]).unwrap(),
            bias: vec![1.0],
        };
        let grad = LayerGrad {
            weights: Mat::from_vec(1, 1, vec![2.0]).unwrap(),
            bias: vec![2.0],
        };
        sgd_step(&mut layer, &grad, 0.004).unwrap();
        assert_abs_diff_eq!(layer.weights.get(0, 0), 0.992, epsilon = 1e-15);
        assert_abs_diff_eq!(layer.bias[0], 0.992, epsilon = 1e-15);
    }

    #[test]
    fn sgd_zero_lr_is_identity() {
        let mut r = rng(5);
        let mut layer = LayerParams::seeded_init(2, 2, &mut r);
        let before = layer.clone();
        let grad = LayerGrad {
            weights: Mat::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            bias: vec![1.0, -1.0],
        };
        sgd_step(&mut layer, &grad, 0.0).unwrap();
        assert_eq!(layer, before);
    }

    #[test]
    fn two_half_steps_equal_one_step() {
        let mut r = rng(5);
        let mut a = LayerParams::seeded_init(2, 3, &mut r);
        let mut b = a.clone();
        let grad = LayerGrad {
            weights: Mat::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            bias: vec![0.5, -0.25, 1.0],
        };
        sgd_step(&mut a, &grad, 0.01).unwrap();
        sgd_step(&mut b, &grad, 0.005).unwrap();
        sgd_step(&mut b, &grad, 0.005).unwrap();
        for (x, y) in a.weights.data().iter().zip(b.weights.data()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    fn toy_model(seed: u64) -> DdnnModel {
        DdnnModel::random(
            NetworkConfig {
                input_dim: 4,
                hidden_sizes: vec![3, 2],
                seed,
            },
            NormStats::unit(4),
        )
        .unwrap()
    }

    #[test]
    fn batch_grad_is_mean_of_singles() {
        let model = toy_model(42);
        let a = vec![0.1, 0.9, 0.3, 0.6];
        let b = vec![0.8, 0.2, 0.5, 0.1];
        let ga = classifier_grad_single(&model, &a, 1).unwrap();
        let gb = classifier_grad_single(&model, &b, 0).unwrap();
        let batch = classifier_grad(&model, &[a, b], &[1, 0]).unwrap();
        let mut mean = ga;
        mean.add(&gb).unwrap();
        mean.scale(0.5);
        assert_abs_diff_eq!(
            batch.classifier.bias[0],
            mean.classifier.bias[0],
            epsilon = 1e-12
        );
        for (x, y) in batch.encoder_layers[0]
            .weights
            .data()
            .iter()
            .zip(mean.encoder_layers[0].weights.data())
        {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn saturated_correct_prediction_has_tiny_gradient() {
        let mut model = toy_model(1);
        // Push the classifier bias far positive so the score is ~1.
        model.classifier.bias[0] = 50.0;
        let x = vec![0.5; 4];
        let g = classifier_grad(&model, &[x.clone(), x], &[1, 1]).unwrap();
        assert!(g.norm() < 1e-6);
    }

    #[test]
    fn forward_deterministic() {
        let model = toy_model(9);
        let x = vec![0.3, 0.1, 0.7, 0.2];
        let a = model.forward(&x).unwrap();
        let b = model.forward(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn model_roundtrip_bit_exact() {
        let model = toy_model(123);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ddnn");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(model, loaded);
    }

    #[test]
    fn load_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ddnn");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(load_model(&path).is_err());
    }
}
