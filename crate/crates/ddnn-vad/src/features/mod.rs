//! Acoustic feature extraction: 10 features per 25 ms frame, 273 dimensions
//! total, plus [0,1] min/max normalization.
//!
//! Layout per frame, in order: pitch(1), DFT(16), DFT over 8 frames(16),
//! DFT over 16 frames(16), MFCC(20), MFCC over 8 frames(20), MFCC over 16
//! frames(20), LPC(12), RASTA-PLP(17), AMS(135).

pub mod ams;
pub mod dsp;
pub mod mfcc;
pub mod norm;
pub mod pitch;
pub mod rasta;

mod io;

pub use io::{load_feature_matrix, load_labels, save_feature_matrix, save_labels};
pub use norm::{fit_norm_stats, normalize, NormStats};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FFT_SIZE: usize = 256;
pub const N_SPECTRUM_BINS: usize = FFT_SIZE / 2 + 1;

/// (name, dimension) of each feature in concatenation order.
pub const FEATURE_LAYOUT: [(&str, usize); 10] = [
    ("pitch", 1),
    ("dft", 16),
    ("dft8", 16),
    ("dft16", 16),
    ("mfcc", 20),
    ("mfcc8", 20),
    ("mfcc16", 20),
    ("lpc", 12),
    ("rasta_plp", 17),
    ("ams", 135),
];

pub const FEATURE_DIM: usize = 273;

const N_DFT_BANDS: usize = 16;
const LPC_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("empty audio signal".into()));
        }
        if sample_rate == 0 {
            return Err(Error::Data("sample rate must be positive".into()));
        }
        Ok(AudioSignal {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Frame length and shift in samples. Defaults are 25 ms / 10 ms at 8 kHz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub frame_length: usize,
    pub frame_shift: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            frame_length: 200,
            frame_shift: 80,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frame_shift == 0 || self.frame_shift > self.frame_length {
            return Err(Error::Config(format!(
                "frame shift {} must be in 1..={}",
                self.frame_shift, self.frame_length
            )));
        }
        Ok(())
    }

    /// `floor((n - frame_length)/frame_shift) + 1`, or an error when the
    /// signal is shorter than one frame.
    pub fn frame_count(&self, n_samples: usize) -> Result<usize> {
        if n_samples < self.frame_length {
            return Err(Error::Data(format!(
                "signal of {} samples is shorter than one frame ({})",
                n_samples, self.frame_length
            )));
        }
        Ok((n_samples - self.frame_length) / self.frame_shift + 1)
    }
}

/// One frame's feature vector with an optional speech/non-speech label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<u8>,
}

/// Cut the signal into overlapping raw (unwindowed) frames.
pub fn frame_signal(signal: &AudioSignal, spec: &FrameSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let n_frames = spec.frame_count(signal.len())?;
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let start = k * spec.frame_shift;
        frames.push(signal.samples[start..start + spec.frame_length].to_vec());
    }
    Ok(frames)
}

/// Trailing mean over the last `window` vectors, zero-padded at the start of
/// the utterance (missing history counts as zero).
fn trailing_mean(history: &[Vec<f64>], window: usize) -> Vec<f64> {
    let dim = history.last().map(|v| v.len()).unwrap_or(0);
    let mut mean = vec![0.0; dim];
    let take = history.len().min(window);
    for v in &history[history.len() - take..] {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= window as f64;
    }
    mean
}

/// Whole-utterance feature extractor. Temporal features (the windowed DFT
/// and MFCC variants, RASTA filtering, AMS envelopes) need frame history, so
/// extraction is utterance-at-a-time.
pub struct FeatureExtractor {
    spec: FrameSpec,
    sample_rate: u32,
    window: Vec<f64>,
    mel_bank: Vec<Vec<f64>>,
    bark_bank: Vec<Vec<f64>>,
    loudness: Vec<f64>,
}

impl FeatureExtractor {
    pub fn new(sample_rate: u32, spec: FrameSpec) -> Result<Self> {
        spec.validate()?;
        Ok(FeatureExtractor {
            spec,
            sample_rate,
            window: dsp::hamming_window(spec.frame_length),
            mel_bank: mfcc::mel_filterbank(mfcc::N_FILTERS, N_SPECTRUM_BINS, sample_rate as f64),
            bark_bank: rasta::bark_filterbank(
                rasta::N_BANDS,
                N_SPECTRUM_BINS,
                sample_rate as f64,
            ),
            loudness: rasta::equal_loudness(rasta::N_BANDS, sample_rate as f64),
        })
    }

    pub fn spec(&self) -> FrameSpec {
        self.spec
    }

    /// Raw (unnormalized) 273-dim feature matrix, one row per frame.
    pub fn extract_utterance(&self, signal: &AudioSignal) -> Result<Vec<Vec<f64>>> {
        if signal.sample_rate != self.sample_rate {
            return Err(Error::Data(format!(
                "sample rate {} does not match extractor rate {}",
                signal.sample_rate, self.sample_rate
            )));
        }
        let frames = frame_signal(signal, &self.spec)?;
        let sr = self.sample_rate as f64;

        let mut rasta_filter = rasta::RastaFilter::new(rasta::N_BANDS);
        let mut ams_tracker = ams::AmsTracker::new(N_SPECTRUM_BINS, sr);
        let mut dft_history: Vec<Vec<f64>> = Vec::with_capacity(frames.len());
        let mut mfcc_history: Vec<Vec<f64>> = Vec::with_capacity(frames.len());

        let mut out = Vec::with_capacity(frames.len());
        for frame in &frames {
            let windowed: Vec<f64> = frame.iter().zip(&self.window).map(|(x, w)| x * w).collect();
            let mag = dsp::magnitude_spectrum(&windowed, FFT_SIZE);
            let power: Vec<f64> = mag.iter().map(|m| m * m).collect();

            let pitch = pitch::estimate_pitch(frame, sr);
            let dft = dft_bands(&mag);
            let mfcc = mfcc::mfcc_from_power_spectrum(&power, &self.mel_bank);
            let lpc = lpc_coeffs(&windowed);
            let bark: Vec<f64> = mfcc::apply_filterbank(&power, &self.bark_bank)
                .iter()
                .map(|&e| (e + 1e-10).ln())
                .collect();
            let rasta_plp = rasta::plp_cepstra(&rasta_filter.step(&bark), &self.loudness);
            let ams = ams_tracker.step(&power);

            dft_history.push(dft.clone());
            mfcc_history.push(mfcc.clone());
            let dft8 = trailing_mean(&dft_history, 8);
            let dft16 = trailing_mean(&dft_history, 16);
            let mfcc8 = trailing_mean(&mfcc_history, 8);
            let mfcc16 = trailing_mean(&mfcc_history, 16);

            let mut row = Vec::with_capacity(FEATURE_DIM);
            for (name, part) in [
                ("pitch", vec![pitch]),
                ("dft", dft),
                ("dft8", dft8),
                ("dft16", dft16),
                ("mfcc", mfcc),
                ("mfcc8", mfcc8),
                ("mfcc16", mfcc16),
                ("lpc", lpc),
                ("rasta_plp", rasta_plp),
                ("ams", ams),
            ] {
                let expected = FEATURE_LAYOUT
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, d)| *d)
                    .unwrap();
                if part.len() != expected {
                    return Err(Error::Config(format!(
                        "feature '{name}' produced {} dims, expected {expected}",
                        part.len()
                    )));
                }
                row.extend(part);
            }
            debug_assert_eq!(row.len(), FEATURE_DIM);
            out.push(row);
        }
        Ok(out)
    }
}

/// Log-magnitude spectrum averaged into 16 uniform bands over 0..4 kHz.
fn dft_bands(magnitude: &[f64]) -> Vec<f64> {
    let usable = N_SPECTRUM_BINS - 1; // 128 bins below Nyquist
    let per_band = usable / N_DFT_BANDS;
    (0..N_DFT_BANDS)
        .map(|b| {
            let lo = b * per_band;
            let mean =
                magnitude[lo..lo + per_band].iter().sum::<f64>() / per_band as f64;
            (mean + 1e-10).ln()
        })
        .collect()
}

/// Order-12 prediction coefficients of the windowed frame via the
/// autocorrelation method.
fn lpc_coeffs(windowed: &[f64]) -> Vec<f64> {
    let r = dsp::autocorrelation(windowed, LPC_ORDER);
    dsp::levinson_durbin(&r, LPC_ORDER).0
}
