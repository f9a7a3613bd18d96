//! RASTA-PLP cepstra. Critical-band (Bark) analysis of the power spectrum,
//! RASTA band-pass filtering of the log band trajectories, equal-loudness
//! weighting and cube-root compression, then an all-pole model whose
//! cepstra form the feature. Model order 16 yields 17 cepstral values.

use super::dsp::{levinson_durbin, lpc_to_cepstrum};

pub const N_BANDS: usize = 18;
pub const MODEL_ORDER: usize = 16;
pub const N_CEPSTRA: usize = MODEL_ORDER + 1;

/// RASTA filter pole; numerator is [2 1 0 -1 -2]/10 over the frame history.
const RASTA_POLE: f64 = 0.94;

fn hz_to_bark(f: f64) -> f64 {
    6.0 * (f / 600.0).asinh()
}

/// Trapezoid-free simplification: triangular critical-band filters spaced
/// uniformly on the Bark axis over 0..nyquist.
pub fn bark_filterbank(n_bands: usize, n_bins: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let nyquist = sample_rate / 2.0;
    let bark_max = hz_to_bark(nyquist);
    let step = bark_max / (n_bands + 1) as f64;
    let bin_bark = |b: usize| hz_to_bark(nyquist * b as f64 / (n_bins - 1) as f64);
    let mut bank = Vec::with_capacity(n_bands);
    for m in 0..n_bands {
        let center = step * (m + 1) as f64;
        let mut filt = vec![0.0; n_bins];
        for (b, w) in filt.iter_mut().enumerate() {
            let d = (bin_bark(b) - center).abs();
            if d < step {
                *w = 1.0 - d / step;
            }
        }
        bank.push(filt);
    }
    bank
}

/// Hermansky equal-loudness curve evaluated at band-center frequencies.
pub fn equal_loudness(n_bands: usize, sample_rate: f64) -> Vec<f64> {
    let nyquist = sample_rate / 2.0;
    let bark_max = hz_to_bark(nyquist);
    let step = bark_max / (n_bands + 1) as f64;
    (0..n_bands)
        .map(|m| {
            let bark = step * (m + 1) as f64;
            let f = 600.0 * (bark / 6.0).sinh();
            let f2 = f * f;
            ((f2 + 56.8e6) * f2 * f2) / ((f2 + 6.3e6).powi(2) * (f2 + 0.38e9))
        })
        .collect()
}

/// Per-band IIR state of the RASTA filter, advanced one frame at a time.
#[derive(Debug, Clone)]
pub struct RastaFilter {
    history: Vec<[f64; 4]>,
    output: Vec<f64>,
    frames_seen: usize,
}

impl RastaFilter {
    pub fn new(n_bands: usize) -> Self {
        RastaFilter {
            history: vec![[0.0; 4]; n_bands],
            output: vec![0.0; n_bands],
            frames_seen: 0,
        }
    }

    /// Feed one frame of log band energies, get the filtered trajectory
    /// value per band. The first four frames are passed through unfiltered
    /// while the FIR history fills.
    pub fn step(&mut self, log_bands: &[f64]) -> Vec<f64> {
        assert_eq!(log_bands.len(), self.history.len());
        let warmup = self.frames_seen < 4;
        let mut out = Vec::with_capacity(log_bands.len());
        for (band, (&x, hist)) in log_bands.iter().zip(&mut self.history).enumerate() {
            let fir = (2.0 * x + hist[0] - hist[2] - 2.0 * hist[3]) / 10.0;
            let y = if warmup {
                x
            } else {
                RASTA_POLE * self.output[band] + fir
            };
            hist.rotate_right(1);
            hist[0] = x;
            self.output[band] = y;
            out.push(y);
        }
        self.frames_seen += 1;
        out
    }
}

/// One frame of the RASTA-PLP pipeline after the temporal filter: inverse
/// log, equal loudness, cube-root compression, all-pole model, cepstra.
pub fn plp_cepstra(filtered_log_bands: &[f64], loudness: &[f64]) -> Vec<f64> {
    let compressed: Vec<f64> = filtered_log_bands
        .iter()
        .zip(loudness)
        .map(|(&lb, &el)| (lb.exp() * el).max(1e-12).powf(1.0 / 3.0))
        .collect();
    // Duplicate edge bands and take a cosine transform back to an
    // autocorrelation sequence.
    let m = compressed.len() + 2;
    let mut spectrum = Vec::with_capacity(m);
    spectrum.push(compressed[0]);
    spectrum.extend_from_slice(&compressed);
    spectrum.push(*compressed.last().unwrap());
    let n = m - 1;
    let mut autocorr = vec![0.0; MODEL_ORDER + 1];
    for (lag, r) in autocorr.iter_mut().enumerate() {
        let mut acc = spectrum[0] + spectrum[n] * (std::f64::consts::PI * lag as f64).cos();
        for (i, &s) in spectrum.iter().enumerate().take(n).skip(1) {
            acc += 2.0 * s * (std::f64::consts::PI * lag as f64 * i as f64 / n as f64).cos();
        }
        *r = acc / (2.0 * n as f64);
    }
    let (a, err) = levinson_durbin(&autocorr, MODEL_ORDER);
    lpc_to_cepstrum(&a, err, N_CEPSTRA)
}
