//! Amplitude modulation spectrogram: 9 mel-spaced subband envelopes tracked
//! across frames, with the modulation spectrum of each envelope taken over a
//! trailing 32-frame window. 15 modulation bins per subband, 135 values.

use super::dsp::magnitude_spectrum;
use super::mfcc::{apply_filterbank, mel_filterbank};

pub const N_SUBBANDS: usize = 9;
pub const N_MOD_BINS: usize = 15;
pub const ENVELOPE_WINDOW: usize = 32;
pub const DIM: usize = N_SUBBANDS * N_MOD_BINS;

/// Rolling per-subband envelope history for one utterance.
#[derive(Debug, Clone)]
pub struct AmsTracker {
    bank: Vec<Vec<f64>>,
    // Ring buffer per subband, zero-initialized (zero padding at start).
    history: Vec<Vec<f64>>,
    pos: usize,
}

impl AmsTracker {
    pub fn new(n_bins: usize, sample_rate: f64) -> Self {
        AmsTracker {
            bank: mel_filterbank(N_SUBBANDS, n_bins, sample_rate),
            history: vec![vec![0.0; ENVELOPE_WINDOW]; N_SUBBANDS],
            pos: 0,
        }
    }

    /// Feed one frame's power spectrum, get the 135-dim AMS vector.
    pub fn step(&mut self, power_spectrum: &[f64]) -> Vec<f64> {
        let envelopes = apply_filterbank(power_spectrum, &self.bank);
        for (band, env) in envelopes.iter().enumerate() {
            self.history[band][self.pos] = env.sqrt();
        }
        self.pos = (self.pos + 1) % ENVELOPE_WINDOW;

        let mut out = Vec::with_capacity(DIM);
        for band in 0..N_SUBBANDS {
            // Unroll the ring buffer into chronological order.
            let h = &self.history[band];
            let traj: Vec<f64> = (0..ENVELOPE_WINDOW)
                .map(|i| h[(self.pos + i) % ENVELOPE_WINDOW])
                .collect();
            let mags = magnitude_spectrum(&traj, ENVELOPE_WINDOW);
            // Skip DC; log-compress the modulation magnitudes.
            for m in mags.iter().skip(1).take(N_MOD_BINS) {
                out.push((1.0 + m).ln());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ams_dimension_is_135() {
        let mut tracker = AmsTracker::new(129, 8000.0);
        let spec = vec![1.0; 129];
        let v = tracker.step(&spec);
        assert_eq!(v.len(), 135);
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn modulated_envelope_raises_matching_bin() {
        // Envelope with period 4 frames: modulation energy lands in fft bin 8
        // of the 32-frame window, which is output index 7.
        let mut tracker = AmsTracker::new(129, 8000.0);
        let loud = vec![4.0; 129];
        let quiet = vec![0.01; 129];
        let mut last = Vec::new();
        for i in 0..64 {
            last = tracker.step(if (i / 2) % 2 == 0 { &loud } else { &quiet });
        }
        let band0 = &last[..N_MOD_BINS];
        assert!(band0[7] > band0[2], "{band0:?}");
    }
}
