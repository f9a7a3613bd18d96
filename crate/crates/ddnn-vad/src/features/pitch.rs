//! Autocorrelation pitch estimate. Peak search over the 60-400 Hz lag range
//! with parabolic interpolation; frames whose peak falls below 0.3 of the
//! frame energy are treated as unvoiced (pitch 0).

use super::dsp::autocorrelation;

pub const F_MIN: f64 = 60.0;
pub const F_MAX: f64 = 400.0;
pub const VOICING_THRESHOLD: f64 = 0.3;

pub fn estimate_pitch(frame: &[f64], sample_rate: f64) -> f64 {
    let lag_min = (sample_rate / F_MAX).floor() as usize;
    let lag_max = ((sample_rate / F_MIN).ceil() as usize).min(frame.len() - 1);
    if lag_min >= lag_max {
        return 0.0;
    }
    let r = autocorrelation(frame, lag_max + 1);
    if r[0] <= 1e-12 {
        return 0.0;
    }
    let mut best_lag = lag_min;
    let mut best = f64::NEG_INFINITY;
    for lag in lag_min..=lag_max {
        if r[lag] > best {
            best = r[lag];
            best_lag = lag;
        }
    }
    if best < VOICING_THRESHOLD * r[0] {
        return 0.0;
    }
    // Parabolic refinement around the integer-lag peak.
    let mut lag = best_lag as f64;
    if best_lag > lag_min && best_lag < lag_max {
        let (a, b, c) = (r[best_lag - 1], r[best_lag], r[best_lag + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-12 {
            lag += 0.5 * (a - c) / denom;
        }
    }
    sample_rate / lag
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_is_unvoiced() {
        let frame = vec![0.0; 200];
        assert_eq!(estimate_pitch(&frame, 8000.0), 0.0);
    }

    #[test]
    fn pure_tone_pitch_within_5hz() {
        let frame: Vec<f64> = (0..200)
            .map(|i| (2.0 * std::f64::consts::PI * 200.0 * i as f64 / 8000.0).sin())
            .collect();
        let p = estimate_pitch(&frame, 8000.0);
        assert!((p - 200.0).abs() < 5.0, "pitch {p}");
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut unvoiced = 0;
        for _ in 0..20 {
            let frame: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if estimate_pitch(&frame, 8000.0) == 0.0 {
                unvoiced += 1;
            }
        }
        assert!(unvoiced >= 15, "only {unvoiced}/20 unvoiced");
    }
}
