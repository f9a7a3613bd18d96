//! Mel filterbank and MFCC extraction. 26 triangular mel filters over
//! 0-4 kHz, DCT-II, first 20 coefficients including C0.

pub const N_FILTERS: usize = 26;
pub const N_COEFFS: usize = 20;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filterbank over magnitude-spectrum bins 0..=n_bins-1 spanning
/// 0..=nyquist Hz. Each filter is a vector of per-bin weights.
pub fn mel_filterbank(n_filters: usize, n_bins: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let nyquist = sample_rate / 2.0;
    let mel_max = hz_to_mel(nyquist);
    let centers: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_filters + 1) as f64))
        .collect();
    let bin_hz = |b: usize| nyquist * b as f64 / (n_bins - 1) as f64;
    let mut bank = Vec::with_capacity(n_filters);
    for m in 0..n_filters {
        let (lo, mid, hi) = (centers[m], centers[m + 1], centers[m + 2]);
        let mut filt = vec![0.0; n_bins];
        for (b, w) in filt.iter_mut().enumerate() {
            let f = bin_hz(b);
            if f > lo && f < hi {
                *w = if f <= mid {
                    (f - lo) / (mid - lo)
                } else {
                    (hi - f) / (hi - mid)
                };
            }
        }
        bank.push(filt);
    }
    bank
}

pub fn apply_filterbank(power_spectrum: &[f64], bank: &[Vec<f64>]) -> Vec<f64> {
    bank.iter()
        .map(|filt| {
            filt.iter()
                .zip(power_spectrum)
                .map(|(w, p)| w * p)
                .sum::<f64>()
        })
        .collect()
}

/// DCT-II of the log filterbank energies, first `n_coeffs` coefficients.
pub fn mfcc_from_power_spectrum(power_spectrum: &[f64], bank: &[Vec<f64>]) -> Vec<f64> {
    let energies = apply_filterbank(power_spectrum, bank);
    let logs: Vec<f64> = energies.iter().map(|&e| (e + 1e-10).ln()).collect();
    let m = logs.len() as f64;
    (0..N_COEFFS)
        .map(|k| {
            logs.iter()
                .enumerate()
                .map(|(i, &v)| v * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / m).cos())
                .sum()
        })
        .collect()
}
