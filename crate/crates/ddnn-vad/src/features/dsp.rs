//! Shared signal-processing primitives: windowing, FFT magnitude spectra,
//! autocorrelation, Levinson-Durbin.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn hamming_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Magnitude spectrum bins 0..=fft_size/2 of the zero-padded input.
pub fn magnitude_spectrum(samples: &[f64], fft_size: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(fft_size)
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    fft.process(&mut buf);
    buf[..=fft_size / 2].iter().map(|c| c.norm()).collect()
}

/// Biased autocorrelation r[0..=max_lag].
pub fn autocorrelation(samples: &[f64], max_lag: usize) -> Vec<f64> {
    let n = samples.len();
    let mut r = vec![0.0; max_lag + 1];
    for (lag, rl) in r.iter_mut().enumerate() {
        if lag >= n {
            break;
        }
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += samples[i] * samples[i + lag];
        }
        *rl = acc;
    }
    r
}

/// Levinson-Durbin recursion. Returns prediction coefficients a[1..=order]
/// (convention `A(z) = 1 + Σ a_k z^-k`) and the final prediction error.
/// Degenerate input (r[0] ~ 0) yields all-zero coefficients.
pub fn levinson_durbin(r: &[f64], order: usize) -> (Vec<f64>, f64) {
    assert!(r.len() > order, "need {} autocorrelation lags", order + 1);
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    if err.abs() < 1e-12 {
        return (vec![0.0; order], 0.0);
    }
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc += a[j] * r[i - j];
        }
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    (a[1..].to_vec(), err.max(1e-12))
}

/// Cepstral coefficients c[0..=n_cep-1] of the all-pole model `gain / A(z)`.
pub fn lpc_to_cepstrum(a: &[f64], err: f64, n_cep: usize) -> Vec<f64> {
    let order = a.len();
    let mut c = vec![0.0; n_cep];
    if n_cep == 0 {
        return c;
    }
    c[0] = err.max(1e-12).ln();
    for n in 1..n_cep {
        let mut acc = if n <= order { -a[n - 1] } else { 0.0 };
        for k in 1..n {
            if n - k <= order {
                acc -= (k as f64 / n as f64) * c[k] * a[n - k - 1];
            }
        }
        c[n] = acc;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hamming_endpoints() {
        let w = hamming_window(200);
        assert_abs_diff_eq!(w[0], 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(w[199], 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(w[100], w[99], epsilon = 0.01);
    }

    #[test]
    fn spectrum_of_pure_tone_peaks_at_bin() {
        // 1 kHz tone at 8 kHz, 256-point FFT: bin 32.
        let samples: Vec<f64> = (0..256)
            .map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / 8000.0).sin())
            .collect();
        let mag = magnitude_spectrum(&samples, 256);
        let peak = mag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 32);
    }

    #[test]
    fn autocorrelation_matches_scalar_oracle() {
        let x = [1.0, -0.5, 0.25, 0.8];
        let r = autocorrelation(&x, 2);
        assert_abs_diff_eq!(r[0], 1.0 + 0.25 + 0.0625 + 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1], -0.5 - 0.125 + 0.2, epsilon = 1e-12);
    }

    #[test]
    fn levinson_recovers_ar1_process() {
        // x[n] = 0.9 x[n-1] + e[n] has r[k] proportional to 0.9^k.
        let r: Vec<f64> = (0..5).map(|k| 0.9f64.powi(k)).collect();
        let (a, _) = levinson_durbin(&r, 1);
        assert_abs_diff_eq!(a[0], -0.9, epsilon = 1e-9);
    }

    #[test]
    fn levinson_silence_is_zero() {
        let r = vec![0.0; 13];
        let (a, err) = levinson_durbin(&r, 12);
        assert!(a.iter().all(|&v| v == 0.0));
        assert_eq!(err, 0.0);
    }
}
