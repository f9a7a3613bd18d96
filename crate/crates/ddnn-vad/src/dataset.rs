//! Synthetic paired noisy/clean corpora: speech-like signal generation with
//! exact sample-level activity boundaries, noise generation, SNR-controlled
//! mixing, utterance concatenation, deterministic splits, and the on-disk
//! corpus layout (WAV + label + manifest files).

use std::fmt;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{AudioSignal, FrameSpec};
use crate::{Error, Result};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// A clean utterance with its per-sample speech activity mask.
#[derive(Debug, Clone)]
pub struct CleanUtterance {
    pub signal: AudioSignal,
    pub speech_mask: Vec<bool>,
}

impl CleanUtterance {
    pub fn speech_sample_fraction(&self) -> f64 {
        let active = self.speech_mask.iter().filter(|&&m| m).count();
        active as f64 / self.speech_mask.len() as f64
    }
}

/// Frame labels from the sample mask: H1 iff more than half of the frame's
/// samples are speech-active.
pub fn frame_labels(mask: &[bool], spec: &FrameSpec) -> Result<Vec<u8>> {
    let n_frames = spec.frame_count(mask.len())?;
    let mut labels = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let start = k * spec.frame_shift;
        let active = mask[start..start + spec.frame_length]
            .iter()
            .filter(|&&m| m)
            .count();
        labels.push(if active * 2 > spec.frame_length { 1 } else { 0 });
    }
    Ok(labels)
}

/// Alternating speech-like segments (harmonic stacks with a drifting pitch
/// contour and slow amplitude modulation) and silences.
pub fn synthesize_clean(
    duration_s: f64,
    speech_fraction: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<CleanUtterance> {
    if duration_s <= 0.0 {
        return Err(Error::Config("duration must be positive".into()));
    }
    let sr = sample_rate as f64;
    let n = (duration_s * sr).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; n];
    let mut mask = vec![false; n];

    let mut pos = 0usize;
    let mut speech_turn = rng.gen_bool(0.5);
    while pos < n {
        // Segment lengths tuned so the expected speech fraction tracks the target.
        let mean_speech = 0.9;
        let mean_silence = mean_speech * (1.0 - speech_fraction) / speech_fraction.max(1e-3);
        let mean = if speech_turn { mean_speech } else { mean_silence };
        let seg_s = rng.gen_range(0.5 * mean..1.5 * mean).max(0.08);
        let seg_len = ((seg_s * sr) as usize).min(n - pos).max(1);
        if speech_turn {
            render_speech_segment(&mut samples[pos..pos + seg_len], sr, &mut rng);
            for m in &mut mask[pos..pos + seg_len] {
                *m = true;
            }
        }
        pos += seg_len;
        speech_turn = !speech_turn;
    }
    Ok(CleanUtterance {
        signal: AudioSignal::new(samples, sample_rate)?,
        speech_mask: mask,
    })
}

fn render_speech_segment<R: Rng>(out: &mut [f64], sr: f64, rng: &mut R) {
    let f0_base = rng.gen_range(100.0..250.0);
    let f0_drift = rng.gen_range(-30.0..30.0);
    let am_rate = rng.gen_range(2.0..6.0);
    let am_phase = rng.gen_range(0.0..TAU);
    let n = out.len() as f64;
    let last = out.len() - 1;
    let n_harmonics = 12;
    let phases: Vec<f64> = (0..n_harmonics).map(|_| rng.gen_range(0.0..TAU)).collect();
    let mut phase_acc = vec![0.0f64; n_harmonics];
    for (i, s) in out.iter_mut().enumerate() {
        let t = i as f64 / sr;
        let f0 = f0_base + f0_drift * (i as f64 / n);
        let am = 0.6 + 0.4 * (TAU * am_rate * t + am_phase).sin();
        let mut v = 0.0;
        for h in 0..n_harmonics {
            let freq = f0 * (h + 1) as f64;
            if freq > 0.425 * sr {
                break;
            }
            phase_acc[h] += TAU * freq / sr;
            v += (phase_acc[h] + phases[h]).sin() / (h + 1) as f64;
        }
        // Short fade at the segment edges avoids clicks.
        let edge = (i.min(last - i) as f64 / (0.005 * sr)).min(1.0);
        *s = 0.35 * am * edge * v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    White,
    Pink,
    Babble,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::White => write!(f, "white"),
            NoiseKind::Pink => write!(f, "pink"),
            NoiseKind::Babble => write!(f, "babble"),
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(NoiseKind::White),
            "pink" => Ok(NoiseKind::Pink),
            "babble" => Ok(NoiseKind::Babble),
            other => Err(Error::Config(format!("unknown noise kind {other:?}"))),
        }
    }
}

pub fn generate_noise(kind: NoiseKind, n: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f_6973);
    match kind {
        NoiseKind::White => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        NoiseKind::Pink => {
            // Kellet's three-pole approximation of a -3 dB/octave slope.
            let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
            (0..n)
                .map(|_| {
                    let w: f64 = rng.gen_range(-1.0..1.0);
                    b0 = 0.99765 * b0 + w * 0.0990460;
                    b1 = 0.96300 * b1 + w * 0.2965164;
                    b2 = 0.57000 * b2 + w * 1.0526913;
                    (b0 + b1 + b2 + w * 0.1848) * 0.2
                })
                .collect()
        }
        NoiseKind::Babble => {
            // Sum of 8 independent speech-like generators.
            let mut acc = vec![0.0; n];
            for t in 0..8 {
                let talker = synthesize_clean(
                    n as f64 / sample_rate as f64 + 0.1,
                    0.85,
                    sample_rate,
                    seed.wrapping_mul(31).wrapping_add(t),
                )
                .expect("babble talker synthesis");
                for (a, s) in acc.iter_mut().zip(&talker.signal.samples) {
                    *a += s / 8.0;
                }
            }
            acc
        }
    }
}

/// Result of SNR mixing: the noisy signal and the gain-matched clean
/// reference (the same peak-normalization gain is applied to both).
#[derive(Debug, Clone)]
pub struct MixedUtterance {
    pub noisy: AudioSignal,
    pub clean: AudioSignal,
    pub speech_mask: Vec<bool>,
}

fn mean_square(samples: &[f64]) -> f64 {
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len().max(1) as f64
}

fn speech_power(samples: &[f64], mask: &[bool]) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for (s, &m) in samples.iter().zip(mask) {
        if m {
            acc += s * s;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        acc / count as f64
    }
}

/// Scale the noise so that `10·log10(P_speech / P_noise) = snr_db`, with the
/// clean power measured over speech-active samples and the noise power over
/// the whole span, then peak-normalize noisy and clean with the same gain.
pub fn mix_at_snr(clean: &CleanUtterance, noise: &[f64], snr_db: f64) -> Result<MixedUtterance> {
    let n = clean.signal.len();
    if noise.len() < n {
        return Err(Error::Data(format!(
            "noise of {} samples shorter than clean ({n})",
            noise.len()
        )));
    }
    let p_speech = speech_power(&clean.signal.samples, &clean.speech_mask);
    let p_noise = mean_square(&noise[..n]);
    if p_speech <= 0.0 {
        return Err(Error::Data("clean signal has zero speech power".into()));
    }
    if p_noise <= 0.0 {
        return Err(Error::Data("noise has zero power".into()));
    }
    let gain = (p_speech / (p_noise * 10f64.powf(snr_db / 10.0))).sqrt();
    let mut noisy: Vec<f64> = clean
        .signal
        .samples
        .iter()
        .zip(&noise[..n])
        .map(|(c, w)| c + gain * w)
        .collect();
    let peak = noisy.iter().fold(0.0f64, |p, s| p.max(s.abs()));
    let mut clean_scaled = clean.signal.samples.clone();
    if peak > 1.0 {
        let norm = 1.0 / peak;
        for s in &mut noisy {
            *s *= norm;
        }
        for s in &mut clean_scaled {
            *s *= norm;
        }
    }
    Ok(MixedUtterance {
        noisy: AudioSignal::new(noisy, clean.signal.sample_rate)?,
        clean: AudioSignal::new(clean_scaled, clean.signal.sample_rate)?,
        speech_mask: clean.speech_mask.clone(),
    })
}

/// Speech-referenced SNR of a noisy/clean pair in dB.
pub fn measure_snr(noisy: &[f64], clean: &[f64], mask: &[bool]) -> f64 {
    let noise: Vec<f64> = noisy.iter().zip(clean).map(|(n, c)| n - c).collect();
    let p_speech = speech_power(clean, mask);
    let p_noise = mean_square(&noise);
    10.0 * (p_speech / p_noise).log10()
}

/// Sample-concatenation of utterances with their activity masks.
pub fn concatenate_utterances(utterances: &[CleanUtterance]) -> Result<CleanUtterance> {
    let first = utterances
        .first()
        .ok_or_else(|| Error::Data("no utterances to concatenate".into()))?;
    let rate = first.signal.sample_rate;
    let mut samples = Vec::new();
    let mut mask = Vec::new();
    for u in utterances {
        if u.signal.sample_rate != rate {
            return Err(Error::Data(format!(
                "mixed sample rates {} and {rate}",
                u.signal.sample_rate
            )));
        }
        samples.extend_from_slice(&u.signal.samples);
        mask.extend_from_slice(&u.speech_mask);
    }
    Ok(CleanUtterance {
        signal: AudioSignal::new(samples, rate)?,
        speech_mask: mask,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Dev => write!(f, "dev"),
            Split::Test => write!(f, "test"),
        }
    }
}

pub const ALL_SPLITS: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

/// Deterministic train/dev/test assignment of `n` utterances. The same seed
/// always yields the same assignment, so corpora at different SNRs share
/// splits when built from one seed.
pub fn split_assignments(n: usize, ratios: (f64, f64, f64), seed: u64) -> Result<Vec<Split>> {
    let n_train = (n as f64 * ratios.0).round() as usize;
    let n_dev = (n as f64 * ratios.1).round() as usize;
    if n_train == 0 || n_dev == 0 || n_train + n_dev >= n {
        return Err(Error::Config(format!(
            "cannot split {n} utterances with ratios {ratios:?}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7370_6c69);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut splits = vec![Split::Test; n];
    for (rank, &idx) in order.iter().enumerate() {
        splits[idx] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_dev {
            Split::Dev
        } else {
            Split::Test
        };
    }
    Ok(splits)
}

// ---------------------------------------------------------------------------
// On-disk corpus.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub sample_rate: u32,
    pub n_utterances: usize,
    pub utterance_s: f64,
    pub speech_fraction: f64,
    pub noise_kinds: Vec<NoiseKind>,
    pub snrs_db: Vec<f64>,
    pub split_ratios: (f64, f64, f64),
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            sample_rate: 8000,
            n_utterances: 20,
            utterance_s: 8.0,
            speech_fraction: 0.6,
            noise_kinds: vec![NoiseKind::White, NoiseKind::Pink, NoiseKind::Babble],
            snrs_db: vec![-5.0, 0.0, 5.0, 10.0],
            split_ratios: (0.3, 0.3, 0.4),
            seed: 1,
        }
    }
}

/// One long recording (concatenated split) of a (noise, SNR) corpus cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordingEntry {
    pub noise: NoiseKind,
    pub snr_db: f64,
    pub split: Split,
    pub noisy_wav: PathBuf,
    pub clean_wav: PathBuf,
    pub labels: PathBuf,
    pub n_frames: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtteranceInfo {
    pub id: usize,
    pub split: Split,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub sample_rate: u32,
    pub seed: u64,
    pub frame_length: usize,
    pub frame_shift: usize,
    pub utterances: Vec<UtteranceInfo>,
    pub recordings: Vec<RecordingEntry>,
}

impl CorpusManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("manifest serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Data(format!("manifest parse: {e}")))
    }

    pub fn recordings_for(&self, noise: NoiseKind, snr_db: f64, split: Split) -> Vec<&RecordingEntry> {
        self.recordings
            .iter()
            .filter(|r| r.noise == noise && r.snr_db == snr_db && r.split == split)
            .collect()
    }
}

pub fn write_wav(signal: &AudioSignal, path: &Path) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in &signal.samples {
        let v = (s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Data(format!(
            "{}: expected mono, got {} channels",
            path.display(),
            spec.channels
        )));
    }
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Data(format!(
            "{}: expected 16-bit PCM",
            path.display()
        )));
    }
    let samples: Vec<f64> = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / i16::MAX as f64))
        .collect::<std::result::Result<_, _>>()?;
    AudioSignal::new(samples, spec.sample_rate)
}

/// Synthesize a full corpus on disk: clean utterances, per-(noise, SNR)
/// mixing, split concatenation, WAV + label files, and a manifest. Noise
/// seeds are shared across SNRs so only the noise gain differs between SNR
/// variants of the same cell.
pub fn build_corpus(config: &CorpusConfig, out_dir: &Path) -> Result<CorpusManifest> {
    std::fs::create_dir_all(out_dir)?;
    let spec = FrameSpec::default();
    let splits = split_assignments(config.n_utterances, config.split_ratios, config.seed)?;

    let utterances: Vec<CleanUtterance> = crate::par::try_map_indexed(
        &(0..config.n_utterances).collect::<Vec<_>>(),
        |&i| {
            synthesize_clean(
                config.utterance_s,
                config.speech_fraction,
                config.sample_rate,
                config.seed.wrapping_mul(1000).wrapping_add(i as u64),
            )
        },
    )?;

    let mut manifest = CorpusManifest {
        sample_rate: config.sample_rate,
        seed: config.seed,
        frame_length: spec.frame_length,
        frame_shift: spec.frame_shift,
        utterances: (0..config.n_utterances)
            .map(|id| UtteranceInfo {
                id,
                split: splits[id],
            })
            .collect(),
        recordings: Vec::new(),
    };

    for split in ALL_SPLITS {
        let members: Vec<&CleanUtterance> = utterances
            .iter()
            .zip(&splits)
            .filter(|(_, &s)| s == split)
            .map(|(u, _)| u)
            .collect();
        let long = concatenate_utterances(&members.iter().map(|u| (*u).clone()).collect::<Vec<_>>())?;
        let labels = frame_labels(&long.speech_mask, &spec)?;
        for &noise_kind in &config.noise_kinds {
            let noise_seed = config
                .seed
                .wrapping_mul(7919)
                .wrapping_add(noise_kind as u64 * 101 + split as u64);
            let noise = generate_noise(noise_kind, long.signal.len(), config.sample_rate, noise_seed);
            for &snr_db in &config.snrs_db {
                let mixed = mix_at_snr(&long, &noise, snr_db)?;
                let stem = format!("{noise_kind}_{snr_db:+05.1}db_{split}");
                let noisy_wav = out_dir.join(format!("{stem}_noisy.wav"));
                let clean_wav = out_dir.join(format!("{stem}_clean.wav"));
                let labels_path = out_dir.join(format!("{stem}.labels"));
                write_wav(&mixed.noisy, &noisy_wav)?;
                write_wav(&mixed.clean, &clean_wav)?;
                crate::features::save_labels(&labels, &labels_path)?;
                manifest.recordings.push(RecordingEntry {
                    noise: noise_kind,
                    snr_db,
                    split,
                    noisy_wav,
                    clean_wav,
                    labels: labels_path,
                    n_frames: labels.len(),
                });
            }
        }
    }
    manifest.save(&out_dir.join("manifest.toml"))?;
    Ok(manifest)
}
