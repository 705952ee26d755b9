//! Synthetic emission-trace oracle.
//!
//! Stands in for the probe/amplifier/oscilloscope chain: every trace is the
//! sum of a periodic clock component, a symbol-transition leakage term,
//! narrowband interferer tones, and white Gaussian noise. Leakage attaches to
//! the *transition* between adjacent symbols, so a classifier genuinely has
//! to use context rather than a per-symbol signature.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsp::Spectrum;
use crate::error::{Error, Result};
use crate::gauss::NormalSampler;
use crate::key::{RawKey, Symbol};
use crate::trace::{rms, Trace, TraceMeta};

/// One harmonic of the symbol clock, at `k` times the clock frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub k: u32,
    pub amplitude: f32,
    pub phase: f32,
}

/// A narrowband interferer tone. The frequency is expressed in cycles per
/// symbol (i.e. in units of the clock frequency) so a model stays valid for
/// any acquisition geometry with the same samples-per-symbol count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone {
    pub cycles_per_symbol: f64,
    pub amplitude: f32,
    pub phase: f32,
}

/// Parameters of the synthetic near-field emission model.
#[derive(Debug, Clone)]
pub struct LeakageModel {
    /// 16 per-transition waveforms indexed by `prev * 4 + curr`, each one
    /// symbol long and unit-RMS before scaling by `leakage_strength`.
    templates: Vec<Vec<f32>>,
    pub clock_harmonics: Vec<Harmonic>,
    pub leakage_strength: f32,
    pub noise_sigma: f32,
    pub interferers: Vec<Tone>,
    pub template_seed: u64,
}

/// Maximum allowed zero-lag normalized cross-correlation between two distinct
/// transition templates; candidates violating it are redrawn.
pub const TEMPLATE_SIMILARITY_LIMIT: f64 = 0.9;

impl LeakageModel {
    /// Draws a full model with random smoothed transition templates for the
    /// given symbol geometry. Deterministic in `template_seed`.
    ///
    /// Templates are low-pass-filtered white noise, RMS-normalized, redrawn
    /// until all pairs correlate below [`TEMPLATE_SIMILARITY_LIMIT`]. Clock
    /// harmonics are fixed at k = 1, 2, 3 with amplitudes 1.0, 0.3, 0.1, and
    /// two interferer tones sit at frequencies incommensurate with the clock.
    pub fn random(
        template_seed: u64,
        samples_per_symbol: usize,
        leakage_strength: f32,
        noise_sigma: f32,
    ) -> Self {
        assert!(samples_per_symbol >= 4, "templates need at least 4 samples");
        let mut rng = ChaCha8Rng::seed_from_u64(template_seed);
        let mut templates: Vec<Vec<f32>> = Vec::with_capacity(16);
        let mut attempts = 0usize;
        while templates.len() < 16 {
            let candidate = smoothed_unit_rms_template(&mut rng, samples_per_symbol);
            let distinct = templates
                .iter()
                .all(|t| zero_lag_correlation(t, &candidate).abs() < TEMPLATE_SIMILARITY_LIMIT);
            if distinct {
                templates.push(candidate);
            }
            attempts += 1;
            assert!(attempts < 100_000, "template generation failed to converge");
        }
        Self {
            templates,
            clock_harmonics: vec![
                Harmonic { k: 1, amplitude: 1.0, phase: 0.0 },
                Harmonic { k: 2, amplitude: 0.3, phase: 0.0 },
                Harmonic { k: 3, amplitude: 0.1, phase: 0.0 },
            ],
            leakage_strength,
            noise_sigma,
            interferers: vec![
                Tone { cycles_per_symbol: std::f64::consts::SQRT_2, amplitude: 0.2, phase: 0.9 },
                Tone { cycles_per_symbol: std::f64::consts::PI, amplitude: 0.12, phase: 2.3 },
            ],
            template_seed,
        }
    }

    pub fn samples_per_symbol(&self) -> usize {
        self.templates[0].len()
    }

    /// Waveform emitted while `curr` is being sent after `prev`.
    pub fn template(&self, prev: Symbol, curr: Symbol) -> &[f32] {
        &self.templates[prev.code() as usize * 4 + curr.code() as usize]
    }

    pub fn templates(&self) -> &[Vec<f32>] {
        &self.templates
    }

    /// Largest zero-lag normalized cross-correlation magnitude over all
    /// distinct template pairs.
    pub fn max_template_correlation(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..self.templates.len() {
            for j in (i + 1)..self.templates.len() {
                max = max.max(zero_lag_correlation(&self.templates[i], &self.templates[j]).abs());
            }
        }
        max
    }

    /// Per-snippet signal-to-noise ratio in dB. The templates have unit RMS,
    /// so the leakage power is `leakage_strength^2` against `noise_sigma^2`.
    pub fn snr_db(&self) -> f64 {
        20.0 * (self.leakage_strength as f64 / self.noise_sigma as f64).log10()
    }

    /// Leakage strength that yields the requested per-snippet SNR at the
    /// given noise level.
    pub fn strength_for_snr_db(snr_db: f64, noise_sigma: f32) -> f32 {
        (noise_sigma as f64 * 10f64.powf(snr_db / 20.0)) as f32
    }
}

/// Default desk-scale leakage model: 100 samples per symbol.
pub fn make_default_leakage_model(
    template_seed: u64,
    leakage_strength: f32,
    noise_sigma: f32,
) -> LeakageModel {
    LeakageModel::random(template_seed, 100, leakage_strength, noise_sigma)
}

fn smoothed_unit_rms_template(rng: &mut ChaCha8Rng, len: usize) -> Vec<f32> {
    let mut raw = Vec::with_capacity(len + 1);
    while raw.len() < len {
        let (a, b) = crate::gauss::standard_normal_pair(rng);
        raw.push(a);
        raw.push(b);
    }
    raw.truncate(len);
    // Circular moving average keeps the waveform smooth and stationary.
    let window = (len / 12).max(3) | 1;
    let half = window / 2;
    let mut smoothed = vec![0.0f64; len];
    for (i, value) in smoothed.iter_mut().enumerate() {
        let mut sum = 0.0;
        for j in 0..window {
            sum += raw[(i + len + j - half) % len];
        }
        *value = sum / window as f64;
    }
    let rms = (smoothed.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt();
    smoothed.iter().map(|&x| (x / rms) as f32).collect()
}

fn zero_lag_correlation(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let na: f64 = a.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Synthesizes one emission trace for the given key.
///
/// The output is the sum of the clock harmonics (periodic with the symbol
/// length), the scaled transition template for each `(prev, curr)` symbol
/// pair, the interferer tones, and white Gaussian noise drawn from
/// `noise_seed`. The previous symbol of index 0 is the last key symbol, so
/// the trace covers the key exactly with no special casing. The result is
/// aligned: `trigger_index = 0`.
pub fn synth_trace(
    key: &RawKey,
    model: &LeakageModel,
    meta: &TraceMeta,
    noise_seed: u64,
) -> Result<Trace> {
    let spp = meta.samples_per_symbol();
    if model.samples_per_symbol() != spp {
        return Err(Error::invalid(format!(
            "model built for {} samples/symbol, trace meta has {spp}",
            model.samples_per_symbol()
        )));
    }
    for tone in &model.interferers {
        if tone.cycles_per_symbol <= 0.0 || tone.cycles_per_symbol >= spp as f64 / 2.0 {
            return Err(Error::invalid("interferer tone outside (0, Nyquist)"));
        }
    }

    let num_symbols = key.len();
    let total = num_symbols * spp;
    let two_pi = 2.0 * std::f64::consts::PI;

    // One period of the clock component.
    let clock: Vec<f64> = (0..spp)
        .map(|r| {
            model
                .clock_harmonics
                .iter()
                .map(|h| {
                    h.amplitude as f64
                        * (two_pi * h.k as f64 * r as f64 / spp as f64 + h.phase as f64).sin()
                })
                .sum()
        })
        .collect();

    let mut noise = NormalSampler::new(noise_seed);
    let sigma = model.noise_sigma as f64;
    let strength = model.leakage_strength as f64;
    let symbols = key.symbols();

    let mut samples = Vec::with_capacity(total);
    for (i, &curr) in symbols.iter().enumerate() {
        let prev = symbols[(i + num_symbols - 1) % num_symbols];
        let template = model.template(prev, curr);
        let base = (i * spp) as f64;
        for (r, &tpl) in template.iter().enumerate() {
            let n = base + r as f64;
            let mut v = clock[r] + strength * tpl as f64;
            for tone in &model.interferers {
                v += tone.amplitude as f64
                    * (two_pi * tone.cycles_per_symbol * n / spp as f64 + tone.phase as f64).sin();
            }
            if sigma > 0.0 {
                v += sigma * noise.standard_normal();
            }
            samples.push(v as f32);
        }
    }

    let mut meta = meta.clone();
    meta.trigger_index = Some(0);
    meta.leakage_strength = model.leakage_strength;
    meta.noise_sigma = model.noise_sigma;
    Ok(Trace {
        meta,
        samples,
        key: Some(key.clone()),
    })
}

/// Device operating mode for far-field spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperationMode {
    /// Sending a random key.
    Key,
    /// Powered on but idle.
    NoKey,
}

/// The operation-dependent spectral peak: a smooth bump of the given peak
/// density centered on `center` with total width `bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyBand {
    pub center: f64,
    pub bandwidth: f64,
    pub excess_power: f64,
}

/// Synthetic far-field spectrum model: a fixed envelope plus exponential
/// per-bin noise, with an extra in-band peak present only while a key is
/// being sent.
#[derive(Debug, Clone)]
pub struct ModeSpectrumModel {
    pub frequencies: Vec<f64>,
    pub base_spectrum: Vec<f64>,
    pub key_band: KeyBand,
    pub noise_floor: f64,
}

impl ModeSpectrumModel {
    pub fn new(
        frequencies: Vec<f64>,
        base_spectrum: Vec<f64>,
        key_band: KeyBand,
        noise_floor: f64,
    ) -> Result<Self> {
        if frequencies.len() != base_spectrum.len() || frequencies.is_empty() {
            return Err(Error::invalid("frequency and envelope lengths must match"));
        }
        if base_spectrum.iter().any(|&b| b < 0.0) || noise_floor < 0.0 {
            return Err(Error::invalid("spectral envelope must be nonnegative"));
        }
        let max_freq = *frequencies.last().unwrap();
        let half = key_band.bandwidth / 2.0;
        if key_band.excess_power < 0.0
            || key_band.bandwidth <= 0.0
            || key_band.center - half < 0.0
            || key_band.center + half > max_freq
        {
            return Err(Error::invalid("key band outside the spectral range"));
        }
        Ok(Self {
            frequencies,
            base_spectrum,
            key_band,
            noise_floor,
        })
    }

    /// Default far-field model: 1024 bins up to 5 GHz, a smoothly decaying
    /// envelope, and an 80 MHz-wide operation-dependent peak at 1.7 GHz.
    /// `excess_power` is the peak density of that bump, in units of the
    /// noise floor.
    pub fn default_model(excess_power_over_floor: f64) -> Self {
        let bins = 1024usize;
        let max_freq = 5e9;
        let noise_floor = 1e-4;
        let frequencies: Vec<f64> = (0..bins)
            .map(|i| i as f64 * max_freq / (bins - 1) as f64)
            .collect();
        let base_spectrum = frequencies
            .iter()
            .map(|&f| 1e-3 / (1.0 + (f / 0.8e9).powi(2)))
            .collect();
        Self::new(
            frequencies,
            base_spectrum,
            KeyBand {
                center: 1.7e9,
                bandwidth: 80e6,
                excess_power: excess_power_over_floor * noise_floor,
            },
            noise_floor,
        )
        .expect("default model is valid")
    }
}

/// Draws one far-field spectrum for the given operating mode. Deterministic
/// in `seed`; the output is nonnegative everywhere.
pub fn synth_mode_spectrum(mode: OperationMode, model: &ModeSpectrumModel, seed: u64) -> Spectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = model.key_band.bandwidth / 2.0;
    let density = model
        .frequencies
        .iter()
        .zip(&model.base_spectrum)
        .map(|(&f, &base)| {
            // Exponential per-bin noise keeps the draw nonnegative.
            let noise = -model.noise_floor * (1.0 - rng.gen::<f64>()).ln();
            let bump = if mode == OperationMode::Key {
                let offset = (f - model.key_band.center) / half;
                if offset.abs() <= 1.0 {
                    model.key_band.excess_power
                        * (std::f64::consts::FRAC_PI_2 * offset).cos().powi(2)
                } else {
                    0.0
                }
            } else {
                0.0
            };
            base + noise + bump
        })
        .collect();
    Spectrum {
        frequencies: model.frequencies.clone(),
        density,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::band_power;

    #[test]
    fn default_templates_have_unit_rms() {
        let model = make_default_leakage_model(5, 1.0, 0.0);
        assert_eq!(model.templates().len(), 16);
        for template in model.templates() {
            assert_eq!(template.len(), 100);
            let r = rms(template).unwrap();
            assert!((r - 1.0).abs() < 1e-6, "template rms {r}");
        }
    }

    #[test]
    fn default_templates_are_mutually_distinct() {
        for seed in [1u64, 2, 3, 42, 1234] {
            let model = make_default_leakage_model(seed, 1.0, 0.0);
            let max = model.max_template_correlation();
            assert!(max < TEMPLATE_SIMILARITY_LIMIT, "seed {seed}: max corr {max}");
        }
    }

    #[test]
    fn different_seeds_draw_different_templates() {
        let a = make_default_leakage_model(1, 1.0, 0.0);
        let b = make_default_leakage_model(2, 1.0, 0.0);
        assert_ne!(a.templates()[0], b.templates()[0]);
    }

    #[test]
    fn single_harmonic_gives_pure_sinusoid() {
        let key = RawKey::generate(50, 1).unwrap();
        let meta = TraceMeta::desk_scale();
        let mut model = LeakageModel::random(1, 100, 0.0, 0.0);
        model.clock_harmonics = vec![Harmonic { k: 1, amplitude: 1.0, phase: 0.0 }];
        model.interferers.clear();
        let trace = synth_trace(&key, &model, &meta, 0).unwrap();
        assert_eq!(trace.samples.len(), 5000);
        for (n, &v) in trace.samples.iter().enumerate() {
            let expected = (2.0 * std::f64::consts::PI * (n % 100) as f64 / 100.0).sin();
            assert!((v as f64 - expected).abs() < 1e-6, "sample {n}");
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let key = RawKey::generate(100, 3).unwrap();
        let meta = TraceMeta::desk_scale();
        let model = make_default_leakage_model(4, 0.7, 0.4);
        let a = synth_trace(&key, &model, &meta, 11).unwrap();
        let b = synth_trace(&key, &model, &meta, 11).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synth_trace(&key, &model, &meta, 12).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn constant_key_yields_symbol_periodic_trace() {
        // All-H key with no noise and no interferers: only the H->H template
        // and the clock contribute, so the trace repeats every symbol.
        // Verified via circular autocorrelation at the symbol lag.
        let key = RawKey::from_symbols(vec![Symbol::H; 200], 0).unwrap();
        let meta = TraceMeta::desk_scale();
        let mut model = LeakageModel::random(7, 100, 1.5, 0.0);
        model.interferers.clear();
        let trace = synth_trace(&key, &model, &meta, 0).unwrap();
        let n = trace.samples.len();
        let energy: f64 = trace.samples.iter().map(|&x| (x as f64) * (x as f64)).sum();
        let lag_product: f64 = (0..n)
            .map(|i| trace.samples[i] as f64 * trace.samples[(i + 100) % n] as f64)
            .sum();
        assert!((lag_product / energy - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_geometry_is_rejected() {
        let key = RawKey::generate(10, 1).unwrap();
        let meta = TraceMeta::new(1e9, 20e6).unwrap(); // 50 samples per symbol
        let model = make_default_leakage_model(1, 1.0, 0.0); // built for 100
        assert!(synth_trace(&key, &model, &meta, 0).is_err());
    }

    #[test]
    fn leakage_component_scales_linearly_with_strength() {
        let key = RawKey::generate(64, 5).unwrap();
        let meta = TraceMeta::desk_scale();
        let strengths = [0.5f32, 1.0, 2.0];
        let mut leakage_rms = Vec::new();
        for &s in &strengths {
            let with = synth_trace(&key, &LeakageModel::random(6, 100, s, 0.0), &meta, 0).unwrap();
            let without =
                synth_trace(&key, &LeakageModel::random(6, 100, 0.0, 0.0), &meta, 0).unwrap();
            let diff: Vec<f64> = with
                .samples
                .iter()
                .zip(&without.samples)
                .map(|(&a, &b)| a as f64 - b as f64)
                .collect();
            leakage_rms.push(rms(&diff).unwrap());
        }
        // Unit-RMS templates: the leakage RMS equals the strength.
        for (&s, &r) in strengths.iter().zip(&leakage_rms) {
            assert!((r - s as f64).abs() < 1e-4, "strength {s}: rms {r}");
        }
    }

    #[test]
    fn mode_spectra_separate_when_excess_power_is_large() {
        let model = ModeSpectrumModel::default_model(10.0);
        let band = (
            model.key_band.center - model.key_band.bandwidth,
            model.key_band.center + model.key_band.bandwidth,
        );
        for seed in 0..100u64 {
            let key = synth_mode_spectrum(OperationMode::Key, &model, seed);
            let idle = synth_mode_spectrum(OperationMode::NoKey, &model, seed + 1000);
            let p_key = band_power(&key, band.0, band.1).unwrap();
            let p_idle = band_power(&idle, band.0, band.1).unwrap();
            assert!(p_key > p_idle, "seed {seed}: {p_key} <= {p_idle}");
        }
    }

    #[test]
    fn zero_excess_makes_modes_identical() {
        let model = ModeSpectrumModel::default_model(0.0);
        let key = synth_mode_spectrum(OperationMode::Key, &model, 7);
        let idle = synth_mode_spectrum(OperationMode::NoKey, &model, 7);
        assert_eq!(key.density, idle.density);
    }

    #[test]
    fn mode_spectrum_is_deterministic_and_nonnegative() {
        let model = ModeSpectrumModel::default_model(10.0);
        let a = synth_mode_spectrum(OperationMode::Key, &model, 3);
        let b = synth_mode_spectrum(OperationMode::Key, &model, 3);
        assert_eq!(a.density, b.density);
        assert!(a.density.iter().all(|&d| d >= 0.0));
    }
}
