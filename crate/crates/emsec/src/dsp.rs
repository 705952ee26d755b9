//! Clock recovery, trace synchronization, and spectral estimation.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::key::{RawKey, Symbol};
use crate::trace::{rms, Trace};

/// Fraction of the clock frequency used as the band-pass width when
/// recovering the clock phase. The width is not critical; it is exposed as a
/// CLI knob for experiments.
pub const DEFAULT_CLOCK_BANDWIDTH_FRACTION: f64 = 0.1;

/// Minimum normalized clock amplitude below which phase recovery is rejected.
pub const CLOCK_QUALITY_THRESHOLD: f64 = 0.05;

/// Result of clock-phase recovery.
///
/// `phase_offset` is the sample index in `[0, samples_per_symbol)` at which a
/// symbol begins, using the convention that sample-phase 0 is the rising zero
/// crossing of the recovered clock fundamental.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockEstimate {
    pub phase_offset: f64,
    /// Recovered fundamental amplitude over sqrt(2) times the RMS of the
    /// band-passed trace; 1.0 for a pure clock tone, near 0 for noise.
    pub quality: f64,
}

/// A one-sided power spectral density or generic nonnegative spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
}

/// Zero-phase band-pass filter via frequency-domain masking.
///
/// The mask is flat over `center +- bandwidth/2` and rolls off with a
/// raised-cosine edge of width `bandwidth/4`, so any tone farther than
/// `bandwidth` from the center is fully suppressed.
pub fn bandpass(
    samples: &[f32],
    center_freq: f64,
    bandwidth: f64,
    sample_rate: f64,
) -> Result<Vec<f32>> {
    if !(center_freq > 0.0) || center_freq >= sample_rate / 2.0 {
        return Err(Error::invalid(format!(
            "center frequency {center_freq} outside (0, Nyquist)"
        )));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    let n = samples.len();
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .map(|&x| Complex::new(x as f64, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);

    let half_width = bandwidth / 2.0;
    let edge = bandwidth / 4.0;
    for (k, value) in buf.iter_mut().enumerate() {
        // Signed bin frequencies; the mask is symmetric so the output stays real.
        let freq = if k <= n / 2 {
            k as f64 * sample_rate / n as f64
        } else {
            (n - k) as f64 * sample_rate / n as f64
        };
        let distance = (freq - center_freq).abs();
        let gain = if distance <= half_width {
            1.0
        } else if distance <= half_width + edge {
            0.5 * (1.0 + (std::f64::consts::PI * (distance - half_width) / edge).cos())
        } else {
            0.0
        };
        *value *= gain;
    }

    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|c| (c.re / n as f64) as f32).collect())
}

/// Recovers the symbol clock phase from a trace by band-passing around the
/// clock frequency and projecting onto quadrature sinusoids at that frequency.
pub fn estimate_clock_phase(trace: &Trace) -> Result<ClockEstimate> {
    estimate_clock_phase_with_bandwidth(
        trace,
        DEFAULT_CLOCK_BANDWIDTH_FRACTION * trace.meta.clock_freq,
    )
}

pub fn estimate_clock_phase_with_bandwidth(trace: &Trace, bandwidth: f64) -> Result<ClockEstimate> {
    if trace.num_symbols() <= 10 {
        return Err(Error::precondition(
            "clock recovery needs a trace longer than 10 symbols",
        ));
    }
    let filtered = bandpass(
        &trace.samples,
        trace.meta.clock_freq,
        bandwidth,
        trace.meta.sample_rate,
    )?;
    estimate_phase_from_filtered(&filtered, trace.meta.samples_per_symbol())
}

fn estimate_phase_from_filtered(filtered: &[f32], spp: usize) -> Result<ClockEstimate> {
    let n = filtered.len();
    let step = 2.0 * std::f64::consts::PI / spp as f64;
    let mut cos_proj = 0.0f64;
    let mut sin_proj = 0.0f64;
    for (i, &x) in filtered.iter().enumerate() {
        let theta = step * (i % spp) as f64;
        cos_proj += x as f64 * theta.cos();
        sin_proj += x as f64 * theta.sin();
    }
    let amplitude = 2.0 * (cos_proj * cos_proj + sin_proj * sin_proj).sqrt() / n as f64;
    let filtered_rms = rms(filtered)?;
    let quality = if filtered_rms > 0.0 {
        amplitude / (std::f64::consts::SQRT_2 * filtered_rms)
    } else {
        0.0
    };
    if quality < CLOCK_QUALITY_THRESHOLD {
        return Err(Error::ClockNotFound {
            quality,
            threshold: CLOCK_QUALITY_THRESHOLD,
        });
    }
    // The fundamental is A*sin(step*(n - d)): its quadrature projections are
    // sin_proj ~ cos(step*d), cos_proj ~ -sin(step*d).
    let phase = (-cos_proj).atan2(sin_proj) / step;
    Ok(ClockEstimate {
        phase_offset: phase.rem_euclid(spp as f64),
        quality,
    })
}

/// Rotates a trace so that sample 0 is the first sample of key symbol 0,
/// composing the recorded trigger index with a sub-symbol clock-phase
/// correction.
pub fn align_by_trigger(trace: &Trace) -> Result<Trace> {
    let trigger = trace.meta.trigger_index.ok_or_else(|| {
        Error::precondition("align_by_trigger requires a recorded trigger index")
    })? as usize;
    let n = trace.samples.len();
    if n == 0 {
        return Err(Error::invalid("cannot align an empty trace"));
    }

    let mut rotated = rotate_left(&trace.samples, trigger % n);
    let mut meta = trace.meta.clone();
    meta.trigger_index = Some(0);
    let coarse = Trace {
        meta: meta.clone(),
        samples: rotated,
        key: trace.key.clone(),
    };

    let estimate = estimate_clock_phase(&coarse)?;
    let spp = meta.samples_per_symbol() as f64;
    let mut residual = estimate.phase_offset;
    if residual > spp / 2.0 {
        residual -= spp;
    }
    let correction = residual.round() as isize;
    rotated = rotate_left_signed(&coarse.samples, correction);
    Ok(Trace {
        meta,
        samples: rotated,
        key: trace.key.clone(),
    })
}

fn rotate_left(samples: &[f32], shift: usize) -> Vec<f32> {
    let n = samples.len();
    let shift = shift % n.max(1);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&samples[shift..]);
    out.extend_from_slice(&samples[..shift]);
    out
}

fn rotate_left_signed(samples: &[f32], shift: isize) -> Vec<f32> {
    let n = samples.len() as isize;
    rotate_left(samples, shift.rem_euclid(n.max(1)) as usize)
}

/// Left-rotates a symbol sequence: `rotate_symbols(k, s)[i] = k[(i + s) % len]`.
pub fn rotate_symbols(symbols: &[Symbol], shift: usize) -> Vec<Symbol> {
    let n = symbols.len();
    (0..n).map(|i| symbols[(i + shift) % n]).collect()
}

/// Number of positionwise symbol matches for every circular shift of the
/// true key against the prediction.
pub fn shift_match_counts(predicted: &[Symbol], true_key: &RawKey) -> Result<Vec<usize>> {
    let n = true_key.len();
    if predicted.len() != n {
        return Err(Error::invalid(format!(
            "predicted length {} does not match key length {n}",
            predicted.len()
        )));
    }
    let pred: Vec<u8> = predicted.iter().map(|s| s.code()).collect();
    let mut doubled: Vec<u8> = Vec::with_capacity(2 * n);
    doubled.extend(true_key.symbols().iter().map(|s| s.code()));
    doubled.extend_from_slice(&doubled.clone());
    let counts = (0..n)
        .map(|shift| {
            pred.iter()
                .zip(&doubled[shift..shift + n])
                .filter(|(a, b)| a == b)
                .count()
        })
        .collect();
    Ok(counts)
}

/// Finds the circular shift of the true key that best matches a predicted
/// symbol sequence. Returns `(best_shift, match_fraction)`; ties break toward
/// the smallest shift.
pub fn align_by_correlation(predicted: &[Symbol], true_key: &RawKey) -> Result<(usize, f64)> {
    let counts = shift_match_counts(predicted, true_key)?;
    let (best_shift, best) = counts
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
        .expect("non-empty counts");
    Ok((best_shift, *best as f64 / true_key.len() as f64))
}

/// Bartlett PSD estimate: the series is split into non-overlapping segments,
/// per-segment periodograms are averaged, and the one-sided density is
/// returned. Accumulation is in 64-bit.
pub fn bartlett_psd(samples: &[f32], segment_length: usize, sample_rate: f64) -> Result<Spectrum> {
    let n = samples.len();
    if segment_length == 0 || segment_length > n {
        return Err(Error::invalid(format!(
            "segment length {segment_length} must be in 1..={n}"
        )));
    }
    let num_segments = n / segment_length;
    let len = segment_length;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    let mut accum = vec![0.0f64; len];
    let mut buf = vec![Complex::new(0.0f64, 0.0); len];
    for seg in 0..num_segments {
        for (i, value) in buf.iter_mut().enumerate() {
            *value = Complex::new(samples[seg * len + i] as f64, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in accum.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }

    let scale = 1.0 / (sample_rate * len as f64 * num_segments as f64);
    let n_out = len / 2 + 1;
    let mut density = Vec::with_capacity(n_out);
    let mut frequencies = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let two_sided = accum[k] * scale;
        let fold = if k == 0 || (len % 2 == 0 && k == len / 2) {
            1.0
        } else {
            2.0
        };
        density.push(two_sided * fold);
        frequencies.push(k as f64 * sample_rate / len as f64);
    }
    Ok(Spectrum {
        frequencies,
        density,
    })
}

/// Trapezoidal integral of the density over `[f_lo, f_hi]`.
pub fn band_power(spectrum: &Spectrum, f_lo: f64, f_hi: f64) -> Result<f64> {
    if !(f_lo < f_hi) {
        return Err(Error::invalid("band_power requires f_lo < f_hi"));
    }
    let in_band: Vec<usize> = spectrum
        .frequencies
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= f_lo && f <= f_hi)
        .map(|(i, _)| i)
        .collect();
    if in_band.len() < 2 {
        return Err(Error::invalid("band contains fewer than two spectral bins"));
    }
    let mut power = 0.0f64;
    for pair in in_band.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        power += 0.5
            * (spectrum.density[a] + spectrum.density[b])
            * (spectrum.frequencies[b] - spectrum.frequencies[a]);
    }
    Ok(power)
}
