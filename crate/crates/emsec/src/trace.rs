//! Sampled emission traces and their acquisition metadata.

use crate::error::{Error, Result};
use crate::key::RawKey;

/// Acquisition metadata of a trace.
///
/// `sample_rate / clock_freq` must be an integer; that ratio is the number of
/// voltage samples covering one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    /// Samples per second.
    pub sample_rate: f64,
    /// Symbols per second.
    pub clock_freq: f64,
    /// Sample index of the first key symbol, when a trigger was recorded.
    /// `Some(0)` marks an aligned trace.
    pub trigger_index: Option<u64>,
    /// Transition-template amplitude used by the synthetic oracle;
    /// 0 for traces of unknown origin.
    pub leakage_strength: f32,
    /// White-noise standard deviation used by the synthetic oracle (volts);
    /// 0 for traces of unknown origin.
    pub noise_sigma: f32,
}

impl TraceMeta {
    pub fn new(sample_rate: f64, clock_freq: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !(clock_freq > 0.0) {
            return Err(Error::invalid("sample_rate and clock_freq must be positive"));
        }
        let ratio = sample_rate / clock_freq;
        if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::invalid(format!(
                "sample_rate must be an integer multiple of clock_freq (ratio {ratio})"
            )));
        }
        Ok(Self {
            sample_rate,
            clock_freq,
            trigger_index: None,
            leakage_strength: 0.0,
            noise_sigma: 0.0,
        })
    }

    /// Default desk-scale acquisition geometry: 10 GSa/s against a 100 MHz
    /// symbol clock, i.e. 100 samples per symbol.
    pub fn desk_scale() -> Self {
        Self::new(10e9, 100e6).expect("default geometry is valid")
    }

    pub fn samples_per_symbol(&self) -> usize {
        (self.sample_rate / self.clock_freq).round() as usize
    }
}

/// A uniformly sampled voltage series plus metadata, optionally carrying the
/// key that was being sent while it was recorded.
#[derive(Debug, Clone)]
pub struct Trace {
    pub meta: TraceMeta,
    pub samples: Vec<f32>,
    pub key: Option<RawKey>,
}

impl Trace {
    /// Number of whole symbols the sample buffer covers.
    pub fn num_symbols(&self) -> usize {
        self.samples.len() / self.meta.samples_per_symbol()
    }

    /// True when sample 0 is the first sample of key symbol 0.
    pub fn is_aligned(&self) -> bool {
        self.meta.trigger_index == Some(0)
    }

    /// True when the sample buffer covers the attached key exactly.
    pub fn spans_key(&self) -> bool {
        match &self.key {
            Some(key) => self.samples.len() == key.len() * self.meta.samples_per_symbol(),
            None => false,
        }
    }
}

/// Root mean square of a sample series, accumulated in 64-bit.
pub fn rms<T: Copy + Into<f64>>(samples: &[T]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("rms of an empty series is undefined"));
    }
    let sum: f64 = samples
        .iter()
        .map(|&x| {
            let v: f64 = x.into();
            v * v
        })
        .sum();
    Ok((sum / samples.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn meta_rejects_non_integer_ratio() {
        assert!(TraceMeta::new(10e9, 3e8).is_err());
        assert!(TraceMeta::new(0.0, 1.0).is_err());
        assert!(TraceMeta::new(1.0, 2.0).is_err());
    }

    #[test]
    fn desk_scale_geometry() {
        let meta = TraceMeta::desk_scale();
        assert_eq!(meta.samples_per_symbol(), 100);
    }

    #[test]
    fn rms_of_constant_series() {
        assert_eq!(rms(&[2.0f32; 17]).unwrap(), 2.0);
    }

    #[test]
    fn rms_of_alternating_series() {
        assert_eq!(rms(&[3.0f32, -3.0, 3.0, -3.0]).unwrap(), 3.0);
    }

    #[test]
    fn rms_of_full_sine_period() {
        // One exactly sampled period of A*sin has RMS A/sqrt(2) in closed
        // form; evaluate in f64 end to end so the identity holds to 1e-9.
        let amplitude = 1.7f64;
        let n = 1000usize;
        let period: Vec<f64> = (0..n)
            .map(|i| amplitude * (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        let expected = amplitude / std::f64::consts::SQRT_2;
        assert!((rms(&period).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn rms_of_empty_series_is_an_error() {
        assert!(rms::<f32>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn rms_invariant_under_sign_flip_and_permutation(
            values in proptest::collection::vec(-1e3f64..1e3, 1..64),
            flip_mask in proptest::collection::vec(any::<bool>(), 64),
        ) {
            let base = rms(&values).unwrap();
            let flipped: Vec<f64> = values
                .iter()
                .zip(flip_mask.iter().cycle())
                .map(|(&v, &f)| if f { -v } else { v })
                .collect();
            prop_assert!((rms(&flipped).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
            let mut reversed = values.clone();
            reversed.reverse();
            prop_assert!((rms(&reversed).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        }
    }
}
