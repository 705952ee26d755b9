//! Minimal dense batch tensors in `[sample][channel][time]` and
//! `[sample][feature]` layouts.

use super::scalar::Scalar;

/// A batch of 1D multi-channel sequences, stored contiguously as
/// `[n][channels][len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch3<S> {
    pub n: usize,
    pub channels: usize,
    pub len: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Batch3<S> {
    pub fn zeros(n: usize, channels: usize, len: usize) -> Self {
        Self {
            n,
            channels,
            len,
            data: vec![S::ZERO; n * channels * len],
        }
    }

    #[inline]
    pub fn channel(&self, sample: usize, channel: usize) -> &[S] {
        let start = (sample * self.channels + channel) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    pub fn channel_mut(&mut self, sample: usize, channel: usize) -> &mut [S] {
        let start = (sample * self.channels + channel) * self.len;
        &mut self.data[start..start + self.len]
    }

    /// Reinterprets each sample as one flat feature vector (no copy).
    pub fn into_flat(self) -> Batch2<S> {
        Batch2 {
            n: self.n,
            dim: self.channels * self.len,
            data: self.data,
        }
    }
}

/// A batch of flat feature vectors, stored as `[n][dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch2<S> {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Batch2<S> {
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            n,
            dim,
            data: vec![S::ZERO; n * dim],
        }
    }

    #[inline]
    pub fn row(&self, sample: usize) -> &[S] {
        &self.data[sample * self.dim..(sample + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, sample: usize) -> &mut [S] {
        &mut self.data[sample * self.dim..(sample + 1) * self.dim]
    }

    /// Reinterprets each row as a `[channels][len]` sequence (no copy).
    pub fn into_seq(self, channels: usize, len: usize) -> Batch3<S> {
        debug_assert_eq!(self.dim, channels * len);
        Batch3 {
            n: self.n,
            channels,
            len,
            data: self.data,
        }
    }
}
