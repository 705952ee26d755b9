//! Labeled snippet datasets: window extraction, normalization, shift
//! augmentation, and train/test split hygiene.
//!
//! Snippets are stored as references into shared source traces and
//! materialized on demand, so the 7x shift augmentation costs index entries
//! rather than copies of the sample data.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::key::Symbol;
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetRole {
    Train,
    Validation,
    Test,
}

/// Affine sample normalization `x -> (x - mean) / std`.
///
/// Statistics are fitted on training data only and then applied unchanged to
/// validation and test data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub mean: f64,
    pub std: f64,
}

impl Normalizer {
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    /// The normalizer equivalent to applying `first`, then `second`.
    fn compose(first: Normalizer, second: Normalizer) -> Normalizer {
        Normalizer {
            mean: first.mean + second.mean * first.std,
            std: first.std * second.std,
        }
    }
}

/// One materialized window: `window_len` samples labeled with the symbol at
/// the window center.
#[derive(Debug, Clone)]
pub struct Snippet {
    pub samples: Vec<f32>,
    pub label: Symbol,
    pub source_trace: usize,
    pub center_index: usize,
}

#[derive(Debug, Clone, Copy)]
struct SnippetRef {
    source: u32,
    start: u32,
    center_index: u32,
    label: Symbol,
}

/// An ordered collection of labeled windows over one or more aligned traces
/// of the same key.
#[derive(Debug, Clone)]
pub struct SnippetDataset {
    sources: Vec<Arc<Trace>>,
    entries: Vec<SnippetRef>,
    window_symbols: usize,
    window_len: usize,
    normalizer: Option<Normalizer>,
    role: DatasetRole,
    key_seed: u64,
    augment_dropped: usize,
}

impl SnippetDataset {
    /// Cuts every window with full context out of an aligned trace: symbol
    /// index `i` yields the samples of symbols `[i - h, i + h]` for a window
    /// of `2h + 1` symbols, labeled with `key[i]`. A trace of `n` symbols
    /// yields `n - (window_symbols - 1)` snippets (edge symbols are dropped,
    /// not padded).
    pub fn snippetize(trace: Arc<Trace>, window_symbols: usize, role: DatasetRole) -> Result<Self> {
        if window_symbols % 2 == 0 || window_symbols == 0 {
            return Err(Error::invalid("window_symbols must be odd"));
        }
        if !trace.is_aligned() {
            return Err(Error::precondition(
                "snippetize requires an aligned trace (trigger_index = 0)",
            ));
        }
        let key = trace
            .key
            .as_ref()
            .ok_or_else(|| Error::precondition("snippetize requires a trace with a key"))?;
        if !trace.spans_key() {
            return Err(Error::precondition("trace does not span its key exactly"));
        }

        let spp = trace.meta.samples_per_symbol();
        let half = window_symbols / 2;
        let n = key.len();
        let key_seed = key.seed();
        let mut entries = Vec::new();
        if n >= window_symbols {
            for center in half..=(n - 1 - half) {
                entries.push(SnippetRef {
                    source: 0,
                    start: ((center - half) * spp) as u32,
                    center_index: center as u32,
                    label: key.symbols()[center],
                });
            }
        }
        Ok(Self {
            sources: vec![trace],
            entries,
            window_symbols,
            window_len: window_symbols * spp,
            normalizer: None,
            role,
            key_seed,
            augment_dropped: 0,
        })
    }

    /// Concatenates the snippets of several aligned measurements of the same
    /// key into one training dataset. Per-snippet provenance is retained.
    pub fn combine_measurements(traces: &[Arc<Trace>], window_symbols: usize) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| Error::invalid("combine_measurements needs at least one trace"))?;
        let reference_key = first
            .key
            .as_ref()
            .ok_or_else(|| Error::precondition("traces must carry their key"))?
            .clone();
        let mut combined = Self::snippetize(first.clone(), window_symbols, DatasetRole::Train)?;
        for (idx, trace) in traces.iter().enumerate().skip(1) {
            let key = trace
                .key
                .as_ref()
                .ok_or_else(|| Error::precondition("traces must carry their key"))?;
            if key.symbols() != reference_key.symbols() {
                return Err(Error::invalid(format!(
                    "trace {idx} was recorded with a different key"
                )));
            }
            let part = Self::snippetize(trace.clone(), window_symbols, DatasetRole::Train)?;
            let source = combined.sources.len() as u32;
            combined.sources.push(trace.clone());
            combined.entries.extend(part.entries.into_iter().map(|mut e| {
                e.source = source;
                e
            }));
        }
        Ok(combined)
    }

    /// Refuses to pair a test dataset with training data recorded under the
    /// same key. Checks both the recorded seeds and the key contents.
    pub fn assert_disjoint_keys(train: &Self, test: &Self) -> Result<()> {
        if train.key_seed == test.key_seed {
            return Err(Error::precondition(format!(
                "test dataset reuses the training key seed {}",
                train.key_seed
            )));
        }
        for train_src in &train.sources {
            for test_src in &test.sources {
                if let (Some(a), Some(b)) = (&train_src.key, &test_src.key) {
                    if a.symbols() == b.symbols() {
                        return Err(Error::precondition(
                            "test dataset reuses the training key contents",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn role(&self) -> DatasetRole {
        self.role
    }

    pub fn key_seed(&self) -> u64 {
        self.key_seed
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn window_symbols(&self) -> usize {
        self.window_symbols
    }

    pub fn normalizer(&self) -> Option<Normalizer> {
        self.normalizer
    }

    /// Augmented copies silently dropped because their shifted window left
    /// the source trace.
    pub fn augment_dropped(&self) -> usize {
        self.augment_dropped
    }

    pub fn sources(&self) -> &[Arc<Trace>] {
        &self.sources
    }

    pub fn label(&self, index: usize) -> Symbol {
        self.entries[index].label
    }

    pub fn center_index(&self, index: usize) -> usize {
        self.entries[index].center_index as usize
    }

    pub fn source_of(&self, index: usize) -> usize {
        self.entries[index].source as usize
    }

    /// Writes the (normalized, when a normalizer is set) window `index` into
    /// `out`, which must be `window_len` long.
    pub fn write_window(&self, index: usize, out: &mut [f32]) {
        let entry = self.entries[index];
        let trace = &self.sources[entry.source as usize];
        let start = entry.start as usize;
        let window = &trace.samples[start..start + self.window_len];
        match self.normalizer {
            Some(n) => {
                for (o, &x) in out.iter_mut().zip(window) {
                    *o = n.apply(x as f64) as f32;
                }
            }
            None => out.copy_from_slice(window),
        }
    }

    pub fn snippet(&self, index: usize) -> Snippet {
        let mut samples = vec![0.0f32; self.window_len];
        self.write_window(index, &mut samples);
        let entry = self.entries[index];
        Snippet {
            samples,
            label: entry.label,
            source_trace: entry.source as usize,
            center_index: entry.center_index as usize,
        }
    }

    /// Mean and population standard deviation over every sample of every
    /// snippet, accumulated in 64-bit. Only training datasets may be fitted.
    pub fn fit_normalizer(&self) -> Result<Normalizer> {
        if self.role != DatasetRole::Train {
            return Err(Error::precondition(
                "normalization statistics come from training data only",
            ));
        }
        if self.is_empty() {
            return Err(Error::invalid("cannot fit a normalizer on an empty dataset"));
        }
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        let mut count = 0u64;
        let mut window = vec![0.0f32; self.window_len];
        for i in 0..self.len() {
            self.write_window(i, &mut window);
            for &x in &window {
                let v = x as f64;
                sum += v;
                sum_sq += v * v;
            }
            count += window.len() as u64;
        }
        let mean = sum / count as f64;
        let variance = (sum_sq / count as f64 - mean * mean).max(0.0);
        if variance == 0.0 {
            return Err(Error::DegenerateData(
                "dataset has zero variance; cannot normalize".into(),
            ));
        }
        Ok(Normalizer {
            mean,
            std: variance.sqrt(),
        })
    }

    /// Applies (composes onto any existing) normalization.
    pub fn normalize(&mut self, normalizer: Normalizer) {
        self.normalizer = Some(match self.normalizer {
            Some(existing) => Normalizer::compose(existing, normalizer),
            None => normalizer,
        });
    }

    /// Deterministic shift augmentation: each snippet is duplicated at
    /// offsets of +-1..=max_shift samples, re-cut from the source trace.
    /// Copies whose window would leave the trace are dropped silently and
    /// counted. `max_shift = 0` returns the dataset unchanged.
    pub fn augment_shifts(&self, max_shift: usize) -> Result<Self> {
        if self.role != DatasetRole::Train {
            return Err(Error::precondition("only training datasets are augmented"));
        }
        if max_shift == 0 {
            return Ok(self.clone());
        }
        let mut entries = Vec::with_capacity(self.entries.len() * (2 * max_shift + 1));
        let mut dropped = 0usize;
        for entry in &self.entries {
            entries.push(*entry);
            let trace_len = self.sources[entry.source as usize].samples.len();
            for magnitude in 1..=max_shift as i64 {
                for shift in [-magnitude, magnitude] {
                    let start = entry.start as i64 + shift;
                    if start >= 0 && (start as usize + self.window_len) <= trace_len {
                        let mut copy = *entry;
                        copy.start = start as u32;
                        entries.push(copy);
                    } else {
                        dropped += 1;
                    }
                }
            }
        }
        Ok(Self {
            sources: self.sources.clone(),
            entries,
            window_symbols: self.window_symbols,
            window_len: self.window_len,
            normalizer: self.normalizer,
            role: self.role,
            key_seed: self.key_seed,
            augment_dropped: self.augment_dropped + dropped,
        })
    }

    #[cfg(test)]
    fn retain_entries(&mut self, keep: impl Fn(usize) -> bool) {
        let mut i = 0usize;
        self.entries.retain(|_| {
            let keep_it = keep(i);
            i += 1;
            keep_it
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::RawKey;
    use crate::synth::{make_default_leakage_model, synth_trace};
    use crate::trace::TraceMeta;

    fn synthetic_trace(num_symbols: usize, key_seed: u64) -> Arc<Trace> {
        let key = RawKey::generate(num_symbols, key_seed).unwrap();
        let meta = TraceMeta::desk_scale();
        let model = make_default_leakage_model(1, 1.0, 0.2);
        Arc::new(synth_trace(&key, &model, &meta, key_seed + 100).unwrap())
    }

    #[test]
    fn snippet_count_follows_edge_trimming() {
        let ds =
            SnippetDataset::snippetize(synthetic_trace(20_000, 1), 5, DatasetRole::Train).unwrap();
        assert_eq!(ds.len(), 19_996);
        assert_eq!(ds.window_len(), 500);

        let minimal =
            SnippetDataset::snippetize(synthetic_trace(5, 2), 5, DatasetRole::Train).unwrap();
        assert_eq!(minimal.len(), 1);
        assert_eq!(minimal.center_index(0), 2);

        let empty =
            SnippetDataset::snippetize(synthetic_trace(4, 3), 5, DatasetRole::Train).unwrap();
        assert_eq!(empty.len(), 0);
    }

    #[test]
    fn snippetize_rejects_bad_inputs() {
        let trace = synthetic_trace(10, 1);
        assert!(SnippetDataset::snippetize(trace.clone(), 4, DatasetRole::Train).is_err());
        let mut unaligned = (*trace).clone();
        unaligned.meta.trigger_index = Some(3);
        assert!(SnippetDataset::snippetize(Arc::new(unaligned), 5, DatasetRole::Train).is_err());
        let mut keyless = (*trace).clone();
        keyless.key = None;
        assert!(SnippetDataset::snippetize(Arc::new(keyless), 5, DatasetRole::Train).is_err());
    }

    #[test]
    fn labels_match_source_key_exhaustively() {
        let trace = synthetic_trace(200, 4);
        let key = trace.key.clone().unwrap();
        let ds = SnippetDataset::snippetize(trace, 5, DatasetRole::Train).unwrap();
        for i in 0..ds.len() {
            let snippet = ds.snippet(i);
            assert_eq!(snippet.label, key.symbols()[snippet.center_index]);
        }
    }

    #[test]
    fn windows_are_cut_from_the_source_trace() {
        let trace = synthetic_trace(50, 5);
        let spp = trace.meta.samples_per_symbol();
        let ds = SnippetDataset::snippetize(trace.clone(), 5, DatasetRole::Train).unwrap();
        let snippet = ds.snippet(7); // center symbol 9
        let start = (snippet.center_index - 2) * spp;
        assert_eq!(snippet.samples, trace.samples[start..start + 5 * spp]);
    }

    fn dataset_stats(ds: &SnippetDataset) -> (f64, f64) {
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        let mut count = 0u64;
        let mut window = vec![0.0f32; ds.window_len()];
        for i in 0..ds.len() {
            ds.write_window(i, &mut window);
            for &x in &window {
                sum += x as f64;
                sum_sq += (x as f64) * (x as f64);
            }
            count += window.len() as u64;
        }
        let mean = sum / count as f64;
        (mean, (sum_sq / count as f64 - mean * mean).sqrt())
    }

    #[test]
    fn normalization_reaches_zero_mean_unit_std() {
        let mut ds =
            SnippetDataset::snippetize(synthetic_trace(2000, 6), 5, DatasetRole::Train).unwrap();
        let norm = ds.fit_normalizer().unwrap();
        ds.normalize(norm);
        let (mean, std) = dataset_stats(&ds);
        assert!(mean.abs() < 1e-5, "mean {mean}");
        assert!((std - 1.0).abs() < 1e-4, "std {std}");
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut ds =
            SnippetDataset::snippetize(synthetic_trace(1000, 7), 5, DatasetRole::Train).unwrap();
        ds.normalize(ds.fit_normalizer().unwrap());
        let before = ds.snippet(123).samples;
        ds.normalize(ds.fit_normalizer().unwrap());
        let after = ds.snippet(123).samples;
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let key = RawKey::generate(10, 1).unwrap();
        let mut meta = TraceMeta::desk_scale();
        meta.trigger_index = Some(0);
        let trace = Arc::new(Trace {
            meta,
            samples: vec![1.0; 1000],
            key: Some(key),
        });
        let ds = SnippetDataset::snippetize(trace, 5, DatasetRole::Train).unwrap();
        assert!(matches!(ds.fit_normalizer(), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn fit_is_restricted_to_training_data() {
        let ds = SnippetDataset::snippetize(synthetic_trace(100, 8), 5, DatasetRole::Test).unwrap();
        assert!(matches!(ds.fit_normalizer(), Err(Error::Precondition(_))));
    }

    #[test]
    fn augmentation_multiplies_by_seven_minus_edge_drops() {
        let ds =
            SnippetDataset::snippetize(synthetic_trace(20_000, 9), 5, DatasetRole::Train).unwrap();
        let augmented = ds.augment_shifts(3).unwrap();
        // The first snippet starts at sample 0 (3 left shifts dropped) and the
        // last one ends at the trace end (3 right shifts dropped).
        assert_eq!(augmented.augment_dropped(), 6);
        assert_eq!(augmented.len(), 7 * 19_996 - 6);
    }

    #[test]
    fn augmentation_is_exactly_sevenfold_for_interior_snippets() {
        // Keep only windows >= 3 samples away from both trace edges; no
        // copies get dropped then.
        let trace = synthetic_trace(100, 10);
        let full = SnippetDataset::snippetize(trace, 5, DatasetRole::Train).unwrap();
        let mut interior = full.clone();
        interior.retain_entries(|i| i != 0 && i != full.len() - 1);
        let n = interior.len();
        let augmented = interior.augment_shifts(3).unwrap();
        assert_eq!(augmented.len(), 7 * n);
        assert_eq!(augmented.augment_dropped(), 0);
    }

    #[test]
    fn zero_shift_augmentation_is_identity() {
        let ds =
            SnippetDataset::snippetize(synthetic_trace(100, 11), 5, DatasetRole::Train).unwrap();
        let augmented = ds.augment_shifts(0).unwrap();
        assert_eq!(augmented.len(), ds.len());
    }

    #[test]
    fn shifted_copies_are_recut_from_the_trace() {
        let trace = synthetic_trace(100, 12);
        let ds = SnippetDataset::snippetize(trace.clone(), 5, DatasetRole::Train).unwrap();
        let augmented = ds.augment_shifts(1).unwrap();
        // Entry layout per original: [original, -1 shift, +1 shift].
        let original = augmented.snippet(3);
        let plus_one = augmented.snippet(5);
        let start = (original.center_index - 2) * 100 + 1;
        assert_eq!(plus_one.samples, trace.samples[start..start + 500]);
    }

    #[test]
    fn augmentation_requires_training_role() {
        let ds = SnippetDataset::snippetize(synthetic_trace(20, 13), 5, DatasetRole::Validation)
            .unwrap();
        assert!(ds.augment_shifts(3).is_err());
    }

    #[test]
    fn combine_requires_identical_keys() {
        let key = RawKey::generate(50, 14).unwrap();
        let meta = TraceMeta::desk_scale();
        let model = make_default_leakage_model(1, 1.0, 0.2);
        let a = Arc::new(synth_trace(&key, &model, &meta, 1).unwrap());
        let b = Arc::new(synth_trace(&key, &model, &meta, 2).unwrap());
        let combined = SnippetDataset::combine_measurements(&[a.clone(), b], 5).unwrap();
        assert_eq!(combined.len(), 2 * 46);
        assert_eq!(combined.source_of(0), 0);
        assert_eq!(combined.source_of(46), 1);

        let other = synthetic_trace(50, 999);
        assert!(SnippetDataset::combine_measurements(&[a, other], 5).is_err());
    }

    #[test]
    fn disjoint_key_guard_refuses_shared_keys() {
        let train =
            SnippetDataset::snippetize(synthetic_trace(50, 20), 5, DatasetRole::Train).unwrap();
        let test_same =
            SnippetDataset::snippetize(synthetic_trace(50, 20), 5, DatasetRole::Test).unwrap();
        let test_other =
            SnippetDataset::snippetize(synthetic_trace(50, 21), 5, DatasetRole::Test).unwrap();
        assert!(SnippetDataset::assert_disjoint_keys(&train, &test_same).is_err());
        assert!(SnippetDataset::assert_disjoint_keys(&train, &test_other).is_ok());
    }
}
