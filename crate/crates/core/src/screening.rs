//! Sparsity screening.
//!
//! Sequences are sorted by their counting key, the start of every key run is
//! located, and runs are counted in parallel over chunks that never split a
//! run. A run below the threshold is condemned by overwriting its patient id
//! with [`PatientId::SENTINEL`]. A final sort by patient pushes condemned
//! records to the tail, where the vector is truncated once.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    duration_in_unit, pack_unchecked, DurationUnit, PatientId, TemporalSequence,
    DEFAULT_BUCKET_BITS, MAX_BUCKET_BITS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// Every record counts.
    #[default]
    Occurrences,
    /// Each patient counts once per key.
    DistinctPatients,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityConfig {
    pub threshold: u32,
    pub count_mode: CountMode,
    pub duration_aware: bool,
    pub bucket_unit: DurationUnit,
    pub bucket_bits: u32,
}

impl SparsityConfig {
    pub fn new(threshold: u32) -> Self {
        Self {
            threshold,
            count_mode: CountMode::Occurrences,
            duration_aware: false,
            bucket_unit: DurationUnit::Months,
            bucket_bits: DEFAULT_BUCKET_BITS,
        }
    }

    pub fn with_mode(mut self, mode: CountMode) -> Self {
        self.count_mode = mode;
        self
    }

    pub fn duration_buckets(mut self, unit: DurationUnit) -> Self {
        self.duration_aware = true;
        self.bucket_unit = unit;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.threshold == 0 {
            return Err(Error::InvalidConfig("sparsity threshold must be at least 1".into()));
        }
        if self.bucket_bits > MAX_BUCKET_BITS {
            return Err(Error::PackOverflow(self.bucket_bits));
        }
        Ok(())
    }
}

/// Dispatches on `config.duration_aware`.
pub fn screen(seqs: Vec<TemporalSequence>, config: &SparsityConfig) -> Result<Vec<TemporalSequence>> {
    if config.duration_aware {
        duration_sparsity_screen(seqs, config)
    } else {
        sparsity_screen(seqs, config)
    }
}

/// Keeps the records whose sequence id reaches the threshold. Output is in
/// canonical order.
pub fn sparsity_screen(
    seqs: Vec<TemporalSequence>,
    config: &SparsityConfig,
) -> Result<Vec<TemporalSequence>> {
    config.validate()?;
    Ok(screen_by_key(seqs, config.threshold, config.count_mode, |s| s.seq.0))
}

/// Like [`sparsity_screen`] but the counted key also carries the duration
/// bucket, so the same pair at different durations counts separately.
pub fn duration_sparsity_screen(
    seqs: Vec<TemporalSequence>,
    config: &SparsityConfig,
) -> Result<Vec<TemporalSequence>> {
    config.validate()?;
    let unit = config.bucket_unit;
    let bits = config.bucket_bits;
    Ok(screen_by_key(seqs, config.threshold, config.count_mode, move |s| {
        pack_unchecked(s.seq, duration_in_unit(s.duration, unit) as u64, bits)
    }))
}

fn screen_by_key<K>(
    mut seqs: Vec<TemporalSequence>,
    threshold: u32,
    mode: CountMode,
    key: K,
) -> Vec<TemporalSequence>
where
    K: Fn(&TemporalSequence) -> u64 + Sync,
{
    if threshold <= 1 {
        seqs.par_sort_unstable();
        return seqs;
    }
    // (key, patient) order lets distinct-patient counting compare neighbours.
    seqs.par_sort_unstable_by_key(|s| (key(s), s.patient));

    let chunks = run_aligned_chunks(&seqs, &key, rayon::current_num_threads() * 4);
    let mut slices = Vec::with_capacity(chunks.len());
    let mut rest = seqs.as_mut_slice();
    let mut consumed = 0;
    for r in &chunks {
        let (head, tail) = rest.split_at_mut(r.end - consumed);
        consumed = r.end;
        slices.push(head);
        rest = tail;
    }
    slices
        .into_par_iter()
        .for_each(|chunk| mark_sparse_runs(chunk, threshold as u64, mode, &key));

    seqs.par_sort_unstable();
    let keep = seqs.partition_point(|s| !s.patient.is_sentinel());
    seqs.truncate(keep);
    seqs.shrink_to_fit();
    seqs
}

/// Splits a key-sorted slice into about `parts` ranges whose boundaries fall
/// on key changes.
fn run_aligned_chunks<K>(seqs: &[TemporalSequence], key: &K, parts: usize) -> Vec<Range<usize>>
where
    K: Fn(&TemporalSequence) -> u64,
{
    let len = seqs.len();
    let step = len.div_ceil(parts.max(1)).max(1);
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < len {
        let mut end = (start + step).min(len);
        if end < len {
            let boundary_key = key(&seqs[end - 1]);
            end += seqs[end..].partition_point(|s| key(s) == boundary_key);
        }
        chunks.push(start..end);
        start = end;
    }
    chunks
}

fn mark_sparse_runs<K>(chunk: &mut [TemporalSequence], threshold: u64, mode: CountMode, key: &K)
where
    K: Fn(&TemporalSequence) -> u64,
{
    let mut start = 0;
    while start < chunk.len() {
        let k = key(&chunk[start]);
        let len = chunk[start..].partition_point(|s| key(s) == k);
        let run = &mut chunk[start..start + len];
        let count = match mode {
            CountMode::Occurrences => len as u64,
            CountMode::DistinctPatients => {
                1 + run.windows(2).filter(|w| w[0].patient != w[1].patient).count() as u64
            }
        };
        if count < threshold {
            for s in run.iter_mut() {
                s.patient = PatientId::SENTINEL;
            }
        }
        start += len;
    }
}
