//! Order-preserving filters over mined sequences.

use rayon::prelude::*;

use crate::model::{PhenxId, TemporalSequence, SEQUENCE_BASE};

fn starts_with(s: &TemporalSequence, start: PhenxId) -> bool {
    // ids starting with `start` occupy one contiguous range
    let lo = start.0 as u64 * SEQUENCE_BASE;
    (lo..lo + SEQUENCE_BASE).contains(&s.seq.0)
}

fn par_filter<F>(seqs: &[TemporalSequence], keep: F) -> Vec<TemporalSequence>
where
    F: Fn(&TemporalSequence) -> bool + Sync,
{
    seqs.par_iter().filter(|s| keep(s)).copied().collect()
}

pub fn filter_by_start(seqs: &[TemporalSequence], start: PhenxId) -> Vec<TemporalSequence> {
    par_filter(seqs, |s| starts_with(s, start))
}

pub fn filter_by_end(seqs: &[TemporalSequence], end: PhenxId) -> Vec<TemporalSequence> {
    par_filter(seqs, |s| s.seq.end() == end)
}

pub fn filter_by_min_duration(seqs: &[TemporalSequence], min_days: u32) -> Vec<TemporalSequence> {
    par_filter(seqs, |s| s.duration.days() >= min_days)
}

/// Dense bitset over phenX ids.
#[derive(Debug, Clone, Default)]
pub struct PhenxSet {
    words: Vec<u64>,
}

impl PhenxSet {
    pub fn insert(&mut self, id: PhenxId) {
        let (w, b) = (id.index() / 64, id.index() % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        self.words[w] |= 1 << b;
    }

    pub fn contains(&self, id: PhenxId) -> bool {
        let (w, b) = (id.index() / 64, id.index() % 64);
        self.words.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = PhenxId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| PhenxId((w * 64 + b) as u32))
        })
    }
}

/// End phenX of every sequence that starts with `start`.
pub fn end_set(seqs: &[TemporalSequence], start: PhenxId) -> PhenxSet {
    let mut set = PhenxSet::default();
    for s in seqs.iter().filter(|s| starts_with(s, start)) {
        set.insert(s.seq.end());
    }
    set
}

/// Every sequence, with any start, whose end phenX is also the end of some
/// sequence starting with `start`.
pub fn transitive_end_sequences(seqs: &[TemporalSequence], start: PhenxId) -> Vec<TemporalSequence> {
    let ends = end_set(seqs, start);
    if ends.is_empty() {
        return Vec::new();
    }
    par_filter(seqs, |s| ends.contains(s.seq.end()))
}
