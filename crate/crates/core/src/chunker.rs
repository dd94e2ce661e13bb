//! Adaptive partitioning of a sorted dbmart into patient ranges whose
//! predicted sequence count stays within a record budget.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::model::DbMartEntry;

/// Largest vector most scripting runtimes can hold (2^31 - 1 elements).
pub const DEFAULT_CHUNK_LIMIT: u64 = (1 << 31) - 1;

/// In-memory footprint of one mined record: 8-byte sequence id plus 4-byte
/// duration plus 4-byte patient id.
pub const BYTES_PER_RECORD: u64 = 16;

pub fn records_for_byte_budget(bytes: u64) -> u64 {
    bytes / BYTES_PER_RECORD
}

fn pairs(n: u64) -> u128 {
    let n = n as u128;
    n * n.saturating_sub(1) / 2
}

/// Sum of `n(n-1)/2` over patients.
pub fn estimate_sequence_count(entries_per_patient: &[u64]) -> Result<u64> {
    entries_per_patient.iter().try_fold(0u64, |acc, &n| {
        let p = u64::try_from(pairs(n)).map_err(|_| Error::ArithmeticOverflow)?;
        acc.checked_add(p).ok_or(Error::ArithmeticOverflow)
    })
}

/// Entry count per patient id (dense, index = id) of a dbmart.
pub fn entries_per_patient(entries: &[DbMartEntry]) -> Vec<u64> {
    let len = entries.iter().map(|e| e.patient.index() + 1).max().unwrap_or(0);
    let mut counts = vec![0u64; len];
    for e in entries {
        counts[e.patient.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkPlan {
    /// Half-open patient id ranges, contiguous and in order.
    pub chunks: Vec<Range<u32>>,
    pub predicted_counts: Vec<u64>,
    pub limit: u64,
}

impl ChunkPlan {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn total_predicted(&self) -> u64 {
        self.predicted_counts.iter().sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("chunk\tfirst_patient\tlast_patient\tpredicted_sequences\n");
        for (i, (r, c)) in self.chunks.iter().zip(&self.predicted_counts).enumerate() {
            let _ = writeln!(out, "{i}\t{}\t{}\t{c}", r.start, r.end - 1);
        }
        out
    }
}

/// Greedy contiguous packing: patients join the current chunk until the next
/// one would push it past `limit`.
pub fn plan_chunks(entries_per_patient: &[u64], limit: u64) -> Result<ChunkPlan> {
    let mut chunks = Vec::new();
    let mut predicted_counts = Vec::new();
    let mut start = 0u32;
    let mut acc = 0u64;
    for (patient, &n) in entries_per_patient.iter().enumerate() {
        let patient = patient as u32;
        let cost = u64::try_from(pairs(n)).map_err(|_| Error::ArithmeticOverflow)?;
        if cost > limit {
            return Err(Error::PatientExceedsLimit {
                patient,
                predicted: cost,
                limit,
            });
        }
        if patient > start && acc + cost > limit {
            chunks.push(start..patient);
            predicted_counts.push(acc);
            start = patient;
            acc = 0;
        }
        acc += cost;
    }
    if (start as usize) < entries_per_patient.len() {
        chunks.push(start..entries_per_patient.len() as u32);
        predicted_counts.push(acc);
    }
    Ok(ChunkPlan {
        chunks,
        predicted_counts,
        limit,
    })
}

/// Slices of a sorted dbmart, one per chunk of the plan.
pub fn chunk_slices<'a>(entries: &'a [DbMartEntry], plan: &ChunkPlan) -> Vec<&'a [DbMartEntry]> {
    plan.chunks
        .iter()
        .map(|r| {
            let lo = entries.partition_point(|e| e.patient.0 < r.start);
            let hi = entries.partition_point(|e| e.patient.0 < r.end);
            &entries[lo..hi]
        })
        .collect()
}
