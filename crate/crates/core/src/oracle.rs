//! Naive string-based transitive sequence mining, kept as a reference for the
//! numeric engine.
//!
//! Works on raw rows: stable sort by (patient label, date), then for every
//! patient, every event, and every later event of that patient, emit a
//! (patient, start, end, duration) row of owned strings. No encoding, no
//! parallelism, one allocation per label per row.

use std::collections::HashMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::ingest::{LookupTables, RawDbMartRow};
use crate::model::{encode_sequence, Duration, TemporalSequence};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NaiveSequence {
    pub patient: String,
    pub start: String,
    pub end: String,
    pub duration_days: i64,
}

struct DatedRow {
    patient: String,
    date: NaiveDate,
    phenx: String,
}

pub fn naive_mine(rows: &[RawDbMartRow]) -> Result<Vec<NaiveSequence>> {
    let mut dbmart = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let date = NaiveDate::parse_from_str(r.date_text.trim(), "%Y-%m-%d").map_err(|_| {
            Error::MalformedDate {
                row: i as u64 + 2,
                text: r.date_text.clone(),
            }
        })?;
        dbmart.push(DatedRow {
            patient: r.patient_label.clone(),
            date,
            phenx: r.phenx_label.clone(),
        });
    }

    // sort(dbmart, by(patient_num, date))
    dbmart.sort_by(|a, b| (&a.patient, a.date).cmp(&(&b.patient, b.date)));

    let mut patients: Vec<Vec<&DatedRow>> = Vec::new();
    for row in &dbmart {
        match patients.last_mut() {
            Some(p) if p[0].patient == row.patient => p.push(row),
            _ => patients.push(vec![row]),
        }
    }

    let mut sequences = Vec::new();
    for p in &patients {
        for (i, x) in p.iter().enumerate() {
            for y in &p[i + 1..] {
                if y.date >= x.date {
                    sequences.push(NaiveSequence {
                        patient: x.patient.clone(),
                        start: x.phenx.clone(),
                        end: y.phenx.clone(),
                        duration_days: (y.date - x.date).num_days(),
                    });
                }
            }
        }
    }
    Ok(sequences)
}

/// Keeps rows whose (start, end) pair occurs at least `threshold` times.
pub fn naive_sparsity_screen(rows: Vec<NaiveSequence>, threshold: u32) -> Vec<NaiveSequence> {
    let mut counts: HashMap<(String, String), u32> = HashMap::new();
    for r in &rows {
        *counts.entry((r.start.clone(), r.end.clone())).or_default() += 1;
    }
    rows.into_iter()
        .filter(|r| counts[&(r.start.clone(), r.end.clone())] >= threshold)
        .collect()
}

/// Maps naive rows onto numeric sequences through the lookup tables, for
/// multiset comparison with the engine. The result is canonically sorted.
pub fn encode_naive(rows: &[NaiveSequence], lookups: &LookupTables) -> Result<Vec<TemporalSequence>> {
    let unknown = |label: &str| Error::InvalidConfig(format!("label `{label}` missing from lookup tables"));
    let mut out = rows
        .iter()
        .map(|r| {
            let patient = lookups.patient_id(&r.patient).ok_or_else(|| unknown(&r.patient))?;
            let start = lookups.phenx_id(&r.start).ok_or_else(|| unknown(&r.start))?;
            let end = lookups.phenx_id(&r.end).ok_or_else(|| unknown(&r.end))?;
            Ok(TemporalSequence::new(
                patient,
                encode_sequence(start, end)?,
                Duration(r.duration_days as u32),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    Ok(out)
}
