//! Post COVID-19 symptom identification from mined sequences.
//!
//! A symptom qualifies for a patient when it follows a covid event at least
//! twice and those observations span at least `min_persistence` duration
//! buckets (two months by default). Candidates are then dropped for a patient
//! when that patient also holds another sequence ending in the symptom that
//! correlates strongly and significantly, across the cohort, with the
//! (symptom, duration bucket) tuple. Exclusions are correlation-based and say
//! nothing about causation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::LookupTables;
use crate::model::{duration_in_unit, Duration, DurationUnit, PatientId, PhenxId, SequenceId, TemporalSequence};
use crate::query::{filter_by_start, transitive_end_sequences, PhenxSet};
use crate::stats::Contingency2x2;

#[derive(Debug, Clone, PartialEq)]
pub struct PostCovidConfig {
    pub covid: PhenxId,
    pub min_persistence: u32,
    pub correlation_threshold: f64,
    pub significance_alpha: f64,
    pub bucket_unit: DurationUnit,
}

impl PostCovidConfig {
    pub fn new(covid: PhenxId) -> Self {
        Self {
            covid,
            min_persistence: 2,
            correlation_threshold: 0.7,
            significance_alpha: 0.05,
            bucket_unit: DurationUnit::Months,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.correlation_threshold) {
            return Err(Error::InvalidConfig(format!(
                "correlation threshold {} is outside [0, 1]",
                self.correlation_threshold
            )));
        }
        if !(self.significance_alpha > 0.0 && self.significance_alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "significance level {} is outside (0, 1)",
                self.significance_alpha
            )));
        }
        Ok(())
    }

    fn bucket(&self, d: Duration) -> u32 {
        duration_in_unit(d, self.bucket_unit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSymptom {
    pub patient: PatientId,
    pub symptom: PhenxId,
    /// covid -> symptom durations, ascending
    pub observations: Vec<Duration>,
    pub min_bucket: u32,
    pub max_bucket: u32,
}

impl CandidateSymptom {
    pub fn span(&self) -> u32 {
        self.max_bucket - self.min_bucket
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfirmedSymptom {
    pub patient: PatientId,
    pub symptom: PhenxId,
    pub observation_count: usize,
    pub bucket_span: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcludedSymptom {
    pub patient: PatientId,
    pub symptom: PhenxId,
    /// The alternate sequence (ending in `symptom`) held by the patient.
    pub explained_by: SequenceId,
    pub correlation: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PostCovidReport {
    pub confirmed: Vec<ConfirmedSymptom>,
    pub excluded: Vec<ExcludedSymptom>,
}

/// Candidate (patient, symptom) pairs: symptoms following covid more than
/// once, with a bucket span of at least `min_persistence`.
pub fn extract_candidates(seqs: &[TemporalSequence], config: &PostCovidConfig) -> Vec<CandidateSymptom> {
    let covid = config.covid;
    // every sequence ending in something covid leads to, then only the covid-started ones
    let related = transitive_end_sequences(seqs, covid);
    let from_covid = filter_by_start(&related, covid);

    let mut groups: BTreeMap<(PatientId, PhenxId), Vec<Duration>> = BTreeMap::new();
    for s in &from_covid {
        let symptom = s.seq.end();
        if symptom == covid {
            continue;
        }
        groups.entry((s.patient, symptom)).or_default().push(s.duration);
    }

    groups
        .into_iter()
        .filter_map(|((patient, symptom), mut observations)| {
            if observations.len() < 2 {
                return None;
            }
            observations.sort_unstable();
            let min_bucket = config.bucket(observations[0]);
            let max_bucket = config.bucket(*observations.last().unwrap());
            (max_bucket - min_bucket >= config.min_persistence).then_some(CandidateSymptom {
                patient,
                symptom,
                observations,
                min_bucket,
                max_bucket,
            })
        })
        .collect()
}

/// Sorted, deduplicated patient list.
type Holders = Vec<PatientId>;

fn overlap(a: &[PatientId], b: &[PatientId]) -> u64 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

struct Correlation {
    phi: f64,
    p_value: f64,
}

/// Decisions for every candidate of one symptom.
fn judge_symptom(
    candidates: &[&CandidateSymptom],
    alternates: Option<&HashMap<SequenceId, Holders>>,
    cohort: u64,
    config: &PostCovidConfig,
) -> Vec<(usize, Option<ExcludedSymptom>)> {
    // (symptom, bucket) tuple -> candidate patients holding it
    let mut tuples: BTreeMap<u32, Holders> = BTreeMap::new();
    let candidate_buckets: Vec<BTreeSet<u32>> = candidates
        .iter()
        .map(|c| c.observations.iter().map(|&d| config.bucket(d)).collect())
        .collect();
    for (c, buckets) in candidates.iter().zip(&candidate_buckets) {
        for &b in buckets {
            tuples.entry(b).or_default().push(c.patient);
        }
    }
    for holders in tuples.values_mut() {
        holders.sort_unstable();
        holders.dedup();
    }

    let mut strong: HashMap<(SequenceId, u32), Correlation> = HashMap::new();
    if let Some(alternates) = alternates {
        for (&alt, alt_holders) in alternates {
            for (&bucket, tuple_holders) in &tuples {
                let table = Contingency2x2::from_counts(
                    cohort,
                    alt_holders.len() as u64,
                    tuple_holders.len() as u64,
                    overlap(alt_holders, tuple_holders),
                );
                let phi = table.phi();
                if phi < config.correlation_threshold {
                    continue;
                }
                let p_value = table.p_value();
                if p_value <= config.significance_alpha {
                    strong.insert((alt, bucket), Correlation { phi, p_value });
                }
            }
        }
    }

    candidates
        .iter()
        .zip(&candidate_buckets)
        .enumerate()
        .map(|(i, (c, buckets))| {
            let mut best: Option<(SequenceId, &Correlation)> = None;
            if let Some(alternates) = alternates {
                for ((alt, bucket), corr) in &strong {
                    if !buckets.contains(bucket) || alternates[alt].binary_search(&c.patient).is_err() {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some((b_alt, b_corr)) => {
                            corr.phi > b_corr.phi
                                || (corr.phi == b_corr.phi
                                    && (corr.p_value, *alt) < (b_corr.p_value, b_alt))
                        }
                    };
                    if better {
                        best = Some((*alt, corr));
                    }
                }
            }
            let excluded = best.map(|(alt, corr)| ExcludedSymptom {
                patient: c.patient,
                symptom: c.symptom,
                explained_by: alt,
                correlation: corr.phi,
                p_value: corr.p_value,
            });
            (i, excluded)
        })
        .collect()
}

/// Splits candidates into confirmed Post COVID-19 symptoms and those
/// explained by a correlated alternate sequence.
pub fn correlation_exclusion(
    seqs: &[TemporalSequence],
    candidates: &[CandidateSymptom],
    config: &PostCovidConfig,
) -> Result<PostCovidReport> {
    config.validate()?;
    if candidates.is_empty() {
        return Ok(PostCovidReport::default());
    }
    let cohort: BTreeSet<PatientId> = seqs.iter().map(|s| s.patient).collect();
    if cohort.len() < 2 {
        return Err(Error::DegenerateCohort(cohort.len()));
    }

    let mut symptoms = PhenxSet::default();
    for c in candidates {
        symptoms.insert(c.symptom);
    }
    // symptom -> alternate sequence -> holders
    let mut alternates: HashMap<PhenxId, HashMap<SequenceId, Holders>> = HashMap::new();
    for s in seqs {
        let (start, end) = (s.seq.start(), s.seq.end());
        if start == config.covid || start == end || !symptoms.contains(end) {
            continue;
        }
        alternates.entry(end).or_default().entry(s.seq).or_default().push(s.patient);
    }
    for per_symptom in alternates.values_mut() {
        for holders in per_symptom.values_mut() {
            holders.sort_unstable();
            holders.dedup();
        }
    }

    let mut by_symptom: BTreeMap<PhenxId, Vec<&CandidateSymptom>> = BTreeMap::new();
    for c in candidates {
        by_symptom.entry(c.symptom).or_default().push(c);
    }

    let decided: Vec<(CandidateSymptom, Option<ExcludedSymptom>)> = by_symptom
        .par_iter()
        .flat_map_iter(|(symptom, group)| {
            judge_symptom(group, alternates.get(symptom), cohort.len() as u64, config)
                .into_iter()
                .map(|(i, ex)| (group[i].clone(), ex))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut report = PostCovidReport::default();
    for (candidate, excluded) in decided {
        match excluded {
            Some(e) => report.excluded.push(e),
            None => report.confirmed.push(ConfirmedSymptom {
                patient: candidate.patient,
                symptom: candidate.symptom,
                observation_count: candidate.observations.len(),
                bucket_span: candidate.span(),
            }),
        }
    }
    report.confirmed.sort_by_key(|c| (c.patient, c.symptom));
    report.excluded.sort_by_key(|e| (e.patient, e.symptom));
    Ok(report)
}

/// Candidate extraction followed by correlation exclusion.
pub fn identify_post_covid(seqs: &[TemporalSequence], config: &PostCovidConfig) -> Result<PostCovidReport> {
    let candidates = extract_candidates(seqs, config);
    correlation_exclusion(seqs, &candidates, config)
}

pub fn write_confirmed_csv<W: Write>(sink: W, report: &PostCovidReport, lookups: &LookupTables) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["patient", "symptom", "observations", "bucket_span"])?;
    for c in &report.confirmed {
        w.write_record([
            lookups.patient_label(c.patient)?,
            lookups.phenx_label(c.symptom)?,
            &c.observation_count.to_string(),
            &c.bucket_span.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<confirmed.csv>", e))?;
    Ok(())
}

pub fn write_excluded_csv<W: Write>(sink: W, report: &PostCovidReport, lookups: &LookupTables) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "patient",
        "symptom",
        "alternate_start",
        "alternate_end",
        "phi",
        "p_value",
        "basis",
    ])?;
    for e in &report.excluded {
        w.write_record([
            lookups.patient_label(e.patient)?,
            lookups.phenx_label(e.symptom)?,
            lookups.phenx_label(e.explained_by.start())?,
            lookups.phenx_label(e.explained_by.end())?,
            &format!("{:.6}", e.correlation),
            &format!("{:.6e}", e.p_value),
            "correlation",
        ])?;
    }
    w.flush().map_err(|e| Error::io("<excluded.csv>", e))?;
    Ok(())
}
