//! Seeded synthetic dbmart generator.
//!
//! Per patient, the number of events is Poisson-distributed around the
//! configured mean (at least one), dates are uniform over the span and codes
//! are uniform over the pool. Codes and patients are interned in emission
//! order, so writing the result as CSV and parsing it back reproduces the
//! same ids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::ingest::LookupTables;
use crate::model::{DbMartEntry, EventDate, PHENX_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub patients: u32,
    pub avg_entries: u32,
    pub distinct_phenx: u32,
    pub date_span_days: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            patients: 100,
            avg_entries: 50,
            distinct_phenx: 500,
            date_span_days: 3_650,
            seed: 42,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("patients", self.patients),
            ("avg_entries", self.avg_entries),
            ("distinct_phenx", self.distinct_phenx),
            ("date_span_days", self.date_span_days),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if self.distinct_phenx >= PHENX_LIMIT {
            return Err(Error::PhenxOverflow { limit: PHENX_LIMIT });
        }
        Ok(())
    }
}

pub fn patient_label(i: u32) -> String {
    format!("patient_{i:06}")
}

pub fn phenx_label(code: u32) -> String {
    format!("C{code:05}")
}

pub fn generate(config: &SynthConfig) -> Result<(Vec<DbMartEntry>, LookupTables)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let counts = Poisson::new(config.avg_entries as f64)
        .map_err(|e| Error::InvalidConfig(format!("entry distribution: {e}")))?;
    let origin = EventDate::from_ymd(2015, 1, 1).expect("valid date");

    let mut lookups = LookupTables::new();
    let mut entries = Vec::with_capacity(config.patients as usize * config.avg_entries as usize);
    for p in 0..config.patients {
        let patient = lookups.intern_patient(&patient_label(p))?;
        let n = (counts.sample(&mut rng) as u64).max(1);
        for _ in 0..n {
            let day = rng.random_range(0..config.date_span_days) as i32;
            let code = rng.random_range(0..config.distinct_phenx);
            let phenx = lookups.intern_phenx(&phenx_label(code))?;
            entries.push(DbMartEntry {
                patient,
                date: origin.add_days(day),
                phenx,
            });
        }
    }
    Ok((entries, lookups))
}
