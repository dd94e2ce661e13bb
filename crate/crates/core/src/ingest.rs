//! dbmart CSV ingestion, reversible lookup tables and translation back to
//! the original labels.
//!
//! A dbmart has one event per row with the columns `patient_num`,
//! `start_date` (ISO 8601) and `phenx`. Other columns, including the usual
//! `description`, are ignored. Patients and phenX codes receive dense ids in
//! first-appearance order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    DbMartEntry, EventDate, PatientId, PhenxId, TemporalSequence, PHENX_LIMIT,
};

pub const PATIENT_COLUMN: &str = "patient_num";
pub const DATE_COLUMN: &str = "start_date";
pub const PHENX_COLUMN: &str = "phenx";
pub const DESCRIPTION_COLUMN: &str = "description";

pub const PHENX_LOOKUP_FILE: &str = "phenx_lookup.tsv";
pub const PATIENT_LOOKUP_FILE: &str = "patient_lookup.tsv";

/// A dbmart row before numeric conversion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDbMartRow {
    pub patient_label: String,
    pub date_text: String,
    pub phenx_label: String,
    pub description: Option<String>,
}

/// One direction of a lookup table: label <-> dense id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Interner {
    ids: HashMap<String, u32>,
    labels: Vec<String>,
}

impl Interner {
    fn get_or_insert(&mut self, label: &str, limit: u32) -> Option<u32> {
        if let Some(&id) = self.ids.get(label) {
            return Some(id);
        }
        let id = self.labels.len() as u32;
        if id >= limit {
            return None;
        }
        self.ids.insert(label.to_owned(), id);
        self.labels.push(label.to_owned());
        Some(id)
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LookupTables {
    phenx: Interner,
    patients: Interner,
}

impl LookupTables {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_phenx(&mut self, label: &str) -> Result<PhenxId> {
        self.phenx
            .get_or_insert(label, PHENX_LIMIT)
            .map(PhenxId)
            .ok_or(Error::PhenxOverflow { limit: PHENX_LIMIT })
    }

    pub fn intern_patient(&mut self, label: &str) -> Result<PatientId> {
        // u32::MAX stays free for the screening sentinel.
        self.patients
            .get_or_insert(label, PatientId::SENTINEL.0)
            .map(PatientId)
            .ok_or(Error::PatientOverflow)
    }

    pub fn phenx_id(&self, label: &str) -> Option<PhenxId> {
        self.phenx.ids.get(label).copied().map(PhenxId)
    }

    pub fn patient_id(&self, label: &str) -> Option<PatientId> {
        self.patients.ids.get(label).copied().map(PatientId)
    }

    pub fn phenx_label(&self, id: PhenxId) -> Result<&str> {
        self.phenx
            .labels
            .get(id.index())
            .map(String::as_str)
            .ok_or(Error::UnknownId {
                kind: "phenX",
                id: id.0 as u64,
            })
    }

    pub fn patient_label(&self, id: PatientId) -> Result<&str> {
        self.patients
            .labels
            .get(id.index())
            .map(String::as_str)
            .ok_or(Error::UnknownId {
                kind: "patient",
                id: id.0 as u64,
            })
    }

    pub fn phenx_count(&self) -> usize {
        self.phenx.len()
    }

    pub fn patient_count(&self) -> usize {
        self.patients.len()
    }

    pub fn phenx_labels(&self) -> &[String] {
        &self.phenx.labels
    }

    pub fn patient_labels(&self) -> &[String] {
        &self.patients.labels
    }

    /// Writes `phenx_lookup.tsv` and `patient_lookup.tsv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        write_lookup(&dir.join(PHENX_LOOKUP_FILE), &self.phenx.labels)?;
        write_lookup(&dir.join(PATIENT_LOOKUP_FILE), &self.patients.labels)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        Ok(Self {
            phenx: read_lookup(&dir.join(PHENX_LOOKUP_FILE), PHENX_LIMIT)?,
            patients: read_lookup(&dir.join(PATIENT_LOOKUP_FILE), PatientId::SENTINEL.0)?,
        })
    }
}

fn write_lookup(path: &Path, labels: &[String]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|l| l.contains(['\t', '\n', '\r'])) {
        return Err(Error::InvalidLabel(bad.clone()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let body = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "original\tnumeric_id")?;
        for (id, label) in labels.iter().enumerate() {
            writeln!(out, "{label}\t{id}")?;
        }
        out.flush()
    };
    body(&mut out).map_err(|e| Error::io(path, e))
}

fn read_lookup(path: &Path, limit: u32) -> Result<Interner> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let malformed = |message: String| Error::MalformedFile {
        path: path.to_owned(),
        message,
    };
    let mut pairs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if lineno == 0 {
            if line != "original\tnumeric_id" {
                return Err(malformed(format!("unexpected header `{line}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (label, id) = line
            .rsplit_once('\t')
            .ok_or_else(|| malformed(format!("line {}: missing tab", lineno + 1)))?;
        let id: u32 = id
            .parse()
            .map_err(|_| malformed(format!("line {}: bad id `{id}`", lineno + 1)))?;
        pairs.push((id, label.to_owned()));
    }
    pairs.sort_unstable_by_key(|(id, _)| *id);
    let mut interner = Interner::default();
    for (expected, (id, label)) in pairs.into_iter().enumerate() {
        if id as usize != expected {
            return Err(malformed(format!("ids are not dense at {id}")));
        }
        if interner.get_or_insert(&label, limit) != Some(id) {
            return Err(malformed(format!("duplicate label `{label}`")));
        }
    }
    Ok(interner)
}

struct ColumnIndex {
    patient: usize,
    date: usize,
    phenx: usize,
    description: Option<usize>,
}

impl ColumnIndex {
    fn from_headers(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
        Ok(Self {
            patient: find(PATIENT_COLUMN).ok_or(Error::MissingColumn(PATIENT_COLUMN))?,
            date: find(DATE_COLUMN).ok_or(Error::MissingColumn(DATE_COLUMN))?,
            phenx: find(PHENX_COLUMN).ok_or(Error::MissingColumn(PHENX_COLUMN))?,
            description: find(DESCRIPTION_COLUMN),
        })
    }
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source)
}

fn row_number(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn field<'r>(record: &'r csv::StringRecord, idx: usize, name: &str) -> Result<&'r str> {
    record.get(idx).ok_or_else(|| Error::MalformedRow {
        row: row_number(record),
        message: format!("missing value for `{name}`"),
    })
}

/// Reads the dbmart without numeric conversion (used by the naive miner).
pub fn read_raw_rows<R: Read>(source: R) -> Result<Vec<RawDbMartRow>> {
    let mut reader = csv_reader(source);
    let columns = ColumnIndex::from_headers(reader.headers()?)?;
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let date_text = field(&record, columns.date, DATE_COLUMN)?;
        if EventDate::parse_iso(date_text).is_none() {
            return Err(Error::MalformedDate {
                row: row_number(&record),
                text: date_text.to_owned(),
            });
        }
        rows.push(RawDbMartRow {
            patient_label: field(&record, columns.patient, PATIENT_COLUMN)?.to_owned(),
            date_text: date_text.to_owned(),
            phenx_label: field(&record, columns.phenx, PHENX_COLUMN)?.to_owned(),
            description: columns
                .description
                .and_then(|i| record.get(i))
                .map(str::to_owned),
        });
    }
    Ok(rows)
}

/// Parses a dbmart CSV into numeric entries (input order preserved) plus the
/// lookup tables needed to translate them back.
pub fn parse_dbmart<R: Read>(source: R) -> Result<(Vec<DbMartEntry>, LookupTables)> {
    parse_dbmart_with(source, LookupTables::new())
}

/// Like [`parse_dbmart`], but starts from existing lookup tables: known
/// labels keep their ids and new ones are appended.
pub fn parse_dbmart_with<R: Read>(source: R, mut lookups: LookupTables) -> Result<(Vec<DbMartEntry>, LookupTables)> {
    let mut reader = csv_reader(source);
    let columns = ColumnIndex::from_headers(reader.headers()?)?;
    let mut entries = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record)? {
        let date_text = field(&record, columns.date, DATE_COLUMN)?;
        let date = EventDate::parse_iso(date_text).ok_or_else(|| Error::MalformedDate {
            row: row_number(&record),
            text: date_text.to_owned(),
        })?;
        let patient = lookups.intern_patient(field(&record, columns.patient, PATIENT_COLUMN)?)?;
        let phenx = lookups.intern_phenx(field(&record, columns.phenx, PHENX_COLUMN)?)?;
        entries.push(DbMartEntry {
            patient,
            date,
            phenx,
        });
    }
    Ok((entries, lookups))
}

pub fn parse_dbmart_file(path: &Path, lookups: LookupTables) -> Result<(Vec<DbMartEntry>, LookupTables)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dbmart_with(BufReader::with_capacity(1 << 20, file), lookups)
}

pub fn read_raw_rows_file(path: &Path) -> Result<Vec<RawDbMartRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_raw_rows(BufReader::with_capacity(1 << 20, file))
}

/// Writes entries back out as a dbmart CSV using the original labels.
pub fn write_dbmart<W: Write>(sink: W, entries: &[DbMartEntry], lookups: &LookupTables) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record([PATIENT_COLUMN, DATE_COLUMN, PHENX_COLUMN])?;
    for entry in entries {
        writer.write_record([
            lookups.patient_label(entry.patient)?,
            &entry.date.to_string(),
            lookups.phenx_label(entry.phenx)?,
        ])?;
    }
    writer.flush().map_err(|e| Error::io("<dbmart output>", e))?;
    Ok(())
}

/// A mined sequence with its original labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TranslatedSequence {
    pub patient: String,
    pub start_phenx: String,
    pub end_phenx: String,
    pub duration_days: u32,
}

pub fn translate_sequence(seq: &TemporalSequence, lookups: &LookupTables) -> Result<TranslatedSequence> {
    let (start, end) = crate::model::decode_sequence(seq.seq)?;
    Ok(TranslatedSequence {
        patient: lookups.patient_label(seq.patient)?.to_owned(),
        start_phenx: lookups.phenx_label(start)?.to_owned(),
        end_phenx: lookups.phenx_label(end)?.to_owned(),
        duration_days: seq.duration.days(),
    })
}

pub fn translate_sequences(
    seqs: &[TemporalSequence],
    lookups: &LookupTables,
) -> Result<Vec<TranslatedSequence>> {
    seqs.iter().map(|s| translate_sequence(s, lookups)).collect()
}

/// Streams translated sequences as CSV
/// (`patient,start_phenx,end_phenx,duration_days`).
pub fn write_translated_csv<W: Write>(
    sink: W,
    seqs: &[TemporalSequence],
    lookups: &LookupTables,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["patient", "start_phenx", "end_phenx", "duration_days"])?;
    for seq in seqs {
        let (start, end) = crate::model::decode_sequence(seq.seq)?;
        writer.write_record([
            lookups.patient_label(seq.patient)?,
            lookups.phenx_label(start)?,
            lookups.phenx_label(end)?,
            &seq.duration.days().to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Keeps only the earliest entry of every (patient, phenX) pair; ties go to
/// the entry that appears first. Survivors keep their relative order.
pub fn first_occurrence_filter(entries: &[DbMartEntry]) -> Vec<DbMartEntry> {
    let mut earliest: HashMap<(PatientId, PhenxId), (EventDate, usize)> =
        HashMap::with_capacity(entries.len());
    for (idx, e) in entries.iter().enumerate() {
        earliest
            .entry((e.patient, e.phenx))
            .and_modify(|best| {
                if e.date < best.0 {
                    *best = (e.date, idx);
                }
            })
            .or_insert((e.date, idx));
    }
    let mut keep = vec![false; entries.len()];
    for (_, idx) in earliest.into_values() {
        keep[idx] = true;
    }
    entries
        .iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(*e))
        .collect()
}
