//! `.tseq` files: one per patient, a flat run of 12-byte little-endian
//! records (`u64` sequence id, then `u32` duration in days). The patient id
//! lives in the file name and in `manifest.tsv`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Duration, PatientId, SequenceId, TemporalSequence};

pub const RECORD_SIZE: usize = 12;
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const FILE_EXTENSION: &str = "tseq";
const MANIFEST_HEADER: &str = "patient_id\tfile\trecord_count";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub patient: PatientId,
    pub file: String,
    pub record_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn total_records(&self) -> u64 {
        self.entries.iter().map(|e| e.record_count).sum()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        let body = |out: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(out, "{MANIFEST_HEADER}")?;
            for e in &self.entries {
                writeln!(out, "{}\t{}\t{}", e.patient, e.file, e.record_count)?;
            }
            out.flush()
        };
        body(&mut out).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let malformed = |message: String| Error::MalformedFile {
            path: path.clone(),
            message,
        };
        let mut entries = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if lineno == 0 {
                if line != MANIFEST_HEADER {
                    return Err(malformed(format!("unexpected header `{line}`")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(patient), Some(name), Some(count), None) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(malformed(format!("line {}: expected three columns", lineno + 1)));
            };
            let bad = |what: &str| malformed(format!("line {}: bad {what}", lineno + 1));
            entries.push(ManifestEntry {
                patient: PatientId(patient.parse().map_err(|_| bad("patient id"))?),
                file: name.to_owned(),
                record_count: count.parse().map_err(|_| bad("record count"))?,
            });
        }
        Ok(Self { entries })
    }
}

pub fn patient_file_name(patient: PatientId) -> String {
    format!("{}.{FILE_EXTENSION}", patient.0)
}

pub fn encode_records(seqs: &[TemporalSequence], buf: &mut Vec<u8>) {
    buf.clear();
    buf.reserve(seqs.len() * RECORD_SIZE);
    for s in seqs {
        buf.extend_from_slice(&s.seq.0.to_le_bytes());
        buf.extend_from_slice(&s.duration.0.to_le_bytes());
    }
}

pub fn decode_records(patient: PatientId, bytes: &[u8]) -> Option<Vec<TemporalSequence>> {
    if bytes.len() % RECORD_SIZE != 0 {
        return None;
    }
    Some(
        bytes
            .chunks_exact(RECORD_SIZE)
            .map(|r| {
                let seq = u64::from_le_bytes(r[..8].try_into().unwrap());
                let days = u32::from_le_bytes(r[8..].try_into().unwrap());
                TemporalSequence::new(patient, SequenceId(seq), Duration(days))
            })
            .collect(),
    )
}

pub fn write_patient_file(path: &Path, seqs: &[TemporalSequence], buf: &mut Vec<u8>) -> Result<()> {
    encode_records(seqs, buf);
    fs::write(path, &buf[..]).map_err(|e| Error::io(path, e))
}

pub fn read_patient_file(path: &Path, patient: PatientId) -> Result<Vec<TemporalSequence>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_records(patient, &bytes).ok_or_else(|| Error::MalformedFile {
        path: path.to_owned(),
        message: format!("length {} is not a multiple of {RECORD_SIZE}", bytes.len()),
    })
}

/// Reads every file listed in the manifest, in manifest order.
pub fn read_sequence_dir(dir: &Path) -> Result<Vec<TemporalSequence>> {
    let manifest = Manifest::read(dir)?;
    let mut out = Vec::with_capacity(manifest.total_records() as usize);
    for entry in &manifest.entries {
        let path = dir.join(&entry.file);
        let records = read_patient_file(&path, entry.patient)?;
        if records.len() as u64 != entry.record_count {
            return Err(Error::MalformedFile {
                path,
                message: format!(
                    "holds {} records, manifest says {}",
                    records.len(),
                    entry.record_count
                ),
            });
        }
        out.extend(records);
    }
    Ok(out)
}

/// Writes canonically ordered sequences as one file per patient. `patients`
/// lists every patient to emit (those without sequences get empty files) in
/// ascending order.
pub fn persist_sequences(
    dir: &Path,
    seqs: &[TemporalSequence],
    patients: &[PatientId],
) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(patients.len());
    let result = persist_inner(dir, seqs, patients, &mut written);
    if result.is_err() {
        remove_quietly(&written);
    }
    result
}

fn persist_inner(
    dir: &Path,
    seqs: &[TemporalSequence],
    patients: &[PatientId],
    written: &mut Vec<PathBuf>,
) -> Result<Manifest> {
    let mut manifest = Manifest::default();
    let mut buf = Vec::new();
    let mut rest = seqs;
    for &patient in patients {
        let run = rest.partition_point(|s| s.patient <= patient);
        let (mine, tail) = rest.split_at(run);
        if mine.iter().any(|s| s.patient != patient) {
            return Err(Error::InvalidConfig(format!(
                "sequences are not in canonical order around patient {patient}"
            )));
        }
        rest = tail;
        let file = patient_file_name(patient);
        let path = dir.join(&file);
        written.push(path.clone());
        write_patient_file(&path, mine, &mut buf)?;
        manifest.entries.push(ManifestEntry {
            patient,
            file,
            record_count: mine.len() as u64,
        });
    }
    if let Some(s) = rest.first() {
        return Err(Error::InvalidConfig(format!(
            "patient {} has sequences but is not in the patient list",
            s.patient
        )));
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    written.push(manifest_path);
    manifest.write(dir)?;
    Ok(manifest)
}

pub(crate) fn remove_quietly(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}
