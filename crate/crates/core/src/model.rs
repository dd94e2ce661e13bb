//! Numeric domain types and the sequence-id / duration encodings.
//!
//! A sequence id stores an ordered phenX pair as `start * 10^7 + end`, so the
//! decimal representation reads as the start code followed by the seven-digit,
//! zero-padded end code. Both parts come back with one division.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Exclusive upper bound on phenX ids (seven decimal digits).
pub const PHENX_LIMIT: u32 = 10_000_000;

/// Multiplier that shifts the start phenX past the seven end digits.
pub const SEQUENCE_BASE: u64 = PHENX_LIMIT as u64;

/// Exclusive upper bound on valid sequence ids.
pub const SEQUENCE_LIMIT: u64 = SEQUENCE_BASE * SEQUENCE_BASE;

/// Widest duration bucket that still keeps a packed key below 2^63.
pub const MAX_BUCKET_BITS: u32 = 16;

/// Bucket width used by duration-aware screening unless configured otherwise.
pub const DEFAULT_BUCKET_BITS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PhenxId(pub u32);

impl PhenxId {
    pub fn new(value: u32) -> Result<Self> {
        if value >= PHENX_LIMIT {
            return Err(Error::EncodingOverflow(value));
        }
        Ok(Self(value))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PhenxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PatientId(pub u32);

impl PatientId {
    /// Reserved marker for records condemned by sparsity screening. Never
    /// assigned to a real patient.
    pub const SENTINEL: PatientId = PatientId(u32::MAX);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_sentinel(self) -> bool {
        self == Self::SENTINEL
    }
}

impl fmt::Display for PatientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Calendar date stored as a day number (days since 0001-01-01, day 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EventDate(i32);

impl EventDate {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(Self::from)
    }

    /// Parses a strict ISO 8601 calendar date (`YYYY-MM-DD`).
    pub fn parse_iso(text: &str) -> Option<Self> {
        let text = text.trim();
        // chrono accepts unpadded fields; insist on the canonical shape.
        let bytes = text.as_bytes();
        if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
            return None;
        }
        NaiveDate::parse_from_str(text, "%Y-%m-%d")
            .ok()
            .map(Self::from)
    }

    pub fn day_number(self) -> i32 {
        self.0
    }

    pub fn add_days(self, days: i32) -> Self {
        Self(self.0 + days)
    }

    pub fn to_naive(self) -> NaiveDate {
        NaiveDate::from_num_days_from_ce_opt(self.0).expect("EventDate always holds a valid date")
    }

    /// Whole days from `self` to `later`; `later` must not precede `self`.
    pub fn days_until(self, later: EventDate) -> Duration {
        debug_assert!(later >= self);
        Duration((later.0 - self.0) as u32)
    }
}

impl From<NaiveDate> for EventDate {
    fn from(date: NaiveDate) -> Self {
        Self(date.num_days_from_ce())
    }
}

impl fmt::Display for EventDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_naive().format("%Y-%m-%d"))
    }
}

/// One numeric dbmart row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DbMartEntry {
    pub patient: PatientId,
    pub date: EventDate,
    pub phenx: PhenxId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SequenceId(pub u64);

impl SequenceId {
    pub fn start(self) -> PhenxId {
        PhenxId((self.0 / SEQUENCE_BASE) as u32)
    }

    pub fn end(self) -> PhenxId {
        PhenxId((self.0 % SEQUENCE_BASE) as u32)
    }
}

impl fmt::Display for SequenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Duration(pub u32);

impl Duration {
    pub fn days(self) -> u32 {
        self.0
    }
}

/// A mined (start -> end) pair for one patient.
///
/// Field order gives the derived ordering `(patient, seq, duration)`, which is
/// the canonical order of every mined or screened output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TemporalSequence {
    pub patient: PatientId,
    pub seq: SequenceId,
    pub duration: Duration,
}

impl TemporalSequence {
    pub fn new(patient: PatientId, seq: SequenceId, duration: Duration) -> Self {
        Self {
            patient,
            seq,
            duration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DurationUnit {
    #[default]
    Days,
    Weeks,
    Months,
    Years,
}

impl DurationUnit {
    pub fn divisor(self) -> u32 {
        match self {
            DurationUnit::Days => 1,
            DurationUnit::Weeks => 7,
            DurationUnit::Months => 30,
            DurationUnit::Years => 365,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DurationUnit::Days => "days",
            DurationUnit::Weeks => "weeks",
            DurationUnit::Months => "months",
            DurationUnit::Years => "years",
        }
    }
}

impl fmt::Display for DurationUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DurationUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "days" | "day" | "d" => Ok(DurationUnit::Days),
            "weeks" | "week" | "w" => Ok(DurationUnit::Weeks),
            "months" | "month" | "m" => Ok(DurationUnit::Months),
            "years" | "year" | "y" => Ok(DurationUnit::Years),
            other => Err(Error::InvalidConfig(format!("unknown duration unit `{other}`"))),
        }
    }
}

pub fn encode_sequence(start: PhenxId, end: PhenxId) -> Result<SequenceId> {
    if start.0 >= PHENX_LIMIT {
        return Err(Error::EncodingOverflow(start.0));
    }
    if end.0 >= PHENX_LIMIT {
        return Err(Error::EncodingOverflow(end.0));
    }
    Ok(encode_unchecked(start, end))
}

/// Hot-loop variant of [`encode_sequence`]. Callers guarantee both ids are
/// below [`PHENX_LIMIT`], which lookup-table construction enforces.
#[inline(always)]
pub(crate) fn encode_unchecked(start: PhenxId, end: PhenxId) -> SequenceId {
    debug_assert!(start.0 < PHENX_LIMIT && end.0 < PHENX_LIMIT);
    SequenceId(start.0 as u64 * SEQUENCE_BASE + end.0 as u64)
}

pub fn decode_sequence(seq: SequenceId) -> Result<(PhenxId, PhenxId)> {
    if seq.0 >= SEQUENCE_LIMIT {
        return Err(Error::DecodingOutOfRange(seq.0));
    }
    Ok((seq.start(), seq.end()))
}

/// Shifts the sequence id left by `bucket_bits` and stores the (saturated)
/// duration bucket in the freed low bits.
pub fn pack_duration(seq: SequenceId, bucket: u64, bucket_bits: u32) -> Result<u64> {
    if bucket_bits > MAX_BUCKET_BITS {
        return Err(Error::PackOverflow(bucket_bits));
    }
    if seq.0 >= SEQUENCE_LIMIT {
        return Err(Error::DecodingOutOfRange(seq.0));
    }
    Ok(pack_unchecked(seq, bucket, bucket_bits))
}

#[inline(always)]
pub(crate) fn pack_unchecked(seq: SequenceId, bucket: u64, bucket_bits: u32) -> u64 {
    let max_bucket = (1u64 << bucket_bits) - 1;
    (seq.0 << bucket_bits) | bucket.min(max_bucket)
}

pub fn unpack_duration(packed: u64, bucket_bits: u32) -> Result<(SequenceId, u64)> {
    if bucket_bits > MAX_BUCKET_BITS {
        return Err(Error::PackOverflow(bucket_bits));
    }
    let mask = (1u64 << bucket_bits) - 1;
    Ok((SequenceId(packed >> bucket_bits), packed & mask))
}

pub fn duration_in_unit(duration: Duration, unit: DurationUnit) -> u32 {
    duration.0 / unit.divisor()
}
