//! Transitive temporal sequence mining for patient event tables.
//!
//! The pipeline: [`ingest`] a dbmart CSV into dense numeric ids, sort it
//! patient-major and [`miner`] every ordered event pair per patient together
//! with its duration, drop rare sequences with [`screening`], then
//! [`query`] or run the [`postcovid`] workflow on the result. [`chunker`]
//! splits large cohorts so each pass fits a record budget.

pub mod chunker;
pub mod error;
pub mod ingest;
pub mod miner;
pub mod model;
pub mod oracle;
pub mod postcovid;
pub mod query;
pub mod screening;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{LookupTables, RawDbMartRow};
pub use miner::{MinerConfig, MiningMode, WorkerCount};
pub use model::{
    decode_sequence, duration_in_unit, encode_sequence, pack_duration, unpack_duration, DbMartEntry,
    Duration, DurationUnit, EventDate, PatientId, PhenxId, SequenceId, TemporalSequence,
};
pub use screening::{CountMode, SparsityConfig};
