//! Transitive sequence mining.
//!
//! The dbmart is sorted by (patient, date) so every patient occupies one
//! contiguous block. Each event is paired with every later position in its
//! block, giving `n(n-1)/2` sequences for a block of `n` entries. Blocks are
//! independent, so workers take disjoint runs of blocks and write into
//! disjoint, pre-sized regions of a single output buffer.

pub mod store;

use std::fs;
use std::mem::MaybeUninit;
use std::num::NonZeroUsize;
use std::ops::Range;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{encode_unchecked, DbMartEntry, Duration, PatientId, PhenxId, TemporalSequence};
use store::{Manifest, ManifestEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MiningMode {
    #[default]
    InMemory,
    FileBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorkerCount {
    #[default]
    Auto,
    Fixed(NonZeroUsize),
}

impl WorkerCount {
    pub fn fixed(n: usize) -> Option<Self> {
        NonZeroUsize::new(n).map(WorkerCount::Fixed)
    }

    pub fn max() -> Self {
        WorkerCount::Fixed(std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN))
    }

    /// Runs `op` on a pool of the requested size, or on the ambient rayon
    /// pool for `Auto`.
    pub fn install<R: Send>(self, op: impl FnOnce() -> R + Send) -> Result<R> {
        match self {
            WorkerCount::Auto => Ok(op()),
            WorkerCount::Fixed(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n.get())
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
                Ok(pool.install(op))
            }
        }
    }

    fn threads(self) -> usize {
        match self {
            WorkerCount::Auto => rayon::current_num_threads(),
            WorkerCount::Fixed(n) => n.get(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinerConfig {
    pub mode: MiningMode,
    pub workers: WorkerCount,
    /// Destination for file-based mining.
    pub output_dir: Option<PathBuf>,
    /// When false, only pairs whose end date is strictly later are emitted.
    pub include_same_date_pairs: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            mode: MiningMode::InMemory,
            workers: WorkerCount::Auto,
            output_dir: None,
            include_same_date_pairs: true,
        }
    }
}

impl MinerConfig {
    pub fn file_based(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            mode: MiningMode::FileBased,
            output_dir: Some(output_dir.into()),
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, workers: WorkerCount) -> Self {
        self.workers = workers;
        self
    }
}

/// Stable sort by (patient, date).
pub fn sort_dbmart(entries: &mut [DbMartEntry]) {
    entries.par_sort_by_key(|e| (e.patient, e.date));
}

pub fn is_sorted(entries: &[DbMartEntry]) -> bool {
    entries
        .windows(2)
        .all(|w| (w[0].patient, w[0].date) <= (w[1].patient, w[1].date))
}

/// Index ranges of the per-patient blocks of a sorted dbmart.
pub fn patient_blocks(entries: &[DbMartEntry]) -> Vec<Range<usize>> {
    let mut blocks = Vec::new();
    let mut start = 0;
    for chunk in entries.chunk_by(|a, b| a.patient == b.patient) {
        blocks.push(start..start + chunk.len());
        start += chunk.len();
    }
    blocks
}

/// Distinct patients of a sorted dbmart, ascending.
pub fn patients_of(entries: &[DbMartEntry]) -> Vec<PatientId> {
    entries.chunk_by(|a, b| a.patient == b.patient).map(|c| c[0].patient).collect()
}

/// Exact number of sequences a date-sorted block yields.
pub fn block_sequence_count(block: &[DbMartEntry], include_same_date_pairs: bool) -> u64 {
    let n = block.len() as u64;
    let all = n * n.saturating_sub(1) / 2;
    if include_same_date_pairs {
        return all;
    }
    let same_day: u64 = block
        .chunk_by(|a, b| a.date == b.date)
        .map(|g| {
            let g = g.len() as u64;
            g * (g - 1) / 2
        })
        .sum();
    all - same_day
}

/// Per-worker buffers reused across blocks.
#[derive(Default)]
struct Scratch {
    codes: Vec<u32>,
    ranks: Vec<u32>,
    later: Vec<u32>,
    starts: Vec<usize>,
    ends: Vec<usize>,
    cursor: Vec<usize>,
    spill: Vec<u64>,
    keys: Vec<u64>,
}

/// Most distinct codes per patient for which (start rank, end rank, duration)
/// fits one u64 key.
const RANK_LIMIT: usize = 1 << 16;

/// Turns per-bucket counts (shifted by one) into bucket start offsets.
fn prefix_sum(counts: &mut [usize]) {
    for r in 1..counts.len() {
        counts[r] += counts[r - 1];
    }
}

/// Writes every (i < j) pair of the block into `out` (which must have exactly
/// [`block_sequence_count`] slots) in (seq, duration) order. Every slot is
/// initialised.
///
/// Codes are replaced by their rank within the patient. Ranks keep code
/// order, so (start rank, end rank, duration) order is the canonical order
/// and can be reached with counting passes instead of a comparison sort.
fn fill_block(
    block: &[DbMartEntry],
    include_same_date_pairs: bool,
    out: &mut [MaybeUninit<TemporalSequence>],
    scratch: &mut Scratch,
) {
    fill_block_with_limit(block, include_same_date_pairs, out, scratch, RANK_LIMIT);
}

fn fill_block_with_limit(
    block: &[DbMartEntry],
    include_same_date_pairs: bool,
    out: &mut [MaybeUninit<TemporalSequence>],
    scratch: &mut Scratch,
    rank_limit: usize,
) {
    let Some(first) = block.first() else { return };
    let s = scratch;
    s.codes.clear();
    s.codes.extend(block.iter().map(|e| e.phenx.0));
    s.codes.sort_unstable();
    s.codes.dedup();
    let k = s.codes.len();
    let codes = &s.codes;
    s.ranks.clear();
    s.ranks.extend(block.iter().map(|e| codes.binary_search(&e.phenx.0).unwrap_or_default() as u32));

    // index of the first partner of each event; nondecreasing
    s.later.clear();
    for (i, x) in block.iter().enumerate() {
        let mut j = i + 1;
        if !include_same_date_pairs {
            j += block[j..].partition_point(|e| e.date == x.date);
        }
        s.later.push(j as u32);
    }

    // bucket offsets by start rank
    s.starts.clear();
    s.starts.resize(k + 1, 0);
    for (&r, &l) in s.ranks.iter().zip(&s.later) {
        s.starts[r as usize + 1] += block.len() - l as usize;
    }
    prefix_sum(&mut s.starts);
    debug_assert_eq!(s.starts[k], out.len());

    s.keys.clear();
    s.keys.resize(out.len(), 0);
    if k <= rank_limit {
        sort_by_cells(block, s);
        for (slot, &key) in out.iter_mut().zip(&s.keys) {
            let start = PhenxId(s.codes[(key >> 48) as usize]);
            let end = PhenxId(s.codes[(key >> 32 & 0xffff) as usize]);
            slot.write(TemporalSequence::new(first.patient, encode_unchecked(start, end), Duration(key as u32)));
        }
    } else {
        sort_by_start(block, s);
        for (&start, w) in s.codes.iter().zip(s.starts.windows(2)) {
            for (slot, &key) in out[w[0]..w[1]].iter_mut().zip(&s.keys[w[0]..w[1]]) {
                let end = PhenxId(s.codes[(key >> 32) as usize]);
                let seq = encode_unchecked(PhenxId(start), end);
                slot.write(TemporalSequence::new(first.patient, seq, Duration(key as u32)));
            }
        }
    }
}

/// Fills `keys` with (start rank, end rank, duration) keys in ascending
/// order: bucket by end rank, then stably by start rank, then sort each
/// (start, end) cell by duration.
fn sort_by_cells(block: &[DbMartEntry], s: &mut Scratch) {
    let k = s.codes.len();
    s.ends.clear();
    s.ends.resize(k + 1, 0);
    for (j, &r) in s.ranks.iter().enumerate() {
        s.ends[r as usize + 1] += s.later.partition_point(|&l| l as usize <= j);
    }
    prefix_sum(&mut s.ends);

    s.spill.clear();
    s.spill.resize(s.keys.len(), 0);
    s.cursor.clear();
    s.cursor.extend_from_slice(&s.ends[..k]);
    for (i, x) in block.iter().enumerate() {
        let high = (s.ranks[i] as u64) << 48;
        let j = s.later[i] as usize;
        for (y, &rank) in block[j..].iter().zip(&s.ranks[j..]) {
            let at = &mut s.cursor[rank as usize];
            s.spill[*at] = high | (rank as u64) << 32 | x.date.days_until(y.date).0 as u64;
            *at += 1;
        }
    }

    s.cursor.clear();
    s.cursor.extend_from_slice(&s.starts[..k]);
    for &key in &s.spill {
        let at = &mut s.cursor[(key >> 48) as usize];
        s.keys[*at] = key;
        *at += 1;
    }
    for cell in s.keys.chunk_by_mut(|p, q| p >> 32 == q >> 32) {
        cell.sort_unstable();
    }
}

/// Fallback for patients with too many distinct codes to pack three fields:
/// one segment of (end rank, duration) keys per start rank, each segment
/// sorted on its own.
fn sort_by_start(block: &[DbMartEntry], s: &mut Scratch) {
    s.cursor.clear();
    s.cursor.extend_from_slice(&s.starts[..s.codes.len()]);
    for (i, x) in block.iter().enumerate() {
        let at = &mut s.cursor[s.ranks[i] as usize];
        let j = s.later[i] as usize;
        for (y, &rank) in block[j..].iter().zip(&s.ranks[j..]) {
            s.keys[*at] = (rank as u64) << 32 | x.date.days_until(y.date).0 as u64;
            *at += 1;
        }
    }
    for w in s.starts.windows(2) {
        s.keys[w[0]..w[1]].sort_unstable();
    }
}

/// All sequences of one patient's date-sorted block, in (seq, duration) order.
pub fn mine_sequences_for_patient(
    block: &[DbMartEntry],
    include_same_date_pairs: bool,
) -> Vec<TemporalSequence> {
    debug_assert!(block.windows(2).all(|w| w[0].patient == w[1].patient && w[0].date <= w[1].date));
    let mut out = Vec::new();
    mine_block_into(block, include_same_date_pairs, &mut out, &mut Scratch::default());
    out
}

/// Replaces the contents of `records` with the block's sequences.
fn mine_block_into(
    block: &[DbMartEntry],
    include_same_date_pairs: bool,
    records: &mut Vec<TemporalSequence>,
    scratch: &mut Scratch,
) {
    let n = block_sequence_count(block, include_same_date_pairs) as usize;
    records.clear();
    records.reserve(n);
    fill_block(block, include_same_date_pairs, &mut records.spare_capacity_mut()[..n], scratch);
    // SAFETY: fill_block initialises every slot of the slice it is given.
    unsafe { records.set_len(n) };
}

/// A contiguous run of patient blocks handled by one task.
struct WorkGroup {
    blocks: Range<usize>,
    records: usize,
}

/// Splits blocks into contiguous groups of roughly equal quadratic cost.
fn balance(counts: &[u64], threads: usize) -> Vec<WorkGroup> {
    let total: u64 = counts.iter().sum();
    let target = (total / (threads as u64 * 8).max(1)).max(1);
    let mut groups = Vec::new();
    let mut start = 0;
    let mut acc = 0u64;
    for (i, &c) in counts.iter().enumerate() {
        acc += c;
        if acc >= target {
            groups.push(WorkGroup {
                blocks: start..i + 1,
                records: acc as usize,
            });
            start = i + 1;
            acc = 0;
        }
    }
    if start < counts.len() {
        groups.push(WorkGroup {
            blocks: start..counts.len(),
            records: acc as usize,
        });
    }
    groups
}

fn block_counts(entries: &[DbMartEntry], blocks: &[Range<usize>], include_same: bool) -> Vec<u64> {
    blocks
        .par_iter()
        .map(|b| block_sequence_count(&entries[b.clone()], include_same))
        .collect()
}

/// Mines every patient of a sorted dbmart in memory. The result is in
/// canonical (patient, seq, duration) order and does not depend on the
/// worker count.
pub fn mine_all(entries: &[DbMartEntry], config: &MinerConfig) -> Result<Vec<TemporalSequence>> {
    debug_assert!(is_sorted(entries), "mine_all expects a sorted dbmart");
    config.workers.install(|| mine_all_in_pool(entries, config))?
}

fn mine_all_in_pool(entries: &[DbMartEntry], config: &MinerConfig) -> Result<Vec<TemporalSequence>> {
    let include_same = config.include_same_date_pairs;
    let blocks = patient_blocks(entries);
    let counts = block_counts(entries, &blocks, include_same);
    let predicted = counts
        .iter()
        .try_fold(0u64, |acc, &c| acc.checked_add(c))
        .ok_or(Error::ArithmeticOverflow)?;
    let max_records = (isize::MAX as u64) / std::mem::size_of::<TemporalSequence>() as u64;
    if predicted > max_records {
        return Err(Error::CapacityExceeded { predicted });
    }
    let total = predicted as usize;
    log::debug!("mining {} patients, {total} sequences", blocks.len());

    let mut out: Vec<TemporalSequence> = Vec::new();
    out.try_reserve_exact(total)
        .map_err(|_| Error::CapacityExceeded { predicted })?;

    let groups = balance(&counts, config.workers.threads());
    let mut tasks = Vec::with_capacity(groups.len());
    let mut rest = &mut out.spare_capacity_mut()[..total];
    for group in groups {
        let (head, tail) = rest.split_at_mut(group.records);
        tasks.push((group.blocks, head));
        rest = tail;
    }
    tasks.into_par_iter().for_each(|(range, slice)| {
        let mut offset = 0;
        let mut scratch = Scratch::default();
        for b in range {
            let n = counts[b] as usize;
            fill_block(&entries[blocks[b].clone()], include_same, &mut slice[offset..offset + n], &mut scratch);
            offset += n;
        }
    });
    // SAFETY: the groups tile 0..total and fill_block initialises every
    // slot of each block slice.
    unsafe { out.set_len(total) };
    Ok(out)
}

/// File-based mining: each patient's sequences go to `<patient>.tseq` in the
/// configured output directory, plus a `manifest.tsv`. Nothing is kept in
/// memory beyond one patient per worker. Partial outputs are removed on
/// failure.
pub fn mine_to_files(entries: &[DbMartEntry], config: &MinerConfig) -> Result<Manifest> {
    debug_assert!(is_sorted(entries), "mine_to_files expects a sorted dbmart");
    let dir = config
        .output_dir
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("file-based mining needs an output directory".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let include_same = config.include_same_date_pairs;
    let blocks = patient_blocks(entries);
    let paths: Vec<PathBuf> = blocks
        .iter()
        .map(|b| dir.join(store::patient_file_name(entries[b.start].patient)))
        .collect();

    let written = config.workers.install(|| {
        blocks
            .par_iter()
            .zip(paths.par_iter())
            .map_init(
                || (Vec::new(), Vec::new(), Scratch::default()),
                |(records, bytes, scratch), (block, path)| {
                    let block = &entries[block.clone()];
                    mine_block_into(block, include_same, records, scratch);
                    store::write_patient_file(path, records, bytes)?;
                    Ok(ManifestEntry {
                        patient: block[0].patient,
                        file: store::patient_file_name(block[0].patient),
                        record_count: records.len() as u64,
                    })
                },
            )
            .collect::<Result<Vec<_>>>()
    })?;

    let manifest = match written {
        Ok(entries) => Manifest { entries },
        Err(e) => {
            store::remove_quietly(&paths);
            return Err(e);
        }
    };
    if let Err(e) = manifest.write(dir) {
        store::remove_quietly(&paths);
        return Err(e);
    }
    Ok(manifest)
}

/// Mines according to `config.mode`: in memory, or to files followed by a
/// read-back. Either way the returned vector is canonical.
pub fn mine(entries: &[DbMartEntry], config: &MinerConfig) -> Result<Vec<TemporalSequence>> {
    match config.mode {
        MiningMode::InMemory => mine_all(entries, config),
        MiningMode::FileBased => {
            mine_to_files(entries, config)?;
            store::read_sequence_dir(config.output_dir.as_deref().expect("checked by mine_to_files"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{encode_sequence, Duration, EventDate, PhenxId, SequenceId};
    use proptest::prelude::*;

    fn entry(patient: u32, day: i32, phenx: u32) -> DbMartEntry {
        DbMartEntry {
            patient: PatientId(patient),
            date: EventDate::from_ymd(2020, 1, 1).unwrap().add_days(day),
            phenx: PhenxId(phenx),
        }
    }

    fn seq(a: u32, b: u32) -> SequenceId {
        encode_sequence(PhenxId(a), PhenxId(b)).unwrap()
    }

    #[test]
    fn hand_enumerated_block() {
        // A@d1, B@d3, A@d10
        let block = [entry(0, 1, 0), entry(0, 3, 1), entry(0, 10, 0)];
        let mut got = mine_sequences_for_patient(&block, true);
        got.sort();
        let mut want = vec![
            TemporalSequence::new(PatientId(0), seq(0, 1), Duration(2)),
            TemporalSequence::new(PatientId(0), seq(0, 0), Duration(9)),
            TemporalSequence::new(PatientId(0), seq(1, 0), Duration(7)),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn single_entry_yields_nothing() {
        assert!(mine_sequences_for_patient(&[entry(3, 0, 0)], true).is_empty());
        assert!(mine_sequences_for_patient(&[], true).is_empty());
    }

    #[test]
    fn four_hundred_entries() {
        let block: Vec<_> = (0..400).map(|i| entry(0, i, i as u32 % 17)).collect();
        assert_eq!(mine_sequences_for_patient(&block, true).len(), 79_800);
        assert_eq!(block_sequence_count(&block, true) * 5_000, 399_000_000);
    }

    #[test]
    fn same_date_pairs_can_be_dropped() {
        let block = [entry(0, 0, 1), entry(0, 0, 2), entry(0, 0, 3), entry(0, 5, 4)];
        assert_eq!(block_sequence_count(&block, true), 6);
        assert_eq!(block_sequence_count(&block, false), 3);
        let got = mine_sequences_for_patient(&block, false);
        assert_eq!(got.len(), 3);
        assert!(got.iter().all(|s| s.duration == Duration(5)));
    }

    #[test]
    fn sort_is_stable_and_idempotent() {
        let mut entries = vec![entry(1, 5, 0), entry(0, 2, 1), entry(1, 5, 2), entry(0, 2, 3), entry(0, 1, 4)];
        sort_dbmart(&mut entries);
        let phenx: Vec<u32> = entries.iter().map(|e| e.phenx.0).collect();
        assert_eq!(phenx, [4, 1, 3, 0, 2]);
        let again = {
            let mut e = entries.clone();
            sort_dbmart(&mut e);
            e
        };
        assert_eq!(again, entries);
    }

    #[test]
    fn reverse_sorted_matches_reference_sort() {
        let mut entries: Vec<_> = (0..200).rev().map(|i| entry(i / 10, (i % 10) as i32, i)).collect();
        let mut reference = entries.clone();
        reference.sort_by_key(|e| (e.patient, e.date));
        sort_dbmart(&mut entries);
        assert_eq!(entries, reference);
    }

    #[test]
    fn empty_input() {
        assert!(mine_all(&[], &MinerConfig::default()).unwrap().is_empty());
        let dir = tempfile::tempdir().unwrap();
        let manifest = mine_to_files(&[], &MinerConfig::file_based(dir.path())).unwrap();
        assert!(manifest.entries.is_empty());
    }

    #[test]
    fn file_sizes_follow_record_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries = vec![entry(0, 0, 1)];
        entries.extend((0..7).map(|i| entry(1, i, i as u32)));
        let manifest = mine_to_files(&entries, &MinerConfig::file_based(dir.path())).unwrap();
        assert_eq!(manifest.entries.len(), 2);
        assert_eq!(manifest.entries[0].record_count, 0);
        assert_eq!(manifest.entries[1].record_count, 21);
        assert_eq!(fs::metadata(dir.path().join("0.tseq")).unwrap().len(), 0);
        assert_eq!(fs::metadata(dir.path().join("1.tseq")).unwrap().len(), 12 * 21);
    }

    #[test]
    fn file_mode_requires_directory() {
        let config = MinerConfig {
            mode: MiningMode::FileBased,
            ..MinerConfig::default()
        };
        assert!(matches!(mine_to_files(&[], &config), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn io_failure_removes_partial_output() {
        let dir = tempfile::tempdir().unwrap();
        let entries: Vec<_> = (0..4).flat_map(|p| (0..3).map(move |d| entry(p, d, 0))).collect();
        // a directory squatting on one patient's file name makes that write fail
        fs::create_dir(dir.path().join("2.tseq")).unwrap();
        let err = mine_to_files(&entries, &MinerConfig::file_based(dir.path())).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
        let left: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(left, ["2.tseq"]);
    }

    fn arb_dbmart() -> impl Strategy<Value = Vec<DbMartEntry>> {
        prop::collection::vec((0u32..8, 0i32..30, 0u32..6), 0..120)
            .prop_map(|v| v.into_iter().map(|(p, d, x)| entry(p, d, x)).collect())
    }

    fn fill_with_limit(block: &[DbMartEntry], include_same: bool, rank_limit: usize) -> Vec<TemporalSequence> {
        let n = block_sequence_count(block, include_same) as usize;
        let mut out = Vec::with_capacity(n);
        fill_block_with_limit(block, include_same, &mut out.spare_capacity_mut()[..n], &mut Scratch::default(), rank_limit);
        // SAFETY: every slot is written by fill_block_with_limit
        unsafe { out.set_len(n) };
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn both_fill_strategies_match_sorted_nested_loop(
            mut entries in arb_dbmart(),
            include_same in any::<bool>(),
        ) {
            sort_dbmart(&mut entries);
            for b in patient_blocks(&entries) {
                let block = &entries[b];
                let mut want = Vec::new();
                for (i, x) in block.iter().enumerate() {
                    for y in &block[i + 1..] {
                        if include_same || y.date > x.date {
                            want.push(TemporalSequence::new(
                                x.patient,
                                encode_sequence(x.phenx, y.phenx).unwrap(),
                                x.date.days_until(y.date),
                            ));
                        }
                    }
                }
                want.sort();
                prop_assert_eq!(&fill_with_limit(block, include_same, RANK_LIMIT), &want);
                prop_assert_eq!(&fill_with_limit(block, include_same, 0), &want);
            }
        }

        #[test]
        fn per_patient_count_and_ordering(mut entries in arb_dbmart()) {
            sort_dbmart(&mut entries);
            for b in patient_blocks(&entries) {
                let block = &entries[b];
                let n = block.len();
                let seqs = mine_sequences_for_patient(block, true);
                prop_assert_eq!(seqs.len(), n * (n - 1) / 2);
                prop_assert_eq!(seqs.len() as u64, block_sequence_count(block, true));
                let strict = mine_sequences_for_patient(block, false);
                prop_assert_eq!(strict.len() as u64, block_sequence_count(block, false));
                prop_assert!(strict.iter().all(|s| s.duration.0 > 0));
            }
        }

        #[test]
        fn worker_count_does_not_change_output(mut entries in arb_dbmart()) {
            sort_dbmart(&mut entries);
            let one = mine_all(&entries, &MinerConfig::default().with_workers(WorkerCount::fixed(1).unwrap())).unwrap();
            let three = mine_all(&entries, &MinerConfig::default().with_workers(WorkerCount::fixed(3).unwrap())).unwrap();
            prop_assert!(one.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(one, three);
        }

        #[test]
        fn file_mode_matches_memory_mode(mut entries in arb_dbmart()) {
            sort_dbmart(&mut entries);
            let dir = tempfile::tempdir().unwrap();
            let memory = mine_all(&entries, &MinerConfig::default()).unwrap();
            let files = mine(&entries, &MinerConfig::file_based(dir.path())).unwrap();
            prop_assert_eq!(memory, files);
        }
    }
}
