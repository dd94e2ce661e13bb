//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration as WallTime, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tseq_core::chunker::{entries_per_patient, estimate_sequence_count, plan_chunks, chunk_slices};
use tseq_core::ingest::{parse_dbmart, read_raw_rows, write_dbmart};
use tseq_core::miner::store::{encode_records, read_patient_file, write_patient_file, Manifest};
use tseq_core::miner::{mine, mine_all, patient_blocks, sort_dbmart, MinerConfig};
use tseq_core::oracle::{encode_naive, naive_mine, naive_sparsity_screen};
use tseq_core::postcovid::{identify_post_covid, PostCovidConfig};
use tseq_core::screening::sparsity_screen;
use tseq_core::stats::Contingency2x2;
use tseq_core::synth::{generate, SynthConfig};
use tseq_core::{
    decode_sequence, encode_sequence, pack_duration, unpack_duration, DbMartEntry, Duration, EventDate,
    PatientId, PhenxId, SequenceId, SparsityConfig, TemporalSequence, WorkerCount,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn count_formula() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let origin = EventDate::from_ymd(2020, 1, 1).unwrap();
    let sizes: Vec<u64> = (0..200).map(|_| rng.random_range(0..=60)).collect();
    let mut entries = Vec::new();
    for (p, &n) in sizes.iter().enumerate() {
        for _ in 0..n {
            entries.push(DbMartEntry {
                patient: PatientId(p as u32),
                date: origin.add_days(rng.random_range(0..400)),
                phenx: PhenxId(rng.random_range(0..50)),
            });
        }
    }
    sort_dbmart(&mut entries);
    let mined = mine_all(&entries, &MinerConfig::default()).map_err(err)?;
    let mut per_patient = vec![0u64; sizes.len()];
    for s in &mined {
        per_patient[s.patient.index()] += 1;
    }
    for (p, (&n, &got)) in sizes.iter().zip(&per_patient).enumerate() {
        ensure(got == n * n.saturating_sub(1) / 2, || format!("patient {p}: n={n}, mined {got}"))?;
    }
    let elapsed = t0.elapsed();
    ensure(elapsed < WallTime::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("200 patients, {} sequences, {elapsed:?}", mined.len()))
}

fn encoding_round_trip() -> Outcome {
    let max = PhenxId(9_999_999);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let corners = [(PhenxId(0), PhenxId(0)), (PhenxId(0), max), (max, PhenxId(0)), (max, max)];
    let random = (0..1_000_000).map(|_| (PhenxId(rng.random_range(0..10_000_000)), PhenxId(rng.random_range(0..10_000_000))));
    let mut samples = Vec::new();
    for (a, b) in corners.into_iter().chain(random) {
        let seq = encode_sequence(a, b).map_err(err)?;
        let back = decode_sequence(seq).map_err(err)?;
        ensure(back == (a, b), || format!("({}, {}) decoded as {back:?}", a.0, b.0))?;
        if samples.len() < 64 {
            samples.push(seq);
        }
    }
    for &seq in &samples {
        for bucket in 0..256u64 {
            let packed = pack_duration(seq, bucket, 8).map_err(err)?;
            let back = unpack_duration(packed, 8).map_err(err)?;
            ensure(back == (seq, bucket), || format!("pack({}, {bucket}) unpacked as {back:?}", seq.0))?;
        }
    }
    Ok("1,000,004 pairs, 256 buckets".into())
}

fn random_dbmart_csv(rng: &mut ChaCha8Rng) -> String {
    let mut csv = String::from("patient_num,start_date,phenx\n");
    let patients = rng.random_range(1..=50);
    let origin = EventDate::from_ymd(2019, 6, 1).unwrap();
    for p in 0..patients {
        for _ in 0..rng.random_range(0..=30) {
            let date = origin.add_days(rng.random_range(0..200));
            let code = rng.random_range(0..8);
            let _ = writeln!(csv, "pt{p},{date},code{code}");
        }
    }
    csv
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total = 0;
    for case in 0..50 {
        let csv = random_dbmart_csv(&mut rng);
        let rows = read_raw_rows(csv.as_bytes()).map_err(err)?;
        let (mut entries, lookups) = parse_dbmart(csv.as_bytes()).map_err(err)?;
        sort_dbmart(&mut entries);
        let mined = mine_all(&entries, &MinerConfig::default()).map_err(err)?;
        let naive = naive_mine(&rows).map_err(err)?;
        let expected = encode_naive(&naive, &lookups).map_err(err)?;
        ensure(mined == expected, || format!("case {case}: mined multiset differs from oracle"))?;
        for threshold in 1..=4 {
            let screened = sparsity_screen(mined.clone(), &SparsityConfig::new(threshold)).map_err(err)?;
            let want = encode_naive(&naive_sparsity_screen(naive.clone(), threshold), &lookups).map_err(err)?;
            ensure(screened == want, || format!("case {case}: screen at {threshold} differs from oracle"))?;
        }
        total += mined.len();
    }
    Ok(format!("50 dbmarts, {total} sequences, thresholds 1-4"))
}

fn as_bytes(seqs: &[TemporalSequence]) -> Vec<u8> {
    let mut buf = Vec::new();
    encode_records(seqs, &mut buf);
    buf
}

fn mode_and_worker_invariance() -> Outcome {
    let cfg = SynthConfig {
        patients: 1_000,
        avg_entries: 60,
        distinct_phenx: 300,
        seed: 4,
        ..SynthConfig::default()
    };
    let (mut entries, _) = generate(&cfg).map_err(err)?;
    sort_dbmart(&mut entries);

    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut counts = vec![1, 2, max];
    counts.sort_unstable();
    counts.dedup();
    let workers: Vec<WorkerCount> = counts.iter().map(|&n| WorkerCount::fixed(n).unwrap()).collect();
    let reference = mine_all(&entries, &MinerConfig::default().with_workers(workers[0])).map_err(err)?;
    let reference_bytes = as_bytes(&reference);
    for &w in &workers[1..] {
        let got = mine_all(&entries, &MinerConfig::default().with_workers(w)).map_err(err)?;
        ensure(as_bytes(&got) == reference_bytes, || format!("in-memory output differs with {w:?}"))?;
    }

    for &w in &workers {
        let dir = tempfile::tempdir().map_err(err)?;
        let config = MinerConfig::file_based(dir.path()).with_workers(w);
        let read_back = mine(&entries, &config).map_err(err)?;
        ensure(as_bytes(&read_back) == reference_bytes, || format!("file-based read-back differs with {w:?}"))?;
        let manifest = Manifest::read(dir.path()).map_err(err)?;
        let blocks = patient_blocks(&entries);
        ensure(manifest.entries.len() == blocks.len(), || "manifest patient count".into())?;
        let mut offset = 0;
        for entry in &manifest.entries {
            let n = entry.record_count as usize;
            let on_disk = std::fs::read(dir.path().join(&entry.file)).map_err(err)?;
            ensure(on_disk == as_bytes(&reference[offset..offset + n]), || {
                format!("{} differs from in-memory bytes", entry.file)
            })?;
            offset += n;
        }
        ensure(offset == reference.len(), || "manifest record total".into())?;
    }
    Ok(format!("1000 patients, {} sequences, workers {counts:?}", reference.len()))
}

fn chunk_soundness() -> Outcome {
    ensure(estimate_sequence_count(&vec![400; 5_000]).map_err(err)? == 399_000_000, || {
        "5000 x 400 estimate".into()
    })?;
    let cfg = SynthConfig {
        patients: 120,
        avg_entries: 25,
        distinct_phenx: 40,
        seed: 5,
        ..SynthConfig::default()
    };
    let (mut entries, _) = generate(&cfg).map_err(err)?;
    sort_dbmart(&mut entries);
    let whole = mine_all(&entries, &MinerConfig::default()).map_err(err)?;
    let counts = entries_per_patient(&entries);
    let largest = counts.iter().map(|&n| n * n.saturating_sub(1) / 2).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut chunk_total = 0;
    for _ in 0..25 {
        let limit = rng.random_range(largest..=whole.len() as u64 + 1);
        let plan = plan_chunks(&counts, limit).map_err(err)?;
        let mut joined = Vec::with_capacity(whole.len());
        for (slice, &predicted) in chunk_slices(&entries, &plan).iter().zip(&plan.predicted_counts) {
            ensure(predicted <= limit, || format!("chunk predicts {predicted} > {limit}"))?;
            let part = mine_all(slice, &MinerConfig::default()).map_err(err)?;
            ensure(part.len() as u64 == predicted, || "prediction differs from mined count".into())?;
            joined.extend(part);
        }
        ensure(joined == whole, || format!("chunked mining at limit {limit} differs"))?;
        chunk_total += plan.len();
    }
    Ok(format!("25 limits, {chunk_total} chunks, 399,000,000 estimate"))
}

fn performance() -> Outcome {
    let cfg = SynthConfig {
        patients: 1_000,
        avg_entries: 400,
        distinct_phenx: 2_000,
        seed: 7,
        ..SynthConfig::default()
    };
    let (mut entries, _) = generate(&cfg).map_err(err)?;
    let t0 = Instant::now();
    sort_dbmart(&mut entries);
    let mined = mine_all(&entries, &MinerConfig::default()).map_err(err)?;
    let mined_len = mined.len();
    let kept = sparsity_screen(mined, &SparsityConfig::new(5)).map_err(err)?.len();
    let full = t0.elapsed();
    ensure(full < WallTime::from_secs(600), || format!("mine + screen took {full:?}"))?;

    let small = SynthConfig {
        patients: 500,
        avg_entries: 200,
        distinct_phenx: 2_000,
        seed: 8,
        ..SynthConfig::default()
    };
    let (small_entries, lookups) = generate(&small).map_err(err)?;
    let mut csv = Vec::new();
    write_dbmart(&mut csv, &small_entries, &lookups).map_err(err)?;
    drop(small_entries);
    let rows = read_raw_rows(csv.as_slice()).map_err(err)?;

    let best_of_two = |run: &dyn Fn() -> Result<usize, String>| -> Result<(WallTime, usize), String> {
        let mut best = WallTime::MAX;
        let mut len = 0;
        for _ in 0..2 {
            let t = Instant::now();
            len = run()?;
            best = best.min(t.elapsed());
        }
        Ok((best, len))
    };
    let (naive_time, naive_len) = best_of_two(&|| Ok(naive_mine(&rows).map_err(err)?.len()))?;

    let t_ingest = Instant::now();
    let (mut parsed, _) = parse_dbmart(csv.as_slice()).map_err(err)?;
    sort_dbmart(&mut parsed);
    let ingest_time = t_ingest.elapsed();
    let (mine_time, fast_len) = best_of_two(&|| Ok(mine_all(&parsed, &MinerConfig::default()).map_err(err)?.len()))?;
    ensure(fast_len == naive_len, || "naive and engine counts differ".into())?;
    let speedup = naive_time.as_secs_f64() / mine_time.as_secs_f64();
    let end_to_end = naive_time.as_secs_f64() / (ingest_time + mine_time).as_secs_f64();
    ensure(speedup >= 10.0, || format!("speedup {speedup:.1}x < 10x"))?;

    let verdict = if full < WallTime::from_secs(300) { "within" } else { "over" };
    Ok(format!(
        "{mined_len} mined, {kept} kept in {full:.1?} ({verdict} 5 min); 500x200 mine speedup {speedup:.1}x, \
         {end_to_end:.1}x including ingest"
    ))
}

const COVID_FIXTURE_DAY: &str = "2021-03-01";

/// Thirty patients: 0-9 persistent fatigue, 10-14 one-off headache, 15-19
/// rash within two months, 20-24 smokers with persistent cough, 25-29
/// controls. Allergy precedes covid for 0, 1, 10, 11, 25, 26.
fn covid_fixture() -> String {
    let covid = EventDate::parse_iso(COVID_FIXTURE_DAY).unwrap();
    let mut csv = String::from("patient_num,start_date,phenx\n");
    let mut add = |p: u32, offset: i32, code: &str| {
        let _ = writeln!(csv, "p{p:02},{},{code}", covid.add_days(offset));
    };
    for p in 0..30 {
        add(p, 0, "COVID");
        match p {
            0..=9 => {
                add(p, 10, "FATIGUE");
                add(p, 80, "FATIGUE");
            }
            10..=14 => add(p, 20, "HEADACHE"),
            15..=19 => {
                add(p, 10, "RASH");
                add(p, 40, "RASH");
            }
            20..=24 => {
                add(p, -100, "SMOKING");
                add(p, 10, "COUGH");
                add(p, 80, "COUGH");
            }
            _ => add(p, -30, "VACCINE"),
        }
        if [0, 1, 10, 11, 25, 26].contains(&p) {
            add(p, -50, "ALLERGY");
        }
    }
    csv
}

/// Brute-force phi and chi-square from indicator vectors, cell by cell.
fn brute_force(x: &[bool], y: &[bool]) -> (f64, f64) {
    let n = x.len() as f64;
    let mut cells = [[0f64; 2]; 2];
    for (&a, &b) in x.iter().zip(y) {
        cells[usize::from(!a)][usize::from(!b)] += 1.0;
    }
    let rows = [cells[0][0] + cells[0][1], cells[1][0] + cells[1][1]];
    let cols = [cells[0][0] + cells[1][0], cells[0][1] + cells[1][1]];
    let mut chi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            chi += (cells[i][j] - e).powi(2) / e;
        }
    }
    let phi = (cells[0][0] * cells[1][1] - cells[0][1] * cells[1][0]) / (rows[0] * rows[1] * cols[0] * cols[1]).sqrt();
    (phi, chi)
}

fn post_covid_fixture() -> Outcome {
    let csv = covid_fixture();
    let rows = read_raw_rows(csv.as_bytes()).map_err(err)?;
    let (mut entries, lookups) = parse_dbmart(csv.as_bytes()).map_err(err)?;
    sort_dbmart(&mut entries);
    let seqs = mine_all(&entries, &MinerConfig::default()).map_err(err)?;
    let id = |code: &str| lookups.phenx_id(code).unwrap();
    let config = PostCovidConfig::new(id("COVID"));
    let report = identify_post_covid(&seqs, &config).map_err(err)?;

    let label = |p: PatientId| lookups.patient_label(p).unwrap().to_owned();
    let confirmed: Vec<(String, PhenxId, usize, u32)> = report
        .confirmed
        .iter()
        .map(|c| (label(c.patient), c.symptom, c.observation_count, c.bucket_span))
        .collect();
    let want: Vec<_> = (0..10).map(|p| (format!("p{p:02}"), id("FATIGUE"), 2, 2)).collect();
    ensure(confirmed == want, || format!("confirmed {confirmed:?}"))?;

    let excluded: Vec<(String, PhenxId, SequenceId)> = report
        .excluded
        .iter()
        .map(|e| (label(e.patient), e.symptom, e.explained_by))
        .collect();
    let smoking_cough = encode_sequence(id("SMOKING"), id("COUGH")).unwrap();
    let want: Vec<_> = (20..25).map(|p| (format!("p{p:02}"), id("COUGH"), smoking_cough)).collect();
    ensure(excluded == want, || format!("excluded {excluded:?}"))?;

    // indicators straight from the raw rows, one slot per patient
    let patients: Vec<String> = (0..30).map(|p| format!("p{p:02}")).collect();
    let has = |p: &str, code: &str| rows.iter().any(|r| r.patient_label == p && r.phenx_label == code);
    let smoker: Vec<bool> = patients.iter().map(|p| has(p, "SMOKING") && has(p, "COUGH")).collect();
    let cough: Vec<bool> = patients.iter().map(|p| has(p, "COUGH")).collect();
    let (phi, chi) = brute_force(&smoker, &cough);
    ensure((phi - 1.0).abs() < 1e-9 && (chi - 30.0).abs() < 1e-9, || format!("fixture phi {phi}, chi {chi}"))?;
    let p_expected = statrs::function::erf::erfc((chi / 2.0).sqrt());
    for e in &report.excluded {
        ensure((e.correlation - phi).abs() < 1e-9, || format!("reported phi {}", e.correlation))?;
        ensure((e.p_value - p_expected).abs() < 1e-9, || format!("reported p {}", e.p_value))?;
    }
    let table = Contingency2x2::from_indicators(smoker.iter().copied().zip(cough.iter().copied()));
    ensure((table.chi_square() - chi).abs() < 1e-9, || "engine chi-square".into())?;

    let allergic: Vec<bool> = patients.iter().map(|p| has(p, "ALLERGY") && has(p, "FATIGUE")).collect();
    let fatigue: Vec<bool> = patients.iter().map(|p| has(p, "FATIGUE")).collect();
    let (phi_a, chi_a) = brute_force(&allergic, &fatigue);
    let table = Contingency2x2::from_indicators(allergic.iter().copied().zip(fatigue.iter().copied()));
    ensure((table.phi() - phi_a).abs() < 1e-9 && (table.chi_square() - chi_a).abs() < 1e-9, || {
        format!("allergy table: engine ({}, {}), oracle ({phi_a}, {chi_a})", table.phi(), table.chi_square())
    })?;
    ensure(phi_a < config.correlation_threshold, || "allergy should stay weak".into())?;

    let patients_seen: BTreeSet<_> = seqs.iter().map(|s| s.patient).collect();
    Ok(format!(
        "{} patients, 10 confirmed, 5 excluded (phi 1, chi2 {chi}); allergy phi {phi_a:.3}",
        patients_seen.len()
    ))
}

fn golden_file() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden.tseq");
    let stored = std::fs::read(&golden).map_err(err)?;
    let patient = PatientId(7);
    let expected = vec![
        TemporalSequence::new(patient, encode_sequence(PhenxId(1), PhenxId(2)).unwrap(), Duration(3)),
        TemporalSequence::new(patient, encode_sequence(PhenxId(2), PhenxId(1)).unwrap(), Duration(40)),
        TemporalSequence::new(
            patient,
            encode_sequence(PhenxId(9_999_999), PhenxId(9_999_999)).unwrap(),
            Duration(65_536),
        ),
    ];
    let read = read_patient_file(&golden, patient).map_err(err)?;
    ensure(read == expected, || format!("decoded {read:?}"))?;
    ensure(as_bytes(&expected) == stored, || "encoded bytes differ from golden".into())?;
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("7.tseq");
    write_patient_file(&path, &read, &mut Vec::new()).map_err(err)?;
    ensure(std::fs::read(&path).map_err(err)? == stored, || "rewritten file differs".into())?;
    Ok(format!("{} bytes", stored.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("count formula", count_formula),
        ("encoding round-trip", encoding_round_trip),
        ("oracle equivalence", oracle_equivalence),
        ("mode and worker invariance", mode_and_worker_invariance),
        ("chunk soundness", chunk_soundness),
        ("performance smoke", performance),
        ("post covid fixture", post_covid_fixture),
        ("file format bit-exactness", golden_file),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
