//! `tseq`: mine, screen and query transitive temporal sequences from a
//! dbmart CSV.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tseq_core::chunker::{chunk_slices, entries_per_patient, plan_chunks, ChunkPlan, DEFAULT_CHUNK_LIMIT};
use tseq_core::ingest::{
    first_occurrence_filter, parse_dbmart_file, read_raw_rows_file, write_dbmart, write_translated_csv,
    LookupTables,
};
use tseq_core::miner::store::{persist_sequences, read_sequence_dir, Manifest};
use tseq_core::miner::{mine_all, mine_to_files, patients_of, sort_dbmart, MinerConfig, MiningMode};
use tseq_core::oracle::{encode_naive, naive_mine};
use tseq_core::postcovid::{identify_post_covid, write_confirmed_csv, write_excluded_csv, PostCovidConfig};
use tseq_core::query::{filter_by_end, filter_by_min_duration, filter_by_start, transitive_end_sequences};
use tseq_core::screening::screen;
use tseq_core::synth::{generate, SynthConfig};
use tseq_core::{CountMode, DbMartEntry, DurationUnit, PhenxId, SparsityConfig, TemporalSequence};

#[derive(Debug, Parser)]
#[command(name = "tseq", version, about = "Transitive temporal sequence mining for patient event tables")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "TSEQ_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic dbmart CSV
    Synth(SynthArgs),
    /// Mine all transitive sequences into a directory of .tseq files
    Mine(MineArgs),
    /// Drop sparse sequences from a mined directory
    Screen(ScreenArgs),
    /// Filter mined sequences and print them as CSV
    Query(QueryArgs),
    /// Identify Post COVID-19 symptoms
    Postcovid(PostCovidArgs),
    /// Print mined sequences with their original labels as CSV
    Translate(TranslateArgs),
    /// Print the chunk plan for a dbmart
    Plan(PlanArgs),
    /// Compare a mined directory against the naive reference miner
    Verify(VerifyArgs),
    /// Time synthesis, sorting, mining and screening
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SynthParams {
    #[arg(long, default_value_t = 100)]
    patients: u32,
    #[arg(long, default_value_t = 50)]
    avg_entries: u32,
    #[arg(long, default_value_t = 500)]
    distinct_phenx: u32,
    #[arg(long, default_value_t = 3650)]
    date_span_days: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl SynthParams {
    fn config(&self) -> SynthConfig {
        SynthConfig {
            patients: self.patients,
            avg_entries: self.avg_entries,
            distinct_phenx: self.distinct_phenx,
            date_span_days: self.date_span_days,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    params: SynthParams,
    /// Destination CSV
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// dbmart CSV with patient_num, start_date and phenx columns
    #[arg(long)]
    input: PathBuf,
    /// Directory with lookup tables from an earlier run; known labels keep their ids
    #[arg(long)]
    lookups: Option<PathBuf>,
    /// Keep only the first occurrence of each phenX per patient
    #[arg(long)]
    first_occurrence: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Memory,
    Files,
}

#[derive(Debug, Args)]
struct MineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Files)]
    mode: ModeArg,
    /// Only pair events on strictly later dates
    #[arg(long)]
    exclude_same_date: bool,
    /// Largest predicted sequence count mined in one pass
    #[arg(long, default_value_t = DEFAULT_CHUNK_LIMIT)]
    max_chunk_sequences: u64,
    /// Print the chunk plan and stop
    #[arg(long)]
    plan_only: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SparsityModeArg {
    Occurrences,
    Patients,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Days,
    Weeks,
    Months,
    Years,
}

impl From<UnitArg> for DurationUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Days => DurationUnit::Days,
            UnitArg::Weeks => DurationUnit::Weeks,
            UnitArg::Months => DurationUnit::Months,
            UnitArg::Years => DurationUnit::Years,
        }
    }
}

#[derive(Debug, Args)]
struct ScreenArgs {
    /// Directory written by `mine`
    #[arg(long)]
    input_dir: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    sparsity_threshold: u32,
    #[arg(long, value_enum, default_value_t = SparsityModeArg::Occurrences)]
    sparsity_mode: SparsityModeArg,
    /// Count each (sequence, duration bucket) separately
    #[arg(long)]
    duration_sparsity: bool,
    #[arg(long, value_enum, default_value_t = UnitArg::Months)]
    bucket_unit: UnitArg,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    input_dir: PathBuf,
    /// Start phenX label
    #[arg(long)]
    starts_with: Option<String>,
    /// End phenX label
    #[arg(long)]
    ends_with: Option<String>,
    #[arg(long)]
    min_duration_days: Option<u32>,
    /// Keep every sequence ending where some sequence from this phenX ends
    #[arg(long)]
    transitive_from: Option<String>,
    /// Destination CSV (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PostCovidArgs {
    #[arg(long)]
    input_dir: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// phenX label of the COVID-19 diagnosis
    #[arg(long)]
    covid_code: String,
    /// Minimum span in month buckets between first and last observation
    #[arg(long, default_value_t = 2)]
    min_months: u32,
    #[arg(long, default_value_t = 0.7)]
    corr_threshold: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[arg(long)]
    input_dir: PathBuf,
    /// Destination CSV (default: stdout)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_CHUNK_LIMIT)]
    max_chunk_sequences: u64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// dbmart CSV the directory was mined from
    #[arg(long)]
    input: PathBuf,
    /// Directory written by `mine`
    #[arg(long)]
    mined_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    params: SynthParams,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    sparsity_threshold: u32,
    /// Also time the naive reference miner
    #[arg(long)]
    naive: bool,
}

/// Problems with how the tool was invoked rather than with the data.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match e.downcast_ref::<tseq_core::Error>() {
        Some(tseq_core::Error::InvalidConfig(_) | tseq_core::Error::PackOverflow(_)) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .context("cannot start worker pool")?;
    }
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Mine(a) => mine(a),
        Command::Screen(a) => screen_cmd(a),
        Command::Query(a) => query(a),
        Command::Postcovid(a) => postcovid(a),
        Command::Translate(a) => translate(a),
        Command::Plan(a) => plan(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
    }
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn output_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create_output(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn synth(a: SynthArgs) -> Result<ExitCode> {
    let (entries, lookups) = generate(&a.params.config())?;
    let mut out = create_output(&a.output)?;
    write_dbmart(&mut out, &entries, &lookups)?;
    out.flush()?;
    println!("wrote {} rows for {} patients to {}", entries.len(), lookups.patient_count(), a.output.display());
    Ok(ExitCode::SUCCESS)
}

/// Parses, optionally reduces to first occurrences, and sorts the dbmart.
fn load_dbmart(input: &InputArgs) -> Result<(Vec<DbMartEntry>, LookupTables)> {
    let seed = match &input.lookups {
        Some(dir) => LookupTables::read_dir(dir)?,
        None => LookupTables::new(),
    };
    let (mut entries, lookups) = parse_dbmart_file(&input.input, seed)?;
    if input.first_occurrence {
        entries = first_occurrence_filter(&entries);
    }
    sort_dbmart(&mut entries);
    log::info!("{} entries, {} patients, {} phenX", entries.len(), lookups.patient_count(), lookups.phenx_count());
    Ok((entries, lookups))
}

fn plan_for(entries: &[DbMartEntry], limit: u64) -> Result<ChunkPlan> {
    if limit == 0 {
        return Err(usage("--max-chunk-sequences must be positive"));
    }
    Ok(plan_chunks(&entries_per_patient(entries), limit)?)
}

fn mine(a: MineArgs) -> Result<ExitCode> {
    let (entries, lookups) = load_dbmart(&a.input)?;
    let plan = plan_for(&entries, a.max_chunk_sequences)?;
    if a.plan_only {
        print!("{}", plan.to_tsv());
        return Ok(ExitCode::SUCCESS);
    }
    fs::create_dir_all(&a.output_dir).with_context(|| format!("cannot create {}", a.output_dir.display()))?;

    let mut config = match a.mode {
        ModeArg::Memory => MinerConfig::default(),
        ModeArg::Files => MinerConfig::file_based(&a.output_dir),
    };
    config.include_same_date_pairs = !a.exclude_same_date;

    let mut manifest = Manifest::default();
    for (i, slice) in chunk_slices(&entries, &plan).into_iter().enumerate() {
        log::info!("chunk {i}: {} entries, {} predicted sequences", slice.len(), plan.predicted_counts[i]);
        let part = match config.mode {
            MiningMode::InMemory => {
                let seqs = mine_all(slice, &config)?;
                persist_sequences(&a.output_dir, &seqs, &patients_of(slice))?
            }
            MiningMode::FileBased => mine_to_files(slice, &config)?,
        };
        manifest.entries.extend(part.entries);
    }
    manifest.write(&a.output_dir)?;
    lookups.write_dir(&a.output_dir)?;
    println!(
        "mined {} sequences for {} patients in {} chunk(s) into {}",
        manifest.total_records(),
        manifest.entries.len(),
        plan.len(),
        a.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Sequences, lookups and manifest of a directory written by `mine` or `screen`.
fn load_mined(dir: &Path) -> Result<(Vec<TemporalSequence>, LookupTables, Manifest)> {
    let manifest = Manifest::read(dir)?;
    let seqs = read_sequence_dir(dir)?;
    let lookups = LookupTables::read_dir(dir)?;
    Ok((seqs, lookups, manifest))
}

fn screen_cmd(a: ScreenArgs) -> Result<ExitCode> {
    let (seqs, lookups, manifest) = load_mined(&a.input_dir)?;
    let before = seqs.len();
    let mut config = SparsityConfig::new(a.sparsity_threshold).with_mode(match a.sparsity_mode {
        SparsityModeArg::Occurrences => CountMode::Occurrences,
        SparsityModeArg::Patients => CountMode::DistinctPatients,
    });
    if a.duration_sparsity {
        config = config.duration_buckets(a.bucket_unit.into());
    }
    let kept = screen(seqs, &config)?;
    let patients: Vec<_> = manifest.entries.iter().map(|e| e.patient).collect();
    persist_sequences(&a.output_dir, &kept, &patients)?;
    lookups.write_dir(&a.output_dir)?;
    println!("kept {} of {before} sequences in {}", kept.len(), a.output_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn phenx(lookups: &LookupTables, label: &str) -> Result<PhenxId> {
    lookups
        .phenx_id(label)
        .ok_or_else(|| anyhow!("phenX `{label}` does not occur in the lookup table"))
}

fn query(a: QueryArgs) -> Result<ExitCode> {
    let (mut seqs, lookups, _) = load_mined(&a.input_dir)?;
    if let Some(label) = &a.transitive_from {
        seqs = transitive_end_sequences(&seqs, phenx(&lookups, label)?);
    }
    if let Some(label) = &a.starts_with {
        seqs = filter_by_start(&seqs, phenx(&lookups, label)?);
    }
    if let Some(label) = &a.ends_with {
        seqs = filter_by_end(&seqs, phenx(&lookups, label)?);
    }
    if let Some(days) = a.min_duration_days {
        seqs = filter_by_min_duration(&seqs, days);
    }
    let mut out = output_sink(a.output.as_deref())?;
    write_translated_csv(&mut out, &seqs, &lookups)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn postcovid(a: PostCovidArgs) -> Result<ExitCode> {
    let (seqs, lookups, _) = load_mined(&a.input_dir)?;
    let mut config = PostCovidConfig::new(phenx(&lookups, &a.covid_code)?);
    config.min_persistence = a.min_months;
    config.correlation_threshold = a.corr_threshold;
    config.significance_alpha = a.alpha;
    config.validate()?;
    let report = identify_post_covid(&seqs, &config)?;

    fs::create_dir_all(&a.output_dir).with_context(|| format!("cannot create {}", a.output_dir.display()))?;
    let mut out = create_output(&a.output_dir.join("confirmed.csv"))?;
    write_confirmed_csv(&mut out, &report, &lookups)?;
    out.flush()?;
    let mut out = create_output(&a.output_dir.join("excluded.csv"))?;
    write_excluded_csv(&mut out, &report, &lookups)?;
    out.flush()?;
    lookups.write_dir(&a.output_dir)?;
    println!(
        "{} confirmed and {} excluded symptom(s) written to {}",
        report.confirmed.len(),
        report.excluded.len(),
        a.output_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn translate(a: TranslateArgs) -> Result<ExitCode> {
    let (seqs, lookups, _) = load_mined(&a.input_dir)?;
    let mut out = output_sink(a.output.as_deref())?;
    write_translated_csv(&mut out, &seqs, &lookups)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn plan(a: PlanArgs) -> Result<ExitCode> {
    let (entries, _) = load_dbmart(&a.input)?;
    print!("{}", plan_for(&entries, a.max_chunk_sequences)?.to_tsv());
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let (seqs, lookups, _) = load_mined(&a.mined_dir)?;
    let rows = read_raw_rows_file(&a.input)?;
    let naive = naive_mine(&rows)?;
    let expected = match encode_naive(&naive, &lookups) {
        Ok(e) => e,
        Err(e) => {
            println!("mismatch: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    if expected == seqs {
        println!("match: {} sequences equal the reference miner", seqs.len());
        return Ok(ExitCode::SUCCESS);
    }
    let first = expected.iter().zip(&seqs).position(|(x, y)| x != y).unwrap_or(expected.len().min(seqs.len()));
    println!(
        "mismatch: mined {} sequences, reference {}; first difference at record {first}",
        seqs.len(),
        expected.len()
    );
    Ok(ExitCode::from(2))
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let mut out = io::stdout().lock();
    writeln!(out, "stage\twall_ms\trecords")?;
    let mut stage = |name: &str, start: Instant, records: usize| {
        writeln!(out, "{name}\t{}\t{records}", start.elapsed().as_millis())
    };

    let t = Instant::now();
    let (mut entries, lookups) = generate(&a.params.config())?;
    stage("synth", t, entries.len())?;

    let rows = if a.naive {
        let mut csv = Vec::new();
        write_dbmart(&mut csv, &entries, &lookups)?;
        Some(tseq_core::ingest::read_raw_rows(csv.as_slice())?)
    } else {
        None
    };

    let t = Instant::now();
    sort_dbmart(&mut entries);
    stage("sort", t, entries.len())?;

    let t = Instant::now();
    let seqs = mine_all(&entries, &MinerConfig::default())?;
    stage("mine", t, seqs.len())?;

    let t = Instant::now();
    let kept = screen(seqs, &SparsityConfig::new(a.sparsity_threshold))?;
    stage("screen", t, kept.len())?;
    drop(kept);

    if let Some(rows) = rows {
        let t = Instant::now();
        let naive = naive_mine(&rows)?;
        stage("naive_mine", t, naive.len())?;
    }
    Ok(ExitCode::SUCCESS)
}
