//! `licmap` command-line front end.
//!
//! Subcommands: `corpus-build`, `match`, `scan`, `merge`, `metrics`.
//! Exit codes: 0 success, 1 partial or pipeline failure, 2 usage error.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};

use licmap_core::corpus::{self, Corpus};
use licmap_core::fingerprint::{self, WinnowParams};
use licmap_core::gitscan::{self, ScanConfig};
use licmap_core::matcher::{self, Classification, CorpusIndex, MatchOutcome};
use licmap_core::metrics::{self, TruthSet};
use licmap_core::p2l;
use licmap_core::pipeline::{self, ScanJob};

#[derive(Parser)]
#[command(name = "licmap", version, about = "License identification and project-to-license mapping")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a fingerprint corpus cache from license sources.
    CorpusBuild(CorpusBuildArgs),
    /// Match license files against a corpus cache.
    Match(MatchArgs),
    /// Scan git repositories and emit a project-to-license file.
    Scan(ScanArgs),
    /// Merge project-to-license files, optionally joining external detections.
    Merge(MergeArgs),
    /// Compute confusion-matrix metrics against a labeled truth file.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct CorpusBuildArgs {
    /// Directory of SPDX license-list-data JSON detail records.
    #[arg(long)]
    spdx: Option<PathBuf>,
    /// OSI license JSON export file.
    #[arg(long)]
    osi: Option<PathBuf>,
    /// Directory of plain `<id>.txt` license files.
    #[arg(long)]
    plain: Option<PathBuf>,
    /// Output corpus cache path.
    #[arg(long)]
    out: PathBuf,
    /// k-gram size.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Winnowing window size.
    #[arg(long, default_value_t = 8)]
    w: usize,
}

#[derive(Args)]
struct MatchArgs {
    /// Corpus cache from corpus-build.
    #[arg(long)]
    corpus: PathBuf,
    /// Classification threshold.
    #[arg(long, default_value_t = matcher::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Files or directories of candidate license texts.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// Corpus cache from corpus-build.
    #[arg(long)]
    corpus: PathBuf,
    /// Output project-to-license file.
    #[arg(long)]
    out: PathBuf,
    /// Classification threshold.
    #[arg(long, default_value_t = matcher::DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Substring matched case-insensitively against file paths.
    #[arg(long, default_value = "license")]
    path_filter: String,
    /// Use committer time instead of author time for commit months.
    #[arg(long)]
    committer_time: bool,
    /// Scan time override (RFC 3339 or YYYY-MM-DD); defaults to now.
    #[arg(long)]
    scan_time: Option<String>,
    /// Append the method column to the output.
    #[arg(long)]
    include_method: bool,
    /// Local git repositories to scan.
    #[arg(required = true)]
    repos: Vec<PathBuf>,
}

#[derive(Args)]
struct MergeArgs {
    /// Output merged file.
    #[arg(long)]
    out: PathBuf,
    /// External detections file (header: blob_hash, license_id, confidence).
    #[arg(long)]
    external: Option<PathBuf>,
    /// Minimum confidence for external detections.
    #[arg(long, default_value_t = p2l::DEFAULT_MIN_CONFIDENCE)]
    min_confidence: f64,
    /// Repositories to rescan for the blob join (required with --external).
    #[arg(long)]
    repo: Vec<PathBuf>,
    /// Path filter for the blob join.
    #[arg(long, default_value = "license")]
    path_filter: String,
    /// Scan time override for the blob join.
    #[arg(long)]
    scan_time: Option<String>,
    /// Emit the method column (default for merged output).
    #[arg(long, default_value_t = true)]
    include_method: bool,
    /// Project-to-license files to merge.
    #[arg(required = true)]
    p2l_files: Vec<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Project-to-license file.
    #[arg(long)]
    p2l: PathBuf,
    /// Truth CSV (header: project_id,has_license).
    #[arg(long)]
    truth: PathBuf,
}

fn parse_scan_time(arg: Option<&str>) -> anyhow::Result<DateTime<Utc>> {
    let Some(s) = arg else {
        return Ok(Utc::now());
    };
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).unwrap().and_utc());
    }
    bail!("cannot parse scan time {s:?} (expected RFC 3339 or YYYY-MM-DD)");
}

fn load_corpus(path: &Path) -> anyhow::Result<Corpus> {
    corpus::load_cache(path).with_context(|| format!("loading corpus cache {}", path.display()))
}

fn print_header(params: WinnowParams, threshold: f64, path_filter: &str) {
    println!(
        "# licmap k={} w={} threshold={} path_filter={}",
        params.k, params.w, threshold, path_filter
    );
}

fn cmd_corpus_build(args: &CorpusBuildArgs) -> anyhow::Result<ExitCode> {
    if args.spdx.is_none() && args.osi.is_none() && args.plain.is_none() {
        // Usage error per the exit-code contract.
        eprintln!("error: at least one of --spdx, --osi, --plain is required");
        return Ok(ExitCode::from(2));
    }
    let params = WinnowParams::new(args.k, args.w);
    print_header(params, matcher::DEFAULT_THRESHOLD, "license");

    let mut warnings = Vec::new();
    let mut merged = Corpus::empty(params);
    let mut load = |loaded: corpus::Loaded, warnings: &mut Vec<String>| -> anyhow::Result<()> {
        warnings.extend(loaded.warnings);
        merged = corpus::merge_corpora(std::mem::replace(&mut merged, Corpus::empty(params)), loaded.corpus, warnings)?;
        Ok(())
    };
    if let Some(dir) = &args.spdx {
        load(corpus::load_spdx(dir, params)?, &mut warnings)?;
    }
    if let Some(file) = &args.osi {
        load(corpus::load_osi(file, params)?, &mut warnings)?;
    }
    if let Some(dir) = &args.plain {
        load(corpus::load_plain(dir, params)?, &mut warnings)?;
    }
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    corpus::save_cache(&merged, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("entries={}", merged.len());
    println!("aliases={}", merged.aliases().len());
    println!("warnings={}", warnings.len());
    println!("cache={}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn collect_input_files(inputs: &[PathBuf]) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut children: Vec<PathBuf> = fs::read_dir(input)
                .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).collect())
                .unwrap_or_default();
            children.sort();
            files.extend(children.into_iter().filter(|p| p.is_file()));
        } else {
            files.push(input.clone());
        }
    }
    files
}

fn cmd_match(args: &MatchArgs) -> anyhow::Result<ExitCode> {
    let corpus = load_corpus(&args.corpus)?;
    print_header(corpus.params(), args.threshold, "license");
    let index = CorpusIndex::build(&corpus);
    let files = collect_input_files(&args.inputs);
    let mut outcomes = Vec::new();
    let mut failures = 0usize;
    for file in &files {
        let data = match fs::read(file) {
            Ok(d) => d,
            Err(e) => {
                println!("{}\terror\t{e}", file.display());
                failures += 1;
                continue;
            }
        };
        let fp = fingerprint::fingerprint(&data, corpus.params());
        let outcome = if fp.is_empty() {
            MatchOutcome::NoSignatures
        } else {
            match index.best_match(&fp)? {
                Some(m) => MatchOutcome::Scored(m),
                None => MatchOutcome::NoMatch,
            }
        };
        match matcher::classify(&outcome, args.threshold) {
            Classification::Matched { license_id, score } => {
                println!("{}\t{license_id}\t{score:.4}\tMatched", file.display())
            }
            Classification::BelowThreshold(m) => println!(
                "{}\t{}\t{:.4}\tBelowThreshold\tshared={}\tunion={}",
                file.display(),
                m.license_id,
                m.score,
                m.shared,
                m.union_count
            ),
            Classification::NoMatch => println!("{}\t-\t0.0000\tNoMatch", file.display()),
            Classification::NoSignatures => {
                println!("{}\t-\t-\tno-signatures", file.display())
            }
        }
        outcomes.push(outcome);
    }
    println!("--- bucket report ---");
    print!("{}", matcher::bucket_report(&outcomes).render_kv());
    if !files.is_empty() && failures == files.len() {
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(args: &ScanArgs) -> anyhow::Result<ExitCode> {
    let corpus = load_corpus(&args.corpus)?;
    print_header(corpus.params(), args.threshold, &args.path_filter);
    let scan_time = parse_scan_time(args.scan_time.as_deref())?;
    let cfg = ScanConfig {
        path_filter: args.path_filter.clone(),
        include_all_paths_for_known_blobs: true,
        use_committer_time: args.committer_time,
    };
    let jobs: Vec<ScanJob> = args
        .repos
        .iter()
        .map(|repo| ScanJob {
            repo: repo.clone(),
            project_id: gitscan::project_id_for(repo),
        })
        .collect();
    let output = pipeline::scan_repos(&jobs, &corpus, &cfg, args.threshold, scan_time)?;
    for warning in &output.summary.warnings {
        eprintln!("warning: {warning}");
    }
    for (repo, error) in &output.summary.failed_repos {
        eprintln!("error: {}: {error}", repo.display());
    }
    let mut file = fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    p2l::emit(&output.records, args.include_method, &mut file)?;
    println!("candidate_blobs={}", output.summary.candidate_blobs);
    println!("matched_blobs={}", output.summary.matched_blobs);
    println!("below_threshold={}", output.summary.below_threshold);
    println!("unmatched={}", output.summary.unmatched);
    println!("no_signature={}", output.summary.no_signature);
    println!("records={}", output.records.len());
    print!("{}", output.summary.report.render_kv());
    if output.summary.failed_repos.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_merge(args: &MergeArgs) -> anyhow::Result<ExitCode> {
    let mut records = Vec::new();
    for path in &args.p2l_files {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let parsed = p2l::parse(BufReader::new(file), path)?;
        records = p2l::merge_records(records, parsed);
    }
    if let Some(external) = &args.external {
        if args.repo.is_empty() {
            eprintln!("error: --external requires at least one --repo for the blob join");
            return Ok(ExitCode::from(2));
        }
        let scan_time = parse_scan_time(args.scan_time.as_deref())?;
        let cfg = ScanConfig {
            path_filter: args.path_filter.clone(),
            ..ScanConfig::default()
        };
        let mut blobs = Vec::new();
        for repo in &args.repo {
            let mut warnings = Vec::new();
            let project_id = gitscan::project_id_for(repo);
            let scanned = gitscan::scan_repo(repo, &project_id, &cfg, scan_time, &mut warnings)
                .with_context(|| format!("scanning {}", repo.display()))?;
            for warning in warnings {
                eprintln!("warning: {warning}");
            }
            blobs.extend(scanned);
        }
        let mut warnings = Vec::new();
        let (detections, parse_errors) = p2l::parse_external(external, &mut warnings)?;
        for warning in warnings {
            eprintln!("warning: {warning}");
        }
        let index = gitscan::blob_index(&blobs);
        let (external_records, mut stats) =
            p2l::ingest_external(&detections, &index, args.min_confidence)?;
        stats.parse_errors = parse_errors;
        println!("external_admitted={}", stats.admitted);
        println!("external_dropped_low_confidence={}", stats.dropped_low_confidence);
        println!("external_dropped_unknown_blob={}", stats.dropped_unknown_blob);
        println!("external_parse_errors={}", stats.parse_errors);
        records = p2l::merge_records(records, external_records);
    }
    let mut file = fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    p2l::emit(&records, args.include_method, &mut file)?;
    println!("records={}", records.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_metrics(args: &MetricsArgs) -> anyhow::Result<ExitCode> {
    let file = fs::File::open(&args.p2l)
        .with_context(|| format!("opening {}", args.p2l.display()))?;
    let predicted = p2l::parse(BufReader::new(file), &args.p2l)?;
    let truth = TruthSet::from_csv(&args.truth)?;
    let (counts, ignored) = metrics::compare_against_truth(&predicted, &truth);
    let computed = metrics::compute_metrics(&counts)?;
    println!("tp={} fp={} fn={} tn={} ignored={}", counts.tp, counts.fp, counts.fn_, counts.tn, ignored);
    print!("{}", computed.render_kv());
    print!("{}", computed.render_text());
    std::io::stdout().flush().ok();
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .ok();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.jobs;

    let result = match &cli.command {
        Command::CorpusBuild(args) => cmd_corpus_build(args),
        Command::Match(args) => cmd_match(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Merge(args) => cmd_merge(args),
        Command::Metrics(args) => cmd_metrics(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
