//! `fusionbench`: synthesize multi-biometric datasets, score template
//! comparisons, fuse matcher scores per modality, combine modality
//! evidence into decisions, and report verification metrics.
//!
//! Every subcommand is deterministic: the same inputs, flags and seed
//! produce byte-identical output files. Log verbosity is selected with
//! the `FUSIONBENCH_LOG` environment variable (e.g. `info`, `debug`).

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use fusionbench_core::datagen::{synth_scores, synth_templates, SynthConfig};
use fusionbench_core::evaluation::{roc_curve, ConfidenceLevel, Protocol};
use fusionbench_core::pipeline::{
    channel_file_name, evaluate_all, fuse_score_set, masses_csv, match_templates, roc_csv,
    run_pipeline, weights_csv, write_outputs, DsVariant, PipelineConfig, HYBRID_CHANNEL,
};
use fusionbench_core::scores::{read_scores_file, write_scores, ScoreSet};
use fusionbench_core::template::{read_templates_file, write_templates, Template};
use fusionbench_core::Error as CoreError;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// Prints a line to stdout, exiting quietly when the reader has closed
/// the pipe (e.g. `fusionbench synth | head`) instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            panic!("failed printing to stdout: {e}");
        }
    }};
}

#[derive(Parser)]
#[command(
    name = "fusionbench",
    version,
    about = "Hybrid multi-biometric fusion benchmark",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (templates, and scores when the
    /// config carries a score model)
    Synth(SynthArgs),
    /// Score all template comparisons with the per-modality matchers
    Match(MatchArgs),
    /// Fuse matcher scores into per-modality scores with per-user
    /// mean-closure weights
    FuseScores(FuseScoresArgs),
    /// Combine modality evidence into accept/reject decisions and emit
    /// the mass trace
    FuseDecision(RunArgs),
    /// Compute verification metrics (ROC/EER, GMR, d', HTER) per score
    /// channel
    Evaluate(EvaluateArgs),
    /// Run score fusion, decision fusion and evaluation end to end
    Pipeline(RunArgs),
}

/// Comparison protocol selection shared by several subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    /// All intra-subject sample pairs as genuine comparisons
    AllPairs,
    /// First sample against each remaining sample per subject
    FirstVsRest,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::AllPairs => Protocol::AllPairs,
            ProtocolArg::FirstVsRest => Protocol::FirstVsRest,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Synthesis config JSON; defaults to the built-in four-matcher demo
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the config's RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Comparison protocol for the emitted score file
    #[arg(long, value_enum, default_value_t = ProtocolArg::AllPairs)]
    protocol: ProtocolArg,
}

#[derive(Args)]
struct MatchArgs {
    /// Template JSON-lines file
    #[arg(long, value_name = "FILE")]
    templates: PathBuf,
    /// Comparison protocol
    #[arg(long, value_enum, default_value_t = ProtocolArg::AllPairs)]
    protocol: ProtocolArg,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FuseScoresArgs {
    /// Matcher score CSV file
    #[arg(long, value_name = "FILE")]
    scores: PathBuf,
    /// Pipeline config JSON
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the subject-split shuffle seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Score CSV file (matcher, fused, or mixed channels)
    #[arg(long, value_name = "FILE")]
    scores: PathBuf,
    /// Pipeline config JSON (GMR targets and CI levels)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Confidence level in percent for HTER intervals (repeatable)
    #[arg(long, value_parser = parse_ci)]
    ci: Vec<u32>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

/// Arguments shared by `fuse-decision` and `pipeline`.
#[derive(Args)]
struct RunArgs {
    /// Matcher score CSV file
    #[arg(
        long,
        value_name = "FILE",
        required_unless_present = "templates",
        conflicts_with = "templates"
    )]
    scores: Option<PathBuf>,
    /// Template JSON-lines file; matcher scores are computed first
    #[arg(long, value_name = "FILE")]
    templates: Option<PathBuf>,
    /// Pipeline config JSON
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the config's comparison protocol
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// Mass functions combined per comparison (2 or 4)
    #[arg(long = "ds-masses", value_parser = parse_ds_masses)]
    ds_masses: Option<u8>,
    /// Confidence level in percent for HTER intervals (repeatable)
    #[arg(long, value_parser = parse_ci)]
    ci: Vec<u32>,
    /// Override the subject-split shuffle seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

fn parse_ci(s: &str) -> Result<u32, String> {
    let v: u32 = s
        .parse()
        .map_err(|_| format!("'{s}' is not an integer percentage"))?;
    match v {
        90 | 95 | 99 => Ok(v),
        other => Err(format!(
            "unsupported confidence level {other}% (use 90, 95 or 99)"
        )),
    }
}

fn parse_ds_masses(s: &str) -> Result<u8, String> {
    let v: u8 = s.parse().map_err(|_| format!("'{s}' is not an integer"))?;
    match v {
        2 | 4 => Ok(v),
        other => Err(format!("ds-masses must be 2 or 4, got {other}")),
    }
}

/// A failed command together with the process exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

type CmdResult<T = ()> = Result<T, Failure>;

impl Failure {
    fn usage(err: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_USAGE,
            err: err.into(),
        }
    }

    fn data(err: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_DATA,
            err: err.into(),
        }
    }

    fn context<C: Display + Send + Sync + 'static>(mut self, ctx: C) -> Self {
        self.err = self.err.context(ctx);
        self
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        let code = match &err {
            CoreError::InvalidConfig(_) | CoreError::UnsupportedLevel(_) => EXIT_USAGE,
            CoreError::TotalConflict { .. }
            | CoreError::ConflictExhausted { .. }
            | CoreError::DegenerateDistributions
            | CoreError::DegenerateConditioning
            | CoreError::InvalidMass(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            err: anyhow::Error::new(err),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("FUSIONBENCH_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::Synth(args) => cmd_synth(&args),
        Command::Match(args) => cmd_match(&args),
        Command::FuseScores(args) => cmd_fuse_scores(&args),
        Command::FuseDecision(args) => cmd_fuse_decision(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Pipeline(args) => cmd_pipeline(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.err);
            ExitCode::from(failure.code)
        }
    }
}

// ---------------------------------------------------------------------------
// shared plumbing

fn load_pipeline_config(path: Option<&Path>) -> CmdResult<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(e).context(format!("cannot read config {}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::usage(e).context(format!("invalid pipeline config {}", path.display()))
    })
}

fn load_score_file(path: &Path) -> CmdResult<ScoreSet> {
    read_scores_file(path)
        .map_err(|e| Failure::from(e).context(format!("reading scores from {}", path.display())))
}

fn load_template_file(path: &Path) -> CmdResult<Vec<Template>> {
    read_templates_file(path)
        .map_err(|e| Failure::from(e).context(format!("reading templates from {}", path.display())))
}

fn ensure_out_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| {
        Failure::data(e).context(format!("cannot create output directory {}", dir.display()))
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes)
        .map_err(|e| Failure::data(e).context(format!("cannot write {}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn count_labels(set: &ScoreSet) -> (usize, usize) {
    let n_gen = set
        .records()
        .iter()
        .filter(|r| r.label.is_genuine())
        .count();
    (n_gen, set.len() - n_gen)
}

fn confidence_levels(percents: &[u32]) -> CmdResult<Vec<ConfidenceLevel>> {
    percents
        .iter()
        .map(|p| ConfidenceLevel::from_percent(*p).map_err(Failure::from))
        .collect()
}

// ---------------------------------------------------------------------------
// synth

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::usage(e).context(format!("cannot read config {}", path.display()))
            })?;
            serde_json::from_str::<SynthConfig>(&text).map_err(|e| {
                Failure::usage(e).context(format!("invalid synthesis config {}", path.display()))
            })?
        }
        None => SynthConfig::default_with_scores(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    ensure_out_dir(&args.out)?;

    say!(
        "dataset: {} subjects x {} samples (seed {})",
        cfg.n_subjects,
        cfg.samples_per_subject,
        cfg.seed
    );

    let templates = synth_templates(&cfg)?;
    let n_iris = templates
        .iter()
        .filter(|t| matches!(t, Template::Iris(_)))
        .count();
    let mut tpl_bytes = Vec::new();
    write_templates(&mut tpl_bytes, &templates)?;
    let tpl_path = args.out.join("templates.jsonl");
    write_file(&tpl_path, &tpl_bytes)?;
    say!(
        "templates: {} iris + {} fingerprint -> {}",
        n_iris,
        templates.len() - n_iris,
        tpl_path.display()
    );
    say!("  sha256 {}", sha256_hex(&tpl_bytes));

    if cfg.score_model.is_some() {
        let records = synth_scores(&cfg, args.protocol.into())?;
        let set = ScoreSet::from_records(records)?;
        let (n_gen, n_imp) = count_labels(&set);
        let n_matchers = set.matchers().len();
        let mut score_bytes = Vec::new();
        write_scores(&mut score_bytes, &set)?;
        let score_path = args.out.join("scores.csv");
        write_file(&score_path, &score_bytes)?;
        say!(
            "scores: {} matchers, {} genuine + {} imposter rows -> {}",
            n_matchers,
            n_gen,
            n_imp,
            score_path.display()
        );
        say!("  sha256 {}", sha256_hex(&score_bytes));
    } else {
        say!("scores: skipped (config has no score_model)");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// match

fn cmd_match(args: &MatchArgs) -> CmdResult {
    let templates = load_template_file(&args.templates)?;
    let records = match_templates(&templates, args.protocol.into())?;
    let set = ScoreSet::from_records(records)?;
    ensure_out_dir(&args.out)?;

    let mut bytes = Vec::new();
    write_scores(&mut bytes, &set)?;
    let path = args.out.join("scores.csv");
    write_file(&path, &bytes)?;

    let (n_gen, n_imp) = count_labels(&set);
    say!(
        "matched {} templates with {} matchers: {} genuine + {} imposter rows -> {}",
        templates.len(),
        set.matchers().len(),
        n_gen,
        n_imp,
        path.display()
    );
    say!("  sha256 {}", sha256_hex(&bytes));
    Ok(())
}

// ---------------------------------------------------------------------------
// fuse-scores

fn cmd_fuse_scores(args: &FuseScoresArgs) -> CmdResult {
    let mut cfg = load_pipeline_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.shuffle_seed = Some(seed);
    }
    let scores = load_score_file(&args.scores)?;
    let (records, weights) = fuse_score_set(&scores, &cfg)?;
    ensure_out_dir(&args.out)?;

    let fused = ScoreSet::from_records(records)?;
    let mut bytes = Vec::new();
    write_scores(&mut bytes, &fused)?;
    let fused_path = args.out.join("fused_scores.csv");
    write_file(&fused_path, &bytes)?;

    let weights_path = args.out.join("weights.csv");
    write_file(&weights_path, weights_csv(&weights).as_bytes())?;

    let channels = fused.matchers();
    say!(
        "fused {} score rows into channels: {}",
        fused.len(),
        channels.join(", ")
    );
    say!("wrote {}", fused_path.display());
    say!("wrote {}", weights_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fuse-decision / pipeline

fn load_run(args: &RunArgs) -> CmdResult<(ScoreSet, PipelineConfig)> {
    let mut cfg = load_pipeline_config(args.config.as_deref())?;
    if let Some(p) = args.protocol {
        cfg.protocol = p.into();
    }
    if let Some(n) = args.ds_masses {
        cfg.ds_variant = DsVariant::from_mass_count(n)?;
    }
    if !args.ci.is_empty() {
        cfg.ci_levels = args.ci.clone();
    }
    if let Some(seed) = args.seed {
        cfg.shuffle_seed = Some(seed);
    }

    let scores = match (&args.scores, &args.templates) {
        (Some(path), None) => load_score_file(path)?,
        (None, Some(path)) => {
            let templates = load_template_file(path)?;
            let records = match_templates(&templates, cfg.protocol)?;
            ScoreSet::from_records(records)?
        }
        _ => unreachable!("clap enforces exactly one of --scores/--templates"),
    };
    Ok((scores, cfg))
}

fn cmd_fuse_decision(args: &RunArgs) -> CmdResult {
    let (scores, cfg) = load_run(args)?;
    let output = run_pipeline(&scores, &cfg)?;
    ensure_out_dir(&args.out)?;

    let path = args.out.join("masses.csv");
    write_file(&path, masses_csv(&output.mass_rows).as_bytes())?;

    let r = &output.report;
    say!(
        "combined {} mass functions per comparison over {} test probes",
        r.ds_masses,
        r.accepts + r.rejects
    );
    say!(
        "decisions: {} accept / {} reject ({} rejects from total conflict)",
        r.accepts,
        r.rejects,
        r.conflict_rejects
    );
    if let Some(tau) = r.train_thresholds.get(HYBRID_CHANNEL) {
        say!("hybrid threshold (train EER): {tau:.6}");
    }
    say!("hybrid test EER: {:.4}%", r.hybrid.eer_percent);
    say!("wrote {}", path.display());
    Ok(())
}

fn cmd_pipeline(args: &RunArgs) -> CmdResult {
    let (scores, cfg) = load_run(args)?;
    let output = run_pipeline(&scores, &cfg)?;
    let files = write_outputs(&args.out, &output)?;

    let r = &output.report;
    say!(
        "split: {} train / {} test subjects; test comparisons: {} genuine / {} imposter",
        r.n_train_subjects,
        r.n_test_subjects,
        r.n_test_genuine,
        r.n_test_imposter
    );
    say!("{:<24} {:>9} {:>9}", "channel", "EER%", "d'");
    for (name, rep) in &r.matchers {
        say!("{:<24} {:>9.4} {:>9.4}", name, rep.eer_percent, rep.d_prime);
    }
    for (name, rep) in &r.modalities {
        say!(
            "{:<24} {:>9.4} {:>9.4}",
            format!("mcw:{name}"),
            rep.eer_percent,
            rep.d_prime
        );
    }
    say!(
        "{:<24} {:>9.4} {:>9.4}",
        HYBRID_CHANNEL,
        r.hybrid.eer_percent,
        r.hybrid.d_prime
    );
    say!(
        "decisions: {} accept / {} reject ({} rejects from total conflict)",
        r.accepts,
        r.rejects,
        r.conflict_rejects
    );
    for f in &files {
        say!("wrote {}", f.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    let mut cfg = load_pipeline_config(args.config.as_deref())?;
    if !args.ci.is_empty() {
        cfg.ci_levels = args.ci.clone();
    }
    let levels = confidence_levels(&cfg.ci_levels)?;
    let scores = load_score_file(&args.scores)?;
    let reports = evaluate_all(&scores, &cfg.gmr_targets_percent, &levels)?;
    ensure_out_dir(&args.out)?;

    let mut json = serde_json::to_string_pretty(&reports).map_err(Failure::data)?;
    json.push('\n');
    let json_path = args.out.join("evaluation.json");
    write_file(&json_path, json.as_bytes())?;

    say!("{:<24} {:>9} {:>9} {:>9}", "channel", "EER%", "d'", "HTER%");
    for (name, report) in &reports {
        say!(
            "{:<24} {:>9.4} {:>9.4} {:>9.4}",
            name,
            report.eer_percent,
            report.d_prime,
            report.hter_percent
        );
        let (gen, imp) = scores.class_scores(name);
        let roc = roc_curve(&gen, &imp)?;
        write_file(
            &args.out.join(channel_file_name(name)),
            roc_csv(&roc).as_bytes(),
        )?;
    }
    say!("wrote {}", json_path.display());
    say!("wrote per-channel ROC CSVs to {}", args.out.display());
    Ok(())
}
