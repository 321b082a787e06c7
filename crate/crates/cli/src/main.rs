use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dateform::corpus::{load_column, read_column, CorpusError, Selector, SAMPLE_SIZE};
use dateform::crossval::{corpus_stats_with, cross_validate_with, CorpusOptions};
use dateform::dateparse::{apply_defaults, dateparse};
use dateform::detection::{DetectOptions, DetectionResult, Engine};
use dateform::icu::tokenize_format;
use dateform::locale::Locale;
use dateform::mdl::MdlDetector;
use dateform::pcfg::{default_weights, NlpDetector};
use dateform::synth::write_corpus;

mod output;

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_FOUND: u8 = 2;
const EXIT_STRICT: u8 = 3;

const NUMERIC_HELP: &str = "\
All-numeric columns are classified before detection and skipped when they
look like timestamps:
  integers in [1e8, 4e9]          Unix epoch seconds
  integers in [1e11, 4e12]        Unix epoch milliseconds
  numbers in [1, 80000]           spreadsheet serial dates
Exit codes: 0 success, 1 usage or I/O error, 2 no format found,
3 a value failed under `parse --strict`.";

#[derive(Debug, Parser)]
#[command(name = "dateform", version, about = "Infer date-time format strings from sample values", after_help = NUMERIC_HELP)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Output format [default: json; plain lines for `parse`].
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Locale id for month, weekday and marker words.
    #[arg(long, global = true, default_value = "en")]
    locale: String,
    /// Largest share of values a reported format may fail to parse.
    #[arg(long, global = true, default_value_t = 0.05)]
    max_error_rate: f64,
    /// Values sampled per column.
    #[arg(long, global = true, default_value_t = SAMPLE_SIZE)]
    sample_size: usize,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Seed for corpus generation.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Grammar weights for the nlp engine, as written by a grammar dump.
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Mdl,
    Nlp,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect the format of one column.
    Detect {
        file: PathBuf,
        /// Column name, or zero-based index.
        #[arg(long)]
        column: Option<String>,
        #[arg(long, value_enum, default_value_t = EngineArg::Both)]
        engine: EngineArg,
    },
    /// Parse a column with a known pattern and print ISO-8601 instants.
    Parse {
        file: PathBuf,
        /// ICU pattern, e.g. "MM/dd/yyyy".
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        column: Option<String>,
        /// Exit with status 3 if any value fails to parse.
        #[arg(long)]
        strict: bool,
    },
    /// Compare both engines over a directory of CSV or text files.
    Crossval { dir: PathBuf },
    /// Write a synthetic corpus with a ground-truth manifest.
    GenCorpus {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 500)]
        columns: usize,
    },
    /// Error rate and timing of one engine over a corpus.
    Stats {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = EngineKind::Mdl)]
        engine: EngineKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Mdl,
    Nlp,
}

impl From<EngineKind> for Engine {
    fn from(e: EngineKind) -> Engine {
        match e {
            EngineKind::Mdl => Engine::Mdl,
            EngineKind::Nlp => Engine::Nlp,
        }
    }
}

struct Session {
    global: Global,
    locale: Locale,
    detect: DetectOptions,
}

impl Session {
    fn nlp(&self) -> anyhow::Result<NlpDetector> {
        let Some(path) = &self.global.weights else {
            return Ok(NlpDetector::new(&self.locale, self.detect));
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let grammar = default_weights(&self.locale)
            .load_weights(&text)
            .with_context(|| format!("loading weights from {}", path.display()))?;
        Ok(NlpDetector::with_grammar(grammar, self.detect))
    }

    fn format(&self) -> OutputFormat {
        self.global.format.unwrap_or(OutputFormat::Json)
    }

    fn corpus_options(&self) -> CorpusOptions {
        CorpusOptions {
            detect: self.detect,
            sample_size: self.global.sample_size,
            jobs: self.global.jobs,
        }
    }
}

fn emit<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_text(text: &str) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn selector(column: &Option<String>) -> Option<Selector> {
    column.as_deref().map(Selector::parse)
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum EngineOutput {
    Found(DetectionResult),
    Missing { engine: Engine, column: String, error: String },
}

fn cmd_detect(cx: &Session, file: &Path, column: &Option<String>, engine: EngineArg) -> anyhow::Result<u8> {
    let sample = match load_column(file, selector(column).as_ref(), &cx.locale, cx.global.sample_size) {
        Ok(s) => s,
        Err(e @ (CorpusError::NumericTimestampColumn { .. } | CorpusError::EmptyAfterFiltering(_))) => {
            eprintln!("dateform: {e}");
            return Ok(EXIT_NOT_FOUND);
        }
        Err(e) => return Err(e.into()),
    };
    let mut results = Vec::new();
    if matches!(engine, EngineArg::Mdl | EngineArg::Both) {
        let r = MdlDetector::new(&cx.locale, cx.detect).detect(&sample);
        results.push(r.map_err(|e| (Engine::Mdl, e)));
    }
    if matches!(engine, EngineArg::Nlp | EngineArg::Both) {
        let r = cx.nlp()?.detect(&sample);
        results.push(r.map_err(|e| (Engine::Nlp, e)));
    }
    let found = results.iter().any(Result::is_ok);
    let outputs: Vec<EngineOutput> = results
        .into_iter()
        .map(|r| match r {
            Ok(d) => EngineOutput::Found(d),
            Err((engine, e)) => EngineOutput::Missing {
                engine,
                column: sample.column_name.clone(),
                error: e.to_string(),
            },
        })
        .collect();
    match cx.format() {
        OutputFormat::Json => emit(&outputs)?,
        OutputFormat::Table => print_text(&output::detect_table(&outputs))?,
    }
    Ok(if found { 0 } else { EXIT_NOT_FOUND })
}

#[derive(Debug, Serialize)]
struct ParsedValue {
    value: String,
    instant: Option<String>,
    error: Option<String>,
}

fn cmd_parse(cx: &Session, file: &Path, pattern: &str, column: &Option<String>, strict: bool) -> anyhow::Result<u8> {
    let fs_ = tokenize_format(pattern).map_err(|e| anyhow!("bad pattern {pattern:?}: {e}"))?;
    let bytes = fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    let is_csv = file.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (_, values) = read_column(&bytes, is_csv, &stem, selector(column).as_ref())?;
    let mut failures = 0;
    let mut rows = Vec::with_capacity(values.len());
    for (i, raw) in values.iter().enumerate() {
        let value = raw.trim();
        match dateparse(value, &fs_, &cx.locale) {
            Ok(v) => rows.push(ParsedValue {
                value: value.to_string(),
                instant: Some(apply_defaults(&v).to_string()),
                error: None,
            }),
            Err(e) => {
                failures += 1;
                eprintln!("line {}: {value:?}: {e}", i + 1);
                rows.push(ParsedValue {
                    value: value.to_string(),
                    instant: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    match cx.global.format {
        Some(OutputFormat::Json) => emit(&rows)?,
        Some(OutputFormat::Table) | None => {
            let text: String = rows
                .iter()
                .map(|r| format!("{}\n", r.instant.as_deref().unwrap_or("")))
                .collect();
            print_text(&text)?;
        }
    }
    Ok(if strict && failures > 0 { EXIT_STRICT } else { 0 })
}

fn cmd_crossval(cx: &Session, dir: &Path) -> anyhow::Result<u8> {
    let mdl = MdlDetector::new(&cx.locale, cx.detect);
    let nlp = cx.nlp()?;
    let report = cross_validate_with(dir, &cx.locale, &mdl, &nlp, &cx.corpus_options())?;
    match cx.format() {
        OutputFormat::Json => emit(&report)?,
        OutputFormat::Table => print_text(&output::crossval_table(&report))?,
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct GenSummary {
    out_dir: String,
    columns: usize,
    seed: u64,
    manifest: String,
}

fn cmd_gen_corpus(cx: &Session, out_dir: &Path, columns: usize) -> anyhow::Result<u8> {
    let manifest = write_corpus(out_dir, columns, cx.global.seed).with_context(|| format!("writing {}", out_dir.display()))?;
    let summary = GenSummary {
        out_dir: out_dir.display().to_string(),
        columns: manifest.columns.len(),
        seed: manifest.seed,
        manifest: out_dir.join(dateform::synth::MANIFEST).display().to_string(),
    };
    match cx.format() {
        OutputFormat::Json => emit(&summary)?,
        OutputFormat::Table => print_text(&format!(
            "wrote {} columns to {} (seed {})\n",
            summary.columns, summary.out_dir, summary.seed
        ))?,
    }
    Ok(0)
}

fn cmd_stats(cx: &Session, dir: &Path, engine: EngineKind) -> anyhow::Result<u8> {
    let mdl = MdlDetector::new(&cx.locale, cx.detect);
    let nlp = cx.nlp()?;
    let stats = corpus_stats_with(dir, engine.into(), &cx.locale, &mdl, &nlp, &cx.corpus_options())?;
    match cx.format() {
        OutputFormat::Json => emit(&stats)?,
        OutputFormat::Table => print_text(&output::stats_table(&stats))?,
    }
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let g = &cli.global;
    if !(0.0..=1.0).contains(&g.max_error_rate) {
        return Err(anyhow!("--max-error-rate must be within [0, 1]"));
    }
    if g.sample_size == 0 {
        return Err(anyhow!("--sample-size must be at least 1"));
    }
    if g.jobs > 0 {
        // Fails only if a pool already exists, which leaves that pool in use.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(g.jobs).build_global();
    }
    let locale = Locale::builtin(&g.locale).map_err(|e| anyhow!("{e}"))?;
    let detect = DetectOptions {
        max_error_rate: g.max_error_rate,
    };
    let cx = Session {
        global: cli.global,
        locale,
        detect,
    };
    match &cli.command {
        Command::Detect { file, column, engine } => cmd_detect(&cx, file, column, *engine),
        Command::Parse {
            file,
            pattern,
            column,
            strict,
        } => cmd_parse(&cx, file, pattern, column, *strict),
        Command::Crossval { dir } => cmd_crossval(&cx, dir),
        Command::GenCorpus { out_dir, columns } => cmd_gen_corpus(&cx, out_dir, *columns),
        Command::Stats { dir, engine } => cmd_stats(&cx, dir, *engine),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dateform: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
