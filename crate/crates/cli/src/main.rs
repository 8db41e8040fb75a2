//! `memir`: compile dialogue corpora into typed memory and query it.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use memir::compiler::{compile, CompileProviders, InteractionHistory};
use memir::harness::eval::standard_variants;
use memir::harness::{evaluate, load_jsonl_corpus, load_locomo_corpus, load_queries, PipelineProfile};
use memir::persist;
use memir::providers::ProviderSet;
use memir::trace::{trace_records, validate_trace, write_trace};
use memir::utilization::AnswerOutcome;
use memir::{Engine, ExecMode, MemoryStore};

#[derive(Parser)]
#[command(name = "memir", version, about = "Typed long-term memory for dialogue corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Base profile.
    #[arg(long, default_value = "locomo_default")]
    profile: String,
    /// Flat `key = value` overrides applied on top of the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated ablation flags: no_claims, no_cues, no_projection, no_bundles.
    #[arg(long)]
    ablate: Option<String>,
    /// Run every stage on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum CorpusFormat {
    /// `.json` files are LoCoMo-shaped, anything else line-delimited.
    Auto,
    Jsonl,
    Locomo,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a corpus into a store file.
    Ingest {
        corpus: PathBuf,
        /// Store file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: CorpusFormat,
        /// Where to write the rejection report (line-delimited JSON).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Answer a question from a store and print the fact interface.
    Query {
        store: PathBuf,
        question: String,
        /// Also emit the query trace.
        #[arg(long)]
        trace: bool,
        /// Write the trace here instead of stderr.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Print the query trace and check it against the pipeline invariants.
    Trace {
        store: PathBuf,
        question: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Score labeled queries under the full pipeline and each ablation.
    Eval {
        store: PathBuf,
        queries: PathBuf,
        /// Metric records (line-delimited JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Query traces for every variant (line-delimited JSON).
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Input(anyhow::Error),
    Provider(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn profile(args: &PipelineArgs) -> Result<PipelineProfile> {
    let mut p: PipelineProfile = args.profile.parse()?;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        p.apply_config_text(&text).with_context(|| format!("in {}", path.display()))?;
    }
    if let Some(list) = &args.ablate {
        p.apply_ablations(list)?;
    }
    Ok(p)
}

fn mode(args: &PipelineArgs) -> ExecMode {
    if args.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn load_corpus(path: &Path, format: CorpusFormat) -> Result<InteractionHistory> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let locomo = match format {
        CorpusFormat::Locomo => true,
        CorpusFormat::Jsonl => false,
        CorpusFormat::Auto => path.extension().is_some_and(|e| e == "json"),
    };
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let history = if locomo {
        load_locomo_corpus(BufReader::new(file))?.0
    } else {
        load_jsonl_corpus(BufReader::new(file), &id)?
    };
    Ok(history)
}

fn load_store(path: &Path) -> Result<MemoryStore> {
    persist::load(path).with_context(|| format!("loading store {}", path.display()))
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stderr().lock()),
    })
}

fn engine(store: &MemoryStore, args: &PipelineArgs) -> Result<Engine> {
    let p = profile(args)?;
    Ok(Engine::new(store, ProviderSet::reference(p.retrieval.dense_dim), p.engine_config(mode(args)))?)
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Ingest { corpus, out, format, report, pipeline } => {
            let p = profile(&pipeline)?;
            let history = load_corpus(&corpus, format)?;
            let providers = ProviderSet::reference(p.retrieval.dense_dim);
            let cp = CompileProviders { cue_extractor: providers.cue_extractor.as_ref(), claim_writer: providers.claim_writer.as_ref() };
            let (store, rep) = compile(&history, cp, &p.compile, mode(&pipeline))?;
            persist::persist(&store, &out).with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = report {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                rep.write_jsonl(BufWriter::new(f))?;
            }
            println!(
                "pages {}  spans {}  cues {}  claims {}  views {}  rejections {}",
                rep.pages, rep.spans, rep.cues, rep.claims, rep.views, rep.rejections.len()
            );
            if rep.has_provider_failure() {
                return Err(Failure::Provider(anyhow::anyhow!("provider failures on {} page(s)", rep.flagged_pages.len())));
            }
        }
        Command::Query { store, question, trace, out, pipeline } => {
            let store = load_store(&store)?;
            let engine = engine(&store, &pipeline)?;
            let r = engine.query(&question)?;
            print!("{}", r.rendered);
            if trace {
                let mut w = sink(&out)?;
                write_trace(&trace_records(&r, engine.config()), &mut w)?;
                w.flush()?;
            }
            match r.outcome {
                Ok(AnswerOutcome::Answer { text, cited }) => {
                    let cited: Vec<String> = cited.iter().map(|i| format!("FACT[{i}]")).collect();
                    println!("ANSWER: {text} [{}]", cited.join(", "));
                }
                Ok(AnswerOutcome::InsufficientEvidence) => println!("ANSWER: insufficient evidence"),
                Err(e) => return Err(Failure::Provider(e.into())),
            }
        }
        Command::Trace { store, question, out, pipeline } => {
            let store = load_store(&store)?;
            let engine = engine(&store, &pipeline)?;
            let r = engine.query(&question)?;
            let records = trace_records(&r, engine.config());
            match &out {
                Some(_) => {
                    let mut w = sink(&out)?;
                    write_trace(&records, &mut w)?;
                    w.flush()?;
                }
                None => write_trace(&records, io::stdout().lock())?,
            }
            let problems = validate_trace(&records);
            if !problems.is_empty() {
                return Err(Failure::Input(anyhow::anyhow!("trace violates invariants:\n{}", problems.join("\n"))));
            }
        }
        Command::Eval { store, queries, out, trace_out, pipeline } => {
            let p = profile(&pipeline)?;
            let store = load_store(&store)?;
            let f = File::open(&queries).with_context(|| format!("opening {}", queries.display()))?;
            let queries = load_queries(BufReader::new(f))?;
            let variants = if p.ablation.is_empty() {
                standard_variants()
            } else {
                vec![(p.ablation.active().join("+"), p.ablation)]
            };
            let dim = p.retrieval.dense_dim;
            let report = evaluate(&store, &queries, &p, &variants, || ProviderSet::reference(dim), mode(&pipeline))?;
            print!("{}", report.table());
            if let Some(path) = out {
                let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                report.write_records(&mut w)?;
                w.flush()?;
            }
            if let Some(path) = trace_out {
                let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                write_trace(&report.traces, &mut w)?;
                w.flush()?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .with_target(false)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Provider(e)) => {
            eprintln!("provider failure: {e:#}");
            ExitCode::from(2)
        }
    }
}
