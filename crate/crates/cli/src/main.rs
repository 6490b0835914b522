//! `phoenix`: monitor traces against a signature database, learn new
//! signatures, generate corpora and report on a database.
//!
//! Runs everything in-process unless `--server` (or `PHOENIX_SERVER`) names
//! a running `phoenixd`.

mod render;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use phoenix_client::{connect, Backend, SERVER_ENV};
use phoenix_core::api::{
    BenchRequest, DbSource, EvalRequest, GenKind, GenRequest, MonitorRequest, SynthAutomatonRequest,
    SynthPltlRequest,
};
use phoenix_core::automata::RunMode;
use phoenix_core::harness::{collect_files, SynthConfig};
use phoenix_core::pltl::Operator;
use phoenix_core::synth::ExternalSolver;
use phoenix_core::traces::{AttackCount, GenConfig, Layer, SessionSampling};

use render::Format;

#[derive(Parser)]
#[command(name = "phoenix", version, about = "Behavioral signature monitoring for cellular control-plane traces")]
struct Cli {
    /// Send requests to this phoenixd instead of running in-process.
    #[arg(long, global = true, env = SERVER_ENV)]
    server: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every signature over the traces; exits 1 if anything fires.
    Monitor {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        traces: TraceArgs,
        /// Keep reporting after a signature's first hit.
        #[arg(long)]
        all: bool,
    },
    /// Learn a signature from benign (`--pos`) and attack (`--neg`) traces.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Generate labeled traces.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Precision, recall and F1 of each signature on labeled traces.
    Eval {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        traces: TraceArgs,
    },
    /// Messages per second over repeated passes of the traces.
    Bench {
        #[command(flatten)]
        db: DbArgs,
        #[command(flatten)]
        traces: TraceArgs,
        #[arg(long, default_value_t = 10)]
        repeat: usize,
        #[arg(long)]
        all: bool,
    },
    /// Lower-bound memory of each signature.
    Mem {
        #[command(flatten)]
        db: DbArgs,
    },
}

#[derive(Args)]
struct DbArgs {
    /// Signature database; automaton bodies are read relative to it.
    #[arg(long)]
    db: PathBuf,
    /// Corpus alphabet file. Without one, PLTL signatures ignore event
    /// names they do not mention.
    #[arg(long)]
    alphabet: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Trace file; repeat to read several in order.
    #[arg(long = "trace", required = true)]
    traces: Vec<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// Benign traces.
    #[arg(long)]
    pos: PathBuf,
    /// Attack traces.
    #[arg(long)]
    neg: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Ranked candidate formulas, best first.
    Pltl {
        #[arg(long)]
        pos: PathBuf,
        #[arg(long)]
        neg: PathBuf,
        #[arg(long)]
        alphabet: Option<PathBuf>,
        #[arg(long, default_value_t = SynthConfig::default().max_size)]
        max_size: usize,
        #[arg(long, default_value_t = 5)]
        candidates: usize,
        #[arg(long, default_value_t = 0.2)]
        holdout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds for the whole search; 0 for none.
        #[arg(long)]
        timeout: Option<f64>,
        /// Comma-separated operator keywords to allow, e.g. `not,and,Y,S`.
        #[arg(long, value_delimiter = ',')]
        operators: Option<Vec<String>>,
        /// DIMACS solver binary to use instead of the built-in one.
        #[arg(long)]
        solver: Option<PathBuf>,
    },
    /// Deterministic automaton rejecting the attack traces.
    Dfa(SampleArgs),
    /// Mealy machine naming each attack in `--neg` by its label.
    Mm(SampleArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Seed sessions as a trace file. Defaults to the built-in pool.
    #[arg(long)]
    sessions: Option<PathBuf>,
    /// Directory of extra `.trc` catalog files.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Sessions per trace.
    #[arg(long, default_value_t = 5)]
    length: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw each trace's sessions without replacement.
    #[arg(long)]
    distinct: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    Benign {
        /// Built-in pool to draw from when `--sessions` is absent.
        #[arg(long, default_value = "NAS")]
        layer: Layer,
        #[command(flatten)]
        args: GenArgs,
    },
    Malicious {
        #[arg(long)]
        attack: String,
        /// Inject exactly one attack session per trace.
        #[arg(long)]
        single: bool,
        #[command(flatten)]
        args: GenArgs,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_opt(path: Option<&PathBuf>) -> Result<Option<String>> {
    path.map(|p| read(p)).transpose()
}

fn read_traces(args: &TraceArgs) -> Result<String> {
    let texts: Vec<String> = args.traces.iter().map(|p| read(p)).collect::<Result<_>>()?;
    Ok(texts.join("\n---\n"))
}

fn db_source(args: &DbArgs) -> Result<DbSource> {
    let db = read(&args.db)?;
    let base = args.db.parent().unwrap_or(Path::new("."));
    let files = collect_files(&db, base)?;
    Ok(DbSource {
        db,
        files,
        alphabet: read_opt(args.alphabet.as_ref())?,
    })
}

fn read_catalog(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "trc") {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            files.insert(name, read(&path)?);
        }
    }
    Ok(files)
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn mode(all: bool) -> RunMode {
    if all {
        RunMode::ReportAll
    } else {
        RunMode::StopFirst
    }
}

fn operators(words: &[String]) -> Result<Vec<Operator>> {
    words
        .iter()
        .map(|w| Operator::from_keyword(w.trim()).with_context(|| format!("unknown operator `{w}`")))
        .collect()
}

fn gen_request(kind: GenKind, attack: Option<String>, layer: Option<Layer>, single: bool, args: &GenArgs) -> Result<GenRequest> {
    let mut config = GenConfig::new(args.length, args.count, args.seed);
    if args.distinct {
        config.sampling = SessionSampling::WithoutReplacement;
    }
    if single {
        config.attack_count = AttackCount::Single;
    }
    Ok(GenRequest {
        kind,
        attack,
        sessions: read_opt(args.sessions.as_ref())?,
        layer,
        catalog: match &args.catalog {
            Some(d) => read_catalog(d)?,
            None => BTreeMap::new(),
        },
        config,
    })
}

fn synth_automaton(backend: &dyn Backend, s: &SampleArgs, dfa: bool) -> Result<()> {
    let req = SynthAutomatonRequest {
        pos: read(&s.pos)?,
        neg: read(&s.neg)?,
    };
    let resp = if dfa { backend.synth_dfa(&req)? } else { backend.synth_mm(&req)? };
    eprintln!("{} states, {} transitions", resp.states, resp.transitions);
    write_out(s.out.as_ref(), &resp.machine)
}

/// Exit code on success: 1 when monitoring found violations.
fn run(cli: Cli) -> Result<u8> {
    let solver = match &cli.cmd {
        Command::Synth(SynthCommand::Pltl { solver: Some(s), .. }) => Some(ExternalSolver::new(s)),
        _ => None,
    };
    let backend: Box<dyn Backend> = connect(cli.server.as_deref(), solver)?;
    let fmt = cli.format;
    match cli.cmd {
        Command::Monitor { db, traces, all } => {
            let resp = backend.monitor(&MonitorRequest {
                source: db_source(&db)?,
                traces: read_traces(&traces)?,
                mode: mode(all),
            })?;
            for w in &resp.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", render::monitor(&resp.report, fmt)?);
            return Ok(if resp.report.has_violations() { 1 } else { 0 });
        }
        Command::Synth(SynthCommand::Pltl {
            pos,
            neg,
            alphabet,
            max_size,
            candidates,
            holdout,
            seed,
            timeout,
            operators: ops,
            solver: _,
        }) => {
            let config = SynthConfig {
                max_size,
                candidates,
                holdout,
                seed,
                timeout_secs: match timeout {
                    Some(t) if t <= 0.0 => None,
                    Some(t) => Some(t),
                    None => SynthConfig::default().timeout_secs,
                },
                operators: ops.as_deref().map(operators).transpose()?,
            };
            let resp = backend.synth_pltl(&SynthPltlRequest {
                pos: read(&pos)?,
                neg: read(&neg)?,
                alphabet: read_opt(alphabet.as_ref())?,
                config,
            })?;
            print!("{}", render::candidates(&resp.candidates, fmt)?);
        }
        Command::Synth(SynthCommand::Dfa(s)) => synth_automaton(backend.as_ref(), &s, true)?,
        Command::Synth(SynthCommand::Mm(s)) => synth_automaton(backend.as_ref(), &s, false)?,
        Command::Gen(g) => {
            let (req, out) = match &g {
                GenCommand::Benign { layer, args } => {
                    (gen_request(GenKind::Benign, None, Some(*layer), false, args)?, args.out.as_ref())
                }
                GenCommand::Malicious { attack, single, args } => (
                    gen_request(GenKind::Malicious, Some(attack.clone()), None, *single, args)?,
                    args.out.as_ref(),
                ),
            };
            let resp = backend.generate(&req)?;
            eprintln!("{} traces", resp.count);
            write_out(out, &resp.traces)?;
        }
        Command::Eval { db, traces } => {
            let report = backend.eval(&EvalRequest {
                source: db_source(&db)?,
                traces: read_traces(&traces)?,
            })?;
            print!("{}", render::metrics(&report, fmt)?);
        }
        Command::Bench { db, traces, repeat, all } => {
            if repeat == 0 {
                bail!("--repeat must be at least 1");
            }
            let t = backend.bench(&BenchRequest {
                source: db_source(&db)?,
                traces: read_traces(&traces)?,
                repeat,
                mode: mode(all),
            })?;
            print!("{}", render::throughput(&t, fmt)?);
        }
        Command::Mem { db } => {
            let report = backend.mem(&db_source(&db)?)?;
            print!("{}", render::memory(&report, fmt)?);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
