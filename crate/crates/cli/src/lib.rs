//! `pal` subcommands.

use std::fs;
use std::net::SocketAddr;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pal_core::pipeline::{compile_bank, parse_transcript, PipelineConfig, Transcript, TranscriptFormat};
use pal_core::policy::{PolicyConfig, PolicyMode};
use pal_core::session::{parse_jsonl, replay};
use pal_core::simulator::{compare_policies, parse_policy, SyntheticLearner};
use pal_core::summary::{compose_summary, HashedBagEmbedder, LearnerProfile, SummaryConfig, TemplateSynthesizer};
use pal_core::Execution;

#[derive(Debug, Parser)]
#[command(name = "pal", version, about = "Adaptive lecture sessions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a transcript into a question bank.
    Compile(CompileArgs),
    /// Write the post-lesson summary for a recorded session.
    Summarize(SummarizeArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
    /// Run synthetic learners against one or more policies.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// srt, vtt or json; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<TranscriptFormat>,
    #[arg(long)]
    pub out: PathBuf,
    /// Emit a candidate point after this many sentences without a cue.
    #[arg(long)]
    pub every_n: Option<usize>,
    /// File with one cue phrase per line, replacing the defaults.
    #[arg(long)]
    pub cues: Option<PathBuf>,
    /// Defaults to the input file name without extension.
    #[arg(long)]
    pub source_id: Option<String>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Session event log (JSONL).
    #[arg(long)]
    pub session: PathBuf,
    #[arg(long)]
    pub transcript: PathBuf,
    #[arg(long)]
    pub format: Option<TranscriptFormat>,
    /// JSON file: {"learner_id": ..., "interests": [...]}.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Data directory. PAL_DATA_DIR takes precedence when set.
    #[arg(long, default_value = "pal-data")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `hybrid`, `stat`, `rl` or `fixed:<level>`; repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',', required = true)]
    pub policy: Vec<String>,
    /// `static:<theta>`, `improving:<theta>,<delta>` or `noisy:<theta>,<p>`; repeatable.
    #[arg(long, required = true)]
    pub learner: Vec<String>,
    /// Questions per episode.
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Inclusive seed range, e.g. 0..99.
    #[arg(long, default_value = "0..99")]
    pub seeds: String,
    /// Where to write the CSV table; the text table goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sequential: bool,
}

fn read_transcript(path: &Path, format: Option<TranscriptFormat>, source_id: &str) -> Result<Transcript> {
    let format = match format.or_else(|| TranscriptFormat::from_path(path)) {
        Some(f) => f,
        None => bail!("cannot tell the format of {}; pass --format", path.display()),
    };
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_transcript(&bytes, format, source_id).with_context(|| format!("parsing {}", path.display()))
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "lecture".into(), |s| s.to_string_lossy().into_owned())
}

pub fn compile(args: &CompileArgs) -> Result<usize> {
    let source_id = args.source_id.clone().unwrap_or_else(|| file_stem(&args.input));
    let transcript = read_transcript(&args.input, args.format, &source_id)?;
    let mut config = PipelineConfig::default();
    if let Some(n) = args.every_n {
        config.every_n = n;
    }
    if let Some(path) = &args.cues {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        config = config.with_cue_file(&text);
    }
    config.validate()?;
    let bytes = compile_bank(&transcript, &config)?;
    fs::write(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(pal_core::pipeline::validate_bank(&bytes).map(|b| b.len()).unwrap_or(0))
}

pub fn summarize(args: &SummarizeArgs) -> Result<()> {
    let log = fs::read_to_string(&args.session).with_context(|| format!("reading {}", args.session.display()))?;
    let session = replay(&parse_jsonl(&log)?)?;
    let transcript = read_transcript(&args.transcript, args.format, &session.bank.source_id)?;
    let profile: LearnerProfile = serde_json::from_slice(&fs::read(&args.profile).with_context(|| format!("reading {}", args.profile.display()))?)
        .context("parsing the learner profile")?;
    let report = compose_summary(
        &session,
        &transcript,
        &profile,
        &SummaryConfig::default(),
        &HashedBagEmbedder::default(),
        &TemplateSynthesizer,
    )?;
    fs::write(&args.out, report.rendered).with_context(|| format!("writing {}", args.out.display()))
}

/// `a..b`, both ends included.
pub fn parse_seed_range(s: &str) -> Result<RangeInclusive<u64>> {
    let Some((a, b)) = s.split_once("..") else {
        bail!("seed range must look like a..b, got {s:?}");
    };
    let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("empty seed range {s:?}");
    }
    Ok(a..=b)
}

pub fn simulate(args: &SimulateArgs) -> Result<String> {
    let policies: Vec<PolicyMode> = args.policy.iter().map(|p| parse_policy(p)).collect::<Result<_, _>>()?;
    let learners: Vec<SyntheticLearner> = args.learner.iter().map(|l| l.parse()).collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = parse_seed_range(&args.seeds)?.collect();
    let exec = if args.sequential { Execution::Sequential } else { Execution::default() };
    let report = compare_policies(&PolicyConfig::default(), &policies, &learners, &seeds, args.n, exec)?;
    if let Some(out) = &args.out {
        fs::write(out, report.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(report.to_text())
}

/// `PAL_DATA_DIR` wins over `--data`.
pub fn data_dir(args: &ServeArgs, env: Option<String>) -> PathBuf {
    env.filter(|s| !s.is_empty()).map_or_else(|| args.data.clone(), PathBuf::from)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile(args) => {
            let n = compile(&args)?;
            eprintln!("wrote {} questions to {}", n, args.out.display());
        }
        Command::Summarize(args) => summarize(&args)?,
        Command::Simulate(args) => print!("{}", simulate(&args)?),
        Command::Serve(args) => {
            let dir = data_dir(&args, std::env::var("PAL_DATA_DIR").ok());
            let addr = SocketAddr::from(([0, 0, 0, 0], args.port));
            tokio::runtime::Runtime::new()?.block_on(pal_service::serve(addr, dir))?;
        }
    }
    Ok(())
}
