//! Command-line front end for the PCM simulator.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pcmsim::experiment::{run_comparison, write_outputs, ExperimentConfig};
use pcmsim::metrics::{mfv_coverage, write_coverage_csv};
use pcmsim::schemes::SchemeId;
use pcmsim::trace::{self, Preset};

#[derive(Parser, Debug)]
#[command(name = "pcmsim", version, about = "Trace-driven PCM write-encoding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replay a trace under each scheme and write reports.
    Run(RunArgs),
    /// Generate a synthetic trace.
    Gen(GenArgs),
    /// Print the granule-value coverage table of a trace.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    ReadHeavy,
    Balanced,
    WriteHeavy,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::ReadHeavy => Preset::ReadHeavy,
            PresetArg::Balanced => Preset::Balanced,
            PresetArg::WriteHeavy => Preset::WriteHeavy,
        }
    }
}

/// Options shared by `run` and `gen` that adjust the loaded config.
#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.gen.seed = s;
        }
        if let Some(p) = self.preset {
            cfg.gen.preset = Some(p.into());
            cfg.gen.read_fraction = None;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Replay this trace instead of generating one.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for reports.csv and reports.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated scheme list.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<SchemeId>>,
    /// Replay cyclically until half the pages have failed.
    #[arg(long)]
    lifetime: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Output trace file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    events: Option<usize>,
    /// Memory size in blocks.
    #[arg(long)]
    blocks: Option<u64>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Supplies the block size; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    granule_bits: usize,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(t) = args.trace {
        cfg.trace.path = Some(t);
    }
    if let Some(s) = args.schemes {
        cfg.schemes = s;
    }
    if args.lifetime {
        cfg.lifetime = true;
    }
    cfg.validate()?;
    let events = cfg.load_trace().context("loading trace")?;
    let runs = run_comparison(&cfg, &events)?;
    let dir = args
        .out
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let (csv, json) = write_outputs(&dir, &cfg, events.len(), &runs)?;

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "{:<10} {:>10} {:>12} {:>14} {:>8} {:>14}",
        "scheme", "writes", "data_flips", "energy_pj", "intrav", "lifetime"
    )?;
    for r in &runs {
        let r = &r.report;
        let life = r.lifetime_writes.map_or("-".to_string(), |w| w.to_string());
        writeln!(
            out,
            "{:<10} {:>10} {:>12} {:>14.4e} {:>8.4} {:>14}",
            r.scheme.to_string(),
            r.writes,
            r.data_flips(),
            r.energy_pj,
            r.intrav,
            life
        )?;
        for n in &r.notes {
            eprintln!("{}: {n}", r.scheme);
        }
    }
    writeln!(out, "wrote {} and {}", csv.display(), json.display())?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(n) = args.events {
        cfg.gen.events = n;
    }
    if let Some(b) = args.blocks {
        cfg.memory_blocks = b;
    }
    let events = trace::generate(&cfg.gen_spec())?;
    match args.out {
        Some(p) => {
            let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
            trace::emit_trace(BufWriter::new(f), &events)?;
        }
        None => trace::emit_trace(BufWriter::new(io::stdout().lock()), &events)?,
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    if !matches!(args.granule_bits, 1 | 2 | 4 | 8) {
        bail!("granule bits must be 1, 2, 4 or 8");
    }
    let block_bytes = match &args.config {
        Some(p) => ExperimentConfig::load(p)?.pcm.block_bytes,
        None => ExperimentConfig::default().pcm.block_bytes,
    };
    let f = File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let events = trace::parse_trace(BufReader::new(f), block_bytes)?;
    let table = mfv_coverage(&events, args.granule_bits);
    match args.out {
        Some(p) => write_coverage_csv(
            File::create(&p).with_context(|| format!("creating {}", p.display()))?,
            &table,
        )?,
        None => write_coverage_csv(io::stdout().lock(), &table)?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Gen(a) => gen(a),
        Command::Analyze(a) => analyze(a),
    }
}
