use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use simstream::harness::{self, BoundingBox, FilterSpec, FunctionKind, InputSource, RunConfig};
use simstream::stream::io::write_ndjson;
use simstream::streamgen::{self, GenConfig};
use simstream::{EngineKind, Error, WindowConfig};

#[derive(Parser)]
#[command(name = "simstream", version, about = "Sliding-window influence maximization over action streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Slide an engine over a stream and report seeds per slide.
    Run(RunArgs),
    /// Write a synthetic stream as NDJSON.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Ic,
    Sic,
    Greedy,
    Exact,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Ic => EngineKind::Ic,
            EngineArg::Sic => EngineKind::Sic,
            EngineArg::Greedy => EngineKind::Greedy,
            EngineArg::Exact => EngineKind::Exact,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionArg {
    Cardinality,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Long response distances (mean 500,000).
    SynO,
    /// Short response distances (mean 5,000).
    SynN,
}

#[derive(Args)]
struct GenOpts {
    #[arg(long, value_enum, default_value = "syn-n")]
    preset: Preset,
    #[arg(long, default_value_t = 100_000)]
    actions: u64,
    /// Overrides the preset's user count (actions / 5).
    #[arg(long)]
    users: Option<u32>,
    /// Overrides the preset's response-distance rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Probability that an action responds to an earlier one.
    #[arg(long)]
    follow: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GenOpts {
    fn config(&self) -> GenConfig {
        let mut cfg = match self.preset {
            Preset::SynO => GenConfig::syn_o(self.actions, self.seed),
            Preset::SynN => GenConfig::syn_n(self.actions, self.seed),
        };
        if let Some(u) = self.users {
            cfg.num_users = u;
        }
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(f) = self.follow {
            cfg.follow_fraction = f;
        }
        cfg
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    engine: EngineArg,
    /// NDJSON stream, or CSV if the name ends in .csv.
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// Generate the stream instead of reading it.
    #[arg(long, required_unless_present = "input")]
    gen: bool,
    #[command(flatten)]
    gen_opts: GenOpts,
    /// Window size N.
    #[arg(long, default_value_t = 500_000)]
    n: u64,
    /// Actions per slide L.
    #[arg(long, default_value_t = 5_000)]
    l: u64,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, value_enum, default_value = "cardinality")]
    function: FunctionArg,
    /// `user,weight` CSV for the weighted function.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Keep actions carrying any of these tags.
    #[arg(long, value_delimiter = ',')]
    filter_tags: Option<Vec<String>>,
    /// Keep actions inside `min_x,min_y,max_x,max_y` (inclusive).
    #[arg(long, allow_hyphen_values = true)]
    filter_box: Option<String>,
    /// Query after every this many slides.
    #[arg(long, default_value_t = 1)]
    query_every: u64,
    #[arg(long)]
    out_results: Option<PathBuf>,
    #[arg(long)]
    out_metrics: Option<PathBuf>,
    /// JSON echo of the resolved configuration and the run summary.
    #[arg(long)]
    out_manifest: Option<PathBuf>,
    /// Fail on the first malformed record instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Update checkpoints in parallel.
    #[arg(long)]
    parallel: bool,
    /// Subset budget for the exact engine.
    #[arg(long, default_value_t = simstream::baselines::DEFAULT_BUDGET)]
    budget: u128,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    opts: GenOpts,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Writes the generator configuration and summary as JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<(), Error> {
    let window = WindowConfig { size: args.n, slide: args.l, k: args.k, beta: args.beta };
    let input = match args.input {
        Some(path) => InputSource::Path(path),
        None => InputSource::Generate(args.gen_opts.config()),
    };
    let mut cfg = RunConfig::new(args.engine.into(), window, input);
    cfg.function = match args.function {
        FunctionArg::Cardinality => FunctionKind::Cardinality,
        FunctionArg::Weighted => FunctionKind::Weighted,
    };
    cfg.weights = args.weights;
    cfg.filter = FilterSpec {
        tags: args.filter_tags.map(|t| t.into_iter().collect::<BTreeSet<_>>()),
        bbox: args.filter_box.as_deref().map(str::parse::<BoundingBox>).transpose()?,
    };
    cfg.query_every = args.query_every;
    cfg.out_results = args.out_results;
    cfg.out_metrics = args.out_metrics;
    cfg.out_manifest = args.out_manifest;
    cfg.strict = args.strict;
    cfg.parallel = args.parallel;
    cfg.exact_budget = args.budget;

    let report = harness::run(&cfg)?;
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &report.summary)?;
    writeln!(stdout)?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Error> {
    let generated = streamgen::generate(&args.opts.config())?;
    match &args.out {
        Some(path) => write_ndjson(&generated.stream, BufWriter::new(File::create(path)?))?,
        None => write_ndjson(&generated.stream, BufWriter::new(io::stdout().lock()))?,
    }
    if let Some(path) = &args.manifest {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, &generated.manifest)?;
        writeln!(out)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen(args) => gen(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simstream: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
