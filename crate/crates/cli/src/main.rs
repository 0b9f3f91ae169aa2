mod export;
mod input;
mod query;
mod run;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sgs_core::synth::BlobConfig;
use sgs_core::{
    ArchivePolicy, ClusterParams, EngineConfig, OutOfOrderPolicy, Resolution, Selection,
    WindowKind, WindowSpec,
};

use input::{Format, GenSource, RecordSource};

#[derive(Parser)]
#[command(
    name = "sgs",
    version,
    about = "Streaming density-based clustering with skeletal grid summaries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a stream window by window and archive the summaries.
    Run(run::RunArgs),
    /// Match a cluster against an archive.
    Match(query::MatchArgs),
    /// Run the engine next to the brute-force oracle and compare every window.
    Verify(verify::VerifyArgs),
    /// Write an archived summary or its points as CSV.
    Export(export::ExportArgs),
    /// Write a synthetic blob stream as JSON Lines or CSV.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Blobs,
}

/// Synthetic stream parameters.
#[derive(Args, Debug, Clone)]
pub struct GenOpts {
    /// Number of generated points.
    #[arg(long = "gen-count", default_value_t = 10_000)]
    pub count: u64,
    /// Dimension of generated points (and of an empty input).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub blobs: usize,
    #[arg(long, default_value_t = 0.03)]
    pub sigma: f64,
    /// Fraction of uniform noise points.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Distance a blob center moves per point.
    #[arg(long, default_value_t = 1e-5)]
    pub speed: f64,
}

impl GenOpts {
    pub fn blob_config(&self, seed: u64) -> BlobConfig {
        BlobConfig {
            d: self.dim,
            blobs: self.blobs,
            extent: 1.0,
            sigma: self.sigma,
            speed: self.speed,
            noise: self.noise,
            seed,
        }
    }
}

/// Window, density and input options shared by `run` and `verify`.
#[derive(Args, Debug, Clone)]
pub struct StreamArgs {
    /// Window size (tuples, or time units with --time-based).
    #[arg(long)]
    pub win: i64,
    #[arg(long)]
    pub slide: i64,
    #[arg(long)]
    pub time_based: bool,
    /// Neighbor radius.
    #[arg(long)]
    pub theta_r: f64,
    /// Neighbor count that makes a point core (the point itself excluded).
    #[arg(long)]
    pub theta_c: usize,
    /// Coarsening factor between resolution levels.
    #[arg(long, default_value_t = 3)]
    pub rho: u32,
    /// Input file, `-` for stdin. Defaults to stdin unless --gen is given.
    #[arg(long, conflicts_with = "gen")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, value_enum)]
    pub gen: Option<Generator>,
    #[command(flatten)]
    pub gen_opts: GenOpts,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sort records that arrive out of order within a slide instead of rejecting them.
    #[arg(long)]
    pub sort_within_slide: bool,
}

impl StreamArgs {
    pub fn source(&self) -> Result<Box<dyn RecordSource>> {
        match (self.gen, &self.input) {
            (Some(Generator::Blobs), _) => Ok(Box::new(GenSource::new(
                self.gen_opts.blob_config(self.seed),
                self.gen_opts.count,
            )?)),
            (None, Some(p)) => input::open(p, self.format),
            (None, None) => input::open(&PathBuf::from("-"), self.format),
        }
    }

    pub fn engine_config(&self, d: usize) -> Result<EngineConfig> {
        let kind = if self.time_based {
            WindowKind::Time
        } else {
            WindowKind::Count
        };
        let window = WindowSpec::new(kind, self.win, self.slide)?;
        let params = ClusterParams::new(self.theta_r, self.theta_c)?;
        let mut cfg = EngineConfig::new(window, params, d)?;
        if self.rho < 2 {
            bail!("--rho must be at least 2");
        }
        cfg.rho = self.rho;
        Ok(cfg)
    }

    pub fn out_of_order(&self) -> OutOfOrderPolicy {
        if self.sort_within_slide {
            OutOfOrderPolicy::SortWithinSlide
        } else {
            OutOfOrderPolicy::Reject
        }
    }
}

/// Archive policy options of `run`.
#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    /// `all`, `sample:<rate>` or `predicate:min_pop=<n>,min_vol=<n>`.
    #[arg(long, default_value = "all")]
    pub policy: Selection,
    /// Fixed archive level.
    #[arg(long, default_value_t = 0, conflicts_with = "budget_bytes")]
    pub level: u8,
    /// Archive each cluster at the finest level that fits this many bytes.
    #[arg(long)]
    pub budget_bytes: Option<u64>,
    /// Coarsest level available to --budget-bytes.
    #[arg(long, default_value_t = 3)]
    pub max_level: u8,
}

impl PolicyArgs {
    pub fn policy(&self) -> ArchivePolicy {
        ArchivePolicy {
            selection: self.policy,
            resolution: match self.budget_bytes {
                Some(b) => Resolution::Budget(b),
                None => Resolution::Level(self.level),
            },
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    opts: GenOpts,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let mut out = export::output(a.output.as_deref())?;
    let d = a.opts.dim;
    if a.format == Format::Csv {
        let cols: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
        writeln!(out, "t,{}", cols.join(","))?;
    }
    for r in GenSource::new(a.opts.blob_config(a.seed), a.opts.count)? {
        let r = r?;
        let t = r.t.unwrap_or_default();
        match a.format {
            Format::Jsonl => writeln!(out, "{}", serde_json::json!({ "t": t, "x": r.x }))?,
            Format::Csv => {
                let xs: Vec<String> = r.x.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{t},{}", xs.join(","))?
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .and_then(|j| j.io_error_kind())
                .is_some_and(|k| k == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SGS_LOG", "warn")).init();
    let cli = Cli::parse();
    let ok = |r: Result<()>| r.map(|()| ExitCode::SUCCESS);
    let res = match &cli.command {
        Command::Run(a) => ok(run::cmd_run(a)),
        Command::Match(a) => ok(query::cmd_match(a)),
        Command::Verify(a) => verify::cmd_verify(a).map(|pass| {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }),
        Command::Export(a) => ok(export::cmd_export(a)),
        Command::Gen(a) => ok(cmd_gen(a)),
    };
    match res {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
