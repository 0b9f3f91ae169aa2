use std::io::{self, BufWriter, Write};
use std::iter::Peekable;
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use log::{info, warn};
use serde::Serialize;
use sgs_core::{
    BaseConfig, ClusterOutput, Error as CoreError, PatternBase, PointId, StreamPoint, WindowDriver,
    WindowIndex, WindowOutput,
};

use crate::input::RecordSource;
use crate::{PolicyArgs, StreamArgs};

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Directory receiving the pattern base.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// Print member ids per cluster and store member points with archived records.
    #[arg(long)]
    pub emit_full: bool,
}

pub type Records = Peekable<Box<dyn RecordSource>>;

/// Open the input and build a driver whose dimension comes from the CSV header, the
/// first record, or `--dim` for an empty input.
pub fn open_stream(args: &StreamArgs, capture: bool) -> Result<(Records, WindowDriver)> {
    let src = args.source()?;
    let declared = src.declared_dim();
    let mut records = src.peekable();
    let d = match (declared, records.peek()) {
        (Some(d), _) => d,
        (None, Some(Ok(r))) => r.x.len(),
        (None, Some(Err(_))) => return Err(records.next().unwrap().unwrap_err()),
        (None, None) => args.gen_opts.dim,
    };
    let cfg = args.engine_config(d)?;
    let driver = WindowDriver::new(cfg)?
        .with_policy(args.out_of_order())
        .capture_points(capture);
    Ok((records, driver))
}

/// Push every record through the driver, handing each closed window to `f`. Stops
/// early when `f` returns `false`.
pub fn feed(
    records: &mut Records,
    driver: &mut WindowDriver,
    mut f: impl FnMut(&WindowDriver, WindowOutput) -> Result<bool>,
) -> Result<()> {
    let time_based = driver.config().window.kind == sgs_core::WindowKind::Time;
    for rec in records.by_ref() {
        let rec = rec?;
        let (line, seq) = (rec.line, driver.records_seen() + 1);
        let at = || {
            if line > 0 {
                format!("line {line}")
            } else {
                format!("record {seq}")
            }
        };
        let t = match rec.t {
            Some(t) => t,
            None if time_based => bail!("{}: time-based windows need a stamp", at()),
            None => 0,
        };
        let windows = driver.push(rec.id, t, rec.x).with_context(at)?;
        for w in windows {
            if !f(driver, w)? {
                return Ok(());
            }
        }
    }
    for w in driver.finish()? {
        if !f(driver, w)? {
            break;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct WindowLine<'a> {
    window: WindowIndex,
    clusters: usize,
    sizes: Vec<usize>,
    live_points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    members: Option<Vec<&'a [PointId]>>,
}

struct Job {
    window: WindowIndex,
    clusters: Vec<ClusterOutput>,
    points: Option<Vec<Vec<StreamPoint>>>,
}

struct ArchiveSummary {
    base: PatternBase,
    over_budget: u64,
}

fn archiver(mut base: PatternBase, rx: mpsc::Receiver<Job>) -> Result<ArchiveSummary> {
    let mut over_budget = 0;
    for job in rx {
        let mut points = job.points.map(Vec::into_iter);
        for c in &job.clusters {
            let pts = points.as_mut().and_then(Iterator::next);
            match base.archive(&c.sgs, job.window, pts) {
                Ok(_) => {}
                Err(CoreError::BudgetExceeded { needed, .. }) => {
                    over_budget += 1;
                    warn!(
                        "cluster {} of window {} skipped: needs {needed} bytes at the coarsest level",
                        c.cluster_id, job.window
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(ArchiveSummary { base, over_budget })
}

pub fn cmd_run(a: &RunArgs) -> Result<()> {
    let (mut records, mut driver) = open_stream(&a.stream, a.emit_full)?;
    let base_cfg = BaseConfig {
        engine: driver.config().clone(),
        max_level: a.policy.max_level,
        policy: a.policy.policy(),
        seed: a.stream.seed,
    };
    let base = PatternBase::new(base_cfg)?;
    let (tx, handle) = if a.archive.is_some() {
        let (tx, rx) = mpsc::channel();
        let h = thread::Builder::new()
            .name("archiver".into())
            .spawn(move || archiver(base, rx))?;
        (Some(tx), Some(h))
    } else {
        (None, None)
    };

    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut windows = 0u64;
    let mut clusters = 0u64;
    let fed = feed(&mut records, &mut driver, |drv, w| {
        windows += 1;
        clusters += w.clusters.len() as u64;
        let line = WindowLine {
            window: w.window_index,
            clusters: w.clusters.len(),
            sizes: w.clusters.iter().map(|c| c.members.len()).collect(),
            live_points: drv.engine().map_or(0, |e| e.live_point_count()),
            members: a
                .emit_full
                .then(|| w.clusters.iter().map(|c| c.members.as_slice()).collect()),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
        if let Some(tx) = &tx {
            let points = a.emit_full.then(|| {
                (0..w.clusters.len())
                    .map(|i| w.member_points(i).unwrap_or_default())
                    .collect()
            });
            tx.send(Job {
                window: w.window_index,
                clusters: w.clusters,
                points,
            })
            .map_err(|_| anyhow!("archiver stopped"))?;
        }
        Ok(true)
    });
    out.flush()?;
    drop(tx);
    let archived = handle
        .map(|h| h.join().map_err(|_| anyhow!("archiver panicked"))?)
        .transpose()?;
    fed?;

    if let Some(stats) = driver.engine().map(|e| e.stats()) {
        info!(
            "{windows} windows, {clusters} clusters, {} points, {} range queries, {} distance computations",
            stats.points_ingested, stats.range_queries, stats.distance_computations
        );
    }
    if let (Some(dir), Some(mut s)) = (&a.archive, archived) {
        s.base.set_origin(driver.config().origin);
        s.base
            .save(dir)
            .with_context(|| format!("writing archive {}", dir.display()))?;
        info!(
            "archived {} of {} clusters into {} ({} over budget)",
            s.base.len(),
            s.base.decisions(),
            dir.display(),
            s.over_budget
        );
    }
    Ok(())
}
