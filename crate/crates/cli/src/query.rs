use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;
use serde::{Deserialize, Deserializer};
use sgs_core::multires::compress_to;
use sgs_core::{execute_match, exhaustive_match, MatchQuery, PatternBase, SgsSummary};

#[derive(Args, Debug)]
pub struct MatchArgs {
    /// Archive directory.
    #[arg(long)]
    pub archive: PathBuf,
    /// Query document (JSON), `-` for stdin.
    #[arg(long, conflicts_with = "record")]
    pub query: Option<PathBuf>,
    /// Use this archived record as the target.
    #[arg(long)]
    pub record: Option<u64>,
    /// Position-sensitive matching.
    #[arg(long)]
    pub ps: bool,
    /// Weights of volume, core count, density and connectivity.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.25, 0.25, 0.25, 0.25])]
    pub weights: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub threshold: f64,
    /// Alignment evaluations per candidate.
    #[arg(long, default_value_t = 500)]
    pub budget: usize,
    /// Coarsen the target to this level first.
    #[arg(long)]
    pub level: Option<u8>,
    /// Also run the exhaustive scan and fail unless both answers are identical.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Deserialize, Debug)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TargetDoc {
    Record(u64),
    Sgs(SgsSummary),
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flag {
        Bool(bool),
        Int(u8),
    }
    match Flag::deserialize(d)? {
        Flag::Bool(b) => Ok(b),
        Flag::Int(0) => Ok(false),
        Flag::Int(1) => Ok(true),
        Flag::Int(n) => Err(serde::de::Error::custom(format!(
            "ps must be 0 or 1, got {n}"
        ))),
    }
}

/// Query document: `{"target": {"record": 3}, "ps": 0, "weights": [..], "threshold": 0.2,
/// "budget": 500, "level": 1}`; everything but the target is optional.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct QueryDoc {
    target: TargetDoc,
    #[serde(default, alias = "position_sensitive", deserialize_with = "flag")]
    ps: bool,
    #[serde(default = "default_weights")]
    weights: [f64; 4],
    #[serde(default = "default_threshold")]
    threshold: f64,
    #[serde(default = "default_budget")]
    budget: usize,
    #[serde(default)]
    level: Option<u8>,
}

fn default_weights() -> [f64; 4] {
    [0.25; 4]
}

fn default_threshold() -> f64 {
    0.2
}

fn default_budget() -> usize {
    500
}

fn read_doc(path: &Path) -> Result<QueryDoc> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    }
    serde_json::from_str(&text).with_context(|| format!("bad query document {}", path.display()))
}

fn build_query(a: &MatchArgs, base: &PatternBase) -> Result<MatchQuery> {
    let doc = match (&a.query, a.record) {
        (Some(p), _) => read_doc(p)?,
        (None, Some(id)) => QueryDoc {
            target: TargetDoc::Record(id),
            ps: a.ps,
            weights: a
                .weights
                .as_slice()
                .try_into()
                .context("need four weights")?,
            threshold: a.threshold,
            budget: a.budget,
            level: a.level,
        },
        (None, None) => bail!("give --query or --record"),
    };
    let mut target = match doc.target {
        TargetDoc::Record(id) => base.get(id)?.sgs.clone(),
        TargetDoc::Sgs(mut s) => {
            s.normalize();
            s
        }
    };
    if let Some(l) = doc.level {
        target = compress_to(&target, l)?;
    }
    Ok(MatchQuery::new(target, doc.ps, doc.weights, doc.threshold)?.with_budget(doc.budget)?)
}

pub fn cmd_match(a: &MatchArgs) -> Result<()> {
    let base = PatternBase::load(&a.archive)?;
    let q = build_query(a, &base)?;
    let start = Instant::now();
    let results = execute_match(&q, &base)?;
    info!("{} matches in {:?}", results.len(), start.elapsed());
    if a.oracle {
        let slow = exhaustive_match(&q, &base)?;
        if slow != results {
            bail!(
                "oracle: divergence ({} indexed matches vs {} exhaustive)",
                results.len(),
                slow.len()
            );
        }
        eprintln!("oracle: identical");
    }
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &results)?;
    out.write_all(b"\n")?;
    Ok(())
}
