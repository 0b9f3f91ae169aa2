use std::io::{self, Write};
use std::time::{Duration, Instant};

use anyhow::Result;
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sgs_core::oracle::{assert_equivalent, naive_window};
use sgs_core::verify::{check_lemmas, LemmaReport, LifespanSnapshot};

use crate::run::{feed, open_stream};
use crate::StreamArgs;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Number of windows to compare.
    #[arg(long, default_value_t = 200)]
    pub windows: usize,
    /// Also check the summary properties and lifespan monotonicity on every window.
    #[arg(long)]
    pub lemmas: bool,
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let mut out = io::stdout().lock();
    if a.windows == 0 {
        writeln!(out, "0/0 windows identical")?;
        return Ok(true);
    }
    let (mut records, mut driver) = open_stream(&a.stream, true)?;
    let params = driver.config().params;
    let rho = driver.config().rho;
    let mut rng = ChaCha8Rng::seed_from_u64(a.stream.seed);
    let (mut seen, mut passed) = (0usize, 0usize);
    let mut lemmas = LemmaReport::default();
    let mut lifespan_violations = 0usize;
    let mut prev: Option<LifespanSnapshot> = None;
    let mut checking = Duration::ZERO;
    let start = Instant::now();
    feed(&mut records, &mut driver, |drv, w| {
        let t0 = Instant::now();
        let engine = drv.engine().expect("engine exists once a window closes");
        let points = w.points.as_deref().unwrap_or_default();
        let grid = &engine.config().grid;
        let report = assert_equivalent(&w.clusters, &naive_window(points, &params, grid, rho));
        seen += 1;
        passed += report.passed() as usize;
        writeln!(out, "window {}: {report}", w.window_index)?;
        if a.lemmas {
            let rep = check_lemmas(&w.clusters, points, &params, &mut rng, 20, 50);
            for v in &rep.violations {
                writeln!(out, "  lemma violation: {v}")?;
            }
            lemmas.merge(rep);
            // the engine may already be past this window when one record closes several
            if engine.window_index() == w.window_index {
                let snap = LifespanSnapshot::capture(engine);
                if let Some(p) = prev.as_ref().filter(|p| p.window() + 1 == snap.window()) {
                    for v in p.violations(&snap) {
                        lifespan_violations += 1;
                        writeln!(out, "  lifespan violation: {v}")?;
                    }
                }
                prev = Some(snap);
            } else {
                prev = None;
            }
        }
        checking += t0.elapsed();
        Ok(seen < a.windows)
    })?;
    let engine_time = start.elapsed().saturating_sub(checking);
    let mut ok = passed == seen;
    writeln!(out, "{passed}/{seen} windows identical")?;
    if let Some(e) = driver.engine() {
        let s = e.stats();
        let slides = (seen as u64 + e.config().window.bootstrap_slides())
            .saturating_sub(1)
            .max(1);
        writeln!(
            out,
            "points ingested {}, range queries {}, distance computations {}, on expiration {}/{}",
            s.points_ingested,
            s.range_queries,
            s.distance_computations,
            s.advance_range_queries,
            s.advance_distance_computations
        )?;
        writeln!(
            out,
            "per-slide processing {:.3} ms over {slides} slides",
            engine_time.as_secs_f64() * 1e3 / slides as f64
        )?;
    }
    if a.lemmas {
        writeln!(
            out,
            "lemma checks {:?}, violations {}, lifespan violations {lifespan_violations}",
            lemmas.checked,
            lemmas.violations.len()
        )?;
        ok &= lemmas.passed() && lifespan_violations == 0;
    }
    Ok(ok)
}
