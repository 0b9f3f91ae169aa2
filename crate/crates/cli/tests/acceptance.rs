//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgs_core::matcher::{
    cell_level_distance, feature_range_bounds, search_alignment, start_alignment,
};
use sgs_core::multires::compress;
use sgs_core::oracle::{assert_equivalent, naive_window};
use sgs_core::pattern_base::codec::{encode_points, encode_sgs};
use sgs_core::synth::{random_sgs, BlobConfig, BlobStream};
use sgs_core::verify::{check_lemmas, LemmaReport, LifespanSnapshot};
use sgs_core::{
    execute_match, exhaustive_match, ArchivePolicy, BaseConfig, CellCoord, ClusterOutput,
    ClusterParams, EngineConfig, EngineStats, MatchQuery, PatternBase, PatternRecord, SgsSummary,
    WindowDriver, WindowSpec,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

// ---------------------------------------------------------------------------
// Oracle runs shared by criteria 1 to 3

struct StreamRun {
    label: String,
    windows: usize,
    passed: usize,
    first_failure: Option<String>,
    max_points: usize,
    stats: EngineStats,
    lemmas: LemmaReport,
    lifespan_violations: Vec<String>,
    lifespan_pairs: usize,
}

struct OracleRuns {
    runs: Vec<StreamRun>,
    elapsed: Duration,
}

struct RunSpec {
    window: WindowSpec,
    params: ClusterParams,
    blobs: BlobConfig,
    /// Stamps advance by a uniform draw from `0..=max_gap`; count windows ignore them.
    max_gap: i64,
    windows: usize,
}

fn oracle_run(spec: &RunSpec) -> StreamRun {
    let cfg = EngineConfig::new(spec.window, spec.params, spec.blobs.d).unwrap();
    let mut driver = WindowDriver::new(cfg.clone()).unwrap().capture_points(true);
    let mut stream = BlobStream::new(spec.blobs.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.blobs.seed ^ 0x5eed);
    let mut run = StreamRun {
        label: format!(
            "{:?} win={} slide={} r={} k={}",
            spec.window.kind,
            spec.window.win,
            spec.window.slide,
            spec.params.range_threshold,
            spec.params.count_threshold
        ),
        windows: 0,
        passed: 0,
        first_failure: None,
        max_points: 0,
        stats: EngineStats::default(),
        lemmas: LemmaReport::default(),
        lifespan_violations: Vec::new(),
        lifespan_pairs: 0,
    };
    let mut prev: Option<LifespanSnapshot> = None;
    let mut t = 1;
    while run.windows < spec.windows {
        let x = stream.next().unwrap();
        for w in driver.push(None, t, x).unwrap() {
            let points = w.points.as_deref().unwrap();
            run.max_points = run.max_points.max(points.len());
            let oracle = naive_window(points, &cfg.params, &cfg.grid, cfg.rho);
            let report = assert_equivalent(&w.clusters, &oracle);
            run.windows += 1;
            if report.passed() {
                run.passed += 1;
            } else if run.first_failure.is_none() {
                run.first_failure = Some(format!("window {}: {report}", w.window_index));
            }
            run.lemmas.merge(check_lemmas(
                &w.clusters,
                points,
                &cfg.params,
                &mut rng,
                20,
                50,
            ));
            let engine = driver.engine().unwrap();
            if engine.window_index() == w.window_index {
                let snap = LifespanSnapshot::capture(engine);
                if let Some(p) = prev.as_ref().filter(|p| p.window() + 1 == snap.window()) {
                    run.lifespan_pairs += 1;
                    run.lifespan_violations.extend(p.violations(&snap));
                }
                prev = Some(snap);
            } else {
                prev = None;
            }
        }
        t += rng.random_range(0..=spec.max_gap);
    }
    run.stats = driver.engine().unwrap().stats();
    run
}

fn oracle_runs() -> &'static OracleRuns {
    static RUNS: OnceLock<OracleRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let blobs = |seed, blobs, sigma, noise| BlobConfig {
            d: 2,
            blobs,
            extent: 1.0,
            sigma,
            speed: 2e-5,
            noise,
            seed,
        };
        let count = WindowSpec::count(2000, 200).unwrap();
        let specs = [
            RunSpec {
                window: count,
                params: ClusterParams::new(0.05, 10).unwrap(),
                blobs: blobs(1, 5, 0.03, 0.05),
                max_gap: 1,
                windows: 60,
            },
            RunSpec {
                window: count,
                params: ClusterParams::new(0.1, 8).unwrap(),
                blobs: blobs(2, 5, 0.05, 0.1),
                max_gap: 1,
                windows: 60,
            },
            RunSpec {
                window: count,
                params: ClusterParams::new(0.2, 5).unwrap(),
                blobs: blobs(3, 8, 0.05, 0.2),
                max_gap: 1,
                windows: 60,
            },
            // sparse and time based: many small clusters, several points per stamp
            RunSpec {
                window: WindowSpec::time(1500, 150).unwrap(),
                params: ClusterParams::new(0.05, 4).unwrap(),
                blobs: blobs(4, 16, 0.04, 0.5),
                max_gap: 2,
                windows: 60,
            },
        ];
        let start = Instant::now();
        let runs = std::thread::scope(|s| {
            let handles: Vec<_> = specs.iter().map(|sp| s.spawn(|| oracle_run(sp))).collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        OracleRuns {
            runs,
            elapsed: start.elapsed(),
        }
    })
}

fn criterion_oracle() -> Outcome {
    let r = oracle_runs();
    let windows: usize = r.runs.iter().map(|x| x.windows).sum();
    let passed: usize = r.runs.iter().map(|x| x.passed).sum();
    let max_points = r.runs.iter().map(|x| x.max_points).max().unwrap_or(0);
    for run in &r.runs {
        ensure!(
            run.passed == run.windows,
            "{}: {}/{} windows identical, first failure {}",
            run.label,
            run.passed,
            run.windows,
            run.first_failure.as_deref().unwrap_or("?")
        );
    }
    ensure!(windows >= 200, "only {windows} windows compared");
    ensure!(max_points <= 2000, "a window held {max_points} points");
    ensure!(r.elapsed < Duration::from_secs(300), "took {:?}", r.elapsed);
    Ok(format!(
        "{passed}/{windows} windows identical over {} runs, at most {max_points} points per window, {:.1}s",
        r.runs.len(),
        r.elapsed.as_secs_f64()
    ))
}

fn criterion_counters() -> Outcome {
    let r = oracle_runs();
    let (mut points, mut queries, mut advances) = (0, 0, 0);
    for run in &r.runs {
        let s = &run.stats;
        ensure!(
            s.advance_range_queries == 0 && s.advance_distance_computations == 0,
            "{}: expiration performed {} range queries and {} distance computations",
            run.label,
            s.advance_range_queries,
            s.advance_distance_computations
        );
        ensure!(
            s.range_queries == s.points_ingested,
            "{}: {} range queries for {} points",
            run.label,
            s.range_queries,
            s.points_ingested
        );
        ensure!(
            s.advances > 0 && s.points_expired > 0,
            "{}: nothing expired",
            run.label
        );
        points += s.points_ingested;
        queries += s.range_queries;
        advances += s.advances;
    }
    Ok(format!(
        "{queries} range queries for {points} points, 0 queries and 0 distance computations in {advances} expirations"
    ))
}

fn criterion_lemmas() -> Outcome {
    let r = oracle_runs();
    let mut total = LemmaReport::default();
    let mut pairs = 0;
    for run in &r.runs {
        ensure!(
            run.lemmas.passed(),
            "{}: {} violations, first: {}",
            run.label,
            run.lemmas.violations.len(),
            run.lemmas.violations[0]
        );
        ensure!(
            run.lifespan_violations.is_empty(),
            "{}: {} lifespan violations, first: {}",
            run.label,
            run.lifespan_violations.len(),
            run.lifespan_violations[0]
        );
        total.merge(run.lemmas.clone());
        pairs += run.lifespan_pairs;
    }
    ensure!(
        total.checked.iter().all(|&c| c > 0),
        "some property was never exercised: {:?}",
        total.checked
    );
    Ok(format!(
        "checks per property {:?}, {pairs} consecutive lifespan snapshots, 0 violations",
        total.checked
    ))
}

// ---------------------------------------------------------------------------

fn criterion_compression() -> Outcome {
    let params = ClusterParams::new(0.05, 10).unwrap();
    let cfg = EngineConfig::new(WindowSpec::count(10_000, 2_000).unwrap(), params, 2).unwrap();
    let mut driver = WindowDriver::new(cfg).unwrap().capture_points(true);
    let stream = BlobStream::new(BlobConfig {
        blobs: 5,
        sigma: 0.02,
        noise: 0.02,
        seed: 11,
        ..BlobConfig::default()
    })
    .unwrap();
    let (mut sgs_bytes, mut full_bytes, mut cells, mut members) = (0usize, 0usize, 0usize, 0usize);
    for x in stream.take(20_000) {
        for w in driver.push(None, 0, x).unwrap() {
            for (i, c) in w.clusters.iter().enumerate() {
                sgs_bytes += encode_sgs(&c.sgs).map_err(|e| e.to_string())?.len();
                full_bytes += encode_points(&w.member_points(i).unwrap()).len();
                cells += c.sgs.cells.len();
                members += c.members.len();
            }
        }
    }
    ensure!(cells > 0, "no clusters");
    let per_cell = members as f64 / cells as f64;
    let ratio = sgs_bytes as f64 / full_bytes as f64;
    ensure!(
        per_cell >= 30.0,
        "workload not dense enough: {per_cell:.1} points per cell"
    );
    ensure!(ratio <= 0.05, "ratio {:.4}% exceeds 5%", ratio * 100.0);
    Ok(format!(
        "{sgs_bytes} summary bytes vs {full_bytes} point bytes = {:.3}% ({per_cell:.1} points per occupied cell)",
        ratio * 100.0
    ))
}

// ---------------------------------------------------------------------------

/// Connected components of the undirected connection graph, as sets of locations.
fn components(s: &SgsSummary) -> Vec<BTreeSet<CellCoord>> {
    let mut adj: BTreeMap<CellCoord, Vec<CellCoord>> = s
        .cells
        .iter()
        .map(|c| (c.location.clone(), Vec::new()))
        .collect();
    for c in &s.cells {
        for o in &c.connections {
            let other = c.location.offset(&o.0);
            adj.get_mut(&c.location).unwrap().push(other.clone());
            adj.entry(other).or_default().push(c.location.clone());
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in adj.keys() {
        if seen.contains(start) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![start.clone()];
        while let Some(x) = stack.pop() {
            if !seen.insert(x.clone()) {
                continue;
            }
            stack.extend(adj[&x].iter().cloned());
            comp.insert(x);
        }
        out.push(comp);
    }
    out
}

fn check_coarsening(fine: &SgsSummary, coarse: &SgsSummary) -> Result<(), String> {
    let rho = fine.rho;
    ensure!(
        fine.total_population() == coarse.total_population(),
        "population {} became {}",
        fine.total_population(),
        coarse.total_population()
    );
    let (fs, cs) = (fine.side(), coarse.side());
    let tol = 1e-9 * cs;
    let parents: BTreeSet<CellCoord> = fine
        .cells
        .iter()
        .map(|c| c.location.parent(rho, 1))
        .collect();
    let got: BTreeSet<CellCoord> = coarse.cells.iter().map(|c| c.location.clone()).collect();
    ensure!(
        parents == got,
        "coarse cells are not exactly the parents of the fine cells"
    );
    for c in &fine.cells {
        let p = c.location.parent(rho, 1);
        let (clo, plo) = (
            fine.grid.min_corner(&c.location, fs),
            coarse.grid.min_corner(&p, cs),
        );
        for i in 0..fine.dim() {
            ensure!(
                plo[i] <= clo[i] + tol && clo[i] + fs <= plo[i] + cs + tol,
                "cell {:?} is not inside its parent {:?}",
                c.location,
                p
            );
        }
    }
    let coarse_comp: HashMap<CellCoord, usize> = components(coarse)
        .into_iter()
        .enumerate()
        .flat_map(|(i, set)| set.into_iter().map(move |x| (x, i)))
        .collect();
    for comp in components(fine) {
        let ids: BTreeSet<usize> = comp
            .iter()
            .map(|x| coarse_comp[&x.parent(rho, 1)])
            .collect();
        ensure!(
            ids.len() == 1,
            "a connected group split into {} groups",
            ids.len()
        );
    }
    Ok(())
}

fn criterion_multires() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for rho in [2u32, 3] {
        for i in 0..100 {
            let d = 2 + i % 2;
            let n = rng.random_range(1..120);
            let mut s = random_sgs(&mut rng, d, n, rho);
            for _ in 0..3 {
                let c = compress(&s);
                check_coarsening(&s, &c)
                    .map_err(|e| format!("rho={rho} summary {i} level {}: {e}", s.level))?;
                checked += 1;
                s = c;
            }
        }
    }
    Ok(format!(
        "{checked} coarsening steps over 200 random summaries, rho 2 and 3"
    ))
}

fn criterion_pruning() -> Outcome {
    let b = feature_range_bounds(20.0, 0.4, 0.2, true);
    ensure!(b.lo == 14.0 && b.hi == 30.0, "got [{}, {}]", b.lo, b.hi);
    Ok(format!("[{}, {}]", b.lo, b.hi))
}

// ---------------------------------------------------------------------------
// Archived clusters for criteria 7 and 8

fn archive_params() -> EngineConfig {
    EngineConfig::new(
        WindowSpec::count(300, 30).unwrap(),
        ClusterParams::new(0.05, 6).unwrap(),
        2,
    )
    .unwrap()
}

/// Clusters of `n` consecutive windows over several seeded blob streams.
fn archived_clusters(n: usize) -> Vec<ClusterOutput> {
    let cfg = archive_params();
    let mut out = Vec::new();
    let mut seed = 100;
    while out.len() < n {
        let mut driver = WindowDriver::new(cfg.clone()).unwrap();
        let stream = BlobStream::new(BlobConfig {
            blobs: 3 + (seed % 5) as usize,
            sigma: 0.02 + 0.005 * (seed % 4) as f64,
            speed: 2e-4,
            noise: 0.05,
            seed,
            ..BlobConfig::default()
        })
        .unwrap();
        for x in stream.take(30_000) {
            for w in driver.push(None, 0, x).unwrap() {
                out.extend(w.clusters);
            }
            if out.len() >= n {
                break;
            }
        }
        seed += 1;
    }
    out.truncate(n);
    out
}

fn base_of(clusters: &[ClusterOutput], coarse_every: usize) -> PatternBase {
    let mut base = PatternBase::new(BaseConfig {
        engine: archive_params(),
        max_level: 3,
        policy: ArchivePolicy::default(),
        seed: 0,
    })
    .unwrap();
    for (i, c) in clusters.iter().enumerate() {
        let sgs = if i % coarse_every == coarse_every - 1 {
            compress(&c.sgs)
        } else {
            c.sgs.clone()
        };
        base.insert(PatternRecord::new(0, c.window_index, sgs).unwrap());
    }
    base
}

fn criterion_matching() -> Outcome {
    let clusters = archived_clusters(10_000);
    let weights = [
        [0.25; 4],
        [0.4, 0.2, 0.2, 0.2],
        [0.1, 0.1, 0.4, 0.4],
        [0.0, 0.5, 0.5, 0.0],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut report = Vec::new();
    for n in [100usize, 1_000, 10_000] {
        let base = base_of(&clusters[..n], 5);
        let mut queries = Vec::new();
        for i in 0..12 {
            let rec = base.get(rng.random_range(0..n as u64)).unwrap();
            let mut target = rec.sgs.clone();
            if i % 4 == 3 && target.level == 0 {
                target = compress(&target);
            }
            let q = MatchQuery::new(target, i % 2 == 1, weights[i % 4], [0.1, 0.2, 0.3][i % 3])
                .map_err(|e| e.to_string())?;
            queries.push(q);
        }
        let mut fast = Duration::ZERO;
        let mut hits = 0;
        for (i, q) in queries.iter().enumerate() {
            let t0 = Instant::now();
            let got = execute_match(q, &base).map_err(|e| e.to_string())?;
            fast += t0.elapsed();
            let want = exhaustive_match(q, &base).map_err(|e| e.to_string())?;
            ensure!(
                got == want,
                "base {n}, query {i}: {} indexed results vs {} exhaustive",
                got.len(),
                want.len()
            );
            hits += got.len();
        }
        if n == 10_000 {
            ensure!(fast <= Duration::from_secs(30), "10K queries took {fast:?}");
        }
        report.push(format!(
            "{n} records: {} queries, {hits} results, {:.3}s",
            queries.len(),
            fast.as_secs_f64()
        ));
    }
    Ok(report.join("; "))
}

fn criterion_alignment() -> Outcome {
    let clusters = archived_clusters(400);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let weights = [0.25; 4];
    let budgets = [1, 2, 4, 8, 16, 32, 64, 128, 256, 500];
    let mut recovered = 0;
    let mut evals = Vec::new();
    for case in 0..50 {
        let a = &clusters[rng.random_range(0..clusters.len())].sgs;
        let shift: Vec<i32> = (0..a.dim()).map(|_| rng.random_range(-40..=40)).collect();
        let b = a.shifted(&shift);
        let start = cell_level_distance(a, &b, &start_alignment(a, &b), &weights)
            .map_err(|e| e.to_string())?;
        let mut last = f64::INFINITY;
        for &budget in &budgets {
            let r = search_alignment(a, &b, &weights, budget).map_err(|e| e.to_string())?;
            ensure!(
                r.distance <= start && r.distance <= last && r.evaluations <= budget,
                "case {case}: budget {budget} gave {} after {} (start {start})",
                r.distance,
                last
            );
            last = r.distance;
            if budget == 500 {
                recovered += (r.distance == 0.0) as usize;
                evals.push(r.evaluations);
            }
        }
    }
    ensure!(
        recovered >= 48,
        "distance 0 recovered in {recovered}/50 cases"
    );
    let mean = evals.iter().sum::<usize>() as f64 / evals.len() as f64;
    Ok(format!(
        "distance 0 in {recovered}/50 cases, {mean:.1} evaluations on average, dominance held for budgets {budgets:?}"
    ))
}

// ---------------------------------------------------------------------------

fn run_cli(dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sgs"))
        .args([
            "run",
            "--gen",
            "blobs",
            "--seed",
            "7",
            "--gen-count",
            "20000",
            "--win",
            "2000",
            "--slide",
            "500",
            "--theta-r",
            "0.05",
            "--theta-c",
            "10",
            "--policy",
            "sample:0.6",
            "--budget-bytes",
            "600",
            "--emit-full",
            "--archive",
        ])
        .arg(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "sgs run failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(out.stdout)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn criterion_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out_a = run_cli(&a)?;
    let out_b = run_cli(&b)?;
    ensure!(out_a == out_b, "window output differs");
    let (fa, fb) = (snapshot(&a), snapshot(&b));
    ensure!(fa.len() > 2, "archive is nearly empty: {} files", fa.len());
    ensure!(
        fa.keys().eq(fb.keys()),
        "file lists differ: {} vs {} files",
        fa.len(),
        fb.len()
    );
    for (k, v) in &fa {
        ensure!(fb[k] == *v, "{k} differs");
    }
    let bytes: usize = fa.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes, identical", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", criterion_oracle),
        ("expiration cost", criterion_counters),
        (
            "lifespan monotonicity and summary properties",
            criterion_lemmas,
        ),
        ("compression", criterion_compression),
        ("multi-resolution", criterion_multires),
        ("pruning example", criterion_pruning),
        ("matching exactness", criterion_matching),
        ("alignment recovery", criterion_alignment),
        ("determinism", criterion_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "{}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
