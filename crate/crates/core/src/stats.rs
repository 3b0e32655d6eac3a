//! Stream replay with counters, periodic audits, per-window CSV and a small
//! benchmark driver.

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::engine::{Counters, Engine, EngineError, LemmaViolation, Params};
use crate::streams::{gen_forest_union, UpdateStream};
use crate::verify::{check_invariants, AuditReport};

/// Totals for one replay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsRecord {
    pub updates: u64,
    pub mis_additions: u64,
    pub mis_removals: u64,
    pub sum_s_plus: u64,
    pub sum_s_minus: u64,
    pub flips: u64,
    pub elem_ops: u64,
    pub lemma_violations: u64,
    pub wall_ns: u64,
    pub final_mis: usize,
}

impl StatsRecord {
    fn from_counters(c: &Counters, wall_ns: u64, final_mis: usize) -> Self {
        StatsRecord {
            updates: c.updates,
            mis_additions: c.mis_additions,
            mis_removals: c.mis_removals,
            sum_s_plus: c.sum_s_plus,
            sum_s_minus: c.sum_s_minus,
            flips: c.flips,
            elem_ops: c.elem_ops,
            lemma_violations: c.lemma_violations,
            wall_ns,
            final_mis,
        }
    }

    /// `(Δ⁺ + Δ⁻) / U`.
    pub fn churn_rate(&self) -> f64 {
        (self.mis_additions + self.mis_removals) as f64 / self.updates.max(1) as f64
    }

    /// `Σ|S⁺| / (αU)`.
    pub fn s_plus_rate(&self, alpha: usize) -> f64 {
        self.sum_s_plus as f64 / (alpha as f64 * self.updates.max(1) as f64)
    }

    pub fn ops_per_update(&self) -> f64 {
        self.elem_ops as f64 / self.updates.max(1) as f64
    }
}

impl std::fmt::Display for StatsRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "updates          {}", self.updates)?;
        writeln!(f, "mis_additions    {}", self.mis_additions)?;
        writeln!(f, "mis_removals     {}", self.mis_removals)?;
        writeln!(f, "sum_splus        {}", self.sum_s_plus)?;
        writeln!(f, "sum_sminus       {}", self.sum_s_minus)?;
        writeln!(f, "flips            {}", self.flips)?;
        writeln!(f, "elem_ops         {}", self.elem_ops)?;
        writeln!(f, "lemma_violations {}", self.lemma_violations)?;
        writeln!(f, "wall_ns          {}", self.wall_ns)?;
        writeln!(f, "final_mis        {}", self.final_mis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOptions {
    /// Run the full audit every this many updates; 0 disables it.
    pub audit_every: usize,
    pub strict: bool,
    /// Updates per CSV row.
    pub window: usize,
    /// Fill `wall_ns` in CSV rows. Off by default so that output is
    /// byte-identical across runs.
    pub timing: bool,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            audit_every: 0,
            strict: false,
            window: 1000,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowRow {
    pub window_start: u64,
    pub window_end: u64,
    pub additions: u64,
    pub removals: u64,
    pub sum_splus: u64,
    pub sum_sminus: u64,
    pub flips: u64,
    pub elem_ops: u64,
    pub wall_ns: u64,
}

pub const CSV_HEADER: &str =
    "window_start,window_end,additions,removals,sum_splus,sum_sminus,flips,elem_ops,wall_ns";

pub fn to_csv(rows: &[WindowRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.window_start,
            r.window_end,
            r.additions,
            r.removals,
            r.sum_splus,
            r.sum_sminus,
            r.flips,
            r.elem_ops,
            r.wall_ns
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("update {index}: {source}")]
    Engine {
        index: usize,
        #[source]
        source: EngineError,
    },
    #[error("audit after update {index} failed:\n{report}")]
    Audit { index: usize, report: AuditReport },
    #[error("update {index}: guarantee violated: {violations:?}")]
    Lemma {
        index: usize,
        violations: Vec<LemmaViolation>,
    },
}

impl ReplayError {
    /// Audit failures and broken guarantees, as opposed to bad input.
    pub fn is_audit(&self) -> bool {
        matches!(self, ReplayError::Audit { .. } | ReplayError::Lemma { .. })
    }
}

pub struct ReplayOutcome {
    pub stats: StatsRecord,
    pub windows: Vec<WindowRow>,
    pub engine: Engine,
}

/// Replays `stream` on a fresh engine. `alpha` overrides the stream's hint.
pub fn replay(
    stream: &UpdateStream,
    alpha: Option<usize>,
    opts: &ReplayOptions,
) -> Result<ReplayOutcome, ReplayError> {
    let params = Params::new(stream.n, alpha.unwrap_or(stream.alpha_hint).max(1))
        .map_err(|source| ReplayError::Engine { index: 0, source })?;
    let mut engine = Engine::new(params).map_err(|source| ReplayError::Engine { index: 0, source })?;
    engine.set_strict(opts.strict);
    let window = opts.window.max(1);
    let mut windows = Vec::new();
    let mut start_counters = *engine.counters();
    let mut window_start = 0usize;
    let mut window_clock = Instant::now();
    let started = Instant::now();

    for (index, &op) in stream.ops.iter().enumerate() {
        match engine.apply_update(op) {
            Ok(_) => {}
            Err(EngineError::Lemma(violations)) => {
                return Err(ReplayError::Lemma { index, violations })
            }
            Err(source) => return Err(ReplayError::Engine { index, source }),
        }
        if opts.audit_every > 0 && (index + 1) % opts.audit_every == 0 {
            let report = check_invariants(&engine);
            if !report.ok() {
                return Err(ReplayError::Audit { index, report });
            }
        }
        let done = index + 1;
        if done - window_start == window || done == stream.ops.len() {
            let c = engine.counters();
            let wall_ns = if opts.timing {
                window_clock.elapsed().as_nanos() as u64
            } else {
                0
            };
            windows.push(WindowRow {
                window_start: window_start as u64,
                window_end: done as u64,
                additions: c.mis_additions - start_counters.mis_additions,
                removals: c.mis_removals - start_counters.mis_removals,
                sum_splus: c.sum_s_plus - start_counters.sum_s_plus,
                sum_sminus: c.sum_s_minus - start_counters.sum_s_minus,
                flips: c.flips - start_counters.flips,
                elem_ops: c.elem_ops - start_counters.elem_ops,
                wall_ns,
            });
            start_counters = *c;
            window_start = done;
            window_clock = Instant::now();
        }
    }
    let wall_ns = started.elapsed().as_nanos() as u64;
    if opts.audit_every > 0 && stream.ops.len() % opts.audit_every != 0 {
        let report = check_invariants(&engine);
        if !report.ok() {
            let index = stream.ops.len().saturating_sub(1);
            return Err(ReplayError::Audit { index, report });
        }
    }
    let stats = StatsRecord::from_counters(engine.counters(), wall_ns, engine.mis_size());
    Ok(ReplayOutcome {
        stats,
        windows,
        engine,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub alpha: usize,
    pub updates: u64,
    pub ns_per_update: f64,
    pub ops_per_update: f64,
    pub add_rate: f64,
    pub remove_rate: f64,
    pub s_plus_rate: f64,
}

/// Forest-union streams with `k = alpha` at each size, replayed without
/// audits, one size at a time.
pub fn bench_forest(
    sizes: &[usize],
    alpha: usize,
    ops: usize,
    churn: f64,
    seed: u64,
) -> Result<Vec<BenchRow>, ReplayError> {
    let mut rows = Vec::new();
    for &n in sizes {
        let stream = gen_forest_union(n, alpha, ops, churn, seed);
        let out = replay(&stream, Some(alpha), &ReplayOptions::default())?;
        let s = out.stats;
        let u = s.updates.max(1) as f64;
        rows.push(BenchRow {
            n,
            alpha,
            updates: s.updates,
            ns_per_update: s.wall_ns as f64 / u,
            ops_per_update: s.ops_per_update(),
            add_rate: s.mis_additions as f64 / u,
            remove_rate: s.mis_removals as f64 / u,
            s_plus_rate: s.s_plus_rate(alpha),
        });
    }
    Ok(rows)
}

pub fn render_bench(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "       n  alpha   updates   ns/update  ops/update   add/U  remove/U  splus/(aU)\n",
    );
    for r in rows {
        writeln!(
            out,
            "{:>8} {:>6} {:>9} {:>11.1} {:>11.1} {:>7.3} {:>9.3} {:>11.3}",
            r.n,
            r.alpha,
            r.updates,
            r.ns_per_update,
            r.ops_per_update,
            r.add_rate,
            r.remove_rate,
            r.s_plus_rate
        )
        .expect("writing to a String");
    }
    out
}
