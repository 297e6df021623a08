//! Query replay corpus, dense time-sampling oracle and the CCD benchmark
//! report.
//!
//! One query per line: `KIND x.. p.. xi s`, where `KIND` is `PP`, `PE`,
//! `PT` or `EE`, followed by the start positions and the displacements of
//! the stencil nodes (6, 9 or 12 numbers each). `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::accd::{accd_query_stats, gap_measure, target_lower_bound, CcdQuery};
use crate::distance::PairKind;
use crate::error::{Error, Result};
use crate::math::Vec3;

pub fn parse_kind(tok: &str) -> Option<PairKind> {
    match tok {
        "PP" => Some(PairKind::PointPoint),
        "PE" => Some(PairKind::PointEdge),
        "PT" => Some(PairKind::PointTriangle),
        "EE" => Some(PairKind::EdgeEdge),
        _ => None,
    }
}

pub fn parse_corpus(text: &str, path: &Path) -> Result<Vec<CcdQuery>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        message: format!("line {line}: {msg}"),
    };
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let kind =
            parse_kind(toks[0]).ok_or_else(|| err(ln, format!("unknown kind `{}`", toks[0])))?;
        let n = kind.node_count();
        let want = 1 + 6 * n + 2;
        if toks.len() != want {
            return Err(err(
                ln,
                format!("expected {want} fields, found {}", toks.len()),
            ));
        }
        let nums = toks[1..]
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| err(ln, format!("bad number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let v = |k: usize| Vec3::new(nums[3 * k], nums[3 * k + 1], nums[3 * k + 2]);
        let x: Vec<Vec3> = (0..n).map(v).collect();
        let p: Vec<Vec3> = (n..2 * n).map(v).collect();
        let (xi, s) = (nums[6 * n], nums[6 * n + 1]);
        if !(s > 0.0 && s < 1.0) || !(xi >= 0.0) {
            return Err(err(
                ln,
                format!("need xi >= 0 and s in (0, 1), got {xi} {s}"),
            ));
        }
        out.push(CcdQuery::new(kind, &x, &p, xi, s));
    }
    Ok(out)
}

pub fn format_query(q: &CcdQuery) -> String {
    let n = q.kind.node_count();
    let mut s = q.kind.name().to_string();
    for v in q.x[..n].iter().chain(&q.p[..n]) {
        let _ = write!(s, " {} {} {}", v.x, v.y, v.z);
    }
    let _ = write!(s, " {} {}", q.xi, q.s);
    s
}

/// Smallest gap `d - xi` over `samples + 1` evenly spaced times in
/// `[0, t_end]`.
pub fn sampled_min_gap(q: &CcdQuery, t_end: f64, samples: usize) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..=samples {
        let t = t_end * k as f64 / samples as f64;
        m = m.min(gap_measure(q.d_sq_at(t), q.xi));
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryReport {
    pub kind: PairKind,
    pub toi: Option<f64>,
    pub iterations: u64,
    pub cap_hit: bool,
    /// Oracle: smallest sampled gap over `[0, toi]` (or `[0, t_c]`).
    pub oracle_min_gap: f64,
    /// The returned time is below the target lower bound.
    pub below_bound: bool,
    pub seconds: f64,
}

impl QueryReport {
    pub fn violation(&self) -> bool {
        !(self.oracle_min_gap > 0.0) || self.below_bound
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub queries: Vec<QueryReport>,
}

impl BenchReport {
    pub fn mismatches(&self) -> usize {
        self.queries.iter().filter(|q| q.violation()).count()
    }

    pub fn cap_hits(&self) -> usize {
        self.queries.iter().filter(|q| q.cap_hit).count()
    }

    pub fn max_iterations(&self) -> u64 {
        self.queries.iter().map(|q| q.iterations).max().unwrap_or(0)
    }

    /// Query-time percentile in seconds (`p` in `[0, 100]`).
    pub fn percentile(&self, p: f64) -> f64 {
        if self.queries.is_empty() {
            return 0.0;
        }
        let mut t: Vec<f64> = self.queries.iter().map(|q| q.seconds).collect();
        t.sort_by(f64::total_cmp);
        let k = ((p / 100.0) * (t.len() - 1) as f64).round() as usize;
        t[k.min(t.len() - 1)]
    }

    pub fn render(&self) -> String {
        let mut s = String::from("index kind toi iterations oracle_min_gap verdict\n");
        for (i, q) in self.queries.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i} {} {} {} {:e} {}",
                q.kind.name(),
                q.toi.map_or("none".to_string(), |t| t.to_string()),
                q.iterations,
                q.oracle_min_gap,
                if q.violation() { "MISMATCH" } else { "ok" }
            );
        }
        let _ = writeln!(
            s,
            "queries {} mismatches {} cap_hits {} max_iterations {}",
            self.queries.len(),
            self.mismatches(),
            self.cap_hits(),
            self.max_iterations()
        );
        let _ = writeln!(
            s,
            "time_us p50 {:.3} p90 {:.3} p99 {:.3} max {:.3}",
            1e6 * self.percentile(50.0),
            1e6 * self.percentile(90.0),
            1e6 * self.percentile(99.0),
            1e6 * self.percentile(100.0)
        );
        s
    }
}

/// Run every query through ACCD and check it against the sampling oracle.
pub fn run_bench(queries: &[CcdQuery], samples: usize) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for q in queries {
        let start = Instant::now();
        let out = accd_query_stats(q)?;
        let seconds = start.elapsed().as_secs_f64();
        let t_end = out.toi.unwrap_or(q.t_c);
        let below_bound = match (out.toi, target_lower_bound(q)) {
            (Some(t), Some(lb)) => t < lb,
            _ => false,
        };
        report.queries.push(QueryReport {
            kind: q.kind,
            toi: out.toi,
            iterations: out.iterations,
            cap_hit: out.cap_hit,
            oracle_min_gap: sampled_min_gap(q, t_end, samples),
            below_bound,
            seconds,
        });
    }
    Ok(report)
}
