//! Feasibility-transition experiments.
//!
//! For each worker count `N` and pattern size `G`, sample distinct patterns,
//! draw fresh weights per pattern, run the feasibility search and bucket the
//! outcomes by observed intersection size. `p_G(I)` is the feasible fraction
//! within a bucket and `p_eq(I)` averages those rates over the `G` values that
//! produced at least one sample at `I`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codegen::uniform01_weights;
use crate::error::{Error, Result};
use crate::pattern::{binomial, sample_patterns, sufficient_threshold, NonStragglerPattern, SystemParams};
use crate::polyalg::{chebyshev_points, PointSet};
use crate::rng::{derive_seed, rng_from};
use crate::solver::{feasibility_search, FailureReason, SolverConfig};

/// Environment variable bounding the worker pool.
pub const THREADS_ENV: &str = "CPA_THREADS";
pub const CSV_HEADER: &str = "N,G,I,n_samples,n_feasible,p_G";
pub const CSV_AGGREGATE_HEADER: &str = "N,I,p_eq";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    #[default]
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    Uniform01,
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    #[serde(rename = "G_max")]
    pub g_max: usize,
    #[serde(rename = "samples_per_G", default = "default_samples")]
    pub samples_per_g: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub alpha_mode: AlphaMode,
    #[serde(default)]
    pub weight_mode: WeightMode,
}

impl ExperimentConfig {
    pub fn new(k: usize, d: usize, s: usize, n_list: Vec<usize>, g_max: usize, seed: u64) -> Self {
        Self {
            k,
            d,
            s,
            n_list,
            g_max,
            samples_per_g: default_samples(),
            seed,
            solver: SolverConfig::default(),
            alpha_mode: AlphaMode::Chebyshev,
            weight_mode: WeightMode::Uniform01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig("K must be at least 2".into()));
        }
        if self.n_list.is_empty() || self.g_max == 0 || self.samples_per_g == 0 {
            return Err(Error::InvalidConfig(
                "N_list, G_max and samples_per_G must be nonempty/positive".into(),
            ));
        }
        for &n in &self.n_list {
            SystemParams::new(self.k, self.d, self.s, n)
                .validate_cpa()
                .map_err(|e| Error::InvalidConfig(format!("N = {n}: {e}")))?;
        }
        self.solver.validate()
    }

    /// Largest usable `G` for `n`: `G_max` capped by the number of `(N-S)`-subsets.
    pub fn g_limit(&self, n: usize) -> usize {
        let total = binomial(n as u128, (n - self.s) as u128);
        (self.g_max as u128).min(total) as usize
    }

    pub fn alpha(&self) -> Result<PointSet> {
        match self.alpha_mode {
            AlphaMode::Chebyshev => chebyshev_points(self.k),
        }
    }

    pub fn threshold(&self) -> usize {
        sufficient_threshold(self.k, self.d)
    }
}

/// One feasibility search inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "G")]
    pub g: usize,
    pub index: usize,
    #[serde(rename = "I")]
    pub i: usize,
    pub pattern: NonStragglerPattern,
    pub weights: Vec<Complex64>,
    pub feasible: bool,
    pub final_residual: f64,
    pub starts_used: usize,
    pub failure_reason: Option<FailureReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "G")]
    pub g: usize,
    #[serde(rename = "I")]
    pub i: usize,
    pub n_samples: usize,
    pub n_feasible: usize,
    pub p_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "I")]
    pub i: usize,
    pub p_eq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCurve {
    pub rows: Vec<CurveRow>,
    pub aggregate: Vec<AggregateRow>,
}

impl FeasibilityCurve {
    pub fn p_eq(&self, n: usize, i: usize) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|r| r.n == n && r.i == i)
            .map(|r| r.p_eq)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{CSV_HEADER}").unwrap();
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{},{}", r.n, r.g, r.i, r.n_samples, r.n_feasible, r.p_g).unwrap();
        }
        writeln!(out).unwrap();
        writeln!(out, "{CSV_AGGREGATE_HEADER}").unwrap();
        for r in &self.aggregate {
            writeln!(out, "{},{},{}", r.n, r.i, r.p_eq).unwrap();
        }
        out
    }

    /// Parses the output of [`FeasibilityCurve::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::InvalidConfig(format!("malformed curve line: {line}"));
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::InvalidConfig("missing curve header".into()));
        }
        let mut rows = Vec::new();
        for line in lines.by_ref() {
            if line.is_empty() {
                break;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            let u = |s: &str| s.parse::<usize>().map_err(|_| bad(line));
            rows.push(CurveRow {
                n: u(f[0])?,
                g: u(f[1])?,
                i: u(f[2])?,
                n_samples: u(f[3])?,
                n_feasible: u(f[4])?,
                p_g: f[5].parse().map_err(|_| bad(line))?,
            });
        }
        if lines.next() != Some(CSV_AGGREGATE_HEADER) {
            return Err(Error::InvalidConfig("missing aggregate header".into()));
        }
        let mut aggregate = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad(line));
            }
            aggregate.push(AggregateRow {
                n: f[0].parse().map_err(|_| bad(line))?,
                i: f[1].parse().map_err(|_| bad(line))?,
                p_eq: f[2].parse().map_err(|_| bad(line))?,
            });
        }
        Ok(Self { rows, aggregate })
    }
}

/// Buckets outcomes by `(N, G, I)`; empty buckets never appear.
pub fn bucket(outcomes: &[InstanceOutcome]) -> Vec<CurveRow> {
    let mut counts: BTreeMap<(usize, usize, usize), (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        let e = counts.entry((o.n, o.g, o.i)).or_default();
        e.0 += 1;
        e.1 += usize::from(o.feasible);
    }
    counts
        .into_iter()
        .map(|((n, g, i), (n_samples, n_feasible))| CurveRow {
            n,
            g,
            i,
            n_samples,
            n_feasible,
            p_g: n_feasible as f64 / n_samples as f64,
        })
        .collect()
}

/// Mean of `p_G(I)` over the `G` values with samples at `I`, per `N`.
pub fn aggregate(rows: &[CurveRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.n_samples > 0) {
        groups.entry((r.n, r.i)).or_default().push(r.p_g);
    }
    groups
        .into_iter()
        .map(|((n, i), rates)| AggregateRow {
            n,
            i,
            p_eq: rates.iter().sum::<f64>() / rates.len() as f64,
        })
        .collect()
}

struct Job {
    n: usize,
    g: usize,
    index: usize,
    pattern: NonStragglerPattern,
}

fn run_job(cfg: &ExperimentConfig, alpha: &PointSet, job: Job) -> Result<InstanceOutcome> {
    let params = SystemParams::new(cfg.k, cfg.d, cfg.s, job.n);
    let seed = derive_seed(cfg.seed, &[job.n as u64, job.g as u64, job.index as u64]);
    let weights = match cfg.weight_mode {
        WeightMode::Uniform01 => uniform01_weights(cfg.k, &mut rng_from(derive_seed(seed, &[0]))),
    };
    let report = feasibility_search(
        alpha,
        &weights,
        &job.pattern,
        &params,
        &cfg.solver,
        derive_seed(seed, &[1]),
    )?;
    Ok(InstanceOutcome {
        n: job.n,
        g: job.g,
        index: job.index,
        i: job.pattern.stats().i,
        pattern: job.pattern,
        weights,
        feasible: report.feasible,
        final_residual: report.final_residual,
        starts_used: report.starts_used,
        failure_reason: report.failure_reason,
    })
}

#[cfg(feature = "parallel")]
fn run_jobs(cfg: &ExperimentConfig, alpha: &PointSet, jobs: Vec<Job>) -> Result<Vec<InstanceOutcome>> {
    use rayon::prelude::*;

    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| jobs.into_par_iter().map(|j| run_job(cfg, alpha, j)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(cfg: &ExperimentConfig, alpha: &PointSet, jobs: Vec<Job>) -> Result<Vec<InstanceOutcome>> {
    jobs.into_iter().map(|j| run_job(cfg, alpha, j)).collect()
}

/// Runs the sweep and keeps every per-instance outcome, sorted canonically.
pub fn run_experiment_traced(cfg: &ExperimentConfig) -> Result<(FeasibilityCurve, Vec<InstanceOutcome>)> {
    cfg.validate()?;
    let alpha = cfg.alpha()?;
    let mut jobs = Vec::new();
    for &n in &cfg.n_list {
        for g in 1..=cfg.g_limit(n) {
            let patterns = sample_patterns(
                n,
                cfg.s,
                g,
                cfg.samples_per_g,
                derive_seed(cfg.seed, &[n as u64, g as u64]),
            )?;
            jobs.extend(
                patterns
                    .into_iter()
                    .enumerate()
                    .map(|(index, pattern)| Job { n, g, index, pattern }),
            );
        }
    }
    let mut outcomes = run_jobs(cfg, &alpha, jobs)?;
    outcomes.sort_by_key(|o| (o.n, o.g, o.index));
    let rows = bucket(&outcomes);
    let aggregate = aggregate(&rows);
    Ok((FeasibilityCurve { rows, aggregate }, outcomes))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<FeasibilityCurve> {
    run_experiment_traced(cfg).map(|(curve, _)| curve)
}

/// Minimal line chart of `p_eq` against `I`, one polyline per `N`, with a
/// dashed marker at the threshold.
pub fn curve_svg(curve: &FeasibilityCurve, threshold: usize) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

    let max_i = curve.aggregate.iter().map(|r| r.i).max().unwrap_or(1).max(1) as f64;
    let x = |i: f64| PAD + i / max_i * (W - 2.0 * PAD);
    let y = |p: f64| H - PAD - p * (H - 2.0 * PAD);

    let mut by_n: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for r in &curve.aggregate {
        by_n.entry(r.n).or_default().push((r.i, r.p_eq));
    }

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    )
    .unwrap();
    let tx = x(threshold as f64);
    writeln!(
        svg,
        r#"<line x1="{tx}" y1="{PAD}" x2="{tx}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
        H - PAD
    )
    .unwrap();
    for i in 0..=max_i as usize {
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{i}</text>"#, x(i as f64), H - PAD + 14.0).unwrap();
    }
    for p in [0.0, 0.5, 1.0] {
        writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{p}</text>"#, PAD - 4.0, y(p) + 4.0).unwrap();
    }
    for (idx, (n, pts)) in by_n.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(i, p)| format!("{:.1},{:.1}", x(i as f64), y(p)))
            .collect();
        writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">N={n}</text>"#,
            W - PAD + 4.0,
            PAD + 14.0 * (idx as f64 + 1.0)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
