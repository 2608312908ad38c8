//! Multi-start Levenberg-Marquardt search for evaluation points that satisfy
//! every orthogonality condition of a pattern.
//!
//! Each `beta_n` contributes two real unknowns `(re, im)`. Residual rows come
//! in `(re, im)` pairs, one pair per `(g, j)` with `j < C`. Descents minimize
//! the raw left-hand sides; acceptance uses each row normalized by the sum
//! of its term magnitudes.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{damped_lls, RMatrix};
use crate::pattern::{NonStragglerPattern, SystemParams};
use crate::polyalg::{min_cross_distance, PointSet};
use crate::rng::{derive_seed, rng_from};

const LAMBDA_MAX: f64 = 1e16;
const LAMBDA_MIN: f64 = 1e-14;
/// Descents keep polishing until the residual drops this far below tolerance.
const POLISH_FACTOR: f64 = 1e-4;
/// Initial points keep at least this distance from data points and each other.
const INIT_SEPARATION: f64 = 1e-3;
/// A Jacobian column larger than this multiple of the median flags an unstable solution.
const COLUMN_SPREAD_LIMIT: f64 = 1e6;
/// Evaluation points beyond this multiple of the data radius count as escaped.
const ESCAPE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub n_starts: usize,
    pub max_iter: usize,
    pub residual_tol: f64,
    pub distinct_tol: f64,
    pub init_radius: f64,
    pub lambda_init: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Wall-clock budget per search in seconds, checked between starts.
    pub time_budget_secs: Option<f64>,
    /// Extra descents per start that redraw coinciding points and continue.
    pub collision_repairs: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_starts: 10,
            max_iter: 200,
            residual_tol: 1e-9,
            distinct_tol: 1e-8,
            init_radius: 1.5,
            lambda_init: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.2,
            time_budget_secs: None,
            collision_repairs: 3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.residual_tol,
            self.distinct_tol,
            self.init_radius,
            self.lambda_init,
            self.lambda_up,
            self.lambda_down,
        ];
        if self.n_starts == 0 || self.max_iter == 0 || positive.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidConfig("solver settings must be positive".into()));
        }
        if !(self.lambda_up > 1.0 && self.lambda_down < 1.0) {
            return Err(Error::InvalidConfig("need lambda_up > 1 > lambda_down".into()));
        }
        if self.time_budget_secs.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("time budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// Descent stalled at a nonzero residual.
    Residual,
    /// Residual vanished but two evaluation points coincide.
    Distinctness,
    /// Residual vanished but an evaluation point sits on a data point.
    AlphaCollision,
    /// Iteration budget ran out while still descending.
    NonConvergence,
    /// Residual vanished at a point where the Jacobian blows up.
    Unstable,
    /// Evaluation points ran off towards infinity.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub beta: Option<Vec<Complex64>>,
    pub final_residual: f64,
    pub starts_used: usize,
    pub failure_reason: Option<FailureReason>,
}

/// The fixed data of one feasibility problem.
#[derive(Debug, Clone)]
pub struct Problem<'a> {
    alpha: &'a [Complex64],
    weights: &'a [Complex64],
    sets: &'a [Vec<usize>],
    c: usize,
    n: usize,
}

impl<'a> Problem<'a> {
    pub fn new(
        alpha: &'a PointSet,
        weights: &'a [Complex64],
        pattern: &'a NonStragglerPattern,
        c: usize,
    ) -> Result<Self> {
        if weights.len() != alpha.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} data points",
                weights.len(),
                alpha.len()
            )));
        }
        Ok(Self {
            alpha: alpha.points(),
            weights,
            sets: pattern.sets(),
            c,
            n: pattern.n(),
        })
    }

    pub fn rows(&self) -> usize {
        2 * self.c * self.sets.len()
    }

    pub fn escape_radius(&self) -> f64 {
        ESCAPE_FACTOR * self.alpha.iter().map(|a| a.norm()).fold(1.0, f64::max)
    }

    fn escaped(&self, beta: &[Complex64]) -> bool {
        let r = self.escape_radius();
        beta.iter().any(|b| !(b.norm() <= r))
    }

    /// Raw complex left-hand sides and their scales, row order `(g, j)`.
    fn raw(&self, beta: &[Complex64]) -> (Vec<Complex64>, Vec<f64>) {
        let mut sums = Vec::with_capacity(self.c * self.sets.len());
        let mut scales = Vec::with_capacity(self.c * self.sets.len());
        for set in self.sets {
            let wp: Vec<Complex64> = self
                .alpha
                .iter()
                .zip(self.weights)
                .map(|(&a, &w)| w * set.iter().map(|&n| a - beta[n]).product::<Complex64>())
                .collect();
            for j in 0..self.c {
                let mut sum = Complex64::new(0.0, 0.0);
                let mut scale = 0.0;
                for (a, t) in self.alpha.iter().zip(&wp) {
                    let term = t * a.powu(j as u32);
                    sum += term;
                    scale += term.norm();
                }
                sums.push(sum);
                scales.push(scale);
            }
        }
        (sums, scales)
    }

    pub fn residual(&self, beta: &[Complex64]) -> Vec<f64> {
        let (sums, scales) = self.raw(beta);
        sums.iter()
            .zip(&scales)
            .flat_map(|(s, &sc)| {
                let sc = if sc > 0.0 { sc } else { 1.0 };
                [s.re / sc, s.im / sc]
            })
            .collect()
    }

    /// Unnormalized left-hand sides as `(re, im)` pairs, the quantity the
    /// descent minimizes.
    pub fn raw_residual(&self, beta: &[Complex64]) -> Vec<f64> {
        self.raw(beta).0.iter().flat_map(|s| [s.re, s.im]).collect()
    }

    /// Jacobian of [`Problem::raw_residual`].
    pub fn raw_jacobian(&self, beta: &[Complex64]) -> RMatrix {
        self.jacobian_impl(beta, false)
    }

    /// Jacobian of the residual with respect to `(re beta_0, im beta_0, re beta_1, ...)`,
    /// including the derivative of each row scale.
    pub fn jacobian(&self, beta: &[Complex64]) -> RMatrix {
        self.jacobian_impl(beta, true)
    }

    fn jacobian_impl(&self, beta: &[Complex64], normalized: bool) -> RMatrix {
        let (sums, scales) = self.raw(beta);
        let i = Complex64::new(0.0, 1.0);
        let mut jac = RMatrix::zeros(self.rows(), 2 * self.n);
        for (g, set) in self.sets.iter().enumerate() {
            let wp: Vec<Complex64> = self
                .alpha
                .iter()
                .zip(self.weights)
                .map(|(&a, &w)| w * set.iter().map(|&n| a - beta[n]).product::<Complex64>())
                .collect();
            for &m in set {
                // d/d beta_m of w_k prod_n (alpha_k - beta_n)
                let partial: Vec<Complex64> = self
                    .alpha
                    .iter()
                    .zip(self.weights)
                    .map(|(&a, &w)| {
                        -w * set
                            .iter()
                            .filter(|&&n| n != m)
                            .map(|&n| a - beta[n])
                            .product::<Complex64>()
                    })
                    .collect();
                for j in 0..self.c {
                    let mut d = Complex64::new(0.0, 0.0);
                    let (mut dsx, mut dsy) = (0.0, 0.0);
                    for ((a, p), t) in self.alpha.iter().zip(&partial).zip(&wp) {
                        let aj = a.powu(j as u32);
                        let (dt, term) = (p * aj, t * aj);
                        d += dt;
                        let mag = term.norm();
                        if mag > 0.0 {
                            dsx += (term.conj() * dt).re / mag;
                            dsy += (term.conj() * i * dt).re / mag;
                        }
                    }
                    let row = g * self.c + j;
                    let (sum, sc) = (sums[row], scales[row]);
                    // analytic in beta_m: d/dx = d, d/dy = i d
                    let (dx, dy) = (d, i * d);
                    let (dx, dy) = if normalized && sc > 0.0 {
                        (dx / sc - sum * dsx / (sc * sc), dy / sc - sum * dsy / (sc * sc))
                    } else {
                        (dx, dy)
                    };
                    jac[(2 * row, 2 * m)] = dx.re;
                    jac[(2 * row, 2 * m + 1)] = dy.re;
                    jac[(2 * row + 1, 2 * m)] = dx.im;
                    jac[(2 * row + 1, 2 * m + 1)] = dy.im;
                }
            }
        }
        jac
    }
}

pub fn residual_vector(
    beta: &[Complex64],
    alpha: &PointSet,
    weights: &[Complex64],
    pattern: &NonStragglerPattern,
    c: usize,
) -> Result<Vec<f64>> {
    check_beta_len(beta, pattern)?;
    Ok(Problem::new(alpha, weights, pattern, c)?.residual(beta))
}

pub fn jacobian(
    beta: &[Complex64],
    alpha: &PointSet,
    weights: &[Complex64],
    pattern: &NonStragglerPattern,
    c: usize,
) -> Result<RMatrix> {
    check_beta_len(beta, pattern)?;
    Ok(Problem::new(alpha, weights, pattern, c)?.jacobian(beta))
}

fn check_beta_len(beta: &[Complex64], pattern: &NonStragglerPattern) -> Result<()> {
    if beta.len() != pattern.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} evaluation points for N = {}",
            beta.len(),
            pattern.n()
        )));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

fn to_real(beta: &[Complex64]) -> Vec<f64> {
    beta.iter().flat_map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Stalled,
    MaxIter,
    Diverged,
}

/// Outcome of one damped descent.
#[derive(Debug, Clone)]
pub struct Descent {
    pub beta: Vec<Complex64>,
    /// Norm of the normalized residual at `beta`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Unnormalized residual norm after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

/// Levenberg-Marquardt descent from `beta0`.
///
/// Steps minimize the unnormalized left-hand sides; convergence is declared
/// on the normalized residual.
pub fn descend(problem: &Problem<'_>, beta0: &[Complex64], cfg: &SolverConfig) -> Descent {
    let polish = cfg.residual_tol * POLISH_FACTOR;
    let mut x = to_real(beta0);
    let mut beta = beta0.to_vec();
    let mut r = problem.raw_residual(&beta);
    let mut cost = norm(&r);
    let mut relative = norm(&problem.residual(&beta));
    let mut history = vec![cost];
    let mut lambda = cfg.lambda_init;
    let mut iterations = 0;

    let stop = loop {
        if relative < polish {
            break StopReason::Converged;
        }
        if iterations >= cfg.max_iter {
            break StopReason::MaxIter;
        }
        if problem.escaped(&beta) {
            break StopReason::Diverged;
        }
        let jac = problem.raw_jacobian(&beta);
        let mut accepted = None;
        while lambda <= LAMBDA_MAX {
            let step = match damped_lls(&jac, &r, lambda) {
                Ok(s) => s,
                Err(_) => {
                    lambda *= cfg.lambda_up;
                    continue;
                }
            };
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let trial_beta = to_complex(&trial);
            let trial_r = problem.raw_residual(&trial_beta);
            let trial_cost = norm(&trial_r);
            if trial_cost.is_finite() && trial_cost < cost {
                lambda = (lambda * cfg.lambda_down).max(LAMBDA_MIN);
                accepted = Some((trial, trial_beta, trial_r, trial_cost, norm(&step)));
                break;
            }
            lambda *= cfg.lambda_up;
        }
        let Some((nx, nbeta, nr, ncost, step_norm)) = accepted else {
            break StopReason::Stalled;
        };
        relative = norm(&problem.residual(&nbeta));
        x = nx;
        beta = nbeta;
        r = nr;
        cost = ncost;
        history.push(cost);
        iterations += 1;
        if step_norm <= 1e-15 * (1.0 + norm(&x)) {
            break if relative < polish {
                StopReason::Converged
            } else {
                StopReason::Stalled
            };
        }
    };

    Descent {
        beta,
        residual_norm: relative,
        iterations,
        stop,
        history,
    }
}

/// Classifies a finished descent; `None` means a valid solution.
pub fn judge(problem: &Problem<'_>, descent: &Descent, cfg: &SolverConfig) -> Option<FailureReason> {
    if descent.stop == StopReason::Diverged || problem.escaped(&descent.beta) {
        return Some(FailureReason::Divergent);
    }
    if !(descent.residual_norm < cfg.residual_tol) {
        return Some(match descent.stop {
            StopReason::MaxIter => FailureReason::NonConvergence,
            _ => FailureReason::Residual,
        });
    }
    if min_relative_separation(&descent.beta) <= cfg.distinct_tol {
        return Some(FailureReason::Distinctness);
    }
    if min_cross_distance(&descent.beta, problem.alpha) <= cfg.distinct_tol {
        return Some(FailureReason::AlphaCollision);
    }
    let jac = problem.jacobian(&descent.beta);
    let mut norms: Vec<f64> = (0..jac.cols())
        .map(|c| jac.column_norm(c))
        .filter(|&v| v > 0.0)
        .collect();
    if !norms.is_empty() {
        norms.sort_by(f64::total_cmp);
        let median = norms[norms.len() / 2];
        if norms.last().is_some_and(|&m| m > COLUMN_SPREAD_LIMIT * median) {
            return Some(FailureReason::Unstable);
        }
    }
    None
}

/// Smallest `|b_i - b_j| / max(1, |b_i|, |b_j|)` over pairs.
pub fn min_relative_separation(beta: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in beta.iter().enumerate() {
        for b in &beta[i + 1..] {
            best = best.min((a - b).norm() / a.norm().max(b.norm()).max(1.0));
        }
    }
    best
}

/// Redraws the later point of every coinciding pair, keeping the rest.
fn separate_collisions(
    mut beta: Vec<Complex64>,
    alpha: &[Complex64],
    cfg: &SolverConfig,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    for j in 1..beta.len() {
        let collides = beta[..j].iter().any(|b| {
            (b - beta[j]).norm() / b.norm().max(beta[j].norm()).max(1.0) <= cfg.distinct_tol
        });
        if collides {
            let others: Vec<Complex64> = alpha.iter().chain(&beta).copied().collect();
            beta[j] = random_start(1, &others, cfg.init_radius, rng)[0];
        }
    }
    beta
}

fn random_start(
    n: usize,
    alpha: &[Complex64],
    radius: f64,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(n);
    while out.len() < n {
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if z.norm_sqr() >= 1.0 {
            continue;
        }
        let z = z * radius;
        let clear = alpha.iter().chain(&out).all(|p| (p - z).norm() > INIT_SEPARATION);
        if clear {
            out.push(z);
        }
    }
    out
}

/// Searches for distinct evaluation points satisfying every condition of `pattern`.
pub fn feasibility_search(
    alpha: &PointSet,
    weights: &[Complex64],
    pattern: &NonStragglerPattern,
    params: &SystemParams,
    config: &SolverConfig,
    seed: u64,
) -> Result<FeasibilityReport> {
    config.validate()?;
    let c = params.validate_cpa()?;
    if pattern.n() != params.n || pattern.s() != params.s {
        return Err(Error::InvalidPattern("pattern N/S disagree with params".into()));
    }
    if alpha.len() != params.k {
        return Err(Error::InvalidParams(format!(
            "{} data points for K = {}",
            alpha.len(),
            params.k
        )));
    }
    let problem = Problem::new(alpha, weights, pattern, c)?;
    let started = config.time_budget_secs.map(|b| (std::time::Instant::now(), b));

    let mut best = f64::INFINITY;
    let mut last_reason = None;
    let mut starts_used = 0;
    for start in 0..config.n_starts {
        if let Some((t0, budget)) = started {
            if start > 0 && t0.elapsed().as_secs_f64() > budget {
                break;
            }
        }
        starts_used += 1;
        let mut rng = rng_from(derive_seed(seed, &[start as u64]));
        let mut beta0 = random_start(params.n, alpha.points(), config.init_radius, &mut rng);
        for repair in 0..=config.collision_repairs {
            let descent = descend(&problem, &beta0, config);
            best = best.min(descent.residual_norm);
            match judge(&problem, &descent, config) {
                None => {
                    return Ok(FeasibilityReport {
                        feasible: true,
                        final_residual: descent.residual_norm,
                        beta: Some(descent.beta),
                        starts_used,
                        failure_reason: None,
                    })
                }
                Some(FailureReason::Distinctness) if repair < config.collision_repairs => {
                    beta0 = separate_collisions(descent.beta, alpha.points(), config, &mut rng);
                }
                Some(reason) => {
                    last_reason = Some(reason);
                    break;
                }
            }
        }
    }
    Ok(FeasibilityReport {
        feasible: false,
        beta: None,
        final_residual: best,
        starts_used,
        failure_reason: last_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{check_orthogonality, construct, uniform01_weights, CpaCode};
    use crate::polyalg::chebyshev_points;

    fn setup(k: usize, seed: u64) -> (PointSet, Vec<Complex64>) {
        (chebyshev_points(k).unwrap(), uniform01_weights(k, &mut rng_from(seed)))
    }

    fn random_beta(n: usize, seed: u64) -> Vec<Complex64> {
        random_start(n, &[], 1.5, &mut rng_from(seed))
    }

    /// Central differences of the raw residual divided by the base-point scale.
    fn fd_jacobian(problem: &Problem<'_>, beta: &[Complex64], h: f64) -> RMatrix {
        let mut out = RMatrix::zeros(problem.rows(), 2 * beta.len());
        for col in 0..2 * beta.len() {
            let bump = if col % 2 == 0 {
                Complex64::new(h, 0.0)
            } else {
                Complex64::new(0.0, h)
            };
            let mut plus = beta.to_vec();
            let mut minus = beta.to_vec();
            plus[col / 2] += bump;
            minus[col / 2] -= bump;
            let rp = problem.residual(&plus);
            let rm = problem.residual(&minus);
            for row in 0..rp.len() {
                out[(row, col)] = (rp[row] - rm[row]) / (2.0 * h);
            }
        }
        out
    }

    pub(crate) fn max_relative_jacobian_error(problem: &Problem<'_>, beta: &[Complex64]) -> f64 {
        let jac = problem.jacobian(beta);
        let fd = fd_jacobian(problem, beta, 1e-7);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for r in 0..jac.rows() {
            for c in 0..jac.cols() {
                num = num.max((jac[(r, c)] - fd[(r, c)]).abs());
                den = den.max(jac[(r, c)].abs());
            }
        }
        num / den
    }

    #[test]
    fn residual_length_and_zero_on_constructed_code() {
        let (alpha, w) = setup(5, 1);
        let pattern = crate::pattern::sample_patterns(5, 2, 4, 1, 0).unwrap().remove(0);
        let r = residual_vector(&random_beta(5, 2), &alpha, &w, &pattern, 2).unwrap();
        assert_eq!(r.len(), 16);

        let params = SystemParams::new(5, 1, 2, 6);
        let pattern = NonStragglerPattern::new(6, 2, vec![vec![0, 1, 2, 3], vec![0, 1, 2, 5]]).unwrap();
        let (code, _) = construct(&params, &pattern, &alpha, &w, 3).unwrap();
        let r = residual_vector(code.beta.points(), &alpha, &w, &pattern, 1).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (alpha, w) = setup(5, 4);
        let pattern = NonStragglerPattern::new(6, 2, vec![vec![0, 1, 2, 3], vec![0, 1, 2, 5]]).unwrap();
        let problem = Problem::new(&alpha, &w, &pattern, 1).unwrap();
        for seed in 0..20 {
            let beta = random_beta(6, 100 + seed);
            let err = max_relative_jacobian_error(&problem, &beta);
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn jacobian_columns_vanish_for_idle_workers() {
        let (alpha, w) = setup(5, 5);
        let pattern = NonStragglerPattern::new(6, 2, vec![vec![0, 1, 2, 3], vec![0, 1, 2, 5]]).unwrap();
        let jac = jacobian(&random_beta(6, 6), &alpha, &w, &pattern, 1).unwrap();
        assert_eq!(jac.column_norm(8), 0.0);
        assert_eq!(jac.column_norm(9), 0.0);
        assert!(jac.column_norm(0) > 0.0);
    }

    #[test]
    fn jacobian_single_condition_hand_expansion() {
        // K = 2, one set {0}, j = 0: r = s / sigma with s = sum_k w_k (alpha_k - beta_0)
        // and sigma = sum_k w_k |alpha_k - beta_0|
        let alpha = PointSet::new(vec![Complex64::new(0.5, 0.0), Complex64::new(-0.25, 0.0)]).unwrap();
        let w = [0.3, 0.9];
        let wc: Vec<Complex64> = w.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let pattern = NonStragglerPattern::new(2, 1, vec![vec![0]]).unwrap();
        let beta = vec![Complex64::new(0.1, 0.2), Complex64::new(1.0, 1.0)];
        let jac = jacobian(&beta, &alpha, &wc, &pattern, 1).unwrap();
        let t: Vec<Complex64> = alpha.points().iter().map(|a| a - beta[0]).collect();
        let s: Complex64 = t.iter().zip(&w).map(|(t, wk)| t * wk).sum();
        let sigma: f64 = t.iter().zip(&w).map(|(t, wk)| wk * t.norm()).sum();
        let dsig_x: f64 = t.iter().zip(&w).map(|(t, wk)| -wk * t.re / t.norm()).sum();
        let dsig_y: f64 = t.iter().zip(&w).map(|(t, wk)| -wk * t.im / t.norm()).sum();
        let total = w[0] + w[1];
        // ds/dx = -total, ds/dy = -i total
        let expected = [
            [-total / sigma - s.re * dsig_x / (sigma * sigma), -s.re * dsig_y / (sigma * sigma)],
            [-s.im * dsig_x / (sigma * sigma), -total / sigma - s.im * dsig_y / (sigma * sigma)],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (c, want) in row.iter().enumerate() {
                assert!((jac[(r, c)] - want).abs() < 1e-14, "({r},{c})");
            }
        }
        assert_eq!(jac[(0, 2)], 0.0);
    }

    #[test]
    fn feasible_above_threshold() {
        let (alpha, w) = setup(5, 7);
        let params = SystemParams::new(5, 1, 2, 6);
        let pattern = NonStragglerPattern::new(6, 2, vec![vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(pattern.stats().i, 4);
        let report = feasibility_search(&alpha, &w, &pattern, &params, &SolverConfig::default(), 8).unwrap();
        assert!(report.feasible, "{report:?}");
        let code = CpaCode::new(
            params,
            alpha.clone(),
            w.clone(),
            PointSet::new(report.beta.unwrap()).unwrap(),
            pattern,
        )
        .unwrap();
        assert!(check_orthogonality(&code).unwrap().max < 10.0 * 1e-9);
    }

    #[test]
    fn infeasible_below_threshold_with_large_deficit() {
        let (alpha, w) = setup(5, 9);
        let params = SystemParams::new(5, 1, 2, 4);
        let pattern = NonStragglerPattern::new(4, 2, vec![vec![1, 3]]).unwrap();
        assert_eq!(params.validate_cpa().unwrap(), 3);
        let report = feasibility_search(&alpha, &w, &pattern, &params, &SolverConfig::default(), 10).unwrap();
        assert!(!report.feasible);
        assert_eq!(report.starts_used, 10);
        assert!(report.failure_reason.is_some());
    }

    #[test]
    fn warm_start_at_constructed_code() {
        let (alpha, w) = setup(5, 11);
        let params = SystemParams::new(5, 2, 2, 8);
        let pattern = NonStragglerPattern::new(
            8,
            2,
            vec![vec![0, 1, 2, 3, 4, 5], vec![0, 1, 2, 3, 4, 6]],
        )
        .unwrap();
        let (code, _) = construct(&params, &pattern, &alpha, &w, 12).unwrap();
        let problem = Problem::new(&alpha, &w, &pattern, 3).unwrap();
        let cfg = SolverConfig::default();
        let descent = descend(&problem, code.beta.points(), &cfg);
        assert!(descent.iterations <= 2);
        assert_eq!(judge(&problem, &descent, &cfg), None);
    }

    #[test]
    fn accepted_steps_never_increase_residual() {
        let (alpha, w) = setup(5, 13);
        let pattern = NonStragglerPattern::new(5, 2, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let problem = Problem::new(&alpha, &w, &pattern, 2).unwrap();
        for seed in 0..10 {
            let d = descend(&problem, &random_beta(5, 200 + seed), &SolverConfig::default());
            assert!(d.history.windows(2).all(|p| p[1] <= p[0]));
        }
    }

    #[test]
    fn search_is_deterministic() {
        let (alpha, w) = setup(5, 14);
        let params = SystemParams::new(5, 1, 2, 5);
        let pattern = NonStragglerPattern::new(5, 2, vec![vec![0, 1, 2], vec![0, 1, 3]]).unwrap();
        let cfg = SolverConfig::default();
        let a = feasibility_search(&alpha, &w, &pattern, &params, &cfg, 15).unwrap();
        let b = feasibility_search(&alpha, &w, &pattern, &params, &cfg, 15).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.lambda_up = 0.5;
        assert!(cfg.validate().is_err());
        let cfg: SolverConfig = serde_json::from_str(r#"{"n_starts": 3}"#).unwrap();
        assert_eq!(cfg.n_starts, 3);
        assert_eq!(cfg.max_iter, 200);
    }
}
