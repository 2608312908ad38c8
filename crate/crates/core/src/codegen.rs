//! Explicit code construction and the residual checks that certify it.
//!
//! For a pattern with intersection `I` of size `I`, the intersection
//! polynomial `P_I(z) = prod_{n in I} (z - beta_n)` must satisfy the reduced
//! moment conditions `sum_k w_k P_I(alpha_k) alpha_k^j = 0` for
//! `j < C + L`. These are linear in the coefficients of `P_I`, so any kernel
//! vector of `U = V diag(w) A` with `V[j,k] = alpha_k^j` and
//! `A[k,n] = alpha_k^n` gives a candidate; its roots become the
//! intersection points. Workers outside the intersection get arbitrary
//! distinct filler points.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{matmul, nullspace, rank, CMatrix, NumTol};
use crate::pattern::{sufficient_threshold, NonStragglerPattern, PatternStats, SystemParams};
use crate::polyalg::{min_cross_distance, min_pairwise_distance, ComplexPoly, PointSet, DISTINCT_TOL};
use crate::rng::{derive_seed, rng_from};

/// Kernel-combination draws before giving up.
pub const MAX_RETRIES: usize = 50;
/// Filler-point draws before giving up.
pub const MAX_FILLER_DRAWS: usize = 1000;
/// Radius of the disc filler points are drawn from.
pub const FILLER_RADIUS: f64 = 2.0;
const ROOT_MAX_ITER: usize = 2000;
const LEADING_TOL: f64 = 1e-10;
/// Intersection points are redrawn while any lies outside this radius...
const ROOT_RADIUS: f64 = 2.0 * FILLER_RADIUS;
/// ...or closer than this to a data point; the best draw is kept otherwise.
const MIN_ALPHA_GAP: f64 = 1e-2;

#[derive(Deserialize)]
struct RawCode {
    params: SystemParams,
    alpha: PointSet,
    weights: Vec<Complex64>,
    beta: PointSet,
    pattern: NonStragglerPattern,
}

/// A deployable code: data points, weights and one evaluation point per worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCode")]
pub struct CpaCode {
    pub params: SystemParams,
    pub alpha: PointSet,
    pub weights: Vec<Complex64>,
    pub beta: PointSet,
    pub pattern: NonStragglerPattern,
}

impl TryFrom<RawCode> for CpaCode {
    type Error = Error;

    fn try_from(r: RawCode) -> Result<Self> {
        CpaCode::new(r.params, r.alpha, r.weights, r.beta, r.pattern)
    }
}

impl CpaCode {
    pub fn new(
        params: SystemParams,
        alpha: PointSet,
        weights: Vec<Complex64>,
        beta: PointSet,
        pattern: NonStragglerPattern,
    ) -> Result<Self> {
        let code = Self {
            params,
            alpha,
            weights,
            beta,
            pattern,
        };
        code.validate()?;
        Ok(code)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if self.alpha.len() != p.k || self.weights.len() != p.k {
            return Err(Error::InvalidCode(format!(
                "K = {} but {} data points and {} weights",
                p.k,
                self.alpha.len(),
                self.weights.len()
            )));
        }
        if self.beta.len() != p.n {
            return Err(Error::InvalidCode(format!(
                "N = {} but {} evaluation points",
                p.n,
                self.beta.len()
            )));
        }
        if self.pattern.n() != p.n || self.pattern.s() != p.s {
            return Err(Error::InvalidCode("pattern N/S disagree with params".into()));
        }
        if let Some(k) = self.weights.iter().position(|w| w.norm() == 0.0) {
            return Err(Error::InvalidCode(format!("weight {k} is zero")));
        }
        if self.alpha.points().len() > 1 && self.alpha.min_pairwise_distance() <= DISTINCT_TOL {
            return Err(Error::InvalidCode("data points not distinct".into()));
        }
        if self.beta.points().len() > 1 && self.beta.min_pairwise_distance() <= DISTINCT_TOL {
            return Err(Error::InvalidCode("evaluation points not distinct".into()));
        }
        if self.alpha.min_distance_to(self.beta.points()) <= DISTINCT_TOL {
            return Err(Error::InvalidCode(
                "an evaluation point coincides with a data point".into(),
            ));
        }
        Ok(())
    }

    pub fn stats(&self) -> PatternStats {
        self.pattern.stats()
    }
}

/// Summary of one construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub kernel_dim: usize,
    pub retries: usize,
    pub max_orthogonality_residual: f64,
    pub max_reduced_residual: f64,
}

/// Intersection points together with the kernel data they came from.
#[derive(Debug, Clone)]
pub struct IntersectionPoints {
    pub points: Vec<Complex64>,
    pub kernel_vector: Vec<Complex64>,
    pub kernel_dim: usize,
    pub retries: usize,
}

/// Relative residuals of every full orthogonality condition, `residuals[g][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    pub residuals: Vec<Vec<f64>>,
    pub max: f64,
}

impl OrthogonalityReport {
    pub fn count(&self) -> usize {
        self.residuals.iter().map(Vec::len).sum()
    }
}

/// `U[j,n] = sum_k w_k alpha_k^(j+n)`, of shape `(C+L) x (I+1)`.
pub fn build_u(alpha: &PointSet, weights: &[Complex64], c: usize, l: usize, i: usize) -> Result<CMatrix> {
    let a = alpha.points();
    if weights.len() != a.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} data points",
            weights.len(),
            a.len()
        )));
    }
    if c + l == 0 {
        return Err(Error::InvalidParams("need C + L >= 1".into()));
    }
    let v = CMatrix::from_fn(c + l, a.len(), |j, k| a[k].powu(j as u32));
    let am = CMatrix::from_fn(a.len(), i + 1, |k, n| a[k].powu(n as u32));
    matmul(&matmul(&v, &CMatrix::diag(weights))?, &am)
}

fn random_combination(basis: &CMatrix, real: bool, rng: &mut impl Rng) -> Vec<Complex64> {
    let coeffs: Vec<Complex64> = (0..basis.cols())
        .map(|_| {
            let re = rng.gen_range(-1.0..1.0);
            let im = if real { 0.0 } else { rng.gen_range(-1.0..1.0) };
            Complex64::new(re, im)
        })
        .collect();
    let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v = basis
        .mul_vec(&coeffs)
        .expect("coefficient count matches basis width");
    v.into_iter().map(|z| z / norm).collect()
}

/// Finds `I` distinct intersection points, disjoint from `alpha`, whose
/// monic polynomial satisfies the reduced moment conditions.
pub fn construct_intersection_points(
    alpha: &PointSet,
    weights: &[Complex64],
    params: &SystemParams,
    stats: &PatternStats,
    seed: u64,
) -> Result<IntersectionPoints> {
    let c = params.validate_cpa()?;
    if alpha.len() != params.k {
        return Err(Error::InvalidParams(format!(
            "{} data points for K = {}",
            alpha.len(),
            params.k
        )));
    }
    let threshold = sufficient_threshold(params.k, params.d);
    if stats.i < threshold {
        return Err(Error::ConstructionInfeasible(format!(
            "intersection size {} below threshold {threshold}",
            stats.i
        )));
    }
    let u = build_u(alpha, weights, c, stats.l, stats.i)?;
    let kernel = nullspace(&u, &NumTol::default());
    let kernel_dim = kernel.cols();
    if kernel_dim == 0 {
        return Err(Error::ConstructionInfeasible(
            "kernel of U is trivial (degenerate data points or weights)".into(),
        ));
    }

    // real moments give real kernels, and real polynomials give conjugate-closed roots
    let real = u.is_real();
    let mut rng = rng_from(seed);
    let mut last = String::new();
    let mut fallback: Option<(f64, IntersectionPoints)> = None;
    for attempt in 0..=MAX_RETRIES {
        let cvec = random_combination(&kernel, real, &mut rng);
        let norm = cvec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if cvec[stats.i].norm() <= LEADING_TOL * norm {
            last = "leading coefficient vanishes".into();
            continue;
        }
        let poly = ComplexPoly::new(cvec.clone());
        let points = match poly.roots(ROOT_MAX_ITER) {
            Ok(r) => r,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let spread = min_pairwise_distance(&points);
        if spread <= DISTINCT_TOL {
            last = format!("repeated roots (spread {spread:e})");
            continue;
        }
        let gap = min_cross_distance(&points, alpha.points());
        if gap <= DISTINCT_TOL {
            last = format!("root meets a data point (gap {gap:e})");
            continue;
        }
        let radius = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let score = (radius / ROOT_RADIUS).max(MIN_ALPHA_GAP / gap);
        let found = IntersectionPoints {
            points,
            kernel_vector: cvec,
            kernel_dim,
            retries: attempt,
        };
        if score <= 1.0 {
            return Ok(found);
        }
        if fallback.as_ref().is_none_or(|(best, _)| score < *best) {
            fallback = Some((score, found));
        }
    }
    match fallback {
        Some((_, found)) => Ok(IntersectionPoints {
            retries: MAX_RETRIES,
            ..found
        }),
        None => Err(Error::RetriesExhausted {
            retries: MAX_RETRIES,
            last,
        }),
    }
}

fn uniform_disc(rng: &mut impl Rng, radius: f64) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if z.norm_sqr() < 1.0 {
            return z * radius;
        }
    }
}

/// Assigns intersection points to the intersection workers and draws
/// filler points for everyone else.
pub fn complete_code(
    intersection_points: &[Complex64],
    pattern: &NonStragglerPattern,
    alpha: &PointSet,
    weights: &[Complex64],
    params: &SystemParams,
    seed: u64,
) -> Result<CpaCode> {
    let stats = pattern.stats();
    if intersection_points.len() != stats.i {
        return Err(Error::InvalidParams(format!(
            "{} intersection points for intersection size {}",
            intersection_points.len(),
            stats.i
        )));
    }
    let mut sorted = intersection_points.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut beta: Vec<Option<Complex64>> = vec![None; params.n];
    for (&worker, &z) in stats.intersection.iter().zip(&sorted) {
        beta[worker] = Some(z);
    }
    let mut rng = rng_from(seed);
    let mut draws = 0;
    for n in 0..params.n {
        if beta[n].is_some() {
            continue;
        }
        loop {
            draws += 1;
            if draws > MAX_FILLER_DRAWS {
                return Err(Error::RetriesExhausted {
                    retries: MAX_FILLER_DRAWS,
                    last: "filler points keep colliding".into(),
                });
            }
            let z = uniform_disc(&mut rng, FILLER_RADIUS);
            let clear = alpha.points().iter().all(|a| (a - z).norm() > DISTINCT_TOL)
                && beta.iter().flatten().all(|b| (b - z).norm() > DISTINCT_TOL);
            if clear {
                beta[n] = Some(z);
                break;
            }
        }
    }
    let beta = PointSet::new(beta.into_iter().map(|b| b.expect("all assigned")).collect())?;
    CpaCode::new(*params, alpha.clone(), weights.to_vec(), beta, pattern.clone())
}

/// `sum_k w_k P(alpha_k) alpha_k^j` and its term-magnitude scale.
fn weighted_moment(alpha: &[Complex64], wp: &[Complex64], j: usize) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (a, t) in alpha.iter().zip(wp) {
        let term = t * a.powu(j as u32);
        sum += term;
        scale += term.norm();
    }
    (sum, scale)
}

fn relative(sum: Complex64, scale: f64) -> f64 {
    if scale > 0.0 {
        sum.norm() / scale
    } else {
        0.0
    }
}

/// `w_k * prod_{n in workers} (alpha_k - beta_n)` for every `k`.
fn weighted_products(code: &CpaCode, workers: &[usize]) -> Vec<Complex64> {
    let beta = code.beta.points();
    code.alpha
        .points()
        .iter()
        .zip(&code.weights)
        .map(|(&a, &w)| w * workers.iter().map(|&n| a - beta[n]).product::<Complex64>())
        .collect()
}

/// Relative residual of every condition `sum_k w_k P_g(alpha_k) alpha_k^j = 0`, `j < C`.
pub fn check_orthogonality(code: &CpaCode) -> Result<OrthogonalityReport> {
    let c = code.params.validate_cpa()?;
    let alpha = code.alpha.points();
    let residuals: Vec<Vec<f64>> = code
        .pattern
        .sets()
        .iter()
        .map(|set| {
            let wp = weighted_products(code, set);
            (0..c)
                .map(|j| {
                    let (sum, scale) = weighted_moment(alpha, &wp, j);
                    relative(sum, scale)
                })
                .collect()
        })
        .collect();
    let max = residuals.iter().flatten().copied().fold(0.0, f64::max);
    Ok(OrthogonalityReport { residuals, max })
}

/// Relative residuals of `sum_k w_k P_I(alpha_k) alpha_k^j = 0`, `j < C + L`.
pub fn reduced_residuals(code: &CpaCode) -> Result<Vec<f64>> {
    let c = code.params.validate_cpa()?;
    let stats = code.stats();
    let wp = weighted_products(code, &stats.intersection);
    let alpha = code.alpha.points();
    Ok((0..c + stats.l)
        .map(|j| {
            let (sum, scale) = weighted_moment(alpha, &wp, j);
            relative(sum, scale)
        })
        .collect())
}

pub fn check_reduced(code: &CpaCode) -> Result<f64> {
    Ok(reduced_residuals(code)?.into_iter().fold(0.0, f64::max))
}

/// Coefficients of `Q_g(z) = prod_{n in N_g \ I} (z - beta_n)`, one row per set.
pub fn build_q_matrix(code: &CpaCode) -> CMatrix {
    let stats = code.stats();
    let beta = code.beta.points();
    let rows: Vec<Vec<Complex64>> = code
        .pattern
        .sets()
        .iter()
        .map(|set| {
            let outside: Vec<Complex64> = set
                .iter()
                .filter(|n| !stats.intersection.contains(n))
                .map(|&n| beta[n])
                .collect();
            let mut coeffs = ComplexPoly::from_roots(&outside).coeffs().to_vec();
            coeffs.resize(stats.l + 1, Complex64::new(0.0, 0.0));
            coeffs
        })
        .collect();
    CMatrix::from_fn(rows.len(), stats.l + 1, |g, l| rows[g][l])
}

/// `M[l,j] = sum_k w_k P_I(alpha_k) alpha_k^(j+l)`, so that `Q M` collects
/// the left-hand sides of every full condition.
pub fn build_m_matrix(code: &CpaCode) -> Result<CMatrix> {
    let c = code.params.validate_cpa()?;
    let stats = code.stats();
    let wp = weighted_products(code, &stats.intersection);
    let alpha = code.alpha.points();
    Ok(CMatrix::from_fn(stats.l + 1, c, |l, j| {
        weighted_moment(alpha, &wp, j + l).0
    }))
}

/// Runs the full construction for one pattern and reports its residuals.
pub fn construct(
    params: &SystemParams,
    pattern: &NonStragglerPattern,
    alpha: &PointSet,
    weights: &[Complex64],
    seed: u64,
) -> Result<(CpaCode, ConstructionReport)> {
    if pattern.n() != params.n || pattern.s() != params.s {
        return Err(Error::InvalidPattern("pattern N/S disagree with params".into()));
    }
    let stats = pattern.stats();
    let found = construct_intersection_points(alpha, weights, params, &stats, derive_seed(seed, &[0]))?;
    let code = complete_code(
        &found.points,
        pattern,
        alpha,
        weights,
        params,
        derive_seed(seed, &[1]),
    )?;
    let report = ConstructionReport {
        kernel_dim: found.kernel_dim,
        retries: found.retries,
        max_orthogonality_residual: check_orthogonality(&code)?.max,
        max_reduced_residual: check_reduced(&code)?,
    };
    Ok((code, report))
}

/// Kernel dimension of `U` for a parameter tuple, `(I+1) - rank(U)`.
pub fn kernel_dimension(u: &CMatrix) -> usize {
    u.cols() - rank(u, &NumTol::default())
}

/// Weights drawn independently and uniformly from the open interval (0, 1).
pub fn uniform01_weights(k: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    (0..k)
        .map(|_| loop {
            let w: f64 = rng.gen();
            if w > 0.0 {
                break Complex64::new(w, 0.0);
            }
        })
        .collect()
}
