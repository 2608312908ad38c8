//! The encode/compute/decode round with straggler injection, the
//! individual-decoding baseline and the error-polynomial identity.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use rand::seq::index;

use crate::codegen::CpaCode;
use crate::error::{Error, Result};
use crate::numkit::CMatrix;
use crate::pattern::{NonStragglerPattern, SystemParams};
use crate::polyalg::{Barycentric, ComplexPoly, PointSet};
use crate::rng::rng_from;

const REL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub x: Vec<CMatrix>,
    pub f: ComplexPoly,
    pub weights: Vec<Complex64>,
}

impl Instance {
    pub fn new(x: Vec<CMatrix>, f: ComplexPoly, weights: Vec<Complex64>) -> Result<Self> {
        let inst = Self { x, f, weights };
        inst.validate()?;
        Ok(inst)
    }

    /// `K` random `q x v` matrices with entries uniform in the unit disc and a
    /// degree-`d` polynomial with real coefficients uniform in `[-1, 1]`.
    pub fn random(weights: Vec<Complex64>, d: usize, q: usize, v: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut disc = || loop {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if z.norm_sqr() < 1.0 {
                break z;
            }
        };
        let x = (0..weights.len())
            .map(|_| CMatrix::from_fn(q, v, |_, _| disc()))
            .collect();
        let mut coeffs: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        while coeffs[d].abs() < 1e-3 {
            coeffs[d] = rng.gen_range(-1.0..1.0);
        }
        Self::new(x, ComplexPoly::from_real(&coeffs), weights)
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.x.first().map_or((0, 0), CMatrix::shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() || self.x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} data matrices, {} weights",
                self.x.len(),
                self.weights.len()
            )));
        }
        let shape = self.shape();
        if self.x.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch("data matrices differ in shape".into()));
        }
        if self.weights.iter().any(|w| *w == Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidParams("weights must be nonzero".into()));
        }
        if self.f.is_zero() {
            return Err(Error::InvalidParams("F must be nonzero".into()));
        }
        Ok(())
    }

    fn check_against(&self, code: &CpaCode) -> Result<()> {
        self.validate()?;
        code.validate()?;
        if self.k() != code.params.k {
            return Err(Error::DimensionMismatch(format!(
                "instance has K = {}, code has K = {}",
                self.k(),
                code.params.k
            )));
        }
        if self.f.degree() != code.params.d {
            return Err(Error::DimensionMismatch(format!(
                "deg F = {}, code has d = {}",
                self.f.degree(),
                code.params.d
            )));
        }
        if self.weights != code.weights {
            return Err(Error::InvalidParams("instance and code weights differ".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerResponse {
    pub worker: usize,
    pub payload: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub y_hat: CMatrix,
    pub y_true: CMatrix,
    pub rel_error: f64,
}

impl RecoveryResult {
    pub fn new(y_hat: CMatrix, y_true: CMatrix) -> Result<Self> {
        let rel_error = relative_error(&y_hat, &y_true)?;
        Ok(Self { y_hat, y_true, rel_error })
    }
}

/// One line of the round trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub g: usize,
    pub active_set: Vec<usize>,
    pub rel_error: f64,
}

impl RoundTrace {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPolynomialCheck {
    pub max_node_residual: f64,
    pub identity_gap: f64,
    /// `|sum_k w_k Delta(alpha_k)|`, which vanishes when recovery is exact.
    pub aggregate_error: f64,
}

pub fn relative_error(y_hat: &CMatrix, y_true: &CMatrix) -> Result<f64> {
    Ok(y_hat.sub(y_true)?.frobenius_norm() / y_true.frobenius_norm().max(REL_FLOOR))
}

fn weighted_sum(weights: &[Complex64], mats: &[CMatrix]) -> Result<CMatrix> {
    let (q, v) = mats[0].shape();
    mats.iter()
        .zip(weights)
        .try_fold(CMatrix::zeros(q, v), |acc, (m, w)| acc.add(&m.scale(*w)))
}

/// `Y = sum_k w_k F(X_k)`.
pub fn ground_truth(inst: &Instance) -> Result<CMatrix> {
    inst.validate()?;
    let fx: Vec<CMatrix> = inst.x.iter().map(|m| inst.f.eval_elementwise(m)).collect();
    weighted_sum(&inst.weights, &fx)
}

/// Coded inputs `E(beta_n)` for every worker.
pub fn encode(code: &CpaCode, inst: &Instance) -> Result<Vec<CMatrix>> {
    inst.check_against(code)?;
    let enc = Barycentric::new(&code.alpha);
    code.beta
        .points()
        .iter()
        .map(|&b| enc.eval_matrix(&inst.x, b))
        .collect()
}

pub fn worker_compute(f: &ComplexPoly, coded: &CMatrix) -> CMatrix {
    f.eval_elementwise(coded)
}

/// Orders the responses of `active_set` and checks they match it exactly.
fn gather<'r>(
    n_workers: usize,
    responses: &'r [WorkerResponse],
    active_set: &[usize],
) -> Result<(Vec<usize>, Vec<&'r CMatrix>)> {
    let mut active: Vec<usize> = active_set.to_vec();
    active.sort_unstable();
    if active.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidResponses("duplicate worker in active set".into()));
    }
    if let Some(&w) = active.iter().find(|&&w| w >= n_workers) {
        return Err(Error::InvalidResponses(format!("worker {w} out of range")));
    }
    let mut seen = HashSet::new();
    for r in responses {
        if !seen.insert(r.worker) {
            return Err(Error::InvalidResponses(format!("duplicate response from worker {}", r.worker)));
        }
    }
    let expected: HashSet<usize> = active.iter().copied().collect();
    if seen != expected {
        return Err(Error::InvalidResponses(
            "responses do not cover exactly the active set".into(),
        ));
    }
    let payloads: Vec<&CMatrix> = active
        .iter()
        .map(|w| &responses.iter().find(|r| r.worker == *w).unwrap().payload)
        .collect();
    let shape = payloads.first().map(|p| p.shape());
    if payloads.iter().any(|p| Some(p.shape()) != shape) {
        return Err(Error::DimensionMismatch("payload shapes differ".into()));
    }
    Ok((active, payloads))
}

fn decoder(code: &CpaCode, active: &[usize]) -> Result<Barycentric> {
    let nodes: Vec<Complex64> = active.iter().map(|&n| code.beta.points()[n]).collect();
    Ok(Barycentric::new(&PointSet::new(nodes)?))
}

fn decoded_at_alpha(code: &CpaCode, responses: &[WorkerResponse], active_set: &[usize]) -> Result<Vec<CMatrix>> {
    let (active, payloads) = gather(code.params.n, responses, active_set)?;
    let dec = decoder(code, &active)?;
    let values: Vec<CMatrix> = payloads.into_iter().cloned().collect();
    code.alpha
        .points()
        .iter()
        .map(|&a| dec.eval_matrix(&values, a))
        .collect()
}

/// `sum_k w_k D(alpha_k)` with `D` the interpolant through the `N - S` responses.
pub fn decode_aggregate(code: &CpaCode, responses: &[WorkerResponse], active_set: &[usize]) -> Result<CMatrix> {
    let need = code.params.n - code.params.s;
    if active_set.len() != need {
        return Err(Error::InvalidResponses(format!(
            "active set has {} workers, expected N - S = {need}",
            active_set.len()
        )));
    }
    let d_alpha = decoded_at_alpha(code, responses, active_set)?;
    weighted_sum(&code.weights, &d_alpha)
}

/// Recovers every `F(X_k)` by interpolating all responses; needs `d(K-1)+1` of them.
pub fn decode_individual(code: &CpaCode, responses: &[WorkerResponse], active_set: &[usize]) -> Result<Vec<CMatrix>> {
    let need = code.params.individual_responses();
    if active_set.len() < need {
        return Err(Error::TooFewResponses {
            have: active_set.len(),
            need,
        });
    }
    decoded_at_alpha(code, responses, active_set)
}

/// Evaluates `Delta = D - F(E)` at the responders and the data points.
///
/// Intended for scalar instances; matrix instances are checked entrywise and
/// the worst entry is reported.
pub fn error_polynomial_check(
    code: &CpaCode,
    responses: &[WorkerResponse],
    active_set: &[usize],
    inst: &Instance,
) -> Result<ErrorPolynomialCheck> {
    inst.check_against(code)?;
    let (active, payloads) = gather(code.params.n, responses, active_set)?;
    let dec = decoder(code, &active)?;
    let enc = Barycentric::new(&code.alpha);
    let values: Vec<CMatrix> = payloads.into_iter().cloned().collect();
    let delta = |z: Complex64| -> Result<CMatrix> {
        let fe = inst.f.eval_elementwise(&enc.eval_matrix(&inst.x, z)?);
        dec.eval_matrix(&values, z)?.sub(&fe)
    };
    let max_abs = |m: &CMatrix| m.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut max_node_residual: f64 = 0.0;
    for &n in &active {
        max_node_residual = max_node_residual.max(max_abs(&delta(code.beta.points()[n])?));
    }
    let deltas: Vec<CMatrix> = code.alpha.points().iter().map(|&a| delta(a)).collect::<Result<_>>()?;
    let weighted_delta = weighted_sum(&code.weights, &deltas)?;
    let y_hat = decode_aggregate(code, responses, active_set)?;
    let y = ground_truth(inst)?;
    let gap = y_hat.sub(&y)?.sub(&weighted_delta)?;
    Ok(ErrorPolynomialCheck {
        max_node_residual,
        identity_gap: max_abs(&gap),
        aggregate_error: max_abs(&weighted_delta),
    })
}

/// Every worker's response; stragglers are removed by the caller.
pub fn compute_all(code: &CpaCode, inst: &Instance) -> Result<Vec<WorkerResponse>> {
    Ok(encode(code, inst)?
        .iter()
        .enumerate()
        .map(|(worker, coded)| WorkerResponse {
            worker,
            payload: worker_compute(&inst.f, coded),
        })
        .collect())
}

/// Full round where exactly the workers of set `g` respond.
pub fn run_round(inst: &Instance, code: &CpaCode, g: usize) -> Result<RecoveryResult> {
    let set = code
        .pattern
        .sets()
        .get(g)
        .ok_or_else(|| Error::InvalidPattern(format!("set index {g} out of range")))?
        .clone();
    run_round_with_set(inst, code, &set)
}

/// Round with an arbitrary responding set, admissible or not.
pub fn run_round_with_set(inst: &Instance, code: &CpaCode, active_set: &[usize]) -> Result<RecoveryResult> {
    let responses: Vec<WorkerResponse> = compute_all(code, inst)?
        .into_iter()
        .filter(|r| active_set.contains(&r.worker))
        .collect();
    let y_hat = decode_aggregate(code, &responses, active_set)?;
    RecoveryResult::new(y_hat, ground_truth(inst)?)
}

/// Like [`run_round`] with `g` drawn uniformly from the pattern.
pub fn run_random_round(inst: &Instance, code: &CpaCode, seed: u64) -> Result<(usize, RecoveryResult)> {
    let g = rng_from(seed).gen_range(0..code.pattern.g());
    Ok((g, run_round(inst, code, g)?))
}

/// Individual-decoding code: evaluation points spread on the unit circle.
///
/// The pattern holds the single set `0..N-S`; any `N - S` responders decode.
pub fn baseline_code(params: SystemParams, alpha: PointSet, weights: Vec<Complex64>) -> Result<CpaCode> {
    params.validate_baseline()?;
    let n = params.n;
    let beta = PointSet::new(
        (0..n)
            .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * (j as f64 + 0.5) / n as f64))
            .collect(),
    )?;
    let pattern = NonStragglerPattern::new(n, params.s, vec![(0..n - params.s).collect()])?;
    CpaCode::new(params, alpha, weights, beta, pattern)
}

/// Baseline round: `S` random stragglers, every `F(X_k)` decoded individually.
///
/// Returns the responding set and the worst relative error over `k`.
pub fn run_baseline_round(inst: &Instance, code: &CpaCode, seed: u64) -> Result<(Vec<usize>, f64)> {
    inst.check_against(code)?;
    let n = code.params.n;
    let mut stragglers = index::sample(&mut rng_from(seed), n, code.params.s).into_vec();
    stragglers.sort_unstable();
    let active: Vec<usize> = (0..n).filter(|w| stragglers.binary_search(w).is_err()).collect();
    let responses: Vec<WorkerResponse> = compute_all(code, inst)?
        .into_iter()
        .filter(|r| active.contains(&r.worker))
        .collect();
    let decoded = decode_individual(code, &responses, &active)?;
    let mut worst: f64 = 0.0;
    for (x, got) in inst.x.iter().zip(&decoded) {
        worst = worst.max(relative_error(got, &inst.f.eval_elementwise(x))?);
    }
    Ok((active, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{construct, uniform01_weights};
    use crate::pattern::{NonStragglerPattern, SystemParams};
    use crate::polyalg::chebyshev_points;
    use crate::rng::derive_seed;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_vec(1, 1, vec![z]).unwrap()
    }

    fn feasible_code(seed: u64) -> CpaCode {
        // K=5, d=2, S=2, N=8 and I=5
        let params = SystemParams::new(5, 2, 2, 8);
        let pattern =
            NonStragglerPattern::new(8, 2, vec![vec![0, 1, 2, 3, 4, 5], vec![0, 1, 2, 3, 4, 6]]).unwrap();
        let alpha = chebyshev_points(5).unwrap();
        let w = uniform01_weights(5, &mut rng_from(derive_seed(seed, &[7])));
        construct(&params, &pattern, &alpha, &w, seed).unwrap().0
    }

    fn trivial_code(k: usize, d: usize, n: usize, s: usize) -> CpaCode {
        let alpha = chebyshev_points(k).unwrap();
        let beta = PointSet::new((0..n).map(|i| c(1.5 + i as f64 * 0.1, 0.3)).collect()).unwrap();
        let pattern = NonStragglerPattern::new(n, s, vec![(0..n - s).collect()]).unwrap();
        CpaCode::new(
            SystemParams::new(k, d, s, n),
            alpha,
            vec![c(1.0, 0.0); k],
            beta,
            pattern,
        )
        .unwrap()
    }

    #[test]
    fn ground_truth_small_cases() {
        let x = vec![scalar(c(1.0, 0.0)), scalar(c(2.0, 0.0))];
        let inst = Instance::new(x, ComplexPoly::from_real(&[0.0, 0.0, 1.0]), vec![c(1.0, 0.0); 2]).unwrap();
        assert_eq!(ground_truth(&inst).unwrap()[(0, 0)], c(5.0, 0.0));

        let mut rng = rng_from(3);
        let w = uniform01_weights(5, &mut rng);
        let inst = Instance::random(w, 2, 2, 3, &mut rng).unwrap();
        let y = ground_truth(&inst).unwrap();
        for r in 0..2 {
            for col in 0..3 {
                let mut acc = c(0.0, 0.0);
                for k in 0..5 {
                    let x = inst.x[k][(r, col)];
                    let fx = inst.f.coeffs()[0] + inst.f.coeffs()[1] * x + inst.f.coeffs()[2] * x * x;
                    acc += inst.weights[k] * fx;
                }
                assert!((acc - y[(r, col)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn encode_constant_when_k_is_one() {
        let code = trivial_code(1, 1, 3, 1);
        let x0 = CMatrix::from_fn(2, 2, |r, col| c(r as f64, col as f64 + 0.5));
        let inst = Instance::new(vec![x0.clone()], ComplexPoly::from_real(&[0.0, 1.0]), vec![c(1.0, 0.0)]).unwrap();
        for e in encode(&code, &inst).unwrap() {
            assert!(e.sub(&x0).unwrap().frobenius_norm() < 1e-15);
        }
        let r = run_round(&inst, &code, 0).unwrap();
        assert!(r.rel_error < 1e-12);
    }

    #[test]
    fn encode_linear_matches_two_point_formula() {
        let code = trivial_code(2, 1, 3, 1);
        let mut rng = rng_from(11);
        let inst = Instance::random(vec![c(1.0, 0.0); 2], 1, 2, 2, &mut rng).unwrap();
        let a = code.alpha.points();
        for (e, &b) in encode(&code, &inst).unwrap().iter().zip(code.beta.points()) {
            let slope = inst.x[1].sub(&inst.x[0]).unwrap().scale(c(1.0, 0.0) / (a[1] - a[0]));
            let want = inst.x[0].add(&slope.scale(b - a[0])).unwrap();
            assert!(e.sub(&want).unwrap().frobenius_norm() < 1e-13);
        }
    }

    #[test]
    fn encode_rejects_beta_on_alpha() {
        let mut code = trivial_code(2, 1, 3, 1);
        let mut pts = code.beta.points().to_vec();
        pts[0] = code.alpha.points()[1];
        code.beta = PointSet::new(pts).unwrap();
        let inst = Instance::random(vec![c(1.0, 0.0); 2], 1, 1, 1, &mut rng_from(1)).unwrap();
        assert!(encode(&code, &inst).is_err());
    }

    #[test]
    fn exact_recovery_on_constructed_code() {
        for seed in 0..5u64 {
            let code = feasible_code(seed);
            for t in 0..10u64 {
                let mut rng = rng_from(derive_seed(seed, &[t, 99]));
                let inst = Instance::random(code.weights.clone(), 2, 2, 2, &mut rng).unwrap();
                for g in 0..code.pattern.g() {
                    let r = run_round(&inst, &code, g).unwrap();
                    assert!(r.rel_error < 1e-7, "seed {seed} g {g}: {}", r.rel_error);
                }
            }
        }
    }

    #[test]
    fn set_outside_pattern_breaks_recovery() {
        let code = feasible_code(42);
        let inst = Instance::random(code.weights.clone(), 2, 2, 2, &mut rng_from(42)).unwrap();
        let r = run_round_with_set(&inst, &code, &[2, 3, 4, 5, 6, 7]).unwrap();
        assert!(r.rel_error > 1e-3, "{}", r.rel_error);
    }

    #[test]
    fn random_beta_fails_when_deficit_is_large() {
        let params = SystemParams::new(5, 2, 2, 7);
        assert_eq!(params.deficit(), 4);
        let beta = PointSet::new((0..7).map(|i| c(0.3 * i as f64 - 0.9, 0.7)).collect()).unwrap();
        let pattern = NonStragglerPattern::new(7, 2, vec![vec![0, 1, 2, 3, 4]]).unwrap();
        let w = uniform01_weights(5, &mut rng_from(42));
        let code = CpaCode::new(params, chebyshev_points(5).unwrap(), w.clone(), beta, pattern).unwrap();
        let inst = Instance::random(w, 2, 2, 2, &mut rng_from(42)).unwrap();
        assert!(run_round(&inst, &code, 0).unwrap().rel_error > 1e-3);
    }

    #[test]
    fn decoder_reproduces_low_degree_payloads() {
        let code = feasible_code(3);
        let active = code.pattern.sets()[0].clone();
        let mut rng = rng_from(5);
        for deg in 0..active.len() {
            let coeffs: Vec<Complex64> = (0..=deg).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let p = ComplexPoly::new(coeffs);
            let responses: Vec<WorkerResponse> = active
                .iter()
                .map(|&n| WorkerResponse {
                    worker: n,
                    payload: scalar(p.eval(code.beta.points()[n])),
                })
                .collect();
            let got = decoded_at_alpha(&code, &responses, &active).unwrap();
            for (m, &a) in got.iter().zip(code.alpha.points()) {
                let want = p.eval(a);
                assert!((m[(0, 0)] - want).norm() < 1e-10 * want.norm().max(1.0), "deg {deg}");
            }
        }
    }

    #[test]
    fn node_residual_and_identity() {
        let code = feasible_code(8);
        for t in 0..20u64 {
            let inst = Instance::random(code.weights.clone(), 2, 1, 1, &mut rng_from(t)).unwrap();
            let g = (t as usize) % code.pattern.g();
            let active = code.pattern.sets()[g].clone();
            let responses: Vec<WorkerResponse> = compute_all(&code, &inst)
                .unwrap()
                .into_iter()
                .filter(|r| active.contains(&r.worker))
                .collect();
            let chk = error_polynomial_check(&code, &responses, &active, &inst).unwrap();
            let scale = responses.iter().map(|r| r.payload[(0, 0)].norm()).fold(1.0, f64::max);
            assert!(chk.max_node_residual < 1e-10 * scale);
            assert!(chk.identity_gap < 1e-10 * scale);
            assert!(chk.aggregate_error < 1e-8 * scale);
        }
    }

    #[test]
    fn response_set_validation() {
        let code = feasible_code(1);
        let inst = Instance::random(code.weights.clone(), 2, 1, 1, &mut rng_from(2)).unwrap();
        let all = compute_all(&code, &inst).unwrap();
        let active = code.pattern.sets()[0].clone();
        let subset: Vec<WorkerResponse> = all.iter().filter(|r| active.contains(&r.worker)).cloned().collect();
        assert!(decode_aggregate(&code, &subset, &active).is_ok());
        // extra response
        assert!(decode_aggregate(&code, &all, &active).is_err());
        // missing response
        assert!(decode_aggregate(&code, &subset[1..], &active).is_err());
        // duplicate response
        let mut dup = subset.clone();
        dup[0] = dup[1].clone();
        assert!(decode_aggregate(&code, &dup, &active).is_err());
        // wrong size
        assert!(decode_aggregate(&code, &subset[1..], &active[1..]).is_err());
    }

    #[test]
    fn baseline_needs_enough_responses() {
        let code = feasible_code(4);
        let inst = Instance::random(code.weights.clone(), 2, 1, 1, &mut rng_from(4)).unwrap();
        let active = code.pattern.sets()[0].clone();
        let responses: Vec<WorkerResponse> = compute_all(&code, &inst)
            .unwrap()
            .into_iter()
            .filter(|r| active.contains(&r.worker))
            .collect();
        assert!(matches!(
            decode_individual(&code, &responses, &active),
            Err(Error::TooFewResponses { have: 6, need: 9 })
        ));
        assert!(decode_aggregate(&code, &responses, &active).is_ok());
    }

    #[test]
    fn baseline_linear_two_points() {
        let code = trivial_code(2, 1, 3, 1);
        let inst = Instance::random(vec![c(1.0, 0.0); 2], 1, 2, 2, &mut rng_from(6)).unwrap();
        let responses = compute_all(&code, &inst).unwrap();
        let got = decode_individual(&code, &responses[..2], &[0, 1]).unwrap();
        for (g, x) in got.iter().zip(&inst.x) {
            let fx = inst.f.eval_elementwise(x);
            assert!(g.sub(&fx).unwrap().frobenius_norm() < 1e-12 * fx.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn trace_line_is_json() {
        let t = RoundTrace {
            round: 3,
            g: 1,
            active_set: vec![0, 2],
            rel_error: 1.5e-12,
        };
        let line = t.to_json_line();
        assert!(!line.contains('\n'));
        assert_eq!(serde_json::from_str::<RoundTrace>(&line).unwrap(), t);
    }

    #[test]
    fn baseline_round_recovers_every_matrix() {
        let params = SystemParams::new(5, 2, 2, 11);
        let w = vec![c(0.5, 0.0); 5];
        let code = baseline_code(params, chebyshev_points(5).unwrap(), w.clone()).unwrap();
        let inst = Instance::random(w, 2, 2, 2, &mut rng_from(8)).unwrap();
        for seed in 0..5 {
            let (active, err) = run_baseline_round(&inst, &code, seed).unwrap();
            assert_eq!(active.len(), 9);
            assert!(err < 1e-9, "seed {seed}: {err}");
        }
        assert!(baseline_code(SystemParams::new(5, 2, 2, 10), chebyshev_points(5).unwrap(), vec![c(0.5, 0.0); 5]).is_err());
    }
}
