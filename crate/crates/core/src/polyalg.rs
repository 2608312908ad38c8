//! Univariate complex polynomials and point sets.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::CMatrix;

/// Minimum pairwise distance for two points to count as distinct.
pub const DISTINCT_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Polynomial in coefficient form, `coeffs[j]` multiplies `z^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl TryFrom<Vec<Complex64>> for ComplexPoly {
    type Error = Error;

    fn try_from(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParams("non-finite polynomial coefficient".into()));
        }
        Ok(Self::new(coeffs))
    }
}

impl From<ComplexPoly> for Vec<Complex64> {
    fn from(p: ComplexPoly) -> Self {
        p.coeffs
    }
}

impl ComplexPoly {
    /// Trailing exact zeros are dropped; an empty input is the zero polynomial.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == ZERO {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ZERO
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative together.
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Applies the polynomial to every entry of `m`.
    pub fn eval_elementwise(&self, m: &CMatrix) -> CMatrix {
        m.map(|z| self.eval(z))
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![ONE];
        for &r in roots {
            coeffs.push(ZERO);
            for j in (0..coeffs.len()).rev() {
                let lower = if j > 0 { coeffs[j - 1] } else { ZERO };
                coeffs[j] = lower - r * coeffs[j];
            }
        }
        Self::new(coeffs)
    }

    /// All roots by Durand-Kerner iteration followed by Newton polishing.
    ///
    /// Output order is unspecified.
    pub fn roots(&self, max_iter: usize) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if n == 0 || self.leading().norm() == 0.0 {
            return Err(Error::InvalidParams(
                "root finding needs degree >= 1 and a nonzero leading coefficient".into(),
            ));
        }
        let lead = self.leading();
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        let monic = ComplexPoly { coeffs: monic };
        if n == 1 {
            return Ok(vec![-monic.coeffs[0]]);
        }

        // Fujiwara bound for the root radius.
        let radius = (0..n)
            .map(|j| {
                let c = monic.coeffs[j].norm();
                let c = if j == 0 { c / 2.0 } else { c };
                c.powf(1.0 / (n - j) as f64)
            })
            .fold(0.0_f64, f64::max)
            * 2.0;
        let radius = if radius > 0.0 { radius } else { 1.0 };
        let scale = radius.max(1.0);

        let offset = 0.4 + (2.0_f64).sqrt();
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * PI * k as f64 / n as f64 + offset))
            .collect();

        let mut last_update = f64::INFINITY;
        let mut converged = false;
        for _ in 0..max_iter {
            let mut max_update = 0.0_f64;
            for i in 0..n {
                let mut denom = ONE;
                for j in 0..n {
                    if i != j {
                        denom *= z[i] - z[j];
                    }
                }
                if denom == ZERO {
                    denom = Complex64::new(1e-300, 0.0);
                }
                let delta = monic.eval(z[i]) / denom;
                z[i] -= delta;
                max_update = max_update.max(delta.norm());
            }
            last_update = max_update;
            if !max_update.is_finite() {
                break;
            }
            if max_update < 1e-13 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                iterations: max_iter,
                residual: last_update,
                best: z,
            });
        }

        for root in z.iter_mut() {
            for _ in 0..3 {
                let (p, dp) = self.eval_with_derivative(*root);
                if dp == ZERO {
                    break;
                }
                let step = p / dp;
                if !(step.re.is_finite() && step.im.is_finite()) {
                    break;
                }
                let candidate = *root - step;
                if self.eval(candidate).norm() <= p.norm() {
                    *root = candidate;
                } else {
                    break;
                }
            }
        }
        Ok(z)
    }
}

/// A set of pairwise distinct complex points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct PointSet(Vec<Complex64>);

impl TryFrom<Vec<Complex64>> for PointSet {
    type Error = Error;

    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        PointSet::new(v)
    }
}

impl From<PointSet> for Vec<Complex64> {
    fn from(p: PointSet) -> Self {
        p.0
    }
}

impl PointSet {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        if points.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParams("non-finite point".into()));
        }
        if let Some((first, second)) = first_close_pair(&points, DISTINCT_TOL) {
            return Err(Error::NotDistinct {
                first,
                second,
                tol: DISTINCT_TOL,
            });
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        min_pairwise_distance(&self.0)
    }

    /// Smallest distance between a point of `self` and a point of `other`.
    pub fn min_distance_to(&self, other: &[Complex64]) -> f64 {
        min_cross_distance(&self.0, other)
    }
}

pub fn min_pairwise_distance(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min((points[i] - points[j]).norm());
        }
    }
    best
}

pub fn min_cross_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x - y).norm()))
        .fold(f64::INFINITY, f64::min)
}

fn first_close_pair(points: &[Complex64], tol: f64) -> Option<(usize, usize)> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() <= tol {
                return Some((i, j));
            }
        }
    }
    None
}

/// Chebyshev points of the first kind, `cos((2k+1)pi/2K)` for `k = 0..K`.
pub fn chebyshev_points(k: usize) -> Result<PointSet> {
    if k == 0 {
        return Err(Error::InvalidParams("need at least one Chebyshev point".into()));
    }
    let pts = (0..k)
        .map(|i| Complex64::new(((2 * i + 1) as f64 * PI / (2 * k) as f64).cos(), 0.0))
        .collect();
    PointSet::new(pts)
}

/// Barycentric Lagrange interpolant through fixed nodes.
///
/// Evaluation uses the first (modified Lagrange) form
/// `l(t) * sum_j w_j f_j / (t - x_j)`, which stays stable away from the
/// node hull.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl Barycentric {
    pub fn new(nodes: &PointSet) -> Self {
        let x = nodes.points();
        let weights = (0..x.len())
            .map(|j| {
                let prod: Complex64 = (0..x.len())
                    .filter(|&m| m != j)
                    .map(|m| x[j] - x[m])
                    .product();
                prod.inv()
            })
            .collect();
        Self {
            nodes: x.to_vec(),
            weights,
        }
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// Coefficients `c_j` with `p(target) = sum_j c_j f_j`, or the index of
    /// the node that `target` coincides with.
    fn basis_at(&self, target: Complex64) -> std::result::Result<Vec<Complex64>, usize> {
        if let Some(hit) = self
            .nodes
            .iter()
            .position(|&x| (target - x).norm() <= DISTINCT_TOL)
        {
            return Err(hit);
        }
        let ell: Complex64 = self.nodes.iter().map(|&x| target - x).product();
        Ok(self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| ell * w / (target - x))
            .collect())
    }

    pub fn eval_scalar(&self, values: &[Complex64], target: Complex64) -> Result<Complex64> {
        if values.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                self.nodes.len()
            )));
        }
        Ok(match self.basis_at(target) {
            Err(hit) => values[hit],
            Ok(basis) => basis.iter().zip(values).map(|(b, v)| b * v).sum(),
        })
    }

    /// Evaluates the entrywise interpolant of matrix values at `target`.
    pub fn eval_matrix(&self, values: &[CMatrix], target: Complex64) -> Result<CMatrix> {
        if values.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                self.nodes.len()
            )));
        }
        let Some(first) = values.first() else {
            return Err(Error::DimensionMismatch("no interpolation values".into()));
        };
        let shape = first.shape();
        if values.iter().any(|m| m.shape() != shape) {
            return Err(Error::DimensionMismatch("value matrices differ in shape".into()));
        }
        match self.basis_at(target) {
            Err(hit) => Ok(values[hit].clone()),
            Ok(basis) => {
                let mut out = CMatrix::zeros(shape.0, shape.1);
                for (b, m) in basis.iter().zip(values) {
                    for r in 0..shape.0 {
                        for c in 0..shape.1 {
                            out[(r, c)] += b * m[(r, c)];
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Evaluates the unique degree `<= m-1` interpolant through `(nodes, values)` at `target`.
pub fn interp_eval(nodes: &PointSet, values: &[CMatrix], target: Complex64) -> Result<CMatrix> {
    Barycentric::new(nodes).eval_matrix(values, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cr(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_vec(1, 1, vec![z]).unwrap()
    }

    fn random_disc(rng: &mut impl Rng, radius: f64) -> Complex64 {
        loop {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if z.norm() < 1.0 {
                return z * radius;
            }
        }
    }

    /// Greedy nearest matching; agrees with the optimal pairing when the two
    /// sets match far below their own separation.
    pub(crate) fn pairing_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        let mut worst = 0.0_f64;
        for x in a {
            let (idx, d) = b
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, y)| (i, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[idx] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn horner_basics() {
        assert_eq!(ComplexPoly::from_real(&[1.0, 1.0]).eval(cr(0.0)), cr(1.0));
        assert_eq!(ComplexPoly::from_real(&[-1.0, 0.0, 1.0]).eval(cr(1.0)), cr(0.0));
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = ComplexPoly::from_real(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert!(ComplexPoly::new(vec![]).is_zero());
    }

    #[test]
    fn elementwise_identity_and_square() {
        let m = CMatrix::from_real_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        assert_eq!(ComplexPoly::from_real(&[0.0, 1.0]).eval_elementwise(&m), m);
        let sq = ComplexPoly::from_real(&[0.0, 0.0, 1.0]).eval_elementwise(&scalar(cr(2.0)));
        assert_eq!(sq, scalar(cr(4.0)));
    }

    #[test]
    fn elementwise_matches_scalar_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = ComplexPoly::from_real(&[1.0, 0.0, 3.0]);
        let m = CMatrix::from_fn(2, 3, |_, _| random_disc(&mut rng, 1.0));
        let out = f.eval_elementwise(&m);
        for r in 0..2 {
            for c in 0..3 {
                let z = m[(r, c)];
                let expected = 3.0 * z * z + 1.0;
                assert!((out[(r, c)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn from_roots_small_cases() {
        assert_eq!(ComplexPoly::from_roots(&[]).coeffs(), &[cr(1.0)]);
        assert_eq!(
            ComplexPoly::from_roots(&[cr(1.0), cr(-1.0)]).coeffs(),
            &[cr(-1.0), cr(0.0), cr(1.0)]
        );
    }

    #[test]
    fn from_roots_vanishes_at_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let roots: Vec<_> = (0..6).map(|_| random_disc(&mut rng, 1.5)).collect();
        let p = ComplexPoly::from_roots(&roots);
        let max_coeff = p.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        for r in &roots {
            assert!(p.eval(*r).norm() < 1e-9 * max_coeff);
        }
    }

    #[test]
    fn product_form_agrees_with_horner() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let roots: Vec<_> = (0..7).map(|_| random_disc(&mut rng, 2.0)).collect();
        let p = ComplexPoly::from_roots(&roots);
        for &alpha in chebyshev_points(5).unwrap().points() {
            let direct: Complex64 = roots.iter().map(|r| alpha - r).product();
            assert!((p.eval(alpha) - direct).norm() <= 1e-12 * direct.norm());
        }
    }

    #[test]
    fn roots_of_small_polynomials() {
        let r = ComplexPoly::from_real(&[-1.0, 0.0, 1.0]).roots(500).unwrap();
        assert!(pairing_distance(&r, &[cr(1.0), cr(-1.0)]) < 1e-14);
        let r = ComplexPoly::from_real(&[-3.0, 1.0]).roots(500).unwrap();
        assert_eq!(r, vec![cr(3.0)]);
    }

    #[test]
    fn roots_rejects_constants() {
        assert!(ComplexPoly::from_real(&[2.0]).roots(10).is_err());
    }

    #[test]
    fn roots_reports_non_convergence() {
        let p = ComplexPoly::from_roots(&[cr(0.3), cr(-0.2), cr(0.9), Complex64::new(0.1, 0.5)]);
        match p.roots(1) {
            Err(Error::NoConvergence { best, .. }) => assert_eq!(best.len(), 4),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_eight_random_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let roots: Vec<_> = (0..8).map(|_| random_disc(&mut rng, 1.0)).collect();
        let found = ComplexPoly::from_roots(&roots).roots(500).unwrap();
        assert!(pairing_distance(&roots, &found) < 1e-8);
    }

    #[test]
    fn chebyshev_values() {
        assert!(chebyshev_points(0).is_err());
        let one = chebyshev_points(1).unwrap();
        assert!(one.points()[0].norm() < 1e-16);
        let two = chebyshev_points(2).unwrap();
        let h = 2.0_f64.sqrt() / 2.0;
        assert!((two.points()[0] - cr(h)).norm() < 1e-15);
        assert!((two.points()[1] - cr(-h)).norm() < 1e-15);
        let five = chebyshev_points(5).unwrap();
        let expected = [0.9510565163, 0.5877852523, 0.0, -0.5877852523, -0.9510565163];
        for (p, e) in five.points().iter().zip(expected) {
            assert!((p.re - e).abs() < 1e-10 && p.im == 0.0);
        }
    }

    #[test]
    fn interp_linear_and_constant() {
        let nodes = PointSet::new(vec![cr(0.0), cr(1.0)]).unwrap();
        let v = interp_eval(&nodes, &[scalar(cr(1.0)), scalar(cr(2.0))], cr(2.0)).unwrap();
        assert!((v[(0, 0)] - cr(3.0)).norm() < 1e-15);

        let single = PointSet::new(vec![Complex64::new(0.3, -0.2)]).unwrap();
        let x = CMatrix::from_real_rows(&[&[4.0, 5.0]]).unwrap();
        assert_eq!(interp_eval(&single, std::slice::from_ref(&x), cr(17.0)).unwrap(), x);
    }

    #[test]
    fn interp_reproduces_quartic_at_chebyshev_nodes() {
        let nodes = chebyshev_points(5).unwrap();
        let q = ComplexPoly::from_real(&[0.5, -1.0, 2.0, 0.25, -3.0]);
        let values: Vec<_> = nodes.points().iter().map(|&x| scalar(q.eval(x))).collect();
        let got = interp_eval(&nodes, &values, cr(0.3)).unwrap()[(0, 0)];
        assert!((got - q.eval(cr(0.3))).norm() < 1e-12);
    }

    #[test]
    fn interp_rejects_duplicate_nodes() {
        assert!(matches!(
            PointSet::new(vec![cr(0.5), cr(0.5 + 1e-12)]),
            Err(Error::NotDistinct { .. })
        ));
    }

    proptest! {
        #[test]
        fn interp_reproduces_polynomials(seed in any::<u64>(), m in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nodes: Vec<_> = loop {
                let pts: Vec<_> = (0..m).map(|_| random_disc(&mut rng, 1.0)).collect();
                if min_pairwise_distance(&pts) > 0.05 { break pts; }
            };
            let nodes = PointSet::new(nodes).unwrap();
            let coeffs: Vec<_> = (0..m).map(|_| random_disc(&mut rng, 1.0)).collect();
            let p = ComplexPoly::new(coeffs);
            let values: Vec<_> = nodes.points().iter().map(|&x| scalar(p.eval(x))).collect();
            let interp = Barycentric::new(&nodes);
            for _ in 0..20 {
                let t = random_disc(&mut rng, 1.0);
                let got = interp.eval_matrix(&values, t).unwrap()[(0, 0)];
                let want = p.eval(t);
                let scale = p.coeffs().iter().map(|c| c.norm()).sum::<f64>();
                prop_assert!((got - want).norm() <= 1e-10 * scale.max(want.norm()));
            }
            for (x, v) in nodes.points().iter().zip(&values) {
                prop_assert_eq!(&interp.eval_matrix(&values, *x).unwrap(), v);
            }
        }

        #[test]
        fn roots_round_trip(seed in any::<u64>(), deg in 1usize..=12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let roots: Vec<_> = loop {
                let pts: Vec<_> = (0..deg).map(|_| random_disc(&mut rng, 1.0)).collect();
                if min_pairwise_distance(&pts) >= 1e-3 { break pts; }
            };
            let found = ComplexPoly::from_roots(&roots).roots(1000).unwrap();
            prop_assert!(pairing_distance(&roots, &found) < 1e-8);
        }

        #[test]
        fn chebyshev_distinct_inside_interval(k in 1usize..64) {
            let pts = chebyshev_points(k).unwrap();
            prop_assert!(pts.points().iter().all(|p| p.re > -1.0 && p.re < 1.0));
            if k > 1 {
                prop_assert!(pts.min_pairwise_distance() > DISTINCT_TOL);
            }
        }
    }
}
