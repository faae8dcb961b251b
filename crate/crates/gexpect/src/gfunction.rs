//! The sublinear monotone function G and families of second moments.
//!
//! G is stored as a finite set of PSD matrices Theta with
//! G(A) = 1/2 max_{Q in Theta} tr(A Q); the QQ^T parametrization is absorbed
//! into the stored matrices. In d = 1 the set reduces to the variance
//! interval [sigma_lo^2, sigma_hi^2].

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetry tolerance for inputs and stored matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalue floor admitting PSD matrices produced by floating-point math.
pub const PSD_TOL: f64 = 1e-10;

/// A nonempty finite set of symmetric PSD matrices of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    dim: usize,
    matrices: Vec<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CovarianceSetJson {
    dim: usize,
    matrices: Vec<Vec<Vec<f64>>>,
}

fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

impl CovarianceSet {
    pub fn new(dim: usize, matrices: Vec<DMatrix<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        if matrices.is_empty() {
            return Err(Error::Domain("covariance set must be nonempty".into()));
        }
        for m in &matrices {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Dimension(format!(
                    "matrix is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if symmetry_defect(m) > SYMMETRY_TOL {
                return Err(Error::Domain("matrix is not symmetric".into()));
            }
            if min_eigenvalue(m) < -PSD_TOL {
                return Err(Error::Domain("matrix is not positive semidefinite".into()));
            }
        }
        Ok(Self { dim, matrices })
    }

    pub fn from_rows(dim: usize, rows: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let matrices = rows
            .into_iter()
            .map(|r| {
                let flat: Vec<f64> = r.iter().flatten().copied().collect();
                if r.len() != dim || flat.len() != dim * dim {
                    return Err(Error::Dimension("ragged matrix rows".into()));
                }
                Ok(DMatrix::from_row_slice(dim, dim, &flat))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(dim, matrices)
    }

    /// Bypass validation; used by negative-control fixtures only.
    #[doc(hidden)]
    pub fn from_matrices_unchecked(dim: usize, matrices: Vec<DMatrix<f64>>) -> Self {
        Self { dim, matrices }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    /// Largest eigenvalue over the set; the diffusion scale of the solvers.
    pub fn max_eigenvalue(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| {
                m.clone()
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        let doc = CovarianceSetJson {
            dim: self.dim,
            matrices: self
                .matrices
                .iter()
                .map(|m| {
                    (0..self.dim)
                        .map(|i| (0..self.dim).map(|j| m[(i, j)]).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("covariance set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CovarianceSetJson =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_rows(doc.dim, doc.matrices)
    }
}

/// The variance-uncertainty interval [sigma_lo^2, sigma_hi^2] of the
/// one-dimensional G-normal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaInterval {
    pub sigma_lo_sq: f64,
    pub sigma_hi_sq: f64,
}

impl SigmaInterval {
    pub fn new(sigma_lo_sq: f64, sigma_hi_sq: f64) -> Result<Self> {
        if !(0.0 <= sigma_lo_sq && sigma_lo_sq <= sigma_hi_sq) {
            return Err(Error::Domain(format!(
                "need 0 <= sigma_lo_sq <= sigma_hi_sq, got [{sigma_lo_sq}, {sigma_hi_sq}]"
            )));
        }
        Ok(Self {
            sigma_lo_sq,
            sigma_hi_sq,
        })
    }

    pub fn classical(sigma_sq: f64) -> Result<Self> {
        Self::new(sigma_sq, sigma_sq)
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi_sq.sqrt()
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo_sq.sqrt()
    }

    /// Scalar G: g(a) = (sigma_hi^2 a+ - sigma_lo^2 a-) / 2.
    pub fn g_scalar(&self, a: f64) -> f64 {
        0.5 * if a >= 0.0 {
            self.sigma_hi_sq * a
        } else {
            self.sigma_lo_sq * a
        }
    }

    pub fn to_covariance_set(&self) -> CovarianceSet {
        let mats = if self.sigma_lo_sq == self.sigma_hi_sq {
            vec![DMatrix::from_element(1, 1, self.sigma_hi_sq)]
        } else {
            vec![
                DMatrix::from_element(1, 1, self.sigma_lo_sq),
                DMatrix::from_element(1, 1, self.sigma_hi_sq),
            ]
        };
        CovarianceSet::new(1, mats).expect("interval endpoints are PSD")
    }
}

/// The sublinear monotone map A -> 1/2 max_{Q} tr(A Q).
#[derive(Debug, Clone, PartialEq)]
pub struct GFunction {
    source: CovarianceSet,
}

impl GFunction {
    pub fn new(source: CovarianceSet) -> Self {
        Self { source }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn source(&self) -> &CovarianceSet {
        &self.source
    }

    /// G(A) for symmetric A.
    pub fn eval(&self, a: &DMatrix<f64>) -> Result<f64> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "argument is {}x{}, G has dimension {}",
                a.nrows(),
                a.ncols(),
                self.dim()
            )));
        }
        if symmetry_defect(a) > SYMMETRY_TOL {
            return Err(Error::Domain("argument must be symmetric".into()));
        }
        let best = self
            .source
            .matrices()
            .iter()
            .map(|q| (a * q).trace())
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(0.5 * best)
    }
}

/// Convenience wrapper mirroring the operation name.
pub fn g_eval(g: &GFunction, a: &DMatrix<f64>) -> Result<f64> {
    g.eval(a)
}

/// Worst slack seen for each axiom; negative slack beyond tolerance is a
/// violation.
#[derive(Debug, Clone)]
pub struct GAxiomReport {
    pub subadditivity_worst: f64,
    pub homogeneity_worst: f64,
    pub monotonicity_worst: f64,
    pub violations: usize,
    pub pass: bool,
}

fn random_symmetric(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = rng.gen_range(-2.0..2.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Checks subadditivity, positive homogeneity and PSD-order monotonicity of
/// G on randomized symmetric arguments, plus directed monotonicity probes
/// along eigen-directions of the stored matrices (so an injected non-PSD
/// member is reliably caught).
pub fn check_g_axioms(g: &GFunction, trials: usize, seed: u64) -> Result<GAxiomReport> {
    if trials == 0 {
        return Err(Error::Config("axiom check needs trials >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = g.dim();
    let mut report = GAxiomReport {
        subadditivity_worst: f64::INFINITY,
        homogeneity_worst: f64::INFINITY,
        monotonicity_worst: f64::INFINITY,
        violations: 0,
        pass: true,
    };
    let mut record = |slot: &mut f64, slack: f64, violations: &mut usize| {
        *slot = slot.min(slack);
        if slack < -PSD_TOL {
            *violations += 1;
        }
    };

    for _ in 0..trials {
        let a = random_symmetric(dim, &mut rng);
        let b = random_symmetric(dim, &mut rng);

        let sub = g.eval(&a)? + g.eval(&b)? - g.eval(&(&a + &b))?;
        record(&mut report.subadditivity_worst, sub, &mut report.violations);

        let lambda = rng.gen_range(0.0..4.0);
        let hom = -(g.eval(&(&a * lambda))? - lambda * g.eval(&a)?).abs();
        record(&mut report.homogeneity_worst, hom, &mut report.violations);

        // A >= A - w w^T in the PSD order
        let w = DMatrix::from_fn(dim, 1, |_, _| rng.gen_range(-1.5..1.5));
        let lower = &a - &w * w.transpose();
        let mono = g.eval(&a)? - g.eval(&lower)?;
        record(&mut report.monotonicity_worst, mono, &mut report.violations);
    }

    // Directed probes: for each eigen-direction v of each stored matrix,
    // compare G(0) against G(-v v^T); a negative eigenvalue makes this fail.
    for q in g.source().matrices() {
        let eig = q.clone().symmetric_eigen();
        for k in 0..dim {
            let v = eig.eigenvectors.column(k).into_owned();
            let lower = -(&v * v.transpose());
            let zero = DMatrix::zeros(dim, dim);
            let mono = g.eval(&zero)? - g.eval(&lower)?;
            record(&mut report.monotonicity_worst, mono, &mut report.violations);
        }
    }

    report.pass = report.violations == 0;
    Ok(report)
}

/// Closed-form second-moment function of a one-dimensional G-Brownian motion
/// sampled at a fixed tuple of times.
///
/// Expanding the quadratic form in independent increments kills every cross
/// term (increments have no mean-uncertainty), leaving one pure-square
/// coefficient per increment, maximized over the variance interval:
/// G_t(A) = sum_k delta_k * g_scalar(M_k) with M_k the trailing-block sum
/// of A from index k.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmSecondMoment {
    sigma: SigmaInterval,
    times: Vec<f64>,
}

impl GbmSecondMoment {
    pub fn new(sigma: SigmaInterval, times: &[f64]) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Domain("need at least one time".into()));
        }
        if times[0] <= 0.0 {
            return Err(Error::Domain("times must be positive".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("times must be strictly increasing".into()));
        }
        Ok(Self {
            sigma,
            times: times.to_vec(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.times.len()
    }

    /// G_t(A) by the nested-increment reduction.
    pub fn eval(&self, a: &DMatrix<f64>) -> Result<f64> {
        let n = self.times.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Dimension(format!(
                "argument is {}x{}, expected {n}x{n}",
                a.nrows(),
                a.ncols()
            )));
        }
        if symmetry_defect(a) > SYMMETRY_TOL {
            return Err(Error::Domain("argument must be symmetric".into()));
        }
        let mut total = 0.0;
        let mut prev_t = 0.0;
        for k in 0..n {
            let delta = self.times[k] - prev_t;
            prev_t = self.times[k];
            let mut block = 0.0;
            for i in k..n {
                for j in k..n {
                    block += a[(i, j)];
                }
            }
            total += delta * self.sigma.g_scalar(block);
        }
        Ok(total)
    }

    /// Materialize the same function as a finite covariance set:
    /// Theta = { sum_k delta_k s_k v_k v_k^T : s_k in {lo, hi} } with v_k the
    /// indicator of indices >= k. 2^n matrices.
    pub fn covariance_set(&self) -> Result<CovarianceSet> {
        let n = self.times.len();
        if n > 16 {
            return Err(Error::Budget("covariance set needs 2^n matrices".into()));
        }
        let mut deltas = Vec::with_capacity(n);
        let mut prev = 0.0;
        for &t in &self.times {
            deltas.push(t - prev);
            prev = t;
        }
        let choices = [self.sigma.sigma_lo_sq, self.sigma.sigma_hi_sq];
        let mut mats = Vec::with_capacity(1 << n);
        for mask in 0..(1usize << n) {
            let mut q = DMatrix::zeros(n, n);
            for (k, &delta) in deltas.iter().enumerate() {
                let s = choices[(mask >> k) & 1];
                let c = delta * s;
                for i in k..n {
                    for j in k..n {
                        q[(i, j)] += c;
                    }
                }
            }
            mats.push(q);
        }
        // dedup for the classical interval
        mats.dedup();
        CovarianceSet::new(n, mats)
    }

    pub fn to_gfunction(&self) -> Result<GFunction> {
        Ok(GFunction::new(self.covariance_set()?))
    }
}

/// Second-moment function of a 1-d G-Brownian motion at `times`.
pub fn gbm_second_moment(sigma: SigmaInterval, times: &[f64]) -> Result<GbmSecondMoment> {
    GbmSecondMoment::new(sigma, times)
}

/// A finite family of second-moment functions keyed by sorted time tuples.
#[derive(Debug, Clone, Default)]
pub struct GFamily {
    entries: Vec<(Vec<f64>, GFunction)>,
}

const TIME_KEY_TOL: f64 = 1e-12;

fn times_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= TIME_KEY_TOL)
}

/// A located consistency violation.
#[derive(Debug, Clone)]
pub struct ConsistencyViolation {
    pub sub_times: Vec<f64>,
    pub super_times: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConsistencyReport {
    pub pairs_checked: usize,
    pub violations: Vec<ConsistencyViolation>,
}

impl ConsistencyReport {
    pub fn consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

impl GFamily {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, times: &[f64], g: GFunction) -> Result<()> {
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "family keys must be strictly increasing time tuples".into(),
            ));
        }
        if g.dim() != times.len() {
            return Err(Error::Dimension(format!(
                "G has dimension {}, key has {} times",
                g.dim(),
                times.len()
            )));
        }
        if self.get(times).is_some() {
            return Err(Error::Domain("duplicate time tuple".into()));
        }
        self.entries.push((times.to_vec(), g));
        Ok(())
    }

    pub fn get(&self, times: &[f64]) -> Option<&GFunction> {
        self.entries
            .iter()
            .find(|(k, _)| times_match(k, times))
            .map(|(_, g)| g)
    }

    pub fn keys(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.iter().map(|(k, _)| k.as_slice())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks every stored pair (t_sub, t_super) with t_sub a sub-tuple of
    /// t_super: G_super applied to the zero-padded embedding of A must match
    /// G_sub(A). Padding positions follow the sub-tuple's placement inside
    /// the super-tuple, which covers projection and permutation consistency
    /// together. Verified on a symmetric basis plus randomized arguments.
    pub fn validate_consistency(&self, tol: f64) -> Result<ConsistencyReport> {
        let mut report = ConsistencyReport::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0x9f2c);
        for (sub_key, sub_g) in &self.entries {
            for (super_key, super_g) in &self.entries {
                if sub_key.len() >= super_key.len() {
                    continue;
                }
                // positions of sub times inside the super tuple
                let positions: Option<Vec<usize>> = sub_key
                    .iter()
                    .map(|t| {
                        super_key
                            .iter()
                            .position(|s| (s - t).abs() <= TIME_KEY_TOL)
                    })
                    .collect();
                let Some(positions) = positions else {
                    continue;
                };
                report.pairs_checked += 1;
                let m = sub_key.len();
                let n = super_key.len();
                let mut args: Vec<DMatrix<f64>> = Vec::new();
                for i in 0..m {
                    for j in i..m {
                        let mut e = DMatrix::zeros(m, m);
                        e[(i, j)] = 1.0;
                        e[(j, i)] = 1.0;
                        args.push(e);
                    }
                }
                for _ in 0..20 {
                    args.push(random_symmetric(m, &mut rng));
                }
                for a in &args {
                    let mut padded = DMatrix::zeros(n, n);
                    for i in 0..m {
                        for j in 0..m {
                            padded[(positions[i], positions[j])] = a[(i, j)];
                        }
                    }
                    let lhs = super_g.eval(&padded)?;
                    let rhs = sub_g.eval(a)?;
                    if (lhs - rhs).abs() > tol {
                        report.violations.push(ConsistencyViolation {
                            sub_times: sub_key.clone(),
                            super_times: super_key.clone(),
                            lhs,
                            rhs,
                        });
                        break;
                    }
                }
            }
        }
        Ok(report)
    }
}

/// Builds the GBM-derived family over every nonempty sub-tuple of `times`.
pub fn gbm_gfamily(sigma: SigmaInterval, times: &[f64]) -> Result<GFamily> {
    let n = times.len();
    if n == 0 || n > 12 {
        return Err(Error::Domain("need 1..=12 times".into()));
    }
    let mut fam = GFamily::new();
    for mask in 1..(1usize << n) {
        let sub: Vec<f64> = (0..n)
            .filter(|i| (mask >> i) & 1 == 1)
            .map(|i| times[i])
            .collect();
        let g = gbm_second_moment(sigma, &sub)?.to_gfunction()?;
        fam.insert(&sub, g)?;
    }
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn interval() -> SigmaInterval {
        SigmaInterval::new(0.25, 1.0).unwrap()
    }

    #[test]
    fn scalar_g_matches_barenblatt_form() {
        let g = GFunction::new(interval().to_covariance_set());
        for alpha in [-3.0, -1.0, -0.2, 0.0, 0.7, 2.5] {
            let a = DMatrix::from_element(1, 1, alpha);
            let expected = 0.5 * (1.0 * alpha.max(0.0) + 0.25 * alpha.min(0.0));
            assert_relative_eq!(g.eval(&a).unwrap(), expected, epsilon = 1e-14);
            assert_relative_eq!(
                interval().g_scalar(alpha),
                expected,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn singleton_theta_is_classical() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let g = GFunction::new(CovarianceSet::new(2, vec![q.clone()]).unwrap());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 0.4]);
        assert_relative_eq!(g.eval(&a).unwrap(), 0.5 * (&a * &q).trace(), epsilon = 1e-14);
        let zero = DMatrix::zeros(2, 2);
        assert_eq!(g.eval(&zero).unwrap(), 0.0);
    }

    #[test]
    fn asymmetric_argument_rejected() {
        let g = GFunction::new(interval().to_covariance_set());
        let q = DMatrix::from_element(1, 1, 1.0);
        assert!(g.eval(&q).is_ok());
        let g2 = GFunction::new(
            CovarianceSet::new(2, vec![DMatrix::identity(2, 2)]).unwrap(),
        );
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.5, 1.0]);
        assert!(matches!(g2.eval(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn covariance_set_validation() {
        // asymmetric
        assert!(CovarianceSet::from_rows(
            2,
            vec![vec![vec![1.0, 0.5], vec![-0.5, 1.0]]]
        )
        .is_err());
        // indefinite
        assert!(CovarianceSet::from_rows(
            2,
            vec![vec![vec![1.0, 0.0], vec![0.0, -0.5]]]
        )
        .is_err());
        // slightly negative eigenvalue within tolerance passes
        assert!(CovarianceSet::from_rows(
            1,
            vec![vec![vec![-0.5e-10]]]
        )
        .is_ok());
    }

    #[test]
    fn axioms_pass_for_valid_g_and_scaling_is_exact() {
        for dim in [1usize, 2, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
            let mats: Vec<DMatrix<f64>> = (0..3)
                .map(|_| {
                    let b = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
                    &b * b.transpose()
                })
                .collect();
            let g = GFunction::new(CovarianceSet::new(dim, mats).unwrap());
            let report = check_g_axioms(&g, 200, 42).unwrap();
            assert!(report.pass, "axioms failed: {report:?}");
            assert!(report.subadditivity_worst >= -PSD_TOL);
            assert!(report.monotonicity_worst >= -PSD_TOL);

            // lambda = 2 scaling exact to 1e-12
            let a = random_symmetric(dim, &mut rng);
            let lhs = g.eval(&(&a * 2.0)).unwrap();
            assert_relative_eq!(lhs, 2.0 * g.eval(&a).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn injected_non_psd_matrix_breaks_monotonicity() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let set = CovarianceSet::from_matrices_unchecked(2, vec![bad.clone()]);
        let g = GFunction::new(set);

        // explicit violating pair from the eigen-decomposition:
        // 0 >= -v v^T but G(0) < G(-v v^T) for the negative eigen-direction
        let v = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let lower = -(&v * v.transpose());
        let zero = DMatrix::zeros(2, 2);
        assert!(zero[(0, 0)] >= lower[(0, 0)]);
        assert!(g.eval(&zero).unwrap() < g.eval(&lower).unwrap());

        let report = check_g_axioms(&g, 100, 1).unwrap();
        assert!(!report.pass);
        assert!(report.monotonicity_worst < -PSD_TOL);
    }

    #[test]
    fn g_eval_is_convex_and_homogeneous_on_random_combinations() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mats: Vec<DMatrix<f64>> = (0..4)
            .map(|_| {
                let b = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
                &b * b.transpose()
            })
            .collect();
        let g = GFunction::new(CovarianceSet::new(2, mats).unwrap());
        for _ in 0..200 {
            let a = random_symmetric(2, &mut rng);
            let b = random_symmetric(2, &mut rng);
            let lam: f64 = rng.gen_range(0.0..1.0);
            let mix = &a * lam + &b * (1.0 - lam);
            let lhs = g.eval(&mix).unwrap();
            let rhs = lam * g.eval(&a).unwrap() + (1.0 - lam) * g.eval(&b).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn gbm_second_moment_examples() {
        let sigma = interval();
        // n = 1, A = [1]: G = sigma_hi^2 t / 2
        let g1 = gbm_second_moment(sigma, &[0.7]).unwrap();
        let a = DMatrix::from_element(1, 1, 1.0);
        assert_relative_eq!(g1.eval(&a).unwrap(), 0.5 * 1.0 * 0.7, epsilon = 1e-14);

        // n = 2, A = I, classical sigma = 1, t = (1,2): (1 + 2)/2 = 1.5
        let classical = SigmaInterval::classical(1.0).unwrap();
        let g2 = gbm_second_moment(classical, &[1.0, 2.0]).unwrap();
        assert_relative_eq!(
            g2.eval(&DMatrix::identity(2, 2)).unwrap(),
            1.5,
            epsilon = 1e-14
        );

        // n = 2, A = [[0, 1/2], [1/2, 0]]: E[B1 B2] = sigma_hi^2 t1, G = t1/2
        let g2 = gbm_second_moment(sigma, &[1.0, 2.0]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert_relative_eq!(g2.eval(&a).unwrap(), 0.5 * 1.0 * 1.0, epsilon = 1e-14);

        // unsorted times rejected
        assert!(gbm_second_moment(sigma, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn materialized_covariance_set_matches_closed_form() {
        let sigma = interval();
        let gm = gbm_second_moment(sigma, &[0.5, 1.25, 3.0]).unwrap();
        let g = gm.to_gfunction().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let a = random_symmetric(3, &mut rng);
            assert_relative_eq!(
                g.eval(&a).unwrap(),
                gm.eval(&a).unwrap(),
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn gbm_family_is_consistent_and_perturbation_is_located() {
        let fam = gbm_gfamily(interval(), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fam.len(), 7);
        let report = fam.validate_consistency(1e-10).unwrap();
        assert!(report.pairs_checked > 0);
        assert!(report.consistent(), "violations: {:?}", report.violations);

        // singleton family is vacuously consistent
        let mut single = GFamily::new();
        single
            .insert(&[1.0], gbm_second_moment(interval(), &[1.0]).unwrap().to_gfunction().unwrap())
            .unwrap();
        let report = single.validate_consistency(1e-10).unwrap();
        assert_eq!(report.pairs_checked, 0);
        assert!(report.consistent());

        // perturbed entry is located
        let mut broken = GFamily::new();
        for key in [vec![1.0], vec![1.0, 2.0]] {
            let g = gbm_second_moment(interval(), &key)
                .unwrap()
                .to_gfunction()
                .unwrap();
            if key.len() == 1 {
                let mut mats = g.source().matrices().to_vec();
                mats[0][(0, 0)] += 0.05;
                broken
                    .insert(&key, GFunction::new(CovarianceSet::new(1, mats).unwrap()))
                    .unwrap();
            } else {
                broken.insert(&key, g).unwrap();
            }
        }
        let report = broken.validate_consistency(1e-10).unwrap();
        assert!(!report.consistent());
        assert!(times_match(&report.violations[0].sub_times, &[1.0]));
    }

    #[test]
    fn json_round_trip() {
        let set = interval().to_covariance_set();
        let text = set.to_json();
        assert!(text.contains("\"dim\":1"));
        let back = CovarianceSet::from_json(&text).unwrap();
        assert_eq!(back, set);
        let si: SigmaInterval =
            serde_json::from_str("{\"sigma_lo_sq\":0.25,\"sigma_hi_sq\":1.0}").unwrap();
        assert_eq!(si, interval());
    }
}
