//! Named test-function catalogues.
//!
//! Experiment configs refer to test functions by name and parameters; no
//! executable code crosses the config boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-argument catalogue functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestFn1 {
    /// x^n
    Power { n: u32 },
    /// |x|
    Abs,
    /// max(x - strike, 0)
    Call { strike: f64 },
    /// max(strike - x, 0)
    Put { strike: f64 },
    /// (1 + tanh((x - center)/width)) / 2, a smoothed step
    IndicatorSmoothed { center: f64, width: f64 },
    /// piecewise-linear through `points`, extended linearly beyond the ends
    PiecewiseLinear { points: Vec<(f64, f64)> },
    /// -f(x)
    Neg { of: Box<TestFn1> },
    /// factor * f(x)
    Scale { factor: f64, of: Box<TestFn1> },
    /// clamp(f(x), lo, hi)
    Clip { lo: f64, hi: f64, of: Box<TestFn1> },
}

impl TestFn1 {
    pub fn validate(&self) -> Result<()> {
        match self {
            TestFn1::Power { .. } | TestFn1::Abs | TestFn1::Call { .. } | TestFn1::Put { .. } => {
                Ok(())
            }
            TestFn1::IndicatorSmoothed { width, .. } => {
                if *width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config("indicator-smoothed needs width > 0".into()))
                }
            }
            TestFn1::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return Err(Error::Config("piecewise-linear needs >= 2 points".into()));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::Config(
                        "piecewise-linear breakpoints must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            TestFn1::Neg { of } => of.validate(),
            TestFn1::Scale { of, .. } => of.validate(),
            TestFn1::Clip { lo, hi, of } => {
                if lo > hi {
                    return Err(Error::Config("clip needs lo <= hi".into()));
                }
                of.validate()
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFn1::Power { n } => x.powi(*n as i32),
            TestFn1::Abs => x.abs(),
            TestFn1::Call { strike } => (x - strike).max(0.0),
            TestFn1::Put { strike } => (strike - x).max(0.0),
            TestFn1::IndicatorSmoothed { center, width } => {
                0.5 * (1.0 + ((x - center) / width).tanh())
            }
            TestFn1::PiecewiseLinear { points } => {
                let n = points.len();
                let seg = |a: (f64, f64), b: (f64, f64)| {
                    let slope = (b.1 - a.1) / (b.0 - a.0);
                    a.1 + slope * (x - a.0)
                };
                if x <= points[0].0 {
                    return seg(points[0], points[1]);
                }
                if x >= points[n - 1].0 {
                    return seg(points[n - 2], points[n - 1]);
                }
                let idx = points.partition_point(|p| p.0 <= x);
                seg(points[idx - 1], points[idx])
            }
            TestFn1::Neg { of } => -of.eval(x),
            TestFn1::Scale { factor, of } => factor * of.eval(x),
            TestFn1::Clip { lo, hi, of } => of.eval(x).clamp(*lo, *hi),
        }
    }

    pub fn neg(self) -> TestFn1 {
        TestFn1::Neg { of: Box::new(self) }
    }
}

/// Multi-argument catalogue functions for finite-dimensional distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSpec {
    /// <A x, x> for symmetric A
    QuadraticForm { matrix: Vec<Vec<f64>> },
    /// f(w . x) for a one-argument catalogue function f
    LinearImage { weights: Vec<f64>, of: TestFn1 },
    /// |x2 - x1| 1_{x1 > 0} - |x1| 1_{x1 <= 0}
    IndicatorWitness,
    /// tanh(x1/width) |x2 - x1|
    SignedIncrementAbs { width: f64 },
    /// tanh(x1/width) (x2 - x1)^2
    SignedIncrementSquare { width: f64 },
}

impl PhiSpec {
    pub fn arity(&self) -> usize {
        match self {
            PhiSpec::QuadraticForm { matrix } => matrix.len(),
            PhiSpec::LinearImage { weights, .. } => weights.len(),
            PhiSpec::IndicatorWitness
            | PhiSpec::SignedIncrementAbs { .. }
            | PhiSpec::SignedIncrementSquare { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PhiSpec::QuadraticForm { matrix } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Config("quadratic form needs a square matrix".into()));
                }
                for i in 0..n {
                    for j in 0..n {
                        if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 {
                            return Err(Error::Config("quadratic form must be symmetric".into()));
                        }
                    }
                }
                Ok(())
            }
            PhiSpec::LinearImage { weights, of } => {
                if weights.is_empty() {
                    return Err(Error::Config("linear image needs weights".into()));
                }
                of.validate()
            }
            PhiSpec::IndicatorWitness => Ok(()),
            PhiSpec::SignedIncrementAbs { width } | PhiSpec::SignedIncrementSquare { width } => {
                if *width > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config("signed increment needs width > 0".into()))
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity());
        match self {
            PhiSpec::QuadraticForm { matrix } => {
                let mut total = 0.0;
                for (i, row) in matrix.iter().enumerate() {
                    for (j, a) in row.iter().enumerate() {
                        total += a * x[i] * x[j];
                    }
                }
                total
            }
            PhiSpec::LinearImage { weights, of } => {
                let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
                of.eval(z)
            }
            PhiSpec::IndicatorWitness => {
                if x[0] > 0.0 {
                    (x[1] - x[0]).abs()
                } else {
                    -x[0].abs()
                }
            }
            PhiSpec::SignedIncrementAbs { width } => (x[0] / width).tanh() * (x[1] - x[0]).abs(),
            PhiSpec::SignedIncrementSquare { width } => {
                let d = x[1] - x[0];
                (x[0] / width).tanh() * d * d
            }
        }
    }

    /// phi composed with a coordinate permutation:
    /// result(x) = phi(x[perm[0]], ..., x[perm[n-1]]).
    pub fn eval_permuted(&self, x: &[f64], perm: &[usize]) -> f64 {
        let mut reordered = vec![0.0; x.len()];
        for (slot, &src) in perm.iter().enumerate() {
            reordered[slot] = x[src];
        }
        self.eval(&reordered)
    }
}
