//! Finite, constructive sublinear expectation spaces.
//!
//! A sublinear expectation is represented by a finite family of discrete
//! probability measures on a shared finite sample space; evaluation is the
//! maximum of the linear expectations over the family. Independence is
//! directional and realized by nesting: the inner maximization runs over the
//! second argument's family first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for weight normalization; inputs outside it are rejected,
/// never renormalized.
pub const WEIGHT_TOL: f64 = 1e-12;

/// A finite sample space. Atoms are opaque and identified by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpace {
    atoms: usize,
}

impl SampleSpace {
    pub fn new(atoms: usize) -> Result<Self> {
        if atoms == 0 {
            return Err(Error::Domain("sample space needs at least one atom".into()));
        }
        Ok(Self { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A discrete probability measure: one nonnegative weight per atom,
/// summing to one within [`WEIGHT_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("measure needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Domain(format!(
                "weights sum to {total}, outside 1 +/- {WEIGHT_TOL}"
            )));
        }
        Ok(Self { weights })
    }

    /// Point mass at one atom.
    pub fn dirac(atoms: usize, at: usize) -> Result<Self> {
        if at >= atoms {
            return Err(Error::Dimension(format!("atom {at} out of range {atoms}")));
        }
        let mut weights = vec![0.0; atoms];
        weights[at] = 1.0;
        Self::new(weights)
    }

    /// Uniform measure.
    pub fn uniform(atoms: usize) -> Result<Self> {
        Self::new(vec![1.0 / atoms as f64; atoms])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Classical linear expectation E_P[X] = sum_i w_i x_i.
    pub fn expect(&self, x: &RandomVariable) -> Result<f64> {
        if x.len() != self.len() {
            return Err(Error::Dimension(format!(
                "random variable has {} values, measure has {} weights",
                x.len(),
                self.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(x.values())
            .map(|(w, v)| w * v)
            .sum())
    }

    /// Probability of an event.
    pub fn probability(&self, a: &Event) -> Result<f64> {
        if a.len() != self.len() {
            return Err(Error::Dimension(format!(
                "event has {} indicators, measure has {} weights",
                a.len(),
                self.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(a.indicator())
            .filter(|(_, &b)| b)
            .map(|(w, _)| w)
            .sum())
    }
}

/// A real random variable: one finite value per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("random variable values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }
}

/// An event as an indicator over atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    indicator: Vec<bool>,
}

impl Event {
    pub fn new(indicator: Vec<bool>) -> Self {
        Self { indicator }
    }

    pub fn indicator(&self) -> &[bool] {
        &self.indicator
    }

    pub fn len(&self) -> usize {
        self.indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicator.is_empty()
    }
}

/// Result of a sublinear evaluation: the maximal linear expectation and the
/// index of a measure attaining it (lowest index on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub argmax: usize,
}

/// A nonempty finite family of measures on a shared sample space; the
/// concrete representation of a sublinear expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFamily {
    space: SampleSpace,
    measures: Vec<DiscreteMeasure>,
}

/// JSON shape of a measure family. Field names are part of the interface.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureFamilyJson {
    atoms: usize,
    measures: Vec<Vec<f64>>,
}

impl MeasureFamily {
    pub fn new(space: SampleSpace, measures: Vec<DiscreteMeasure>) -> Result<Self> {
        if measures.is_empty() {
            return Err(Error::Domain("measure family must be nonempty".into()));
        }
        for m in &measures {
            if m.len() != space.len() {
                return Err(Error::Dimension(format!(
                    "measure has {} weights, space has {} atoms",
                    m.len(),
                    space.len()
                )));
            }
        }
        Ok(Self { space, measures })
    }

    /// Construct from raw weight rows.
    pub fn from_weights(atoms: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        let space = SampleSpace::new(atoms)?;
        let measures = rows
            .into_iter()
            .map(DiscreteMeasure::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, measures)
    }

    /// Bypass validation. Exists only so negative-control fixtures can build
    /// deliberately broken families.
    #[doc(hidden)]
    pub fn from_weights_unchecked(atoms: usize, rows: Vec<Vec<f64>>) -> Self {
        Self {
            space: SampleSpace { atoms },
            measures: rows
                .into_iter()
                .map(|weights| DiscreteMeasure { weights })
                .collect(),
        }
    }

    pub fn space(&self) -> SampleSpace {
        self.space
    }

    pub fn measures(&self) -> &[DiscreteMeasure] {
        &self.measures
    }

    pub fn atoms(&self) -> usize {
        self.space.len()
    }

    /// Sublinear expectation: max over the family of linear expectations,
    /// with the attaining index (ties broken by lowest index).
    pub fn expect(&self, x: &RandomVariable) -> Result<Evaluation> {
        let mut best = Evaluation {
            value: f64::NEG_INFINITY,
            argmax: 0,
        };
        for (i, m) in self.measures.iter().enumerate() {
            let v = m.expect(x)?;
            if v > best.value {
                best = Evaluation { value: v, argmax: i };
            }
        }
        Ok(best)
    }

    /// Shorthand for the value of [`MeasureFamily::expect`].
    pub fn expect_value(&self, x: &RandomVariable) -> Result<f64> {
        self.expect(x).map(|e| e.value)
    }

    /// Lp norm ||X||_p = (E[|X|^p])^(1/p), p >= 1.
    pub fn lp_norm(&self, x: &RandomVariable, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("lp norm requires p >= 1, got {p}")));
        }
        let xp = x.map(|v| v.abs().powf(p))?;
        Ok(self.expect_value(&xp)?.powf(1.0 / p))
    }

    /// Capacity of an event: max over the family of its probability.
    pub fn capacity(&self, a: &Event) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for m in &self.measures {
            best = best.max(m.probability(a)?);
        }
        Ok(best)
    }
}

impl MeasureFamily {
    pub fn to_json(&self) -> String {
        let doc = MeasureFamilyJson {
            atoms: self.atoms(),
            measures: self
                .measures
                .iter()
                .map(|m| m.weights().to_vec())
                .collect(),
        };
        serde_json::to_string(&doc).expect("measure family serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeasureFamilyJson =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_weights(doc.atoms, doc.measures)
    }
}

/// E[phi(X, Y)] with Y independent of X, evaluated by nesting: the inner
/// maximization runs over `fy` at each frozen value of X, the outer over
/// `fx`. Independence is directional; swapping the arguments changes the
/// value in general.
pub fn independent_pair_expect(
    fx: &MeasureFamily,
    x: &RandomVariable,
    fy: &MeasureFamily,
    y: &RandomVariable,
    phi: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if x.len() != fx.atoms() {
        return Err(Error::Dimension("X does not match its family".into()));
    }
    if y.len() != fy.atoms() {
        return Err(Error::Dimension("Y does not match its family".into()));
    }
    let mut inner = Vec::with_capacity(x.len());
    for &a in x.values() {
        let z = RandomVariable::new(y.values().iter().map(|&b| phi(a, b)).collect())?;
        inner.push(fy.expect_value(&z)?);
    }
    fx.expect_value(&RandomVariable::new(inner)?)
}

/// Outcome of a domination check.
#[derive(Debug, Clone)]
pub struct DominationReport {
    pub dominated: bool,
    /// Set when a randomized trial found a violating pair (X, Y).
    pub counterexample: Option<(RandomVariable, RandomVariable)>,
    /// True when the subset criterion decided the answer without sampling.
    pub by_subset: bool,
}

/// Checks whether `f1` is dominated by `f2`:
/// E1[X] - E1[Y] <= E2[X - Y] for all X, Y.
///
/// If every measure of `f1` appears in `f2` (within [`WEIGHT_TOL`]) the
/// answer is exactly `true`. Otherwise `trials` randomized pairs are tested;
/// a violation yields `false` with the counterexample.
pub fn is_dominated(
    f1: &MeasureFamily,
    f2: &MeasureFamily,
    trials: usize,
    rng: &mut impl rand::Rng,
) -> Result<DominationReport> {
    if f1.atoms() != f2.atoms() {
        return Err(Error::Dimension("families must share the sample space".into()));
    }
    let subset = f1.measures().iter().all(|m1| {
        f2.measures().iter().any(|m2| {
            m1.weights()
                .iter()
                .zip(m2.weights())
                .all(|(a, b)| (a - b).abs() <= WEIGHT_TOL)
        })
    });
    if subset {
        return Ok(DominationReport {
            dominated: true,
            counterexample: None,
            by_subset: true,
        });
    }
    let n = f1.atoms();
    for _ in 0..trials {
        let x = RandomVariable::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let y = RandomVariable::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let diff = RandomVariable::new(
            x.values()
                .iter()
                .zip(y.values())
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        let lhs = f1.expect_value(&x)? - f1.expect_value(&y)?;
        let rhs = f2.expect_value(&diff)?;
        if lhs > rhs + 1e-12 {
            return Ok(DominationReport {
                dominated: false,
                counterexample: Some((x, y)),
                by_subset: false,
            });
        }
    }
    Ok(DominationReport {
        dominated: true,
        counterexample: None,
        by_subset: false,
    })
}
