//! Finite discrete probability measures over a point pool, and the exact
//! total variation, squared Hellinger and Kullback–Leibler divergences
//! between them.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ weights = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Probability measure with finite support. `support[k]` is an index into a
/// shared point pool (usually a [`PointSet`](crate::metric::PointSet)) and
/// carries mass `weights[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    support: Vec<usize>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;
    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.support, raw.weights)
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure {
            support: m.support,
            weights: m.weights,
        }
    }
}

impl DiscreteMeasure {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: support.len(),
                got: weights.len(),
            });
        }
        if support.is_empty() {
            return Err(Error::EmptyInput("measure has empty support".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invariant(
                "measure weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Invariant(format!(
                "measure weights sum to {total}, not 1"
            )));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invariant(
                "measure support contains duplicate indices".into(),
            ));
        }
        Ok(Self { support, weights })
    }

    /// Normalise nonnegative masses to a probability measure.
    pub fn from_masses(support: Vec<usize>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Invariant(
                "masses must have a positive finite total".into(),
            ));
        }
        let weights = masses.into_iter().map(|m| m / total).collect();
        Self::new(support, weights)
    }

    pub fn uniform(support: Vec<usize>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptyInput("measure has empty support".into()));
        }
        let w = 1.0 / support.len() as f64;
        let weights = vec![w; support.len()];
        Self::new(support, weights)
    }

    pub fn point_mass(index: usize) -> Self {
        Self {
            support: vec![index],
            weights: vec![1.0],
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// Mass of pool index `i` (0 outside the support).
    pub fn weight_of(&self, i: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == i)
            .map_or(0.0, |k| self.weights[k])
    }

    pub fn contains(&self, i: usize) -> bool {
        self.support.contains(&i)
    }

    pub fn max_index(&self) -> usize {
        self.support.iter().copied().max().unwrap_or(0)
    }

    /// Weights laid out densely over pool indices `0..len`.
    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, w) in self.iter() {
            out[i] = w;
        }
        out
    }

    /// Reusable sampler over pool indices.
    pub fn sampler(&self) -> MeasureSampler<'_> {
        let dist =
            WeightedIndex::new(&self.weights).expect("validated weights have positive total");
        MeasureSampler {
            measure: self,
            dist,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler().sample(rng)
    }
}

pub struct MeasureSampler<'a> {
    measure: &'a DiscreteMeasure,
    dist: WeightedIndex<f64>,
}

impl MeasureSampler<'_> {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.measure.support[self.dist.sample(rng)]
    }
}

/// Pairs `(p_i, q_i)` over the union of both supports, ordered by pool index.
fn aligned(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Vec<(f64, f64)> {
    let mut map: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for (i, w) in p.iter() {
        map.entry(i).or_default().0 = w;
    }
    for (i, w) in q.iter() {
        map.entry(i).or_default().1 = w;
    }
    map.into_values().collect()
}

/// Total variation distance `½ Σ |p_i − q_i|`.
pub fn tv(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    0.5 * aligned(p, q)
        .iter()
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Squared Hellinger distance `Σ (√p_i − √q_i)²`, in `[0, 2]`.
pub fn hellinger_sq(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    aligned(p, q)
        .iter()
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum()
}

/// Kullback–Leibler divergence `Σ_{p_i>0} p_i ln(p_i / q_i)`; `+∞` when `P`
/// is not absolutely continuous with respect to `Q`.
pub fn kl(p: &DiscreteMeasure, q: &DiscreteMeasure) -> f64 {
    let mut total = 0.0;
    for (a, b) in aligned(p, q) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            total += a * (a / b).ln();
        }
    }
    total.max(0.0)
}
