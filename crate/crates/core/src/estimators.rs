//! Truncated Nadaraya–Watson regression with the indicator kernel
//! `K = 1_[0,1)`, its deterministic tuning rules, the kernel plug-in
//! classifier, and the Bayes reference classifier.
//!
//! Kernel membership is strict everywhere: `X_j` is a neighbour of `x` iff
//! `ρ(x, X_j) < h`.

use serde::Serialize;

use crate::entropy::EntropyEnvelope;
use crate::error::{Error, Result};
use crate::metric::{distance, MetricSpec, SampledFunction};

/// Bandwidth `h = (d ln n)^{-1/γ}`.
pub fn select_bandwidth(n: usize, gamma: f64, d: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "bandwidth rule needs n >= 2 (log n > 0), got n = {n}"
        )));
    }
    bandwidth_for_log_n((n as f64).ln(), gamma, d)
}

/// Bandwidth rule written in terms of `ln n` directly.
pub fn bandwidth_for_log_n(log_n: f64, gamma: f64, d: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(d > 0.0) {
        return Err(Error::Domain(format!(
            "gamma and d must be positive, got gamma = {gamma}, d = {d}"
        )));
    }
    if !(log_n > 0.0) {
        return Err(Error::Domain(format!(
            "log n must be positive, got {log_n}"
        )));
    }
    Ok((d * log_n).powf(-1.0 / gamma))
}

/// Ridge `δ_n = n^{-η}` for `η ∈ (0, 1/2)`.
pub fn select_ridge(n: usize, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if n < 1 {
        return Err(Error::Domain("ridge rule needs n >= 1".into()));
    }
    Ok((n as f64).powf(-eta))
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "eta must lie in the open interval (0, 1/2), got {eta}"
        )))
    }
}

/// Bandwidth, ridge and the inputs of the selectors that produced them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegressionTuning {
    pub h: f64,
    pub delta_n: f64,
    pub eta: f64,
    pub d: f64,
    pub gamma: f64,
}

impl RegressionTuning {
    /// Deterministic selection `h = (d ln n)^{-1/γ}`, `δ_n = n^{-η}`.
    pub fn for_sample_size(n: usize, gamma: f64, d: f64, eta: f64) -> Result<Self> {
        Ok(Self {
            h: select_bandwidth(n, gamma, d)?,
            delta_n: select_ridge(n, eta)?,
            eta,
            d,
            gamma,
        })
    }

    /// Explicit bandwidth and ridge; `d` and `gamma` are recorded as NaN.
    pub fn manual(h: f64, delta_n: f64) -> Result<Self> {
        let t = Self {
            h,
            delta_n,
            eta: f64::NAN,
            d: f64::NAN,
            gamma: f64::NAN,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::Domain(format!(
                "bandwidth must be positive, got {}",
                self.h
            )));
        }
        if !(self.delta_n > 0.0 && self.delta_n <= 1.0) {
            return Err(Error::Domain(format!(
                "ridge must lie in (0, 1], got {}",
                self.delta_n
            )));
        }
        if !self.eta.is_nan() {
            check_eta(self.eta)?;
        }
        Ok(())
    }

    /// Largest admissible `d` against an entropy envelope:
    /// `η / (c_high 4^γ)`.
    pub fn d_upper(eta: f64, env: &EntropyEnvelope) -> f64 {
        eta / (env.c_high * 4f64.powf(env.gamma))
    }

    /// Describes the violation when `d` lies outside `(0, η c_high^{-1} 4^{-γ})`.
    /// The tuning stays usable either way; the envelope is usually estimated.
    pub fn domain_violation(&self, env: &EntropyEnvelope) -> Option<String> {
        let upper = Self::d_upper(self.eta, env);
        (!(self.d < upper)).then(|| {
            format!(
                "d = {} is outside the admissible range (0, {upper:.6}) implied by eta = {} and the envelope (c_high = {}, gamma = {})",
                self.d, self.eta, env.c_high, env.gamma
            )
        })
    }
}

/// Output of the truncated Nadaraya–Watson estimator at one query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NwEstimate {
    pub estimate: f64,
    /// `B̂(x)`: fraction of training points in the open `h`-ball.
    pub b_hat: f64,
    pub neighbors: usize,
}

/// Estimator from the ball statistics: `in_ball` of the `n` training points
/// lie in the open `h`-ball and their responses average to `in_ball_mean`.
///
/// Returns the in-ball average when `B̂ = in_ball / n > δ_n`, and 0 otherwise.
/// The in-ball average equals `Â / B̂`.
pub fn nw_from_counts(in_ball: usize, in_ball_mean: f64, n: usize, delta_n: f64) -> NwEstimate {
    let b_hat = if n == 0 {
        0.0
    } else {
        in_ball as f64 / n as f64
    };
    NwEstimate {
        estimate: if b_hat > delta_n { in_ball_mean } else { 0.0 },
        b_hat,
        neighbors: in_ball,
    }
}

/// Mean of `k` values given through their offsets from `shift`:
/// `shift + Σ (y − shift) / k`. Constant responses equal to `shift` are
/// reproduced exactly.
pub fn shifted_mean(shift: f64, offset_sum: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        shift + offset_sum / k as f64
    }
}

/// Estimator from the distances `ρ(x, X_j)` and responses `Y_j`.
pub fn nw_from_distances(dists: &[f64], ys: &[f64], h: f64, delta_n: f64) -> NwEstimate {
    let mut in_ball = 0;
    let mut sum = 0.0;
    let mut common = None;
    let mut constant = true;
    for (d, &y) in dists.iter().zip(ys) {
        if *d < h {
            in_ball += 1;
            sum += y;
            constant &= *common.get_or_insert(y) == y;
        }
    }
    // Σy/k can drift by an ulp when all responses coincide.
    let mean = match common {
        None => 0.0,
        Some(y) if constant => y,
        Some(_) => sum / in_ball as f64,
    };
    nw_from_counts(in_ball, mean, dists.len(), delta_n)
}

/// Truncated Nadaraya–Watson estimate at `x`.
pub fn nw_estimate(
    train: &[(SampledFunction, f64)],
    x: &SampledFunction,
    tuning: &RegressionTuning,
    metric: MetricSpec,
) -> Result<NwEstimate> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training sample is empty".into()));
    }
    let dists = train
        .iter()
        .map(|(xj, _)| distance(x, xj, metric))
        .collect::<Result<Vec<f64>>>()?;
    let ys: Vec<f64> = train.iter().map(|(_, y)| *y).collect();
    Ok(nw_from_distances(&dists, &ys, tuning.h, tuning.delta_n))
}

/// Decision of the plug-in classifier with its two kernel estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PluginDecision {
    pub label: u8,
    pub p_hat_x: f64,
    pub p_hat_y: f64,
}

/// Plug-in decision from ball counts per group: `in0` of the `n0` group-0
/// points and `in1` of the `n1` group-1 points lie in the open `h`-ball.
/// An empty group contributes an estimate of 0. Ties go to group 0.
pub fn plugin_from_counts(in0: usize, n0: usize, in1: usize, n1: usize) -> PluginDecision {
    let p_hat_x = if n0 == 0 { 0.0 } else { in0 as f64 / n0 as f64 };
    let p_hat_y = if n1 == 0 { 0.0 } else { in1 as f64 / n1 as f64 };
    // Compare the cross-multiplied counts so the decision depends only on the
    // sign of p̂_X − p̂_Y and not on rounding of the two quotients.
    let x_wins = match (n0, n1) {
        (0, 0) => true,
        (0, _) => in1 == 0,
        (_, 0) => true,
        _ => (in0 as u128) * (n1 as u128) >= (in1 as u128) * (n0 as u128),
    };
    PluginDecision {
        label: if x_wins { 0 } else { 1 },
        p_hat_x,
        p_hat_y,
    }
}

pub fn plugin_from_distances(dists: &[f64], labels: &[u8], h: f64) -> PluginDecision {
    let (mut in0, mut n0, mut in1, mut n1) = (0, 0, 0, 0);
    for (d, &w) in dists.iter().zip(labels) {
        let inside = usize::from(*d < h);
        if w == 0 {
            n0 += 1;
            in0 += inside;
        } else {
            n1 += 1;
            in1 += inside;
        }
    }
    plugin_from_counts(in0, n0, in1, n1)
}

/// Plug-in classifier: group 0 iff `p̂_X(z) >= p̂_Y(z)`.
pub fn plugin_classify(
    train: &[(SampledFunction, u8)],
    z: &SampledFunction,
    h: f64,
    metric: MetricSpec,
) -> Result<PluginDecision> {
    if train.is_empty() {
        return Err(Error::EmptyInput("training sample is empty".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    if let Some((_, w)) = train.iter().find(|(_, w)| *w > 1) {
        return Err(Error::Domain(format!("labels must be 0 or 1, got {w}")));
    }
    let dists = train
        .iter()
        .map(|(zj, _)| distance(z, zj, metric))
        .collect::<Result<Vec<f64>>>()?;
    let labels: Vec<u8> = train.iter().map(|(_, w)| *w).collect();
    Ok(plugin_from_distances(&dists, &labels, h))
}

/// Bayes rule: group 0 iff `p_X(z) >= 1/2`.
pub fn bayes_classify(p_x: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&p_x) {
        return Err(Error::Domain(format!(
            "p_X value must lie in [0, 1], got {p_x}"
        )));
    }
    Ok(if p_x >= 0.5 { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::PointSet;

    #[test]
    fn bandwidth_examples() {
        assert_eq!(bandwidth_for_log_n(8.0, 1.0, 0.5).unwrap(), 0.25);
        assert!((select_bandwidth(2981, 1.0, 0.5).unwrap() - 0.25).abs() < 1e-6);
        assert_eq!(bandwidth_for_log_n(1.0, 2.0, 1.0).unwrap(), 1.0);
        let hs: Vec<f64> = [2usize, 10, 100, 1000]
            .iter()
            .map(|&n| select_bandwidth(n, 1.5, 0.3).unwrap())
            .collect();
        assert!(hs.windows(2).all(|w| w[1] < w[0]));
        assert!(select_bandwidth(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn ridge_examples() {
        assert!((select_ridge(16, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(select_ridge(1, 0.3).unwrap(), 1.0);
        assert!(select_ridge(100, 0.3).unwrap() < select_ridge(10, 0.3).unwrap());
        let err = select_ridge(10, 0.7).unwrap_err();
        assert!(err.to_string().contains("(0, 1/2)"));
        assert!(select_ridge(10, 0.0).is_err());
    }

    #[test]
    fn nw_worked_example() {
        let e = nw_from_distances(&[0.5, 2.0], &[2.0, 4.0], 1.0, 0.1);
        assert_eq!(e.b_hat, 0.5);
        assert_eq!(e.estimate, 2.0);
    }

    #[test]
    fn constant_responses_are_reproduced_exactly() {
        let e = nw_from_distances(&[0.0; 3], &[0.7; 3], 1.0, 0.1);
        assert_eq!(e.estimate, 0.7);
    }

    #[test]
    fn nw_empty_ball_returns_zero() {
        let e = nw_from_distances(&[1.0, 3.0], &[5.0, 6.0], 1.0, 0.1);
        assert_eq!(e.b_hat, 0.0);
        assert_eq!(e.estimate, 0.0);
        // B̂ equal to the ridge is not enough.
        let e = nw_from_distances(&[0.0, 3.0], &[5.0, 6.0], 1.0, 0.5);
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn nw_on_curves_constant_average() {
        let ps = PointSet::constants(&[0.2, 0.2, 0.2], MetricSpec::Supremum).unwrap();
        let train: Vec<_> = ps.points().iter().map(|p| (p.clone(), 1.75)).collect();
        let t = RegressionTuning::manual(0.1, 0.5).unwrap();
        let e = nw_estimate(&train, ps.point(0), &t, MetricSpec::Supremum).unwrap();
        assert_eq!(e.estimate, 1.75);
        assert!(nw_estimate(&[], ps.point(0), &t, MetricSpec::Supremum).is_err());
    }

    #[test]
    fn plugin_examples() {
        // Tie goes to group 0.
        assert_eq!(plugin_from_distances(&[0.1, 0.1], &[0, 1], 1.0).label, 0);
        // All labels 1.
        let d = plugin_from_distances(&[0.1, 5.0], &[1, 1], 1.0);
        assert_eq!((d.label, d.p_hat_x, d.p_hat_y), (1, 0.0, 0.5));
        let d = plugin_from_distances(&[5.0, 5.0], &[1, 1], 1.0);
        assert_eq!(d.label, 0);
        // Three group-0 neighbours, one distant group-1 point.
        let d = plugin_from_distances(&[0.1, 0.2, 0.3, 2.0], &[0, 0, 0, 1], 1.0);
        assert_eq!((d.label, d.p_hat_x, d.p_hat_y), (0, 1.0, 0.0));
    }

    #[test]
    fn bayes_examples() {
        assert_eq!(bayes_classify(0.5).unwrap(), 0);
        assert_eq!(bayes_classify(1.0).unwrap(), 0);
        assert_eq!(bayes_classify(0.49).unwrap(), 1);
        assert!(bayes_classify(1.2).is_err());
    }

    #[test]
    fn domain_check_against_envelope() {
        let env = EntropyEnvelope {
            gamma: 1.0,
            c_low: 0.5,
            c_high: 1.0,
            s0: 0.5,
            fit_residual: 0.0,
        };
        let ok = RegressionTuning::for_sample_size(100, 1.0, 0.05, 0.25).unwrap();
        assert!(ok.domain_violation(&env).is_none());
        let bad = RegressionTuning::for_sample_size(100, 1.0, 0.1, 0.25).unwrap();
        assert!(bad.domain_violation(&env).is_some());
    }
}
