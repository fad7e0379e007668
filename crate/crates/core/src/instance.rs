//! Instance files: JSON descriptions of a point pool plus a regression or
//! classification model and a tuning rule.
//!
//! ```json
//! {
//!   "kind": "regression",
//!   "points": {"generate": {"class": "monotone", "n": 30, "grid": 21, "seed": 2024}},
//!   "metric": "l1",
//!   "g": {"type": "scaled_mean", "scale": 1.0},
//!   "noise": {"family": "gaussian", "sd": 0.1},
//!   "smoothness": {"beta": 1.0, "c": 1.0},
//!   "tuning": {"rule": "log_rate", "gamma": 1.0, "d": 0.8, "eta": 0.25}
//! }
//! ```
//!
//! Dataset paths are resolved relative to the instance file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::divergences::DiscreteMeasure;
use crate::entropy::{entropy_profile, envelope_with_gamma, EntropyEnvelope, ProfileOptions};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metric::{Grid, MetricSpec, PointSet, SampledFunction};
use crate::models::{
    sample_lipschitz_curve, sample_monotone_curve, ClassificationInstance, GSpec, NoiseSpec,
    RegressionInstance, SmoothnessSpec,
};
use crate::risk::TuningRule;
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveClass {
    Lipschitz,
    Monotone,
}

impl std::str::FromStr for CurveClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lipschitz" => Ok(CurveClass::Lipschitz),
            "monotone" => Ok(CurveClass::Monotone),
            other => Err(Error::Domain(format!(
                "unknown curve class `{other}` (expected lipschitz or monotone)"
            ))),
        }
    }
}

/// `n` curves on the uniform `grid`-point grid, drawn in order from one
/// generator seeded with `seed`.
pub fn generate_curves(
    class: CurveClass,
    n: usize,
    grid: usize,
    lipschitz: f64,
    seed: u64,
) -> Result<Vec<SampledFunction>> {
    if n == 0 {
        return Err(Error::Domain("number of curves must be at least 1".into()));
    }
    let grid = Grid::uniform(grid)?;
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| match class {
            CurveClass::Lipschitz => sample_lipschitz_curve(lipschitz, &grid, &mut rng),
            CurveClass::Monotone => sample_monotone_curve(&grid, &mut rng),
        })
        .collect()
}

fn default_lipschitz() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub class: CurveClass,
    pub n: usize,
    pub grid: usize,
    pub seed: u64,
    #[serde(default = "default_lipschitz")]
    pub lipschitz: f64,
}

/// Where the curves of the pool come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PointsSource {
    /// CSV dataset file.
    Dataset(PathBuf),
    Generate(GenerateSpec),
    /// Constant curves with these values.
    Constants(Vec<f64>),
}

/// Symmetric tilt of the uniform measure on the pool:
/// `P_X{z} ∝ 1 + a φ(z)`, `P_Y{z} ∝ 1 − a φ(z)` with `φ = g − mean(g)`.
/// Then `p_X = (1 + a φ) / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltSpec {
    pub g: GSpec,
    pub amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    Regression,
    Classification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub points: PointsSource,
    /// `sup`, `l1`, `l2` or `lp:<p>`.
    pub metric: String,
    pub smoothness: SmoothnessSpec,
    pub tuning: TuningRule,
    /// Regression design; uniform on the pool when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DiscreteMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<GSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_x: Option<DiscreteMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_y: Option<DiscreteMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<TiltSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

/// A built model.
#[derive(Clone, Debug)]
pub enum Model {
    Regression(RegressionInstance),
    Classification(ClassificationInstance),
}

#[derive(Clone, Debug)]
pub struct LoadedInstance {
    pub spec: InstanceSpec,
    pub model: Model,
}

impl LoadedInstance {
    pub fn points(&self) -> &PointSet {
        match &self.model {
            Model::Regression(r) => r.points(),
            Model::Classification(c) => c.points(),
        }
    }
}

fn missing(field: &str, kind: &str) -> Error {
    Error::Domain(format!("{kind} instance needs the `{field}` field"))
}

fn forbid(present: bool, field: &str, kind: &str) -> Result<()> {
    if present {
        Err(Error::Domain(format!(
            "field `{field}` does not apply to a {kind} instance"
        )))
    } else {
        Ok(())
    }
}

impl InstanceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<LoadedInstance> {
        let text = std::fs::read_to_string(path)?;
        let spec = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        spec.build(base)
    }

    pub fn build_points(&self, base_dir: &Path) -> Result<PointSet> {
        let metric = MetricSpec::parse(&self.metric)?;
        let curves = match &self.points {
            PointsSource::Dataset(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    base_dir.join(p)
                };
                Dataset::read_path(&path)?.points
            }
            PointsSource::Generate(g) => {
                generate_curves(g.class, g.n, g.grid, g.lipschitz, g.seed)?
            }
            PointsSource::Constants(vals) => return PointSet::constants(vals, metric),
        };
        PointSet::new(curves, metric)
    }

    /// Builds the pool and the model, running the model's own audits.
    pub fn build(self, base_dir: &Path) -> Result<LoadedInstance> {
        let ps = self.build_points(base_dir)?;
        let model = match self.kind {
            InstanceKind::Regression => {
                let kind = "regression";
                for (present, field) in [
                    (self.p_x.is_some(), "p_x"),
                    (self.p_y.is_some(), "p_y"),
                    (self.tilt.is_some(), "tilt"),
                    (self.kappa.is_some(), "kappa"),
                    (self.w.is_some(), "w"),
                ] {
                    forbid(present, field, kind)?;
                }
                let design = match &self.design {
                    Some(d) => d.clone(),
                    None => DiscreteMeasure::uniform((0..ps.len()).collect())?,
                };
                let g = self.g.clone().ok_or_else(|| missing("g", kind))?;
                let noise = self.noise.ok_or_else(|| missing("noise", kind))?;
                Model::Regression(RegressionInstance::new(
                    ps,
                    design,
                    g,
                    noise,
                    self.smoothness,
                )?)
            }
            InstanceKind::Classification => {
                let kind = "classification";
                for (present, field) in [
                    (self.design.is_some(), "design"),
                    (self.g.is_some(), "g"),
                    (self.noise.is_some(), "noise"),
                ] {
                    forbid(present, field, kind)?;
                }
                let (p_x, p_y) =
                    match (&self.p_x, &self.p_y, &self.tilt) {
                        (Some(px), Some(py), None) => (px.clone(), py.clone()),
                        (None, None, Some(t)) => tilted_measures(&ps, t)?,
                        _ => return Err(Error::Domain(
                            "classification instance needs either both `p_x` and `p_y`, or `tilt`"
                                .into(),
                        )),
                    };
                let kappa = self.kappa.ok_or_else(|| missing("kappa", kind))?;
                let w = self.w.unwrap_or(0.5);
                Model::Classification(ClassificationInstance::new(
                    ps,
                    p_x,
                    p_y,
                    kappa,
                    w,
                    self.smoothness,
                )?)
            }
        };
        Ok(LoadedInstance { spec: self, model })
    }
}

pub fn tilted_measures(
    ps: &PointSet,
    tilt: &TiltSpec,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    let vals = (0..ps.len())
        .map(|i| tilt.g.eval_index(ps, i))
        .collect::<Result<Vec<f64>>>()?;
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let phi: Vec<f64> = vals.iter().map(|v| tilt.amplitude * (v - mean)).collect();
    if let Some(bad) = phi.iter().find(|p| !(p.abs() <= 1.0)) {
        return Err(Error::Domain(format!(
            "tilt amplitude too large: |a (g - mean g)| reaches {bad}, must stay within 1"
        )));
    }
    let support: Vec<usize> = (0..ps.len()).collect();
    let px = DiscreteMeasure::from_masses(support.clone(), phi.iter().map(|p| 1.0 + p).collect())?;
    let py = DiscreteMeasure::from_masses(support, phi.iter().map(|p| 1.0 - p).collect())?;
    Ok((px, py))
}

/// Pool of the built-in instances: 30 monotone curves on a 21-point grid
/// under the `L_1` metric.
pub fn default_points_source() -> PointsSource {
    PointsSource::Generate(GenerateSpec {
        class: CurveClass::Monotone,
        n: 30,
        grid: 21,
        seed: 2024,
        lipschitz: 1.0,
    })
}

/// Tuning of the built-in instances.
pub const DEFAULT_TUNING: TuningRule = TuningRule::LogRate {
    gamma: 1.0,
    d: 0.8,
    eta: 0.25,
};

/// Radius window on which the built-in pool's entropy envelope is taken.
/// For a finite pool `log N(s) s^γ` vanishes as `s → 0`, so an envelope
/// fitted on `(0, s0]` with small `s0` holds on all of `(0, s0]`.
pub const DEFAULT_ENVELOPE_WINDOW: (f64, f64) = (0.005, 0.02);

/// Envelope with fixed exponent `gamma` from the greedy upper covering
/// counts of `ps` at 16 log-spaced radii spanning `window`.
pub fn envelope_for(ps: &PointSet, gamma: f64, window: (f64, f64)) -> Result<EntropyEnvelope> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Domain(format!(
            "window must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    let mut radii: Vec<f64> = (0..16)
        .map(|k| hi * (lo / hi).powf(k as f64 / 15.0))
        .collect();
    radii[15] = lo;
    let opts = ProfileOptions {
        exact_threshold: 0,
        ..ProfileOptions::default()
    };
    let profile = entropy_profile(ps, &radii, opts, Exec::Sequential)?;
    envelope_with_gamma(&profile, window, gamma)
}

/// Built-in regression instance: `g(x) = ∫ x` on monotone curves, Gaussian
/// noise with standard deviation 0.1, uniform design.
pub fn default_regression_spec() -> InstanceSpec {
    InstanceSpec {
        kind: InstanceKind::Regression,
        points: default_points_source(),
        metric: "l1".into(),
        smoothness: SmoothnessSpec { beta: 1.0, c: 1.0 },
        tuning: DEFAULT_TUNING,
        design: None,
        g: Some(GSpec::ScaledMean { scale: 1.0 }),
        noise: Some(NoiseSpec::gaussian(0.1).expect("valid sd")),
        p_x: None,
        p_y: None,
        tilt: None,
        kappa: None,
        w: None,
    }
}

/// Built-in classification instance on the same pool, tilted by `∫ x`.
pub fn default_classification_spec() -> InstanceSpec {
    InstanceSpec {
        kind: InstanceKind::Classification,
        points: default_points_source(),
        metric: "l1".into(),
        smoothness: SmoothnessSpec { beta: 1.0, c: 1.0 },
        tuning: DEFAULT_TUNING,
        design: None,
        g: None,
        noise: None,
        p_x: None,
        p_y: None,
        tilt: Some(TiltSpec {
            g: GSpec::ScaledMean { scale: 1.0 },
            amplitude: 1.5,
        }),
        kappa: Some(0.05),
        w: Some(0.5),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build() {
        let r = default_regression_spec().build(Path::new(".")).unwrap();
        assert!(matches!(r.model, Model::Regression(_)));
        assert_eq!(r.points().len(), 30);
        let c = default_classification_spec().build(Path::new(".")).unwrap();
        let Model::Classification(ci) = &c.model else {
            panic!()
        };
        for &z in ci.joint_support() {
            assert!((ci.density_p_x(z).unwrap() + ci.density_p_y(z).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn default_tuning_is_inside_the_domain() {
        let r = default_regression_spec().build(Path::new(".")).unwrap();
        let env = envelope_for(r.points(), 1.0, DEFAULT_ENVELOPE_WINDOW).unwrap();
        let TuningRule::LogRate { gamma, d, eta } = DEFAULT_TUNING else {
            panic!()
        };
        let t = crate::estimators::RegressionTuning::for_sample_size(100, gamma, d, eta).unwrap();
        assert!(t.domain_violation(&env).is_none(), "{env:?}");
    }

    #[test]
    fn json_round_trip_and_unknown_keys() {
        let spec = default_classification_spec();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(InstanceSpec::from_json(&text).unwrap(), spec);
        let bad = text.replacen("\"kind\"", "\"colour\":1,\"kind\"", 1);
        assert!(InstanceSpec::from_json(&bad).is_err());
    }

    #[test]
    fn misplaced_fields_are_rejected() {
        let mut spec = default_regression_spec();
        spec.kappa = Some(0.1);
        assert!(spec.build(Path::new(".")).is_err());
        let mut spec = default_classification_spec();
        spec.tilt = None;
        assert!(spec.build(Path::new(".")).is_err());
    }

    #[test]
    fn explicit_constants_instance() {
        let text = r#"{
            "kind": "regression",
            "points": {"constants": [0.0, 0.5, 1.0]},
            "metric": "sup",
            "design": {"support": [0, 2], "weights": [0.5, 0.5]},
            "g": {"type": "constant", "value": 0.25},
            "noise": {"family": "uniform", "half_width": 0.1},
            "smoothness": {"beta": 1.0, "c": 1.0},
            "tuning": {"rule": "fixed", "h": 0.3, "delta_n": 0.1}
        }"#;
        let inst = InstanceSpec::from_json(text)
            .unwrap()
            .build(Path::new("."))
            .unwrap();
        assert_eq!(inst.points().len(), 3);
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_curves(CurveClass::Lipschitz, 5, 11, 1.0, 3).unwrap();
        let b = generate_curves(CurveClass::Lipschitz, 5, 11, 1.0, 3).unwrap();
        assert_eq!(a, b);
        assert!(generate_curves(CurveClass::Monotone, 0, 11, 1.0, 3).is_err());
    }
}
