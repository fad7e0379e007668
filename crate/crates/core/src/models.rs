//! Curve generators, regression and classification instances over a finite
//! design, and the samplers that draw training data from them.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};

use crate::divergences::{tv, DiscreteMeasure};
use crate::error::{Error, Result};
use crate::metric::{Grid, PointSet, SampledFunction};

/// Absolute slack allowed in Hölder pair checks for floating-point rounding.
pub const HOLDER_SLACK: f64 = 1e-12;

/// Hölder exponent `beta ∈ (0, 1]` and constant `c > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothnessSpec {
    pub beta: f64,
    #[serde(rename = "c")]
    pub c: f64,
}

impl SmoothnessSpec {
    pub fn new(beta: f64, c: f64) -> Result<Self> {
        let s = Self { beta, c };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Domain(format!(
                "beta must lie in (0, 1], got {}",
                self.beta
            )));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Domain(format!("C must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseFamily {
    Gaussian {
        sd: f64,
    },
    /// Uniform on `[-half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
}

/// Centred additive noise with variance at most `c_v`.
///
/// JSON form: `{"family": "gaussian", "sd": 0.1, "c_v": 0.01}` or
/// `{"family": "uniform", "half_width": 0.2}`; `c_v` defaults to the
/// variance of the family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise", into = "RawNoise")]
pub struct NoiseSpec {
    pub family: NoiseFamily,
    pub c_v: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawFamily {
    Gaussian,
    Uniform,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    family: RawFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_width: Option<f64>,
    #[serde(default)]
    c_v: Option<f64>,
}

impl TryFrom<RawNoise> for NoiseSpec {
    type Error = Error;
    fn try_from(raw: RawNoise) -> Result<Self> {
        let family = match (raw.family, raw.sd, raw.half_width) {
            (RawFamily::Gaussian, Some(sd), None) => NoiseFamily::Gaussian { sd },
            (RawFamily::Uniform, None, Some(half_width)) => NoiseFamily::Uniform { half_width },
            (RawFamily::Gaussian, _, _) => {
                return Err(Error::Domain("gaussian noise needs `sd` (only)".into()))
            }
            (RawFamily::Uniform, _, _) => {
                return Err(Error::Domain(
                    "uniform noise needs `half_width` (only)".into(),
                ))
            }
        };
        let mut spec = NoiseSpec { family, c_v: 0.0 };
        spec.c_v = raw.c_v.unwrap_or_else(|| spec.variance());
        spec.validate()?;
        Ok(spec)
    }
}

impl From<NoiseSpec> for RawNoise {
    fn from(n: NoiseSpec) -> Self {
        match n.family {
            NoiseFamily::Gaussian { sd } => RawNoise {
                family: RawFamily::Gaussian,
                sd: Some(sd),
                half_width: None,
                c_v: Some(n.c_v),
            },
            NoiseFamily::Uniform { half_width } => RawNoise {
                family: RawFamily::Uniform,
                sd: None,
                half_width: Some(half_width),
                c_v: Some(n.c_v),
            },
        }
    }
}

impl NoiseSpec {
    pub fn gaussian(sd: f64) -> Result<Self> {
        let s = Self {
            family: NoiseFamily::Gaussian { sd },
            c_v: sd * sd,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform(half_width: f64) -> Result<Self> {
        let s = Self {
            family: NoiseFamily::Uniform { half_width },
            c_v: half_width * half_width / 3.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn variance(&self) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { sd } => sd * sd,
            NoiseFamily::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scale = match self.family {
            NoiseFamily::Gaussian { sd } => sd,
            NoiseFamily::Uniform { half_width } => half_width,
        };
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "noise scale must be finite and nonnegative, got {scale}"
            )));
        }
        if self.variance() > self.c_v * (1.0 + 1e-12) {
            return Err(Error::Invariant(format!(
                "noise variance {} exceeds the bound c_v = {}",
                self.variance(),
                self.c_v
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            NoiseFamily::Gaussian { sd: 0.0 } => 0.0,
            NoiseFamily::Gaussian { sd } => Normal::new(0.0, sd).expect("validated sd").sample(rng),
            NoiseFamily::Uniform { half_width: 0.0 } => 0.0,
            NoiseFamily::Uniform { half_width } => rng.random_range(-half_width..=half_width),
        }
    }
}

/// Regression map evaluable on curves of a point pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSpec {
    Constant {
        value: f64,
    },
    /// `scale · ∫ x` (trapezoidal mean).
    ScaledMean {
        scale: f64,
    },
    /// `scale · x(t_k)` for grid index `k`.
    PointValue {
        grid_index: usize,
        scale: f64,
    },
    /// `scale · ρ(x, pool[anchor])^exponent`.
    DistanceTo {
        anchor: usize,
        scale: f64,
        exponent: f64,
    },
    /// Explicit value per pool index.
    Table {
        values: Vec<f64>,
    },
}

impl GSpec {
    /// Evaluate at pool index `i`.
    pub fn eval_index(&self, ps: &PointSet, i: usize) -> Result<f64> {
        match self {
            GSpec::Table { values } => values
                .get(i)
                .copied()
                .ok_or_else(|| Error::Domain(format!("g table has no entry for point {i}"))),
            GSpec::DistanceTo {
                anchor,
                scale,
                exponent,
            } => {
                if *anchor >= ps.len() {
                    return Err(Error::Domain(format!(
                        "anchor {anchor} outside the point pool"
                    )));
                }
                Ok(scale * ps.dist(i, *anchor).powf(*exponent))
            }
            _ => self.eval(ps, ps.point(i)),
        }
    }

    /// Evaluate at an arbitrary curve on the pool's grid.
    pub fn eval(&self, ps: &PointSet, x: &SampledFunction) -> Result<f64> {
        match self {
            GSpec::Constant { value } => Ok(*value),
            GSpec::ScaledMean { scale } => Ok(scale * x.mean()),
            GSpec::PointValue { grid_index, scale } => x
                .values()
                .get(*grid_index)
                .map(|v| scale * v)
                .ok_or_else(|| Error::Domain(format!("grid index {grid_index} out of range"))),
            GSpec::DistanceTo {
                anchor,
                scale,
                exponent,
            } => {
                if *anchor >= ps.len() {
                    return Err(Error::Domain(format!(
                        "anchor {anchor} outside the point pool"
                    )));
                }
                let d = crate::metric::distance(x, ps.point(*anchor), ps.metric())?;
                Ok(scale * d.powf(*exponent))
            }
            GSpec::Table { .. } => Err(Error::Domain(
                "a tabulated g is only defined on the pool points".into(),
            )),
        }
    }
}

/// Outcome of a Hölder audit over all pairs of a finite support.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderAudit {
    pub passed: bool,
    /// `min (C ρ^β − |f(y) − f(z)|)` over pairs, and `min (C − |f|)` over points.
    pub worst_pair_margin: f64,
    pub worst_bound_margin: f64,
    pub worst_pair: Option<(usize, usize)>,
}

/// Check `|f(y) − f(z)| <= C ρ(y, z)^β` on all pairs of `indices` and, when
/// `check_bound`, `|f| <= C` on every point. `values[k]` is `f(indices[k])`.
pub fn holder_audit(
    ps: &PointSet,
    indices: &[usize],
    values: &[f64],
    spec: SmoothnessSpec,
    check_bound: bool,
) -> HolderAudit {
    let mut worst_pair_margin = f64::INFINITY;
    let mut worst_pair = None;
    for a in 0..indices.len() {
        for b in (a + 1)..indices.len() {
            let rho = ps.dist(indices[a], indices[b]);
            let margin = spec.c * rho.powf(spec.beta) - (values[a] - values[b]).abs();
            if margin < worst_pair_margin {
                worst_pair_margin = margin;
                worst_pair = Some((indices[a], indices[b]));
            }
        }
    }
    let worst_bound_margin = if check_bound {
        values
            .iter()
            .map(|v| spec.c - v.abs())
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    HolderAudit {
        passed: worst_pair_margin >= -HOLDER_SLACK && worst_bound_margin >= -HOLDER_SLACK,
        worst_pair_margin,
        worst_bound_margin,
        worst_pair,
    }
}

/// Regression model `Y = g(X) + ε` with `X` drawn from a finite design.
#[derive(Clone, Debug)]
pub struct RegressionInstance {
    points: PointSet,
    design: DiscreteMeasure,
    g: GSpec,
    g_values: Vec<f64>,
    noise: NoiseSpec,
    smoothness: SmoothnessSpec,
}

impl RegressionInstance {
    /// Builds the instance and audits `g ∈ G_{β,C}` on the design support.
    pub fn new(
        points: PointSet,
        design: DiscreteMeasure,
        g: GSpec,
        noise: NoiseSpec,
        smoothness: SmoothnessSpec,
    ) -> Result<Self> {
        smoothness.validate()?;
        noise.validate()?;
        if design.max_index() >= points.len() {
            return Err(Error::Domain(
                "design support indexes outside the point pool".into(),
            ));
        }
        let mut g_values = vec![f64::NAN; points.len()];
        for &i in design.support() {
            g_values[i] = g.eval_index(&points, i)?;
        }
        let vals: Vec<f64> = design.support().iter().map(|&i| g_values[i]).collect();
        let audit = holder_audit(&points, design.support(), &vals, smoothness, true);
        if !audit.passed {
            return Err(Error::Invariant(format!(
                "regression map is not in the Hölder class (pair margin {:.3e}, bound margin {:.3e})",
                audit.worst_pair_margin, audit.worst_bound_margin
            )));
        }
        Ok(Self {
            points,
            design,
            g,
            g_values,
            noise,
            smoothness,
        })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn design(&self) -> &DiscreteMeasure {
        &self.design
    }

    pub fn g(&self) -> &GSpec {
        &self.g
    }

    /// `g` at a design support point.
    pub fn g_at(&self, i: usize) -> f64 {
        self.g_values[i]
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn smoothness(&self) -> SmoothnessSpec {
        self.smoothness
    }
}

/// Training sample of a regression instance; `x` holds pool indices.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionSample {
    pub x: Vec<usize>,
    pub y: Vec<f64>,
}

impl RegressionSample {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

pub fn draw_regression_sample<R: Rng + ?Sized>(
    inst: &RegressionInstance,
    n: usize,
    rng: &mut R,
) -> Result<RegressionSample> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let sampler = inst.design.sampler();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = sampler.sample(rng);
        let eps = inst.noise.sample(rng);
        x.push(xi);
        y.push(inst.g_values[xi] + eps);
    }
    Ok(RegressionSample { x, y })
}

/// Two-group classification model: group 0 ~ `p_x`, group 1 ~ `p_y`, and a
/// training label equals 1 with probability `w`.
#[derive(Clone, Debug)]
pub struct ClassificationInstance {
    points: PointSet,
    p_x: DiscreteMeasure,
    p_y: DiscreteMeasure,
    kappa: f64,
    w: f64,
    smoothness: SmoothnessSpec,
    joint_support: Vec<usize>,
}

impl ClassificationInstance {
    /// Builds the instance, checking `TV(P_X, P_Y) >= kappa` and the Hölder
    /// condition on `p_X = dP_X / d(P_X + P_Y)` over the joint support.
    pub fn new(
        points: PointSet,
        p_x: DiscreteMeasure,
        p_y: DiscreteMeasure,
        kappa: f64,
        w: f64,
        smoothness: SmoothnessSpec,
    ) -> Result<Self> {
        smoothness.validate()?;
        if !(kappa >= 0.0) {
            return Err(Error::Domain(format!(
                "kappa must be nonnegative, got {kappa}"
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Domain(format!(
                "label probability w must lie in [0, 1], got {w}"
            )));
        }
        if p_x.max_index().max(p_y.max_index()) >= points.len() {
            return Err(Error::Domain(
                "measure support indexes outside the point pool".into(),
            ));
        }
        let distance = tv(&p_x, &p_y);
        if distance < kappa {
            return Err(Error::Invariant(format!(
                "TV(P_X, P_Y) = {distance} is below kappa = {kappa}"
            )));
        }
        let mut joint: Vec<usize> = p_x.support().iter().chain(p_y.support()).copied().collect();
        joint.sort_unstable();
        joint.dedup();
        joint.retain(|&i| p_x.weight_of(i) + p_y.weight_of(i) > 0.0);
        let inst = Self {
            points,
            p_x,
            p_y,
            kappa,
            w,
            smoothness,
            joint_support: joint,
        };
        let vals: Vec<f64> = inst
            .joint_support
            .iter()
            .map(|&z| inst.density_p_x(z))
            .collect::<Result<_>>()?;
        let audit = holder_audit(&inst.points, &inst.joint_support, &vals, smoothness, false);
        if !audit.passed {
            return Err(Error::Invariant(format!(
                "p_X violates the Hölder condition (worst margin {:.3e} at {:?})",
                audit.worst_pair_margin, audit.worst_pair
            )));
        }
        Ok(inst)
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn p_x(&self) -> &DiscreteMeasure {
        &self.p_x
    }

    pub fn p_y(&self) -> &DiscreteMeasure {
        &self.p_y
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn smoothness(&self) -> SmoothnessSpec {
        self.smoothness
    }

    /// Pool indices with positive `P_X + P_Y` mass, ascending.
    pub fn joint_support(&self) -> &[usize] {
        &self.joint_support
    }

    /// Radon–Nikodym density `p_X(z) = P_X{z} / (P_X{z} + P_Y{z})`.
    pub fn density_p_x(&self, z: usize) -> Result<f64> {
        let a = self.p_x.weight_of(z);
        let b = self.p_y.weight_of(z);
        if !(a + b > 0.0) {
            return Err(Error::Domain(format!(
                "point {z} has zero mass under P_X + P_Y"
            )));
        }
        Ok(a / (a + b))
    }

    /// `p_Y = 1 − p_X`.
    pub fn density_p_y(&self, z: usize) -> Result<f64> {
        let a = self.p_x.weight_of(z);
        let b = self.p_y.weight_of(z);
        if !(a + b > 0.0) {
            return Err(Error::Domain(format!(
                "point {z} has zero mass under P_X + P_Y"
            )));
        }
        Ok(b / (a + b))
    }
}

/// Training sample of a classification instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationSample {
    pub z: Vec<usize>,
    pub labels: Vec<u8>,
}

impl ClassificationSample {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

pub fn draw_classification_sample<R: Rng + ?Sized>(
    inst: &ClassificationInstance,
    n: usize,
    rng: &mut R,
) -> Result<ClassificationSample> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let sx = inst.p_x.sampler();
    let sy = inst.p_y.sampler();
    let mut z = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.random_bool(inst.w);
        let zi = if label {
            sy.sample(rng)
        } else {
            sx.sample(rng)
        };
        z.push(zi);
        labels.push(u8::from(label));
    }
    Ok(ClassificationSample { z, labels })
}

/// Piecewise-linear curve with i.i.d. slopes uniform on `[-m, m]`, started
/// uniformly in `[-m/2, m/2]` and clipped to `[-m, m]`. The result is
/// `m`-Lipschitz and bounded by `m`.
pub fn sample_lipschitz_curve<R: Rng + ?Sized>(
    m: f64,
    grid: &Grid,
    rng: &mut R,
) -> Result<SampledFunction> {
    if !(m >= 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!(
            "Lipschitz constant must be finite and nonnegative, got {m}"
        )));
    }
    if m == 0.0 {
        return SampledFunction::constant(grid.clone(), 0.0);
    }
    let t = grid.abscissae();
    let mut values = Vec::with_capacity(t.len());
    let mut v = rng.random_range(-0.5 * m..=0.5 * m);
    values.push(v);
    for w in t.windows(2) {
        let slope = rng.random_range(-m..=m);
        v += slope * (w[1] - w[0]);
        values.push(v);
    }
    for v in &mut values {
        *v = v.clamp(-m, m);
    }
    SampledFunction::new(grid.clone(), values)
}

/// Nondecreasing curve from `[0, 1]` to `[0, 1]`: the normalised cumulative
/// sum of i.i.d. standard exponential increments.
pub fn sample_monotone_curve<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Result<SampledFunction> {
    let increments: Vec<f64> = (1..grid.len()).map(|_| Exp1.sample(rng)).collect();
    monotone_from_increments(grid, &increments)
}

/// Normalised cumulative sum of `grid.len() - 1` nonnegative increments,
/// starting at 0 and ending at 1 (or identically 0 if all increments vanish).
pub fn monotone_from_increments(grid: &Grid, increments: &[f64]) -> Result<SampledFunction> {
    if increments.len() + 1 != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len() - 1,
            got: increments.len(),
        });
    }
    if increments.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(Error::Domain(
            "increments must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = increments.iter().sum();
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    values.push(0.0);
    for d in increments {
        acc += d;
        values.push(if total > 0.0 {
            (acc / total).min(1.0)
        } else {
            0.0
        });
    }
    SampledFunction::new(grid.clone(), values)
}
