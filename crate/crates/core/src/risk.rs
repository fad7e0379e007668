//! Monte Carlo risks of the kernel estimators on discrete instances, the
//! three-term upper bound for the regression risk, the small-ball lower
//! condition on the design, and log-log rate fits.
//!
//! Randomness enters only through the training samples. Replication `r` of
//! the cell with sample size `n` draws from
//! `child_rng(cell_seed(master, n), r)`, so any cell can be recomputed on its
//! own. Per-replication values are collected in order and reduced
//! sequentially, which makes parallel and sequential runs bit-identical.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::divergences::{tv, DiscreteMeasure};
use crate::entropy::{least_squares, small_ball, small_ball_tail};
use crate::error::{Error, Result};
use crate::estimators::{
    bayes_classify, nw_from_counts, plugin_from_counts, select_bandwidth, shifted_mean,
    RegressionTuning,
};
use crate::exec::Exec;
use crate::metric::PointSet;
use crate::models::{
    draw_classification_sample, draw_regression_sample, ClassificationInstance, RegressionInstance,
    SmoothnessSpec,
};
use crate::rng::child_rng;

/// Seed of the report cell with sample size `n`.
pub fn cell_seed(master: u64, n: usize) -> u64 {
    master ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// How the bandwidth and ridge depend on the sample size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum TuningRule {
    /// `h = (d ln n)^{-1/γ}`, `δ_n = n^{-η}`.
    LogRate { gamma: f64, d: f64, eta: f64 },
    /// The same `h` and `δ_n` for every `n`.
    Fixed { h: f64, delta_n: f64 },
}

impl TuningRule {
    pub fn tuning(&self, n: usize) -> Result<RegressionTuning> {
        match *self {
            TuningRule::LogRate { gamma, d, eta } => {
                RegressionTuning::for_sample_size(n, gamma, d, eta)
            }
            TuningRule::Fixed { h, delta_n } => RegressionTuning::manual(h, delta_n),
        }
    }

    /// Bandwidth alone, as used by the plug-in classifier.
    pub fn bandwidth(&self, n: usize) -> Result<f64> {
        match *self {
            TuningRule::LogRate { gamma, d, .. } => select_bandwidth(n, gamma, d),
            TuningRule::Fixed { h, .. } => {
                if h > 0.0 {
                    Ok(h)
                } else {
                    Err(Error::Domain(format!(
                        "bandwidth must be positive, got {h}"
                    )))
                }
            }
        }
    }
}

/// Mean and standard error over replications, with the raw values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub estimate: f64,
    pub se: f64,
    pub values: Vec<f64>,
}

impl RiskEstimate {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let r = values.len();
        if r < 2 {
            return Err(Error::Domain(format!(
                "at least two replications are needed, got {r}"
            )));
        }
        let mean = values.iter().sum::<f64>() / r as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1) as f64;
        Ok(Self {
            estimate: mean,
            se: (var / r as f64).sqrt(),
            values,
        })
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        let k = v.len();
        if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        }
    }
}

fn replicate<F>(reps: usize, exec: Exec, f: F) -> Result<RiskEstimate>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    if reps < 2 {
        return Err(Error::Domain(format!(
            "at least two replications are needed, got {reps}"
        )));
    }
    let values = exec
        .map_indexed(reps, f)
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    RiskEstimate::from_values(values)
}

/// Per-pool-index counts and response sums of one training sample. Sums
/// are kept as offsets from the first response so that constant responses
/// average exactly.
struct BallStats {
    /// Distinct sampled pool indices in ascending order.
    distinct: Vec<usize>,
    count: Vec<usize>,
    offset_sum: Vec<f64>,
    shift: f64,
}

impl BallStats {
    fn new(pool: usize, x: &[usize], y: &[f64]) -> Self {
        let shift = y.first().copied().unwrap_or(0.0);
        let mut count = vec![0usize; pool];
        let mut offset_sum = vec![0.0; pool];
        for (&i, &v) in x.iter().zip(y) {
            count[i] += 1;
            offset_sum[i] += v - shift;
        }
        let distinct = (0..pool).filter(|&i| count[i] > 0).collect();
        Self {
            distinct,
            count,
            offset_sum,
            shift,
        }
    }

    /// Neighbour count and response mean in the open `h`-ball around `x`.
    fn ball(&self, ps: &PointSet, x: usize, h: f64) -> (usize, f64) {
        let row = ps.distance_matrix().row(x);
        let mut k = 0;
        let mut s = 0.0;
        for &i in &self.distinct {
            if row[i] < h {
                k += self.count[i];
                s += self.offset_sum[i];
            }
        }
        (k, shifted_mean(self.shift, s, k))
    }
}

/// Design-weighted squared error `Σ_x P_X{x} |ĝ(x) − g(x)|²` of one
/// training sample of size `n`, drawn from `rng`.
fn regression_replication(
    inst: &RegressionInstance,
    tuning: &RegressionTuning,
    n: usize,
    rng: &mut crate::rng::LabRng,
) -> Result<f64> {
    let sample = draw_regression_sample(inst, n, rng)?;
    let ps = inst.points();
    let stats = BallStats::new(ps.len(), &sample.x, &sample.y);
    let mut total = 0.0;
    for (x, w) in inst.design().iter() {
        let (k, mean) = stats.ball(ps, x, tuning.h);
        let est = nw_from_counts(k, mean, n, tuning.delta_n).estimate;
        let err = est - inst.g_at(x);
        total += w * err * err;
    }
    Ok(total)
}

/// Integrated squared risk `∫ E|ĝ(x) − g(x)|² dP_X(x)`, computed exactly
/// over the design support for each replication.
pub fn integrated_sq_risk(
    inst: &RegressionInstance,
    tuning: &RegressionTuning,
    n: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<RiskEstimate> {
    tuning.validate()?;
    inst.points().distance_matrix_with(exec);
    let base = cell_seed(seed, n);
    replicate(reps, exec, |r| {
        let mut rng = child_rng(base, r as u64);
        regression_replication(inst, tuning, n, &mut rng)
    })
}

/// Pointwise risk `E|ĝ(x) − g(x)|²` at pool index `x`.
pub fn pointwise_risk(
    inst: &RegressionInstance,
    tuning: &RegressionTuning,
    x: usize,
    n: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<RiskEstimate> {
    tuning.validate()?;
    let ps = inst.points();
    if x >= ps.len() {
        return Err(Error::Domain(format!(
            "point {x} outside the point pool of size {}",
            ps.len()
        )));
    }
    let gx = inst.g().eval_index(ps, x)?;
    ps.distance_matrix_with(exec);
    let base = cell_seed(seed, n);
    replicate(reps, exec, |r| {
        let mut rng = child_rng(base, r as u64);
        let sample = draw_regression_sample(inst, n, &mut rng)?;
        let stats = BallStats::new(ps.len(), &sample.x, &sample.y);
        let (k, mean) = stats.ball(ps, x, tuning.h);
        let err = nw_from_counts(k, mean, n, tuning.delta_n).estimate - gx;
        Ok(err * err)
    })
}

/// The three terms of the regression risk bound and their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiskBound {
    /// `2 C² h^{2β}`.
    pub bias: f64,
    /// `(2 c_v + C²) n^{-1} δ_n^{-2}`.
    pub variance: f64,
    /// `C² P{ψ(X, h) <= 2 δ_n}`.
    pub small_ball: f64,
    pub total: f64,
}

pub fn theorem2_bound(
    tuning: &RegressionTuning,
    n: usize,
    spec: SmoothnessSpec,
    c_v: f64,
    smallball_tail: f64,
) -> Result<RiskBound> {
    if !(0.0..=1.0).contains(&smallball_tail) {
        return Err(Error::Domain(format!(
            "small-ball tail must be a probability, got {smallball_tail}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let c2 = spec.c * spec.c;
    let bias = 2.0 * c2 * tuning.h.powf(2.0 * spec.beta);
    let variance = (2.0 * c_v + c2) / (n as f64 * tuning.delta_n * tuning.delta_n);
    let small_ball = c2 * smallball_tail;
    Ok(RiskBound {
        bias,
        variance,
        small_ball,
        total: bias + variance + small_ball,
    })
}

/// The bound with the tail `P_X{ψ(X, h) <= 2 δ_n}` computed exactly from the
/// instance's design.
pub fn theorem2_bound_for(
    inst: &RegressionInstance,
    tuning: &RegressionTuning,
    n: usize,
) -> Result<RiskBound> {
    let tail = small_ball_tail(inst.points(), inst.design(), tuning.h, 2.0 * tuning.delta_n)?;
    theorem2_bound(
        tuning,
        n,
        inst.smoothness(),
        inst.noise().c_v,
        tail.min(1.0),
    )
}

/// `E(φ) = P_X{φ = 1} + P_Y{φ = 0} − 1 + TV(P_X, P_Y)` for a deterministic
/// classifier given on pool indices.
pub fn excess_risk_of<F: Fn(usize) -> u8>(inst: &ClassificationInstance, classifier: F) -> f64 {
    let mut err = 0.0;
    for &z in inst.joint_support() {
        if classifier(z) == 0 {
            err += inst.p_y().weight_of(z);
        } else {
            err += inst.p_x().weight_of(z);
        }
    }
    err - 1.0 + tv(inst.p_x(), inst.p_y())
}

/// Excess risk of the Bayes rule on the true `p_X`.
pub fn bayes_excess_risk(inst: &ClassificationInstance) -> Result<f64> {
    let labels = inst
        .joint_support()
        .iter()
        .map(|&z| Ok((z, bayes_classify(inst.density_p_x(z)?)?)))
        .collect::<Result<std::collections::HashMap<usize, u8>>>()?;
    Ok(excess_risk_of(inst, |z| labels[&z]))
}

/// Excess risk of the plug-in classifier with bandwidth `h`, misclassification
/// probabilities enumerated exactly for every training sample.
pub fn excess_risk(
    inst: &ClassificationInstance,
    h: f64,
    n: usize,
    reps: usize,
    seed: u64,
    exec: Exec,
) -> Result<RiskEstimate> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!(
            "bandwidth must be positive, got {h}"
        )));
    }
    let ps = inst.points();
    ps.distance_matrix_with(exec);
    let base = cell_seed(seed, n);
    replicate(reps, exec, |r| {
        let mut rng = child_rng(base, r as u64);
        let sample = draw_classification_sample(inst, n, &mut rng)?;
        let (mut zx, mut zy) = (Vec::new(), Vec::new());
        for (&z, &l) in sample.z.iter().zip(&sample.labels) {
            if l == 0 {
                zx.push(z);
            } else {
                zy.push(z);
            }
        }
        let sx = BallStats::new(ps.len(), &zx, &vec![0.0; zx.len()]);
        let sy = BallStats::new(ps.len(), &zy, &vec![0.0; zy.len()]);
        Ok(excess_risk_of(inst, |z| {
            let (in0, _) = sx.ball(ps, z, h);
            let (in1, _) = sy.ball(ps, z, h);
            plugin_from_counts(in0, zx.len(), in1, zy.len()).label
        }))
    })
}

/// Lower small-ball condition `P(B(y, δ)) >= c_3 δ exp(−c_4 δ^{-γ})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxCondition {
    pub c_low3: f64,
    pub c_low4: f64,
    pub gamma: f64,
}

impl RxCondition {
    pub fn new(c_low3: f64, c_low4: f64, gamma: f64) -> Result<Self> {
        if !(c_low3 > 0.0 && c_low4 > 0.0 && gamma > 0.0) {
            return Err(Error::Domain(
                "small-ball condition constants must be positive".into(),
            ));
        }
        Ok(Self {
            c_low3,
            c_low4,
            gamma,
        })
    }

    pub fn lower_bound(&self, delta: f64) -> f64 {
        self.c_low3 * delta * (-self.c_low4 * delta.powf(-self.gamma)).exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RxReport {
    pub passed: bool,
    /// `min (P(B(y, δ)) − bound(δ))` over support points and radii.
    pub worst_margin: f64,
    /// `(support point, δ)` attaining the worst margin.
    pub worst: Option<(usize, f64)>,
    pub checks: usize,
}

pub fn rx_membership(
    ps: &PointSet,
    p: &DiscreteMeasure,
    cond: RxCondition,
    deltas: &[f64],
) -> Result<RxReport> {
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::Domain(format!("radii must lie in (0, 1), got {d}")));
    }
    let mut worst_margin = f64::INFINITY;
    let mut worst = None;
    let mut checks = 0;
    for &y in p.support() {
        for &delta in deltas {
            let margin = small_ball(ps, p, y, delta)? - cond.lower_bound(delta);
            checks += 1;
            if margin < worst_margin {
                worst_margin = margin;
                worst = Some((y, delta));
            }
        }
    }
    Ok(RxReport {
        passed: worst_margin >= 0.0,
        worst_margin,
        worst,
        checks,
    })
}

/// Which risk a report row estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    Regression,
    Classification,
}

impl FromStr for RiskKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(RiskKind::Regression),
            "classification" => Ok(RiskKind::Classification),
            other => Err(Error::Domain(format!(
                "unknown risk kind `{other}` (expected regression or classification)"
            ))),
        }
    }
}

/// One row of a risk report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiskRow {
    pub n: usize,
    pub estimate: f64,
    pub se: f64,
    pub h: f64,
    /// Not used by the classifier; absent for classification rows.
    pub delta_n: Option<f64>,
    pub reps: usize,
}

/// Risk estimates over a list of sample sizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskReport {
    pub rows: Vec<RiskRow>,
    pub seed: u64,
}

pub const REPORT_COLUMNS: [&str; 6] = ["n", "estimate", "se", "h", "delta_n", "reps"];

impl RiskReport {
    /// CSV with header `n,estimate,se,h,delta_n,reps`, preceded by `comment`
    /// lines prefixed by `# `.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: &[String]) -> Result<()> {
        for line in comment {
            writeln!(out, "# {line}")?;
        }
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(REPORT_COLUMNS)?;
        for row in &self.rows {
            wtr.write_record([
                row.n.to_string(),
                crate::dataset::format_float(row.estimate),
                crate::dataset::format_float(row.se),
                crate::dataset::format_float(row.h),
                row.delta_n
                    .map(crate::dataset::format_float)
                    .unwrap_or_default(),
                row.reps.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads a report written by [`write_csv`](Self::write_csv). The seed is
    /// not stored in the table and is returned as 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != REPORT_COLUMNS {
            return Err(Error::Domain(format!(
                "risk report header must be {}, got {}",
                REPORT_COLUMNS.join(","),
                header.join(",")
            )));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Domain(format!("bad number `{s}` in risk report")))
        };
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Domain(format!("bad integer `{s}` in risk report")))
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(RiskRow {
                n: int(&rec[0])?,
                estimate: num(&rec[1])?,
                se: num(&rec[2])?,
                h: num(&rec[3])?,
                delta_n: if rec[4].is_empty() {
                    None
                } else {
                    Some(num(&rec[4])?)
                },
                reps: int(&rec[5])?,
            });
        }
        Ok(Self { rows, seed: 0 })
    }
}

/// Slope of `ln risk` against `ln ln n`, next to the logarithmic-rate target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub se: f64,
    /// `−2β/γ` for regression, `−β/γ` for classification.
    pub target: f64,
    pub used: usize,
    /// Sample sizes left out because the risk or `ln ln n` was unusable.
    pub excluded: Vec<usize>,
}

pub fn rate_target(beta: f64, gamma: f64, kind: RiskKind) -> f64 {
    match kind {
        RiskKind::Regression => -2.0 * beta / gamma,
        RiskKind::Classification => -beta / gamma,
    }
}

pub fn rate_fit(points: &[(usize, f64)], beta: f64, gamma: f64, kind: RiskKind) -> Result<RateFit> {
    if !(beta > 0.0 && gamma > 0.0) {
        return Err(Error::Domain("beta and gamma must be positive".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for &(n, risk) in points {
        if n >= 2 && risk > 0.0 && risk.is_finite() {
            xs.push((n as f64).ln().ln());
            ys.push(risk.ln());
        } else {
            excluded.push(n);
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "rate fit needs at least 3 sample sizes with positive risk, got {}",
            xs.len()
        )));
    }
    let fit = least_squares(&xs, &ys)
        .ok_or_else(|| Error::InsufficientData("sample sizes must not all coincide".into()))?;
    Ok(RateFit {
        slope: fit.slope,
        se: fit.slope_se,
        target: rate_target(beta, gamma, kind),
        used: xs.len(),
        excluded,
    })
}
