//! `lowerbound`: builds a hard-instance family on a dataset and reports its
//! audit.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use metric_entropy_lab::hard_instances::{
    build_classification_family, build_regression_family_with, kappa_upper, random_theta,
    regression_amplitude_limit,
};
use metric_entropy_lab::models::SmoothnessSpec;
use metric_entropy_lab::rng::rng_from_seed;
use metric_entropy_lab::{Error, PointSet};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    metric, parse_beta, parse_kappa, parse_metric, parse_positive, read_dataset, CommonArgs,
};
use crate::Ctx;

/// Relative tolerance of the per-flip squared-difference identity.
const FLIP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Regression,
    Classification,
}

#[derive(Args, Debug, Serialize)]
pub struct LowerboundArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Dataset CSV holding the point pool.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_positive)]
    pub delta_n: f64,
    /// Separation of the classification family (required there).
    #[arg(long, value_parser = parse_kappa)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = 1.0, value_parser = parse_beta)]
    pub beta: f64,
    /// Hölder constant.
    #[arg(long = "C", default_value_t = 1.0, value_parser = parse_positive)]
    #[serde(rename = "C")]
    pub c: f64,
    #[arg(long, default_value = "sup", value_parser = parse_metric)]
    pub metric: String,
    /// Bump amplitude of the regression family; half the admissible
    /// maximum when absent.
    #[arg(long, value_parser = parse_positive)]
    pub amplitude: Option<f64>,
    /// Keep at most this many regression centres.
    #[arg(long)]
    pub max_centers: Option<usize>,
    /// Keep at most this many packing points in the classification family.
    #[arg(long)]
    pub max_packing: Option<usize>,
    /// θ budget of the classification audit; exhaustive when all θ fit.
    #[arg(long, default_value_t = 4096)]
    pub max_thetas: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub fn lowerbound(a: &LowerboundArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let ds = read_dataset(&a.input)?;
    let ps = PointSet::new(ds.points, metric(&a.metric)?)?;
    let spec = SmoothnessSpec::new(a.beta, a.c)?;
    let mut rng = rng_from_seed(ctx.seed);
    let body = match a.mode {
        ModeArg::Regression => {
            let limit = regression_amplitude_limit(&ps, a.delta_n, spec, a.max_centers)?;
            let amplitude = a.amplitude.unwrap_or(0.5 * limit);
            let fam = build_regression_family_with(&ps, a.delta_n, amplitude, spec, a.max_centers)?;
            let theta = random_theta(fam.m(), &mut rng);
            let closed = fam.flip_sq_difference_closed_form();
            let mut worst_rel = 0.0f64;
            for j in 0..fam.m() {
                let brute = fam.flip_sq_difference(&theta, j)?;
                worst_rel =
                    worst_rel.max((brute - closed).abs() / closed.abs().max(f64::MIN_POSITIVE));
            }
            let flip_ok = worst_rel <= FLIP_TOL;
            json!({
                "mode": "regression",
                "points": ps.len(),
                "metric": a.metric,
                "beta": a.beta,
                "C": a.c,
                "delta_n": fam.delta_n(),
                "h_n": fam.h_n(),
                "amplitude": fam.amplitude(),
                "m": fam.m(),
                "centers": fam.centers(),
                "design": fam.design(),
                "audit": fam.audit(),
                "flip_identity": {
                    "theta": theta.iter().map(|&b| u8::from(b)).collect::<Vec<u8>>(),
                    "closed_form": closed,
                    "max_rel_error": worst_rel,
                    "tolerance": FLIP_TOL,
                    "passed": flip_ok,
                },
                "passed": fam.audit().passed && flip_ok,
            })
        }
        ModeArg::Classification => {
            let kappa = a.kappa.ok_or_else(|| {
                Error::Domain("--kappa is required in classification mode".into())
            })?;
            let fam = build_classification_family(&ps, kappa, spec, a.delta_n, a.max_packing)?;
            let audit = fam.audit(a.max_thetas, &mut rng)?;
            json!({
                "mode": "classification",
                "points": ps.len(),
                "metric": a.metric,
                "beta": a.beta,
                "C": a.c,
                "delta_n": fam.delta_n(),
                "kappa": fam.kappa(),
                "kappa_upper": kappa_upper(fam.m_0(), spec),
                "anchors": fam.anchors(),
                "cell_anchor": fam.cell_anchor(),
                "z_minus1": fam.z_minus1(),
                "z_0": fam.z_0(),
                "packing": fam.packing(),
                "d_n": fam.d_n(),
                "theta_len": fam.theta_len(),
                "M": fam.big_m(),
                "M_0": fam.m_0(),
                "reference": fam.reference(),
                "passed": audit.passed,
                "audit": audit,
            })
        }
    };
    ctx.emit_json(body)
}
