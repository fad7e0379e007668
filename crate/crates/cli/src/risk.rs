//! `risk` and `rate`.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use metric_entropy_lab::exec::with_threads;
use metric_entropy_lab::instance::{
    default_classification_spec, default_regression_spec, envelope_for, InstanceSpec,
    LoadedInstance, Model,
};
use metric_entropy_lab::risk::{
    excess_risk, integrated_sq_risk, pointwise_risk, rate_fit, RiskKind, RiskReport, RiskRow,
    TuningRule,
};
use metric_entropy_lab::Error;
use serde::Serialize;

use crate::args::{open, parse_beta, parse_eta, parse_positive, parse_window, CommonArgs, Window};
use crate::Ctx;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    /// Integrated squared risk of the Nadaraya-Watson estimator.
    Regress,
    /// Excess risk of the plug-in classifier.
    Classify,
    /// Squared error at one pool point.
    Pointwise,
}

#[derive(Args, Debug, Serialize)]
pub struct RiskArgs {
    /// Instance JSON; the built-in instance for the task when absent.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true, action = clap::ArgAction::Set)]
    pub n_list: Vec<usize>,
    /// Replications per sample size.
    #[arg(long, default_value_t = 30)]
    pub reps: usize,
    /// Pool index of the evaluation point for `pointwise`.
    #[arg(long, default_value_t = 0)]
    pub x_index: usize,
    /// Override the entropy exponent of the tuning rule.
    #[arg(long, value_parser = parse_positive)]
    pub gamma: Option<f64>,
    /// Override the bandwidth constant of the tuning rule.
    #[arg(long, value_parser = parse_positive)]
    pub d: Option<f64>,
    /// Override the ridge exponent of the tuning rule.
    #[arg(long, value_parser = parse_eta)]
    pub eta: Option<f64>,
    /// Radius window `lo,hi` of an entropy envelope of the pool; each tuned
    /// `(h, delta_n)` is checked against it and violations are reported on
    /// stderr.
    #[arg(long, value_parser = parse_window)]
    pub envelope_window: Option<Window>,
    /// Also write an SVG chart of the report here.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

fn load_instance(a: &RiskArgs) -> anyhow::Result<LoadedInstance> {
    Ok(match &a.instance {
        Some(p) => {
            InstanceSpec::load(p).with_context(|| format!("loading instance {}", p.display()))?
        }
        None => {
            let spec = match a.task {
                TaskArg::Classify => default_classification_spec(),
                TaskArg::Regress | TaskArg::Pointwise => default_regression_spec(),
            };
            spec.build(Path::new("."))?
        }
    })
}

fn tuning_rule(a: &RiskArgs, rule: TuningRule) -> metric_entropy_lab::Result<TuningRule> {
    if a.gamma.is_none() && a.d.is_none() && a.eta.is_none() {
        return Ok(rule);
    }
    match rule {
        TuningRule::LogRate { gamma, d, eta } => Ok(TuningRule::LogRate {
            gamma: a.gamma.unwrap_or(gamma),
            d: a.d.unwrap_or(d),
            eta: a.eta.unwrap_or(eta),
        }),
        TuningRule::Fixed { .. } => Err(Error::Domain(
            "--gamma, --d and --eta only apply to a log_rate tuning rule".into(),
        )),
    }
}

fn check_domain(a: &RiskArgs, inst: &LoadedInstance, rule: TuningRule) -> anyhow::Result<()> {
    let (Some(w), TuningRule::LogRate { gamma, .. }) = (a.envelope_window, rule) else {
        return Ok(());
    };
    let env = envelope_for(inst.points(), gamma, (w.lo, w.hi))?;
    if env.is_degenerate() {
        eprintln!(
            "warning: entropy envelope on [{}, {}] is degenerate",
            w.lo, w.hi
        );
    }
    for &n in &a.n_list {
        if let Some(msg) = rule.tuning(n)?.domain_violation(&env) {
            eprintln!("warning: n = {n}: {msg}");
        }
    }
    Ok(())
}

pub fn risk(a: &RiskArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let inst = load_instance(a)?;
    let rule = tuning_rule(a, inst.spec.tuning)?;
    check_domain(a, &inst, rule)?;
    let mut rows = Vec::with_capacity(a.n_list.len());
    for &n in &a.n_list {
        let row = with_threads(ctx.threads, |exec| -> metric_entropy_lab::Result<RiskRow> {
            match (&inst.model, a.task) {
                (Model::Regression(m), TaskArg::Regress | TaskArg::Pointwise) => {
                    let tuning = rule.tuning(n)?;
                    let est = if a.task == TaskArg::Regress {
                        integrated_sq_risk(m, &tuning, n, a.reps, ctx.seed, exec)?
                    } else {
                        pointwise_risk(m, &tuning, a.x_index, n, a.reps, ctx.seed, exec)?
                    };
                    Ok(RiskRow {
                        n,
                        estimate: est.estimate,
                        se: est.se,
                        h: tuning.h,
                        delta_n: Some(tuning.delta_n),
                        reps: a.reps,
                    })
                }
                (Model::Classification(m), TaskArg::Classify) => {
                    let h = rule.bandwidth(n)?;
                    let est = excess_risk(m, h, n, a.reps, ctx.seed, exec)?;
                    Ok(RiskRow {
                        n,
                        estimate: est.estimate,
                        se: est.se,
                        h,
                        delta_n: None,
                        reps: a.reps,
                    })
                }
                (Model::Regression(_), TaskArg::Classify) => Err(Error::Domain(
                    "task `classify` needs a classification instance".into(),
                )),
                (Model::Classification(_), _) => Err(Error::Domain(format!(
                    "task `{}` needs a regression instance",
                    if a.task == TaskArg::Regress {
                        "regress"
                    } else {
                        "pointwise"
                    }
                ))),
            }
        })?;
        rows.push(row);
    }
    let report = RiskReport {
        rows,
        seed: ctx.seed,
    };
    if let Some(path) = &a.svg {
        let title = match a.task {
            TaskArg::Regress => "integrated squared risk",
            TaskArg::Classify => "excess classification risk",
            TaskArg::Pointwise => "pointwise squared risk",
        };
        std::fs::write(
            path,
            crate::svg::risk_chart(&report, title, &ctx.comment()[0]),
        )?;
    }
    let mut buf = Vec::new();
    report.write_csv(&mut buf, &ctx.comment())?;
    ctx.emit(&buf)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Regression,
    Classification,
}

#[derive(Args, Debug, Serialize)]
pub struct RateArgs {
    /// Risk report CSV as written by `risk`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_parser = parse_beta)]
    pub beta: f64,
    #[arg(long, value_parser = parse_positive)]
    pub gamma: f64,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub fn rate(a: &RateArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let report = RiskReport::read_csv(open(&a.report)?)?;
    let kind = match a.kind {
        KindArg::Regression => RiskKind::Regression,
        KindArg::Classification => RiskKind::Classification,
    };
    let points: Vec<(usize, f64)> = report.rows.iter().map(|r| (r.n, r.estimate)).collect();
    let fit = rate_fit(&points, a.beta, a.gamma, kind)?;
    ctx.emit_json(serde_json::to_value(&fit)?)
}
