//! `regress` and `classify`.

use std::path::{Path, PathBuf};

use clap::Args;
use metric_entropy_lab::dataset::format_float;
use metric_entropy_lab::estimators::{
    nw_estimate, plugin_classify, select_bandwidth, RegressionTuning,
};
use metric_entropy_lab::exec::with_threads;
use metric_entropy_lab::{Error, SampledFunction};
use serde::Serialize;

use crate::args::{metric, parse_eta, parse_metric, parse_positive, read_dataset, CommonArgs};
use crate::Ctx;

#[derive(Args, Debug, Serialize)]
pub struct RegressArgs {
    /// Training CSV with a leading response column.
    #[arg(long)]
    pub train: PathBuf,
    /// Query CSV; a response column, if present, is ignored.
    #[arg(long)]
    pub query: PathBuf,
    /// Entropy exponent used in the bandwidth rule.
    #[arg(long, value_parser = parse_positive)]
    pub gamma: f64,
    #[arg(long, value_parser = parse_positive)]
    pub d: f64,
    /// Ridge exponent, `delta_n = n^-eta`.
    #[arg(long, value_parser = parse_eta)]
    pub eta: f64,
    #[arg(long, default_value = "sup", value_parser = parse_metric)]
    pub metric: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

fn training_set(path: &Path) -> anyhow::Result<(Vec<SampledFunction>, Vec<f64>)> {
    let ds = read_dataset(path)?;
    let Some((_, ys)) = ds.response else {
        return Err(Error::Domain(format!("{} has no response column", path.display())).into());
    };
    if ds.points.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no records", path.display())).into());
    }
    Ok((ds.points, ys))
}

fn csv_bytes(ctx: &Ctx, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in ctx.comment() {
        buf.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut wtr = csv::Writer::from_writer(buf);
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(r)?;
    }
    Ok(wtr.into_inner().map_err(|e| e.into_error())?)
}

pub fn regress(a: &RegressArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let (xs, ys) = training_set(&a.train)?;
    let queries = read_dataset(&a.query)?.points;
    let metric = metric(&a.metric)?;
    let tuning = RegressionTuning::for_sample_size(xs.len(), a.gamma, a.d, a.eta)?;
    let train: Vec<(SampledFunction, f64)> = xs.into_iter().zip(ys).collect();
    let estimates = with_threads(ctx.threads, |exec| {
        exec.map_indexed(queries.len(), |q| {
            nw_estimate(&train, &queries[q], &tuning, metric)
        })
        .into_iter()
        .collect::<metric_entropy_lab::Result<Vec<_>>>()
    })?;
    let rows = estimates
        .iter()
        .enumerate()
        .map(|(q, e)| {
            vec![
                q.to_string(),
                format_float(e.estimate),
                format_float(e.b_hat),
            ]
        })
        .collect();
    ctx.emit(&csv_bytes(
        ctx,
        &["query_index", "estimate", "b_hat"],
        rows,
    )?)
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    /// Training CSV whose leading column holds labels 0 or 1.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub query: PathBuf,
    /// Bandwidth.
    #[arg(long, value_parser = parse_positive, required_unless_present = "auto_h", conflicts_with = "auto_h")]
    pub h: Option<f64>,
    /// Bandwidth `(d ln n)^(-1/gamma)` from the training size.
    #[arg(long, requires_all = ["gamma", "d"])]
    pub auto_h: bool,
    #[arg(long, value_parser = parse_positive)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = parse_positive)]
    pub d: Option<f64>,
    #[arg(long, default_value = "sup", value_parser = parse_metric)]
    pub metric: String,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub fn classify(a: &ClassifyArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let (xs, ys) = training_set(&a.train)?;
    let labels = ys
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if y == 0.0 {
                Ok(0u8)
            } else if y == 1.0 {
                Ok(1u8)
            } else {
                Err(Error::Domain(format!(
                    "label of record {i} must be 0 or 1, got {y}"
                )))
            }
        })
        .collect::<Result<Vec<u8>, Error>>()?;
    let queries = read_dataset(&a.query)?.points;
    let metric = metric(&a.metric)?;
    let h = match (a.h, a.gamma, a.d) {
        (Some(h), _, _) => h,
        (None, Some(gamma), Some(d)) => select_bandwidth(xs.len(), gamma, d)?,
        _ => return Err(Error::Domain("give --h, or --auto-h with --gamma and --d".into()).into()),
    };
    let train: Vec<(SampledFunction, u8)> = xs.into_iter().zip(labels).collect();
    let decisions = with_threads(ctx.threads, |exec| {
        exec.map_indexed(queries.len(), |q| {
            plugin_classify(&train, &queries[q], h, metric)
        })
        .into_iter()
        .collect::<metric_entropy_lab::Result<Vec<_>>>()
    })?;
    let rows = decisions
        .iter()
        .enumerate()
        .map(|(q, d)| {
            vec![
                q.to_string(),
                d.label.to_string(),
                format_float(d.p_hat_x),
                format_float(d.p_hat_y),
            ]
        })
        .collect();
    ctx.emit(&csv_bytes(
        ctx,
        &["query_index", "label", "p_hat_x", "p_hat_y"],
        rows,
    )?)
}
