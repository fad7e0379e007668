//! `generate`, `entropy` and `gamma-fit`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use metric_entropy_lab::dataset::Dataset;
use metric_entropy_lab::entropy::{
    entropy_profile, envelope_with_gamma, fit_gamma, EntropyProfile, GreedyBound, ProfileOptions,
    DEFAULT_EXACT_THRESHOLD,
};
use metric_entropy_lab::exec::with_threads;
use metric_entropy_lab::instance::{generate_curves, CurveClass};
use metric_entropy_lab::{Error, Grid, PointSet};
use serde::Serialize;

use crate::args::{
    metric, open, parse_metric, parse_positive, parse_window, read_dataset, CommonArgs, Window,
};
use crate::Ctx;

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassArg {
    Lipschitz,
    Monotone,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub class: ClassArg,
    /// Number of curves.
    #[arg(long)]
    pub n: usize,
    /// Number of equispaced grid points on [0, 1].
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    /// Lipschitz constant M of the lipschitz class.
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub lipschitz: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub fn generate(a: &GenerateArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let class = match a.class {
        ClassArg::Lipschitz => CurveClass::Lipschitz,
        ClassArg::Monotone => CurveClass::Monotone,
    };
    let curves = generate_curves(class, a.n, a.grid, a.lipschitz, ctx.seed)?;
    let ds = Dataset::new(Grid::uniform(a.grid)?, curves);
    let mut buf = Vec::new();
    ds.write(&mut buf, &ctx.comment())?;
    ctx.emit(&buf)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GreedyArg {
    Upper,
    Lower,
}

#[derive(Args, Debug, Serialize)]
pub struct EntropyArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "sup", value_parser = parse_metric)]
    pub metric: String,
    /// Strictly decreasing radii, comma separated.
    #[arg(long, value_delimiter = ',', required = true, action = clap::ArgAction::Set, value_parser = parse_positive)]
    pub radii: Vec<f64>,
    /// Restrict ball centres to the data. Otherwise centres may also be
    /// pairwise midpoints of the data.
    #[arg(long)]
    pub intrinsic: bool,
    /// Largest set size for exact counts; larger sets get greedy bounds.
    #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
    pub exact_threshold: usize,
    /// Greedy bound reported above the threshold.
    #[arg(long, value_enum, default_value = "upper")]
    pub greedy: GreedyArg,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub fn entropy(a: &EntropyArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let ds = read_dataset(&a.input)?;
    let ps = PointSet::new(ds.points, metric(&a.metric)?)?;
    let opts = ProfileOptions {
        intrinsic: a.intrinsic,
        exact_threshold: a.exact_threshold,
        greedy: match a.greedy {
            GreedyArg::Upper => GreedyBound::Upper,
            GreedyArg::Lower => GreedyBound::Lower,
        },
    };
    let profile = with_threads(ctx.threads, |exec| {
        entropy_profile(&ps, &a.radii, opts, exec)
    })?;
    let mut buf = Vec::new();
    profile.write_csv(&mut buf, &ctx.comment())?;
    ctx.emit(&buf)
}

#[derive(Args, Debug, Serialize)]
pub struct GammaFitArgs {
    /// Profile CSV as written by `entropy`.
    #[arg(long)]
    pub profile: PathBuf,
    /// Radius window `lo,hi`; defaults to the span of the profile.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<Window>,
    /// Fix the exponent and fit only the constants.
    #[arg(long, value_parser = parse_positive)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub common: CommonArgs,
}

pub fn gamma_fit(a: &GammaFitArgs, ctx: &Ctx) -> anyhow::Result<()> {
    let file = open(&a.profile)?;
    let profile = EntropyProfile::read_csv(file)?;
    if profile.is_empty() {
        return Err(Error::EmptyInput("profile has no rows".into()).into());
    }
    let window = match a.window {
        Some(w) => (w.lo, w.hi),
        None => {
            let r = profile.radii();
            (r[r.len() - 1], r[0])
        }
    };
    let env = match a.gamma {
        Some(g) => envelope_with_gamma(&profile, window, g)?,
        None => fit_gamma(&profile, window)?,
    };
    ctx.emit_json(serde_json::json!({
        "gamma": env.gamma,
        "c_low": env.c_low,
        "c_high": env.c_high,
        "s0": env.s0,
        "residual": env.fit_residual,
        "degenerate": env.is_degenerate(),
    }))
}
