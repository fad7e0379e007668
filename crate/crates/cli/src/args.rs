//! Shared flags and value parsers.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use metric_entropy_lab::dataset::Dataset;
use metric_entropy_lab::MetricSpec;
use serde::Serialize;

/// Flags accepted by every subcommand. None of them enters the config hash
/// except the seed, which is hashed separately.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON object of flag values; flags on the command line win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed (falls back to METRIC_ENTROPY_LAB_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, default_value_t = 1, value_parser = parse_threads)]
    pub threads: usize,
    /// Output file (stdout when absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Closed interval `lo,hi` of radii.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_threads(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(t) if t >= 1 => Ok(t),
        _ => Err(format!("threads must be a positive integer, got `{s}`")),
    }
}

pub fn parse_window(s: &str) -> Result<Window, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `lo,hi`, got `{s}`"));
    }
    let (lo, hi) = (number(parts[0])?, number(parts[1])?);
    if !(lo > 0.0 && hi > lo) {
        return Err(format!("window must satisfy 0 < lo < hi, got ({lo}, {hi})"));
    }
    Ok(Window { lo, hi })
}

pub fn parse_positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

pub fn parse_eta(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!(
            "eta must lie in the open interval (0, 1/2), got {v}"
        ))
    }
}

pub fn parse_beta(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("beta must lie in (0, 1], got {v}"))
    }
}

pub fn parse_kappa(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("kappa must be nonnegative, got {v}"))
    }
}

/// Accepts `sup`, `l1`, `l2` or `lp:<p>` with `p >= 1`; returns the
/// normalised spelling.
pub fn parse_metric(s: &str) -> Result<String, String> {
    MetricSpec::parse(s)
        .map(|m| m.to_string())
        .map_err(|e| e.to_string())
}

pub fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    Dataset::read_path(path).with_context(|| format!("reading {}", path.display()))
}

pub fn open(path: &Path) -> anyhow::Result<std::fs::File> {
    std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

pub fn metric(s: &str) -> metric_entropy_lab::Result<MetricSpec> {
    MetricSpec::parse(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_domain() {
        assert_eq!(parse_eta("0.25"), Ok(0.25));
        let err = parse_eta("0.7").unwrap_err();
        assert!(err.contains("(0, 1/2)"), "{err}");
        assert!(parse_eta("0").is_err());
        assert!(parse_eta("0.5").is_err());
    }

    #[test]
    fn beta_kappa_metric_domains() {
        assert!(parse_beta("1").is_ok());
        assert!(parse_beta("1.5").is_err());
        assert!(parse_kappa("0").is_ok());
        assert!(parse_kappa("-0.1").is_err());
        assert_eq!(parse_metric("L1").unwrap(), "l1");
        assert_eq!(parse_metric("lp:3").unwrap(), "lp:3");
        assert!(parse_metric("lp:0.5").is_err());
    }

    #[test]
    fn windows() {
        let w = parse_window("0.1,0.4").unwrap();
        assert_eq!((w.lo, w.hi), (0.1, 0.4));
        assert!(parse_window("0.4,0.1").is_err());
        assert!(parse_window("0.4").is_err());
    }
}
