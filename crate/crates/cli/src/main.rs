//! `metric-entropy-lab` command-line tool.
//!
//! Exit status: 0 on success, 2 on invalid input or configuration, 3 when a
//! run fails for any other reason.

mod args;
mod config;
mod data;
mod estimate;
mod lowerbound;
mod risk;
mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::args::CommonArgs;
use crate::config::{config_hash, inject_config, resolve_seed, TOOL, VERSION};

#[derive(Parser, Debug)]
#[command(
    name = "metric-entropy-lab",
    version,
    about = "Kernel estimators, metric entropy and hard instances on functional data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Random curves on a uniform grid.
    Generate(data::GenerateArgs),
    /// Covering-number profile of a dataset.
    Entropy(data::EntropyArgs),
    /// Entropy exponent and envelope constants from a profile.
    GammaFit(data::GammaFitArgs),
    /// Truncated Nadaraya-Watson predictions.
    Regress(estimate::RegressArgs),
    /// Kernel plug-in classification.
    Classify(estimate::ClassifyArgs),
    /// Hypercube-indexed hard instance with its audit.
    Lowerbound(lowerbound::LowerboundArgs),
    /// Monte Carlo risk over a list of sample sizes.
    Risk(risk::RiskArgs),
    /// Log-log rate slope of a risk report.
    Rate(risk::RateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Entropy(_) => "entropy",
            Command::GammaFit(_) => "gamma-fit",
            Command::Regress(_) => "regress",
            Command::Classify(_) => "classify",
            Command::Lowerbound(_) => "lowerbound",
            Command::Risk(_) => "risk",
            Command::Rate(_) => "rate",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Generate(a) => &a.common,
            Command::Entropy(a) => &a.common,
            Command::GammaFit(a) => &a.common,
            Command::Regress(a) => &a.common,
            Command::Classify(a) => &a.common,
            Command::Lowerbound(a) => &a.common,
            Command::Risk(a) => &a.common,
            Command::Rate(a) => &a.common,
        }
    }

    fn args_json(&self) -> serde_json::Result<Value> {
        fn to<T: Serialize>(t: &T) -> serde_json::Result<Value> {
            serde_json::to_value(t)
        }
        match self {
            Command::Generate(a) => to(a),
            Command::Entropy(a) => to(a),
            Command::GammaFit(a) => to(a),
            Command::Regress(a) => to(a),
            Command::Classify(a) => to(a),
            Command::Lowerbound(a) => to(a),
            Command::Risk(a) => to(a),
            Command::Rate(a) => to(a),
        }
    }
}

/// Per-run state shared by the subcommands.
pub struct Ctx {
    pub seed: u64,
    pub hash: String,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Ctx {
    /// Header line carried by every CSV output.
    pub fn comment(&self) -> Vec<String> {
        vec![format!(
            "{TOOL} {VERSION} seed={} config={}",
            self.seed, self.hash
        )]
    }

    pub fn meta(&self) -> Value {
        serde_json::json!({
            "tool": TOOL,
            "version": VERSION,
            "seed": self.seed,
            "config": self.hash,
        })
    }

    /// Writes `bytes` to `--out`, or to stdout.
    pub fn emit(&self, bytes: &[u8]) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => {
                std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(bytes)?;
                stdout.flush()?;
            }
        }
        Ok(())
    }

    /// Pretty JSON with a `_meta` member, newline-terminated.
    pub fn emit_json(&self, mut value: Value) -> anyhow::Result<()> {
        if let Value::Object(m) = &mut value {
            m.insert("_meta".into(), self.meta());
        }
        let mut bytes = serde_json::to_vec_pretty(&value)?;
        bytes.push(b'\n');
        self.emit(&bytes)
    }
}

/// The error chain joined by `: `, skipping causes whose text the previous
/// message already ends with.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|cause| {
        cause
            .downcast_ref::<metric_entropy_lab::Error>()
            .is_some_and(|e| e.is_validation())
    });
    if validation {
        2
    } else {
        3
    }
}

fn run(argv: Vec<OsString>) -> u8 {
    let argv = match inject_config(argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let cli = match cmd
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let common = cli.command.common();
    let seed = match resolve_seed(common.seed) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let args = cli.command.args_json().expect("arguments serialize");
    let ctx = Ctx {
        seed,
        hash: config_hash(cli.command.name(), seed, &args),
        threads: common.threads,
        out: common.out.clone(),
    };
    let result = match &cli.command {
        Command::Generate(a) => data::generate(a, &ctx),
        Command::Entropy(a) => data::entropy(a, &ctx),
        Command::GammaFit(a) => data::gamma_fit(a, &ctx),
        Command::Regress(a) => estimate::regress(a, &ctx),
        Command::Classify(a) => estimate::classify(a, &ctx),
        Command::Lowerbound(a) => lowerbound::lowerbound(a, &ctx),
        Command::Risk(a) => risk::risk(a, &ctx),
        Command::Rate(a) => risk::rate(a, &ctx),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os().collect()))
}
