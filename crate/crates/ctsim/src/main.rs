use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ctsim::output::{emit_results, read_runs, RunRecord};
use ctsim::{run_episode_with, run_experiment, welch_t_test, ScenarioConfig};
use ctsim_core::PolicyKind;

#[derive(Parser)]
#[command(name = "ctsim", version, about = "Multi-agent continuous transportation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode and print its result as JSON.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        policy: Option<String>,
        /// Number of transportation agents.
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Include the cumulative delivered count after every tick.
        #[arg(long)]
        series: bool,
    },
    /// Run the policy × agent count × seed sweep and write runs.csv and summary.csv.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Comma-separated policy names.
        #[arg(long)]
        policy: Option<String>,
        /// Agent counts, e.g. `4,6,8` or `1..=8`.
        #[arg(long)]
        agents: Option<String>,
        /// Seeds, e.g. `0..30` or `1,2,3`.
        #[arg(long)]
        seeds: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch's t-test on per-seed rates from two runs.csv files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Only rows of this policy from the first file.
        #[arg(long)]
        policy_a: Option<String>,
        /// Only rows of this policy from the second file.
        #[arg(long)]
        policy_b: Option<String>,
        /// Only this agent count.
        #[arg(long)]
        agents: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scenario configuration; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    horizon: Option<u64>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::from_json_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        Ok(cfg)
    }
}

fn parse_policy(s: &str) -> anyhow::Result<PolicyKind> {
    Ok(s.trim().parse::<PolicyKind>()?)
}

/// Parses `a,b,c`, `a..b` (exclusive) or `a..=b`, or a mix joined by commas.
fn parse_list<T>(spec: &str) -> anyhow::Result<Vec<T>>
where
    T: std::str::FromStr + TryFrom<u64>,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo.trim().parse().with_context(|| format!("bad range {part:?}"))?;
            let (hi, inclusive) = match hi.strip_prefix('=') {
                Some(h) => (h, true),
                None => (hi, false),
            };
            let hi: u64 = hi.trim().parse().with_context(|| format!("bad range {part:?}"))?;
            let end = if inclusive { hi + 1 } else { hi };
            for v in lo..end {
                out.push(T::try_from(v).map_err(|_| anyhow::anyhow!("{v} out of range"))?);
            }
        } else {
            out.push(part.parse().with_context(|| format!("bad list element {part:?}"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list {spec:?}");
    }
    Ok(out)
}

fn select_rates(rows: &[RunRecord], policy: Option<PolicyKind>, agents: usize) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.agents == agents)
        .filter(|r| policy.is_none_or(|p| r.policy.parse::<PolicyKind>().ok() == Some(p)))
        .map(|r| r.rate)
        .collect()
}

fn compare(a: &Path, b: &Path, policy_a: Option<PolicyKind>, policy_b: Option<PolicyKind>, agents: Option<usize>) -> anyhow::Result<()> {
    let rows_a = read_runs(a)?;
    let rows_b = read_runs(b)?;
    let counts_a: BTreeSet<usize> = rows_a.iter().map(|r| r.agents).collect();
    let counts_b: BTreeSet<usize> = rows_b.iter().map(|r| r.agents).collect();
    let shared: Vec<usize> = counts_a.intersection(&counts_b).copied().filter(|n| agents.is_none_or(|a| a == *n)).collect();
    if shared.is_empty() {
        bail!("no agent count present in both {} and {}", a.display(), b.display());
    }
    println!("agents,mean_a,mean_b,t,df,p");
    for n in shared {
        let ra = select_rates(&rows_a, policy_a, n);
        let rb = select_rates(&rows_b, policy_b, n);
        let w = welch_t_test(&ra, &rb).with_context(|| format!("agent count {n}"))?;
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        println!("{n},{},{},{},{},{}", mean(&ra), mean(&rb), w.t, w.df, w.p);
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { common, policy, agents, seed, series } => {
            let mut cfg = common.load()?;
            if let Some(p) = policy {
                cfg.policy = parse_policy(&p)?;
            }
            let agents = agents.unwrap_or(cfg.agents.count);
            let seed = seed.unwrap_or(cfg.seed);
            let result = run_episode_with(&cfg, cfg.policy, agents, seed, series)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
        Command::Experiment { common, policy, agents, seeds, out } => {
            let mut cfg = common.load()?;
            if let Some(p) = policy {
                cfg.policies = p.split(',').map(parse_policy).collect::<anyhow::Result<_>>()?;
            }
            if let Some(a) = agents {
                cfg.agent_counts = parse_list(&a)?;
            }
            if let Some(s) = seeds {
                cfg.seeds = parse_list(&s)?;
            }
            cfg.validate()?;
            let summary = run_experiment(&cfg, &cfg.agent_counts, &cfg.seeds, &cfg.policies)?;
            let (runs, cells) = emit_results(&summary, &out)?;
            for c in &summary.cells {
                let note = if c.is_single_sample() { " (single sample)" } else { "" };
                eprintln!("{:>7} agents={:<3} mean={:.4} std={:.4} n={}{note}", c.policy, c.agents, c.mean_rate, c.std_rate, c.n);
            }
            eprintln!("wrote {} and {}", runs.display(), cells.display());
        }
        Command::Compare { a, b, policy_a, policy_b, agents } => {
            let pa = policy_a.as_deref().map(parse_policy).transpose()?;
            let pb = policy_b.as_deref().map(parse_policy).transpose()?;
            compare(&a, &b, pa, pb, agents)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
