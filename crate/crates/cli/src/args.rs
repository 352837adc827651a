use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "svi2r", version, about = "Two-strain vaccination epidemic model: simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model and write trajectories, peaks and optional plots.
    Simulate(SimulateArgs),
    /// Equilibria, reproduction numbers, stability, sensitivity and
    /// bifurcation in one JSON document.
    Analyze(CommonArgs),
    /// Fit transmission and mutation rates to a case series.
    Fit(FitArgs),
    /// Sensitivity indices of both reproduction numbers.
    Sensitivity(CommonArgs),
    /// Bifurcation constants at the threshold of each strain.
    Bifurcation(CommonArgs),
    /// Disease-free and endemic equilibria with their stability.
    Equilibria(CommonArgs),
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a) => &a.common,
            Command::Fit(a) => &a.common,
            Command::Analyze(c) | Command::Sensitivity(c) | Command::Bifurcation(c) | Command::Equilibria(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Analyze(_) => "analyze",
            Command::Fit(_) => "fit",
            Command::Sensitivity(_) => "sensitivity",
            Command::Bifurcation(_) => "bifurcation",
            Command::Equilibria(_) => "equilibria",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override one model parameter (repeatable), e.g. `--param beta2=5e-9`.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_assignment)]
    pub params: Vec<(String, f64)>,

    /// Override one initial compartment (repeatable): S, V, I1, I2 or R.
    #[arg(long = "init", value_name = "COMPARTMENT=VALUE", value_parser = parse_assignment)]
    pub init: Vec<(String, f64)>,

    /// Run once per value of a parameter, e.g. `--sweep vaccine_efficacy=0,0.7,0.9`.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    pub sweep: Option<String>,

    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Also write SVG line charts.
    #[arg(long)]
    pub svg: bool,

    /// Seed for anything random, such as synthetic case noise [default: 0].
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rk4,
    Dp45,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Compartment for peaks and plots: S, V, I1, I2 or R [default: I2].
    #[arg(long, value_name = "COLUMN")]
    pub column: Option<String>,

    /// Simulated days [default: 200].
    #[arg(long, value_name = "DAYS")]
    pub t_end: Option<f64>,

    /// Integration method [default: dp45].
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// RK4 step in days [default: 0.01].
    #[arg(long, value_name = "DAYS")]
    pub step: Option<f64>,

    /// Spacing of output rows in days [default: 0.5].
    #[arg(long, value_name = "DAYS")]
    pub output_interval: Option<f64>,

    /// Also write a synthetic daily case series of this many days.
    #[arg(long, value_name = "DAYS")]
    pub cases: Option<u32>,

    /// Log-scale standard deviation of multiplicative case noise [default: 0].
    #[arg(long, value_name = "REL")]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObservableArg {
    ActiveInfectedTotal,
    DailyNewInfections,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Case series CSV with header `day,observed`.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,

    /// What the observed column counts [default: active-infected-total].
    #[arg(long, value_enum)]
    pub observable: Option<ObservableArg>,

    /// Comma-separated parameters to fit, or `none` [default: beta1,beta2,mutation_rate].
    #[arg(long, value_name = "KEYS")]
    pub free: Option<String>,

    /// Objective evaluation budget [default: 4000].
    #[arg(long, value_name = "N")]
    pub max_evals: Option<usize>,
}

fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    let value: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("beta1 = 2e-9").unwrap(), ("beta1".into(), 2e-9));
        assert!(parse_assignment("beta1").is_err());
        assert!(parse_assignment("beta1=x").is_err());
    }
}
