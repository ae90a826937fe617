use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use phasemod::parallel;
use phasemod::runner::{run_scenario, run_sweep, Scenario, ScenarioName};

#[derive(Parser, Debug)]
#[command(name = "phasemod", version, about = "Injection phase-modulation simulator and design tool")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML config; its sections replace the built-in defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every noise stream; required when noise is on.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output path prefix; tables go to <PREFIX><name>.csv.
    #[arg(long, global = true, value_name = "PREFIX", default_value = "")]
    out: String,
    /// Worker threads for sweeps and ensembles.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Config override, e.g. --set master.alpha=4 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Operating points of both lasers.
    Steady,
    /// Delta I_pi by the numerical, first-order and simple rules.
    Dipi,
    /// Delta I_pi against gain compression for several alpha.
    Fig2,
    /// Noise-free train with alternating phase steps, plus the fringe scan.
    Fig3,
    /// Master turn-on with heating: drift of the pair phase steps.
    Fig4,
    /// Random coding error rate against R over the coupling list.
    Fig5,
    /// Single trajectory from the config.
    Simulate,
    /// Thermal fit check and step response.
    Thermal,
    /// Repeat a scenario over values of one config key.
    Sweep {
        /// Config key, `section.key` or an unambiguous bare name.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long, default_value = "fig5")]
        scenario: String,
    },
}

/// Command line as recorded in the output manifest. The output prefix is left
/// out so that identical runs written to different places compare equal.
fn recorded_command_line() -> String {
    let mut parts = vec!["phasemod".to_string()];
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--out" {
            args.next();
        } else if !a.starts_with("--out=") {
            parts.push(a);
        }
    }
    parts.join(" ")
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = cli.global;
    let (name, sweep) = match cli.command {
        Command::Steady => (ScenarioName::Steady, None),
        Command::Dipi => (ScenarioName::Dipi, None),
        Command::Fig2 => (ScenarioName::Fig2, None),
        Command::Fig3 => (ScenarioName::Fig3, None),
        Command::Fig4 => (ScenarioName::Fig4, None),
        Command::Fig5 => (ScenarioName::Fig5, None),
        Command::Simulate => (ScenarioName::Custom, None),
        Command::Thermal => (ScenarioName::Thermal, None),
        Command::Sweep { axis, values, scenario } => (scenario.parse()?, Some((axis, values))),
    };
    let mut s = Scenario::new(name);
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        s.config_text = Some(text);
        s.config_label = path.display().to_string();
    }
    s.overrides = g.set;
    s.seed = g.seed;
    s.out = g.out;
    s.command_line = recorded_command_line();
    let written = parallel::with_workers(g.workers, || match &sweep {
        Some((axis, values)) => run_sweep(axis, values, &s),
        None => run_scenario(&s),
    })?;
    for p in written {
        println!("{}", p.display());
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
