use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerial_market::abm::{compare, ode_reference, run, AbmSetup};
use aerial_market::config::{Scenario, ScenarioConfig};
use aerial_market::cooperation::compare_cooperation;
use aerial_market::equilibrium::{comparison_table, solve, EconParams, Game};
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Scenario runner for the aerial access market model.
#[derive(Parser)]
#[command(name = "aerial-market", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON scenario file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    game: Option<Game>,
    #[arg(long, value_enum)]
    coop: Option<Switch>,
    /// Number of agent-based replications.
    #[arg(long)]
    seeds: Option<u64>,
    /// Simulated horizon (min).
    #[arg(long)]
    horizon: Option<f64>,
    /// Integration step of the mean-field model (min).
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Initial-game equilibria of both games (JSON and text table).
    Equilibrium {
        #[command(flatten)]
        run: RunArgs,
        /// Overrides the top quality derived from the throughput law.
        #[arg(long)]
        s_max: Option<f64>,
    },
    /// Mean-field trajectory as CSV.
    Dynamics(RunArgs),
    /// Standalone and cooperative trajectories plus the Shapley split.
    Coop(RunArgs),
    /// Agent-based runs: one CSV per seed plus mean and standard deviation.
    Abm(RunArgs),
    /// Agent-based mean against the mean-field model; fails above the tolerance.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        /// Largest admissible share deviation.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Selects CSV columns into a whitespace-separated table for plotting.
    Columns {
        input: PathBuf,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Config(anyhow::Error),
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

fn load(args: &RunArgs) -> Result<Scenario, Failure> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::from_file(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Config)?,
        None => ScenarioConfig::default(),
    };
    if let Some(g) = args.game {
        config.game = g;
    }
    if let Some(c) = args.coop {
        config.coop = c == Switch::On;
    }
    if let Some(n) = args.seeds {
        config.seeds = n;
    }
    if let Some(h) = args.horizon {
        config.horizon = h;
    }
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    Scenario::new(config).map_err(|e| Failure::Config(e.into()))
}

fn out_dir(args: &RunArgs) -> anyhow::Result<&Path> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    Ok(&args.out)
}

fn stem(s: &Scenario) -> String {
    let c = &s.config;
    if c.coop {
        format!("{}_coop", c.game)
    } else {
        c.game.to_string()
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn equilibrium(args: &RunArgs, s_max: Option<f64>) -> Outcome {
    let s = load(args)?;
    let econ = match s_max {
        Some(v) => EconParams::new(v, s.econ.theta_max, s.econ.nu).map_err(|e| Failure::Config(e.into()))?,
        None => s.econ,
    };
    let b = solve(Game::Bertrand, &econ).map_err(anyhow::Error::from)?;
    let c = solve(Game::Cournot, &econ).map_err(anyhow::Error::from)?;
    let dir = out_dir(args)?;
    write_json(
        &dir.join("equilibrium.json"),
        &json!({ "econ": econ, "bertrand": b, "cournot": c }),
    )?;
    let table = comparison_table(&b, &c);
    fs::write(dir.join("equilibrium.txt"), &table).context("writing equilibrium.txt")?;
    print!("{table}");
    Ok(())
}

fn dynamics(args: &RunArgs) -> Outcome {
    let s = load(args)?;
    let c = &s.config;
    let model = s.model(c.game, c.coop).map_err(anyhow::Error::from)?;
    let traj = model
        .integrate(model.initial_state(), c.horizon, c.dt, s.econ.nu)
        .map_err(anyhow::Error::from)?;
    let path = out_dir(args)?.join(format!("dynamics_{}.csv", stem(&s)));
    traj.write_csv_file(&path)
        .with_context(|| format!("writing {}", path.display()))?;
    if let Some(t) = model.settling_time(&traj, 1e-4) {
        println!("settled at t = {t:.2} min");
    }
    println!("{}", path.display());
    Ok(())
}

fn coop(args: &RunArgs) -> Outcome {
    let s = load(args)?;
    let c = &s.config;
    let (plain, joint, summary) = compare_cooperation(&s, c.game, c.horizon, c.dt).map_err(anyhow::Error::from)?;
    let dir = out_dir(args)?;
    let game = c.game;
    plain
        .write_csv_file(&dir.join(format!("coop_{game}_standalone.csv")))
        .context("writing standalone CSV")?;
    joint
        .write_csv_file(&dir.join(format!("coop_{game}_cooperative.csv")))
        .context("writing cooperative CSV")?;
    write_json(&dir.join(format!("coop_{game}_summary.json")), &json!(summary))?;
    let shapley = json!(summary.shapley);
    write_json(&dir.join(format!("shapley_{game}.json")), &shapley)?;
    println!("{shapley}");
    Ok(())
}

fn seeds(s: &Scenario) -> Vec<u64> {
    (1..=s.config.seeds).collect()
}

fn abm(args: &RunArgs) -> Outcome {
    let s = load(args)?;
    let c = &s.config;
    let setup = AbmSetup::new(&s, c.game, c.coop).map_err(anyhow::Error::from)?;
    let result = run(&setup, &seeds(&s), c.horizon);
    let dir = out_dir(args)?;
    let stem = stem(&s);
    for (seed, traj) in result.seeds.iter().zip(&result.runs) {
        let path = dir.join(format!("abm_{stem}_seed{seed}.csv"));
        traj.write_csv_file(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    result
        .mean
        .write_csv_file(&dir.join(format!("abm_{stem}_mean.csv")))
        .context("writing mean CSV")?;
    result
        .std
        .write_csv_file(&dir.join(format!("abm_{stem}_std.csv")))
        .context("writing std CSV")?;
    println!("{} seeds written to {}", result.seeds.len(), dir.display());
    Ok(())
}

fn validate(args: &RunArgs, tolerance: f64) -> Outcome {
    let s = load(args)?;
    let c = &s.config;
    let setup = AbmSetup::new(&s, c.game, c.coop).map_err(anyhow::Error::from)?;
    let result = run(&setup, &seeds(&s), c.horizon);
    let (_, ode) = ode_reference(&s, &setup, c.horizon, c.dt).map_err(anyhow::Error::from)?;
    let dev = compare(&ode, &result.mean).map_err(anyhow::Error::from)?;
    let pass = dev.max_share <= tolerance;
    let dir = out_dir(args)?;
    let stem = stem(&s);
    ode.write_csv_file(&dir.join(format!("validate_{stem}_ode.csv")))
        .context("writing ODE CSV")?;
    result
        .mean
        .write_csv_file(&dir.join(format!("validate_{stem}_abm.csv")))
        .context("writing ABM CSV")?;
    write_json(
        &dir.join(format!("validate_{stem}.json")),
        &json!({
            "game": c.game,
            "coop": c.coop,
            "seeds": result.seeds,
            "horizon": c.horizon,
            "tolerance": tolerance,
            "max_share": dev.max_share,
            "deviation": dev,
            "pass": pass,
        }),
    )?;
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict}: max share deviation {:.4} (tolerance {tolerance})",
        dev.max_share
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "share deviation {:.4} exceeds {tolerance}",
            dev.max_share
        )))
    }
}

fn columns(input: &Path, names: &[String], output: Option<&Path>) -> Outcome {
    let mut reader = csv::Reader::from_path(input).with_context(|| format!("reading {}", input.display()))?;
    let header = reader.headers().context("reading header")?.clone();
    let idx = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| anyhow!("no column `{n}` in {}", input.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut text = format!("# {}\n", names.join(" "));
    for rec in reader.records() {
        let rec = rec.context("reading record")?;
        let row: Vec<&str> = idx.iter().map(|&i| rec.get(i).unwrap_or("")).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(anyhow::Error::from(e).into()),
            _ => {}
        },
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Config(anyhow!("SIM_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match &cli.command {
        Command::Equilibrium { run, s_max } => equilibrium(run, *s_max),
        Command::Dynamics(run) => dynamics(run),
        Command::Coop(run) => coop(run),
        Command::Abm(run) => abm(run),
        Command::Validate { run, tolerance } => validate(run, *tolerance),
        Command::Columns {
            input,
            columns: names,
            output,
        } => columns(input, names, output.as_deref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
