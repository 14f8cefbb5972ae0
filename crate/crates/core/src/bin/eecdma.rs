use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eecdma::control::run as run_control;
use eecdma::harness::experiment::build_scenario;
use eecdma::harness::output::emit_tradeoff;
use eecdma::harness::{
    emit_results, load_report, paired_comparison, preset, run_experiment, Metric, ScenarioConfig,
};
use eecdma::metrics;
use eecdma::tradeoff::sweep_tradeoff;
use eecdma::{Algorithm, Error, Receiver, Result};

#[derive(Parser)]
#[command(name = "eecdma", version, about = "Energy-efficient power control for DS/CDMA uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the EE-SE trade-off of one user against fixed interferers.
    Tradeoff(ScenarioArgs),
    /// Monte Carlo run over network realizations.
    Run(ScenarioArgs),
    /// Paired comparison of two finished runs.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        #[arg(long, default_value = "global_ee")]
        metric: String,
    },
    /// Run power control on a single realization and print per-user values.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Number of users; the first value of the sweep when absent.
        #[arg(long)]
        users: Option<usize>,
        #[arg(long, default_value_t = 0)]
        realization: usize,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped scenario: fig2_tradeoff, fig34_mixed, fig34_mixed_n15,
    /// fig56_fullload, fig56_fullload_1mbps.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    receiver: Option<Receiver>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Minimum rate, bit/s.
    #[arg(long)]
    min_rate: Option<f64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut c = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(Error::Config("pass --config <file> or --preset <name>".into())),
        };
        if let Some(s) = self.seed {
            c.monte_carlo.seed = s;
        }
        if let Some(r) = self.realizations {
            c.monte_carlo.realizations = r;
        }
        if let Some(r) = self.receiver {
            c.system.receiver = r;
        }
        if let Some(a) = self.algorithm {
            c.system.algorithm = a;
        }
        if let Some(r) = self.min_rate {
            c.ee.min_rate_bps = r;
        }
        if let Some(o) = &self.out {
            c.output.dir = Some(o.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(config: &ScenarioConfig, fallback: &str) -> PathBuf {
    config
        .output
        .dir
        .clone()
        .unwrap_or_else(|| Path::new("results").join(fallback))
}

fn tradeoff(args: &ScenarioArgs) -> Result<()> {
    let config = args.load()?;
    let setups = config.tradeoff_setups()?;
    let params = config.params();
    let curves = setups
        .iter()
        .map(|s| sweep_tradeoff(s, &params))
        .collect::<Result<Vec<_>>>()?;
    println!("d_interf_m  coupling  max_ee_power_w  lambda_bit_per_s_hz");
    for (s, c) in setups.iter().zip(&curves) {
        println!(
            "{:>10}  {:>8.4}  {:>14.6e}  {:>19.6}",
            s.interferer_distance,
            c.coupling,
            c.sweep_powers[c.max_ee_index],
            c.lambda_gap
        );
    }
    let dir = out_dir(&config, "tradeoff");
    for f in emit_tradeoff(&config, &setups, &curves, &dir)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn run(args: &ScenarioArgs) -> Result<()> {
    let config = args.load()?;
    let report = run_experiment(&config)?;
    for e in &report.errors {
        eprintln!("K={}: {}", e.users, e.message);
    }
    println!("K   sum_rate_bps  sum_power_w   global_ee_bit_per_j  outage");
    for a in &report.aggregates {
        println!(
            "{:<3} {:>12.6e}  {:>11.6e}  {:>19.6e}  {:.4}",
            a.users, a.sum_rate, a.sum_power, a.global_ee, a.outage
        );
    }
    let name = format!("{}_{}", config.system.receiver, config.system.algorithm);
    let files = emit_results(&report, &out_dir(&config, &name))?;
    println!("wrote {}", files.raw.display());
    println!("wrote {}", files.aggregate.display());
    println!("wrote {}", files.metadata.display());
    Ok(())
}

fn compare(a: &Path, b: &Path, metric: &str) -> Result<()> {
    let metric: Metric = metric.parse()?;
    let ra = load_report(a)?;
    let rb = load_report(b)?;
    println!("metric {}: a = {}, b = {}", metric.name(), a.display(), b.display());
    println!("K   pairs  mean_a        mean_b        diff          ci95_half     verdict");
    for row in paired_comparison(&ra, &rb, metric)? {
        println!(
            "{:<3} {:>5}  {:>12.6e}  {:>12.6e}  {:>12.5e}  {:>12.5e}  {}",
            row.users,
            row.pairs,
            row.mean_a,
            row.mean_b,
            row.mean_diff,
            row.half_width,
            row.verdict.as_str()
        );
    }
    Ok(())
}

fn solve(args: &ScenarioArgs, users: Option<usize>, realization: usize) -> Result<()> {
    let config = args.load()?;
    let k = users.unwrap_or(config.user_counts()[0]);
    let (scenario, checksum) = build_scenario(&config, k, realization)?;
    let outcome = run_control(&scenario, config.system.algorithm, &config.verhulst)?;
    let params = scenario.params();
    let st = &outcome.final_state;
    println!(
        "K={k} N={} receiver={} algorithm={} realization={realization} draws={checksum}",
        config.system.processing_gain, config.system.receiver, config.system.algorithm
    );
    println!(
        "converged={} rounds={} removed={:?}",
        outcome.converged, outcome.rounds, outcome.removed_users
    );
    println!("user  gain_power     active  power_w        sinr           target_sinr    rate_bps       utility_bit_per_j");
    for u in 0..k {
        let theta = scenario.qos(u).theta;
        let rate = metrics::rate(st.gamma[u], theta, params.bandwidth);
        let utility = if st.active[u] {
            metrics::utility(st.p[u], st.gamma[u], params, theta)?
        } else {
            0.0
        };
        println!(
            "{:<4}  {:>12.6e}  {:<6}  {:>12.6e}  {:>12.6e}  {:>12.6e}  {:>12.6e}  {:>12.6e}",
            u,
            scenario.channel().gain_power[u],
            st.active[u],
            st.p[u],
            st.gamma[u],
            st.gamma_star[u],
            rate,
            utility
        );
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 2,
        "io" => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Tradeoff(a) => tradeoff(a),
        Command::Run(a) => run(a),
        Command::Compare { run_a, run_b, metric } => compare(run_a, run_b, metric),
        Command::Solve {
            scenario,
            users,
            realization,
        } => solve(scenario, *users, *realization),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
