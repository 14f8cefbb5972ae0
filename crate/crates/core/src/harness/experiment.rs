use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use crate::channel::{draw_channel, draw_placement};
use crate::control::{run, ControlOutcome, Scenario};
use crate::error::{Error, Result};
use crate::metrics::{self, global_ee, global_ee_with_idle};
use crate::spreading::{generate_codes, Receiver};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "EECDMA_WORKERS";

/// Metrics of one network realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub users: usize,
    pub realization: usize,
    pub seed: u64,
    /// `ok`, or `receiver_unavailable` when the decorrelator could not be
    /// built; metrics are NaN in that case.
    pub status: String,
    pub removed: usize,
    /// Removed users over K.
    pub outage: f64,
    /// Sum of the rates of active users, bit/s.
    pub sum_rate: f64,
    /// Sum of transmit powers, W.
    pub sum_tx_power: f64,
    /// Transmit plus circuit power of active users, W.
    pub sum_power: f64,
    /// As `sum_power` with removed users still drawing circuit power, W.
    pub sum_power_retained: f64,
    /// bit/J, removed users excluded.
    pub global_ee: f64,
    /// bit/J, removed users' circuit power counted.
    pub global_ee_retained: f64,
    pub converged: bool,
    pub rounds: usize,
    pub target_limited: bool,
    /// Digest of the placement, channel and code draws.
    pub draw_checksum: String,
}

impl RawRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Per-K means over the successful realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub users: usize,
    pub realizations: usize,
    pub failed: usize,
    pub sum_rate: f64,
    pub sum_tx_power: f64,
    pub sum_power: f64,
    pub sum_power_retained: f64,
    pub global_ee: f64,
    pub global_ee_retained: f64,
    pub outage: f64,
}

/// A user count that could not be simulated at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepError {
    pub users: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub raw: Vec<RawRow>,
    pub aggregates: Vec<AggregateRow>,
    pub errors: Vec<SweepError>,
}

impl RunReport {
    pub fn from_rows(config: ScenarioConfig, mut raw: Vec<RawRow>, errors: Vec<SweepError>) -> Self {
        raw.sort_by_key(|r| (r.users, r.realization));
        let aggregates = aggregate(&raw);
        Self {
            config,
            raw,
            aggregates,
            errors,
        }
    }

    /// Digest over every realization's draw checksum, in row order.
    pub fn draw_fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.raw {
            h.update(r.users.to_le_bytes());
            h.update(r.realization.to_le_bytes());
            h.update(r.draw_checksum.as_bytes());
        }
        hex(&h.finalize())
    }

    pub fn aggregate_for(&self, users: usize) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.users == users)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Per-K arithmetic means of the successful rows, summed in row order.
pub fn aggregate(raw: &[RawRow]) -> Vec<AggregateRow> {
    let mut users: Vec<usize> = raw.iter().map(|r| r.users).collect();
    users.dedup();
    users
        .into_iter()
        .map(|k| {
            let rows: Vec<&RawRow> = raw.iter().filter(|r| r.users == k).collect();
            let ok: Vec<&RawRow> = rows.iter().copied().filter(|r| r.is_ok()).collect();
            let m = |f: fn(&RawRow) -> f64| mean(ok.iter().map(|r| f(r)));
            AggregateRow {
                users: k,
                realizations: ok.len(),
                failed: rows.len() - ok.len(),
                sum_rate: m(|r| r.sum_rate),
                sum_tx_power: m(|r| r.sum_tx_power),
                sum_power: m(|r| r.sum_power),
                sum_power_retained: m(|r| r.sum_power_retained),
                global_ee: m(|r| r.global_ee),
                global_ee_retained: m(|r| r.global_ee_retained),
                outage: m(|r| r.outage),
            }
        })
        .collect()
}

/// Seed of realization `index`; every user count reuses the same seeds.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(index as u64)
}

/// Draws realization `index` with `users` users. Returns the scenario and
/// the digest of its random draws.
pub fn build_scenario(config: &ScenarioConfig, users: usize, index: usize) -> Result<(Scenario, String)> {
    let seed = realization_seed(config.monte_carlo.seed, index);
    let placement = draw_placement(&config.geometry, users, seed)?;
    let channel = draw_channel(
        &placement,
        config.channel.path_loss_exponent,
        config.channel.fading,
        seed,
    )?;
    let codes = generate_codes(config.system.processing_gain, users, seed)?;

    let mut h = Sha256::new();
    for d in &placement.distances {
        h.update(d.to_bits().to_le_bytes());
    }
    for g in &channel.gains {
        h.update(g.re.to_bits().to_le_bytes());
        h.update(g.im.to_bits().to_le_bytes());
    }
    h.update(codes.chips().iter().map(|c| *c as u8).collect::<Vec<u8>>());
    let checksum = hex(&h.finalize()[..16]);

    let scenario = Scenario::new(channel, codes, config.system.receiver, config.params())?;
    Ok((scenario, checksum))
}

/// Metrics of a finished control run.
pub fn outcome_row(
    scenario: &Scenario,
    outcome: &ControlOutcome,
    users: usize,
    realization: usize,
    seed: u64,
    checksum: String,
) -> Result<RawRow> {
    let params = scenario.params();
    let st = &outcome.final_state;
    let active: Vec<usize> = (0..users).filter(|&k| st.active[k]).collect();
    let rates: Vec<f64> = active
        .iter()
        .map(|&k| metrics::rate(st.gamma[k], scenario.qos(k).theta, params.bandwidth))
        .collect();
    let gammas: Vec<f64> = active.iter().map(|&k| st.gamma[k]).collect();
    let powers: Vec<f64> = active.iter().map(|&k| st.p[k]).collect();
    let removed = users - active.len();
    let sum_tx_power: f64 = powers.iter().sum();
    let sum_power = sum_tx_power + active.len() as f64 * params.circuit_power;
    Ok(RawRow {
        users,
        realization,
        seed,
        status: "ok".into(),
        removed,
        outage: removed as f64 / users as f64,
        sum_rate: rates.iter().sum(),
        sum_tx_power,
        sum_power,
        sum_power_retained: sum_power + removed as f64 * params.circuit_power,
        global_ee: global_ee(&rates, &gammas, &powers, params)?.value,
        global_ee_retained: global_ee_with_idle(&rates, &gammas, &powers, params, removed)?.value,
        converged: outcome.converged,
        rounds: outcome.rounds,
        target_limited: outcome.target_limited,
        draw_checksum: checksum,
    })
}

/// Draws, runs and measures one realization.
pub fn run_realization(config: &ScenarioConfig, users: usize, index: usize) -> Result<RawRow> {
    let seed = realization_seed(config.monte_carlo.seed, index);
    let (scenario, checksum) = build_scenario(config, users, index)?;
    match run(&scenario, config.system.algorithm, &config.verhulst) {
        Ok(outcome) => outcome_row(&scenario, &outcome, users, index, seed, checksum),
        Err(Error::ReceiverUnavailable(_)) => Ok(RawRow {
            users,
            realization: index,
            seed,
            status: "receiver_unavailable".into(),
            removed: 0,
            outage: f64::NAN,
            sum_rate: f64::NAN,
            sum_tx_power: f64::NAN,
            sum_power: f64::NAN,
            sum_power_retained: f64::NAN,
            global_ee: f64::NAN,
            global_ee_retained: f64::NAN,
            converged: false,
            rounds: 0,
            target_limited: false,
            draw_checksum: checksum,
        }),
        Err(e) => Err(e),
    }
}

fn env_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Runs the configured sweep, with the worker count taken from the
/// environment (all cores when unset).
pub fn run_experiment(config: &ScenarioConfig) -> Result<RunReport> {
    run_experiment_with_workers(config, env_workers()?)
}

/// Runs every (K, realization) pair on a pool of `workers` threads. Results
/// do not depend on the worker count.
pub fn run_experiment_with_workers(config: &ScenarioConfig, workers: Option<usize>) -> Result<RunReport> {
    config.validate()?;
    let n = config.system.processing_gain;
    let mut errors = Vec::new();
    let mut jobs = Vec::new();
    for k in config.user_counts() {
        if config.system.receiver == Receiver::Dec && k > n {
            errors.push(SweepError {
                users: k,
                message: format!("decorrelator needs K <= N, got K={k} N={n}"),
            });
            continue;
        }
        jobs.extend((0..config.monte_carlo.realizations).map(|r| (k, r)));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let raw: Vec<RawRow> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, r)| run_realization(config, k, r))
            .collect::<Result<_>>()
    })?;
    Ok(RunReport::from_rows(config.clone(), raw, errors))
}
