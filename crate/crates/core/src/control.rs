//! Verhulst power control with EE-optimal SINR targets and outage removal.
//!
//! Three schemes share one synchronous inner loop: every user measures its
//! effective interference, solves for its EE-optimal SINR and applies the
//! Verhulst update
//!
//! ```text
//! p <- clamp((1 + alpha) p - alpha (gamma / gamma*) p, [floor, P_max])
//! ```
//!
//! After `It` iterations the schemes differ in who, if anyone, is removed:
//!
//! * [`Algorithm::EeSe`] removes, among users below target, the one with the
//!   weakest channel and restarts;
//! * [`Algorithm::EeSeMinRate`] only considers users that are below target
//!   *and* below their minimum rate;
//! * [`Algorithm::Baseline`] never removes anyone; users that cannot reach
//!   their target stay at `P_max`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::metrics::{self, EEParams, QosDerived};
use crate::optimizer::optimal_sinr_or_upper;
use crate::spreading::{
    build_decorrelator_for, sinr_dec, sinr_mf, DecorrelatorBank, Receiver, SinrReport,
    SpreadingCodeSet,
};

/// One network realization.
#[derive(Debug, Clone)]
pub struct Scenario {
    channel: ChannelState,
    codes: SpreadingCodeSet,
    receiver: Receiver,
    params: EEParams,
    qos: Vec<QosDerived>,
}

impl Scenario {
    /// All users share the QoS targets of `params`.
    pub fn new(channel: ChannelState, codes: SpreadingCodeSet, receiver: Receiver, params: EEParams) -> Result<Self> {
        params.validate()?;
        let qos = vec![params.qos()?; channel.len()];
        Self::with_qos(channel, codes, receiver, params, qos)
    }

    pub fn with_qos(
        channel: ChannelState,
        codes: SpreadingCodeSet,
        receiver: Receiver,
        params: EEParams,
        qos: Vec<QosDerived>,
    ) -> Result<Self> {
        if channel.len() != codes.users() || qos.len() != channel.len() {
            return Err(Error::Config(format!(
                "scenario sizes disagree: {} channels, {} codes, {} QoS entries",
                channel.len(),
                codes.users(),
                qos.len()
            )));
        }
        if channel.is_empty() {
            return Err(Error::Config("scenario has no users".into()));
        }
        Ok(Self {
            channel,
            codes,
            receiver,
            params,
            qos,
        })
    }

    pub fn users(&self) -> usize {
        self.channel.len()
    }

    pub fn channel(&self) -> &ChannelState {
        &self.channel
    }

    pub fn codes(&self) -> &SpreadingCodeSet {
        &self.codes
    }

    pub fn receiver(&self) -> Receiver {
        self.receiver
    }

    pub fn params(&self) -> &EEParams {
        &self.params
    }

    pub fn qos(&self, k: usize) -> QosDerived {
        self.qos[k]
    }

    pub fn with_receiver(&self, receiver: Receiver) -> Self {
        Self {
            receiver,
            ..self.clone()
        }
    }

    pub fn with_params(&self, params: EEParams) -> Result<Self> {
        params.validate()?;
        let qos = vec![params.qos()?; self.users()];
        Ok(Self {
            params,
            qos,
            ..self.clone()
        })
    }

    /// SINR model for the given set of active users. The decorrelator only
    /// spans active users.
    pub fn sinr_model(&self, active: &[bool]) -> Result<SinrModel> {
        match self.receiver {
            Receiver::Mf => Ok(SinrModel::Mf),
            Receiver::Dec => {
                let users: Vec<usize> = (0..self.users()).filter(|&k| active[k]).collect();
                Ok(SinrModel::Dec(build_decorrelator_for(&self.codes, &users)?))
            }
        }
    }

    /// SINR of every user for the given powers with all users active.
    pub fn sinr(&self, powers: &[f64]) -> Result<SinrReport> {
        let active: Vec<bool> = powers.iter().map(|_| true).collect();
        self.sinr_model(&active)?.evaluate(self, powers)
    }
}

#[derive(Debug, Clone)]
pub enum SinrModel {
    Mf,
    Dec(DecorrelatorBank),
}

impl SinrModel {
    pub fn evaluate(&self, scenario: &Scenario, powers: &[f64]) -> Result<SinrReport> {
        let noise = scenario.params.noise_power;
        match self {
            SinrModel::Mf => sinr_mf(powers, &scenario.channel, &scenario.codes, noise),
            SinrModel::Dec(bank) => sinr_dec(powers, &scenario.channel, bank, noise),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// EE-optimal targets, outage removal of users below target.
    #[serde(rename = "alg1")]
    EeSe,
    /// EE-optimal targets, removal only of users also below their minimum rate.
    #[serde(rename = "alg2")]
    EeSeMinRate,
    /// EE-optimal targets capped at `P_max`, no removal.
    #[serde(rename = "baseline")]
    Baseline,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::EeSe => "alg1",
            Algorithm::EeSeMinRate => "alg2",
            Algorithm::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alg1" => Ok(Algorithm::EeSe),
            "alg2" => Ok(Algorithm::EeSeMinRate),
            "baseline" => Ok(Algorithm::Baseline),
            other => Err(Error::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// When the optimal SINR targets are recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetCadence {
    #[default]
    EveryIteration,
    OncePerRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    /// Verhulst convergence factor, `0 < alpha < 1`.
    pub alpha: f64,
    /// Inner iterations per round.
    pub iterations: usize,
    #[serde(default)]
    pub cadence: TargetCadence,
    /// Relative shortfall below target that counts as "not reached".
    #[serde(default = "default_removal_tolerance")]
    pub removal_tolerance: f64,
    /// Starting powers; the noise power when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_power: Option<Vec<f64>>,
}

fn default_removal_tolerance() -> f64 {
    1e-2
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            iterations: 500,
            cadence: TargetCadence::EveryIteration,
            removal_tolerance: default_removal_tolerance(),
            initial_power: None,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("at least one iteration is required".into()));
        }
        if !(self.removal_tolerance >= 0.0 && self.removal_tolerance < 1.0) {
            return Err(Error::Config("removal tolerance must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerState {
    /// Transmit powers, watts; zero for removed users.
    pub p: Vec<f64>,
    pub active: Vec<bool>,
    /// SINR achieved at `p`.
    pub gamma: Vec<f64>,
    /// Effective interference at `p`.
    pub eff_interference: Vec<f64>,
    /// Current SINR targets; zero for removed users.
    pub gamma_star: Vec<f64>,
    pub iteration: usize,
}

impl PowerState {
    /// State at powers `p`, SINR evaluated through `model`.
    pub fn new(scenario: &Scenario, model: &SinrModel, p: Vec<f64>, active: Vec<bool>) -> Result<Self> {
        let report = model.evaluate(scenario, &p)?;
        Ok(Self {
            gamma_star: vec![0.0; p.len()],
            p,
            active,
            gamma: report.gamma,
            eff_interference: report.eff_interference,
            iteration: 0,
        })
    }

    pub fn removed_count(&self) -> usize {
        self.active.iter().filter(|a| !**a).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlOutcome {
    pub final_state: PowerState,
    /// Removed users in removal order.
    pub removed_users: Vec<usize>,
    pub converged: bool,
    pub rounds: usize,
    /// Every user was removed.
    pub empty_network: bool,
    /// Some target hit the search limit of the SINR solver.
    pub target_limited: bool,
    /// Iteration of the last round after which no power moved by more than
    /// one part in 10^9.
    pub stabilized_at: Option<usize>,
}

/// Moves every active user one Verhulst step towards `targets`.
/// Users with a zero target are switched off.
pub fn verhulst_step(
    scenario: &Scenario,
    model: &SinrModel,
    state: &PowerState,
    targets: &[f64],
    alpha: f64,
) -> Result<PowerState> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    step(scenario, model, state, targets, alpha, None)
}

fn step(
    scenario: &Scenario,
    model: &SinrModel,
    state: &PowerState,
    targets: &[f64],
    alpha: f64,
    mut pinned: Option<&mut [bool]>,
) -> Result<PowerState> {
    let params = scenario.params();
    let floor = params.noise_power.min(params.max_power);
    let mut p = state.p.clone();
    for k in 0..p.len() {
        if !state.active[k] || targets[k] <= 0.0 {
            p[k] = 0.0;
            continue;
        }
        if let Some(pin) = pinned.as_deref() {
            if pin[k] {
                p[k] = params.max_power;
                continue;
            }
        }
        if !(targets[k] >= 0.0) {
            return Err(Error::Domain(format!("negative SINR target for user {k}")));
        }
        let ratio = state.gamma[k] / targets[k];
        let next = (1.0 + alpha) * p[k] - alpha * ratio * p[k];
        p[k] = if next >= params.max_power {
            if let Some(pin) = pinned.as_deref_mut() {
                pin[k] = true;
            }
            params.max_power
        } else {
            next.max(floor)
        };
    }
    let report = model.evaluate(scenario, &p)?;
    Ok(PowerState {
        p,
        active: state.active.clone(),
        gamma: report.gamma,
        eff_interference: report.eff_interference,
        gamma_star: targets.to_vec(),
        iteration: state.iteration + 1,
    })
}

/// Solves the optimal SINR per active user, reusing the previous target
/// when a user's effective interference has not changed.
struct TargetSolver {
    last_eff: Vec<f64>,
    last_target: Vec<f64>,
    limited: bool,
}

impl TargetSolver {
    fn new(users: usize) -> Self {
        Self {
            last_eff: vec![f64::NAN; users],
            last_target: vec![0.0; users],
            limited: false,
        }
    }

    fn solve(&mut self, scenario: &Scenario, state: &PowerState) -> Result<Vec<f64>> {
        let params = scenario.params();
        let mut targets = vec![0.0; state.p.len()];
        for k in 0..targets.len() {
            if !state.active[k] {
                continue;
            }
            let eff = state.eff_interference[k];
            if eff.to_bits() != self.last_eff[k].to_bits() {
                let (g, limited) = optimal_sinr_or_upper(eff, params, scenario.qos(k).theta)?;
                self.limited |= limited;
                self.last_eff[k] = eff;
                self.last_target[k] = g;
            }
            targets[k] = self.last_target[k];
        }
        Ok(targets)
    }
}

const STABLE_CHANGE: f64 = 1e-9;

struct RoundResult {
    state: PowerState,
    stabilized_at: Option<usize>,
}

fn run_round(
    scenario: &Scenario,
    config: &ControlConfig,
    active: &[bool],
    pin_at_max: bool,
    solver: &mut TargetSolver,
    observer: &mut dyn FnMut(&PowerState),
) -> Result<RoundResult> {
    let k = scenario.users();
    let model = scenario.sinr_model(active)?;
    let init: Vec<f64> = (0..k)
        .map(|u| {
            if !active[u] {
                0.0
            } else {
                config
                    .initial_power
                    .as_ref()
                    .map_or(scenario.params().noise_power, |p| p[u])
            }
        })
        .collect();
    let mut state = PowerState::new(scenario, &model, init, active.to_vec())?;
    let mut pinned = vec![false; k];
    let mut targets = solver.solve(scenario, &state)?;
    state.gamma_star = targets.clone();
    observer(&state);
    let mut last_move = 0;
    for it in 1..=config.iterations {
        if it > 1 && config.cadence == TargetCadence::EveryIteration {
            targets = solver.solve(scenario, &state)?;
        }
        let pin = if pin_at_max { Some(&mut pinned[..]) } else { None };
        let next = step(scenario, &model, &state, &targets, config.alpha, pin)?;
        let moved = next
            .p
            .iter()
            .zip(&state.p)
            .any(|(a, b)| (a - b).abs() > STABLE_CHANGE * b.abs().max(f64::MIN_POSITIVE));
        if moved {
            last_move = it;
        }
        let frozen = next.p == state.p;
        state = next;
        observer(&state);
        if frozen {
            // The update is a function of the powers alone, so the
            // remaining iterations would repeat this state.
            state.iteration = config.iterations;
            break;
        }
    }
    Ok(RoundResult {
        state,
        stabilized_at: (last_move < config.iterations).then_some(last_move),
    })
}

fn below_target(state: &PowerState, k: usize, tolerance: f64) -> bool {
    state.gamma[k] < state.gamma_star[k] * (1.0 - tolerance)
}

fn below_min_rate(scenario: &Scenario, state: &PowerState, k: usize) -> bool {
    let params = scenario.params();
    let r = metrics::rate(state.gamma[k], scenario.qos(k).theta, params.bandwidth);
    r < params.min_rate
}

/// Runs one of the power-control schemes to completion.
pub fn run(scenario: &Scenario, algorithm: Algorithm, config: &ControlConfig) -> Result<ControlOutcome> {
    run_observed(scenario, algorithm, config, &mut |_| {})
}

/// Like [`run`], calling `observer` with the state after every iteration.
pub fn run_observed(
    scenario: &Scenario,
    algorithm: Algorithm,
    config: &ControlConfig,
    observer: &mut dyn FnMut(&PowerState),
) -> Result<ControlOutcome> {
    config.validate()?;
    let k = scenario.users();
    if let Some(init) = &config.initial_power {
        if init.len() != k || init.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Config("initial powers must be positive, one per user".into()));
        }
    }
    let mut active = vec![true; k];
    let mut removed = Vec::new();
    let mut rounds = 0;
    let mut solver = TargetSolver::new(k);
    loop {
        rounds += 1;
        let round = run_round(
            scenario,
            config,
            &active,
            algorithm == Algorithm::Baseline,
            &mut solver,
            observer,
        )?;
        let state = round.state;
        let tol = config.removal_tolerance;
        let out: Vec<usize> = (0..k)
            .filter(|&u| active[u] && below_target(&state, u, tol))
            .filter(|&u| algorithm != Algorithm::EeSeMinRate || below_min_rate(scenario, &state, u))
            .collect();

        let finish = |state: PowerState, converged: bool, removed: Vec<usize>| ControlOutcome {
            empty_network: state.active.iter().all(|a| !a),
            final_state: state,
            removed_users: removed,
            converged,
            rounds,
            target_limited: solver.limited,
            stabilized_at: round.stabilized_at,
        };

        if algorithm == Algorithm::Baseline {
            let max_power = scenario.params().max_power;
            let settled = out.iter().all(|&u| state.p[u] >= max_power);
            return Ok(finish(state, settled, removed));
        }
        if out.is_empty() {
            return Ok(finish(state, true, removed));
        }
        let gains = &scenario.channel().gain_power;
        let worst = out
            .iter()
            .copied()
            .min_by(|&a, &b| gains[a].total_cmp(&gains[b]).then(a.cmp(&b)))
            .expect("non-empty outage set");
        active[worst] = false;
        removed.push(worst);
        if active.iter().all(|a| !a) {
            let model = scenario.sinr_model(&active)?;
            let mut empty = PowerState::new(scenario, &model, vec![0.0; k], active.clone())?;
            empty.iteration = state.iteration;
            return Ok(finish(empty, true, removed));
        }
    }
}

pub fn run_algorithm1(scenario: &Scenario, config: &ControlConfig) -> Result<ControlOutcome> {
    run(scenario, Algorithm::EeSe, config)
}

pub fn run_algorithm2(scenario: &Scenario, config: &ControlConfig) -> Result<ControlOutcome> {
    run(scenario, Algorithm::EeSeMinRate, config)
}

pub fn run_baseline(scenario: &Scenario, config: &ControlConfig) -> Result<ControlOutcome> {
    run(scenario, Algorithm::Baseline, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    /// False when the reference run removed users; uniqueness is then not
    /// asserted.
    pub applicable: bool,
    pub restarts: usize,
    /// Largest relative power difference from the reference equilibrium.
    pub max_relative_diff: f64,
    pub agree: bool,
}

/// Re-runs `algorithm` from `restarts` random starting powers (log-uniform
/// between the noise power and `P_max`) and compares every final power vector
/// with `reference`.
pub fn probe_uniqueness(
    scenario: &Scenario,
    algorithm: Algorithm,
    config: &ControlConfig,
    reference: &ControlOutcome,
    restarts: usize,
    seed: u64,
    tolerance: f64,
) -> Result<UniquenessReport> {
    if !reference.removed_users.is_empty() {
        return Ok(UniquenessReport {
            applicable: false,
            restarts: 0,
            max_relative_diff: 0.0,
            agree: true,
        });
    }
    let params = scenario.params();
    let (lo, hi) = (params.noise_power.ln(), params.max_power.ln());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut agree = true;
    for _ in 0..restarts {
        let init: Vec<f64> = (0..scenario.users())
            .map(|_| rng.random_range(lo..hi).exp())
            .collect();
        let cfg = ControlConfig {
            initial_power: Some(init),
            ..config.clone()
        };
        let outcome = run(scenario, algorithm, &cfg)?;
        if outcome.removed_users != reference.removed_users {
            agree = false;
            worst = f64::INFINITY;
            continue;
        }
        for (a, b) in outcome.final_state.p.iter().zip(&reference.final_state.p) {
            if *b > 0.0 {
                worst = worst.max((a - b).abs() / b);
            }
        }
    }
    Ok(UniquenessReport {
        applicable: true,
        restarts,
        max_relative_diff: worst,
        agree: agree && worst <= tolerance,
    })
}
