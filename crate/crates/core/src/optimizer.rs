//! Energy-efficiency optimal SINR, best responses and equilibrium checks.
//!
//! With the effective interference `I~` held fixed, a user transmitting
//! `p = gamma I~` has utility
//!
//! ```text
//! xi(gamma) = (L/M) w log2(1 + theta gamma) (1 - e^-gamma)^M / (gamma I~ + p_c)
//! ```
//!
//! Its logarithmic derivative, multiplied by `log2(1 + theta gamma) (1 - e^-gamma)`,
//! is the residual
//!
//! ```text
//! M e^-gamma log2(1 + theta gamma) + theta (1 - e^-gamma) / ((1 + theta gamma) ln 2)
//!     - log2(1 + theta gamma) (1 - e^-gamma) / (gamma + p_c / I~)
//! ```
//!
//! which has the sign of `d xi / d gamma`. The optimum is its single sign
//! change, located by bisection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::control::{ControlOutcome, Scenario};
use crate::error::{Error, Result};
use crate::metrics::{self, EEParams};

/// Initial bisection bracket for the optimal SINR.
pub const INITIAL_BRACKET: (f64, f64) = (1e-3, 1e3);
/// Largest upper bracket end tried before giving up.
pub const MAX_GAMMA: f64 = 1e12;
const MIN_GAMMA: f64 = 1e-12;
/// Absolute SINR tolerance of the bisection.
pub const GAMMA_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalSinr {
    pub gamma_star: f64,
    /// Final bisection bracket.
    pub bracket: (f64, f64),
    /// First-order residual at `gamma_star`.
    pub residual: f64,
}

/// First-order condition residual at `gamma`; `cost_ratio` is `p_c / I~`.
pub fn foc_residual(gamma: f64, cost_ratio: f64, packet_bits: u32, theta: f64) -> f64 {
    let m = f64::from(packet_bits);
    let decay = (-gamma).exp();
    let success = -(-gamma).exp_m1();
    let log_term = (theta * gamma).ln_1p() / std::f64::consts::LN_2;
    let lhs = m * decay * log_term
        + theta * success / ((1.0 + theta * gamma) * std::f64::consts::LN_2);
    let rhs = log_term * success / (gamma + cost_ratio);
    lhs - rhs
}

/// Utility as a function of the SINR at fixed effective interference.
pub fn utility_at_sinr(gamma: f64, eff_interference: f64, params: &EEParams, theta: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let denom = gamma * eff_interference + params.circuit_power;
    params.info_ratio()
        * metrics::rate(gamma, theta, params.bandwidth)
        * metrics::efficiency(gamma, params.packet_bits)
        / denom
}

/// EE-optimal SINR for a user seeing effective interference
/// `eff_interference` (watts).
///
/// Returns [`Error::NoInteriorMaximum`] when the utility still increases at
/// [`MAX_GAMMA`].
pub fn optimal_sinr(eff_interference: f64, params: &EEParams, theta: f64) -> Result<OptimalSinr> {
    if !(eff_interference > 0.0) || !eff_interference.is_finite() {
        return Err(Error::Domain(format!(
            "effective interference must be positive and finite, got {eff_interference}"
        )));
    }
    if !(params.circuit_power >= 0.0) {
        return Err(Error::Domain("circuit power must be >= 0".into()));
    }
    let ratio = params.circuit_power / eff_interference;
    let m = params.packet_bits;
    let f = |g: f64| foc_residual(g, ratio, m, theta);

    let (mut lo, mut hi) = INITIAL_BRACKET;
    while f(lo) <= 0.0 {
        lo /= 10.0;
        if lo < MIN_GAMMA {
            return Err(Error::Domain(format!(
                "utility decreasing from gamma = {MIN_GAMMA:e}"
            )));
        }
    }
    while f(hi) > 0.0 {
        if hi >= MAX_GAMMA {
            return Err(Error::NoInteriorMaximum { upper: hi });
        }
        lo = hi;
        hi *= 10.0;
    }
    while hi - lo > GAMMA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = f(mid);
        if r > 0.0 {
            lo = mid;
        } else if r < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let gamma_star = 0.5 * (lo + hi);
    Ok(OptimalSinr {
        gamma_star,
        bracket: (lo, hi),
        residual: f(gamma_star),
    })
}

/// Like [`optimal_sinr`], falling back to the upper bracket end when the
/// utility has no interior maximum. The flag is set in that case.
pub fn optimal_sinr_or_upper(eff_interference: f64, params: &EEParams, theta: f64) -> Result<(f64, bool)> {
    match optimal_sinr(eff_interference, params, theta) {
        Ok(o) => Ok((o.gamma_star, false)),
        Err(Error::NoInteriorMaximum { upper }) => Ok((upper, true)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub p_best: f64,
    pub capped: bool,
    pub achieved_gamma: f64,
}

/// `min(gamma* I~, P_max)`.
pub fn best_response_power(gamma_star: f64, eff_interference: f64, max_power: f64) -> BestResponse {
    let wanted = gamma_star * eff_interference;
    let capped = wanted > max_power;
    let p_best = if capped { max_power } else { wanted };
    BestResponse {
        p_best,
        capped,
        achieved_gamma: p_best / eff_interference,
    }
}

/// Outcome of a unimodality check on a sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiconcavityReport {
    pub passed: bool,
    pub peak_index: usize,
    /// Grid indices `(a, b, c)`, `a < b < c`, with `z(b) < min(z(a), z(c))`.
    pub violation: Option<(usize, usize, usize)>,
    pub spot_checks: usize,
}

/// Relative tolerance of the unimodality check.
pub const UNIMODAL_TOLERANCE: f64 = 1e-12;
const SPOT_CHECKS: usize = 1000;

/// Samples `z` on `grid` and checks it rises to a single peak and falls
/// after it, then spot-checks `z(mid) >= min(z(a), z(b))` on random triples.
pub fn check_quasiconcavity<F: Fn(f64) -> f64>(z: F, grid: &[f64]) -> Result<QuasiconcavityReport> {
    if grid.len() < 3 {
        return Err(Error::Domain("quasiconcavity grid needs at least 3 points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("quasiconcavity grid must be strictly increasing".into()));
    }
    let values: Vec<f64> = grid.iter().map(|&x| z(x)).collect();
    let peak_index = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let tol = UNIMODAL_TOLERANCE * values[peak_index].abs();

    let mut violation = None;
    for i in 0..peak_index {
        if values[i + 1] < values[i] - tol {
            violation = Some((i, i + 1, peak_index));
            break;
        }
    }
    if violation.is_none() {
        for i in peak_index..values.len() - 1 {
            if values[i + 1] > values[i] + tol {
                violation = Some((peak_index, i, i + 1));
                break;
            }
        }
    }

    let mut spot_checks = 0;
    if violation.is_none() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let n = values.len();
        for _ in 0..SPOT_CHECKS {
            let a = rng.random_range(0..n - 2);
            let c = rng.random_range(a + 2..n);
            let b = rng.random_range(a + 1..c);
            spot_checks += 1;
            if values[b] < values[a].min(values[c]) - tol {
                violation = Some((a, b, c));
                break;
            }
        }
    }

    Ok(QuasiconcavityReport {
        passed: violation.is_none(),
        peak_index,
        violation,
        spot_checks,
    })
}

/// Settings of the unilateral-deviation check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NashCheck {
    pub grid_points: usize,
    /// Lowest deviation power as a fraction of `P_max`.
    pub grid_floor: f64,
    /// Largest tolerated relative utility gain.
    pub tolerance: f64,
}

impl Default for NashCheck {
    fn default() -> Self {
        Self {
            grid_points: 200,
            grid_floor: 1e-6,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    pub passed: bool,
    /// Best relative utility gain found per user (0 for removed users).
    pub max_gain: Vec<f64>,
    pub violators: Vec<usize>,
}

/// Log-spaced grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Checks that no active user of a converged outcome gains more than
/// `check.tolerance` (relative) by deviating to any grid power while the
/// others keep their powers.
pub fn verify_nash(scenario: &Scenario, outcome: &ControlOutcome, check: &NashCheck) -> Result<NashReport> {
    if !outcome.converged {
        return Err(Error::Rejected(
            "power-control outcome did not converge; equilibrium check skipped".into(),
        ));
    }
    let state = &outcome.final_state;
    let model = scenario.sinr_model(&state.active)?;
    let params = scenario.params();
    let base_report = model.evaluate(scenario, &state.p)?;
    let grid = log_grid(check.grid_floor * params.max_power, params.max_power, check.grid_points);

    let mut max_gain = vec![0.0; scenario.users()];
    let mut violators = Vec::new();
    let mut trial = state.p.clone();
    for k in 0..scenario.users() {
        if !state.active[k] {
            continue;
        }
        let theta = scenario.qos(k).theta;
        let base = metrics::utility(state.p[k], base_report.gamma[k], params, theta)?;
        let mut best = f64::NEG_INFINITY;
        for &dev in &grid {
            trial[k] = dev;
            let report = model.evaluate(scenario, &trial)?;
            let u = metrics::utility(dev, report.gamma[k], params, theta)?;
            best = best.max((u - base) / base);
        }
        trial[k] = state.p[k];
        max_gain[k] = best;
        if best > check.tolerance {
            violators.push(k);
        }
    }
    Ok(NashReport {
        passed: violators.is_empty(),
        max_gain,
        violators,
    })
}
