//! EE-SE trade-off of one user of interest facing interferers at fixed power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    coupling_parameter, draw_channel, draw_placement, mean_gain_power, FadingKind, GeometryKind,
};
use crate::error::{Error, Result};
use crate::metrics::{self, EEParams};
use crate::optimizer::{best_response_power, log_grid, optimal_sinr_or_upper};
use crate::spreading::{build_decorrelator, generate_codes, sinr_dec, sinr_mf, Receiver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffSetup {
    pub receiver: Receiver,
    pub processing_gain: usize,
    /// Distance of the user of interest, meters.
    pub interest_distance: f64,
    pub interferer_distance: f64,
    pub interferers: usize,
    /// Fixed interferer transmit power, watts.
    pub interferer_power: f64,
    pub path_loss_exponent: f64,
    pub fading: FadingKind,
    pub fading_samples: usize,
    pub grid_points: usize,
    /// Lowest swept power as a fraction of `P_max`.
    pub grid_floor: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    /// Powers of the user of interest, watts, increasing.
    pub sweep_powers: Vec<f64>,
    /// Mean SE, bit/s/Hz.
    pub se_points: Vec<f64>,
    /// Mean utility, bit/J.
    pub ee_points: Vec<f64>,
    /// Mean SINR.
    pub gamma_points: Vec<f64>,
    pub max_ee_index: usize,
    /// SE at the top of the grid minus SE at the max-EE point.
    pub lambda_gap: f64,
    pub se_monotone: bool,
    pub ee_unimodal: bool,
    /// Optimal SINR and best-response power for the average (unfaded) channel.
    pub solver_gamma_star: f64,
    pub solver_power: f64,
    pub coupling: f64,
    pub coupling_reciprocal: f64,
}

/// SE at the top of the grid minus SE at the max-EE point.
pub fn gap_lambda(se_points: &[f64], max_ee_index: usize) -> Result<f64> {
    let top = se_points
        .last()
        .ok_or_else(|| Error::Config("empty trade-off curve".into()))?;
    let at_max = se_points
        .get(max_ee_index)
        .ok_or_else(|| Error::Domain(format!("max-EE index {max_ee_index} outside the curve")))?;
    Ok(top - at_max)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn is_unimodal(values: &[f64], tolerance: f64) -> bool {
    let peak = argmax(values);
    let rising = values[..=peak]
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - tolerance));
    let falling = values[peak..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + tolerance));
    rising && falling
}

impl TradeoffSetup {
    pub fn validate(&self) -> Result<()> {
        if self.fading_samples == 0 {
            return Err(Error::Config("at least one fading sample is required".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::Config("the sweep grid needs at least two points".into()));
        }
        if !(self.grid_floor > 0.0 && self.grid_floor < 1.0) {
            return Err(Error::Config("grid floor must lie in (0, 1)".into()));
        }
        if !(self.interferer_power >= 0.0) {
            return Err(Error::Config("interferer power must be >= 0".into()));
        }
        if self.receiver == Receiver::Dec && self.interferers + 1 > self.processing_gain {
            return Err(Error::ReceiverUnavailable(format!(
                "decorrelator needs K <= N, got K={} N={}",
                self.interferers + 1,
                self.processing_gain
            )));
        }
        Ok(())
    }

    fn geometry(&self) -> GeometryKind {
        GeometryKind::Fixed {
            interest: self.interest_distance,
            interferers: vec![self.interferer_distance; self.interferers],
        }
    }

    /// Effective interference seen by the user of interest in each fading
    /// draw. Draw `i` uses seed `seed + i`, so setups that differ only in
    /// distances or powers share their fading samples.
    fn effective_interference(&self, params: &EEParams) -> Result<Vec<f64>> {
        let users = self.interferers + 1;
        let placement = draw_placement(&self.geometry(), users, self.seed)?;
        let codes = generate_codes(self.processing_gain, users, self.seed)?;
        let bank = match self.receiver {
            Receiver::Mf => None,
            Receiver::Dec => Some(build_decorrelator(&codes)?),
        };
        let mut powers = vec![self.interferer_power; users];
        powers[0] = params.max_power;
        (0..self.fading_samples as u64)
            .map(|i| {
                let ch = draw_channel(&placement, self.path_loss_exponent, self.fading, self.seed.wrapping_add(i))?;
                let report = match &bank {
                    None => sinr_mf(&powers, &ch, &codes, params.noise_power)?,
                    Some(b) => sinr_dec(&powers, &ch, b, params.noise_power)?,
                };
                Ok(report.eff_interference[0])
            })
            .collect()
    }

    fn mean_effective_interference(&self, params: &EEParams) -> Result<f64> {
        let avg = TradeoffSetup {
            fading: FadingKind::None,
            fading_samples: 1,
            ..self.clone()
        };
        Ok(avg.effective_interference(params)?[0])
    }
}

/// Sweeps the power of the user of interest over a log grid and averages SE,
/// utility and SINR over the fading draws.
pub fn sweep_tradeoff(setup: &TradeoffSetup, params: &EEParams) -> Result<TradeoffCurve> {
    setup.validate()?;
    params.validate()?;
    let grid = log_grid(setup.grid_floor * params.max_power, params.max_power, setup.grid_points);
    sweep_on_grid(setup, params, &grid)
}

pub fn sweep_on_grid(setup: &TradeoffSetup, params: &EEParams, grid: &[f64]) -> Result<TradeoffCurve> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) || grid[grid.len() - 1] > params.max_power {
        return Err(Error::Config("sweep grid must increase strictly within (0, P_max]".into()));
    }
    let theta = params.qos()?.theta;
    let eff = setup.effective_interference(params)?;
    let n = eff.len() as f64;

    let points: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&p| {
            let (mut se, mut ee, mut g) = (0.0, 0.0, 0.0);
            for i in &eff {
                let gamma = p / i;
                se += metrics::se(gamma, theta);
                ee += metrics::utility(p, gamma, params, theta)?;
                g += gamma;
            }
            Ok((se / n, ee / n, g / n))
        })
        .collect::<Result<_>>()?;
    let se_points: Vec<f64> = points.iter().map(|t| t.0).collect();
    let ee_points: Vec<f64> = points.iter().map(|t| t.1).collect();
    let gamma_points: Vec<f64> = points.iter().map(|t| t.2).collect();
    let max_ee_index = argmax(&ee_points);
    let lambda_gap = gap_lambda(&se_points, max_ee_index)?;

    let mean_eff = setup.mean_effective_interference(params)?;
    let (solver_gamma_star, _) = optimal_sinr_or_upper(mean_eff, params, theta)?;
    let best = best_response_power(solver_gamma_star, mean_eff, params.max_power);
    let coupling = coupling_parameter(
        mean_gain_power(setup.interest_distance, setup.path_loss_exponent),
        mean_gain_power(setup.interferer_distance, setup.path_loss_exponent),
    )?;

    Ok(TradeoffCurve {
        se_monotone: se_points.windows(2).all(|w| w[1] >= w[0]),
        ee_unimodal: is_unimodal(&ee_points, 1e-12),
        sweep_powers: grid.to_vec(),
        se_points,
        ee_points,
        gamma_points,
        max_ee_index,
        lambda_gap,
        solver_gamma_star,
        solver_power: best.p_best,
        coupling: coupling.value(),
        coupling_reciprocal: coupling.reciprocal(),
    })
}
