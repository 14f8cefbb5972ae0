//! Rate, spectral efficiency and energy-efficiency quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the accepted BER range: `5 * ber < e^-1.5` keeps `theta < 1`.
pub const MAX_BER: f64 = 0.2;

pub fn dbm_to_watt(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(x_watt: f64) -> f64 {
    10.0 * x_watt.log10() + 30.0
}

/// Constants of the energy-efficiency utility. Powers in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EEParams {
    /// Packet size M, bits.
    pub packet_bits: u32,
    /// Information bits per packet L.
    pub info_bits: u32,
    pub circuit_power: f64,
    /// Bandwidth w, Hz.
    pub bandwidth: f64,
    pub max_power: f64,
    pub noise_power: f64,
    /// Maximum tolerable bit error rate.
    pub ber: f64,
    /// Minimum rate R_min, bit/s.
    pub min_rate: f64,
}

impl EEParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.info_bits == 0 || self.info_bits > self.packet_bits {
            return fail(format!(
                "need 0 < L <= M, got L={} M={}",
                self.info_bits, self.packet_bits
            ));
        }
        if !(self.circuit_power >= 0.0) || !self.circuit_power.is_finite() {
            return fail(format!("circuit power must be >= 0, got {}", self.circuit_power));
        }
        if !(self.max_power > 0.0) || !self.max_power.is_finite() {
            return fail(format!("max power must be positive, got {}", self.max_power));
        }
        if !(self.noise_power > 0.0) {
            return fail(format!("noise power must be positive, got {}", self.noise_power));
        }
        if !(self.bandwidth > 0.0) {
            return fail(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.min_rate >= 0.0) {
            return fail(format!("minimum rate must be >= 0, got {}", self.min_rate));
        }
        theta(self.ber).map(|_| ()).map_err(|e| Error::Config(e.to_string()))
    }

    /// `L / M`.
    pub fn info_ratio(&self) -> f64 {
        f64::from(self.info_bits) / f64::from(self.packet_bits)
    }

    pub fn qos(&self) -> Result<QosDerived> {
        let theta = theta(self.ber)?;
        Ok(QosDerived {
            theta,
            gamma_min: gamma_min(self.min_rate, self.bandwidth, theta)?,
        })
    }
}

/// SINR gap and minimum SINR derived from a user's QoS targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QosDerived {
    pub theta: f64,
    pub gamma_min: f64,
}

/// SINR gap `theta = -1.5 / ln(5 ber)` for BER in `(0, 0.2)`.
///
/// At `ber = e^-1.5 / 5` the gap reaches 1; above it the gap exceeds 1 and
/// from 0.2 on it is undefined or negative, so anything past the boundary is
/// refused.
pub fn theta(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < MAX_BER) {
        return Err(Error::Domain(format!("BER must lie in (0, {MAX_BER}), got {ber}")));
    }
    let t = -1.5 / (5.0 * ber).ln();
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "BER {ber} gives SINR gap {t}, outside (0, 1)"
        )));
    }
    Ok(t)
}

/// Spectral efficiency `log2(1 + theta gamma)`, bit/s/Hz.
pub fn se(gamma: f64, theta: f64) -> f64 {
    (theta * gamma).ln_1p() / std::f64::consts::LN_2
}

/// Gap-adjusted Shannon rate `w log2(1 + theta gamma)`, bit/s.
pub fn rate(gamma: f64, theta: f64, bandwidth: f64) -> f64 {
    bandwidth * se(gamma, theta)
}

/// SINR needed for rate `min_rate` at bandwidth `bandwidth`.
pub fn gamma_min(min_rate: f64, bandwidth: f64, theta: f64) -> Result<f64> {
    if !(min_rate >= 0.0) {
        return Err(Error::Domain(format!("minimum rate must be >= 0, got {min_rate}")));
    }
    Ok((min_rate / bandwidth * std::f64::consts::LN_2).exp_m1() / theta)
}

/// Packet success probability `(1 - e^-gamma)^M`.
pub fn efficiency(gamma: f64, packet_bits: u32) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    (f64::from(packet_bits) * (-(-gamma).exp()).ln_1p()).exp()
}

/// Per-user energy efficiency `r (L/M) f(gamma) / (p + p_c)`, bit/J.
pub fn utility(power: f64, gamma: f64, params: &EEParams, theta: f64) -> Result<f64> {
    if !(power >= 0.0) {
        return Err(Error::Domain(format!("transmit power must be >= 0, got {power}")));
    }
    let consumed = power + params.circuit_power;
    if !(consumed > 0.0) {
        return Err(Error::Domain("transmit plus circuit power is zero".into()));
    }
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    let r = rate(gamma, theta, params.bandwidth);
    Ok(r * params.info_ratio() * efficiency(gamma, params.packet_bits) / consumed)
}

/// Network energy efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalEe {
    /// bit/J; 0 when nobody consumes power.
    pub value: f64,
    /// Set when the sum has no terms.
    pub empty: bool,
}

/// `sum l r_k f(gamma_k) / sum (p_k + p_c)` over the given (active) users.
pub fn global_ee(rates: &[f64], gammas: &[f64], powers: &[f64], params: &EEParams) -> Result<GlobalEe> {
    global_ee_with_idle(rates, gammas, powers, params, 0)
}

/// Like [`global_ee`], with `idle_users` extra users that draw circuit power
/// but deliver nothing.
pub fn global_ee_with_idle(
    rates: &[f64],
    gammas: &[f64],
    powers: &[f64],
    params: &EEParams,
    idle_users: usize,
) -> Result<GlobalEe> {
    if rates.len() != gammas.len() || rates.len() != powers.len() {
        return Err(Error::Domain("rate, SINR and power vectors differ in length".into()));
    }
    if rates.is_empty() {
        return Ok(GlobalEe {
            value: 0.0,
            empty: true,
        });
    }
    let l = params.info_ratio();
    let delivered: f64 = rates
        .iter()
        .zip(gammas)
        .map(|(r, g)| l * r * efficiency(*g, params.packet_bits))
        .sum();
    let consumed: f64 = powers.iter().map(|p| p + params.circuit_power).sum::<f64>()
        + idle_users as f64 * params.circuit_power;
    if !(consumed > 0.0) {
        return Err(Error::Domain("total consumed power is zero".into()));
    }
    Ok(GlobalEe {
        value: delivered / consumed,
        empty: false,
    })
}
