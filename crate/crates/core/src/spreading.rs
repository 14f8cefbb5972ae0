//! Random PN spreading codes, the decorrelating filter bank and the SINR of
//! the matched-filter and decorrelator receivers.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{component_rng, ChannelState, CODE_STREAM};
use crate::error::{Error, Result};

/// Largest accepted condition number of `R` before the decorrelator is
/// declared unavailable.
pub const MAX_CORRELATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    #[serde(alias = "MF")]
    Mf,
    #[serde(alias = "DEC")]
    Dec,
}

impl Receiver {
    pub fn as_str(self) -> &'static str {
        match self {
            Receiver::Mf => "mf",
            Receiver::Dec => "dec",
        }
    }
}

impl std::fmt::Display for Receiver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(Receiver::Mf),
            "dec" => Ok(Receiver::Dec),
            other => Err(Error::Config(format!("unknown receiver '{other}'"))),
        }
    }
}

/// Code matrix `S` (N x K, entries +-1/sqrt(N)) and its correlation `R = S^T S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingCodeSet {
    n: usize,
    k: usize,
    /// Column-major +-1 chips.
    chips: Vec<i8>,
    s: DMatrix<f64>,
    r: DMatrix<f64>,
    /// Squared cross-correlations `R_kj^2`.
    r_sq: DMatrix<f64>,
}

impl SpreadingCodeSet {
    /// Builds the set from column-major +-1 chips (`chips[k * n + i]` is
    /// chip `i` of user `k`).
    pub fn from_chips(n: usize, k: usize, chips: Vec<i8>) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::Config("processing gain and user count must be >= 1".into()));
        }
        if chips.len() != n * k || chips.iter().any(|c| *c != 1 && *c != -1) {
            return Err(Error::Config(format!(
                "expected {} chips in {{-1, +1}}, got {}",
                n * k,
                chips.len()
            )));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let s = DMatrix::from_fn(n, k, |i, j| f64::from(chips[j * n + i]) * scale);
        // Integer Gram matrix divided once by N: the diagonal is exactly 1.
        let r = DMatrix::from_fn(k, k, |a, b| {
            let dot: i32 = (0..n)
                .map(|i| i32::from(chips[a * n + i]) * i32::from(chips[b * n + i]))
                .sum();
            f64::from(dot) / n as f64
        });
        let r_sq = r.map(|x| x * x);
        Ok(Self {
            n,
            k,
            chips,
            s,
            r,
            r_sq,
        })
    }

    pub fn processing_gain(&self) -> usize {
        self.n
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn code_matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    /// `(s_k^T s_j)^2`.
    pub fn cross_power(&self, k: usize, j: usize) -> f64 {
        self.r_sq[(k, j)]
    }

    /// Code set restricted to the listed users, in the given order.
    pub fn select(&self, users: &[usize]) -> Result<Self> {
        let mut chips = Vec::with_capacity(users.len() * self.n);
        for &u in users {
            if u >= self.k {
                return Err(Error::Config(format!("user {u} out of range")));
            }
            chips.extend_from_slice(&self.chips[u * self.n..(u + 1) * self.n]);
        }
        Self::from_chips(self.n, users.len(), chips)
    }
}

/// I.i.d. equiprobable +-1 chips, one code per user, scaled by 1/sqrt(N).
pub fn generate_codes(n: usize, k: usize, seed: u64) -> Result<SpreadingCodeSet> {
    let mut rng = component_rng(seed, CODE_STREAM);
    let chips = (0..n * k)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    SpreadingCodeSet::from_chips(n, k, chips)
}

/// Decorrelating filters `D = S R^-1` for a subset of users.
#[derive(Debug, Clone)]
pub struct DecorrelatorBank {
    /// Global user index of each column.
    users: Vec<usize>,
    d: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    /// `d_k^T d_k` per column.
    diag_rinv: Vec<f64>,
    condition: f64,
}

impl DecorrelatorBank {
    pub fn filters(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn correlation_inverse(&self) -> &DMatrix<f64> {
        &self.r_inv
    }

    /// Noise enhancement `d_k^T d_k` of each column, in column order.
    pub fn diag_rinv(&self) -> &[f64] {
        &self.diag_rinv
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    /// Condition number of `R`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Noise enhancement of global user `k`, if it is served by this bank.
    pub fn noise_enhancement(&self, k: usize) -> Option<f64> {
        self.users
            .iter()
            .position(|&u| u == k)
            .map(|c| self.diag_rinv[c])
    }
}

/// Builds the decorrelator for every user of `codes`.
pub fn build_decorrelator(codes: &SpreadingCodeSet) -> Result<DecorrelatorBank> {
    let all: Vec<usize> = (0..codes.users()).collect();
    build_decorrelator_for(codes, &all)
}

/// Builds the decorrelator over the listed users only; the other users'
/// codes are left out of `S` and `R`.
pub fn build_decorrelator_for(codes: &SpreadingCodeSet, users: &[usize]) -> Result<DecorrelatorBank> {
    let n = codes.processing_gain();
    let k = users.len();
    if k == 0 {
        return Ok(DecorrelatorBank {
            users: Vec::new(),
            d: DMatrix::zeros(n, 0),
            r_inv: DMatrix::zeros(0, 0),
            diag_rinv: Vec::new(),
            condition: 1.0,
        });
    }
    if k > n {
        return Err(Error::ReceiverUnavailable(format!(
            "{k} users exceed processing gain {n}; R is singular"
        )));
    }
    let sub = codes.select(users)?;
    let s = sub.code_matrix().clone();

    let sv = s.clone().singular_values();
    let (smax, smin) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &x| (hi.max(x), lo.min(x)));
    let condition = if smin > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CORRELATION_CONDITION) {
        return Err(Error::ReceiverUnavailable(format!(
            "correlation matrix condition number {condition:e} exceeds {MAX_CORRELATION_CONDITION:e}"
        )));
    }

    // S = Q U  =>  R = U^T U,  R^-1 = U^-1 U^-T,  D = S R^-1 = Q U^-T.
    // Factoring S instead of inverting S^T S keeps the error at cond(S).
    // R^-1 is formed as D^T D so the reported inverse is exactly the Gram
    // matrix of the filters applied; near the condition guard U^-1 U^-T and
    // D^T D differ by a few ulps, which is 1e-10 in absolute terms.
    let qr = s.qr();
    let q = qr.q();
    let u = qr.r();
    let u_inv = u
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::ReceiverUnavailable("triangular factor is singular".into()))?;
    let d = &q * u_inv.transpose();
    let r_inv = d.transpose() * &d;
    let diag_rinv = d.column_iter().map(|c| c.norm_squared()).collect();

    Ok(DecorrelatorBank {
        users: users.to_vec(),
        d,
        r_inv,
        diag_rinv,
        condition,
    })
}

/// Per-user SINR and interference terms.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub gamma: Vec<f64>,
    /// Multiple-access interference power `I_k`, watts.
    pub mai_power: Vec<f64>,
    /// Effective interference `(I_k + noise term) / |h_k|^2`, watts; the power
    /// user `k` needs for unit SINR with the others held fixed. Infinite for
    /// users the receiver does not serve.
    pub eff_interference: Vec<f64>,
}

fn check_inputs(powers: &[f64], channel: &ChannelState, noise_power: f64) -> Result<()> {
    if powers.len() != channel.len() {
        return Err(Error::Domain(format!(
            "{} powers for {} channels",
            powers.len(),
            channel.len()
        )));
    }
    if let Some(p) = powers.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain(format!("transmit power must be >= 0, got {p}")));
    }
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {noise_power}")));
    }
    Ok(())
}

/// Matched filter: `gamma_k = p_k |h_k|^2 / (sum_{j!=k} p_j |h_j|^2 (s_k^T s_j)^2 + sigma^2)`.
pub fn sinr_mf(
    powers: &[f64],
    channel: &ChannelState,
    codes: &SpreadingCodeSet,
    noise_power: f64,
) -> Result<SinrReport> {
    check_inputs(powers, channel, noise_power)?;
    if codes.users() != powers.len() {
        return Err(Error::Domain("code set and power vector sizes differ".into()));
    }
    let k = powers.len();
    let received: Vec<f64> = powers
        .iter()
        .zip(&channel.gain_power)
        .map(|(p, g)| p * g)
        .collect();
    let mut report = SinrReport {
        gamma: Vec::with_capacity(k),
        mai_power: Vec::with_capacity(k),
        eff_interference: Vec::with_capacity(k),
    };
    for u in 0..k {
        let mai: f64 = (0..k)
            .filter(|&j| j != u)
            .map(|j| received[j] * codes.cross_power(u, j))
            .sum();
        let denom = mai + noise_power;
        report.gamma.push(received[u] / denom);
        report.mai_power.push(mai);
        report.eff_interference.push(denom / channel.gain_power[u]);
    }
    Ok(report)
}

/// Decorrelator: `gamma_k = p_k |h_k|^2 / (sigma^2 d_k^T d_k)`. Users outside
/// the bank get zero SINR.
pub fn sinr_dec(
    powers: &[f64],
    channel: &ChannelState,
    bank: &DecorrelatorBank,
    noise_power: f64,
) -> Result<SinrReport> {
    check_inputs(powers, channel, noise_power)?;
    let k = powers.len();
    let mut report = SinrReport {
        gamma: vec![0.0; k],
        mai_power: vec![0.0; k],
        eff_interference: vec![f64::INFINITY; k],
    };
    for (col, &u) in bank.users.iter().enumerate() {
        if u >= k {
            return Err(Error::Domain(format!("bank user {u} out of range")));
        }
        let noise = noise_power * bank.diag_rinv[col];
        report.gamma[u] = powers[u] * channel.gain_power[u] / noise;
        report.eff_interference[u] = noise / channel.gain_power[u];
    }
    Ok(report)
}
