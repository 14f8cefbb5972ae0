//! User placement, path loss and flat Rayleigh fading for the uplink.
//!
//! Every draw is a pure function of a seed. Each component (placement,
//! fading, spreading codes) reads its own ChaCha stream of the same seed, so
//! user `k` gets the same distance, fading and code whatever the total user
//! count is. Monte Carlo sweeps over the user count therefore share draws.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const PLACEMENT_STREAM: u64 = 1;
pub(crate) const FADING_STREAM: u64 = 2;
pub(crate) const CODE_STREAM: u64 = 3;

pub(crate) fn component_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Cell layout from which user distances are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometryKind {
    /// Users uniform in radius on `[r_int, r_ext]` around the base station.
    Ring { r_int: f64, r_ext: f64 },
    /// One user of interest at `interest` meters, interferers at the listed
    /// distances. User 0 is the user of interest.
    Fixed { interest: f64, interferers: Vec<f64> },
}

impl GeometryKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeometryKind::Ring { r_int, r_ext } => {
                if !(*r_int > 0.0) || !(r_int < r_ext) || !r_ext.is_finite() {
                    return Err(Error::Config(format!(
                        "ring geometry needs 0 < r_int < r_ext, got r_int={r_int}, r_ext={r_ext}"
                    )));
                }
            }
            GeometryKind::Fixed {
                interest,
                interferers,
            } => {
                let bad = std::iter::once(interest)
                    .chain(interferers.iter())
                    .any(|d| !(*d > 0.0) || !d.is_finite());
                if bad {
                    return Err(Error::Config(
                        "fixed geometry distances must be positive and finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Placement {
    /// Distance of each user from the base station, meters.
    pub distances: Vec<f64>,
    pub geometry: GeometryKind,
}

impl Placement {
    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }
}

/// Draws `user_count` user distances.
///
/// A fixed geometry must describe exactly `user_count` users and is returned
/// verbatim. A ring geometry draws i.i.d. uniform radii.
pub fn draw_placement(geometry: &GeometryKind, user_count: usize, seed: u64) -> Result<Placement> {
    if user_count == 0 {
        return Err(Error::Config("user count must be at least 1".into()));
    }
    geometry.validate()?;
    let distances = match geometry {
        GeometryKind::Ring { r_int, r_ext } => {
            let mut rng = component_rng(seed, PLACEMENT_STREAM);
            (0..user_count)
                .map(|_| rng.random_range(*r_int..=*r_ext))
                .collect()
        }
        GeometryKind::Fixed {
            interest,
            interferers,
        } => {
            if interferers.len() + 1 != user_count {
                return Err(Error::Config(format!(
                    "fixed geometry lists {} users but {} were requested",
                    interferers.len() + 1,
                    user_count
                )));
            }
            std::iter::once(*interest)
                .chain(interferers.iter().copied())
                .collect()
        }
    };
    Ok(Placement {
        distances,
        geometry: geometry.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingKind {
    None,
    Rayleigh,
}

/// Uplink channel, one complex gain per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains: Vec<Complex<f64>>,
    /// `|gains[k]|^2`.
    pub gain_power: Vec<f64>,
}

impl ChannelState {
    pub fn from_gains(gains: Vec<Complex<f64>>) -> Result<Self> {
        let gain_power: Vec<f64> = gains.iter().map(|h| h.norm_sqr()).collect();
        if gain_power.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::Domain("channel gain powers must be positive".into()));
        }
        Ok(Self { gains, gain_power })
    }

    /// Real-valued channel with the given gain powers.
    pub fn from_gain_power(gain_power: &[f64]) -> Result<Self> {
        Self::from_gains(
            gain_power
                .iter()
                .map(|g| Complex::new(g.sqrt(), 0.0))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// Unit-variance zero-mean circularly symmetric complex Gaussian sample.
pub(crate) fn unit_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    loop {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let g = Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        if g.norm_sqr() > 0.0 {
            return g;
        }
    }
}

/// `h_k = d_k^(-exponent/2) * g_k`, so `|h_k|^2 = d_k^-exponent * |g_k|^2`.
pub fn draw_channel(
    placement: &Placement,
    path_loss_exponent: f64,
    fading: FadingKind,
    seed: u64,
) -> Result<ChannelState> {
    if !(path_loss_exponent > 0.0) {
        return Err(Error::Config(format!(
            "path loss exponent must be positive, got {path_loss_exponent}"
        )));
    }
    if placement.distances.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Config("placement distances must be positive".into()));
    }
    let mut rng = component_rng(seed, FADING_STREAM);
    let gains = placement
        .distances
        .iter()
        .map(|&d| {
            let amplitude = d.powf(-path_loss_exponent / 2.0);
            let g = match fading {
                FadingKind::None => Complex::new(1.0, 0.0),
                FadingKind::Rayleigh => unit_complex_gaussian(&mut rng),
            };
            g * amplitude
        })
        .collect();
    ChannelState::from_gains(gains)
}

/// Mean channel gain power `d^-exponent`.
pub fn mean_gain_power(distance: f64, path_loss_exponent: f64) -> f64 {
    distance.powf(-path_loss_exponent)
}

/// Ratio of the interest user's average gain power to an interferer's.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct CouplingParam(f64);

impl CouplingParam {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn reciprocal(self) -> f64 {
        1.0 / self.0
    }
}

pub fn coupling_parameter(mean_interest: f64, mean_interferer: f64) -> Result<CouplingParam> {
    if !(mean_interest > 0.0) || !(mean_interferer > 0.0) {
        return Err(Error::Domain(format!(
            "coupling parameter needs positive mean gains, got {mean_interest} and {mean_interferer}"
        )));
    }
    Ok(CouplingParam(mean_interest / mean_interferer))
}
