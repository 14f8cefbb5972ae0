use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{FadingKind, GeometryKind};
use crate::control::{Algorithm, ControlConfig};
use crate::error::{Error, Result};
use crate::metrics::{dbm_to_watt, EEParams};
use crate::spreading::Receiver;
use crate::tradeoff::TradeoffSetup;

/// Shipped scenario files, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2_tradeoff", include_str!("../../presets/fig2_tradeoff.toml")),
    ("fig34_mixed", include_str!("../../presets/fig34_mixed.toml")),
    ("fig34_mixed_n15", include_str!("../../presets/fig34_mixed_n15.toml")),
    ("fig56_fullload", include_str!("../../presets/fig56_fullload.toml")),
    ("fig56_fullload_1mbps", include_str!("../../presets/fig56_fullload_1mbps.toml")),
];

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("unknown preset '{name}', known: {}", known.join(", ")))
        })?;
    ScenarioConfig::from_toml_str(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Free-text notes carried into the output metadata.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub system: SystemConfig,
    pub geometry: GeometryKind,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub ee: EeConfig,
    #[serde(default)]
    pub verhulst: ControlConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tradeoff: Option<TradeoffConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Spreading factor N.
    pub processing_gain: usize,
    pub users: UserSweep,
    pub receiver: Receiver,
    pub algorithm: Algorithm,
}

/// Numbers of users to simulate: an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UserSweep {
    List(Vec<usize>),
    Range { from: usize, to: usize },
}

impl UserSweep {
    pub fn values(&self) -> Vec<usize> {
        match self {
            UserSweep::List(v) => v.clone(),
            UserSweep::Range { from, to } => (*from..=*to).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub path_loss_exponent: f64,
    pub fading: FadingKind,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            path_loss_exponent: 2.0,
            fading: FadingKind::Rayleigh,
        }
    }
}

/// Utility constants as written in scenario files, powers in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EeConfig {
    pub packet_bits: u32,
    pub info_bits: u32,
    pub circuit_power_dbm: f64,
    pub bandwidth_hz: f64,
    pub max_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub ber: f64,
    pub min_rate_bps: f64,
}

impl EeConfig {
    pub fn params(&self) -> EEParams {
        EEParams {
            packet_bits: self.packet_bits,
            info_bits: self.info_bits,
            circuit_power: dbm_to_watt(self.circuit_power_dbm),
            bandwidth: self.bandwidth_hz,
            max_power: dbm_to_watt(self.max_power_dbm),
            noise_power: dbm_to_watt(self.noise_power_dbm),
            ber: self.ber,
            min_rate: self.min_rate_bps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub realizations: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            realizations: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Trade-off sweep: one curve per interferer distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeoffConfig {
    pub interest_distance: f64,
    pub interferer_distances: Vec<f64>,
    pub interferers: usize,
    /// Interferer transmit power; `P_max` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interferer_power_dbm: Option<f64>,
    #[serde(default = "default_fading_samples")]
    pub fading_samples: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_grid_floor")]
    pub grid_floor: f64,
}

fn default_fading_samples() -> usize {
    5000
}

fn default_grid_points() -> usize {
    400
}

fn default_grid_floor() -> f64 {
    1e-6
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> EEParams {
        self.ee.params()
    }

    pub fn user_counts(&self) -> Vec<usize> {
        self.system.users.values()
    }

    pub fn validate(&self) -> Result<()> {
        if self.system.processing_gain == 0 {
            return Err(Error::Config("processing gain must be at least 1".into()));
        }
        if self.monte_carlo.realizations == 0 {
            return Err(Error::Config("at least one realization is required".into()));
        }
        let users = self.user_counts();
        if users.is_empty() {
            return Err(Error::Config("the user sweep is empty".into()));
        }
        if users.contains(&0) {
            return Err(Error::Config("user counts must be at least 1".into()));
        }
        if let UserSweep::Range { from, to } = self.system.users {
            if from > to {
                return Err(Error::Config(format!("empty user range {from}..={to}")));
            }
        }
        self.geometry.validate()?;
        if let GeometryKind::Fixed { interferers, .. } = &self.geometry {
            if let Some(k) = users.iter().find(|&&k| k != interferers.len() + 1) {
                return Err(Error::Config(format!(
                    "fixed geometry places {} users, sweep asks for {k}",
                    interferers.len() + 1
                )));
            }
        }
        if !(self.channel.path_loss_exponent > 0.0) {
            return Err(Error::Config("path loss exponent must be positive".into()));
        }
        self.params().validate()?;
        self.verhulst.validate()?;
        if self.verhulst.initial_power.is_some() {
            return Err(Error::Config(
                "initial powers cannot be set in a scenario file; runs start at the noise power".into(),
            ));
        }
        if let Some(t) = &self.tradeoff {
            if t.interferer_distances.is_empty() {
                return Err(Error::Config("trade-off needs at least one interferer distance".into()));
            }
            for s in self.tradeoff_setups()? {
                s.validate()?;
            }
        }
        Ok(())
    }

    /// One trade-off setup per configured interferer distance, all sharing
    /// codes and fading draws.
    pub fn tradeoff_setups(&self) -> Result<Vec<TradeoffSetup>> {
        let t = self
            .tradeoff
            .as_ref()
            .ok_or_else(|| Error::Config("scenario has no [tradeoff] section".into()))?;
        let power = dbm_to_watt(t.interferer_power_dbm.unwrap_or(self.ee.max_power_dbm));
        Ok(t.interferer_distances
            .iter()
            .map(|&d| TradeoffSetup {
                receiver: self.system.receiver,
                processing_gain: self.system.processing_gain,
                interest_distance: t.interest_distance,
                interferer_distance: d,
                interferers: t.interferers,
                interferer_power: power,
                path_loss_exponent: self.channel.path_loss_exponent,
                fading: self.channel.fading,
                fading_samples: t.fading_samples,
                grid_points: t.grid_points,
                grid_floor: t.grid_floor,
                seed: self.monte_carlo.seed,
            })
            .collect())
    }
}
