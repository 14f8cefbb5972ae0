use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::experiment::{RawRow, RunReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SumRate,
    SumTxPower,
    SumPower,
    SumPowerRetained,
    GlobalEe,
    GlobalEeRetained,
    Outage,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::SumRate,
        Metric::SumTxPower,
        Metric::SumPower,
        Metric::SumPowerRetained,
        Metric::GlobalEe,
        Metric::GlobalEeRetained,
        Metric::Outage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SumRate => "sum_rate",
            Metric::SumTxPower => "sum_tx_power",
            Metric::SumPower => "sum_power",
            Metric::SumPowerRetained => "sum_power_retained",
            Metric::GlobalEe => "global_ee",
            Metric::GlobalEeRetained => "global_ee_retained",
            Metric::Outage => "outage",
        }
    }

    pub fn of(self, row: &RawRow) -> f64 {
        match self {
            Metric::SumRate => row.sum_rate,
            Metric::SumTxPower => row.sum_tx_power,
            Metric::SumPower => row.sum_power,
            Metric::SumPowerRetained => row.sum_power_retained,
            Metric::GlobalEe => row.global_ee,
            Metric::GlobalEeRetained => row.global_ee_retained,
            Metric::Outage => row.outage,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AGreater,
    BGreater,
    Indistinguishable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AGreater => "a>b",
            Verdict::BGreater => "b>a",
            Verdict::Indistinguishable => "indistinguishable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub users: usize,
    pub pairs: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Mean of the paired differences `a - b`.
    pub mean_diff: f64,
    /// Half-width of the 95% confidence interval of `mean_diff`.
    pub half_width: f64,
    pub verdict: Verdict,
}

/// Paired 95% comparison of `metric` between two runs over the same draws.
pub fn paired_comparison(a: &RunReport, b: &RunReport, metric: Metric) -> Result<Vec<ComparisonRow>> {
    let same_draws = a.raw.len() == b.raw.len()
        && a.raw.iter().zip(&b.raw).all(|(x, y)| {
            x.users == y.users
                && x.realization == y.realization
                && x.seed == y.seed
                && x.draw_checksum == y.draw_checksum
        });
    if !same_draws {
        return Err(Error::Rejected(
            "runs do not share their realizations; rerun both with the same seed, sweep and geometry".into(),
        ));
    }
    let mut users: Vec<usize> = a.raw.iter().map(|r| r.users).collect();
    users.dedup();
    users
        .into_iter()
        .map(|k| {
            let pairs: Vec<(f64, f64)> = a
                .raw
                .iter()
                .zip(&b.raw)
                .filter(|(x, y)| x.users == k && x.is_ok() && y.is_ok())
                .map(|(x, y)| (metric.of(x), metric.of(y)))
                .collect();
            Ok(compare_pairs(k, &pairs))
        })
        .collect()
}

fn compare_pairs(users: usize, pairs: &[(f64, f64)]) -> ComparisonRow {
    let n = pairs.len();
    let nf = n as f64;
    let mean_a = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_b = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).collect();
    let mean_diff = diffs.iter().sum::<f64>() / nf;
    let half_width = if n < 2 {
        if mean_diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        let var = diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (nf - 1.0);
        let t = StudentsT::new(0.0, 1.0, nf - 1.0)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        t * (var / nf).sqrt()
    };
    let verdict = if n == 0 || mean_diff.abs() <= half_width {
        Verdict::Indistinguishable
    } else if mean_diff > 0.0 {
        Verdict::AGreater
    } else {
        Verdict::BGreater
    };
    ComparisonRow {
        users,
        pairs: n,
        mean_a,
        mean_b,
        mean_diff,
        half_width,
        verdict,
    }
}
