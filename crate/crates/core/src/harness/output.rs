use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;
use super::experiment::{hex, RawRow, RunReport, SweepError};
use crate::error::{Error, Result};
use crate::tradeoff::{TradeoffCurve, TradeoffSetup};

pub const RAW_FILE: &str = "raw.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const TRADEOFF_FILE: &str = "tradeoff.csv";
pub const TRADEOFF_SUMMARY_FILE: &str = "tradeoff_summary.csv";

const RAW_HEADER: [&str; 17] = [
    "users",
    "realization",
    "seed",
    "status",
    "removed",
    "outage",
    "sum_rate_bps",
    "sum_tx_power_w",
    "sum_power_w",
    "sum_power_retained_w",
    "global_ee_bit_per_j",
    "global_ee_retained_bit_per_j",
    "converged",
    "rounds",
    "target_limited",
    "draw_checksum",
    "algorithm",
];

const AGGREGATE_HEADER: [&str; 11] = [
    "users",
    "realizations",
    "failed",
    "sum_rate_bps",
    "sum_tx_power_w",
    "sum_power_w",
    "sum_power_retained_w",
    "global_ee_bit_per_j",
    "global_ee_retained_bit_per_j",
    "outage",
    "receiver",
];

/// Paths written by [`emit_results`].
#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub raw: PathBuf,
    pub aggregate: PathBuf,
    pub metadata: PathBuf,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_bytes<I, R>(path: &Path, header: &[&str], records: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in records {
        w.write_record(r).map_err(|e| Error::csv(path, e))?;
    }
    w.into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn unix_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn raw_record(r: &RawRow, algorithm: &str) -> Vec<String> {
    vec![
        r.users.to_string(),
        r.realization.to_string(),
        r.seed.to_string(),
        r.status.clone(),
        r.removed.to_string(),
        r.outage.to_string(),
        r.sum_rate.to_string(),
        r.sum_tx_power.to_string(),
        r.sum_power.to_string(),
        r.sum_power_retained.to_string(),
        r.global_ee.to_string(),
        r.global_ee_retained.to_string(),
        r.converged.to_string(),
        r.rounds.to_string(),
        r.target_limited.to_string(),
        r.draw_checksum.clone(),
        algorithm.to_string(),
    ]
}

/// Writes `raw.csv`, `aggregate.csv` and `metadata.json` into `dir`.
///
/// Numbers are written in shortest round-trip decimal form, so the tables
/// are byte-identical across reruns with the same configuration.
pub fn emit_results(report: &RunReport, dir: &Path) -> Result<EmittedFiles> {
    create_dir(dir)?;
    let files = EmittedFiles {
        raw: dir.join(RAW_FILE),
        aggregate: dir.join(AGGREGATE_FILE),
        metadata: dir.join(METADATA_FILE),
    };
    let algorithm = report.config.system.algorithm.as_str();
    let receiver = report.config.system.receiver.as_str();

    let raw = csv_bytes(
        &files.raw,
        &RAW_HEADER,
        report.raw.iter().map(|r| raw_record(r, algorithm)),
    )?;
    let aggregate = csv_bytes(
        &files.aggregate,
        &AGGREGATE_HEADER,
        report.aggregates.iter().map(|a| {
            vec![
                a.users.to_string(),
                a.realizations.to_string(),
                a.failed.to_string(),
                a.sum_rate.to_string(),
                a.sum_tx_power.to_string(),
                a.sum_power.to_string(),
                a.sum_power_retained.to_string(),
                a.global_ee.to_string(),
                a.global_ee_retained.to_string(),
                a.outage.to_string(),
                receiver.to_string(),
            ]
        }),
    )?;
    let config_json = serde_json::to_value(&report.config)
        .map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))?;
    // The digest names the scenario, not where its results were written.
    let mut scenario = report.config.clone();
    scenario.output.dir = None;
    let scenario_json = serde_json::to_value(&scenario)
        .map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))?;
    let metadata = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": format!("v{}", env!("CARGO_PKG_VERSION")),
        "created_unix": unix_time(),
        "seed": report.config.monte_carlo.seed,
        "realizations": report.config.monte_carlo.realizations,
        "config": config_json,
        "config_sha256": sha256_hex(scenario_json.to_string().as_bytes()),
        "draw_fingerprint": report.draw_fingerprint(),
        "raw_sha256": sha256_hex(&raw),
        "aggregate_sha256": sha256_hex(&aggregate),
        "errors": report.errors,
        "conventions": {
            "outage": "removed users / K per realization, averaged",
            "sum_power_w": "transmit plus circuit power of active users",
            "sum_power_retained_w": "sum_power_w plus circuit power of removed users",
            "global_ee_bit_per_j": "removed users excluded from numerator and denominator",
        },
    });
    write_file(&files.raw, &raw)?;
    write_file(&files.aggregate, &aggregate)?;
    let text = serde_json::to_string_pretty(&metadata).expect("metadata is plain JSON");
    write_file(&files.metadata, text.as_bytes())?;
    Ok(files)
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    let text = record.get(i).unwrap_or("");
    text.parse().map_err(|_| {
        Error::Config(format!(
            "{}: cannot parse column {} value '{text}'",
            path.display(),
            RAW_HEADER.get(i).copied().unwrap_or("?")
        ))
    })
}

/// Reads a run written by [`emit_results`]; aggregates are recomputed from
/// the raw rows.
pub fn load_report(dir: &Path) -> Result<RunReport> {
    let meta_path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let config: ScenarioConfig = serde_json::from_value(meta["config"].clone())
        .map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let errors: Vec<SweepError> = serde_json::from_value(meta["errors"].clone()).unwrap_or_default();

    let raw_path = dir.join(RAW_FILE);
    let mut reader = csv::Reader::from_path(&raw_path).map_err(|e| Error::csv(&raw_path, e))?;
    let header = reader.headers().map_err(|e| Error::csv(&raw_path, e))?.clone();
    if header.iter().ne(RAW_HEADER.iter().copied()) {
        return Err(Error::Config(format!("{}: unexpected header", raw_path.display())));
    }
    let mut raw = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::csv(&raw_path, e))?;
        let p = raw_path.as_path();
        raw.push(RawRow {
            users: field(&rec, 0, p)?,
            realization: field(&rec, 1, p)?,
            seed: field(&rec, 2, p)?,
            status: field(&rec, 3, p)?,
            removed: field(&rec, 4, p)?,
            outage: field(&rec, 5, p)?,
            sum_rate: field(&rec, 6, p)?,
            sum_tx_power: field(&rec, 7, p)?,
            sum_power: field(&rec, 8, p)?,
            sum_power_retained: field(&rec, 9, p)?,
            global_ee: field(&rec, 10, p)?,
            global_ee_retained: field(&rec, 11, p)?,
            converged: field(&rec, 12, p)?,
            rounds: field(&rec, 13, p)?,
            target_limited: field(&rec, 14, p)?,
            draw_checksum: field(&rec, 15, p)?,
        });
    }
    Ok(RunReport::from_rows(config, raw, errors))
}

/// Writes the swept curves and a one-line-per-curve summary into `dir`.
pub fn emit_tradeoff(
    config: &ScenarioConfig,
    setups: &[TradeoffSetup],
    curves: &[TradeoffCurve],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let curve_path = dir.join(TRADEOFF_FILE);
    let summary_path = dir.join(TRADEOFF_SUMMARY_FILE);
    let meta_path = dir.join(METADATA_FILE);

    let mut rows = Vec::new();
    for (s, c) in setups.iter().zip(curves) {
        for i in 0..c.sweep_powers.len() {
            rows.push(vec![
                s.interferer_distance.to_string(),
                i.to_string(),
                c.sweep_powers[i].to_string(),
                c.gamma_points[i].to_string(),
                c.se_points[i].to_string(),
                c.ee_points[i].to_string(),
            ]);
        }
    }
    let curve_bytes = csv_bytes(
        &curve_path,
        &[
            "interferer_distance_m",
            "index",
            "power_w",
            "mean_sinr",
            "se_bit_per_s_hz",
            "ee_bit_per_j",
        ],
        rows,
    )?;
    let summary = csv_bytes(
        &summary_path,
        &[
            "interferer_distance_m",
            "coupling",
            "coupling_reciprocal",
            "max_ee_power_w",
            "max_ee_se_bit_per_s_hz",
            "se_at_max_power_bit_per_s_hz",
            "lambda_bit_per_s_hz",
            "solver_sinr",
            "solver_power_w",
            "se_monotone",
            "ee_unimodal",
        ],
        setups.iter().zip(curves).map(|(s, c)| {
            vec![
                s.interferer_distance.to_string(),
                c.coupling.to_string(),
                c.coupling_reciprocal.to_string(),
                c.sweep_powers[c.max_ee_index].to_string(),
                c.se_points[c.max_ee_index].to_string(),
                c.se_points[c.se_points.len() - 1].to_string(),
                c.lambda_gap.to_string(),
                c.solver_gamma_star.to_string(),
                c.solver_power.to_string(),
                c.se_monotone.to_string(),
                c.ee_unimodal.to_string(),
            ]
        }),
    )?;
    let metadata = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": format!("v{}", env!("CARGO_PKG_VERSION")),
        "created_unix": unix_time(),
        "config": config,
        "tradeoff_sha256": sha256_hex(&curve_bytes),
        "summary_sha256": sha256_hex(&summary),
        "conventions": {
            "se_at_max_power": "stands in for the asymptotic SE, which needs unbounded power",
            "coupling": "mean gain of the user of interest over mean gain of an interferer",
        },
    });
    write_file(&curve_path, &curve_bytes)?;
    write_file(&summary_path, &summary)?;
    let text = serde_json::to_string_pretty(&metadata).expect("metadata is plain JSON");
    write_file(&meta_path, text.as_bytes())?;
    Ok(vec![curve_path, summary_path, meta_path])
}
