//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eecdma::channel::{draw_channel, draw_placement, FadingKind, GeometryKind};
use eecdma::control::{
    probe_uniqueness, run, run_algorithm1, run_algorithm2, run_observed, Algorithm, ControlConfig,
    ControlOutcome, Scenario,
};
use eecdma::harness::experiment::{run_experiment_with_workers, RunReport};
use eecdma::harness::{paired_comparison, preset, Metric, ScenarioConfig};
use eecdma::metrics::{dbm_to_watt, theta, EEParams};
use eecdma::optimizer::{
    check_quasiconcavity, log_grid, optimal_sinr, utility_at_sinr, verify_nash, NashCheck,
};
use eecdma::spreading::{build_decorrelator, generate_codes, sinr_dec, Receiver};
use eecdma::tradeoff::sweep_tradeoff;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn fig_params() -> EEParams {
    EEParams {
        packet_bits: 80,
        info_bits: 50,
        circuit_power: dbm_to_watt(7.0),
        bandwidth: 1e6,
        max_power: dbm_to_watt(10.0),
        noise_power: dbm_to_watt(-90.0),
        ber: 1e-3,
        min_rate: 5e5,
    }
}

/// Random utility constants: I~, p_c, theta (through the BER) and M.
fn random_case(rng: &mut ChaCha8Rng) -> (f64, EEParams, f64) {
    let eff = 10f64.powf(rng.random_range(-12.0..-3.0));
    let packet_bits = rng.random_range(10..=200u32);
    let mut p = fig_params();
    p.packet_bits = packet_bits;
    p.info_bits = rng.random_range(1..=packet_bits);
    p.circuit_power = 10f64.powf(rng.random_range(-5.0..-1.0));
    p.ber = 10f64.powf(rng.random_range(-7.0..-1.5));
    let t = theta(p.ber).unwrap();
    (eff, p, t)
}

/// Brute-force argmax of the utility over the SINR: log grid, then a dense
/// linear grid around the coarse winner.
fn grid_argmax(eff: f64, p: &EEParams, t: f64) -> f64 {
    let eval = |g: f64| {
        let r = p.bandwidth * (1.0 + t * g).log2();
        let f = (1.0 - (-g).exp()).powi(p.packet_bits as i32);
        f64::from(p.info_bits) / f64::from(p.packet_bits) * r * f / (g * eff + p.circuit_power)
    };
    let n = 200_000;
    let (lo, hi) = (1e-3f64.ln(), 1e13f64.ln());
    let coarse: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, g) in coarse.iter().enumerate() {
        let v = eval(*g);
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    let a = coarse[best.saturating_sub(1)];
    let b = coarse[(best + 1).min(n - 1)];
    let m = 20_000;
    let mut arg = a;
    best_v = f64::NEG_INFINITY;
    for i in 0..=m {
        let g = a + (b - a) * i as f64 / m as f64;
        let v = eval(g);
        if v > best_v {
            arg = g;
            best_v = v;
        }
    }
    arg
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = log_grid(1e-3, 1e9, 10_000);
    let mut violations = 0;
    for _ in 0..100 {
        let (eff, p, t) = random_case(&mut rng);
        let report = check_quasiconcavity(|g| utility_at_sinr(g, eff, &p, t), &grid).unwrap();
        if !report.passed {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("100 cases, 10^4-point grid, {violations} violations"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (eff, p, t) = random_case(&mut rng);
        let solved = optimal_sinr(eff, &p, t).unwrap().gamma_star;
        worst = worst.max(rel(solved, grid_argmax(eff, &p, t)));
    }
    outcome(worst < 1e-3, format!("100 cases, worst relative gap {worst:.3e}"))
}

fn criterion_3() -> Outcome {
    let mut p = fig_params();
    p.circuit_power = 0.0;
    let t = theta(p.ber).unwrap();
    let g: Vec<f64> = [1e-12, 1e-9, 1e-6, 1e-3]
        .iter()
        .map(|&eff| optimal_sinr(eff, &p, t).unwrap().gamma_star)
        .collect();
    let lo = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = g.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    outcome(spread < 1e-6, format!("gamma* = {:.9} .. {:.9}, spread {spread:.2e}", lo, hi))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_identity: f64 = 0.0;
    let mut worst_decorrelation: f64 = 0.0;
    let mut worst_inverse: f64 = 0.0;
    let mut sinr_changed = 0;
    let mut built = 0;
    let mut unavailable = 0;
    for i in 0..100u64 {
        let k = if i < 10 { 63 } else { rng.random_range(1..=63) };
        let codes = generate_codes(63, k, 1000 + i).unwrap();
        let bank = match build_decorrelator(&codes) {
            Ok(b) => b,
            Err(_) => {
                unavailable += 1;
                continue;
            }
        };
        built += 1;
        let d = bank.filters();
        let dtd = d.transpose() * d;
        worst_identity = worst_identity.max((dtd - bank.correlation_inverse()).amax());
        let std = codes.code_matrix().transpose() * d;
        let eye = nalgebra::DMatrix::<f64>::identity(k, k);
        worst_decorrelation = worst_decorrelation.max((std - &eye).amax());
        let inverse = codes.correlation() * bank.correlation_inverse() - eye;
        worst_inverse = worst_inverse.max(inverse.amax());

        let gains: Vec<f64> = (0..k).map(|_| 10f64.powf(rng.random_range(-8.0..-3.0))).collect();
        let ch = eecdma::channel::ChannelState::from_gain_power(&gains).unwrap();
        let powers: Vec<f64> = (0..k).map(|_| rng.random_range(1e-6..1e-2)).collect();
        let base = sinr_dec(&powers, &ch, &bank, 1e-12).unwrap();
        for u in 0..k {
            let mut other = powers.clone();
            for (j, p) in other.iter_mut().enumerate() {
                if j != u {
                    *p = rng.random_range(0.0..1.0);
                }
            }
            let moved = sinr_dec(&other, &ch, &bank, 1e-12).unwrap();
            if moved.gamma[u].to_bits() != base.gamma[u].to_bits() {
                sinr_changed += 1;
            }
        }
    }
    outcome(
        built == 100 && worst_identity < 1e-10 && sinr_changed == 0,
        format!(
            "{built} banks ({unavailable} unavailable), max|D'D - R^-1| = {worst_identity:.2e}, \
             max|S'D - I| = {worst_decorrelation:.2e}, max|R R^-1 - I| = {worst_inverse:.2e}, {sinr_changed} SINR changes under interferer perturbation"
        ),
    )
}

/// Ring-placed realization with the shared link constants.
fn ring_scenario(users: usize, n: usize, receiver: Receiver, seed: u64) -> Scenario {
    let geometry = GeometryKind::Ring {
        r_int: 50.0,
        r_ext: 200.0,
    };
    let placement = draw_placement(&geometry, users, seed).unwrap();
    let channel = draw_channel(&placement, 2.0, FadingKind::Rayleigh, seed).unwrap();
    let codes = generate_codes(n, users, seed).unwrap();
    Scenario::new(channel, codes, receiver, fig_params()).unwrap()
}

/// Largest relative distance of the achieved SINR from a freshly solved
/// optimum at the final interference.
fn fixed_point_error(scenario: &Scenario, out: &ControlOutcome) -> f64 {
    let st = &out.final_state;
    let mut worst: f64 = 0.0;
    for k in 0..scenario.users() {
        if st.active[k] {
            let g = optimal_sinr(st.eff_interference[k], scenario.params(), scenario.qos(k).theta)
                .unwrap()
                .gamma_star;
            worst = worst.max(rel(st.gamma[k], g));
        }
    }
    worst
}

fn criterion_5() -> Outcome {
    let params = fig_params();
    let gain = 50f64.powi(-2);
    let ch = eecdma::channel::ChannelState::from_gain_power(&[gain]).unwrap();
    let sc = Scenario::new(ch, generate_codes(15, 1, 0).unwrap(), Receiver::Mf, params).unwrap();
    let t = sc.qos(0).theta;
    let target = optimal_sinr(params.noise_power / gain, &params, t).unwrap().gamma_star;
    let mut first_within = None;
    let mut it = 0;
    let out = run_observed(&sc, Algorithm::EeSe, &ControlConfig::default(), &mut |s| {
        if first_within.is_none() && rel(s.gamma[0], target) < 1e-3 {
            first_within = Some(it);
        }
        it += 1;
    })
    .unwrap();
    let single_err = rel(out.final_state.gamma[0], target);
    let single_ok = single_err < 1e-3 && first_within.is_some_and(|i| i <= 500);

    let mut cases = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 0;
    while cases < 30 {
        let k = 2 + (seed as usize % 6);
        let sc = ring_scenario(k, 63, Receiver::Mf, 500 + seed);
        seed += 1;
        let out = run_algorithm1(&sc, &ControlConfig::default()).unwrap();
        if !out.removed_users.is_empty() {
            continue;
        }
        cases += 1;
        worst = worst.max(fixed_point_error(&sc, &out));
    }
    outcome(
        single_ok && worst < 1e-3,
        format!(
            "single user: error {single_err:.2e}, within 1e-3 at iteration {first_within:?}; \
             {cases} multi-user MF cases, worst error {worst:.2e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let check = NashCheck::default();
    let config = ControlConfig::default();
    let mut cases = 0;
    let mut nash_fail = 0;
    let mut worst_gain: f64 = f64::NEG_INFINITY;
    let mut restart_fail = 0;
    let mut worst_restart: f64 = 0.0;
    let mut seed = 0u64;
    while cases < 50 {
        let receiver = if cases % 5 == 4 { Receiver::Dec } else { Receiver::Mf };
        let k = 2 + (seed as usize % 7);
        let sc = ring_scenario(k, 63, receiver, 900 + seed);
        seed += 1;
        let out = run(&sc, Algorithm::EeSe, &config).unwrap();
        if !out.converged || !out.removed_users.is_empty() {
            continue;
        }
        cases += 1;
        let nash = verify_nash(&sc, &out, &check).unwrap();
        worst_gain = worst_gain.max(nash.max_gain.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        if !nash.passed {
            nash_fail += 1;
        }
        let probe = probe_uniqueness(&sc, Algorithm::EeSe, &config, &out, 5, seed, 1e-4).unwrap();
        worst_restart = worst_restart.max(probe.max_relative_diff);
        if !probe.agree {
            restart_fail += 1;
        }
    }
    outcome(
        nash_fail == 0 && restart_fail == 0,
        format!(
            "{cases} scenarios: best unilateral gain {worst_gain:.2e} ({nash_fail} failures), \
             restart spread {worst_restart:.2e} ({restart_fail} failures)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let config = preset("fig2_tradeoff").unwrap();
    let params = config.params();
    let mut lambda = Vec::new();
    let mut shapes_ok = true;
    for s in config.tradeoff_setups().unwrap() {
        let c = sweep_tradeoff(&s, &params).unwrap();
        shapes_ok &= c.se_monotone && c.ee_unimodal;
        lambda.push((s.interferer_distance, c.lambda_gap));
    }
    let get = |d: f64| lambda.iter().find(|(x, _)| *x == d).unwrap().1;
    let (l200, l100, l80) = (get(200.0), get(100.0), get(80.0));
    outcome(
        l80 < l100 && l100 < l200,
        format!(
            "Lambda(80) = {l80:.4}, Lambda(100) = {l100:.4}, Lambda(200) = {l200:.4} bit/s/Hz; \
             SE monotone and EE unimodal on every curve: {shapes_ok}"
        ),
    )
}

fn variant(base: &ScenarioConfig, receiver: Receiver, algorithm: Algorithm) -> RunReport {
    let mut c = base.clone();
    c.system.receiver = receiver;
    c.system.algorithm = algorithm;
    run_experiment_with_workers(&c, None).unwrap()
}

fn mean_of(r: &RunReport, k: usize, metric: Metric) -> f64 {
    let a = r.aggregate_for(k).unwrap();
    match metric {
        Metric::GlobalEe => a.global_ee,
        Metric::Outage => a.outage,
        Metric::SumPower => a.sum_power,
        Metric::SumPowerRetained => a.sum_power_retained,
        Metric::SumTxPower => a.sum_tx_power,
        Metric::SumRate => a.sum_rate,
        Metric::GlobalEeRetained => a.global_ee_retained,
    }
}

fn criterion_8() -> Outcome {
    let base = preset("fig34_mixed").unwrap();
    let algs = [Algorithm::EeSe, Algorithm::EeSeMinRate, Algorithm::Baseline];
    let mf: Vec<RunReport> = algs.iter().map(|&a| variant(&base, Receiver::Mf, a)).collect();
    let dec: Vec<RunReport> = algs.iter().map(|&a| variant(&base, Receiver::Dec, a)).collect();
    let ks = base.user_counts();
    let mut notes = Vec::new();

    let mut a_ok = true;
    for &k in ks.iter().filter(|&&k| k >= 7) {
        let e: Vec<f64> = mf.iter().map(|r| mean_of(r, k, Metric::GlobalEe)).collect();
        if !(e[0] >= e[1] && e[1] >= e[2]) {
            a_ok = false;
            notes.push(format!("(a) fails at K={k}: {e:?}"));
        }
    }
    let mut b_ok = true;
    for reports in [&mf, &dec] {
        for &k in &ks {
            let (o1, o2) = (
                mean_of(&reports[0], k, Metric::Outage),
                mean_of(&reports[1], k, Metric::Outage),
            );
            if o1 < o2 {
                b_ok = false;
                notes.push(format!("(b) fails at K={k}: {o1} < {o2}"));
            }
        }
    }
    let mut c_ok = true;
    let mut excluded_conv_fail = Vec::new();
    for (i, alg) in algs.iter().enumerate() {
        for &k in ks.iter().filter(|&&k| k >= 7) {
            let (pd, pm) = (
                mean_of(&dec[i], k, Metric::SumPowerRetained),
                mean_of(&mf[i], k, Metric::SumPowerRetained),
            );
            if !(pd < pm) {
                c_ok = false;
                notes.push(format!("(c) power fails for {alg} at K={k}"));
            }
            if mean_of(&dec[i], k, Metric::SumPower) >= mean_of(&mf[i], k, Metric::SumPower) {
                excluded_conv_fail.push(format!("{alg}:K={k}"));
            }
            if *alg != Algorithm::Baseline {
                let (od, om) = (mean_of(&dec[i], k, Metric::Outage), mean_of(&mf[i], k, Metric::Outage));
                if !(od < om) {
                    c_ok = false;
                    notes.push(format!("(c) outage fails for {alg} at K={k}"));
                }
            }
        }
    }
    // Paired intervals for the headline comparison, for the record.
    let k_max = *ks.last().unwrap();
    let cmp = paired_comparison(&mf[0], &mf[2], Metric::GlobalEe).unwrap();
    let last = cmp.iter().find(|r| r.users == k_max).unwrap();
    let e7: Vec<String> = mf.iter().map(|r| format!("{:.3e}", mean_of(r, 7, Metric::GlobalEe))).collect();
    let mut detail = format!(
        "(a) {a_ok} (b) {b_ok} (c) {c_ok}; MF EE at K=7 alg1/alg2/baseline = {}; \
         alg1-baseline EE at K={k_max}: {:.3e} +- {:.3e} ({}); \
         DEC<MF sum power with removed users' circuit power excluded fails at [{}]",
        e7.join("/"),
        last.mean_diff,
        last.half_width,
        last.verdict.as_str(),
        excluded_conv_fail.join(" ")
    );
    for n in notes {
        detail.push_str("; ");
        detail.push_str(&n);
    }
    outcome(a_ok && b_ok && c_ok, detail)
}

fn criterion_9() -> Outcome {
    let low = preset("fig56_fullload").unwrap();
    let high = preset("fig56_fullload_1mbps").unwrap();
    let run_alg = |c: &ScenarioConfig, a: Algorithm| variant(c, Receiver::Dec, a);
    let alg1 = run_alg(&low, Algorithm::EeSe);
    let base = run_alg(&low, Algorithm::Baseline);
    let alg2_low = run_alg(&low, Algorithm::EeSeMinRate);
    let alg2_high = run_alg(&high, Algorithm::EeSeMinRate);
    let ks = low.user_counts();

    // Mean EE decreases with K: no consecutive step is a significant
    // increase, and the last K is significantly below the first.
    let mut trend_ok = true;
    let mut notes = Vec::new();
    for (name, r) in [("alg1", &alg1), ("alg2@50k", &alg2_low), ("alg2@1M", &alg2_high), ("baseline", &base)] {
        let mut rises = 0;
        let mut significant_rises = Vec::new();
        for w in ks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let xs: Vec<f64> = r.raw.iter().filter(|x| x.users == a).map(|x| x.global_ee).collect();
            let ys: Vec<f64> = r.raw.iter().filter(|x| x.users == b).map(|x| x.global_ee).collect();
            let d: Vec<f64> = ys.iter().zip(&xs).map(|(y, x)| y - x).collect();
            let (m, h) = mean_ci(&d);
            if m > 0.0 {
                rises += 1;
                if m > h {
                    significant_rises.push(b);
                }
            }
        }
        let first: Vec<f64> = r.raw.iter().filter(|x| x.users == ks[0]).map(|x| x.global_ee).collect();
        let last: Vec<f64> = r
            .raw
            .iter()
            .filter(|x| x.users == *ks.last().unwrap())
            .map(|x| x.global_ee)
            .collect();
        let d: Vec<f64> = last.iter().zip(&first).map(|(l, f)| l - f).collect();
        let (m, h) = mean_ci(&d);
        let ok = significant_rises.is_empty() && m < -h;
        trend_ok &= ok;
        notes.push(format!(
            "{name}: {rises} nominal rises, significant at {significant_rises:?}, EE(63)-EE(3) = {m:.3e} +- {h:.3e}"
        ));
    }

    // Per K: mean over realizations of the paired |EE difference|.
    let per_k = |a: &RunReport, b: &RunReport| -> Vec<f64> {
        ks.iter()
            .map(|&k| {
                let d: Vec<f64> = a
                    .raw
                    .iter()
                    .zip(&b.raw)
                    .filter(|(x, y)| x.users == k && x.is_ok() && y.is_ok())
                    .map(|(x, y)| (x.global_ee - y.global_ee).abs())
                    .collect();
                d.iter().sum::<f64>() / d.len() as f64
            })
            .collect()
    };
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (to_alg1_low, to_alg1_high) = (per_k(&alg2_low, &alg1), per_k(&alg2_high, &alg1));
    let (to_base_low, to_base_high) = (per_k(&alg2_low, &base), per_k(&alg2_high, &base));
    let alg1_breaks: Vec<usize> = ks
        .iter()
        .zip(to_alg1_high.iter().zip(&to_alg1_low))
        .filter(|(_, (h, l))| h > l)
        .map(|(k, _)| *k)
        .collect();
    let base_breaks: Vec<usize> = ks
        .iter()
        .zip(to_base_low.iter().zip(&to_base_high))
        .filter(|(_, (l, h))| l > h)
        .map(|(k, _)| *k)
        .collect();
    let toward_ok = alg1_breaks.is_empty()
        && base_breaks.is_empty()
        && avg(&to_alg1_high) < avg(&to_alg1_low)
        && avg(&to_base_low) < avg(&to_base_high);
    outcome(
        trend_ok && toward_ok,
        format!(
            "EE trend {trend_ok} [{}]; mean |alg2 - alg1| 50k = {:.3e}, 1M = {:.3e}, wrong direction at K {alg1_breaks:?}; \
             mean |alg2 - baseline| 50k = {:.3e}, 1M = {:.3e}, wrong direction at K {base_breaks:?}",
            notes.join("; "),
            avg(&to_alg1_low),
            avg(&to_alg1_high),
            avg(&to_base_low),
            avg(&to_base_high),
        ),
    )
}

/// Mean and 95% half-width of a paired-difference sample.
fn mean_ci(d: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).unwrap().inverse_cdf(0.975);
    (m, t * (var / n).sqrt())
}

fn criterion_10() -> Outcome {
    let mut cases = 0;
    let mut mismatched = 0;
    let mut with_removals = 0;
    let mut worst: f64 = 0.0;
    let mut precondition_fail = 0;
    for seed in 0..60u64 {
        let receiver = if seed % 3 == 0 { Receiver::Dec } else { Receiver::Mf };
        let k = 2 + (seed as usize % 14);
        let mut sc = ring_scenario(k, 63, receiver, 2000 + seed);
        let mut p = *sc.params();
        p.min_rate = 2e7;
        sc = sc.with_params(p).unwrap();
        let a1 = run_algorithm1(&sc, &ControlConfig::default()).unwrap();
        let a2 = run_algorithm2(&sc, &ControlConfig::default()).unwrap();
        for (k, g) in a1.final_state.gamma_star.iter().enumerate() {
            if a1.final_state.active[k] && sc.qos(k).gamma_min < *g {
                precondition_fail += 1;
            }
        }
        cases += 1;
        if !a1.removed_users.is_empty() {
            with_removals += 1;
        }
        if a1.removed_users != a2.removed_users {
            mismatched += 1;
            continue;
        }
        for (x, y) in a1.final_state.p.iter().zip(&a2.final_state.p) {
            if *x != *y {
                worst = worst.max(rel(*y, *x));
            }
        }
    }
    outcome(
        mismatched == 0 && worst <= 1e-12 && precondition_fail == 0,
        format!(
            "{cases} scenarios ({with_removals} with removals), R_min = 20 Mbit/s, \
             {mismatched} removal mismatches, worst power difference {worst:.2e}"
        ),
    )
}

fn run_cli(out: &Path, workers: usize) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_eecdma"))
        .args(["run", "--preset", "fig34_mixed", "--realizations", "20", "--seed", "7", "--out"])
        .arg(out)
        .env("EECDMA_WORKERS", workers.to_string())
        .output()
        .expect("binary runs")
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let runs = [("serial-a", 1), ("serial-b", 1), ("parallel-a", 4), ("parallel-b", 4)];
    let mut tables = Vec::new();
    let mut metadata = Vec::new();
    for (name, workers) in runs {
        let res = run_cli(&out, workers);
        if !res.status.success() {
            return outcome(false, format!("{name} failed: {}", String::from_utf8_lossy(&res.stderr)));
        }
        let raw = std::fs::read(out.join("raw.csv")).unwrap();
        let agg = std::fs::read(out.join("aggregate.csv")).unwrap();
        let mut meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
        meta.as_object_mut().unwrap().remove("created_unix");
        tables.push((raw, agg));
        metadata.push(meta);
        std::fs::remove_dir_all(&out).unwrap();
    }
    let same_tables = tables.windows(2).all(|w| w[0] == w[1]);
    let same_meta = metadata.windows(2).all(|w| w[0] == w[1]);
    let rows = tables[0].0.iter().filter(|b| **b == b'\n').count() - 1;
    outcome(
        same_tables && same_meta,
        format!(
            "4 CLI runs (2 serial, 2 on 4 workers), {rows} raw rows: tables identical {same_tables}, \
             metadata identical apart from timestamp {same_meta}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 11] = [
        ("1 utility quasiconcavity", criterion_1, Some(Duration::from_secs(10))),
        ("2 optimal SINR vs grid argmax", criterion_2, Some(Duration::from_secs(30))),
        ("3 optimal SINR invariance at p_c = 0", criterion_3, None),
        ("4 decorrelator identities", criterion_4, None),
        ("5 Verhulst convergence", criterion_5, None),
        ("6 Nash equilibrium and uniqueness", criterion_6, None),
        ("7 trade-off gap ordering", criterion_7, Some(Duration::from_secs(300))),
        ("8 mixed-load ensemble trends", criterion_8, Some(Duration::from_secs(900))),
        ("9 full-load decorrelator trends", criterion_9, None),
        ("10 algorithm 2 degeneracy", criterion_10, None),
        ("11 pipeline determinism", criterion_11, None),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, f, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.starts_with(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut o = f();
        let elapsed = start.elapsed();
        if let Some(b) = budget {
            if elapsed > b {
                o.passed = false;
                o.detail.push_str(&format!("; over the {}s budget", b.as_secs()));
            }
        }
        if !o.passed {
            failed += 1;
        }
        println!(
            "[{}] criterion {name} ({:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
