//! Acceptance criteria of the model, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`); exits non-zero when any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use siqrng_core::detector::{
    total_afterpulse_enumerated, total_afterpulse_finite, total_afterpulse_infinite,
};
use siqrng_core::entropy::{Channel, DetectorSet};
use siqrng_core::figures::{
    linspace, logspace, single_lag_detector, AfterpulseSweepConfig, AutocorrConfig, MismatchConfig,
    MonteCarlo, RateSweepConfig, SamplingConfig,
};
use siqrng_core::finite::{sampling_epsilon, theta_random_sampling, Method};
use siqrng_core::sim::{simulate, write_records_csv, PulseTrainConfig};
use siqrng_core::{
    AfterpulseSpec, DetectorParams, EntropyReport, PhotonDistribution, PriorResponse, WindowDepth,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// 1. Infinite-history afterpulse at 0.1 lowers the min-entropy by 15-25 %.
fn afterpulse_entropy_drop() -> Outcome {
    let cfg = AfterpulseSweepConfig::default();
    let (np, ip, _) = cfg.modes(0.1).unwrap();
    let drop = (np - ip) / np;
    outcome(
        (0.15..=0.25).contains(&drop),
        format!(
            "Np = {np:.6}, Ip = {ip:.6}, drop = {:.2}% (required 15-25%)",
            drop * 100.0
        ),
    )
}

/// 2. Ip <= Fp <= Np over p in [0, 0.1], strict for p > 0.
fn finite_window_ordering() -> Outcome {
    let cfg = AfterpulseSweepConfig::default();
    for p in linspace(0.0, 0.1, 101) {
        let (np, ip, fp) = cfg.modes(p).unwrap();
        let ok = if p > 0.0 {
            ip < fp && fp < np
        } else {
            ip <= fp && fp <= np
        };
        if !ok {
            return outcome(
                false,
                format!("violated at p = {p}: Np {np}, Fp {fp}, Ip {ip}"),
            );
        }
    }
    outcome(true, "Ip < Fp < Np at all 100 positive rates, equal at 0")
}

/// 3. Simulated autocorrelation within 3 standard errors of the analytic
///    value, and the identical-detector closed form `tau (1 - e_d) p_b p_i`.
fn autocorrelation_oracle() -> Outcome {
    let cfg = AutocorrConfig::default();
    let mc = MonteCarlo {
        pulses: 10_000_000,
        seed: 2024,
        batches: 100,
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for p_i in [0.01, 0.03, 0.05] {
        let analytic = cfg.analytic(p_i).unwrap();
        let (value, stderr) = cfg.simulated(p_i, &mc).unwrap();
        let z = (value - analytic).abs() / stderr;
        pass &= z <= 3.0;
        // closed form for identical detectors
        let tau = (-cfg.nu * cfg.efficiency * 0.5 * cfg.transmittance).exp();
        let p_b = 1.0 - tau * (1.0 - cfg.dark_rate);
        let closed = tau * (1.0 - cfg.dark_rate) * p_b * p_i;
        let rel = relative(analytic, closed);
        pass &= rel <= 1e-12;
        parts.push(format!(
            "p_i={p_i}: analytic {analytic:.6e}, MC {value:.6e} +- {stderr:.1e} ({z:.2} SE), closed form {closed:.6e} (rel {rel:.2e})"
        ));
    }
    outcome(pass, parts.join("; "))
}

/// Least-squares quadratic fit; returns `[c0, c1, c2]`.
fn quadratic_fit(xs: &[f64], ys: &[f64]) -> [f64; 3] {
    let mut a = [[0.0f64; 4]; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let pow = [1.0, x, x * x];
        for r in 0..3 {
            for c in 0..3 {
                a[r][c] += pow[r] * pow[c];
            }
            a[r][3] += pow[r] * y;
        }
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                let pivot_row = a[col];
                for (x, p) in a[r].iter_mut().zip(pivot_row).skip(col) {
                    *x -= f * p;
                }
            }
        }
    }
    [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]]
}

/// 4. Quadratic term vanishes for identical detectors, not for a 2x mismatch.
fn quadratic_degeneration() -> Outcome {
    let xs = linspace(0.0, 0.05, 6);
    let fit = |ratio: f64| {
        let cfg = AutocorrConfig {
            efficiency_ratio: ratio,
            ..Default::default()
        };
        let ys: Vec<f64> = xs.iter().map(|&p| cfg.analytic(p).unwrap()).collect();
        quadratic_fit(&xs, &ys)[2]
    };
    let same = fit(1.0);
    let mismatched = fit(2.0);
    outcome(
        same.abs() < 1e-12 && mismatched.abs() > 0.0,
        format!(
            "identical |c2| = {:.2e} (< 1e-12), 2x efficiency |c2| = {:.3e} (> 0)",
            same.abs(),
            mismatched.abs()
        ),
    )
}

/// Sum over all compositions `j_1 + ... + j_k = n` of `prod p_{j_i}`,
/// listed one by one.
fn compositions(coeff: &dyn Fn(usize) -> f64, n: usize) -> f64 {
    // each composition of n is a subset of the n - 1 cut points
    (0u32..1 << (n - 1))
        .map(|cuts| {
            let mut product = 1.0;
            let mut part = 1;
            for pos in 1..n {
                if cuts & (1 << (pos - 1)) != 0 {
                    product *= coeff(part);
                    part = 1;
                } else {
                    part += 1;
                }
            }
            product * coeff(part)
        })
        .sum()
}

/// 5. Closed-form finite total against enumeration, and its infinite limit.
fn closed_form_totals() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, w) in [(0.001, 0.01), (0.05, 0.1), (0.3, 0.5), (0.2, 0.1)] {
        let coeff = |j: usize| a * (-(j as f64) * w).exp();
        let table: Vec<f64> = (1..=6).map(coeff).collect();
        for m in 1..=6usize {
            let brute: f64 = (1..=m).map(|n| compositions(&coeff, n)).sum();
            worst = worst.max(relative(total_afterpulse_finite(a, w, m as u64), brute));
            worst = worst.max(relative(total_afterpulse_enumerated(&table, m), brute));
        }
    }
    let limit = total_afterpulse_infinite(0.001, 0.01).unwrap();
    let gap = (total_afterpulse_finite(0.001, 0.01, 1_000_000) - limit).abs();
    outcome(
        worst <= 1e-12 && gap <= 1e-9,
        format!("max relative deviation from enumeration {worst:.2e} (<= 1e-12); |P(1e6) - P(inf)| = {gap:.2e} (<= 1e-9)"),
    )
}

/// 6. Random-sampling deviation reproduces the target failure probability.
fn theta_round_trip() -> Outcome {
    let eps = 2f64.powi(-50);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for eq in linspace(0.01, 0.2, 5) {
        for n in logspace(1e7, 1e10, 5) {
            for q in linspace(0.01, 0.5, 4) {
                let theta = theta_random_sampling(eq, q, n, eps).unwrap();
                worst = worst.max(relative(sampling_epsilon(eq, q, n, theta), eps));
                count += 1;
            }
        }
    }
    outcome(
        worst <= 1e-6,
        format!("{count} points, max relative error {worst:.2e} (<= 1e-6)"),
    )
}

fn argmax(xs: &[f64], ys: &[f64]) -> f64 {
    let i = (0..ys.len())
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]))
        .unwrap();
    xs[i]
}

/// 7. Rate curves peak at 1-2 dB, IL >= EI >= RS and no afterpulse >= afterpulse.
fn rate_curve_shape() -> Outcome {
    let start = Instant::now();
    let table = RateSweepConfig::default().run().unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let loss = table.column("loss_db").unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in ["0", "0.05"] {
        for m in Method::ALL {
            let name = format!("{}_p{p}", m.short_name());
            let peak = argmax(&loss, &table.column(&name).unwrap());
            pass &= (1.0..=2.0).contains(&peak);
            parts.push(format!("{name} peak {peak:.2} dB"));
        }
    }
    let mut order_violations = Vec::new();
    for p in ["0", "0.05"] {
        let col = |m: &str| table.column(&format!("{m}_p{p}")).unwrap();
        let (rs, ei, il) = (col("RS"), col("EI"), col("IL"));
        let bad: Vec<f64> = (0..loss.len())
            .filter(|&i| !(il[i] >= ei[i] && ei[i] >= rs[i]))
            .map(|i| loss[i])
            .collect();
        if let (Some(first), Some(last)) = (bad.first(), bad.last()) {
            order_violations.push(format!(
                "IL>=EI>=RS fails at p={p} on {} points ({first:.2}-{last:.2} dB)",
                bad.len()
            ));
        }
    }
    for m in Method::ALL {
        let clean = table.column(&format!("{}_p0", m.short_name())).unwrap();
        let noisy = table.column(&format!("{}_p0.05", m.short_name())).unwrap();
        if clean.iter().zip(&noisy).any(|(c, n)| c < n) {
            order_violations.push(format!(
                "{} with afterpulse exceeds clean rate",
                m.short_name()
            ));
        }
    }
    pass &= order_violations.is_empty();
    pass &= elapsed < 60.0;
    if order_violations.is_empty() {
        parts.push("orderings hold".into());
    }
    parts.extend(order_violations);
    parts.push(format!("sweep {elapsed:.1} s"));
    outcome(pass, parts.join("; "))
}

/// 8. The afterpulse penalty exceeds the fluctuation penalty at some loss <= 5 dB.
fn crossover() -> Outcome {
    let cfg = RateSweepConfig::default();
    let n_z = cfg.security.n_z();
    let n = cfg.security.pulses;
    for loss in linspace(0.0, 5.0, 51) {
        let clean = cfg.reports(loss, 0.0).unwrap();
        let noisy = cfg.reports(loss, 0.05).unwrap();
        let theta = noisy[0].theta;
        let afterpulse = n_z
            * (clean[0].entropy.hmin_a_with_deviation(theta)
                - noisy[0].entropy.hmin_a_with_deviation(theta))
            / n;
        let fluctuation = n_z
            * (noisy[0].entropy.hmin_a_with_deviation(0.0)
                - noisy[0].entropy.hmin_a_with_deviation(theta))
            / n;
        if afterpulse > fluctuation {
            return outcome(
                true,
                format!("at {loss:.1} dB: afterpulse penalty {afterpulse:.4e} > fluctuation penalty {fluctuation:.4e} per pulse"),
            );
        }
    }
    outcome(
        false,
        "afterpulse penalty never exceeds the fluctuation penalty up to 5 dB",
    )
}

/// 9. Min-entropy is maximal at matched efficiencies and falls strictly with mismatch.
fn mismatch_monotonicity() -> Outcome {
    let cfg = MismatchConfig::default();
    let ratios = linspace(0.5, 1.0, 51);
    let mut parts = Vec::new();
    let mut pass = true;
    for &p in &cfg.p_hats {
        let h: Vec<f64> = ratios.iter().map(|&r| cfg.hmin_a(r, p).unwrap()).collect();
        let strictly = h.windows(2).all(|w| w[1] > w[0]);
        pass &= strictly;
        parts.push(format!(
            "p={p}: H(0.5) = {:.5}, H(1) = {:.5}, strictly increasing to 1: {strictly}",
            h[0],
            h[h.len() - 1]
        ));
    }
    outcome(pass, parts.join("; "))
}

/// 10. The finite-sampling gap at 1e5 samples is below 20 % of the gap at 1e3.
fn sampling_gap() -> Outcome {
    let cfg = SamplingConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for &p in &cfg.p_hats {
        let gap = |s| {
            let (il, fs) = cfg.hmin_pair(s, p).unwrap();
            il - fs
        };
        let (small, large) = (gap(1_000), gap(100_000));
        let ratio = large / small;
        pass &= small > 0.0 && ratio < 0.2;
        parts.push(format!(
            "p={p}: gap(1e3) = {small:.4e}, gap(1e5) = {large:.4e}, ratio {ratio:.3} (< 0.2)"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn reference_train(pulses: u64, afterpulse: AfterpulseSpec, seed: u64) -> PulseTrainConfig {
    let det = DetectorParams::new(0.1, 6e-7, afterpulse).unwrap();
    PulseTrainConfig::new(
        pulses,
        PhotonDistribution::poisson(10.0, None).unwrap(),
        Channel {
            misalignment: 0.02,
            ..Channel::default()
        },
        DetectorSet::uniform(det),
        0.5,
        seed,
    )
}

/// 11. Afterpulse-free simulation reproduces the click statistics.
fn simulator_agreement() -> Outcome {
    let config = reference_train(10_000_000, AfterpulseSpec::none(), 11);
    let out = simulate(&config).unwrap();
    let taus = config
        .channel
        .taus(&config.source, &config.detectors)
        .unwrap()
        .lower();
    let analytic =
        EntropyReport::evaluate(&config.detectors, &taus, PriorResponse::Stationary).unwrap();
    let checks = [
        ("Q_single", out.q_single().unwrap(), analytic.q_single),
        ("Q_double", out.q_double().unwrap(), analytic.q_double),
        ("EQ", out.eq().unwrap(), analytic.eq),
    ];
    let mut pass = true;
    let parts: Vec<String> = checks
        .iter()
        .map(|(name, est, expected)| {
            let z = est.z_score(*expected);
            pass &= z <= 3.0;
            format!("{name} {:.6e} vs {expected:.6e} ({z:.2} SE)", est.value)
        })
        .collect();
    outcome(pass, parts.join("; "))
}

fn csv_bytes(config: &PulseTrainConfig) -> Vec<u8> {
    let out = simulate(config).unwrap();
    let mut buf = Vec::new();
    write_records_csv(&mut buf, &out).unwrap();
    for e in out.bits.entries() {
        buf.push(e.value);
    }
    buf
}

/// 12. Byte-identical output across runs and thread counts.
fn determinism() -> Outcome {
    let ap =
        AfterpulseSpec::explicit(vec![0.03, 0.01, 0.005, 0.002], WindowDepth::Infinite).unwrap();
    let mut config = reference_train(1_000_000, ap, 99);
    config.segment_len = 1 << 16;
    let pool = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
    };
    let first = pool(1).install(|| csv_bytes(&config));
    let second = pool(1).install(|| csv_bytes(&config));
    let parallel = pool(4).install(|| csv_bytes(&config));
    let pass = first == second && first == parallel;
    outcome(
        pass,
        format!(
            "{} bytes; repeat identical: {}; 1 vs 4 threads identical: {}",
            first.len(),
            first == second,
            first == parallel
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    // sanity: the fixture detector really has no afterpulse
    assert!(single_lag_detector(0.1, 6e-7, 0.0)
        .unwrap()
        .afterpulse
        .is_none());
    let criteria: [Criterion; 12] = [
        ("afterpulse entropy drop", afterpulse_entropy_drop),
        ("finite-window ordering", finite_window_ordering),
        ("autocorrelation oracle", autocorrelation_oracle),
        ("quadratic/linear degeneration", quadratic_degeneration),
        ("closed form vs enumeration", closed_form_totals),
        ("theta round trip", theta_round_trip),
        ("rate-curve shape", rate_curve_shape),
        ("afterpulse vs fluctuation crossover", crossover),
        ("efficiency-mismatch monotonicity", mismatch_monotonicity),
        ("finite-sampling gap", sampling_gap),
        ("simulator statistical agreement", simulator_agreement),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let status = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {status} {name} [{:.2} s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            result.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
