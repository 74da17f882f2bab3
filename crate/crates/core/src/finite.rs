//! Finite-size statistics: the deviation of the phase error rate, the
//! randomness rates of both estimation methods, the composable security
//! parameter and the certified final rate.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::entropy::{
    binary_entropy_unchecked, ArmTaus, DetectorSet, EntropyReport, PriorResponse,
};
use crate::error::{open_unit, unit, Error, Result};
use crate::source::TauInterval;

/// Protocol and security parameters. Defaults reproduce the reference
/// experiment: `N = 1e10`, `q_x = 0.02`, `eps_all = 2^-49`,
/// `eps_d = eps_e = 2^-50`, `t_e = 100`, `e_q = 0.02`, `v = 1e6`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityParams {
    /// Total number of pulses.
    #[serde(rename = "N")]
    pub pulses: f64,
    /// Fraction of pulses measured in the X basis.
    pub q_x: f64,
    pub eps_all: f64,
    /// Failure probability of the photon-distribution estimate.
    pub eps_d: f64,
    /// Failure probability of the phase-error estimate.
    pub eps_e: f64,
    /// Extraction failure exponent; the extractor fails with probability `2^-t_e`.
    pub t_e: f64,
    /// Misalignment probability of the X-basis measurement.
    pub e_q: f64,
    /// Z-basis measurement rate in Hz (bookkeeping only).
    pub v: f64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        SecurityParams {
            pulses: 1e10,
            q_x: 0.02,
            eps_all: 2.0 * 2f64.powi(-50),
            eps_d: 2f64.powi(-50),
            eps_e: 2f64.powi(-50),
            t_e: 100.0,
            e_q: 0.02,
            v: 1e6,
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulses >= 2.0 && self.pulses.is_finite()) {
            return Err(Error::Domain {
                name: "N",
                value: self.pulses,
                range: "[2, inf)",
            });
        }
        open_unit("q_x", self.q_x)?;
        open_unit("eps_all", self.eps_all).or_else(|e| {
            if self.eps_all == 1.0 {
                Ok(1.0)
            } else {
                Err(e)
            }
        })?;
        open_unit("eps_d", self.eps_d)?;
        open_unit("eps_e", self.eps_e)?;
        unit("e_q", self.e_q)?;
        if !(self.t_e >= 1.0 && self.t_e.is_finite()) {
            return Err(Error::Domain {
                name: "t_e",
                value: self.t_e,
                range: "[1, inf)",
            });
        }
        if !(self.v > 0.0) {
            return Err(Error::Domain {
                name: "v",
                value: self.v,
                range: "(0, inf)",
            });
        }
        if self.n_x() < 1.0 || self.n_z() < 1.0 {
            return Err(Error::Degenerate("a basis receives less than one pulse"));
        }
        Ok(())
    }

    /// Pulses measured in the X basis.
    pub fn n_x(&self) -> f64 {
        self.pulses * self.q_x
    }

    /// Pulses measured in the Z basis.
    pub fn n_z(&self) -> f64 {
        self.pulses * (1.0 - self.q_x)
    }
}

/// Binary relative entropy `D(x || c)` in nats, given `d = x - c`.
fn kl_divergence(x: f64, c: f64, d: f64) -> f64 {
    let mut kl = 0.0;
    if x > 0.0 {
        kl += x * (d / c).ln_1p();
    }
    if x < 1.0 {
        kl += (1.0 - x) * (-d / (1.0 - c)).ln_1p();
    }
    kl.max(0.0)
}

/// Entropy gap `h(EQ + (1-q) theta) - q h(EQ) - (1-q) h(EQ + theta)` in bits,
/// evaluated as a weighted sum of relative entropies so that it stays
/// accurate when `theta` is tiny.
pub fn zeta_fluctuation(eq: f64, q_x: f64, theta: f64) -> f64 {
    let a = eq;
    let b = eq + theta;
    let c = q_x * a + (1.0 - q_x) * b;
    (q_x * kl_divergence(a, c, -(1.0 - q_x) * theta)
        + (1.0 - q_x) * kl_divergence(b, c, q_x * theta))
        / LN_2
}

/// `log2` of the random-sampling failure probability at deviation `theta`,
/// `-1/2 log2(q (1-q) EQ (1-EQ) N) - n zeta(theta)` with `n = q_x N`.
pub fn log2_sampling_epsilon(eq: f64, q_x: f64, pulses: f64, theta: f64) -> f64 {
    let prefactor = -0.5 * (q_x * (1.0 - q_x) * eq * (1.0 - eq) * pulses).log2();
    prefactor - q_x * pulses * zeta_fluctuation(eq, q_x, theta)
}

/// Random-sampling failure probability at deviation `theta`.
pub fn sampling_epsilon(eq: f64, q_x: f64, pulses: f64, theta: f64) -> f64 {
    log2_sampling_epsilon(eq, q_x, pulses, theta).exp2()
}

/// Smallest deviation `theta` for which the random-sampling failure
/// probability does not exceed `eps_e`; zero when even `theta = 0` meets it.
///
/// Bisection runs in the log domain until the bracket cannot shrink further.
pub fn theta_random_sampling(eq: f64, q_x: f64, pulses: f64, eps_e: f64) -> Result<f64> {
    if !(eq > 0.0 && eq < 0.5) {
        return Err(Error::Domain {
            name: "EQ",
            value: eq,
            range: "(0, 0.5)",
        });
    }
    open_unit("q_x", q_x)?;
    open_unit("eps_e", eps_e)?;
    if !(pulses >= 1.0 && pulses.is_finite()) {
        return Err(Error::Domain {
            name: "N",
            value: pulses,
            range: "[1, inf)",
        });
    }
    let target = eps_e.log2();
    let excess = |theta: f64| log2_sampling_epsilon(eq, q_x, pulses, theta) - target;
    if excess(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let max_theta = 0.5 - eq;
    if excess(max_theta) > 0.0 {
        return Err(Error::Infeasible {
            max_theta,
            epsilon: sampling_epsilon(eq, q_x, pulses, max_theta),
        });
    }
    let (mut lo, mut hi) = (0.0f64, max_theta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Deviation bound of the entropy-inequality method,
/// `sqrt((n_z + n_x)/(n_z n_x) * (n_x + 1)/n_x * ln(2/eps))`.
pub fn theta_entropy_inequality(n_z: f64, n_x: f64, eps: f64) -> Result<f64> {
    for (name, n) in [("n_z", n_z), ("n_x", n_x)] {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::Domain {
                name,
                value: n,
                range: "[1, inf)",
            });
        }
    }
    open_unit("eps", eps).or_else(|e| if eps == 1.0 { Ok(1.0) } else { Err(e) })?;
    Ok(((n_z + n_x) / (n_z * n_x) * ((n_x + 1.0) / n_x) * (2.0 / eps).ln()).sqrt())
}

/// Random bits from `n_z` Z-basis pulses with the phase error bounded by
/// `EQ + theta`, less `t_e` bits for extraction; never negative.
pub fn rate_random_sampling(n_z: f64, entropy: &EntropyReport, theta: f64, t_e: f64) -> f64 {
    (n_z * entropy.hmin_a_with_deviation(theta) - t_e).max(0.0)
}

/// As [`rate_random_sampling`] but paying `2 log2(1/eps_all)` bits.
pub fn rate_entropy_inequality(n_z: f64, entropy: &EntropyReport, theta: f64, eps_all: f64) -> f64 {
    (n_z * entropy.hmin_a_with_deviation(theta) - ei_penalty(eps_all)).max(0.0)
}

fn ei_penalty(eps_all: f64) -> f64 {
    -2.0 * eps_all.log2()
}

/// Composable security parameter `sqrt(s (2 - s))` with
/// `s = eps_d + eps_e + 2^-t_e`.
pub fn composable_epsilon(eps_d: f64, eps_e: f64, t_e: f64) -> Result<f64> {
    unit("eps_d", eps_d)?;
    unit("eps_e", eps_e)?;
    let s = eps_d + eps_e + (-t_e).exp2();
    if s > 1.0 {
        return Err(Error::Budget { total: s });
    }
    Ok((s * (2.0 - s)).sqrt())
}

/// Key length of the textbook protocol accounting,
/// `n'_z [1 - h(e_bx + theta)] - t_e`, where `n'_z` counts detected Z-basis
/// events. Kept as a diagnostic next to the click-probability rates.
pub fn legacy_key_length(detected_z: f64, e_bx: f64, theta: f64, t_e: f64) -> f64 {
    detected_z * (1.0 - binary_entropy_unchecked((e_bx + theta).clamp(0.0, 0.5))) - t_e
}

/// Grid points per vacuum-probability axis in the worst-case search.
pub const TAU_GRID: usize = 65;

/// Least min-entropy per Z-basis pulse, with the error bounded by `EQ + theta`,
/// over the box in which each Z-detector vacuum probability lies within
/// `delta` of its nominal value (clipped to `[0, 1]`).
///
/// The box is scanned on a regular grid that includes all four corners.
pub fn worst_case_over_box(
    detectors: &DetectorSet,
    taus: &ArmTaus,
    delta: f64,
    theta: f64,
    prior: PriorResponse,
) -> Result<f64> {
    let nominal = EntropyReport::evaluate(detectors, taus, prior)?;
    if delta == 0.0 {
        return Ok(nominal.hmin_a_with_deviation(theta));
    }
    let box0 = TauInterval::point(taus.z[0]).widen(delta);
    let box1 = TauInterval::point(taus.z[1]).widen(delta);
    let axis = |iv: TauInterval, i: usize| iv.lo + iv.width() * i as f64 / (TAU_GRID - 1) as f64;
    let mut worst = nominal.hmin_a_with_deviation(theta);
    for i in 0..TAU_GRID {
        for j in 0..TAU_GRID {
            let corner = ArmTaus {
                z: [axis(box0, i), axis(box1, j)],
                x: taus.x,
            };
            match EntropyReport::evaluate(detectors, &corner, prior) {
                Ok(r) => worst = worst.min(r.hmin_a_with_deviation(theta)),
                // a corner with no single clicks at all yields no randomness
                Err(Error::Degenerate(_)) => worst = worst.min(0.0),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(worst)
}

/// Phase-error estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RandomSampling,
    EntropyInequality,
    InfiniteLength,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::RandomSampling,
        Method::EntropyInequality,
        Method::InfiniteLength,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Method::RandomSampling => "RS",
            Method::EntropyInequality => "EI",
            Method::InfiniteLength => "IL",
        }
    }
}

/// Rates and all intermediate statistics at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub method: Method,
    /// Statistical deviation of the phase error rate.
    pub theta: f64,
    /// `true` when no deviation meets the failure probability; rates are then zero.
    pub infeasible: bool,
    pub entropy: EntropyReport,
    /// Random bits at the nominal vacuum probabilities.
    pub bits: f64,
    /// Random bits certified over the vacuum-probability confidence box.
    pub final_bits: f64,
    pub zeta: f64,
    /// `bits / N`.
    pub per_pulse: f64,
    /// `final_bits / N`.
    pub final_per_pulse: f64,
}

impl RateReport {
    /// Evaluates one method. `delta` is the confidence radius of the
    /// vacuum probabilities (zero for a perfectly known source).
    pub fn compute(
        method: Method,
        params: &SecurityParams,
        detectors: &DetectorSet,
        taus: &ArmTaus,
        delta: f64,
        prior: PriorResponse,
    ) -> Result<Self> {
        params.validate()?;
        let entropy = EntropyReport::evaluate(detectors, taus, prior)?;
        let n_z = params.n_z();
        let (theta, penalty, infeasible) = match method {
            Method::RandomSampling => {
                match theta_random_sampling(entropy.eq, params.q_x, params.pulses, params.eps_e) {
                    Ok(theta) => (theta, params.t_e, false),
                    Err(Error::Infeasible { max_theta, .. }) => (max_theta, params.t_e, true),
                    Err(Error::Domain { name: "EQ", .. }) if entropy.eq >= 0.5 => {
                        (0.0, params.t_e, true)
                    }
                    Err(e) => return Err(e),
                }
            }
            Method::EntropyInequality => (
                theta_entropy_inequality(n_z, params.n_x(), params.eps_all)?,
                ei_penalty(params.eps_all),
                false,
            ),
            Method::InfiniteLength => (0.0, 0.0, false),
        };
        let (bits, final_bits) = if infeasible {
            (0.0, 0.0)
        } else {
            let bits = (n_z * entropy.hmin_a_with_deviation(theta) - penalty).max(0.0);
            let worst = worst_case_over_box(detectors, taus, delta, theta, prior)?;
            (bits, (n_z * worst - penalty).max(0.0).min(bits))
        };
        Ok(RateReport {
            method,
            theta,
            infeasible,
            entropy,
            bits,
            final_bits,
            zeta: composable_epsilon(params.eps_d, params.eps_e, params.t_e)?,
            per_pulse: bits / params.pulses,
            final_per_pulse: final_bits / params.pulses,
        })
    }
}
