//! Click statistics and worst-case conditional min-entropy.
//!
//! Detector indices follow the measurement bases: `z = [D0, D1]` produce the
//! raw bits, `x = [D+, D-]` estimate the error rate. The input qubit is `|+>`,
//! so in the Z basis every photon lands on either Z detector with probability
//! one half, and in the X basis it reaches `D+` unless misaligned.

use serde::{Deserialize, Serialize};

use crate::detector::{response_prob, DetectorParams};
use crate::error::{unit, Error, Result};
use crate::source::{vacuum_probability, PhotonDistribution, TauInterval};

/// Probabilities of a single click and of a double click in the Z basis,
/// `(p0 (1-p1) + p1 (1-p0), p0 p1)`.
pub fn click_probabilities(p0: f64, p1: f64) -> Result<(f64, f64)> {
    unit("p0", p0)?;
    unit("p1", p1)?;
    Ok((p0 * (1.0 - p1) + p1 * (1.0 - p0), p0 * p1))
}

/// X-basis error probability per pulse: a lone `D-` click is an error and a
/// double click, being assigned a random bit, counts as half an error.
pub fn x_basis_error(p_plus: f64, p_minus: f64) -> Result<f64> {
    unit("p_plus", p_plus)?;
    unit("p_minus", p_minus)?;
    Ok(p_minus * (1.0 - p_plus) + 0.5 * p_minus * p_plus)
}

/// Error ratio per detected X-basis pulse, `EQ / (p+ + p- - p+ p-)`.
/// Diagnostic only; rates consume the per-pulse [`x_basis_error`].
pub fn x_basis_error_ratio(p_plus: f64, p_minus: f64) -> Result<f64> {
    let eq = x_basis_error(p_plus, p_minus)?;
    let detected = p_plus + p_minus - p_plus * p_minus;
    if detected == 0.0 {
        return Err(Error::Degenerate("no X-basis detections"));
    }
    Ok(eq / detected)
}

/// Binary Shannon entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    unit("x", x)?;
    Ok(binary_entropy_unchecked(x))
}

pub(crate) fn binary_entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (-x).ln_1p() / std::f64::consts::LN_2)
}

/// Expected value of a raw bit, `k = p1 (1-p0) / (p1 (1-p0) + p0 (1-p1))`.
pub fn expectation_k(p0: f64, p1: f64) -> Result<f64> {
    unit("p0", p0)?;
    unit("p1", p1)?;
    let ones = p1 * (1.0 - p0);
    let total = ones + p0 * (1.0 - p1);
    if total == 0.0 {
        return Err(Error::Degenerate("no single-click events"));
    }
    Ok(ones / total)
}

/// Worst-case min-entropy of a Z-basis single click.
///
/// Eve is assumed to know which detector clicked in every earlier window, so
/// one detector carries the full afterpulse probability (`p^(1)`) while the
/// other carries none (`p^(0)`). The guessing probability is the largest
/// conditional single-click probability over both assignments and both
/// outcomes.
pub fn hmin_z_worstcase(
    det0: &DetectorParams,
    tau0: f64,
    det1: &DetectorParams,
    tau1: f64,
) -> Result<f64> {
    let primed = |det: &DetectorParams, tau: f64| -> Result<[f64; 2]> {
        Ok([
            response_prob(tau, det.dark_rate, 0.0)?,
            response_prob(tau, det.dark_rate, det.worst_case_afterpulse())?,
        ])
    };
    let p = [primed(det0, tau0)?, primed(det1, tau1)?];
    let mut guess: f64 = 0.0;
    for (alpha, beta) in [(0, 1), (1, 0)] {
        for (m, n) in [(1, 0), (0, 1)] {
            let (pa, pb) = (p[alpha][m], p[beta][n]);
            let single = pa * (1.0 - pb) + pb * (1.0 - pa);
            if single == 0.0 {
                return Err(Error::Degenerate(
                    "no single clicks in worst-case assignment",
                ));
            }
            guess = guess.max(pa * (1.0 - pb) / single);
        }
    }
    Ok(-guess.log2())
}

/// Min-entropy per Z-basis pulse after phase-error correction, with double
/// clicks filled by one true random bit each (and that bit paid back):
/// `[H(Z|E) Q_single + Q_double] [1 - h(EQ)] - Q_double`.
///
/// May be negative; rate layers clamp.
pub fn hmin_a(hmin_z: f64, q_single: f64, q_double: f64, eq: f64) -> Result<f64> {
    unit("hmin_z", hmin_z)?;
    unit("q_single", q_single)?;
    unit("q_double", q_double)?;
    unit("eq", eq)?;
    Ok(bracket(hmin_z, q_single, q_double, eq))
}

/// The bracket shared by the min-entropy and every rate formula, with the
/// error argument clamped at one half.
pub(crate) fn bracket(hmin_z: f64, q_single: f64, q_double: f64, error: f64) -> f64 {
    let error = error.clamp(0.0, 0.5);
    (hmin_z * q_single + q_double) * (1.0 - binary_entropy_unchecked(error)) - q_double
}

/// Which prior response ratio `p_b` feeds the stationary afterpulse term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorResponse {
    /// The afterpulse-free click probability `1 - tau (1 - e_d)`.
    #[default]
    Stationary,
    /// A fixed ratio; `Fixed(1.0)` is the "always clicked before" worst case.
    Fixed(f64),
}

impl PriorResponse {
    pub fn resolve(self, det: &DetectorParams, tau: f64) -> Result<f64> {
        match self {
            PriorResponse::Stationary => det.response_without_afterpulse(tau),
            PriorResponse::Fixed(p) => unit("prior_response", p),
        }
    }
}

/// Click probability of a detector in steady state: the afterpulse term is
/// the total afterpulse probability scaled by the prior response ratio.
pub fn stationary_response(det: &DetectorParams, tau: f64, prior: PriorResponse) -> Result<f64> {
    let p_b = prior.resolve(det, tau)?;
    response_prob(
        tau,
        det.dark_rate,
        (det.worst_case_afterpulse() * p_b).min(1.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaggedResponse {
    pub prob: f64,
    /// The afterpulse probability was negative and has been clamped to zero.
    pub clamped: bool,
}

/// Click probability of a detector conditioned on whether it clicked `lag`
/// windows earlier. Relative to the stationary afterpulse term, a click adds
/// `p_i (1 - p_b)` and its absence removes `p_i p_b`; the high-order
/// afterpulses seeded by that single window are neglected.
pub fn lagged_response_probs(
    det: &DetectorParams,
    tau: f64,
    lag: u64,
    fired: bool,
    prior_response: f64,
) -> Result<LaggedResponse> {
    unit("tau", tau)?;
    let p_b = unit("prior_response", prior_response)?;
    let base = det.worst_case_afterpulse() * p_b;
    let coeff = det.afterpulse.coefficient(lag);
    let p_ap = if fired {
        base + coeff * (1.0 - p_b)
    } else {
        base - coeff * p_b
    };
    let clamped = p_ap < 0.0;
    let prob = response_prob(tau, det.dark_rate, p_ap.clamp(0.0, 1.0))?;
    Ok(LaggedResponse { prob, clamped })
}

/// Prior autocorrelation coefficient of the single-click bit sequence at
/// lag `i` (in detection windows):
///
/// ```text
/// a_i = [p1^i1 (1 - p0^i0) - p1^i0 (1 - p0^i1)] (1 - k)
///     + [p0^i0 (1 - p1^i1) - p0^i1 (1 - p1^i0)] (-k)
/// ```
///
/// Quadratic in the lag-`i` coefficient; linear when both detectors are
/// identical.
pub fn prior_autocorrelation(
    det0: &DetectorParams,
    tau0: f64,
    det1: &DetectorParams,
    tau1: f64,
    lag: u64,
    prior: PriorResponse,
) -> Result<f64> {
    let k = expectation_k(
        stationary_response(det0, tau0, prior)?,
        stationary_response(det1, tau1, prior)?,
    )?;
    let pb0 = prior.resolve(det0, tau0)?;
    let pb1 = prior.resolve(det1, tau1)?;
    let lagged =
        |det, tau, fired, pb| lagged_response_probs(det, tau, lag, fired, pb).map(|r| r.prob);
    let p0_fired = lagged(det0, tau0, true, pb0)?;
    let p0_idle = lagged(det0, tau0, false, pb0)?;
    let p1_fired = lagged(det1, tau1, true, pb1)?;
    let p1_idle = lagged(det1, tau1, false, pb1)?;

    let after_one = p1_fired * (1.0 - p0_idle) - p1_idle * (1.0 - p0_fired);
    let after_zero = p0_idle * (1.0 - p1_fired) - p0_fired * (1.0 - p1_idle);
    Ok(after_one * (1.0 - k) + after_zero * (-k))
}

/// Sample autocorrelation of a 0/1 sequence at lag `i`,
/// `sum_{j<n-i} (x_j - m)(x_{j+i} - m) / sum_j (x_j - m)^2`.
pub fn autocorrelation(bits: &[u8], lag: usize) -> Result<f64> {
    let n = bits.len();
    if n <= lag {
        return Err(Error::Length {
            requested: lag + 1,
            available: n,
        });
    }
    let ones = bits.iter().filter(|&&b| b != 0).count();
    if ones == 0 || ones == n {
        return Err(Error::Degenerate("constant bit sequence"));
    }
    let mean = ones as f64 / n as f64;
    let centred = |b: u8| if b != 0 { 1.0 - mean } else { -mean };
    let num: f64 = bits
        .iter()
        .zip(&bits[lag..])
        .map(|(&a, &b)| centred(a) * centred(b))
        .sum();
    let den = ones as f64 * (1.0 - mean).powi(2) + (n - ones) as f64 * mean * mean;
    Ok(num / den)
}

/// The four detectors of the measurement unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSet {
    /// `[D0, D1]`
    pub z: [DetectorParams; 2],
    /// `[D+, D-]`
    pub x: [DetectorParams; 2],
}

impl DetectorSet {
    /// Four copies of one detector.
    pub fn uniform(det: DetectorParams) -> Self {
        DetectorSet {
            z: [det.clone(), det.clone()],
            x: [det.clone(), det],
        }
    }
}

/// Optical path from the untrusted source to the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    /// Transmittance common to all detectors (monitor path, VOA, ...).
    pub transmittance: f64,
    /// Extra transmittance of detector arm 0 (`D0`, `D+`) and arm 1 (`D1`, `D-`).
    pub arm_transmittance: [f64; 2],
    /// Probability that a photon sent to the X basis is misrouted to `D-`.
    pub misalignment: f64,
}

impl Default for Channel {
    fn default() -> Self {
        Channel {
            transmittance: 1.0,
            arm_transmittance: [1.0, 1.0],
            misalignment: 0.0,
        }
    }
}

impl Channel {
    pub fn validate(&self) -> Result<()> {
        unit("transmittance", self.transmittance)?;
        unit("arm transmittance 0", self.arm_transmittance[0])?;
        unit("arm transmittance 1", self.arm_transmittance[1])?;
        unit("misalignment", self.misalignment)?;
        Ok(())
    }

    /// Per-photon detection probabilities `xi` of `[D0, D1]` and `[D+, D-]`.
    pub fn survival(&self, detectors: &DetectorSet) -> Result<([f64; 2], [f64; 2])> {
        self.validate()?;
        let t = self.transmittance;
        let arm = self.arm_transmittance;
        let z = [
            t * 0.5 * arm[0] * detectors.z[0].efficiency,
            t * 0.5 * arm[1] * detectors.z[1].efficiency,
        ];
        let x = [
            t * (1.0 - self.misalignment) * arm[0] * detectors.x[0].efficiency,
            t * self.misalignment * arm[1] * detectors.x[1].efficiency,
        ];
        Ok((z, x))
    }

    /// Vacuum-probability intervals at every detector for a given source.
    pub fn taus(
        &self,
        source: &PhotonDistribution,
        detectors: &DetectorSet,
    ) -> Result<ArmTauIntervals> {
        let (z, x) = self.survival(detectors)?;
        Ok(ArmTauIntervals {
            z: [
                vacuum_probability(source, z[0])?,
                vacuum_probability(source, z[1])?,
            ],
            x: [
                vacuum_probability(source, x[0])?,
                vacuum_probability(source, x[1])?,
            ],
        })
    }
}

/// Vacuum probabilities at `[D0, D1]` and `[D+, D-]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTaus {
    pub z: [f64; 2],
    pub x: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTauIntervals {
    pub z: [TauInterval; 2],
    pub x: [TauInterval; 2],
}

impl ArmTauIntervals {
    pub fn lower(&self) -> ArmTaus {
        ArmTaus {
            z: [self.z[0].lo, self.z[1].lo],
            x: [self.x[0].lo, self.x[1].lo],
        }
    }

    /// The endpoint assignment with the least min-entropy.
    pub fn worst_corner(&self, detectors: &DetectorSet, prior: PriorResponse) -> Result<ArmTaus> {
        let mut worst: Option<(f64, ArmTaus)> = None;
        for corner in self.corners() {
            let h = EntropyReport::evaluate(detectors, &corner, prior)?.hmin_a;
            if worst.map_or(true, |(w, _)| h < w) {
                worst = Some((h, corner));
            }
        }
        Ok(worst.expect("sixteen corners").1)
    }

    /// Every assignment of interval endpoints to the four detectors.
    pub fn corners(&self) -> impl Iterator<Item = ArmTaus> + '_ {
        (0..16u8).map(move |mask| {
            let pick =
                |iv: &TauInterval, bit: u8| if mask & (1 << bit) == 0 { iv.lo } else { iv.hi };
            ArmTaus {
                z: [pick(&self.z[0], 0), pick(&self.z[1], 1)],
                x: [pick(&self.x[0], 2), pick(&self.x[1], 3)],
            }
        })
    }
}

/// Response probabilities of all four detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub z: [f64; 2],
    pub x: [f64; 2],
}

/// Min-entropy and click statistics at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    /// Worst-case min-entropy per single-click event (bits).
    pub hmin_z: f64,
    /// Min-entropy per Z-basis pulse (bits); may be negative.
    pub hmin_a: f64,
    pub q_single: f64,
    pub q_double: f64,
    /// X-basis error probability per pulse.
    pub eq: f64,
    /// Expected value of a raw bit.
    pub k: f64,
    /// Error ratio per detected X-basis pulse (diagnostic).
    pub e_bx: f64,
    pub responses: ArmState,
}

impl EntropyReport {
    pub fn evaluate(detectors: &DetectorSet, taus: &ArmTaus, prior: PriorResponse) -> Result<Self> {
        let responses = ArmState {
            z: [
                stationary_response(&detectors.z[0], taus.z[0], prior)?,
                stationary_response(&detectors.z[1], taus.z[1], prior)?,
            ],
            x: [
                stationary_response(&detectors.x[0], taus.x[0], prior)?,
                stationary_response(&detectors.x[1], taus.x[1], prior)?,
            ],
        };
        let [p0, p1] = responses.z;
        let [p_plus, p_minus] = responses.x;
        let (q_single, q_double) = click_probabilities(p0, p1)?;
        let eq = x_basis_error(p_plus, p_minus)?;
        let hmin_z = hmin_z_worstcase(&detectors.z[0], taus.z[0], &detectors.z[1], taus.z[1])?;
        Ok(EntropyReport {
            hmin_z,
            hmin_a: hmin_a(hmin_z, q_single, q_double, eq)?,
            q_single,
            q_double,
            eq,
            k: expectation_k(p0, p1)?,
            e_bx: x_basis_error_ratio(p_plus, p_minus)?,
            responses,
        })
    }

    /// Evaluates the endpoint combination of the vacuum intervals with the
    /// least min-entropy.
    pub fn evaluate_worst(
        detectors: &DetectorSet,
        taus: &ArmTauIntervals,
        prior: PriorResponse,
    ) -> Result<Self> {
        Self::evaluate(detectors, &taus.worst_corner(detectors, prior)?, prior)
    }

    /// Min-entropy per Z-basis pulse with the phase error bounded by `eq + theta`.
    pub fn hmin_a_with_deviation(&self, theta: f64) -> f64 {
        bracket(self.hmin_z, self.q_single, self.q_double, self.eq + theta)
    }
}
