//! Response model of a single gated threshold detector.
//!
//! A detector clicks unless the incoming pulse is vacuum (probability `tau`),
//! no dark count occurs and no afterpulse fires:
//!
//! ```text
//! p = 1 - tau * (1 - e_d) * (1 - P_ap)
//! ```
//!
//! The afterpulse probability `P_ap` is built from first-order coefficients
//! `p_j` (the contribution of an avalanche `j` detection windows earlier).
//! Higher orders are sums over integer compositions of the lag, which for the
//! exponential trap model `p_j = A exp(-j omega)` collapse to a geometric
//! series with a closed form.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{half_open_unit, unit, Error, Result};

/// Click probability without afterpulsing, `1 - tau (1 - e_d)`.
pub fn response_prob_no_afterpulse(tau: f64, dark_rate: f64) -> Result<f64> {
    unit("tau", tau)?;
    unit("dark_rate", dark_rate)?;
    Ok(1.0 - tau * (1.0 - dark_rate))
}

/// Current afterpulse probability for an infinite history,
/// `p_hat / (1 - p_hat) * p_b`, where `p_b` is the prior response ratio.
pub fn afterpulse_prob_infinite(p_hat: f64, prior_response: f64) -> Result<f64> {
    half_open_unit("p_hat", p_hat)?;
    unit("prior_response", prior_response)?;
    Ok(p_hat / (1.0 - p_hat) * prior_response)
}

/// Click probability including an afterpulse probability `p_ap`.
pub fn response_prob(tau: f64, dark_rate: f64, p_ap: f64) -> Result<f64> {
    unit("tau", tau)?;
    unit("dark_rate", dark_rate)?;
    unit("p_ap", p_ap)?;
    Ok(1.0 - tau * (1.0 - dark_rate) * (1.0 - p_ap))
}

/// First-order coefficient of the exponential model at lag `j`, `A exp(-j omega)`.
pub fn afterpulse_coeff(amplitude: f64, decay: f64, lag: u64) -> f64 {
    amplitude * (-(lag as f64) * decay).exp()
}

/// Total afterpulse probability contributed by `m` previous windows under the
/// exponential model, all composition orders included.
///
/// Evaluated as `A e^-w * expm1(m ln r) / expm1(ln r)` with
/// `r = (1 + A) e^-w`, which stays accurate when `r` is close to one and
/// reduces to `m A e^-w` at `r = 1`.
pub fn total_afterpulse_finite(amplitude: f64, decay: f64, windows: u64) -> f64 {
    if windows == 0 {
        return 0.0;
    }
    let first = amplitude * (-decay).exp();
    let log_ratio = amplitude.ln_1p() - decay;
    if log_ratio == 0.0 {
        return windows as f64 * first;
    }
    first * (windows as f64 * log_ratio).exp_m1() / log_ratio.exp_m1()
}

/// Limit of [`total_afterpulse_finite`] for an infinite history,
/// `A e^-w / (1 - (1 + A) e^-w)`.
pub fn total_afterpulse_infinite(amplitude: f64, decay: f64) -> Result<f64> {
    let bound = amplitude.ln_1p();
    if decay <= bound {
        return Err(Error::Divergent {
            omega: decay,
            bound,
        });
    }
    let log_ratio = bound - decay;
    Ok(amplitude * (-decay).exp() / -log_ratio.exp_m1())
}

/// Total afterpulse probability of an arbitrary coefficient table, summing
/// every composition of every order `k <= windows`.
///
/// Uses the recurrence `c_k = sum_i p_i c_{k-i}` with `c_0 = 1`, where `c_k`
/// is the order-`k` contribution.
pub fn total_afterpulse_enumerated(coefficients: &[f64], windows: usize) -> f64 {
    let mut orders = vec![0.0; windows + 1];
    orders[0] = 1.0;
    for k in 1..=windows {
        orders[k] = coefficients
            .iter()
            .take(k)
            .enumerate()
            .map(|(i, p)| p * orders[k - 1 - i])
            .sum();
    }
    orders[1..].iter().sum()
}

/// Number of previous detection windows an afterpulse model remembers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowDepth {
    Finite(u64),
    Infinite,
}

impl WindowDepth {
    pub fn finite(self) -> Option<u64> {
        match self {
            WindowDepth::Finite(m) => Some(m),
            WindowDepth::Infinite => None,
        }
    }
}

impl fmt::Display for WindowDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowDepth::Finite(m) => write!(f, "{m}"),
            WindowDepth::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for WindowDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "∞" => Ok(WindowDepth::Infinite),
            other => other.parse().map(WindowDepth::Finite).map_err(|_| {
                Error::Config(format!("window depth `{other}` is not a count or `inf`"))
            }),
        }
    }
}

impl Serialize for WindowDepth {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            WindowDepth::Finite(m) => serializer.serialize_u64(*m),
            WindowDepth::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for WindowDepth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(m) => Ok(WindowDepth::Finite(m)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AfterpulseModel {
    /// Measured table; `coefficients[j - 1]` is the lag-`j` coefficient.
    Explicit { coefficients: Vec<f64> },
    /// Single trap level, `p_j = amplitude * exp(-j * decay)`.
    Exponential { amplitude: f64, decay: f64 },
}

/// Validated afterpulse description of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAfterpulse", into = "RawAfterpulse")]
pub struct AfterpulseSpec {
    model: AfterpulseModel,
    window_depth: WindowDepth,
}

impl AfterpulseSpec {
    pub fn new(model: AfterpulseModel, window_depth: WindowDepth) -> Result<Self> {
        match &model {
            AfterpulseModel::Explicit { coefficients } => {
                for &p in coefficients {
                    half_open_unit("afterpulse coefficient", p)?;
                }
            }
            AfterpulseModel::Exponential { amplitude, decay } => {
                if !(*amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(Error::Domain {
                        name: "A",
                        value: *amplitude,
                        range: "(0, inf)",
                    });
                }
                if !(*decay > 0.0 && decay.is_finite()) {
                    return Err(Error::Domain {
                        name: "omega",
                        value: *decay,
                        range: "(0, inf)",
                    });
                }
                half_open_unit("afterpulse coefficient", amplitude * (-decay).exp())?;
                if window_depth == WindowDepth::Infinite {
                    total_afterpulse_infinite(*amplitude, *decay)?;
                }
            }
        }
        let spec = AfterpulseSpec {
            model,
            window_depth,
        };
        half_open_unit("overall first-order afterpulse rate", spec.overall_rate())?;
        Ok(spec)
    }

    /// A detector without afterpulsing.
    pub fn none() -> Self {
        AfterpulseSpec {
            model: AfterpulseModel::Explicit {
                coefficients: Vec::new(),
            },
            window_depth: WindowDepth::Infinite,
        }
    }

    pub fn explicit(coefficients: Vec<f64>, window_depth: WindowDepth) -> Result<Self> {
        Self::new(AfterpulseModel::Explicit { coefficients }, window_depth)
    }

    pub fn exponential(amplitude: f64, decay: f64, window_depth: WindowDepth) -> Result<Self> {
        Self::new(
            AfterpulseModel::Exponential { amplitude, decay },
            window_depth,
        )
    }

    /// Exponential model whose infinite-history overall rate equals `p_hat`,
    /// i.e. `A = p_hat (e^w - 1)`. A zero rate yields [`AfterpulseSpec::none`].
    pub fn exponential_with_rate(
        p_hat: f64,
        decay: f64,
        window_depth: WindowDepth,
    ) -> Result<Self> {
        half_open_unit("p_hat", p_hat)?;
        if p_hat == 0.0 {
            return Ok(Self::none());
        }
        Self::exponential(p_hat * decay.exp_m1(), decay, window_depth)
    }

    pub fn model(&self) -> &AfterpulseModel {
        &self.model
    }

    pub fn window_depth(&self) -> WindowDepth {
        self.window_depth
    }

    pub fn is_none(&self) -> bool {
        match &self.model {
            AfterpulseModel::Explicit { coefficients } => coefficients.iter().all(|&p| p == 0.0),
            AfterpulseModel::Exponential { .. } => self.window_depth == WindowDepth::Finite(0),
        }
    }

    /// First-order coefficient at lag `j >= 1`; zero beyond the window depth.
    pub fn coefficient(&self, lag: u64) -> f64 {
        if lag == 0 || self.window_depth.finite().is_some_and(|m| lag > m) {
            return 0.0;
        }
        match &self.model {
            AfterpulseModel::Explicit { coefficients } => {
                coefficients.get(lag as usize - 1).copied().unwrap_or(0.0)
            }
            AfterpulseModel::Exponential { amplitude, decay } => {
                afterpulse_coeff(*amplitude, *decay, lag)
            }
        }
    }

    /// Overall first-order rate `p_hat = sum_j p_j` over the remembered windows.
    pub fn overall_rate(&self) -> f64 {
        match &self.model {
            AfterpulseModel::Explicit { coefficients } => {
                let take = self
                    .window_depth
                    .finite()
                    .map_or(coefficients.len(), |m| coefficients.len().min(m as usize));
                coefficients[..take].iter().sum()
            }
            AfterpulseModel::Exponential { amplitude, decay } => {
                let head = amplitude * (-decay).exp() / -(-decay).exp_m1();
                match self.window_depth {
                    WindowDepth::Infinite => head,
                    WindowDepth::Finite(m) => head * -(-(m as f64) * decay).exp_m1(),
                }
            }
        }
    }

    /// Total afterpulse probability when the detector clicked in every
    /// remembered window: `p_hat / (1 - p_hat)` for an infinite history,
    /// the composition sum over `k <= m` otherwise.
    pub fn total_probability(&self) -> f64 {
        match (&self.model, self.window_depth) {
            (AfterpulseModel::Exponential { amplitude, decay }, WindowDepth::Finite(m)) => {
                total_afterpulse_finite(*amplitude, *decay, m)
            }
            (AfterpulseModel::Exponential { amplitude, decay }, WindowDepth::Infinite) => {
                // validated at construction
                total_afterpulse_infinite(*amplitude, *decay).unwrap_or(f64::INFINITY)
            }
            (AfterpulseModel::Explicit { coefficients }, WindowDepth::Finite(m)) => {
                total_afterpulse_enumerated(coefficients, m as usize)
            }
            (AfterpulseModel::Explicit { .. }, WindowDepth::Infinite) => {
                let p_hat = self.overall_rate();
                p_hat / (1.0 - p_hat)
            }
        }
    }

    /// Number of lags a pulse-by-pulse simulation must track. Infinite
    /// exponential histories are cut where the remaining coefficient mass
    /// drops below `tail_tolerance`, and never beyond `cap`.
    pub fn simulation_depth(&self, tail_tolerance: f64, cap: usize) -> usize {
        let natural = match (&self.model, self.window_depth) {
            (AfterpulseModel::Explicit { coefficients }, depth) => {
                let last = coefficients
                    .iter()
                    .rposition(|&p| p > 0.0)
                    .map_or(0, |i| i + 1);
                depth.finite().map_or(last, |m| last.min(m as usize))
            }
            (AfterpulseModel::Exponential { .. }, WindowDepth::Finite(m)) => m as usize,
            (AfterpulseModel::Exponential { amplitude, decay }, WindowDepth::Infinite) => {
                // tail beyond J is A e^{-(J+1) w} / (1 - e^{-w})
                let scale = amplitude / -(-decay).exp_m1();
                if scale <= tail_tolerance {
                    0
                } else {
                    ((scale / tail_tolerance).ln() / decay).ceil() as usize
                }
            }
        };
        natural.min(cap)
    }
}

impl Default for AfterpulseSpec {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Explicit,
    Exponential,
}

#[derive(Serialize, Deserialize)]
struct RawAfterpulse {
    mode: Mode,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coefficients: Vec<f64>,
    window_depth: WindowDepth,
}

impl TryFrom<RawAfterpulse> for AfterpulseSpec {
    type Error = Error;

    fn try_from(raw: RawAfterpulse) -> Result<Self> {
        let model = match raw.mode {
            Mode::Explicit => AfterpulseModel::Explicit {
                coefficients: raw.coefficients,
            },
            Mode::Exponential => AfterpulseModel::Exponential {
                amplitude: raw
                    .amplitude
                    .ok_or_else(|| Error::Config("exponential afterpulse needs `A`".into()))?,
                decay: raw
                    .omega
                    .ok_or_else(|| Error::Config("exponential afterpulse needs `omega`".into()))?,
            },
        };
        AfterpulseSpec::new(model, raw.window_depth)
    }
}

impl From<AfterpulseSpec> for RawAfterpulse {
    fn from(spec: AfterpulseSpec) -> Self {
        match spec.model {
            AfterpulseModel::Explicit { coefficients } => RawAfterpulse {
                mode: Mode::Explicit,
                amplitude: None,
                omega: None,
                coefficients,
                window_depth: spec.window_depth,
            },
            AfterpulseModel::Exponential { amplitude, decay } => RawAfterpulse {
                mode: Mode::Exponential,
                amplitude: Some(amplitude),
                omega: Some(decay),
                coefficients: Vec::new(),
                window_depth: spec.window_depth,
            },
        }
    }
}

/// Detector position: `0`/`1` in the generation (Z) basis, `+`/`-` in the
/// check (X) basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorLabel {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Parameters of one threshold single-photon detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetector", into = "RawDetector")]
pub struct DetectorParams {
    pub efficiency: f64,
    pub dark_rate: f64,
    pub afterpulse: AfterpulseSpec,
    pub label: Option<DetectorLabel>,
}

impl DetectorParams {
    pub fn new(efficiency: f64, dark_rate: f64, afterpulse: AfterpulseSpec) -> Result<Self> {
        unit("efficiency", efficiency)?;
        half_open_unit("dark_rate", dark_rate)?;
        Ok(DetectorParams {
            efficiency,
            dark_rate,
            afterpulse,
            label: None,
        })
    }

    pub fn with_label(mut self, label: DetectorLabel) -> Self {
        self.label = Some(label);
        self
    }

    /// Stationary click probability ignoring afterpulses, `1 - tau (1 - e_d)`.
    pub fn response_without_afterpulse(&self, tau: f64) -> Result<f64> {
        response_prob_no_afterpulse(tau, self.dark_rate)
    }

    /// Worst-case afterpulse probability when the detector fired in every
    /// remembered window. Clamped at one so that `1 - P_ap` stays a probability.
    pub fn worst_case_afterpulse(&self) -> f64 {
        self.afterpulse.total_probability().min(1.0)
    }
}

#[derive(Serialize, Deserialize)]
struct RawDetector {
    efficiency: f64,
    dark_rate: f64,
    #[serde(default)]
    afterpulse: AfterpulseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<DetectorLabel>,
}

impl TryFrom<RawDetector> for DetectorParams {
    type Error = Error;

    fn try_from(raw: RawDetector) -> Result<Self> {
        let mut det = DetectorParams::new(raw.efficiency, raw.dark_rate, raw.afterpulse)?;
        det.label = raw.label;
        Ok(det)
    }
}

impl From<DetectorParams> for RawDetector {
    fn from(det: DetectorParams) -> Self {
        RawDetector {
            efficiency: det.efficiency,
            dark_rate: det.dark_rate,
            afterpulse: det.afterpulse,
            label: det.label,
        }
    }
}
