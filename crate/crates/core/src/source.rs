//! Photon-number statistics of the untrusted source and the distribution
//! monitor.
//!
//! After the filter and phase randomiser the source is diagonal in the Fock
//! basis, so it is fully described by `P(n)`. Loss and detector efficiency act
//! on it as a Bernoulli (binomial thinning) transform with survival
//! probability `xi = t_all * eta`; the detector only cares about the vacuum
//! component `tau = sum_n P(n) (1 - xi)^n`.
//!
//! Distributions are truncated at `n_max`; the mass beyond it is tracked as
//! `tail_mass` and turned into an interval on `tau` instead of being dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{open_unit, unit, Error, Result};

/// Tail mass above which a truncated distribution is reported as lossy.
pub const TRUNCATION_WARNING: f64 = 1e-10;

/// Truncated photon-number distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    probs: Vec<f64>,
    tail_mass: f64,
    /// Number of monitor samples behind an empirical estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
}

impl PhotonDistribution {
    /// Builds a distribution from `P(0..=n_max)` and the mass beyond `n_max`.
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("photon distribution"));
        }
        for &p in &probs {
            unit("P(n)", p)?;
        }
        unit("tail_mass", tail_mass)?;
        let total: f64 = probs.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "photon distribution sums to {total} instead of 1"
            )));
        }
        Ok(PhotonDistribution {
            probs,
            tail_mass,
            samples: None,
        })
    }

    /// Normalises arbitrary non-negative weights; the tail is zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::Config(
                "weights must be non-negative and not all zero".into(),
            ));
        }
        PhotonDistribution::new(weights.iter().map(|w| w / total).collect(), 0.0)
    }

    pub fn vacuum() -> Self {
        PhotonDistribution {
            probs: vec![1.0],
            tail_mass: 0.0,
            samples: None,
        }
    }

    /// Coherent (Poisson) source with mean photon number `nu`.
    /// `n_max` defaults to `10 nu + 50`.
    pub fn poisson(nu: f64, n_max: Option<usize>) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::Domain {
                name: "nu",
                value: nu,
                range: "[0, inf)",
            });
        }
        if nu == 0.0 {
            return Ok(Self::vacuum());
        }
        let n_max = n_max.unwrap_or((10.0 * nu).ceil() as usize + 50);
        let log_nu = nu.ln();
        let mut log_fact = 0.0;
        let mut probs = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            if n > 0 {
                log_fact += (n as f64).ln();
            }
            probs.push((n as f64 * log_nu - nu - log_fact).exp());
        }
        // The tail is summed term by term; `1 - sum` would lose it to rounding.
        let mut tail = 0.0;
        let mut term = *probs.last().unwrap();
        let mut n = n_max as f64;
        loop {
            n += 1.0;
            term *= nu / n;
            tail += term;
            if term <= tail * 1e-17 || term < 1e-300 {
                break;
            }
        }
        // absorb the O(1e-16) rounding of the head so the books balance exactly
        let head: f64 = probs.iter().sum();
        let drift = 1.0 - head - tail;
        if drift.abs() > 1e-12 {
            return Err(Error::Config(format!(
                "Poisson({nu}) head/tail mismatch {drift}"
            )));
        }
        Ok(PhotonDistribution {
            probs,
            tail_mass: tail,
            samples: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn samples(&self) -> Option<u64> {
        self.samples
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Human-readable warning when the truncation discards noticeable mass.
    pub fn truncation_warning(&self) -> Option<String> {
        (self.tail_mass > TRUNCATION_WARNING).then(|| {
            format!(
                "photon distribution truncated at n = {} leaves tail mass {:.3e}",
                self.n_max(),
                self.tail_mass
            )
        })
    }

    /// Inverse-CDF sampling from a uniform `u` in `[0, 1)`. Returns `None`
    /// when `u` falls into the untracked tail.
    pub fn sample(&self, u: f64) -> Option<usize> {
        let mut acc = 0.0;
        for (n, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return Some(n);
            }
        }
        None
    }

    /// Total-variation distance, counting the tails as unmatched mass.
    pub fn total_variation(&self, other: &PhotonDistribution) -> f64 {
        let len = self.probs.len().max(other.probs.len());
        let head: f64 = (0..len).map(|n| (self.prob(n) - other.prob(n)).abs()).sum();
        0.5 * (head + self.tail_mass + other.tail_mass)
    }
}

/// Photon statistics after independent per-photon survival with
/// probability `xi`: `D(m) = sum_{n>=m} P(n) C(n,m) xi^m (1-xi)^(n-m)`.
///
/// Mass in the input tail stays in the output tail.
pub fn bernoulli_transform(dist: &PhotonDistribution, xi: f64) -> Result<PhotonDistribution> {
    unit("xi", xi)?;
    let n_max = dist.n_max();
    let mut out = vec![0.0; n_max + 1];
    if xi == 0.0 {
        out[0] = dist.probs.iter().sum();
    } else if xi == 1.0 {
        out.copy_from_slice(&dist.probs);
    } else {
        let (log_xi, log_loss) = (xi.ln(), (-xi).ln_1p());
        let mut log_fact = vec![0.0; n_max + 1];
        for n in 1..=n_max {
            log_fact[n] = log_fact[n - 1] + (n as f64).ln();
        }
        for (n, &p) in dist.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
                let log_binom = log_fact[n] - log_fact[m] - log_fact[n - m];
                *slot += p * (log_binom + m as f64 * log_xi + (n - m) as f64 * log_loss).exp();
            }
        }
    }
    Ok(PhotonDistribution {
        probs: out,
        tail_mass: dist.tail_mass,
        samples: dist.samples,
    })
}

/// Interval enclosing a vacuum probability. `lo` assigns the untracked tail
/// zero vacuum weight, `hi` assigns it all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TauInterval {
    pub fn point(tau: f64) -> Self {
        TauInterval { lo: tau, hi: tau }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Extends both ends by `delta` and clips to `[0, 1]`.
    pub fn widen(&self, delta: f64) -> Self {
        TauInterval {
            lo: (self.lo - delta).max(0.0),
            hi: (self.hi + delta).min(1.0),
        }
    }

    pub fn contains(&self, tau: f64) -> bool {
        (self.lo..=self.hi).contains(&tau)
    }
}

/// Vacuum probability `tau = sum_n P(n) (1 - xi)^n` behind a channel of
/// survival probability `xi`.
pub fn vacuum_probability(dist: &PhotonDistribution, xi: f64) -> Result<TauInterval> {
    unit("xi", xi)?;
    let keep = 1.0 - xi;
    let mut weight = 1.0;
    let mut lo = 0.0;
    for &p in &dist.probs {
        lo += p * weight;
        weight *= keep;
    }
    let lo = lo.min(1.0);
    Ok(TauInterval {
        lo,
        hi: (lo + dist.tail_mass).min(1.0),
    })
}

/// Attenuation behind the monitor beam splitter that makes the signal path
/// match what the photodiode sees: `t_0 = (1 - eta_BS) / eta_BS * eta_DET`.
pub fn monitor_attenuation(eta_bs: f64, eta_det: f64) -> Result<f64> {
    open_unit("eta_BS", eta_bs)?;
    unit("eta_DET", eta_det)?;
    Ok((1.0 - eta_bs) / eta_bs * eta_det)
}

/// Hoeffding confidence radius `sqrt(ln(2/eps) / 2N)` for the mean of `N`
/// samples bounded in `[0, 1]`, inverting `eps = 2 exp(-2 N delta^2)`.
pub fn hoeffding_delta(samples: u64, epsilon: f64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Domain {
            name: "samples",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    open_unit("epsilon_d", epsilon)?;
    Ok(((2.0 / epsilon).ln() / (2.0 * samples as f64)).sqrt())
}

/// Failure probability `2 exp(-2 N delta^2)` of a Hoeffding interval.
pub fn hoeffding_epsilon(samples: u64, delta: f64) -> f64 {
    2.0 * (-2.0 * samples as f64 * delta * delta).exp()
}

/// Empirical photon-number distribution from monitor counts
/// (`photon number -> occurrences`). The tail is zero and the sample size
/// is kept for the confidence interval.
pub fn estimate_distribution(counts: &BTreeMap<usize, u64>) -> Result<PhotonDistribution> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::Empty("monitor histogram"));
    }
    let n_max = *counts.keys().next_back().expect("non-empty");
    let mut probs = vec![0.0; n_max + 1];
    for (&n, &c) in counts {
        probs[n] = c as f64 / total as f64;
    }
    Ok(PhotonDistribution {
        probs,
        tail_mass: 0.0,
        samples: Some(total),
    })
}

/// Parses a monitor histogram written as `n,count` lines. Blank lines,
/// `#` comments and an optional `n,count` header are skipped; repeated
/// photon numbers accumulate.
pub fn parse_histogram_csv(text: &str) -> Result<BTreeMap<usize, u64>> {
    let mut counts = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.eq_ignore_ascii_case("n,count") {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let (n, c) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected `n,count`, got `{line}`")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("photon number: {e}")))?;
        let c: u64 = c
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("count: {e}")))?;
        *counts.entry(n).or_insert(0) += c;
    }
    Ok(counts)
}

/// Photon-distribution monitor: a beam splitter tapping the source onto a
/// photodiode, followed by the balancing attenuator `t_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Transmittance of the tap beam splitter.
    pub eta_bs: f64,
    /// Photodiode detection efficiency.
    pub eta_det: f64,
    /// System transmittance behind the monitor for each detector arm.
    pub arm_transmittance: [f64; 2],
    /// Pulses sampled by the monitor.
    pub sample_count: u64,
    /// Distribution-estimation failure probability.
    pub epsilon_d: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            eta_bs: 0.5,
            eta_det: 1.0,
            arm_transmittance: [1.0, 1.0],
            sample_count: 1_000_000_000,
            epsilon_d: 2f64.powi(-50),
        }
    }
}

impl MonitorConfig {
    pub fn validate(&self) -> Result<()> {
        open_unit("eta_BS", self.eta_bs)?;
        if !(self.eta_det > 0.0 && self.eta_det <= 1.0) {
            return Err(Error::Domain {
                name: "eta_DET",
                value: self.eta_det,
                range: "(0, 1]",
            });
        }
        for t in self.arm_transmittance {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Domain {
                    name: "t_all",
                    value: t,
                    range: "(0, 1]",
                });
            }
        }
        if self.sample_count == 0 {
            return Err(Error::Config(
                "monitor sample_count must be at least 1".into(),
            ));
        }
        open_unit("epsilon_d", self.epsilon_d)?;
        Ok(())
    }

    pub fn attenuation(&self) -> Result<f64> {
        monitor_attenuation(self.eta_bs, self.eta_det)
    }

    /// Transmittance of the signal path through the monitor,
    /// `eta_BS * t_0 = (1 - eta_BS) eta_DET`.
    pub fn signal_transmittance(&self) -> Result<f64> {
        Ok(self.eta_bs * self.attenuation()?)
    }

    pub fn delta(&self) -> Result<f64> {
        hoeffding_delta(self.sample_count, self.epsilon_d)
    }
}
