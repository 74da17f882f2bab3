//! Parameter sweeps behind the characteristic curves of the model.
//!
//! Each sweep returns a [`Table`] whose rows follow the sweep order no matter
//! in which order the points were evaluated on the rayon pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{AfterpulseSpec, DetectorParams, WindowDepth};
use crate::entropy::{
    prior_autocorrelation, ArmTaus, Channel, DetectorSet, EntropyReport, PriorResponse,
};
use crate::error::{Error, Result};
use crate::finite::{worst_case_over_box, Method, RateReport, SecurityParams};
use crate::sim::{simulate, PulseTrainConfig};
use crate::source::{hoeffding_delta, MonitorConfig, PhotonDistribution};

/// Numeric sweep output with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// `points` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// `points` logarithmically spaced values from `from` to `to` inclusive.
pub fn logspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    linspace(from.log10(), to.log10(), points)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

fn check_points(points: usize) -> Result<()> {
    if points == 0 {
        return Err(Error::Config("a sweep needs at least one point".into()));
    }
    Ok(())
}

/// Detector with a single lag-one coefficient and an infinite history.
pub fn single_lag_detector(efficiency: f64, dark_rate: f64, p_hat: f64) -> Result<DetectorParams> {
    let ap = if p_hat == 0.0 {
        AfterpulseSpec::none()
    } else {
        AfterpulseSpec::explicit(vec![p_hat], WindowDepth::Infinite)?
    };
    DetectorParams::new(efficiency, dark_rate, ap)
}

/// Vacuum probabilities of the endpoint assignment with least min-entropy.
pub fn worst_taus(
    source: &PhotonDistribution,
    channel: &Channel,
    detectors: &DetectorSet,
    prior: PriorResponse,
) -> Result<ArmTaus> {
    channel
        .taus(source, detectors)?
        .worst_corner(detectors, prior)
}

fn min_entropy(
    source: &PhotonDistribution,
    channel: &Channel,
    detectors: &DetectorSet,
    prior: PriorResponse,
) -> Result<EntropyReport> {
    EntropyReport::evaluate(
        detectors,
        &worst_taus(source, channel, detectors, prior)?,
        prior,
    )
}

/// Monte Carlo settings of the autocorrelation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarlo {
    pub pulses: u64,
    pub seed: u64,
    /// Batches for the standard error of the estimate.
    pub batches: usize,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        MonteCarlo {
            pulses: 10_000_000,
            seed: 1,
            batches: 100,
        }
    }
}

/// Autocorrelation against the lag-`i` afterpulse coefficient.
///
/// The detectors share an overall first-order rate `total_rate`; the lag-`i`
/// coefficient is swept from zero to `total_rate` and the remainder is spread
/// evenly over `tail_lags` further windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutocorrConfig {
    pub nu: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub total_rate: f64,
    pub lag: u64,
    pub tail_lags: usize,
    /// `eta_1 / eta_0` of the Z-basis detectors.
    pub efficiency_ratio: f64,
    pub transmittance: f64,
    pub points: usize,
    pub prior: PriorResponse,
    /// Adds Monte Carlo columns when present.
    pub monte_carlo: Option<MonteCarlo>,
}

impl Default for AutocorrConfig {
    fn default() -> Self {
        AutocorrConfig {
            nu: 1.0,
            efficiency: 0.1,
            dark_rate: 6e-7,
            total_rate: 0.05,
            lag: 1,
            tail_lags: 50,
            efficiency_ratio: 1.0,
            transmittance: 1.0,
            points: 11,
            prior: PriorResponse::Stationary,
            monte_carlo: None,
        }
    }
}

impl AutocorrConfig {
    /// Coefficient table with `p_i` at the configured lag.
    pub fn coefficients(&self, p_i: f64) -> Vec<f64> {
        let lag = self.lag as usize;
        let mut c = vec![0.0; lag + self.tail_lags];
        c[lag - 1] = p_i;
        let rest = (self.total_rate - p_i).max(0.0);
        if self.tail_lags > 0 {
            for x in &mut c[lag..] {
                *x = rest / self.tail_lags as f64;
            }
        }
        c
    }

    pub fn detectors(&self, p_i: f64) -> Result<DetectorSet> {
        let ap = AfterpulseSpec::explicit(self.coefficients(p_i), WindowDepth::Infinite)?;
        let d0 = DetectorParams::new(self.efficiency, self.dark_rate, ap.clone())?;
        let d1 = DetectorParams::new(self.efficiency * self.efficiency_ratio, self.dark_rate, ap)?;
        Ok(DetectorSet {
            z: [d0.clone(), d1],
            x: [d0.clone(), d0],
        })
    }

    fn channel(&self) -> Channel {
        Channel {
            transmittance: self.transmittance,
            ..Channel::default()
        }
    }

    /// Analytic autocorrelation at lag-`i` coefficient `p_i`.
    pub fn analytic(&self, p_i: f64) -> Result<f64> {
        let source = PhotonDistribution::poisson(self.nu, None)?;
        let dets = self.detectors(p_i)?;
        let taus = worst_taus(&source, &self.channel(), &dets, self.prior)?;
        prior_autocorrelation(
            &dets.z[0], taus.z[0], &dets.z[1], taus.z[1], self.lag, self.prior,
        )
    }

    /// Simulated autocorrelation (Z basis only) with its standard error.
    pub fn simulated(&self, p_i: f64, mc: &MonteCarlo) -> Result<(f64, f64)> {
        let config = PulseTrainConfig::new(
            mc.pulses,
            PhotonDistribution::poisson(self.nu, None)?,
            self.channel(),
            self.detectors(p_i)?,
            0.0,
            mc.seed,
        );
        let est = simulate(&config)?
            .bits
            .autocorrelation_estimate(self.lag, false, mc.batches)?;
        Ok((est.value, est.stderr))
    }

    pub fn run(&self) -> Result<Table> {
        check_points(self.points)?;
        if self.lag == 0 {
            return Err(Error::Config("lag must be at least 1".into()));
        }
        let mut header = vec!["p_hat_i".to_string(), "analytic".to_string()];
        if self.monte_carlo.is_some() {
            header.extend(["monte_carlo".to_string(), "monte_carlo_stderr".to_string()]);
        }
        let rows = linspace(0.0, self.total_rate, self.points)
            .into_par_iter()
            .map(|p_i| {
                let mut row = vec![p_i, self.analytic(p_i)?];
                if let Some(mc) = &self.monte_carlo {
                    let (value, stderr) = self.simulated(p_i, mc)?;
                    row.extend([value, stderr]);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }
}

/// Min-entropy against the afterpulse rate for no afterpulse (`Np`), an
/// infinite history (`Ip`) and a finite history (`Fp`) of an exponential
/// trap with the same overall rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfterpulseSweepConfig {
    pub nu: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub misalignment: f64,
    pub transmittance: f64,
    pub p_hat_max: f64,
    pub points: usize,
    /// Remembered windows of the finite history.
    pub windows: u64,
    /// Decay constant of the exponential trap.
    pub decay: f64,
    pub prior: PriorResponse,
}

impl Default for AfterpulseSweepConfig {
    fn default() -> Self {
        AfterpulseSweepConfig {
            nu: 10.0,
            efficiency: 0.1,
            dark_rate: 6e-7,
            misalignment: 0.02,
            transmittance: 1.0,
            p_hat_max: 0.1,
            points: 101,
            windows: 1000,
            decay: 0.001,
            prior: PriorResponse::Stationary,
        }
    }
}

impl AfterpulseSweepConfig {
    fn channel(&self) -> Channel {
        Channel {
            transmittance: self.transmittance,
            misalignment: self.misalignment,
            ..Channel::default()
        }
    }

    /// Min-entropy per pulse for one afterpulse description.
    pub fn hmin_a(&self, afterpulse: AfterpulseSpec) -> Result<f64> {
        let det = DetectorParams::new(self.efficiency, self.dark_rate, afterpulse)?;
        let source = PhotonDistribution::poisson(self.nu, None)?;
        Ok(min_entropy(
            &source,
            &self.channel(),
            &DetectorSet::uniform(det),
            self.prior,
        )?
        .hmin_a)
    }

    /// `(Np, Ip, Fp)` at overall rate `p_hat`.
    pub fn modes(&self, p_hat: f64) -> Result<(f64, f64, f64)> {
        Ok((
            self.hmin_a(AfterpulseSpec::none())?,
            self.hmin_a(AfterpulseSpec::exponential_with_rate(
                p_hat,
                self.decay,
                WindowDepth::Infinite,
            )?)?,
            self.hmin_a(AfterpulseSpec::exponential_with_rate(
                p_hat,
                self.decay,
                WindowDepth::Finite(self.windows),
            )?)?,
        ))
    }

    pub fn run(&self) -> Result<Table> {
        check_points(self.points)?;
        let rows = linspace(0.0, self.p_hat_max, self.points)
            .into_par_iter()
            .map(|p| {
                let (np, ip, fp) = self.modes(p)?;
                Ok(vec![p, np, ip, fp])
            })
            .collect::<Result<_>>()?;
        Ok(Table {
            header: ["p_hat", "Np", "Ip", "Fp"].map(String::from).to_vec(),
            rows,
        })
    }
}

/// Min-entropy against the efficiency ratio `eta_1 / eta_0` of the Z-basis
/// detectors, for several afterpulse rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MismatchConfig {
    pub nu: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub misalignment: f64,
    pub transmittance: f64,
    pub p_hats: Vec<f64>,
    pub ratio_from: f64,
    pub ratio_to: f64,
    pub points: usize,
    pub prior: PriorResponse,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        MismatchConfig {
            nu: 10.0,
            efficiency: 0.1,
            dark_rate: 6e-7,
            misalignment: 0.02,
            transmittance: 1.0,
            p_hats: vec![0.0, 0.05],
            ratio_from: 0.5,
            ratio_to: 1.0,
            points: 51,
            prior: PriorResponse::Stationary,
        }
    }
}

impl MismatchConfig {
    pub fn hmin_a(&self, ratio: f64, p_hat: f64) -> Result<f64> {
        let d0 = single_lag_detector(self.efficiency, self.dark_rate, p_hat)?;
        let d1 = single_lag_detector(self.efficiency * ratio, self.dark_rate, p_hat)?;
        let dets = DetectorSet {
            z: [d0.clone(), d1],
            x: [d0.clone(), d0],
        };
        let channel = Channel {
            transmittance: self.transmittance,
            misalignment: self.misalignment,
            ..Channel::default()
        };
        let source = PhotonDistribution::poisson(self.nu, None)?;
        Ok(min_entropy(&source, &channel, &dets, self.prior)?.hmin_a)
    }

    pub fn run(&self) -> Result<Table> {
        check_points(self.points)?;
        let mut header = vec!["ratio".to_string()];
        header.extend(self.p_hats.iter().map(|p| format!("hmin_a_p{p}")));
        let rows = linspace(self.ratio_from, self.ratio_to, self.points)
            .into_par_iter()
            .map(|r| {
                let mut row = vec![r];
                for &p in &self.p_hats {
                    row.push(self.hmin_a(r, p)?);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }
}

/// Per-pulse randomness rates against the loss of a variable attenuator in
/// front of the measurement unit, for every estimation method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSweepConfig {
    pub nu: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub security: SecurityParams,
    pub monitor: MonitorConfig,
    pub p_hats: Vec<f64>,
    pub loss_from_db: f64,
    pub loss_to_db: f64,
    pub points: usize,
    pub prior: PriorResponse,
}

impl Default for RateSweepConfig {
    fn default() -> Self {
        RateSweepConfig {
            nu: 50.0,
            efficiency: 0.1,
            dark_rate: 6e-7,
            security: SecurityParams::default(),
            monitor: MonitorConfig::default(),
            p_hats: vec![0.0, 0.05],
            loss_from_db: 0.0,
            loss_to_db: 10.0,
            points: 200,
            prior: PriorResponse::Stationary,
        }
    }
}

/// Transmittance of an attenuator with the given loss.
pub fn db_to_transmittance(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

impl RateSweepConfig {
    pub fn channel(&self, loss_db: f64) -> Result<Channel> {
        Ok(Channel {
            transmittance: self.monitor.signal_transmittance()? * db_to_transmittance(loss_db),
            arm_transmittance: self.monitor.arm_transmittance,
            misalignment: self.security.e_q,
        })
    }

    /// Rate reports at one loss for one afterpulse rate, in [`Method::ALL`] order.
    pub fn reports(&self, loss_db: f64, p_hat: f64) -> Result<[RateReport; 3]> {
        let det = single_lag_detector(self.efficiency, self.dark_rate, p_hat)?;
        let dets = DetectorSet::uniform(det);
        let source = PhotonDistribution::poisson(self.nu, None)?;
        let taus = worst_taus(&source, &self.channel(loss_db)?, &dets, self.prior)?;
        let delta = self.monitor.delta()?;
        let one = |m| RateReport::compute(m, &self.security, &dets, &taus, delta, self.prior);
        Ok([
            one(Method::ALL[0])?,
            one(Method::ALL[1])?,
            one(Method::ALL[2])?,
        ])
    }

    pub fn run(&self) -> Result<Table> {
        check_points(self.points)?;
        if !(self.loss_from_db >= 0.0 && self.loss_to_db >= self.loss_from_db) {
            return Err(Error::Config(
                "loss range must satisfy 0 <= from <= to".into(),
            ));
        }
        let mut header = vec!["loss_db".to_string()];
        for &p in &self.p_hats {
            for m in Method::ALL {
                header.push(format!("{}_p{p}", m.short_name()));
            }
        }
        for &p in &self.p_hats {
            for m in Method::ALL {
                header.push(format!("{}_final_p{p}", m.short_name()));
            }
        }
        for &p in &self.p_hats {
            header.push(format!("EQ_p{p}"));
            header.push(format!("theta_RS_p{p}"));
        }
        header.push("theta_EI".into());
        header.push("zeta".into());

        let rows = linspace(self.loss_from_db, self.loss_to_db, self.points)
            .into_par_iter()
            .map(|loss| {
                let all: Vec<[RateReport; 3]> = self
                    .p_hats
                    .iter()
                    .map(|&p| self.reports(loss, p))
                    .collect::<Result<_>>()?;
                let mut row = vec![loss];
                row.extend(all.iter().flat_map(|r| r.map(|x| x.per_pulse)));
                row.extend(all.iter().flat_map(|r| r.map(|x| x.final_per_pulse)));
                for r in &all {
                    row.push(r[0].entropy.eq);
                    row.push(r[0].theta);
                }
                let first = all
                    .first()
                    .ok_or(Error::Config("no afterpulse rates given".into()))?;
                row.push(first[1].theta);
                row.push(first[0].zeta);
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }
}

/// Min-entropy certified from a finite photon-number sample against the
/// sample size, next to the value for a perfectly known source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub nu: f64,
    pub efficiency: f64,
    pub dark_rate: f64,
    pub misalignment: f64,
    pub monitor: MonitorConfig,
    pub p_hats: Vec<f64>,
    pub samples_from: f64,
    pub samples_to: f64,
    pub points: usize,
    pub prior: PriorResponse,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            nu: 10.0,
            efficiency: 0.1,
            dark_rate: 6e-7,
            misalignment: 0.02,
            monitor: MonitorConfig::default(),
            p_hats: vec![0.0, 0.05],
            samples_from: 1e2,
            samples_to: 1e7,
            points: 51,
            prior: PriorResponse::Stationary,
        }
    }
}

impl SamplingConfig {
    /// `(infinite-length, finite-size)` min-entropy for `samples` monitor samples.
    pub fn hmin_pair(&self, samples: u64, p_hat: f64) -> Result<(f64, f64)> {
        let dets =
            DetectorSet::uniform(single_lag_detector(self.efficiency, self.dark_rate, p_hat)?);
        let channel = Channel {
            transmittance: self.monitor.signal_transmittance()?,
            arm_transmittance: self.monitor.arm_transmittance,
            misalignment: self.misalignment,
        };
        let source = PhotonDistribution::poisson(self.nu, None)?;
        let taus = worst_taus(&source, &channel, &dets, self.prior)?;
        let ideal = EntropyReport::evaluate(&dets, &taus, self.prior)?.hmin_a;
        let delta = hoeffding_delta(samples, self.monitor.epsilon_d)?;
        Ok((
            ideal,
            worst_case_over_box(&dets, &taus, delta, 0.0, self.prior)?,
        ))
    }

    pub fn run(&self) -> Result<Table> {
        check_points(self.points)?;
        if !(self.samples_from >= 1.0 && self.samples_to >= self.samples_from) {
            return Err(Error::Config(
                "sample range must satisfy 1 <= from <= to".into(),
            ));
        }
        let mut header = vec!["samples".to_string(), "delta".to_string()];
        for &p in &self.p_hats {
            header.push(format!("IL_p{p}"));
            header.push(format!("FS_p{p}"));
        }
        let rows = logspace(self.samples_from, self.samples_to, self.points)
            .into_par_iter()
            .map(|s| {
                let samples = s.round() as u64;
                let mut row = vec![
                    samples as f64,
                    hoeffding_delta(samples, self.monitor.epsilon_d)?,
                ];
                for &p in &self.p_hats {
                    let (il, fs) = self.hmin_pair(samples, p)?;
                    row.extend([il, fs]);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Ok(Table { header, rows })
    }
}
