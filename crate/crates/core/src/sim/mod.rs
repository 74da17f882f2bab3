//! Seeded Monte Carlo of the measurement unit.
//!
//! Every pulse chooses a basis, draws a photon number from the source and
//! routes each photon independently to the detectors of that basis. All four
//! detectors are gated in every window (the unselected pair sees vacuum), so
//! dark counts and afterpulses keep every detector's history alive.
//!
//! # Random streams
//!
//! Randomness comes from ChaCha8 (`rand_chacha` 0.9) keyed by the master
//! seed through `seed_from_u64`. Each purpose owns a stream id, and pulse `j`
//! always consumes the same fixed number of 64-bit draws from each stream
//! starting at word `2 * j * draws`, so any pulse can be regenerated in
//! isolation and new streams never disturb old ones:
//!
//! | stream | purpose | draws per pulse |
//! |---|---|---|
//! | 0 | basis choice | 1 |
//! | 1 | photon number | 1 |
//! | 2 | photon routing | 2 |
//! | 3 | dark counts and afterpulses (D0, D1, D+, D-) | 8 |
//! | 4 | fill bit for double clicks | 1 |
//!
//! # Segmentation
//!
//! The pulse train is cut into fixed segments of `segment_len` pulses. A
//! segment starts with an empty history `depth` pulses before its first
//! pulse and replays those warm-up pulses (with the same draws) without
//! recording them. Segments are independent, so they run in parallel and the
//! result does not depend on the number of threads. When the afterpulse
//! memory is at least as long as a segment the whole train is one segment.

mod bits;
mod export;
mod extract;

use std::collections::VecDeque;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{afterpulse_coeff, AfterpulseModel, AfterpulseSpec};
use crate::entropy::{Channel, DetectorSet};
use crate::error::{unit, Error, Result};
use crate::source::PhotonDistribution;

pub use bits::{BitEntry, BitStream};
pub use export::{pack_bits, write_records_csv, BitStreamSidecar, RECORDS_CSV_HEADER};
pub use extract::extract;

const STREAM_BASIS: u64 = 0;
const STREAM_PHOTON: u64 = 1;
const STREAM_SIGNAL: u64 = 2;
const STREAM_DETECTOR: u64 = 3;
const STREAM_FILL: u64 = 4;

const DRAWS_SIGNAL: u64 = 2;
const DRAWS_DETECTOR: u64 = 8;

const FLAG_X: u8 = 1;
const FLAG_D0: u8 = 2;
const FLAG_D1: u8 = 4;
const FLAG_AP0: u8 = 8;
const FLAG_AP1: u8 = 16;

fn default_segment_len() -> u64 {
    1 << 20
}

fn default_depth_cap() -> usize {
    100_000
}

fn default_tail_tolerance() -> f64 {
    1e-12
}

/// Everything that determines a simulated pulse train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTrainConfig {
    pub pulses: u64,
    /// Photon-number distribution leaving the source, before any loss.
    pub source: PhotonDistribution,
    #[serde(default)]
    pub channel: Channel,
    pub detectors: DetectorSet,
    /// Probability of measuring a pulse in the X basis.
    pub q_x: f64,
    pub seed: u64,
    #[serde(default = "default_segment_len")]
    pub segment_len: u64,
    /// Upper bound on the afterpulse memory tracked per detector.
    #[serde(default = "default_depth_cap")]
    pub depth_cap: usize,
    /// Coefficient mass below which an infinite exponential history is cut.
    #[serde(default = "default_tail_tolerance")]
    pub tail_tolerance: f64,
}

impl PulseTrainConfig {
    pub fn new(
        pulses: u64,
        source: PhotonDistribution,
        channel: Channel,
        detectors: DetectorSet,
        q_x: f64,
        seed: u64,
    ) -> Self {
        PulseTrainConfig {
            pulses,
            source,
            channel,
            detectors,
            q_x,
            seed,
            segment_len: default_segment_len(),
            depth_cap: default_depth_cap(),
            tail_tolerance: default_tail_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(Error::Config("pulse count must be at least 1".into()));
        }
        if self.segment_len == 0 {
            return Err(Error::Config("segment length must be at least 1".into()));
        }
        unit("q_x", self.q_x)?;
        self.channel.validate()?;
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::Config("tail tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Afterpulse memory (in windows) tracked by the simulation.
    pub fn depth(&self) -> usize {
        self.detectors
            .z
            .iter()
            .chain(&self.detectors.x)
            .map(|d| {
                d.afterpulse
                    .simulation_depth(self.tail_tolerance, self.depth_cap)
            })
            .max()
            .unwrap_or(0)
    }

    fn effective_segment_len(&self) -> u64 {
        if self.depth() as u64 >= self.segment_len {
            self.pulses
        } else {
            self.segment_len
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Z => "Z",
            Basis::X => "X",
        }
    }
}

/// Outcome of one pulse in the measured basis. `d0`/`d1` are `D0`/`D1` in
/// the Z basis and `D+`/`D-` in the X basis; `ap*` mark afterpulse events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub index: u64,
    pub basis: Basis,
    pub d0: bool,
    pub d1: bool,
    pub ap0: bool,
    pub ap1: bool,
}

impl ClickRecord {
    fn decode(index: u64, flags: u8) -> Self {
        ClickRecord {
            index,
            basis: if flags & FLAG_X != 0 {
                Basis::X
            } else {
                Basis::Z
            },
            d0: flags & FLAG_D0 != 0,
            d1: flags & FLAG_D1 != 0,
            ap0: flags & FLAG_AP0 != 0,
            ap1: flags & FLAG_AP1 != 0,
        }
    }
}

/// Event counts of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub pulses: u64,
    pub z_pulses: u64,
    pub z_single: u64,
    pub z_double: u64,
    pub x_pulses: u64,
    /// Lone `D-` clicks.
    pub x_minus_only: u64,
    /// Lone `D+` clicks.
    pub x_plus_only: u64,
    pub x_double: u64,
    /// Afterpulse events of `D0`, `D1`, `D+`, `D-`.
    pub afterpulses: [u64; 4],
}

impl Counters {
    fn merge(&mut self, o: &Counters) {
        self.pulses += o.pulses;
        self.z_pulses += o.z_pulses;
        self.z_single += o.z_single;
        self.z_double += o.z_double;
        self.x_pulses += o.x_pulses;
        self.x_minus_only += o.x_minus_only;
        self.x_plus_only += o.x_plus_only;
        self.x_double += o.x_double;
        for (a, b) in self.afterpulses.iter_mut().zip(o.afterpulses) {
            *a += b;
        }
    }
}

/// A mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    fn proportion(hits: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Empty("no pulses in this basis"));
        }
        let p = hits as f64 / trials as f64;
        Ok(Estimate {
            value: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        })
    }

    /// Distance to `expected` in standard errors.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = (self.value - expected).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.stderr
        }
    }
}

/// Outcome of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub seed: u64,
    pub counters: Counters,
    /// Raw bits from Z-basis single clicks and filled double clicks.
    pub bits: BitStream,
    outcomes: Vec<u8>,
}

impl SimulationOutput {
    /// One record per pulse, in pulse order.
    pub fn records(&self) -> impl ExactSizeIterator<Item = ClickRecord> + '_ {
        self.outcomes
            .iter()
            .enumerate()
            .map(|(i, &f)| ClickRecord::decode(i as u64, f))
    }

    /// Compact per-pulse outcome flags, for hashing and comparison.
    pub fn outcome_flags(&self) -> &[u8] {
        &self.outcomes
    }

    /// Fraction of Z-basis pulses with exactly one click.
    pub fn q_single(&self) -> Result<Estimate> {
        Estimate::proportion(self.counters.z_single, self.counters.z_pulses)
    }

    /// Fraction of Z-basis pulses with both detectors clicking.
    pub fn q_double(&self) -> Result<Estimate> {
        Estimate::proportion(self.counters.z_double, self.counters.z_pulses)
    }

    /// X-basis error probability per pulse, counting a double click as half
    /// an error.
    pub fn eq(&self) -> Result<Estimate> {
        let c = &self.counters;
        if c.x_pulses == 0 {
            return Err(Error::Empty("no X-basis pulses"));
        }
        let n = c.x_pulses as f64;
        let mean = (c.x_minus_only as f64 + 0.5 * c.x_double as f64) / n;
        let second = (c.x_minus_only as f64 + 0.25 * c.x_double as f64) / n;
        Ok(Estimate {
            value: mean,
            stderr: ((second - mean * mean).max(0.0) / n).sqrt(),
        })
    }
}

struct Streams {
    basis: ChaCha8Rng,
    photon: ChaCha8Rng,
    signal: ChaCha8Rng,
    detector: ChaCha8Rng,
    fill: ChaCha8Rng,
}

fn stream(seed: u64, id: u64, first_pulse: u64, draws: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng.set_word_pos(2 * first_pulse as u128 * draws as u128);
    rng
}

impl Streams {
    fn at(seed: u64, first_pulse: u64) -> Self {
        Streams {
            basis: stream(seed, STREAM_BASIS, first_pulse, 1),
            photon: stream(seed, STREAM_PHOTON, first_pulse, 1),
            signal: stream(seed, STREAM_SIGNAL, first_pulse, DRAWS_SIGNAL),
            detector: stream(seed, STREAM_DETECTOR, first_pulse, DRAWS_DETECTOR),
            fill: stream(seed, STREAM_FILL, first_pulse, 1),
        }
    }
}

/// Uniform in `[0, 1)` from the top 53 bits of one draw.
fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Whether each of two detectors receives at least one of `n` photons, when
/// each photon reaches them with probabilities `xi0` and `xi1` (exclusive).
fn route(n: usize, xi0: f64, xi1: f64, u0: f64, u1: f64) -> (bool, bool) {
    if n == 0 {
        return (false, false);
    }
    let n = n as i32;
    let none0 = (1.0 - xi0).powi(n);
    if u0 < none0 {
        let none1 = if xi0 < 1.0 {
            (1.0 - xi1 / (1.0 - xi0)).max(0.0).powi(n)
        } else {
            0.0
        };
        (false, u1 >= none1)
    } else {
        let both_none = (1.0 - xi0 - xi1).max(0.0).powi(n);
        let none1 = ((1.0 - xi1).powi(n) - both_none) / (1.0 - none0);
        (true, u1 >= none1)
    }
}

struct DetectorState {
    dark_rate: f64,
    memory: Memory,
}

/// Afterpulse history of one detector, tracking lags `1..=depth`.
enum Memory {
    None,
    /// Arbitrary coefficients: the hazard scans every remembered fire.
    /// `coefficients[j - 1]` is the lag-`j` coefficient.
    Table {
        coefficients: Vec<f64>,
        fires: VecDeque<u64>,
    },
    /// Coefficients `c_j = A r^j`. Keeps the power sums
    /// `sums[n - 1] = sum over fires of c_lag^n`, so that
    /// `-ln prod(1 - c) = sum_n sums[n - 1] / n` updates in O(1) per pulse.
    Geometric {
        depth: u64,
        /// `(A r)^n`, the contribution of a fire one window later.
        first: Vec<f64>,
        /// `r^n`
        ratio: Vec<f64>,
        /// `(A r^(depth + 1))^n`, removed when a fire leaves the window.
        last: Vec<f64>,
        sums: Vec<f64>,
        fires: VecDeque<u64>,
    },
}

/// Largest first coefficient handled by the power-sum series; the terms
/// dropped after `n` powers are then below `1e-17` relative.
const SERIES_MAX_COEFF: f64 = 0.05;

impl Memory {
    fn new(afterpulse: &AfterpulseSpec, depth: usize) -> Self {
        if depth == 0 || afterpulse.is_none() {
            return Memory::None;
        }
        if let AfterpulseModel::Exponential { amplitude, decay } = *afterpulse.model() {
            let c1 = afterpulse_coeff(amplitude, decay, 1);
            if c1 <= SERIES_MAX_COEFF {
                let terms = ((-17.0f64 * std::f64::consts::LN_10) / c1.ln())
                    .ceil()
                    .max(1.0) as i32;
                let r = (-decay).exp();
                let c_out = afterpulse_coeff(amplitude, decay, depth as u64 + 1);
                return Memory::Geometric {
                    depth: depth as u64,
                    first: (1..=terms).map(|n| c1.powi(n)).collect(),
                    ratio: (1..=terms).map(|n| r.powi(n)).collect(),
                    last: (1..=terms).map(|n| c_out.powi(n)).collect(),
                    sums: vec![0.0; terms as usize],
                    fires: VecDeque::new(),
                };
            }
        }
        Memory::Table {
            coefficients: (1..=depth as u64)
                .map(|j| afterpulse.coefficient(j))
                .collect(),
            fires: VecDeque::new(),
        }
    }

    fn hazard(&mut self, now: u64) -> f64 {
        match self {
            Memory::None => 0.0,
            Memory::Table {
                coefficients,
                fires,
            } => {
                let depth = coefficients.len() as u64;
                while fires.front().is_some_and(|&t| now - t > depth) {
                    fires.pop_front();
                }
                let survive: f64 = fires
                    .iter()
                    .map(|&t| 1.0 - coefficients[(now - t - 1) as usize])
                    .product();
                1.0 - survive
            }
            Memory::Geometric { sums, .. } => {
                let log_survive: f64 = sums
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s / (i + 1) as f64)
                    .sum();
                -(-log_survive).exp_m1()
            }
        }
    }

    /// Moves from window `now` to `now + 1`.
    fn advance(&mut self, now: u64, click: bool) {
        match self {
            Memory::None => {}
            Memory::Table { fires, .. } => {
                if click {
                    fires.push_back(now);
                }
            }
            Memory::Geometric {
                depth,
                first,
                ratio,
                last,
                sums,
                fires,
            } => {
                for (s, r) in sums.iter_mut().zip(ratio.iter()) {
                    *s *= r;
                }
                if click {
                    fires.push_back(now);
                    for (s, f) in sums.iter_mut().zip(first.iter()) {
                        *s += f;
                    }
                }
                // a fire at `now - depth` would sit at lag `depth + 1`
                if fires.front().is_some_and(|&t| now + 1 - t > *depth) {
                    fires.pop_front();
                    for (s, l) in sums.iter_mut().zip(last.iter()) {
                        *s = (*s - l).max(0.0);
                    }
                }
            }
        }
    }
}

impl DetectorState {
    /// Returns `(click, afterpulse)`.
    fn gate(&mut self, now: u64, signal: bool, u_dark: f64, u_ap: f64) -> (bool, bool) {
        let afterpulse = u_ap < self.memory.hazard(now);
        let click = signal || u_dark < self.dark_rate || afterpulse;
        self.memory.advance(now, click);
        (click, afterpulse)
    }
}

struct Segment {
    outcomes: Vec<u8>,
    bits: Vec<BitEntry>,
    counters: Counters,
}

struct Plan {
    xi_z: [f64; 2],
    xi_x: [f64; 2],
    depth: usize,
}

fn run_segment(config: &PulseTrainConfig, plan: &Plan, start: u64, end: u64) -> Segment {
    let warm = start.saturating_sub(plan.depth as u64);
    let mut rng = Streams::at(config.seed, warm);
    let dets = [
        &config.detectors.z[0],
        &config.detectors.z[1],
        &config.detectors.x[0],
        &config.detectors.x[1],
    ];
    let mut states: Vec<DetectorState> = dets
        .iter()
        .map(|d| {
            let depth = d
                .afterpulse
                .simulation_depth(config.tail_tolerance, config.depth_cap);
            DetectorState {
                dark_rate: d.dark_rate,
                memory: Memory::new(&d.afterpulse, depth),
            }
        })
        .collect();
    let n_max = config.source.n_max();

    let mut seg = Segment {
        outcomes: Vec::with_capacity((end - start) as usize),
        bits: Vec::new(),
        counters: Counters::default(),
    };
    for j in warm..end {
        let is_x = uniform(&mut rng.basis) < config.q_x;
        // tail mass beyond the table is attributed to its last photon number
        let n = config
            .source
            .sample(uniform(&mut rng.photon))
            .unwrap_or(n_max);
        let (u0, u1) = (uniform(&mut rng.signal), uniform(&mut rng.signal));
        let (xi, offset) = if is_x { (plan.xi_x, 2) } else { (plan.xi_z, 0) };
        let (s0, s1) = route(n, xi[0], xi[1], u0, u1);
        let mut signal = [false; 4];
        signal[offset] = s0;
        signal[offset + 1] = s1;

        let mut click = [false; 4];
        let mut ap = [false; 4];
        for (a, state) in states.iter_mut().enumerate() {
            let u_dark = uniform(&mut rng.detector);
            let u_ap = uniform(&mut rng.detector);
            (click[a], ap[a]) = state.gate(j, signal[a], u_dark, u_ap);
        }
        let fill = rng.fill.next_u64() >> 63;
        if j < start {
            continue;
        }

        let (c0, c1) = (click[offset], click[offset + 1]);
        let mut flags = 0u8;
        if is_x {
            flags |= FLAG_X;
        }
        if c0 {
            flags |= FLAG_D0;
        }
        if c1 {
            flags |= FLAG_D1;
        }
        if ap[offset] {
            flags |= FLAG_AP0;
        }
        if ap[offset + 1] {
            flags |= FLAG_AP1;
        }
        seg.outcomes.push(flags);

        let c = &mut seg.counters;
        c.pulses += 1;
        for (count, &hit) in c.afterpulses.iter_mut().zip(&ap) {
            *count += hit as u64;
        }
        if is_x {
            c.x_pulses += 1;
            match (c0, c1) {
                (true, true) => c.x_double += 1,
                (false, true) => c.x_minus_only += 1,
                (true, false) => c.x_plus_only += 1,
                (false, false) => {}
            }
        } else {
            c.z_pulses += 1;
            match (c0, c1) {
                (true, true) => {
                    c.z_double += 1;
                    seg.bits.push(BitEntry {
                        index: j,
                        value: fill as u8,
                        filled: true,
                    });
                }
                (true, false) | (false, true) => {
                    c.z_single += 1;
                    seg.bits.push(BitEntry {
                        index: j,
                        value: c1 as u8,
                        filled: false,
                    });
                }
                (false, false) => {}
            }
        }
    }
    seg
}

/// Runs the pulse train. Parallel over segments on the current rayon pool;
/// the output is identical for any number of threads.
pub fn simulate(config: &PulseTrainConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let (xi_z, xi_x) = config.channel.survival(&config.detectors)?;
    let plan = Plan {
        xi_z,
        xi_x,
        depth: config.depth(),
    };
    let len = config.effective_segment_len();
    let count = config.pulses.div_ceil(len);
    let segments: Vec<Segment> = (0..count)
        .into_par_iter()
        .map(|k| {
            let start = k * len;
            run_segment(config, &plan, start, (start + len).min(config.pulses))
        })
        .collect();

    let mut counters = Counters::default();
    let mut outcomes = Vec::with_capacity(config.pulses as usize);
    let mut entries = Vec::new();
    for seg in segments {
        counters.merge(&seg.counters);
        outcomes.extend_from_slice(&seg.outcomes);
        entries.extend(seg.bits);
    }
    Ok(SimulationOutput {
        seed: config.seed,
        counters,
        bits: BitStream::from_entries(entries),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{DetectorParams, WindowDepth};

    #[test]
    fn geometric_memory_matches_table_scan() {
        let spec = AfterpulseSpec::exponential(0.02, 0.05, WindowDepth::Infinite).unwrap();
        let depth = 120;
        let mut fast = Memory::new(&spec, depth);
        assert!(matches!(fast, Memory::Geometric { .. }));
        let mut slow = Memory::Table {
            coefficients: (1..=depth as u64).map(|j| spec.coefficient(j)).collect(),
            fires: VecDeque::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for now in 0..5000u64 {
            let (a, b) = (fast.hazard(now), slow.hazard(now));
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{now}: {a} vs {b}");
            let click = uniform(&mut rng) < 0.3;
            fast.advance(now, click);
            slow.advance(now, click);
        }
    }

    fn config(pulses: u64, nu: f64, dark: f64, ap: AfterpulseSpec, q_x: f64) -> PulseTrainConfig {
        let det = DetectorParams::new(0.1, dark, ap).unwrap();
        PulseTrainConfig::new(
            pulses,
            PhotonDistribution::poisson(nu, None).unwrap(),
            Channel {
                misalignment: 0.02,
                ..Channel::default()
            },
            DetectorSet::uniform(det),
            q_x,
            7,
        )
    }

    #[test]
    fn vacuum_without_noise_never_clicks() {
        let mut c = config(10_000, 1.0, 0.0, AfterpulseSpec::none(), 0.5);
        c.source = PhotonDistribution::vacuum();
        let out = simulate(&c).unwrap();
        assert!(out.records().all(|r| !r.d0 && !r.d1));
        assert_eq!(out.bits.len(), 0);
    }

    #[test]
    fn routing_marginals() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, xi0, xi1) = (4usize, 0.2, 0.3);
        let trials = 200_000;
        let mut counts = [0u32; 4];
        for _ in 0..trials {
            let (a, b) = route(n, xi0, xi1, rng.random(), rng.random());
            counts[(a as usize) << 1 | b as usize] += 1;
        }
        let none = (1.0f64 - xi0 - xi1).powi(4);
        let only0 = (1.0f64 - xi1).powi(4) - none;
        let only1 = (1.0f64 - xi0).powi(4) - none;
        let expect = [none, only1, only0, 1.0 - none - only0 - only1];
        for (c, e) in counts.iter().zip(expect) {
            let p = *c as f64 / trials as f64;
            assert!(
                (p - e).abs() < 4.0 * (e * (1.0 - e) / trials as f64).sqrt(),
                "{p} {e}"
            );
        }
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let ap = AfterpulseSpec::explicit(vec![0.03, 0.01, 0.005], WindowDepth::Infinite).unwrap();
        let mut c = config(50_000, 2.0, 1e-3, ap, 0.3);
        c.segment_len = 4096;
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c1 = single.install(|| simulate(&c).unwrap());
        assert_eq!(a, c1);
        let mut other = c.clone();
        other.seed += 1;
        assert_ne!(simulate(&other).unwrap().outcome_flags(), a.outcome_flags());
    }

    #[test]
    fn bit_stream_length_matches_counters() {
        let out = simulate(&config(20_000, 10.0, 1e-4, AfterpulseSpec::none(), 0.2)).unwrap();
        assert_eq!(
            out.bits.len() as u64,
            out.counters.z_single + out.counters.z_double
        );
        assert_eq!(out.counters.z_pulses + out.counters.x_pulses, 20_000);
        assert_eq!(out.records().len(), 20_000);
        assert!(out.counters.afterpulses.iter().all(|&a| a == 0));
    }

    #[test]
    fn afterpulses_are_flagged() {
        let ap = AfterpulseSpec::explicit(vec![0.2], WindowDepth::Infinite).unwrap();
        let out = simulate(&config(20_000, 10.0, 0.0, ap, 0.0)).unwrap();
        assert!(out.counters.afterpulses[0] > 0);
        assert!(out.records().any(|r| r.ap0));
    }

    #[test]
    fn empty_basis_is_an_error() {
        let out = simulate(&config(1000, 1.0, 0.0, AfterpulseSpec::none(), 0.0)).unwrap();
        assert!(matches!(out.eq(), Err(Error::Empty(_))));
    }

    #[test]
    fn invalid_config() {
        let mut c = config(0, 1.0, 0.0, AfterpulseSpec::none(), 0.0);
        assert!(matches!(simulate(&c), Err(Error::Config(_))));
        c.pulses = 10;
        c.q_x = 1.5;
        assert!(simulate(&c).is_err());
    }
}
