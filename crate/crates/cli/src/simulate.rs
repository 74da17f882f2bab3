//! The `simulate` command: pulse train, raw bits, extracted bits.

use std::path::Path;

use serde::{Deserialize, Serialize};
use siqrng_core::entropy::{Channel, DetectorSet};
use siqrng_core::sim::{
    extract, pack_bits, simulate, write_records_csv, BitStreamSidecar, Counters, Estimate,
    PulseTrainConfig,
};
use siqrng_core::{
    AfterpulseSpec, DetectorParams, EntropyReport, PhotonDistribution, PriorResponse,
};

use crate::error::CliError;
use crate::output::{self, RunManifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Poisson {
        nu: f64,
        #[serde(default)]
        n_max: Option<usize>,
    },
    Distribution(PhotonDistribution),
}

impl SourceSpec {
    fn build(&self) -> Result<PhotonDistribution, CliError> {
        Ok(match self {
            SourceSpec::Poisson { nu, n_max } => PhotonDistribution::poisson(*nu, *n_max)?,
            SourceSpec::Distribution(d) => d.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub enabled: bool,
    pub seed: u64,
    /// Output length; by default the min-entropy of the Z-basis pulses less `t_e`.
    pub output_bits: Option<usize>,
    pub t_e: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            enabled: true,
            seed: 0,
            output_bits: None,
            t_e: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub pulses: u64,
    pub source: SourceSpec,
    pub detectors: DetectorSet,
    pub channel: Channel,
    pub q_x: f64,
    pub seed: u64,
    pub segment_len: u64,
    pub depth_cap: usize,
    pub tail_tolerance: f64,
    pub write_records: bool,
    pub extract: ExtractConfig,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let det = DetectorParams::new(0.1, 6e-7, AfterpulseSpec::none()).expect("valid defaults");
        SimulateConfig {
            pulses: 1_000_000,
            source: SourceSpec::Poisson {
                nu: 10.0,
                n_max: None,
            },
            detectors: DetectorSet::uniform(det),
            channel: Channel {
                misalignment: 0.02,
                ..Channel::default()
            },
            q_x: 0.02,
            seed: 1,
            segment_len: 1 << 20,
            depth_cap: 100_000,
            tail_tolerance: 1e-12,
            write_records: true,
            extract: ExtractConfig::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Comparison {
    simulated: Option<Estimate>,
    analytic: f64,
    standard_errors: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    manifest: &'a str,
    counters: Counters,
    raw_bits: usize,
    extracted_bits: usize,
    empirical_k: Option<f64>,
    q_single: Comparison,
    q_double: Comparison,
    eq: Comparison,
}

fn compare(est: Option<Estimate>, analytic: f64) -> Comparison {
    Comparison {
        simulated: est,
        analytic,
        standard_errors: est.map(|e| e.z_score(analytic)),
    }
}

pub fn run(
    config: &SimulateConfig,
    out_dir: &Path,
    manifest: &mut RunManifest,
) -> Result<String, CliError> {
    let mut train = PulseTrainConfig::new(
        config.pulses,
        config.source.build()?,
        config.channel,
        config.detectors.clone(),
        config.q_x,
        config.seed,
    );
    train.segment_len = config.segment_len;
    train.depth_cap = config.depth_cap;
    train.tail_tolerance = config.tail_tolerance;
    let out = simulate(&train)?;

    let taus = train
        .channel
        .taus(&train.source, &train.detectors)?
        .worst_corner(&train.detectors, PriorResponse::Stationary)?;
    let analytic = EntropyReport::evaluate(&train.detectors, &taus, PriorResponse::Stationary)?;
    let hash = manifest.hash.clone();

    if config.write_records {
        let path = out_dir.join("records.csv");
        let mut file = output::create(&path)?;
        use std::io::Write;
        writeln!(file, "{}", output::preamble("simulate", &hash)).map_err(CliError::io(&path))?;
        write_records_csv(&mut file, &out).map_err(CliError::io(&path))?;
        manifest.outputs.push(path);
    }

    let raw = out.bits.values();
    let path = out_dir.join("bits.bin");
    output::write_bytes(&path, &pack_bits(&raw))?;
    manifest.outputs.push(path);
    let path = out_dir.join("bits.json");
    output::write_json(&path, &BitStreamSidecar::new(&out, hash.clone()))?;
    manifest.outputs.push(path);

    let mut extracted_bits = 0;
    if config.extract.enabled {
        let budget = (out.counters.z_pulses as f64 * analytic.hmin_a - config.extract.t_e)
            .max(0.0)
            .floor() as usize;
        let len = config.extract.output_bits.unwrap_or(budget.min(raw.len()));
        let bits = extract(&raw, len, config.extract.seed)?;
        extracted_bits = bits.len();
        let path = out_dir.join("extracted.bin");
        output::write_bytes(&path, &pack_bits(&bits))?;
        manifest.outputs.push(path);
    }

    let summary = Summary {
        manifest: &hash,
        counters: out.counters,
        raw_bits: raw.len(),
        extracted_bits,
        empirical_k: out.bits.empirical_k().ok(),
        q_single: compare(out.q_single().ok(), analytic.q_single),
        q_double: compare(out.q_double().ok(), analytic.q_double),
        eq: compare(out.eq().ok(), analytic.eq),
    };
    let path = out_dir.join("summary.json");
    output::write_json(&path, &summary)?;
    manifest.outputs.push(path);

    let eq = summary.eq.simulated.map_or("n/a".to_string(), |e| {
        format!("{:.6e} +- {:.1e}", e.value, e.stderr)
    });
    Ok(format!(
        "{} pulses, {} raw bits, {} extracted bits, EQ {eq} (analytic {:.6e})",
        out.counters.pulses,
        raw.len(),
        extracted_bits,
        analytic.eq
    ))
}
