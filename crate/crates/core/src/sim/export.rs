//! File formats for simulation output.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::{Counters, SimulationOutput};

pub const RECORDS_CSV_HEADER: &str = "index,basis,d0,d1,ap0,ap1";

/// Writes one CSV row per pulse with `0`/`1` flags.
pub fn write_records_csv<W: Write>(mut out: W, output: &SimulationOutput) -> io::Result<()> {
    writeln!(out, "{RECORDS_CSV_HEADER}")?;
    for r in output.records() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.index,
            r.basis.as_str(),
            r.d0 as u8,
            r.d1 as u8,
            r.ap0 as u8,
            r.ap1 as u8
        )?;
    }
    out.flush()
}

/// Packs `0`/`1` bytes eight to a byte, most significant bit first; the last
/// byte is zero-padded.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |byte, (i, &b)| byte | ((b & 1) << (7 - i)))
        })
        .collect()
}

/// JSON metadata stored next to a packed bit file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitStreamSidecar {
    pub seed: u64,
    /// Hash of the resolved configuration that produced the bits.
    pub config_hash: String,
    /// Number of valid bits in the packed file.
    pub bits: usize,
    pub single_clicks: usize,
    pub double_clicks: usize,
    pub counters: Counters,
}

impl BitStreamSidecar {
    pub fn new(output: &SimulationOutput, config_hash: impl Into<String>) -> Self {
        BitStreamSidecar {
            seed: output.seed,
            config_hash: config_hash.into(),
            bits: output.bits.len(),
            single_clicks: output.bits.single_clicks(),
            double_clicks: output.bits.double_clicks(),
            counters: output.counters,
        }
    }
}
