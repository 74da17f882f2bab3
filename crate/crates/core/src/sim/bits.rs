use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::error::{Error, Result};

/// One raw bit and the pulse it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitEntry {
    pub index: u64,
    pub value: u8,
    /// Random fill for a double click rather than a measured outcome.
    pub filled: bool,
}

/// Raw bits of the Z basis in pulse order: `1` for a lone `D1` click, `0`
/// for a lone `D0` click, a random bit for a double click.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitStream {
    entries: Vec<BitEntry>,
}

impl BitStream {
    /// Entries must be sorted by strictly increasing pulse index.
    pub fn from_entries(entries: Vec<BitEntry>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].index < w[1].index));
        BitStream { entries }
    }

    pub fn entries(&self) -> &[BitEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Measured single-click bits (`n'_z`).
    pub fn single_clicks(&self) -> usize {
        self.entries.iter().filter(|e| !e.filled).count()
    }

    pub fn double_clicks(&self) -> usize {
        self.entries.iter().filter(|e| e.filled).count()
    }

    /// All bit values, fills included, as `0`/`1` bytes.
    pub fn values(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Fraction of ones among the measured single-click bits.
    pub fn empirical_k(&self) -> Result<f64> {
        let (ones, total) = self
            .entries
            .iter()
            .filter(|e| !e.filled)
            .fold((0u64, 0u64), |(o, t), e| (o + e.value as u64, t + 1));
        if total == 0 {
            return Err(Error::Empty("no single-click bits"));
        }
        Ok(ones as f64 / total as f64)
    }

    /// Autocorrelation of the bits at a lag of `lag` detection windows.
    ///
    /// Each pulse contributes `x - k` when it produced a bit and zero
    /// otherwise; the lagged products are normalised by the variance sum of
    /// the contributing bits. Double-click fills contribute only when
    /// `include_filled` is set.
    pub fn autocorrelation(&self, lag: u64, include_filled: bool) -> Result<f64> {
        let (num, den) = correlation_sums(&self.entries, lag, include_filled)?;
        if den == 0.0 {
            return Err(Error::Degenerate("constant bit sequence"));
        }
        Ok(num / den)
    }

    /// [`autocorrelation`](Self::autocorrelation) with a standard error from
    /// `batches` contiguous batches of pulses.
    pub fn autocorrelation_estimate(
        &self,
        lag: u64,
        include_filled: bool,
        batches: usize,
    ) -> Result<Estimate> {
        if batches < 2 {
            return Err(Error::Config("at least two batches are required".into()));
        }
        let value = self.autocorrelation(lag, include_filled)?;
        let size = self.entries.len().div_ceil(batches);
        let estimates: Vec<f64> = self
            .entries
            .chunks(size.max(1))
            .map(|chunk| {
                let (num, den) = correlation_sums(chunk, lag, include_filled)?;
                if den == 0.0 {
                    return Err(Error::Degenerate("constant bit batch"));
                }
                Ok(num / den)
            })
            .collect::<Result<_>>()?;
        let b = estimates.len() as f64;
        let mean = estimates.iter().sum::<f64>() / b;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (b - 1.0);
        Ok(Estimate {
            value,
            stderr: (var / b).sqrt(),
        })
    }
}

fn correlation_sums(entries: &[BitEntry], lag: u64, include_filled: bool) -> Result<(f64, f64)> {
    if lag == 0 {
        return Err(Error::Config("lag must be at least 1".into()));
    }
    let used = |e: &BitEntry| include_filled || !e.filled;
    let (ones, total) = entries
        .iter()
        .filter(|e| used(e))
        .fold((0u64, 0u64), |(o, t), e| (o + e.value as u64, t + 1));
    if total == 0 {
        return Err(Error::Empty("no bits"));
    }
    let k = ones as f64 / total as f64;
    let centred = |e: &BitEntry| e.value as f64 - k;
    let den: f64 = entries
        .iter()
        .filter(|e| used(e))
        .map(|e| centred(e).powi(2))
        .sum();

    let mut num = 0.0;
    let mut ahead = 0usize;
    for e in entries.iter().filter(|e| used(e)) {
        let target = e.index + lag;
        while ahead < entries.len() && entries[ahead].index < target {
            ahead += 1;
        }
        if ahead == entries.len() {
            break;
        }
        let f = &entries[ahead];
        if f.index == target && used(f) {
            num += centred(e) * centred(f);
        }
    }
    Ok((num, den))
}
