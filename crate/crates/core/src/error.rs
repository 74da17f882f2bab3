use thiserror::Error;

/// Errors raised by the analytic model, the simulator and the extractor.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar argument fell outside its admissible range.
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// Infinite afterpulse history requested where the geometric series diverges.
    #[error("afterpulse series diverges: omega = {omega} must exceed ln(1 + A) = {bound}")]
    Divergent { omega: f64, bound: f64 },

    /// A ratio whose denominator vanished (e.g. no single-click events at all).
    #[error("degenerate quantity: {0}")]
    Degenerate(&'static str),

    /// No fluctuation bound below 1/2 - EQ satisfies the requested failure probability.
    #[error("no statistical deviation in (0, {max_theta}] reaches epsilon = {epsilon}")]
    Infeasible { max_theta: f64, epsilon: f64 },

    /// The failure probabilities of the sub-protocols add up to more than one.
    #[error("epsilon budget {total} exceeds 1")]
    Budget { total: f64 },

    #[error("requested {requested} output bits from {available} input bits")]
    Length { requested: usize, available: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Structural problem in a configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Checks that `value` is a probability.
pub(crate) fn unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

/// Checks that `value` lies in `[0, 1)`.
pub(crate) fn half_open_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "[0, 1)",
        })
    }
}

/// Checks that `value` lies in the open interval `(0, 1)`.
pub(crate) fn open_unit(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, 1)",
        })
    }
}
