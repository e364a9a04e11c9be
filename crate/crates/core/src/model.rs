//! System parameters, queueing discipline, and the uninterrupted-service
//! reference ages.
//!
//! All four rates are plain positive reals. `kappa_on` and `kappa_off` are
//! *rates*: the mean On duration is `1 / kappa_on` and the mean Off duration
//! is `1 / kappa_off`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Names the rate that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateField {
    Lambda,
    Mu,
    KappaOn,
    KappaOff,
}

impl RateField {
    pub fn as_str(self) -> &'static str {
        match self {
            RateField::Lambda => "lambda",
            RateField::Mu => "mu",
            RateField::KappaOn => "kappa_on",
            RateField::KappaOff => "kappa_off",
        }
    }
}

impl fmt::Display for RateField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("{0} must be strictly positive")]
    NonPositiveRate(RateField),
    #[error("{0} must be finite")]
    NonFiniteRate(RateField),
}

impl ParamError {
    pub fn field(&self) -> RateField {
        match *self {
            ParamError::NonPositiveRate(f) | ParamError::NonFiniteRate(f) => f,
        }
    }
}

fn check_rate(field: RateField, value: f64) -> Result<f64, ParamError> {
    if !value.is_finite() {
        Err(ParamError::NonFiniteRate(field))
    } else if value <= 0.0 {
        Err(ParamError::NonPositiveRate(field))
    } else {
        Ok(value)
    }
}

/// The four rates of the model: arrivals `lambda`, service `mu`, and the
/// On-Off channel rates `kappa_on` (On -> Off) and `kappa_off` (Off -> On).
///
/// Construction always goes through validation, so every value of this type
/// holds four finite, strictly positive rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    lambda: f64,
    mu: f64,
    kappa_on: f64,
    kappa_off: f64,
}

impl SystemParams {
    pub fn new(lambda: f64, mu: f64, kappa_on: f64, kappa_off: f64) -> Result<Self, ParamError> {
        Ok(Self {
            lambda: check_rate(RateField::Lambda, lambda)?,
            mu: check_rate(RateField::Mu, mu)?,
            kappa_on: check_rate(RateField::KappaOn, kappa_on)?,
            kappa_off: check_rate(RateField::KappaOff, kappa_off)?,
        })
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn kappa_on(&self) -> f64 {
        self.kappa_on
    }

    #[inline]
    pub fn kappa_off(&self) -> f64 {
        self.kappa_off
    }

    /// Long-run fraction of time the channel is On, `kappa_off / (kappa_on + kappa_off)`.
    pub fn stationary_on_fraction(&self) -> f64 {
        self.kappa_off / (self.kappa_on + self.kappa_off)
    }
}

impl<'de> Deserialize<'de> for SystemParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lambda: f64,
            mu: f64,
            kappa_on: f64,
            kappa_off: f64,
        }
        let raw = Raw::deserialize(d)?;
        SystemParams::new(raw.lambda, raw.mu, raw.kappa_on, raw.kappa_off)
            .map_err(serde::de::Error::custom)
    }
}

/// Checks a raw `(lambda, mu, kappa_on, kappa_off)` tuple. The first offending
/// field, in that order, is reported.
pub fn validate_params(raw: [f64; 4]) -> Result<SystemParams, ParamError> {
    SystemParams::new(raw[0], raw[1], raw[2], raw[3])
}

/// What happens to an arrival that finds the server holding an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Discipline {
    /// Always discarded.
    NonPreemptive,
    /// Replaces the held update if the channel is Off, discarded otherwise.
    Preemptive,
}

impl Discipline {
    pub const ALL: [Discipline; 2] = [Discipline::NonPreemptive, Discipline::Preemptive];

    pub fn as_str(self) -> &'static str {
        match self {
            Discipline::NonPreemptive => "non-preemptive",
            Discipline::Preemptive => "preemptive",
        }
    }
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Discipline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "non-preemptive" => Ok(Discipline::NonPreemptive),
            "preemptive" => Ok(Discipline::Preemptive),
            other => Err(format!(
                "unknown discipline `{other}` (expected non-preemptive or preemptive)"
            )),
        }
    }
}

/// Closed-form age metrics for one parameter point and discipline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgeMetrics {
    pub discipline: Discipline,
    pub mean_peak_age: f64,
    pub mean_age: f64,
    /// Mean age including the covariance between the idle gap and the
    /// following service time. See [`crate::analytics::mean_age_correlated`].
    pub mean_age_correlated: f64,
    /// Mean service time of delivered updates under this discipline.
    pub mean_service_time: f64,
    /// Only available without preemption.
    pub second_moment_service_time: Option<f64>,
    /// Probability that a delivered update arrived while the channel was On.
    pub p_on: f64,
    pub effective_arrival_rate: f64,
}

/// Mean peak age and mean age of the plain M/M/1/1 queue with uninterrupted
/// service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mm11Ages {
    pub peak: f64,
    pub mean: f64,
}

/// `1/lambda + 2/mu` and `1/lambda + 2/mu - 1/(lambda + mu)`.
pub fn mm11_reference(lambda: f64, mu: f64) -> Result<Mm11Ages, ParamError> {
    let lambda = check_rate(RateField::Lambda, lambda)?;
    let mu = check_rate(RateField::Mu, mu)?;
    let peak = 1.0 / lambda + 2.0 / mu;
    Ok(Mm11Ages {
        peak,
        mean: peak - 1.0 / (lambda + mu),
    })
}
