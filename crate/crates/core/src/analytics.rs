//! Closed-form age metrics for the On-Off interrupted M/M/1/1 queue.
//!
//! Every function here is a pure evaluation of a closed form. The series
//! derivations they come from are evaluated independently in
//! [`crate::oracle`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{AgeMetrics, Discipline, SystemParams};

/// Shorthand constants shared by the service-time results.
///
/// `gamma` loses precision as it approaches 1, which needs `kappa_on` and
/// `kappa_off` both far larger than `lambda` and `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxiliaryConstants {
    /// Probability that service completes within a single On period, `mu / (mu + kappa_on)`.
    pub p_o: f64,
    /// `kappa_on / (mu + kappa_on)`, the chance an On period ends first.
    pub beta: f64,
    /// `kappa_off / (lambda + kappa_off)`, the chance an Off period sees no arrival.
    pub alpha: f64,
    /// `alpha * beta`.
    pub gamma: f64,
    /// `1 + 3 kappa_on / mu + 2 kappa_on^2 / mu^2`.
    pub z_factor: f64,
}

impl AuxiliaryConstants {
    pub fn new(p: &SystemParams) -> Self {
        let (lambda, mu, ko, kf) = (p.lambda(), p.mu(), p.kappa_on(), p.kappa_off());
        let alpha = kf / (lambda + kf);
        let beta = ko / (mu + ko);
        let r = ko / mu;
        Self {
            p_o: mu / (mu + ko),
            beta,
            alpha,
            gamma: ko * kf / ((lambda + kf) * (mu + ko)),
            z_factor: 1.0 + 3.0 * r + 2.0 * r * r,
        }
    }
}

/// First and second moments of the non-preemptive service time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServiceMoments {
    pub t1: f64,
    /// Mixture of the conditional second moments. This is the value used by
    /// every downstream formula.
    pub t2: f64,
    /// The second moment as typeset in the original closed form, which carries
    /// `1/(mu + kappa_on)^2` where the mixture gives `1/(mu (mu + kappa_on))`.
    /// Kept only for reporting.
    pub t2_variant_printed: f64,
}

/// Service-time moments conditioned on the channel state at the arrival of
/// the delivered update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalMoments {
    pub mean_on: f64,
    pub mean_off: f64,
    pub second_on: f64,
    pub second_off: f64,
}

/// Selects which second-moment expression feeds the mean-age formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum T2Variant {
    #[default]
    Appendix,
    Printed,
}

impl fmt::Display for T2Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            T2Variant::Appendix => "appendix",
            T2Variant::Printed => "printed",
        })
    }
}

impl FromStr for T2Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "appendix" => Ok(T2Variant::Appendix),
            "printed" => Ok(T2Variant::Printed),
            other => Err(format!(
                "unknown t2 variant `{other}` (expected printed or appendix)"
            )),
        }
    }
}

/// Probability that a delivered update (no preemption) arrived during an On
/// period: `(lambda + kappa_off) / (lambda + kappa_on + kappa_off)`.
pub fn p_on(p: &SystemParams) -> f64 {
    (p.lambda() + p.kappa_off()) / (p.lambda() + p.kappa_on() + p.kappa_off())
}

pub fn conditional_service_moments(p: &SystemParams) -> ConditionalMoments {
    let (mu, ko, kf) = (p.mu(), p.kappa_on(), p.kappa_off());
    let aux = AuxiliaryConstants::new(p);
    let cycle = 1.0 / (mu + ko) + 1.0 / kf;
    let shared = aux.z_factor * cycle * cycle + aux.p_o / (mu * mu);
    let off_term = 1.0 / (aux.p_o * kf * kf);
    ConditionalMoments {
        mean_on: 1.0 / mu + ko / (mu * kf),
        mean_off: 1.0 / mu + (mu + ko) / (kf * mu),
        second_on: shared - off_term - 2.0 / (mu * kf),
        second_off: shared + off_term,
    }
}

pub fn service_moments_nonpreemptive(p: &SystemParams) -> ServiceMoments {
    let (lambda, mu, ko, kf) = (p.lambda(), p.mu(), p.kappa_on(), p.kappa_off());
    let total = lambda + ko + kf;
    let t1 = 1.0 / mu + (ko / kf) * (1.0 / mu + 1.0 / total);

    let pon = p_on(p);
    let cond = conditional_service_moments(p);
    let t2 = cond.second_on * pon + cond.second_off * (1.0 - pon);

    let aux = AuxiliaryConstants::new(p);
    let cycle = 1.0 / (mu + ko) + 1.0 / kf;
    let t2_variant_printed = cycle * cycle * aux.z_factor
        + 1.0 / ((mu + ko) * (mu + ko))
        + (mu + ko) / (mu * kf * kf) * (1.0 - 2.0 * pon)
        - 2.0 / (mu * kf) * pon;

    ServiceMoments {
        t1,
        t2,
        t2_variant_printed,
    }
}

pub fn peak_age_nonpreemptive(p: &SystemParams) -> f64 {
    let (lambda, mu, ko, kf) = (p.lambda(), p.mu(), p.kappa_on(), p.kappa_off());
    1.0 / lambda + 2.0 / mu + (2.0 * ko / kf) * (1.0 / mu + 1.0 / (lambda + ko + kf))
}

/// `[1/lambda + (lambda/2) t2 + t1] / (1 + lambda t1) + last_service`.
///
/// The bracket is `E[Y^2] / (2 E[Y])` with the idle gap and the service time
/// treated as independent.
fn mean_age_from_moments(lambda: f64, t1: f64, t2: f64, last_service: f64) -> f64 {
    (1.0 / lambda + 0.5 * lambda * t2 + t1) / (1.0 + lambda * t1) + last_service
}

pub fn mean_age_nonpreemptive(p: &SystemParams) -> f64 {
    let m = service_moments_nonpreemptive(p);
    mean_age_from_moments(p.lambda(), m.t1, m.t2, m.t1)
}

/// Probability that a delivered update arrived during an On period when
/// updates held through an Off period can be replaced.
pub fn p_on_star(p: &SystemParams) -> f64 {
    let aux = AuxiliaryConstants::new(p);
    p_on(p) * (1.0 - aux.beta) / (1.0 - aux.alpha * aux.beta)
}

pub fn mean_service_preemptive(p: &SystemParams) -> f64 {
    let (lambda, mu, ko, kf) = (p.lambda(), p.mu(), p.kappa_on(), p.kappa_off());
    let gamma = AuxiliaryConstants::new(p).gamma;
    let total = lambda + ko + kf;
    (1.0 / (lambda + kf) + (1.0 / (mu + ko)) * (total - mu) / total) / (1.0 - gamma)
}

pub fn peak_age_preemptive(p: &SystemParams) -> f64 {
    let (lambda, mu, ko, kf) = (p.lambda(), p.mu(), p.kappa_on(), p.kappa_off());
    1.0 / lambda
        + 1.0 / mu
        + (ko / kf) * (1.0 / mu + 1.0 / (lambda + ko + kf))
        + mean_service_preemptive(p)
}

/// Inter-departure times do not depend on the discipline, so the bracket uses
/// the non-preemptive moments and only the trailing term changes.
pub fn mean_age_preemptive(p: &SystemParams) -> f64 {
    let m = service_moments_nonpreemptive(p);
    mean_age_from_moments(p.lambda(), m.t1, m.t2, mean_service_preemptive(p))
}

/// `1 / E[Y]` with `E[Y] = 1/lambda + t1`; identical for both disciplines.
pub fn effective_arrival_rate(p: &SystemParams) -> f64 {
    1.0 / (1.0 / p.lambda() + service_moments_nonpreemptive(p).t1)
}

/// Covariance between the idle gap `B` after a delivery and the service time
/// `T` of the next admitted update.
///
/// A delivery always happens in an On period, so a short gap makes an On
/// arrival more likely and the two are positively correlated:
/// `Cov(B, T) = kappa_on / (kappa_off (lambda + kappa_on + kappa_off)^2)`.
pub fn idle_service_covariance(p: &SystemParams) -> f64 {
    let total = p.lambda() + p.kappa_on() + p.kappa_off();
    p.kappa_on() / (p.kappa_off() * total * total)
}

/// Mean age with `E[Y^2]` carrying the `2 Cov(B, T)` term that
/// [`mean_age_nonpreemptive`] and [`mean_age_preemptive`] leave out.
///
/// This is the quantity the simulator estimates. The shift relative to the
/// independent-gap formula is `Cov(B, T) / E[Y]`.
pub fn mean_age_correlated(p: &SystemParams, d: Discipline) -> f64 {
    let base = match d {
        Discipline::NonPreemptive => mean_age_nonpreemptive(p),
        Discipline::Preemptive => mean_age_preemptive(p),
    };
    base + idle_service_covariance(p) * effective_arrival_rate(p)
}

pub fn age_metrics(p: &SystemParams, d: Discipline) -> AgeMetrics {
    age_metrics_with_variant(p, d, T2Variant::Appendix)
}

/// Like [`age_metrics`], with the second moment taken from `variant`.
pub fn age_metrics_with_variant(p: &SystemParams, d: Discipline, variant: T2Variant) -> AgeMetrics {
    let moments = service_moments_nonpreemptive(p);
    let t2 = match variant {
        T2Variant::Appendix => moments.t2,
        T2Variant::Printed => moments.t2_variant_printed,
    };
    let lambda = p.lambda();
    let lambda_e = effective_arrival_rate(p);
    let correction = idle_service_covariance(p) * lambda_e;
    match d {
        Discipline::NonPreemptive => {
            let mean_age = mean_age_from_moments(lambda, moments.t1, t2, moments.t1);
            AgeMetrics {
                discipline: d,
                mean_peak_age: peak_age_nonpreemptive(p),
                mean_age,
                mean_age_correlated: mean_age + correction,
                mean_service_time: moments.t1,
                second_moment_service_time: Some(t2),
                p_on: p_on(p),
                effective_arrival_rate: lambda_e,
            }
        }
        Discipline::Preemptive => {
            let t1_star = mean_service_preemptive(p);
            let mean_age = mean_age_from_moments(lambda, moments.t1, t2, t1_star);
            AgeMetrics {
                discipline: d,
                mean_peak_age: peak_age_preemptive(p),
                mean_age,
                mean_age_correlated: mean_age + correction,
                mean_service_time: t1_star,
                second_moment_service_time: None,
                p_on: p_on_star(p),
                effective_arrival_rate: lambda_e,
            }
        }
    }
}
