//! Truncated-series evaluation of the derivations behind the closed forms.
//!
//! Nothing in this module calls into [`crate::analytics`]; each quantity is
//! rebuilt from its conditioning argument (which On period the service ends
//! in, how many Off periods it spans) and summed term by term with Gamma
//! moments. The closed forms are then audited against these sums.

use serde::Serialize;
use thiserror::Error;

use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SeriesError {
    #[error("series did not converge within {max_terms} terms (last term {last_term:e}, partial sum {partial_sum:e})")]
    MaxTermsExceeded {
        max_terms: u64,
        last_term: f64,
        partial_sum: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Stop once the last term and the estimated tail are both below
    /// `rel_tol` times the partial sum.
    pub rel_tol: f64,
    pub max_terms: u64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

/// Channel state at the arrival of the update being served.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalState {
    On,
    Off,
}

/// Which moment of the service time to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    First,
    Second,
}

/// Sums `term(n)` for `n = first, first + 1, ...`.
///
/// Every series here is a polynomial in `n` times a geometric factor, so the
/// term ratio decreases monotonically once the terms start shrinking. That
/// lets `term * r / (1 - r)` bound the tail, with `r` the latest ratio.
fn sum_series(cfg: &SeriesConfig, first: u64, mut term: impl FnMut(u64) -> f64) -> Result<f64, SeriesError> {
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    let mut last = 0.0;
    for k in 0..cfg.max_terms {
        let n = first + k;
        let t = term(n);
        sum += t;
        last = t;
        if t == 0.0 && sum != 0.0 {
            // geometric factor underflowed
            return Ok(sum);
        }
        let small = t.abs() < cfg.rel_tol * sum.abs();
        if small && prev.is_finite() && prev != 0.0 {
            let r = t / prev;
            if r < 1.0 && t * r / (1.0 - r) < cfg.rel_tol * sum.abs() {
                return Ok(sum);
            }
        }
        prev = t;
    }
    Err(SeriesError::MaxTermsExceeded {
        max_terms: cfg.max_terms,
        last_term: last,
        partial_sum: sum,
    })
}

/// Probability that the first arrival after a delivery falls in an On
/// period, summed over the On-Off cycle in which it lands.
pub fn p_on_series(p: &SystemParams, cfg: &SeriesConfig) -> Result<f64, SeriesError> {
    let (lambda, ko, kf) = (p.lambda(), p.kappa_on(), p.kappa_off());
    let ratio = (ko / (lambda + ko)) * (kf / (lambda + kf));
    let first = lambda / (lambda + ko);
    sum_series(cfg, 0, |l| ratio.powi(l as i32) * first)
}

/// Probability that a service spans exactly `n` On periods, `P_o beta^(n-1)`.
fn completion_weight(p: &SystemParams, n: u64) -> f64 {
    let r = p.mu() + p.kappa_on();
    let p_o = p.mu() / r;
    let beta = p.kappa_on() / r;
    p_o * beta.powi((n - 1) as i32)
}

/// Moment of the service time conditioned on the channel state at arrival,
/// summed over the number `n` of On periods the service spans.
///
/// The On-time is `Gamma(n, mu + kappa_on)` and the Off-time is
/// `Gamma(m, kappa_off)` with `m = n - 1` for an On arrival and `m = n` for
/// an Off arrival; the two are independent.
pub fn conditional_service_moment_series(
    p: &SystemParams,
    order: MomentOrder,
    state: ArrivalState,
    cfg: &SeriesConfig,
) -> Result<f64, SeriesError> {
    let on_rate = p.mu() + p.kappa_on();
    let off_rate = p.kappa_off();
    sum_series(cfg, 1, |n| {
        let nf = n as f64;
        let m = match state {
            ArrivalState::On => nf - 1.0,
            ArrivalState::Off => nf,
        };
        let on_mean = nf / on_rate;
        let off_mean = m / off_rate;
        let moment = match order {
            MomentOrder::First => on_mean + off_mean,
            MomentOrder::Second => {
                nf * (nf + 1.0) / (on_rate * on_rate)
                    + m * (m + 1.0) / (off_rate * off_rate)
                    + 2.0 * on_mean * off_mean
            }
        };
        moment * completion_weight(p, n)
    })
}

/// Probability of no preemption for an update that arrived in an On period,
/// times the On-arrival probability.
pub fn p_on_star_series(p: &SystemParams, cfg: &SeriesConfig) -> Result<f64, SeriesError> {
    let alpha = p.kappa_off() / (p.lambda() + p.kappa_off());
    let not_preempted = sum_series(cfg, 1, |n| {
        completion_weight(p, n) * alpha.powi((n - 1) as i32)
    })?;
    Ok(p_on_series(p, cfg)? * not_preempted)
}

/// Distribution over the number of On periods spanned by a service that is
/// not preempted, for a service that started in `state`.
///
/// An On start crosses `n - 1` Off periods and an Off start crosses `n`,
/// each of which must see no arrival. The weights are normalised by their
/// own series sum.
#[derive(Debug, Clone, Copy)]
pub struct UnpreemptedSpan {
    alpha: f64,
    off_periods_offset: i32,
    normaliser: f64,
}

impl UnpreemptedSpan {
    pub fn new(p: &SystemParams, state: ArrivalState, cfg: &SeriesConfig) -> Result<Self, SeriesError> {
        let alpha = p.kappa_off() / (p.lambda() + p.kappa_off());
        let off_periods_offset = match state {
            ArrivalState::On => -1,
            ArrivalState::Off => 0,
        };
        let raw = |n: u64| completion_weight(p, n) * alpha.powi(n as i32 + off_periods_offset);
        let normaliser = sum_series(cfg, 1, raw)?;
        Ok(Self {
            alpha,
            off_periods_offset,
            normaliser,
        })
    }

    /// Probability that the service ends in the `n`-th On period (`n >= 1`).
    pub fn probability(&self, p: &SystemParams, n: u64) -> f64 {
        completion_weight(p, n) * self.alpha.powi(n as i32 + self.off_periods_offset) / self.normaliser
    }
}

/// Conditional mean preemptive service time for an update that arrived in
/// `state` and was delivered.
///
/// Given no preemption, each On period that ends the service or is cut short
/// lasts `Exp(mu + kappa_on)` and each Off period without an arrival lasts
/// `Exp(lambda + kappa_off)`.
pub fn conditional_mean_service_preemptive_series(
    p: &SystemParams,
    state: ArrivalState,
    cfg: &SeriesConfig,
) -> Result<f64, SeriesError> {
    let span = UnpreemptedSpan::new(p, state, cfg)?;
    let on_mean = 1.0 / (p.mu() + p.kappa_on());
    let off_mean = 1.0 / (p.lambda() + p.kappa_off());
    sum_series(cfg, 1, |n| {
        let nf = n as f64;
        let off_count = match state {
            ArrivalState::On => nf - 1.0,
            ArrivalState::Off => nf,
        };
        (on_mean + (nf - 1.0) * on_mean + off_count * off_mean) * span.probability(p, n)
    })
}

pub fn mean_service_preemptive_series(p: &SystemParams, cfg: &SeriesConfig) -> Result<f64, SeriesError> {
    let weight_on = p_on_star_series(p, cfg)?;
    let on = conditional_mean_service_preemptive_series(p, ArrivalState::On, cfg)?;
    let off = conditional_mean_service_preemptive_series(p, ArrivalState::Off, cfg)?;
    Ok(on * weight_on + off * (1.0 - weight_on))
}

/// Every quantity the closed forms produce, rebuilt from the series above.
///
/// The ages are composed from the definitions `A = E[Y] + E[T]` and
/// `Delta = E[Y^2] / (2 E[Y]) + E[T]`, with `E[Y] = 1/lambda + E[T]` and
/// `E[Y^2] = 2/lambda^2 + 2 E[T]/lambda + E[T^2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValues {
    pub p_on: f64,
    pub t1: f64,
    pub t2: f64,
    pub p_on_star: f64,
    pub t1_star: f64,
    pub peak_age_nonpreemptive: f64,
    pub mean_age_nonpreemptive: f64,
    pub peak_age_preemptive: f64,
    pub mean_age_preemptive: f64,
    pub effective_arrival_rate: f64,
}

pub fn oracle_values(p: &SystemParams, cfg: &SeriesConfig) -> Result<OracleValues, SeriesError> {
    use ArrivalState::{Off, On};
    use MomentOrder::{First, Second};

    let p_on = p_on_series(p, cfg)?;
    let mix = |on: f64, off: f64| on * p_on + off * (1.0 - p_on);
    let t1 = mix(
        conditional_service_moment_series(p, First, On, cfg)?,
        conditional_service_moment_series(p, First, Off, cfg)?,
    );
    let t2 = mix(
        conditional_service_moment_series(p, Second, On, cfg)?,
        conditional_service_moment_series(p, Second, Off, cfg)?,
    );
    let p_on_star = p_on_star_series(p, cfg)?;
    let t1_star = mean_service_preemptive_series(p, cfg)?;

    let lambda = p.lambda();
    let mean_gap = 1.0 / lambda;
    let mean_y = mean_gap + t1;
    let second_y = 2.0 * mean_gap * mean_gap + 2.0 * t1 * mean_gap + t2;
    let half_ratio = second_y / (2.0 * mean_y);

    Ok(OracleValues {
        p_on,
        t1,
        t2,
        p_on_star,
        t1_star,
        peak_age_nonpreemptive: mean_y + t1,
        mean_age_nonpreemptive: half_ratio + t1,
        peak_age_preemptive: mean_y + t1_star,
        mean_age_preemptive: half_ratio + t1_star,
        effective_arrival_rate: 1.0 / mean_y,
    })
}

/// `Cov(B, T)` by quadrature over the idle gap `B ~ Exp(lambda)`.
///
/// Starting On at the delivery, the channel is Off at time `t` with
/// probability `kappa_on / s * (1 - exp(-s t))`, `s = kappa_on + kappa_off`,
/// and an Off arrival adds `1 / kappa_off` to the mean service time. So
/// `Cov(B, T) = (E[B 1{Off}] - E[B] P(Off)) / kappa_off`, with both
/// expectations integrated numerically (composite Simpson on `[0, 60/lambda]`).
pub fn idle_service_covariance_quadrature(p: &SystemParams) -> f64 {
    let (lambda, ko, kf) = (p.lambda(), p.kappa_on(), p.kappa_off());
    let s = ko + kf;
    let p_off = |t: f64| ko / s * (-(s * t)).exp_m1().abs();
    let density = |t: f64| lambda * (-lambda * t).exp();

    const PANELS: usize = 200_000;
    let upper = 60.0 / lambda;
    let h = upper / PANELS as f64;
    let simpson = |f: &dyn Fn(f64) -> f64| {
        let mut acc = f(0.0) + f(upper);
        for i in 1..PANELS {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0
    };
    let gap_times_off = simpson(&|t| t * p_off(t) * density(t));
    let off = simpson(&|t| p_off(t) * density(t));
    let mean_gap = simpson(&|t| t * density(t));
    (gap_times_off - mean_gap * off) / kf
}
