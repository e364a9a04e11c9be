//! Discrete-event simulation of the On-Off interrupted bufferless queue.
//!
//! [`simulate`] runs one or more independent replications and estimates every
//! quantity the closed forms predict, each with a standard error.
//! [`export_sample_path`] records the raw event sequence of a single run.

mod engine;
mod path;
mod rng;
mod stats;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use engine::{Channel, Delivery, Engine, EventKind, Server, Step};
pub use path::{export_sample_path, write_sample_path_csv, EventRecord};
pub use rng::{exponential_from_uniform, exponential_variate, Stream};
pub use stats::Estimate;

use crate::model::{Discipline, SystemParams};
use stats::{estimate_with_error, Sums};

/// Batches used for standard errors when there is a single replication.
pub const BATCH_COUNT: u64 = 32;

/// Default cap on CTMC transitions per replication.
pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("run stalled: {events} events without reaching {target} deliveries")]
    StalledRun { events: u64, target: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    /// Measured deliveries per replication.
    pub deliveries: u64,
    /// Deliveries discarded before measurement starts. At least one is always
    /// discarded so the first measured peak has a preceding service time.
    pub warmup_deliveries: u64,
    pub seed: u64,
    pub replications: u32,
    pub event_budget: u64,
}

impl SimConfig {
    /// One replication with a warm-up of 1% of `deliveries`.
    pub fn new(deliveries: u64, seed: u64) -> Self {
        Self {
            deliveries,
            warmup_deliveries: deliveries / 100,
            seed,
            replications: 1,
            event_budget: DEFAULT_EVENT_BUDGET,
        }
    }

    pub fn with_warmup(mut self, warmup_deliveries: u64) -> Self {
        self.warmup_deliveries = warmup_deliveries;
        self
    }

    pub fn with_replications(mut self, replications: u32) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.deliveries == 0 {
            return Err(SimError::InvalidConfig("deliveries must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(SimError::InvalidConfig("replications must be at least 1".into()));
        }
        if self.event_budget == 0 {
            return Err(SimError::InvalidConfig("event budget must be at least 1".into()));
        }
        Ok(())
    }

    fn discarded(&self) -> u64 {
        self.warmup_deliveries.max(1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimCounts {
    /// Measured deliveries, `deliveries * replications`.
    pub delivered: u64,
    pub warmup_delivered: u64,
    pub dropped: u64,
    pub preempted: u64,
    pub arrivals: u64,
    pub events: u64,
}

impl SimCounts {
    fn merge(&mut self, o: &SimCounts) {
        self.delivered += o.delivered;
        self.warmup_delivered += o.warmup_delivered;
        self.dropped += o.dropped;
        self.preempted += o.preempted;
        self.arrivals += o.arrivals;
        self.events += o.events;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub params: SystemParams,
    pub discipline: Discipline,
    pub mean_age: Estimate,
    pub mean_peak_age: Estimate,
    pub mean_service_time: Estimate,
    pub second_moment_service_time: Estimate,
    pub p_on_empirical: Estimate,
    pub effective_arrival_rate: Estimate,
    pub mean_interdeparture: Estimate,
    pub counts: SimCounts,
    pub replications: u32,
}

struct RunOutput {
    batches: Vec<Sums>,
    counts: SimCounts,
}

fn run_replication(
    params: SystemParams,
    discipline: Discipline,
    cfg: &SimConfig,
    replication: u32,
) -> Result<RunOutput, SimError> {
    let mut engine = Engine::new(params, discipline, Stream::new(cfg.seed, replication as u64));
    let discard = cfg.discarded();
    let target = discard + cfg.deliveries;
    let batch_count = BATCH_COUNT.min(cfg.deliveries);
    let mut batches = vec![Sums::default(); batch_count as usize];
    let mut counts = SimCounts::default();

    let mut delivered = 0u64;
    let mut prev_service = 0.0;
    let mut last_departure = 0.0;
    while delivered < target {
        if engine.events() >= cfg.event_budget {
            return Err(SimError::StalledRun {
                events: engine.events(),
                target,
            });
        }
        let step = engine.step();
        match step.kind {
            EventKind::Arrival => counts.arrivals += 1,
            EventKind::Drop => {
                counts.arrivals += 1;
                counts.dropped += 1;
            }
            EventKind::Preempt => {
                counts.arrivals += 1;
                counts.preempted += 1;
            }
            EventKind::ToggleOn | EventKind::ToggleOff => {}
            EventKind::Delivery => {
                let d = step.delivery.expect("delivery payload");
                let service = step.time - d.arrival_time;
                if delivered >= discard {
                    let j = delivered - discard;
                    let b = (j * batch_count / cfg.deliveries) as usize;
                    let gap = step.time - last_departure;
                    batches[b].push(prev_service, gap, service, d.arrived_on);
                }
                delivered += 1;
                prev_service = service;
                last_departure = step.time;
            }
        }
    }
    counts.delivered = cfg.deliveries;
    counts.warmup_delivered = discard;
    counts.events = engine.events();
    Ok(RunOutput { batches, counts })
}

/// Runs `cfg.replications` independent replications (stream `r` of
/// `cfg.seed` for replication `r`) and pools them.
///
/// Point estimates come from the pooled sums. Standard errors use the spread
/// of per-replication estimates when there are several replications, and
/// [`BATCH_COUNT`] contiguous batch means otherwise. With fewer than two
/// replications or batches the standard error is NaN.
pub fn simulate(params: SystemParams, discipline: Discipline, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(params, discipline, cfg, r))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pooled = Sums::default();
    let mut counts = SimCounts::default();
    let mut groups = Vec::new();
    for run in &runs {
        let mut rep = Sums::default();
        for b in &run.batches {
            rep.merge(b);
        }
        pooled.merge(&rep);
        counts.merge(&run.counts);
        if cfg.replications > 1 {
            groups.push(rep);
        }
    }
    if cfg.replications == 1 {
        groups = runs[0].batches.clone();
    }

    let est = |f: fn(&Sums) -> f64| estimate_with_error(&pooled, &groups, f);
    Ok(SimResult {
        params,
        discipline,
        mean_age: est(Sums::mean_age),
        mean_peak_age: est(Sums::mean_peak_age),
        mean_service_time: est(Sums::mean_service),
        second_moment_service_time: est(Sums::second_moment_service),
        p_on_empirical: est(Sums::on_fraction),
        effective_arrival_rate: est(Sums::delivery_rate),
        mean_interdeparture: est(Sums::mean_interdeparture),
        counts,
        replications: cfg.replications,
    })
}
