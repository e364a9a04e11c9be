use std::io::{self, Write};

use serde::Serialize;

use super::engine::{Engine, EventKind};
use super::rng::Stream;
use super::{SimConfig, SimError};
use crate::format::sig12;
use crate::model::{Discipline, SystemParams};

/// One event on a sample path, with the age right after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub age_after: f64,
}

/// The first `max_events` transitions of replication 0 under `cfg.seed`,
/// starting from an empty system with zero age.
pub fn export_sample_path(
    params: SystemParams,
    discipline: Discipline,
    cfg: &SimConfig,
    max_events: usize,
) -> Result<Vec<EventRecord>, SimError> {
    cfg.validate()?;
    if max_events == 0 {
        return Err(SimError::InvalidConfig("max_events must be at least 1".into()));
    }
    let mut engine = Engine::new(params, discipline, Stream::new(cfg.seed, 0));
    Ok((0..max_events)
        .map(|_| {
            let step = engine.step();
            EventRecord {
                t: step.time,
                kind: step.kind,
                age_after: engine.age(),
            }
        })
        .collect())
}

/// Writes `t,kind,age_after` rows with 12 significant digits.
pub fn write_sample_path_csv<W: Write>(mut w: W, records: &[EventRecord]) -> io::Result<()> {
    writeln!(w, "t,kind,age_after")?;
    for r in records {
        writeln!(w, "{},{},{}", sig12(r.t), r.kind.as_str(), sig12(r.age_after))?;
    }
    Ok(())
}
