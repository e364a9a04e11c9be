use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, HarnessError};
use crate::analytics::age_metrics;
use crate::format::sig12;
use crate::model::{mm11_reference, Discipline, SystemParams};
use crate::simulator::{simulate, Estimate, SimConfig};

/// `(kappa_on, kappa_off)` pairs at `mu = 1` covering `mu / kappa_on` and
/// `kappa_on / kappa_off` in `{1, 10}`.
pub const SWEEP_CHANNEL_RATES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, 0.1), (0.1, 0.1), (0.1, 0.01)];

const SWEEP_MU: f64 = 1.0;

/// Log-spaced arrival rates from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl LambdaRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self, HarnessError> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
            return Err(HarnessError::InvalidRange(format!(
                "need 0 < min < max, got min={min} max={max}"
            )));
        }
        if steps < 2 {
            return Err(HarnessError::InvalidRange(format!("need steps >= 2, got {steps}")));
        }
        Ok(Self { min, max, steps })
    }

    pub fn values(&self) -> Vec<f64> {
        let ratio = self.max / self.min;
        let last = self.steps - 1;
        (0..self.steps)
            .map(|i| match i {
                0 => self.min,
                i if i == last => self.max,
                i => self.min * ratio.powf(i as f64 / last as f64),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSim {
    pub peak_age: Estimate,
    pub mean_age: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub kappa_on: f64,
    pub kappa_off: f64,
    pub discipline: Discipline,
    pub peak_age: f64,
    pub mean_age: f64,
    pub mm11_peak_age: f64,
    pub mm11_mean_age: f64,
    pub sim: Option<SweepSim>,
}

/// Rows grouped by curve: channel rates, then discipline, then lambda.
/// With `sim`, row `i` is simulated with seed `derive_seed(sim.seed, i)`.
pub fn sweep_rows(range: &LambdaRange, sim: Option<&SimConfig>) -> Result<Vec<SweepRow>, HarnessError> {
    let range = LambdaRange::new(range.min, range.max, range.steps)?;
    if let Some(cfg) = sim {
        cfg.validate()?;
    }
    let lambdas = range.values();
    let mut work = Vec::new();
    for &(ko, kf) in &SWEEP_CHANNEL_RATES {
        for d in Discipline::ALL {
            for &l in &lambdas {
                work.push((SystemParams::new(l, SWEEP_MU, ko, kf)?, d));
            }
        }
    }
    work.par_iter()
        .enumerate()
        .map(|(i, &(p, d))| {
            let a = age_metrics(&p, d);
            let reference = mm11_reference(p.lambda(), p.mu())?;
            let sim = match sim {
                Some(cfg) => {
                    let r = simulate(p, d, &cfg.with_seed(derive_seed(cfg.seed, i as u64)))?;
                    Some(SweepSim {
                        peak_age: r.mean_peak_age,
                        mean_age: r.mean_age,
                    })
                }
                None => None,
            };
            Ok(SweepRow {
                lambda: p.lambda(),
                kappa_on: p.kappa_on(),
                kappa_off: p.kappa_off(),
                discipline: d,
                peak_age: a.mean_peak_age,
                mean_age: a.mean_age,
                mm11_peak_age: reference.peak,
                mm11_mean_age: reference.mean,
                sim,
            })
        })
        .collect()
}

/// Writes the sweep CSV. Simulation columns are included only when every row
/// carries a simulation result.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    let with_sim = !rows.is_empty() && rows.iter().all(|r| r.sim.is_some());
    write!(w, "lambda,kappa_on,kappa_off,discipline,peak_age,mean_age,mm11_peak_age,mm11_mean_age")?;
    if with_sim {
        write!(w, ",sim_peak_age,sim_peak_age_se,sim_mean_age,sim_mean_age_se")?;
    }
    writeln!(w)?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{},{},{},{}",
            sig12(r.lambda),
            sig12(r.kappa_on),
            sig12(r.kappa_off),
            r.discipline,
            sig12(r.peak_age),
            sig12(r.mean_age),
            sig12(r.mm11_peak_age),
            sig12(r.mm11_mean_age)
        )?;
        if let (true, Some(s)) = (with_sim, r.sim) {
            write!(
                w,
                ",{},{},{},{}",
                sig12(s.peak_age.estimate),
                sig12(s.peak_age.std_error),
                sig12(s.mean_age.estimate),
                sig12(s.mean_age.std_error)
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Computes the sweep and writes it to `output_path`.
pub fn sweep_fig2(
    output_path: &Path,
    range: &LambdaRange,
    sim: Option<&SimConfig>,
) -> Result<Vec<SweepRow>, HarnessError> {
    let rows = sweep_rows(range, sim)?;
    let io_err = |source| HarnessError::Io {
        path: output_path.display().to_string(),
        source,
    };
    let file = File::create(output_path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_sweep_csv(&mut w, &rows).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(rows)
}
