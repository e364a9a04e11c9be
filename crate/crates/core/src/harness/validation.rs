use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{derive_seed, GridConfig, HarnessError};
use crate::analytics::{age_metrics, service_moments_nonpreemptive};
use crate::format::sig12;
use crate::model::{AgeMetrics, Discipline, SystemParams};
use crate::oracle::{oracle_values, OracleValues};
use crate::simulator::{simulate, Estimate, SimConfig, SimResult};

/// One gated quantity: closed form against its series counterpart and,
/// when simulated, against the simulation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantityCheck {
    pub quantity: &'static str,
    pub analytic: f64,
    pub oracle: Option<f64>,
    pub rel_diff: Option<f64>,
    pub oracle_pass: bool,
    pub simulated: Option<Estimate>,
    pub z_score: Option<f64>,
    pub sim_pass: Option<bool>,
}

/// A reported but ungated comparison against the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostic {
    pub quantity: &'static str,
    pub value: f64,
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub params: SystemParams,
    pub discipline: Discipline,
    pub analytic: AgeMetrics,
    pub oracle: Option<OracleValues>,
    pub simulation: Option<SimResult>,
    pub checks: Vec<QuantityCheck>,
    pub diagnostics: Vec<Diagnostic>,
    pub error: Option<String>,
    pub oracle_pass: bool,
    pub sim_pass: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rel_tol_analytic_vs_oracle: f64,
    pub sigma_gate: f64,
    pub sim: Option<SimConfig>,
    pub rows: Vec<ValidationRow>,
    pub rows_passed: usize,
    pub pass: bool,
}

struct Gated {
    quantity: &'static str,
    analytic: f64,
    oracle: Option<f64>,
    simulated: Option<Estimate>,
}

fn gated_quantities(
    d: Discipline,
    a: &AgeMetrics,
    o: Option<&OracleValues>,
    s: Option<&SimResult>,
) -> Vec<Gated> {
    let g = |quantity, analytic, oracle: Option<f64>, simulated: Option<Estimate>| Gated {
        quantity,
        analytic,
        oracle,
        simulated,
    };
    let mut out = Vec::with_capacity(6);
    match d {
        Discipline::NonPreemptive => {
            out.push(g("p_on", a.p_on, o.map(|o| o.p_on), s.map(|s| s.p_on_empirical)));
            out.push(g("mean_service_time", a.mean_service_time, o.map(|o| o.t1), s.map(|s| s.mean_service_time)));
            out.push(g(
                "second_moment_service_time",
                a.second_moment_service_time.expect("non-preemptive second moment"),
                o.map(|o| o.t2),
                s.map(|s| s.second_moment_service_time),
            ));
            out.push(g("mean_peak_age", a.mean_peak_age, o.map(|o| o.peak_age_nonpreemptive), s.map(|s| s.mean_peak_age)));
            out.push(g("mean_age", a.mean_age, o.map(|o| o.mean_age_nonpreemptive), s.map(|s| s.mean_age)));
        }
        Discipline::Preemptive => {
            out.push(g("p_on", a.p_on, o.map(|o| o.p_on_star), s.map(|s| s.p_on_empirical)));
            out.push(g("mean_service_time", a.mean_service_time, o.map(|o| o.t1_star), s.map(|s| s.mean_service_time)));
            out.push(g("mean_peak_age", a.mean_peak_age, o.map(|o| o.peak_age_preemptive), s.map(|s| s.mean_peak_age)));
            out.push(g("mean_age", a.mean_age, o.map(|o| o.mean_age_preemptive), s.map(|s| s.mean_age)));
        }
    }
    out.push(g(
        "effective_arrival_rate",
        a.effective_arrival_rate,
        o.map(|o| o.effective_arrival_rate),
        s.map(|s| s.effective_arrival_rate),
    ));
    out
}

fn relative_difference(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        (value - reference).abs() / reference.abs()
    }
}

fn validate_row(
    grid: &GridConfig,
    params: SystemParams,
    discipline: Discipline,
    sim: Option<SimConfig>,
) -> ValidationRow {
    let analytic = age_metrics(&params, discipline);
    let mut errors = Vec::new();
    let oracle = oracle_values(&params, &grid.series)
        .map_err(|e| errors.push(format!("oracle: {e}")))
        .ok();
    let simulation = sim.and_then(|cfg| {
        simulate(params, discipline, &cfg)
            .map_err(|e| errors.push(format!("simulation: {e}")))
            .ok()
    });

    let checks: Vec<QuantityCheck> = gated_quantities(discipline, &analytic, oracle.as_ref(), simulation.as_ref())
        .into_iter()
        .map(|q| {
            let rel_diff = q.oracle.map(|o| relative_difference(q.analytic, o));
            let z_score = q.simulated.map(|e| e.z_score(q.analytic));
            QuantityCheck {
                quantity: q.quantity,
                analytic: q.analytic,
                oracle: q.oracle,
                rel_diff,
                oracle_pass: rel_diff.is_some_and(|r| r < grid.rel_tol_analytic_vs_oracle),
                simulated: q.simulated,
                z_score,
                sim_pass: z_score.map(|z| z < grid.sigma_gate),
            }
        })
        .collect();

    let mut diagnostics = Vec::new();
    let z_against = |value: f64, pick: fn(&SimResult) -> Estimate| {
        simulation.as_ref().map(|s| pick(s).z_score(value))
    };
    if discipline == Discipline::NonPreemptive {
        let printed = service_moments_nonpreemptive(&params).t2_variant_printed;
        diagnostics.push(Diagnostic {
            quantity: "second_moment_service_time_printed",
            value: printed,
            z_score: z_against(printed, |s| s.second_moment_service_time),
        });
    }
    diagnostics.push(Diagnostic {
        quantity: "mean_age_correlated",
        value: analytic.mean_age_correlated,
        z_score: z_against(analytic.mean_age_correlated, |s| s.mean_age),
    });

    let oracle_pass = oracle.is_some() && checks.iter().all(|c| c.oracle_pass);
    let sim_pass = match sim {
        None => true,
        Some(_) => simulation.is_some() && checks.iter().all(|c| c.sim_pass == Some(true)),
    };
    ValidationRow {
        params,
        discipline,
        analytic,
        oracle,
        simulation,
        checks,
        diagnostics,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
        oracle_pass,
        sim_pass,
        pass: oracle_pass && sim_pass,
    }
}

/// Evaluates every grid point under every listed discipline.
///
/// Row `i` (points in grid order, disciplines innermost) simulates with seed
/// `derive_seed(sim.seed, i)`, so rows are independent and the report does
/// not depend on scheduling. Simulation or series failures mark the row as
/// failed instead of aborting the run.
pub fn run_validation(grid: &GridConfig) -> Result<ValidationReport, HarnessError> {
    grid.validate()?;
    let work: Vec<(SystemParams, Discipline)> = grid
        .points()?
        .into_iter()
        .flat_map(|p| grid.disciplines.iter().map(move |&d| (p, d)))
        .collect();

    let rows: Vec<ValidationRow> = work
        .par_iter()
        .enumerate()
        .map(|(i, &(p, d))| {
            let sim = grid.sim.map(|cfg| cfg.with_seed(derive_seed(cfg.seed, i as u64)));
            validate_row(grid, p, d, sim)
        })
        .collect();

    let rows_passed = rows.iter().filter(|r| r.pass).count();
    Ok(ValidationReport {
        rel_tol_analytic_vs_oracle: grid.rel_tol_analytic_vs_oracle,
        sigma_gate: grid.sigma_gate,
        sim: grid.sim,
        pass: rows_passed == rows.len(),
        rows_passed,
        rows,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per gated quantity.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "lambda,mu,kappa_on,kappa_off,discipline,quantity,analytic,oracle,rel_diff,oracle_pass,simulated,std_error,z_score,sim_pass\n",
        );
        for row in &self.rows {
            let p = &row.params;
            for c in &row.checks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    sig12(p.lambda()),
                    sig12(p.mu()),
                    sig12(p.kappa_on()),
                    sig12(p.kappa_off()),
                    row.discipline,
                    c.quantity,
                    sig12(c.analytic),
                    opt(c.oracle),
                    opt(c.rel_diff),
                    c.oracle_pass,
                    opt(c.simulated.map(|e| e.estimate)),
                    opt(c.simulated.map(|e| e.std_error)),
                    opt(c.z_score),
                    c.sim_pass.map(|b| b.to_string()).unwrap_or_default(),
                );
            }
        }
        out
    }

    /// Fixed-width summary for terminals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>7} {:>5} {:>7} {:>7} {:<15} {:>10} {:>10} {:>7} {:>10} {:>10} {:>7} {:>9} {:>6}",
            "lambda", "mu", "k_on", "k_off", "discipline", "peak", "peak_sim", "z", "mean", "mean_sim", "z", "max_rel", "pass"
        );
        for row in &self.rows {
            let find = |q: &str| row.checks.iter().find(|c| c.quantity == q);
            let cell = |q: &str| {
                let c = find(q);
                (
                    c.map(|c| format!("{:.5}", c.analytic)).unwrap_or_default(),
                    c.and_then(|c| c.simulated).map(|e| format!("{:.5}", e.estimate)).unwrap_or_else(|| "-".into()),
                    c.and_then(|c| c.z_score).map(|z| format!("{z:.2}")).unwrap_or_else(|| "-".into()),
                )
            };
            let (pa, ps, pz) = cell("mean_peak_age");
            let (ma, ms, mz) = cell("mean_age");
            let max_rel = row
                .checks
                .iter()
                .filter_map(|c| c.rel_diff)
                .fold(0.0f64, f64::max);
            let p = &row.params;
            let _ = writeln!(
                out,
                "{:>7} {:>5} {:>7} {:>7} {:<15} {:>10} {:>10} {:>7} {:>10} {:>10} {:>7} {:>9.1e} {:>6}",
                sig12(p.lambda()),
                sig12(p.mu()),
                sig12(p.kappa_on()),
                sig12(p.kappa_off()),
                row.discipline.as_str(),
                pa,
                ps,
                pz,
                ma,
                ms,
                mz,
                max_rel,
                if row.pass { "ok" } else { "FAIL" }
            );
            let failing: Vec<&str> = row
                .checks
                .iter()
                .filter(|c| !c.oracle_pass || c.sim_pass == Some(false))
                .map(|c| c.quantity)
                .collect();
            if !failing.is_empty() {
                let _ = writeln!(out, "        failing: {}", failing.join(", "));
            }
            if let Some(e) = &row.error {
                let _ = writeln!(out, "        error: {e}");
            }
        }
        let _ = writeln!(
            out,
            "{}/{} rows passed; overall {}",
            self.rows_passed,
            self.rows.len(),
            if self.pass { "PASS" } else { "FAIL" }
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_only_default_grid_passes() {
        let report = run_validation(&GridConfig::default_grid(None)).unwrap();
        assert_eq!(report.rows.len(), 54);
        assert!(report.pass, "{}", report.render_table());
    }

    #[test]
    fn zero_tolerance_fails_every_row() {
        let mut grid = GridConfig::default_grid(None);
        grid.rel_tol_analytic_vs_oracle = 0.0;
        let report = run_validation(&grid).unwrap();
        assert!(report.rows.iter().all(|r| !r.pass));
        assert!(!report.pass);
        assert_eq!(report.rows_passed, 0);
    }

    #[test]
    fn simulation_failure_marks_row() {
        let mut grid = GridConfig::default_grid(None);
        grid.lambda_values = vec![1.0];
        grid.kappa_on_values = vec![1.0];
        grid.kappa_off_values = vec![1.0];
        let mut sim = SimConfig::new(1000, 1);
        sim.event_budget = 10;
        grid.sim = Some(sim);
        let report = run_validation(&grid).unwrap();
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert!(!row.pass);
            assert!(row.error.as_deref().unwrap().contains("stalled"));
        }
    }

    #[test]
    fn csv_has_one_line_per_check() {
        let report = run_validation(&GridConfig::default_grid(None)).unwrap();
        let checks: usize = report.rows.iter().map(|r| r.checks.len()).sum();
        assert_eq!(report.to_csv().lines().count(), checks + 1);
        assert!(report.render_table().ends_with("overall PASS\n"));
    }
}
