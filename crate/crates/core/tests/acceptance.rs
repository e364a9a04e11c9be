//! End-to-end acceptance checks. Each test prints a single `PASS` or `FAIL`
//! line before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a one-line-per-check summary.

use std::fs;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aoi_onoff::analytics::{
    effective_arrival_rate, mean_age_nonpreemptive, mean_age_preemptive, mean_service_preemptive, p_on, p_on_star,
    peak_age_nonpreemptive, peak_age_preemptive, service_moments_nonpreemptive,
};
use aoi_onoff::harness::{run_validation, sweep_rows, GridConfig, LambdaRange, SweepRow, ValidationReport};
use aoi_onoff::oracle::{oracle_values, SeriesConfig};
use aoi_onoff::simulator::Estimate;
use aoi_onoff::{age_metrics, mm11_reference, simulate, Discipline, SimConfig, SystemParams};

const SIGMAS: f64 = 3.0;
const DELIVERIES: u64 = 1_000_000;
const SEED: u64 = 42;

fn verdict(name: &str, ok: bool, detail: &str) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn unit() -> SystemParams {
    SystemParams::new(1.0, 1.0, 1.0, 1.0).unwrap()
}

fn z_line(label: &str, e: Estimate, target: f64) -> (bool, String) {
    let z = e.z_score(target);
    let ok = z < SIGMAS;
    (
        ok,
        format!("{label} {:.5}±{:.5} vs {target:.5} (z={z:.2}{})", e.estimate, e.std_error, if ok { "" } else { " !" }),
    )
}

fn all_within(checks: &[(&str, Estimate, f64)]) -> (bool, String) {
    let parts: Vec<(bool, String)> = checks.iter().map(|&(l, e, t)| z_line(l, e, t)).collect();
    (parts.iter().all(|p| p.0), parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

fn default_points() -> Vec<SystemParams> {
    GridConfig::default_grid(None).points().unwrap()
}

fn default_grid_report() -> &'static ValidationReport {
    static REPORT: OnceLock<ValidationReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let grid = GridConfig::default_grid(Some(SimConfig::new(DELIVERIES, SEED)));
        run_validation(&grid).unwrap()
    })
}

#[test]
fn closed_forms_match_series_on_default_grid() {
    let cfg = SeriesConfig::default();
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    for p in default_points() {
        let o = oracle_values(&p, &cfg).unwrap();
        let m = service_moments_nonpreemptive(&p);
        let pairs = [
            ("p_on", p_on(&p), o.p_on),
            ("t1", m.t1, o.t1),
            ("t2", m.t2, o.t2),
            ("peak_age_nonpreemptive", peak_age_nonpreemptive(&p), o.peak_age_nonpreemptive),
            ("mean_age_nonpreemptive", mean_age_nonpreemptive(&p), o.mean_age_nonpreemptive),
            ("p_on_star", p_on_star(&p), o.p_on_star),
            ("t1_star", mean_service_preemptive(&p), o.t1_star),
            ("peak_age_preemptive", peak_age_preemptive(&p), o.peak_age_preemptive),
            ("mean_age_preemptive", mean_age_preemptive(&p), o.mean_age_preemptive),
            ("effective_arrival_rate", effective_arrival_rate(&p), o.effective_arrival_rate),
        ];
        for (name, closed, series) in pairs {
            let rel = (closed - series).abs() / series.abs();
            if rel > worst.0 {
                worst = (rel, format!("{name} at {p:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst.0 <= 1e-9 && elapsed < Duration::from_secs(1);
    verdict(
        "closed_forms_match_series_on_default_grid",
        ok,
        &format!("max rel err {:.2e} ({}), runtime {:.3}s", worst.0, worst.1, elapsed.as_secs_f64()),
    );
}

#[test]
fn nonpreemptive_simulation_at_unit_rates() {
    let start = Instant::now();
    let r = simulate(unit(), Discipline::NonPreemptive, &SimConfig::new(DELIVERIES, SEED)).unwrap();
    let (ok, detail) = all_within(&[
        ("peak", r.mean_peak_age, 17.0 / 3.0),
        ("mean", r.mean_age, 2.8 + 7.0 / 3.0),
        ("E[T]", r.mean_service_time, 7.0 / 3.0),
        ("E[T^2]", r.second_moment_service_time, 12.0),
        ("P_on", r.p_on_empirical, 2.0 / 3.0),
        ("lambda_e", r.effective_arrival_rate, 0.3),
    ]);
    verdict(
        "nonpreemptive_simulation_at_unit_rates",
        ok,
        &format!("{detail}; runtime {:.2}s", start.elapsed().as_secs_f64()),
    );
}

#[test]
fn preemptive_simulation_at_unit_rates() {
    let r = simulate(unit(), Discipline::Preemptive, &SimConfig::new(DELIVERIES, SEED)).unwrap();
    let (ok, detail) = all_within(&[
        ("peak", r.mean_peak_age, 40.0 / 9.0),
        ("mean", r.mean_age, 2.8 + 10.0 / 9.0),
        ("E[T*]", r.mean_service_time, 10.0 / 9.0),
        ("P*_on", r.p_on_empirical, 4.0 / 9.0),
    ]);
    verdict("preemptive_simulation_at_unit_rates", ok, &detail);
}

#[test]
fn second_moment_selects_the_mixture_form() {
    let mut grid = GridConfig::default_grid(Some(SimConfig::new(DELIVERIES, SEED)));
    grid.lambda_values = vec![1.0];
    grid.kappa_on_values = vec![1.0];
    grid.kappa_off_values = vec![1.0];
    grid.disciplines = vec![Discipline::NonPreemptive];
    let report = run_validation(&grid).unwrap();
    let row = &report.rows[0];
    let sim = row.simulation.as_ref().unwrap().second_moment_service_time;

    let check = row.checks.iter().find(|c| c.quantity == "second_moment_service_time").unwrap();
    let printed = row
        .diagnostics
        .iter()
        .find(|d| d.quantity == "second_moment_service_time_printed")
        .unwrap();
    let records_both = (check.analytic - 12.0).abs() < 1e-12 && (printed.value - 11.75).abs() < 1e-12;
    let z_mixture = check.z_score.unwrap();
    let z_printed = printed.z_score.unwrap();
    let ok = records_both && z_mixture < SIGMAS && z_printed >= SIGMAS && sim.std_error < 0.08;
    verdict(
        "second_moment_selects_the_mixture_form",
        ok,
        &format!(
            "E[T^2] {:.4}±{:.4}; z vs 12 = {z_mixture:.2}, z vs 11.75 = {z_printed:.2}; report records both: {records_both}",
            sim.estimate, sim.std_error
        ),
    );
}

#[test]
fn vanishing_off_periods_recover_mm11() {
    let mut ok = true;
    let mut worst_analytic = 0.0f64;
    let mut worst_z = (0.0f64, String::new());
    for (i, &(ko, kf)) in [(1e-9, 1.0), (1.0, 1e9)].iter().enumerate() {
        for (j, &lambda) in [0.5, 1.0, 2.0].iter().enumerate() {
            let p = SystemParams::new(lambda, 1.0, ko, kf).unwrap();
            let reference = mm11_reference(lambda, 1.0).unwrap();
            for (k, d) in Discipline::ALL.into_iter().enumerate() {
                let a = age_metrics(&p, d);
                let err = (a.mean_peak_age - reference.peak).abs().max((a.mean_age - reference.mean).abs());
                worst_analytic = worst_analytic.max(err);
                let seed = SEED + (i * 6 + j * 2 + k) as u64;
                let r = simulate(p, d, &SimConfig::new(DELIVERIES, seed)).unwrap();
                for (label, e, target) in [("peak", r.mean_peak_age, reference.peak), ("mean", r.mean_age, reference.mean)] {
                    let z = e.z_score(target);
                    ok &= z < SIGMAS;
                    if z > worst_z.0 {
                        worst_z = (z, format!("{label} {d} lambda={lambda} kappa_on={ko} kappa_off={kf}"));
                    }
                }
            }
        }
    }
    ok &= worst_analytic <= 1e-6;
    verdict(
        "vanishing_off_periods_recover_mm11",
        ok,
        &format!("max analytic deviation {worst_analytic:.2e}; max z {:.2} ({})", worst_z.0, worst_z.1),
    );
}

#[test]
fn preemption_never_hurts_and_keeps_interdeparture_law() {
    let mut ordered = true;
    for p in default_points() {
        let n = age_metrics(&p, Discipline::NonPreemptive);
        let s = age_metrics(&p, Discipline::Preemptive);
        ordered &= s.mean_peak_age <= n.mean_peak_age && s.mean_age <= n.mean_age;
    }

    let report = default_grid_report();
    let mut worst = (0.0f64, String::new());
    for pair in report.rows.chunks(2) {
        let (n, s) = (&pair[0], &pair[1]);
        assert_eq!(n.params, s.params);
        let a = n.simulation.as_ref().unwrap().mean_interdeparture;
        let b = s.simulation.as_ref().unwrap().mean_interdeparture;
        let z = (a.estimate - b.estimate).abs() / a.std_error.hypot(b.std_error);
        if z.is_nan() || z > worst.0 {
            worst = (z, format!("{:?}", n.params));
        }
    }
    let ok = ordered && worst.0 < SIGMAS;
    verdict(
        "preemption_never_hurts_and_keeps_interdeparture_law",
        ok,
        &format!("analytic ordering holds: {ordered}; max E[Y] z across disciplines {:.2} ({})", worst.0, worst.1),
    );
}

fn sweep_properties(rows: &[SweepRow]) -> Vec<String> {
    let mut issues = Vec::new();
    let tol = 1e-12;
    for r in rows {
        if r.peak_age < r.mm11_peak_age - tol || r.mean_age < r.mm11_mean_age - tol {
            issues.push(format!("below M/M/1/1 at {r:?}"));
        }
    }
    let find = |ko: f64, kf: f64, d: Discipline, lambda: f64| {
        rows.iter()
            .find(|r| r.kappa_on == ko && r.kappa_off == kf && r.discipline == d && r.lambda == lambda)
            .unwrap()
    };
    for r in rows.iter().filter(|r| r.discipline == Discipline::Preemptive) {
        let n = find(r.kappa_on, r.kappa_off, Discipline::NonPreemptive, r.lambda);
        if r.peak_age > n.peak_age + tol || r.mean_age > n.mean_age + tol {
            issues.push(format!("preemptive above non-preemptive at lambda={} ({}, {})", r.lambda, r.kappa_on, r.kappa_off));
        }
    }
    for r in rows.iter().filter(|r| r.kappa_on > r.kappa_off) {
        let balanced = find(r.kappa_on, r.kappa_on, r.discipline, r.lambda);
        if r.peak_age <= balanced.peak_age || r.mean_age <= balanced.mean_age {
            issues.push(format!("kappa_on > kappa_off does not degrade at {r:?}"));
        }
    }
    for curve in rows.chunk_by(|a, b| a.kappa_on == b.kappa_on && a.kappa_off == b.kappa_off && a.discipline == b.discipline) {
        for w in curve.windows(2) {
            if w[1].lambda <= w[0].lambda || w[1].peak_age > w[0].peak_age + tol {
                issues.push(format!("peak age not decreasing in lambda near {}", w[1].lambda));
            }
        }
    }
    issues
}

#[test]
fn sweep_reproduces_qualitative_claims() {
    let range = LambdaRange::new(0.1, 10.0, 50).unwrap();
    let start = Instant::now();
    let rows = sweep_rows(&range, None).unwrap();
    let analytic_time = start.elapsed();

    let start = Instant::now();
    let with_sim = sweep_rows(&range, Some(&SimConfig::new(100_000, SEED))).unwrap();
    let sim_time = start.elapsed();

    let mut issues = sweep_properties(&rows);
    if rows.len() != 4 * 2 * 50 {
        issues.push(format!("expected 400 rows, got {}", rows.len()));
    }
    if !with_sim.iter().all(|r| r.sim.is_some_and(|s| s.peak_age.estimate.is_finite())) {
        issues.push("missing simulation columns".into());
    }
    let ok = issues.is_empty() && analytic_time < Duration::from_secs(1) && sim_time < Duration::from_secs(300);
    verdict(
        "sweep_reproduces_qualitative_claims",
        ok,
        &format!(
            "{} rows, {} property violations{}; analytic {:.3}s, with simulation {:.1}s",
            rows.len(),
            issues.len(),
            issues.first().map(|s| format!(" (first: {s})")).unwrap_or_default(),
            analytic_time.as_secs_f64(),
            sim_time.as_secs_f64()
        ),
    );
}

#[test]
fn validate_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_aoi-onoff"))
            .args(["validate", "--grid", "default", "--deliveries", "100000", "--seed", "42", "--output"])
            .arg(&path)
            .env_remove("AOI_ONOFF_SEED")
            .output()
            .unwrap()
            .status;
        (status.code(), fs::read(&path).unwrap())
    };
    let (code_a, a) = run("a.json");
    let (code_b, b) = run("b.json");
    let ok = a == b && code_a == code_b && !a.is_empty();
    verdict(
        "validate_reports_are_byte_identical",
        ok,
        &format!("{} bytes each, identical: {}, exit codes {:?}/{:?}", a.len(), a == b, code_a, code_b),
    );
}
