use aoi_onoff::analytics::{
    self, conditional_service_moments, effective_arrival_rate, mean_age_nonpreemptive, mean_age_preemptive,
    mean_service_preemptive, p_on, p_on_star, peak_age_nonpreemptive, peak_age_preemptive,
    service_moments_nonpreemptive,
};
use aoi_onoff::model::RateField;
use aoi_onoff::oracle::{
    conditional_mean_service_preemptive_series, conditional_service_moment_series, mean_service_preemptive_series,
    p_on_series, p_on_star_series, ArrivalState, MomentOrder, SeriesConfig,
};
use aoi_onoff::{age_metrics, mm11_reference, validate_params, Discipline, ParamError, SystemParams};

fn params(l: f64, m: f64, ko: f64, kf: f64) -> SystemParams {
    SystemParams::new(l, m, ko, kf).unwrap()
}

fn unit() -> SystemParams {
    params(1.0, 1.0, 1.0, 1.0)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn validate_params_examples() {
    assert!(validate_params([1.0, 1.0, 1.0, 1.0]).is_ok());
    assert_eq!(
        validate_params([1.0, 1.0, 0.0, 1.0]).unwrap_err(),
        ParamError::NonPositiveRate(RateField::KappaOn)
    );
    assert_eq!(
        validate_params([1.0, -2.0, 1.0, 1.0]).unwrap_err(),
        ParamError::NonPositiveRate(RateField::Mu)
    );
    assert!(matches!(
        validate_params([f64::NAN, 1.0, 1.0, 1.0]),
        Err(ParamError::NonFiniteRate(RateField::Lambda))
    ));
}

#[test]
fn mm11_reference_examples() {
    let r = mm11_reference(1.0, 1.0).unwrap();
    assert!(close(r.peak, 3.0, 1e-15) && close(r.mean, 2.5, 1e-15));
    let r = mm11_reference(2.0, 1.0).unwrap();
    assert!(close(r.peak, 2.5, 1e-15) && close(r.mean, 2.5 - 1.0 / 3.0, 1e-15));
    let r = mm11_reference(1e12, 1.0).unwrap();
    assert!(close(r.peak, 2.0, 1e-11) && close(r.mean, 2.0, 1e-11));
}

#[test]
fn p_on_examples() {
    assert!(close(p_on(&unit()), 2.0 / 3.0, 1e-15));
    assert!(close(p_on(&params(3.0, 1.0, 1e-12, 0.5)), 1.0, 1e-11));
    assert!(close(p_on(&params(1.0, 1.0, 1e9, 1.0)), 2e-9, 1e-15));
}

#[test]
fn service_moment_examples() {
    let m = service_moments_nonpreemptive(&unit());
    assert!(close(m.t1, 7.0 / 3.0, 1e-14));
    assert!(close(m.t2, 12.0, 1e-13));
    assert!(close(m.t2_variant_printed, 11.75, 1e-13));

    let m = service_moments_nonpreemptive(&params(1.0, 1.0, 1e-12, 1.0));
    assert!(close(m.t1, 1.0, 1e-9));
    assert!(close(m.t2, 2.0, 1e-9));

    let c = conditional_service_moments(&unit());
    assert!(close(c.second_on, 10.0, 1e-13));
    assert!(close(c.second_off, 16.0, 1e-13));
}

#[test]
fn peak_age_nonpreemptive_examples() {
    assert!(close(peak_age_nonpreemptive(&unit()), 17.0 / 3.0, 1e-14));
    assert!(close(peak_age_nonpreemptive(&params(1.0, 1.0, 1e-12, 1.0)), 3.0, 1e-9));
    assert!(close(peak_age_nonpreemptive(&params(1.0, 1.0, 1.0, 1e9)), 3.0, 1e-8));
}

#[test]
fn mean_age_nonpreemptive_examples() {
    assert!(close(mean_age_nonpreemptive(&unit()), 2.8 + 7.0 / 3.0, 1e-13));
    assert!(close(mean_age_nonpreemptive(&params(1.0, 1.0, 1e-12, 1.0)), 2.5, 1e-9));
    assert!(close(mean_age_nonpreemptive(&params(2.0, 1.0, 1.0, 1e9)), 2.5 - 1.0 / 3.0, 1e-7));
}

#[test]
fn p_on_star_examples() {
    assert!(close(p_on_star(&unit()), 4.0 / 9.0, 1e-15));
    assert!(close(p_on_star(&params(1.0, 1.0, 1e-12, 1.0)), 1.0, 1e-9));
    for &(l, ko, kf) in &[(0.5, 0.1, 10.0), (2.0, 10.0, 0.1), (1.0, 1.0, 1.0)] {
        let p = params(l, 1.0, ko, kf);
        assert!(p_on_star(&p) <= p_on(&p));
    }
}

#[test]
fn mean_service_preemptive_examples() {
    assert!(close(mean_service_preemptive(&unit()), 10.0 / 9.0, 1e-14));
    assert!(close(mean_service_preemptive(&params(1.0, 1.0, 1e-12, 1.0)), 1.0, 1e-9));
    for p in grid() {
        assert!(mean_service_preemptive(&p) <= service_moments_nonpreemptive(&p).t1);
    }
}

#[test]
fn preemptive_age_examples() {
    assert!(close(peak_age_preemptive(&unit()), 40.0 / 9.0, 1e-14));
    assert!(close(peak_age_preemptive(&params(1.0, 1.0, 1e-12, 1.0)), 3.0, 1e-9));
    assert!(close(mean_age_preemptive(&unit()), 2.8 + 10.0 / 9.0, 1e-13));
    assert!(close(mean_age_preemptive(&params(1.0, 1.0, 1e-12, 1.0)), 2.5, 1e-9));
    for p in grid() {
        assert!(peak_age_preemptive(&p) <= peak_age_nonpreemptive(&p));
        assert!(mean_age_preemptive(&p) <= mean_age_nonpreemptive(&p));
    }
}

#[test]
fn effective_arrival_rate_examples() {
    assert!(close(effective_arrival_rate(&unit()), 0.3, 1e-15));
    assert!(close(effective_arrival_rate(&params(1.0, 1.0, 1e-12, 1.0)), 0.5, 1e-9));
    assert!(close(effective_arrival_rate(&params(1e9, 1.0, 1e-12, 1.0)), 1.0, 1e-8));
}

#[test]
fn age_metrics_examples() {
    let a = age_metrics(&unit(), Discipline::NonPreemptive);
    assert!(close(a.mean_peak_age, 17.0 / 3.0, 1e-14));
    assert!(close(a.mean_age, 2.8 + 7.0 / 3.0, 1e-13));
    assert!(close(a.mean_service_time, 7.0 / 3.0, 1e-14));
    assert!(close(a.p_on, 2.0 / 3.0, 1e-15));
    assert!(close(a.effective_arrival_rate, 0.3, 1e-15));
    assert_eq!(a.second_moment_service_time.map(|t| close(t, 12.0, 1e-13)), Some(true));

    let a = age_metrics(&unit(), Discipline::Preemptive);
    assert!(close(a.mean_peak_age, 40.0 / 9.0, 1e-14));
    assert!(close(a.mean_age, 2.8 + 10.0 / 9.0, 1e-13));
    assert!(close(a.mean_service_time, 10.0 / 9.0, 1e-14));
    assert!(close(a.p_on, 4.0 / 9.0, 1e-15));
    assert!(close(a.effective_arrival_rate, 0.3, 1e-15));
    assert_eq!(a.second_moment_service_time, None);

    let reference = mm11_reference(1.0, 1.0).unwrap();
    let p = params(1.0, 1.0, 1e-9, 1e9);
    for d in Discipline::ALL {
        let a = age_metrics(&p, d);
        assert!(close(a.mean_peak_age, reference.peak, 1e-6));
        assert!(close(a.mean_age, reference.mean, 1e-6));
    }
}

#[test]
fn series_examples() {
    let cfg = SeriesConfig::default();
    let p = unit();
    assert!(close(p_on_series(&p, &cfg).unwrap(), 2.0 / 3.0, 1e-12));
    assert!(close(p_on_series(&params(2.0, 1.0, 1e-12, 1.0), &cfg).unwrap(), 1.0, 1e-9));

    let m = |o, s| conditional_service_moment_series(&p, o, s, &cfg).unwrap();
    assert!(close(m(MomentOrder::First, ArrivalState::On), 2.0, 1e-10));
    assert!(close(m(MomentOrder::Second, ArrivalState::On), 10.0, 1e-10));
    assert!(close(m(MomentOrder::Second, ArrivalState::Off), 16.0, 1e-10));

    assert!(close(p_on_star_series(&p, &cfg).unwrap(), 4.0 / 9.0, 1e-12));
    let wide = params(1.0, 1.0, 1.0, 1e9);
    assert!(close(p_on_star_series(&wide, &cfg).unwrap(), p_on(&wide), 1e-8));

    let pre = |s| conditional_mean_service_preemptive_series(&p, s, &cfg).unwrap();
    assert!(close(pre(ArrivalState::On), 5.0 / 6.0, 1e-11));
    assert!(close(pre(ArrivalState::Off), 4.0 / 3.0, 1e-11));
    assert!(close(mean_service_preemptive_series(&p, &cfg).unwrap(), 10.0 / 9.0, 1e-12));
    assert!(close(
        mean_service_preemptive_series(&params(1.0, 1.0, 1e-12, 1.0), &cfg).unwrap(),
        1.0,
        1e-9
    ));
}

fn grid() -> Vec<SystemParams> {
    let mut out = Vec::new();
    for &l in &[0.5, 1.0, 2.0] {
        for &ko in &[0.1, 1.0, 10.0] {
            for &kf in &[0.1, 1.0, 10.0] {
                out.push(params(l, 1.0, ko, kf));
            }
        }
    }
    out
}

#[test]
fn series_matches_preemptive_service_on_grid() {
    let cfg = SeriesConfig::default();
    for p in grid() {
        let series = mean_service_preemptive_series(&p, &cfg).unwrap();
        let closed = analytics::mean_service_preemptive(&p);
        assert!((series - closed).abs() / closed < 1e-9, "{p:?}: {series} vs {closed}");
    }
}
