use serde::Serialize;

/// A point estimate and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl Estimate {
    /// `|estimate - target| / std_error`.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target).abs() / self.std_error
    }
}

/// Running sums over measured deliveries. Merging is plain addition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Sums {
    count: u64,
    on_arrivals: u64,
    interdeparture: f64,
    /// Area under the age curve, `T(k-1) Y(k) + Y(k)^2 / 2` per delivery.
    area: f64,
    /// Peak ages, `T(k-1) + Y(k)`.
    peak: f64,
    service: f64,
    service_sq: f64,
}

impl Sums {
    pub(crate) fn push(&mut self, prev_service: f64, gap: f64, service: f64, arrived_on: bool) {
        self.count += 1;
        self.on_arrivals += arrived_on as u64;
        self.interdeparture += gap;
        self.area += prev_service * gap + 0.5 * gap * gap;
        self.peak += prev_service + gap;
        self.service += service;
        self.service_sq += service * service;
    }

    pub(crate) fn merge(&mut self, o: &Sums) {
        self.count += o.count;
        self.on_arrivals += o.on_arrivals;
        self.interdeparture += o.interdeparture;
        self.area += o.area;
        self.peak += o.peak;
        self.service += o.service;
        self.service_sq += o.service_sq;
    }

    fn n(&self) -> f64 {
        self.count as f64
    }

    pub(crate) fn mean_age(&self) -> f64 {
        self.area / self.interdeparture
    }

    pub(crate) fn mean_peak_age(&self) -> f64 {
        self.peak / self.n()
    }

    pub(crate) fn mean_service(&self) -> f64 {
        self.service / self.n()
    }

    pub(crate) fn second_moment_service(&self) -> f64 {
        self.service_sq / self.n()
    }

    pub(crate) fn on_fraction(&self) -> f64 {
        self.on_arrivals as f64 / self.n()
    }

    pub(crate) fn delivery_rate(&self) -> f64 {
        self.n() / self.interdeparture
    }

    pub(crate) fn mean_interdeparture(&self) -> f64 {
        self.interdeparture / self.n()
    }
}

/// Point estimate from `pooled`, standard error from the spread of the
/// per-group estimates.
pub(crate) fn estimate_with_error(pooled: &Sums, groups: &[Sums], f: fn(&Sums) -> f64) -> Estimate {
    let m = groups.len();
    let std_error = if m < 2 {
        f64::NAN
    } else {
        let values: Vec<f64> = groups.iter().map(f).collect();
        let mean = values.iter().sum::<f64>() / m as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    };
    Estimate {
        estimate: f(pooled),
        std_error,
    }
}
