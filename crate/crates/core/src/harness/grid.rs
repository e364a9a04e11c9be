use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{Discipline, SystemParams};
use crate::oracle::SeriesConfig;
use crate::simulator::SimConfig;

/// Cartesian grid of parameter points plus the two acceptance gates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub lambda_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub kappa_on_values: Vec<f64>,
    pub kappa_off_values: Vec<f64>,
    pub disciplines: Vec<Discipline>,
    /// `None` skips the simulation gate.
    pub sim: Option<SimConfig>,
    pub rel_tol_analytic_vs_oracle: f64,
    pub sigma_gate: f64,
    #[serde(skip)]
    pub series: SeriesConfig,
}

/// On-disk form: flat `key = value` pairs, lists in brackets.
///
/// ```toml
/// lambda_values = [0.5, 1, 2]
/// mu_values = [1]
/// kappa_on_values = [0.1, 1, 10]
/// kappa_off_values = [0.1, 1, 10]
/// disciplines = ["non-preemptive", "preemptive"]
/// deliveries = 100000
/// seed = 42
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    lambda_values: Vec<f64>,
    mu_values: Vec<f64>,
    kappa_on_values: Vec<f64>,
    kappa_off_values: Vec<f64>,
    disciplines: Option<Vec<Discipline>>,
    rel_tol_analytic_vs_oracle: Option<f64>,
    sigma_gate: Option<f64>,
    deliveries: Option<u64>,
    warmup: Option<u64>,
    replications: Option<u32>,
    seed: Option<u64>,
}

pub const DEFAULT_REL_TOL: f64 = 1e-9;
pub const DEFAULT_SIGMA_GATE: f64 = 3.0;

impl GridConfig {
    /// `lambda in {0.5, 1, 2}`, `mu = 1`, `kappa_on, kappa_off in {0.1, 1, 10}`,
    /// both disciplines.
    pub fn default_grid(sim: Option<SimConfig>) -> Self {
        Self {
            lambda_values: vec![0.5, 1.0, 2.0],
            mu_values: vec![1.0],
            kappa_on_values: vec![0.1, 1.0, 10.0],
            kappa_off_values: vec![0.1, 1.0, 10.0],
            disciplines: Discipline::ALL.to_vec(),
            sim,
            rel_tol_analytic_vs_oracle: DEFAULT_REL_TOL,
            sigma_gate: DEFAULT_SIGMA_GATE,
            series: SeriesConfig::default(),
        }
    }

    /// Parses a grid file. Simulation keys in the file are optional; when
    /// `deliveries` is absent the simulation gate is off.
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let file: GridFile = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        let sim = file.deliveries.map(|n| {
            let mut cfg = SimConfig::new(n, file.seed.unwrap_or(0));
            if let Some(w) = file.warmup {
                cfg.warmup_deliveries = w;
            }
            if let Some(r) = file.replications {
                cfg.replications = r;
            }
            cfg
        });
        let grid = Self {
            lambda_values: file.lambda_values,
            mu_values: file.mu_values,
            kappa_on_values: file.kappa_on_values,
            kappa_off_values: file.kappa_off_values,
            disciplines: file.disciplines.unwrap_or_else(|| Discipline::ALL.to_vec()),
            sim,
            rel_tol_analytic_vs_oracle: file.rel_tol_analytic_vs_oracle.unwrap_or(DEFAULT_REL_TOL),
            sigma_gate: file.sigma_gate.unwrap_or(DEFAULT_SIGMA_GATE),
            series: SeriesConfig::default(),
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Lists must be non-empty and hold valid rates. A zero tolerance is
    /// accepted (every row then fails its gate); negative or non-finite ones
    /// are not.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let lists = [
            ("lambda_values", &self.lambda_values),
            ("mu_values", &self.mu_values),
            ("kappa_on_values", &self.kappa_on_values),
            ("kappa_off_values", &self.kappa_off_values),
        ];
        for (name, values) in lists {
            if values.is_empty() {
                return Err(HarnessError::InvalidGrid(format!("{name} is empty")));
            }
        }
        if self.disciplines.is_empty() {
            return Err(HarnessError::InvalidGrid("disciplines is empty".into()));
        }
        for (name, tol) in [
            ("rel_tol_analytic_vs_oracle", self.rel_tol_analytic_vs_oracle),
            ("sigma_gate", self.sigma_gate),
        ] {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(HarnessError::InvalidGrid(format!("{name} must be finite and non-negative")));
            }
        }
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        self.points()?;
        Ok(())
    }

    /// Grid points in lambda, mu, kappa_on, kappa_off order (last varies fastest).
    pub fn points(&self) -> Result<Vec<SystemParams>, HarnessError> {
        let mut out = Vec::new();
        for &l in &self.lambda_values {
            for &m in &self.mu_values {
                for &ko in &self.kappa_on_values {
                    for &kf in &self.kappa_off_values {
                        out.push(SystemParams::new(l, m, ko, kf)?);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn row_count(&self) -> usize {
        self.lambda_values.len()
            * self.mu_values.len()
            * self.kappa_on_values.len()
            * self.kappa_off_values.len()
            * self.disciplines.len()
    }
}
