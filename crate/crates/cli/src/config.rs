//! Run configuration: a flat JSON document whose values individual CLI
//! flags override. Defaults mirror the simulation constants used
//! throughout the analysis (V = 20, beta = 0.95, eps = 0.01, 0.2 dB/km).

use std::path::Path;

use serde::{Deserialize, Serialize};

use cvqkd_core::keyrate::KeyRateRoute;
use cvqkd_core::protocol::{distance_to_transmittance, LinkParams, DEFAULT_LOSS_DB_PER_KM};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// EPR state variance V; the modulation variance is V - 1.
    pub epr_variance: f64,
    pub beta: f64,
    pub excess_noise: f64,
    pub theta_deg: f64,
    pub loss_db_per_km: f64,
    /// Single-point distance (keyrate, optimal-va, pipeline).
    pub distance_km: f64,
    /// Distance grid for sweeps.
    pub distance_start_km: f64,
    pub distance_stop_km: f64,
    pub distance_step_km: f64,
    /// Angular-error grid in degrees for sweeps.
    pub theta_grid_deg: Vec<f64>,
    /// Excess-noise list for the max-distance sweep.
    pub excess_noise_list: Vec<f64>,
    /// Monte Carlo sample count.
    pub samples: usize,
    pub seed: u64,
    /// Covariance model used for key rates; the misestimated route is the
    /// default for figure-style sweeps.
    pub route: KeyRateRoute,
    /// EPR-variance search window for the optimal modulation variance.
    pub epr_variance_min: f64,
    pub epr_variance_max: f64,
    pub max_distance_tolerance_km: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            epr_variance: 20.0,
            beta: 0.95,
            excess_noise: 0.01,
            theta_deg: 0.0,
            loss_db_per_km: DEFAULT_LOSS_DB_PER_KM,
            distance_km: 20.0,
            distance_start_km: 0.0,
            distance_stop_km: 80.0,
            distance_step_km: 1.0,
            theta_grid_deg: vec![0.0, 5.0, 10.0],
            excess_noise_list: vec![0.01, 0.05, 0.1],
            samples: 1_000_000,
            seed: 1,
            route: KeyRateRoute::Misestimated,
            epr_variance_min: 1.0 + 1e-6,
            epr_variance_max: 100.0,
            max_distance_tolerance_km: 0.01,
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Config = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_grid_deg.is_empty() {
            return Err(CliError::Config("theta_grid_deg must not be empty".into()));
        }
        if !self.theta_grid_deg.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(
                "theta_grid_deg must be strictly increasing".into(),
            ));
        }
        if self.theta_grid_deg.iter().any(|t| t.abs() >= 90.0) {
            return Err(CliError::Config(
                "theta_grid_deg entries must lie in (-90, 90)".into(),
            ));
        }
        if self.excess_noise_list.is_empty() {
            return Err(CliError::Config("excess_noise_list must not be empty".into()));
        }
        if !self.excess_noise_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(
                "excess_noise_list must be strictly increasing".into(),
            ));
        }
        if !(self.distance_step_km > 0.0) {
            return Err(CliError::Config("distance_step_km must be positive".into()));
        }
        if self.distance_stop_km < self.distance_start_km || self.distance_start_km < 0.0 {
            return Err(CliError::Config("bad distance range".into()));
        }
        if !(self.epr_variance_min > 1.0 && self.epr_variance_max <= 100.0
            && self.epr_variance_min < self.epr_variance_max)
        {
            return Err(CliError::Config(
                "EPR variance window must satisfy 1 < min < max <= 100".into(),
            ));
        }
        if !(self.max_distance_tolerance_km > 0.0) {
            return Err(CliError::Config(
                "max_distance_tolerance_km must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn distance_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut k = 0usize;
        loop {
            let d = self.distance_start_km + k as f64 * self.distance_step_km;
            if d > self.distance_stop_km + 1e-9 {
                break;
            }
            grid.push(d);
            k += 1;
        }
        grid
    }

    /// Link parameters at one sweep coordinate.
    pub fn link_at(&self, distance_km: f64, theta_deg: f64, excess_noise: f64) -> Result<LinkParams> {
        let t = distance_to_transmittance(distance_km, self.loss_db_per_km)?;
        let theta = theta_deg.to_radians();
        Ok(LinkParams::symmetric(
            self.epr_variance,
            t,
            excess_noise,
            self.beta,
            theta,
        )?)
    }
}
