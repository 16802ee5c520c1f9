//! Sweep drivers: key rate over a distance grid, maximum transmission
//! distance by bisection, and optimal modulation variance by
//! golden-section search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cvqkd_core::keyrate::{secret_key_rate_with_route, KeyRateReport, KeyRateRoute};
use cvqkd_core::protocol::{distance_to_transmittance, LinkParams};
use cvqkd_core::tol;

use crate::config::Config;
use crate::error::{CliError, Result};

/// One row of a rate-vs-distance table. Rows with non-positive rate are
/// retained and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub distance_km: f64,
    pub theta_deg: f64,
    pub excess_noise: f64,
    pub epr_variance: f64,
    pub beta: f64,
    pub key_rate: f64,
    pub positive: bool,
    pub i_ab: f64,
    pub i_ab_x: f64,
    pub i_ab_p: f64,
    pub chi_be: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub lambda_3: f64,
}

impl RateRow {
    fn new(cfg: &Config, distance_km: f64, theta_deg: f64, report: &KeyRateReport) -> Self {
        Self {
            distance_km,
            theta_deg,
            excess_noise: cfg.excess_noise,
            epr_variance: cfg.epr_variance,
            beta: cfg.beta,
            key_rate: report.key_rate,
            positive: report.positive,
            i_ab: report.i_ab,
            i_ab_x: report.i_ab_x,
            i_ab_p: report.i_ab_p,
            chi_be: report.chi_be,
            lambda_1: report.lambda_1,
            lambda_2: report.lambda_2,
            lambda_3: report.lambda_3,
        }
    }
}

/// Key rate over the configured distance grid, one curve per grid angle.
/// Grid points are evaluated in parallel but emitted in grid order.
pub fn sweep_rate_vs_distance(cfg: &Config) -> Result<Vec<RateRow>> {
    cfg.validate()?;
    let coords: Vec<(f64, f64)> = cfg
        .theta_grid_deg
        .iter()
        .flat_map(|&theta| cfg.distance_grid().into_iter().map(move |d| (theta, d)))
        .collect();
    let rows: std::result::Result<Vec<RateRow>, CliError> = coords
        .par_iter()
        .map(|&(theta_deg, d)| {
            let params = cfg.link_at(d, theta_deg, cfg.excess_noise)?;
            let report = secret_key_rate_with_route(&params, cfg.route)?;
            Ok(RateRow::new(cfg, d, theta_deg, &report))
        })
        .collect();
    rows
}

fn key_rate_at_distance(
    distance_km: f64,
    theta: f64,
    eps: f64,
    v: f64,
    beta: f64,
    loss_db_per_km: f64,
    route: KeyRateRoute,
) -> Result<f64> {
    let t = distance_to_transmittance(distance_km, loss_db_per_km)?;
    let params = LinkParams::symmetric(v, t, eps, beta, theta)?;
    Ok(secret_key_rate_with_route(&params, route)?.key_rate)
}

/// Largest distance with a positive key rate, by bracket expansion and
/// bisection on the monotone tail. `theta` is in radians.
///
/// Rates below [`tol::KEY_RATE_ZERO`] count as zero so the boundary does
/// not flutter with floating-point sign noise.
pub fn max_distance(
    theta: f64,
    eps: f64,
    v: f64,
    beta: f64,
    loss_db_per_km: f64,
    route: KeyRateRoute,
    tolerance_km: f64,
) -> Result<f64> {
    if !(tolerance_km > 0.0) {
        return Err(CliError::Config("tolerance_km must be positive".into()));
    }
    let rate =
        |d: f64| key_rate_at_distance(d, theta, eps, v, beta, loss_db_per_km, route);
    if rate(0.0)? <= tol::KEY_RATE_ZERO {
        return Err(CliError::NoPositiveRate(format!(
            "key rate is non-positive already at zero distance (theta = {:.3} deg, eps = {eps})",
            theta.to_degrees()
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while rate(hi)? > tol::KEY_RATE_ZERO {
        lo = hi;
        hi *= 2.0;
        if hi > 2048.0 {
            return Err(CliError::Config(
                "no zero crossing below 2048 km; check the loss model".into(),
            ));
        }
    }
    while hi - lo > tolerance_km {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > tol::KEY_RATE_ZERO {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of the max-distance-vs-angle table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDistanceRow {
    pub theta_deg: f64,
    pub excess_noise: f64,
    pub epr_variance: f64,
    pub beta: f64,
    pub max_distance_km: f64,
}

/// Maximum distance over the configured angle grid and excess-noise list.
pub fn sweep_max_distance(cfg: &Config) -> Result<Vec<MaxDistanceRow>> {
    cfg.validate()?;
    let coords: Vec<(f64, f64)> = cfg
        .excess_noise_list
        .iter()
        .flat_map(|&eps| cfg.theta_grid_deg.iter().map(move |&th| (eps, th)))
        .collect();
    coords
        .par_iter()
        .map(|&(eps, theta_deg)| {
            let d = max_distance(
                theta_deg.to_radians(),
                eps,
                cfg.epr_variance,
                cfg.beta,
                cfg.loss_db_per_km,
                cfg.route,
                cfg.max_distance_tolerance_km,
            )?;
            Ok(MaxDistanceRow {
                theta_deg,
                excess_noise: eps,
                epr_variance: cfg.epr_variance,
                beta: cfg.beta,
                max_distance_km: d,
            })
        })
        .collect()
}

/// Result of the optimal-modulation-variance search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalVa {
    pub v_a_opt: f64,
    pub key_rate_opt: f64,
    /// True when the coarse scan saw more than one interior maximum and the
    /// search fell back to the grid argmax.
    pub grid_fallback: bool,
}

const COARSE_POINTS: usize = 20;

/// Modulation variance maximizing the key rate at a fixed distance and
/// angle, over EPR variances in `[v_min, v_max]`.
///
/// A 20-point coarse scan brackets the maximum (and guards against a
/// non-unimodal rate curve); golden-section search refines it.
pub fn optimal_va(
    distance_km: f64,
    theta: f64,
    eps: f64,
    beta: f64,
    loss_db_per_km: f64,
    v_min: f64,
    v_max: f64,
    route: KeyRateRoute,
) -> Result<OptimalVa> {
    if !(v_min > 1.0 && v_min < v_max && v_max <= 100.0) {
        return Err(CliError::Config(
            "EPR variance window must satisfy 1 < min < max <= 100".into(),
        ));
    }
    let rate = |v: f64| key_rate_at_distance(distance_km, theta, eps, v, beta, loss_db_per_km, route);

    let grid: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| v_min + (v_max - v_min) * i as f64 / (COARSE_POINTS - 1) as f64)
        .collect();
    let rates: Vec<f64> = grid.iter().map(|&v| rate(v)).collect::<Result<_>>()?;

    let (best_idx, &best_rate) = rates
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite rates"))
        .expect("non-empty grid");
    if best_rate <= tol::KEY_RATE_ZERO {
        return Err(CliError::NoPositiveRate(format!(
            "no EPR variance in [{v_min}, {v_max}] yields a positive rate at {distance_km} km"
        )));
    }

    let interior_maxima = (1..COARSE_POINTS - 1)
        .filter(|&i| rates[i] > rates[i - 1] && rates[i] > rates[i + 1])
        .count();
    let boundary_max = best_idx == 0 || best_idx == COARSE_POINTS - 1;
    if interior_maxima > 1 {
        // Unimodality looks violated; report the grid argmax honestly.
        return Ok(OptimalVa {
            v_a_opt: grid[best_idx] - 1.0,
            key_rate_opt: best_rate,
            grid_fallback: true,
        });
    }

    let lo = if best_idx == 0 { grid[0] } else { grid[best_idx - 1] };
    let hi = if best_idx == COARSE_POINTS - 1 {
        grid[COARSE_POINTS - 1]
    } else {
        grid[best_idx + 1]
    };
    let (v_opt, k_opt) = golden_section_maximize(&rate, lo, hi, 1e-7)?;
    // Keep the better of the refined point and the raw grid point; with a
    // boundary maximum the refined bracket may sit on a flat edge.
    if boundary_max && best_rate > k_opt {
        return Ok(OptimalVa {
            v_a_opt: grid[best_idx] - 1.0,
            key_rate_opt: best_rate,
            grid_fallback: false,
        });
    }
    Ok(OptimalVa {
        v_a_opt: v_opt - 1.0,
        key_rate_opt: k_opt,
        grid_fallback: false,
    })
}

fn golden_section_maximize(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol_x: f64,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a).abs() > tol_x {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    if f1 > f2 {
        Ok((x1, f1))
    } else {
        Ok((x2, f2))
    }
}

/// One row of the optimal-variance table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalVaRow {
    pub distance_km: f64,
    pub theta_deg: f64,
    pub excess_noise: f64,
    pub beta: f64,
    pub v_a_opt: f64,
    pub key_rate_opt: f64,
    pub grid_fallback: bool,
}

/// Optimal modulation variance over the configured angle grid at the
/// configured single-point distance.
pub fn sweep_optimal_va(cfg: &Config) -> Result<Vec<OptimalVaRow>> {
    cfg.validate()?;
    cfg.theta_grid_deg
        .par_iter()
        .map(|&theta_deg| {
            let opt = optimal_va(
                cfg.distance_km,
                theta_deg.to_radians(),
                cfg.excess_noise,
                cfg.beta,
                cfg.loss_db_per_km,
                cfg.epr_variance_min,
                cfg.epr_variance_max,
                cfg.route,
            )?;
            Ok(OptimalVaRow {
                distance_km: cfg.distance_km,
                theta_deg,
                excess_noise: cfg.excess_noise,
                beta: cfg.beta,
                v_a_opt: opt.v_a_opt,
                key_rate_opt: opt.key_rate_opt,
                grid_fallback: opt.grid_fallback,
            })
        })
        .collect()
}
