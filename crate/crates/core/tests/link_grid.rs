//! Grid sweeps of the analytic link model: physicality of every receiver
//! covariance and monotonicity of the key rate in angle, noise, and
//! distance.

use cvqkd_core::gaussian::symplectic_eigenvalues;
use cvqkd_core::keyrate::{secret_key_rate, secret_key_rate_misestimated, KeyRateReport};
use cvqkd_core::protocol::{build_receiver_cov, distance_to_transmittance, epr_channel_cov, LinkParams};

const DEG: f64 = std::f64::consts::PI / 180.0;

#[test]
fn receiver_cov_is_physical_across_the_parameter_grid() {
    for v in [1.0, 25.75, 50.5, 75.25, 100.0] {
        for t in [0.05, 0.3, 0.55, 0.8, 1.0] {
            for eps in [0.0, 0.125, 0.25, 0.375, 0.5] {
                for theta_deg in [-30.0, -15.0, 0.0, 15.0, 30.0] {
                    let gamma = epr_channel_cov(v, t, eps).unwrap();
                    let receiver = build_receiver_cov(&gamma, theta_deg * DEG)
                        .unwrap_or_else(|e| panic!("V={v} T={t} eps={eps} theta={theta_deg}: {e}"));
                    let nus = symplectic_eigenvalues(&receiver).unwrap();
                    assert!(nus.iter().all(|&nu| nu >= 1.0 - 1e-9));
                }
            }
        }
    }
}

fn rates_at(km: f64, eps: f64, theta_deg: f64) -> (KeyRateReport, KeyRateReport) {
    let t = distance_to_transmittance(km, 0.2).unwrap();
    let theta = theta_deg * DEG;
    let params = LinkParams::symmetric(20.0, t, eps, 0.95, theta).unwrap();
    let rotated = secret_key_rate(&params).unwrap();
    let biased = secret_key_rate_misestimated(&params, theta).unwrap();
    (rotated, biased)
}

#[test]
fn key_rate_non_increasing_in_theta_everywhere() {
    for eps in [0.01, 0.05, 0.1] {
        for km_step in 0..=8 {
            let km = 10.0 * km_step as f64;
            let mut prev: Option<(f64, f64)> = None;
            for theta_deg in 0..=30 {
                let (rot, bia) = rates_at(km, eps, theta_deg as f64);
                if let Some((prev_rot, prev_bia)) = prev {
                    assert!(
                        rot.key_rate <= prev_rot + 1e-12,
                        "rotated K rose at {km} km, eps {eps}, theta {theta_deg}"
                    );
                    assert!(
                        bia.key_rate <= prev_bia + 1e-12,
                        "biased K rose at {km} km, eps {eps}, theta {theta_deg}"
                    );
                }
                prev = Some((rot.key_rate, bia.key_rate));
            }
        }
    }
}

#[test]
fn key_rate_non_increasing_in_noise_and_distance() {
    for theta_deg in [0.0, 5.0, 10.0] {
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.01, 0.05, 0.1, 0.2] {
            let (_, bia) = rates_at(20.0, eps, theta_deg);
            assert!(bia.key_rate <= prev + 1e-12);
            prev = bia.key_rate;
        }
        let mut prev = f64::INFINITY;
        for km in [0.0, 5.0, 20.0, 40.0, 60.0, 80.0] {
            let (_, bia) = rates_at(km, 0.01, theta_deg);
            assert!(bia.key_rate <= prev + 1e-12);
            prev = bia.key_rate;
        }
    }
}

#[test]
fn report_identities_and_bounds_hold_on_the_grid() {
    for eps in [0.01, 0.1] {
        for km in [0.0, 20.0, 60.0] {
            for theta_deg in [0.0, 7.0, 22.0] {
                for report in [rates_at(km, eps, theta_deg).0, rates_at(km, eps, theta_deg).1] {
                    assert!(report.chi_be >= -1e-9);
                    assert!(report.key_rate <= 0.95 * report.i_ab + 1e-12);
                    assert!((report.i_ab - (report.i_ab_x + report.i_ab_p)).abs() <= 1e-12);
                    assert!(report.lambda_1 >= 1.0 - 1e-9);
                    assert!(report.lambda_2 >= 1.0 - 1e-9);
                    assert!(report.lambda_3 >= 1.0 - 1e-9);
                    assert_eq!(report.positive, report.key_rate > 0.0);
                }
            }
        }
    }
}
