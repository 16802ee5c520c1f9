//! Mutual information, Holevo bound, and reverse-reconciliation secret key
//! rate of the link, with and without the angular error.
//!
//! Two evaluation routes exist for a link with angular error `theta`:
//!
//! - [`secret_key_rate`] applies the rotation to the measurement model
//!   itself (the receiver covariance carries `theta`);
//! - [`secret_key_rate_misestimated`] evaluates what the parties compute
//!   when unaware of the rotation: the P-branch channel parameters are
//!   replaced by their biased estimates and the measurement model is taken
//!   to be ideal.
//!
//! Both routes see identical measured data (identical mutual information);
//! they differ only in the eavesdropper bound, so the difference between
//! their key rates is reported by the CLI as a diagnostic rather than
//! asserted away.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::predict_biased_params;
use crate::gaussian::{
    condition_on_homodyne, g_entropy, symplectic_eigenvalues, CovarianceMatrix, Quadrature,
};
use crate::protocol::{build_receiver_cov, epr_channel_cov_per_quadrature, LinkParams};

/// Second moments of the heterodyne outcomes actually used for key
/// extraction: Alice's data against Bob's X-branch and P-branch data.
///
/// Alice heterodynes her mode, so each of her outcome variances is
/// `(gamma_A + 1)/2` and her covariance with any Bob outcome picks up a
/// `1/sqrt2`. Bob's branch outcomes are read off the receiver covariance
/// directly: its beam splitter and rotation are already part of the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredMoments {
    pub var_alice_x: f64,
    pub var_alice_p: f64,
    pub var_bob_x: f64,
    pub var_bob_p: f64,
    pub cov_x: f64,
    pub cov_p: f64,
}

/// Extracts [`MeasuredMoments`] from a three-mode receiver covariance
/// matrix with mode order `(A, B1, B3)`.
pub fn measured_moments(receiver: &CovarianceMatrix) -> MeasuredMoments {
    let g = receiver.matrix();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    MeasuredMoments {
        var_alice_x: (g[(0, 0)] + 1.0) / 2.0,
        var_alice_p: (g[(1, 1)] + 1.0) / 2.0,
        var_bob_x: g[(2, 2)],
        var_bob_p: g[(5, 5)],
        cov_x: g[(0, 2)] * inv_sqrt2,
        cov_p: g[(1, 5)] * inv_sqrt2,
    }
}

/// Shannon mutual information `(total, x part, p part)` in bits per pulse.
///
/// Per quadrature `I = log2(V_A / V_{A|B}) / 2` with
/// `V_{A|B} = V_A - cov^2 / V_B`.
pub fn mutual_information(m: &MeasuredMoments) -> Result<(f64, f64, f64)> {
    let per_quad = |va: f64, vb: f64, cov: f64| -> Result<f64> {
        if va <= 0.0 || vb <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "non-positive variance (va={va}, vb={vb})"
            )));
        }
        let conditional = va - cov * cov / vb;
        if conditional <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "conditional variance {conditional} <= 0 violates Cauchy-Schwarz"
            )));
        }
        Ok(0.5 * (va / conditional).log2())
    };
    let ix = per_quad(m.var_alice_x, m.var_bob_x, m.cov_x)?;
    let ip = per_quad(m.var_alice_p, m.var_bob_p, m.cov_p)?;
    Ok((ix + ip, ix, ip))
}

/// Holevo bound on Eve's information about Bob's data under collective
/// attacks, together with the three symplectic eigenvalues that enter it.
///
/// Eve purifies the whole system, so her entropy equals the entropy of the
/// (A, B) state before detection, and her entropy conditioned on Bob's
/// outcomes equals the entropy of Alice's mode after P-conditioning on B3
/// followed by X-conditioning on B1.
pub fn holevo_bound(
    gamma_ab: &CovarianceMatrix,
    receiver: &CovarianceMatrix,
) -> Result<(f64, [f64; 3])> {
    let nus = symplectic_eigenvalues(gamma_ab)?;
    let after_p = condition_on_homodyne(receiver, 2, Quadrature::P)?;
    let alice_only = condition_on_homodyne(&after_p, 1, Quadrature::X)?;
    let lambda_3 = symplectic_eigenvalues(&alice_only)?[0];
    let chi = g_entropy((nus[0] - 1.0) / 2.0)? + g_entropy((nus[1] - 1.0) / 2.0)?
        - g_entropy((lambda_3 - 1.0) / 2.0)?;
    Ok((chi, [nus[0], nus[1], lambda_3]))
}

/// Which covariance model a key-rate evaluation uses for a rotated link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyRateRoute {
    /// Rotation applied to the measurement model (the receiver covariance
    /// carries `theta`).
    Rotated,
    /// Ideal measurement model with the biased P-branch parameter
    /// estimates substituted, as computed by parties unaware of the error.
    Misestimated,
}

/// Full output of a secret-key-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    /// `beta * I_AB - chi_BE` in bits per pulse; negative values are
    /// reported as-is.
    pub key_rate: f64,
    pub positive: bool,
    pub i_ab: f64,
    pub i_ab_x: f64,
    pub i_ab_p: f64,
    pub chi_be: f64,
    /// Symplectic eigenvalues of the (A, B) state.
    pub lambda_1: f64,
    pub lambda_2: f64,
    /// Symplectic eigenvalue of Alice's mode after conditioning on Bob's
    /// two homodyne outcomes.
    pub lambda_3: f64,
}

fn key_rate_from_matrices(
    gamma_ab: &CovarianceMatrix,
    receiver: &CovarianceMatrix,
    beta: f64,
) -> Result<KeyRateReport> {
    let (i_ab, i_x, i_p) = mutual_information(&measured_moments(receiver))?;
    let (chi_be, lambdas) = holevo_bound(gamma_ab, receiver)?;
    let key_rate = beta * i_ab - chi_be;
    Ok(KeyRateReport {
        key_rate,
        positive: key_rate > 0.0,
        i_ab,
        i_ab_x: i_x,
        i_ab_p: i_p,
        chi_be,
        lambda_1: lambdas[0],
        lambda_2: lambdas[1],
        lambda_3: lambdas[2],
    })
}

/// Key rate with the true rotated measurement model: the receiver
/// covariance is built with the link's `theta`.
pub fn secret_key_rate(params: &LinkParams) -> Result<KeyRateReport> {
    let gamma_ab = epr_channel_cov_per_quadrature(
        params.epr_variance(),
        params.t_x(),
        params.eps_x(),
        params.t_p(),
        params.eps_p(),
    )?;
    let receiver = build_receiver_cov(&gamma_ab, params.theta())?;
    key_rate_from_matrices(&gamma_ab, &receiver, params.beta())
}

/// Key rate the parties compute when unaware of an angular error `theta`:
/// the P-branch transmittance and excess noise are replaced by their
/// biased estimates and the measurement model is evaluated at zero
/// rotation.
pub fn secret_key_rate_misestimated(params: &LinkParams, theta: f64) -> Result<KeyRateReport> {
    if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParam {
            name: "theta",
            value: theta,
            constraint: "|theta| < pi/2",
        });
    }
    let (t_p_biased, eps_p_biased) = predict_biased_params(
        params.t_p(),
        params.eps_p(),
        params.modulation_variance(),
        theta,
    );
    let gamma_ab = epr_channel_cov_per_quadrature(
        params.epr_variance(),
        params.t_x(),
        params.eps_x(),
        t_p_biased,
        eps_p_biased,
    )?;
    let receiver = build_receiver_cov(&gamma_ab, 0.0)?;
    key_rate_from_matrices(&gamma_ab, &receiver, params.beta())
}

/// Dispatches between the two evaluation routes using the link's own
/// `theta`.
pub fn secret_key_rate_with_route(params: &LinkParams, route: KeyRateRoute) -> Result<KeyRateReport> {
    match route {
        KeyRateRoute::Rotated => secret_key_rate(params),
        KeyRateRoute::Misestimated => secret_key_rate_misestimated(params, params.theta()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::epr_channel_cov;

    const DEG: f64 = std::f64::consts::PI / 180.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn receiver_at(v: f64, t: f64, eps: f64, theta: f64) -> CovarianceMatrix {
        build_receiver_cov(&epr_channel_cov(v, t, eps).unwrap(), theta).unwrap()
    }

    #[test]
    fn moments_identity_channel() {
        let m = measured_moments(&receiver_at(20.0, 1.0, 0.0, 0.0));
        assert!(close(m.var_alice_x, 10.5, 1e-12));
        assert!(close(m.var_bob_x, 10.5, 1e-12));
        // Covariance is c / sqrt2 at the matrix level, then / sqrt2 again for
        // Alice's heterodyne: sqrt(399)/2.
        assert!(close(m.cov_x, 399.0f64.sqrt() / 2.0, 1e-12));
        assert!(close(m.cov_p, -(399.0f64.sqrt()) / 2.0, 1e-12));
    }

    #[test]
    fn moments_vacuum_input_has_no_correlation() {
        let m = measured_moments(&receiver_at(1.0, 0.5, 0.0, 0.0));
        assert!(close(m.cov_x, 0.0, 1e-12));
        assert!(close(m.cov_p, 0.0, 1e-12));
    }

    #[test]
    fn moments_satisfy_cauchy_schwarz() {
        for (v, t, eps, th) in [
            (20.0, 0.5, 0.01, 0.0),
            (20.0, 0.1, 0.05, 10.0 * DEG),
            (5.0, 0.9, 0.2, -20.0 * DEG),
        ] {
            let m = measured_moments(&receiver_at(v, t, eps, th));
            assert!(m.cov_x * m.cov_x <= m.var_alice_x * m.var_bob_x);
            assert!(m.cov_p * m.cov_p <= m.var_alice_p * m.var_bob_p);
        }
    }

    #[test]
    fn mutual_information_identity_channel() {
        let m = measured_moments(&receiver_at(20.0, 1.0, 0.0, 0.0));
        let (i, ix, ip) = mutual_information(&m).unwrap();
        assert!(close(i, 10.5f64.log2(), 1e-9));
        assert!(close(ix, ip, 1e-12));
    }

    #[test]
    fn mutual_information_vanishes_without_modulation() {
        let m = measured_moments(&receiver_at(1.0, 0.5, 0.0, 0.0));
        let (i, _, _) = mutual_information(&m).unwrap();
        assert!(close(i, 0.0, 1e-12));
    }

    #[test]
    fn rotation_only_degrades_p_branch() {
        let m0 = measured_moments(&receiver_at(20.0, 0.5, 0.01, 0.0));
        let m10 = measured_moments(&receiver_at(20.0, 0.5, 0.01, 10.0 * DEG));
        let (_, ix0, ip0) = mutual_information(&m0).unwrap();
        let (_, ix10, ip10) = mutual_information(&m10).unwrap();
        assert!(close(ix0, ix10, 1e-12));
        assert!(ip10 < ip0);
    }

    #[test]
    fn holevo_vanishes_for_pure_state() {
        let gamma_ab = epr_channel_cov(20.0, 1.0, 0.0).unwrap();
        let receiver = build_receiver_cov(&gamma_ab, 0.0).unwrap();
        let (chi, lambdas) = holevo_bound(&gamma_ab, &receiver).unwrap();
        assert!(chi.abs() <= 1e-9);
        for l in lambdas {
            assert!(close(l, 1.0, 1e-6));
        }
    }

    #[test]
    fn holevo_even_in_theta() {
        let gamma_ab = epr_channel_cov(20.0, 0.4, 0.03).unwrap();
        for theta in [2.0 * DEG, 9.0 * DEG, 25.0 * DEG] {
            let plus = holevo_bound(&gamma_ab, &build_receiver_cov(&gamma_ab, theta).unwrap())
                .unwrap()
                .0;
            let minus = holevo_bound(&gamma_ab, &build_receiver_cov(&gamma_ab, -theta).unwrap())
                .unwrap()
                .0;
            assert!(close(plus, minus, 1e-9));
        }
    }

    #[test]
    fn key_rate_identity_channel_closed_form() {
        let params = LinkParams::symmetric(20.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        let report = secret_key_rate(&params).unwrap();
        assert!(close(report.key_rate, 10.5f64.log2(), 1e-9));
        assert!(report.chi_be.abs() <= 1e-9);
        assert!(report.positive);
    }

    #[test]
    fn key_rate_flags_non_positive_without_modulation() {
        let params = LinkParams::symmetric(1.0, 0.5, 0.0, 0.95, 0.0).unwrap();
        let report = secret_key_rate(&params).unwrap();
        assert!(report.key_rate <= 0.0);
        assert!(!report.positive);
    }

    #[test]
    fn misestimated_route_matches_rotated_at_zero_theta() {
        let params = LinkParams::symmetric(20.0, 0.3, 0.02, 0.95, 0.0).unwrap();
        let rotated = secret_key_rate(&params).unwrap();
        let biased = secret_key_rate_misestimated(&params, 0.0).unwrap();
        assert!(close(rotated.key_rate, biased.key_rate, 1e-12));
        assert!(close(rotated.chi_be, biased.chi_be, 1e-12));
    }

    #[test]
    fn misestimated_rate_drops_with_rotation_at_every_distance() {
        for km in [0.0, 10.0, 25.0, 40.0] {
            let t = crate::protocol::distance_to_transmittance(km, 0.2).unwrap();
            let params = LinkParams::symmetric(20.0, t, 0.01, 0.95, 0.0).unwrap();
            let k0 = secret_key_rate_misestimated(&params, 0.0).unwrap().key_rate;
            let k10 = secret_key_rate_misestimated(&params, 10.0 * DEG).unwrap().key_rate;
            assert!(k10 < k0);
        }
    }

    #[test]
    fn key_rate_even_in_theta_both_routes() {
        let t = crate::protocol::distance_to_transmittance(20.0, 0.2).unwrap();
        for theta in [3.0 * DEG, 12.0 * DEG] {
            let plus = LinkParams::symmetric(20.0, t, 0.01, 0.95, theta).unwrap();
            let minus = LinkParams::symmetric(20.0, t, 0.01, 0.95, -theta).unwrap();
            assert!(close(
                secret_key_rate(&plus).unwrap().key_rate,
                secret_key_rate(&minus).unwrap().key_rate,
                1e-9
            ));
            assert!(close(
                secret_key_rate_misestimated(&plus, theta).unwrap().key_rate,
                secret_key_rate_misestimated(&minus, -theta).unwrap().key_rate,
                1e-9
            ));
        }
    }

    #[test]
    fn mutual_information_identical_between_routes() {
        // Both routes describe the same measured data, so I_AB must agree;
        // only the Holevo term differs.
        let t = crate::protocol::distance_to_transmittance(15.0, 0.2).unwrap();
        let theta = 7.0 * DEG;
        let params = LinkParams::symmetric(20.0, t, 0.01, 0.95, theta).unwrap();
        let rotated = secret_key_rate(&params).unwrap();
        let biased = secret_key_rate_misestimated(&params, theta).unwrap();
        assert!(close(rotated.i_ab, biased.i_ab, 1e-9));
        assert!(close(rotated.i_ab_x, biased.i_ab_x, 1e-9));
        assert!(close(rotated.i_ab_p, biased.i_ab_p, 1e-9));
    }
}
