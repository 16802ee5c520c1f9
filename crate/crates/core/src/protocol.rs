//! Entanglement-based covariance matrices of the protocol: the EPR state
//! after the channel, the receiver beam splitter, the rotated P-branch
//! phase shifter, and the distance/transmittance map.
//!
//! Mode ordering after [`build_receiver_cov`] is `(A, B1, B3)`: Alice's
//! retained EPR half, the X-measurement branch, and the rotated
//! P-measurement branch.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceMatrix, SymplecticTransform};

/// Standard telecom fiber loss assumed when only a distance is given.
pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;

/// Protocol, channel, and detector parameters of one link configuration.
///
/// `epr_variance` is the EPR state variance `V`; the Gaussian modulation
/// variance of the equivalent prepare-and-measure scheme is `V - 1`.
/// Channel transmittance and excess noise may differ per quadrature, which
/// is how the parameter-misestimation analysis represents a biased P
/// branch. Balanced-detector efficiency and electronic noise fields exist
/// as hooks but default to ideal (`eta = 1`, `v_el = 0`); the covariance
/// construction assumes ideal detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    epr_variance: f64,
    t_x: f64,
    t_p: f64,
    eps_x: f64,
    eps_p: f64,
    beta: f64,
    eta_1: f64,
    eta_2: f64,
    v_el_1: f64,
    v_el_2: f64,
    theta: f64,
}

fn check_range(name: &'static str, value: f64, ok: bool, constraint: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParam {
            name,
            value,
            constraint,
        })
    }
}

impl LinkParams {
    /// Link with possibly different channel parameters per quadrature.
    pub fn new(
        epr_variance: f64,
        t_x: f64,
        t_p: f64,
        eps_x: f64,
        eps_p: f64,
        beta: f64,
        theta: f64,
    ) -> Result<Self> {
        check_range("epr_variance", epr_variance, epr_variance >= 1.0, "V >= 1")?;
        check_range("t_x", t_x, t_x > 0.0 && t_x <= 1.0, "0 < T <= 1")?;
        check_range("t_p", t_p, t_p > 0.0 && t_p <= 1.0, "0 < T <= 1")?;
        check_range("eps_x", eps_x, eps_x >= 0.0, "eps >= 0")?;
        check_range("eps_p", eps_p, eps_p >= 0.0, "eps >= 0")?;
        check_range("beta", beta, beta > 0.0 && beta <= 1.0, "0 < beta <= 1")?;
        check_range(
            "theta",
            theta,
            theta.abs() < std::f64::consts::FRAC_PI_2,
            "|theta| < pi/2",
        )?;
        Ok(Self {
            epr_variance,
            t_x,
            t_p,
            eps_x,
            eps_p,
            beta,
            eta_1: 1.0,
            eta_2: 1.0,
            v_el_1: 0.0,
            v_el_2: 0.0,
            theta,
        })
    }

    /// Link with the same channel seen by both quadratures.
    pub fn symmetric(epr_variance: f64, t: f64, eps: f64, beta: f64, theta: f64) -> Result<Self> {
        Self::new(epr_variance, t, t, eps, eps, beta, theta)
    }

    /// Replaces the ideal-detector defaults.
    pub fn with_detectors(
        mut self,
        eta_1: f64,
        eta_2: f64,
        v_el_1: f64,
        v_el_2: f64,
    ) -> Result<Self> {
        check_range("eta_1", eta_1, eta_1 > 0.0 && eta_1 <= 1.0, "0 < eta <= 1")?;
        check_range("eta_2", eta_2, eta_2 > 0.0 && eta_2 <= 1.0, "0 < eta <= 1")?;
        check_range("v_el_1", v_el_1, v_el_1 >= 0.0, "v_el >= 0")?;
        check_range("v_el_2", v_el_2, v_el_2 >= 0.0, "v_el >= 0")?;
        self.eta_1 = eta_1;
        self.eta_2 = eta_2;
        self.v_el_1 = v_el_1;
        self.v_el_2 = v_el_2;
        Ok(self)
    }

    pub fn epr_variance(&self) -> f64 {
        self.epr_variance
    }

    /// Modulation variance `V_A = V - 1` of the prepare-and-measure scheme.
    pub fn modulation_variance(&self) -> f64 {
        self.epr_variance - 1.0
    }

    pub fn t_x(&self) -> f64 {
        self.t_x
    }

    pub fn t_p(&self) -> f64 {
        self.t_p
    }

    pub fn eps_x(&self) -> f64 {
        self.eps_x
    }

    pub fn eps_p(&self) -> f64 {
        self.eps_p
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta_1(&self) -> f64 {
        self.eta_1
    }

    pub fn eta_2(&self) -> f64 {
        self.eta_2
    }

    pub fn v_el_1(&self) -> f64 {
        self.v_el_1
    }

    pub fn v_el_2(&self) -> f64 {
        self.v_el_2
    }
}

/// Channel described either by its transmittance directly or by a fiber
/// length and loss coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChannelSpec {
    Transmittance { t: f64, excess_noise: f64 },
    Distance {
        km: f64,
        loss_db_per_km: f64,
        excess_noise: f64,
    },
}

impl ChannelSpec {
    pub fn transmittance(&self) -> Result<f64> {
        match *self {
            ChannelSpec::Transmittance { t, .. } => {
                check_range("t", t, t > 0.0 && t <= 1.0, "0 < T <= 1")?;
                Ok(t)
            }
            ChannelSpec::Distance {
                km, loss_db_per_km, ..
            } => distance_to_transmittance(km, loss_db_per_km),
        }
    }

    pub fn excess_noise(&self) -> f64 {
        match *self {
            ChannelSpec::Transmittance { excess_noise, .. } => excess_noise,
            ChannelSpec::Distance { excess_noise, .. } => excess_noise,
        }
    }

    /// Variance of the thermal mode Eve injects, `omega = T*eps/(1-T) + 1`.
    /// Undefined (diverging) for the identity channel, where the entangling
    /// beam-splitter model degenerates; callers of [`epr_channel_cov`] never
    /// need it because `(1-T)*omega = T*eps + 1 - T` is substituted
    /// algebraically.
    pub fn eve_variance(&self) -> Result<Option<f64>> {
        let t = self.transmittance()?;
        let eps = self.excess_noise();
        if t < 1.0 {
            Ok(Some(t * eps / (1.0 - t) + 1.0))
        } else {
            Ok(None)
        }
    }
}

/// Fiber transmittance at `distance_km` with the given loss coefficient:
/// `T = 10^(-loss * d / 10)`.
pub fn distance_to_transmittance(distance_km: f64, loss_db_per_km: f64) -> Result<f64> {
    if !(distance_km >= 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain {
            what: "distance_km",
            value: distance_km,
        });
    }
    if !(loss_db_per_km > 0.0) || !loss_db_per_km.is_finite() {
        return Err(Error::Domain {
            what: "loss_db_per_km",
            value: loss_db_per_km,
        });
    }
    Ok(10f64.powf(-loss_db_per_km * distance_km / 10.0))
}

/// Two-mode covariance matrix of an EPR state of variance `v` after one
/// half crosses a channel of transmittance `t` with input-referred excess
/// noise `eps`.
///
/// Diagonal blocks are `a*I` and `b*I` with `a = v` and
/// `b = t*v + t*eps + 1 - t` (the expanded form of `t*v + (1-t)*omega`,
/// continuous at `t = 1`); the off-diagonal block is `c*sigma_z` with
/// `c = sqrt(t*(v^2-1))`.
pub fn epr_channel_cov(v: f64, t: f64, eps: f64) -> Result<CovarianceMatrix> {
    check_range("epr_variance", v, v >= 1.0, "V >= 1")?;
    check_range("t", t, t > 0.0 && t <= 1.0, "0 < T <= 1")?;
    check_range("eps", eps, eps >= 0.0, "eps >= 0")?;
    epr_channel_cov_per_quadrature(v, t, eps, t, eps)
}

/// Variant of [`epr_channel_cov`] with independent channel parameters per
/// quadrature. The off-diagonal block becomes `diag(c_x, -c_p)`.
pub fn epr_channel_cov_per_quadrature(
    v: f64,
    t_x: f64,
    eps_x: f64,
    t_p: f64,
    eps_p: f64,
) -> Result<CovarianceMatrix> {
    check_range("epr_variance", v, v >= 1.0, "V >= 1")?;
    check_range("t_x", t_x, t_x > 0.0 && t_x <= 1.0, "0 < T <= 1")?;
    check_range("t_p", t_p, t_p > 0.0 && t_p <= 1.0, "0 < T <= 1")?;
    check_range("eps_x", eps_x, eps_x >= 0.0, "eps >= 0")?;
    check_range("eps_p", eps_p, eps_p >= 0.0, "eps >= 0")?;
    let a = v;
    let b_x = t_x * v + t_x * eps_x + 1.0 - t_x;
    let b_p = t_p * v + t_p * eps_p + 1.0 - t_p;
    let c_x = (t_x * (v * v - 1.0)).sqrt();
    let c_p = (t_p * (v * v - 1.0)).sqrt();
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            a, 0.0, c_x, 0.0, //
            0.0, a, 0.0, -c_p, //
            c_x, 0.0, b_x, 0.0, //
            0.0, -c_p, 0.0, b_p,
        ],
    );
    CovarianceMatrix::new(m)
}

/// Balanced beam splitter on two modes, mapping `(B, v)` to
/// `(B1, B2) = ((B + v)/sqrt2, (-B + v)/sqrt2)`.
pub fn bs_transform() -> SymplecticTransform {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let m = DMatrix::from_row_slice(
        4,
        4,
        &[
            r, 0.0, r, 0.0, //
            0.0, r, 0.0, r, //
            -r, 0.0, r, 0.0, //
            0.0, -r, 0.0, r,
        ],
    );
    SymplecticTransform::new(m).expect("balanced beam splitter is symplectic")
}

/// Single-mode phase-space rotation by `theta`:
/// `[[cos, sin], [-sin, cos]]`. At `theta = 0` this is the identity.
pub fn ps_transform(theta: f64) -> SymplecticTransform {
    let (s, c) = theta.sin_cos();
    let m = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
    SymplecticTransform::new(m).expect("rotation is symplectic")
}

/// Three-mode receiver covariance matrix `(A, B1, B3)`: mode B is split on
/// the balanced beam splitter with a vacuum ancilla, then the B2 branch is
/// rotated by `theta` before its P quadrature is measured.
pub fn build_receiver_cov(gamma_ab: &CovarianceMatrix, theta: f64) -> Result<CovarianceMatrix> {
    if gamma_ab.n_modes() != 2 {
        return Err(Error::NonPhysicalMatrix {
            reason: format!("expected a two-mode state, got {} modes", gamma_ab.n_modes()),
        });
    }
    let with_vacuum = gamma_ab.direct_sum(&CovarianceMatrix::vacuum(1));
    let y_bs = SymplecticTransform::identity(1).direct_sum(&bs_transform());
    let y_ps = SymplecticTransform::identity(2).direct_sum(&ps_transform(theta));
    with_vacuum.transform(&y_bs)?.transform(&y_ps)
}
