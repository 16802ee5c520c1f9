//! Statistical back end: transmittance and excess-noise estimators, the
//! angular-error bias relations and their inversion, the angular-error
//! estimator, and sample-level compensation.
//!
//! # Heterodyne convention
//!
//! Branch outcomes carry the beam splitter's `1/sqrt2`; estimators work on
//! the rescaled data `y~ = sqrt2 * branch`, whose second moment is the
//! channel-output variance plus two vacuum units:
//! `T*V_A + T*eps + 2` for an ideal branch. The transmittance estimate is
//! `<alice * y~>^2 / V_A^2` and the excess-noise estimate
//! `(<y~^2> - 2)/T - V_A`, under which the rotated P branch lands exactly
//! on the biased parameters of [`predict_biased_params`].
//!
//! Sample moments are uncentered (the protocol is zero-mean); the
//! `*_centered` variants remove the sample means first for robustness
//! checks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::rng::{PulseStreams, StreamKind};
use crate::simulator::QuadratureBatch;
use crate::tol;

/// Pairwise summation with a fixed association order, so results are
/// bit-identical however the caller parallelizes around it.
fn pairwise_sum(values: &mut dyn FnMut(usize) -> f64, lo: usize, hi: usize) -> f64 {
    const BLOCK: usize = 128;
    if hi - lo <= BLOCK {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += values(i);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum(values, lo, mid) + pairwise_sum(values, mid, hi)
}

/// Uncentered sample second moment `<x^2>`.
pub fn second_moment(xs: &[f64]) -> f64 {
    let mut f = |i: usize| xs[i] * xs[i];
    pairwise_sum(&mut f, 0, xs.len()) / xs.len() as f64
}

/// Uncentered sample cross moment `<x y>`.
pub fn cross_moment(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut f = |i: usize| xs[i] * ys[i];
    pairwise_sum(&mut f, 0, xs.len()) / xs.len() as f64
}

fn mean(xs: &[f64]) -> f64 {
    let mut f = |i: usize| xs[i];
    pairwise_sum(&mut f, 0, xs.len()) / xs.len() as f64
}

/// Transmittance and excess-noise estimates from Alice's data and one raw
/// Bob branch (outcomes on the post-beam-splitter scale).
///
/// Unbiased for the X branch and, at zero angular error, for the P branch;
/// a rotated P branch lands on the biased values of
/// [`predict_biased_params`] instead.
pub fn estimate_t_eps(alice: &[f64], bob_branch: &[f64], v_a: f64) -> Result<(f64, f64)> {
    estimate_t_eps_inner(alice, bob_branch, v_a, false)
}

/// Mean-removing variant of [`estimate_t_eps`] for robustness checks.
pub fn estimate_t_eps_centered(alice: &[f64], bob_branch: &[f64], v_a: f64) -> Result<(f64, f64)> {
    estimate_t_eps_inner(alice, bob_branch, v_a, true)
}

fn estimate_t_eps_inner(
    alice: &[f64],
    bob_branch: &[f64],
    v_a: f64,
    remove_mean: bool,
) -> Result<(f64, f64)> {
    if alice.len() != bob_branch.len() {
        return Err(Error::DegenerateInput(format!(
            "array lengths differ: {} vs {}",
            alice.len(),
            bob_branch.len()
        )));
    }
    if alice.len() < 2 {
        return Err(Error::DegenerateInput("need at least two samples".into()));
    }
    if !(v_a > 0.0) {
        return Err(Error::InvalidParam {
            name: "v_a",
            value: v_a,
            constraint: "V_A > 0",
        });
    }
    let (mu_a, mu_b) = if remove_mean {
        (mean(alice), mean(bob_branch))
    } else {
        (0.0, 0.0)
    };
    let n = alice.len() as f64;
    let mut fc = |i: usize| (alice[i] - mu_a) * (bob_branch[i] - mu_b);
    let cross_raw = pairwise_sum(&mut fc, 0, alice.len()) / n;
    let mut fs = |i: usize| {
        let b = bob_branch[i] - mu_b;
        b * b
    };
    let second_raw = pairwise_sum(&mut fs, 0, alice.len()) / n;

    let cross = std::f64::consts::SQRT_2 * cross_raw;
    let second = 2.0 * second_raw;
    if cross == 0.0 {
        return Err(Error::DegenerateInput(
            "zero Alice-Bob covariance leaves the transmittance estimate at 0".into(),
        ));
    }
    let t_hat = (cross / v_a) * (cross / v_a);
    let eps_hat = (second - 2.0) / t_hat - v_a;
    Ok((t_hat, eps_hat))
}

/// Biased P-branch parameters seen by parties unaware of an angular error
/// `theta`: `T' = cos^2(theta) * T` and
/// `eps' = eps / cos^2(theta) + tan^2(theta) * V_A`.
pub fn predict_biased_params(t_p: f64, eps_p: f64, v_a: f64, theta: f64) -> (f64, f64) {
    let cos2 = theta.cos() * theta.cos();
    let tan = theta.tan();
    (cos2 * t_p, eps_p / cos2 + tan * tan * v_a)
}

/// Result of undoing the angular-error bias on estimated parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasInversion {
    pub t_p: f64,
    /// Reported unclamped; statistical fluctuation can push it below zero,
    /// flagged by `negative_noise`.
    pub eps_p: f64,
    pub negative_noise: bool,
}

/// Algebraic inverse of [`predict_biased_params`]:
/// `T = T' / cos^2(theta)` and `eps = (eps' - tan^2(theta) V_A) cos^2(theta)`.
pub fn invert_bias(t_p_biased: f64, eps_p_biased: f64, v_a: f64, theta: f64) -> Result<BiasInversion> {
    if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParam {
            name: "theta",
            value: theta,
            constraint: "|theta| < pi/2",
        });
    }
    if !(t_p_biased > 0.0) {
        return Err(Error::InvalidParam {
            name: "t_p_biased",
            value: t_p_biased,
            constraint: "T' > 0",
        });
    }
    let cos2 = theta.cos() * theta.cos();
    let tan = theta.tan();
    let t_p = t_p_biased / cos2;
    let eps_p = (eps_p_biased - tan * tan * v_a) * cos2;
    Ok(BiasInversion {
        t_p,
        eps_p,
        negative_noise: eps_p < 0.0,
    })
}

/// Angular-error estimate with its inputs and the clamping flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta_hat: f64,
    /// True when statistical noise pushed the arcsine argument past +-1
    /// and it was clipped.
    pub clamped: bool,
    pub cov_pb3_xb1: f64,
    pub v_b1_hat: f64,
    pub n: usize,
}

/// Estimates the angular error from the X-branch / P-branch cross
/// statistics: `theta = arcsin(<p_B3 x_B1> / (V_B1 - 1))`.
pub fn estimate_theta(batch: &QuadratureBatch) -> Result<ThetaEstimate> {
    if batch.n < 2 {
        return Err(Error::DegenerateInput("need at least two samples".into()));
    }
    let v_b1 = second_moment(&batch.x_b1);
    if v_b1 <= 1.0 + tol::MIN_SIGNAL_VARIANCE {
        return Err(Error::InsufficientSignal { v_b1 });
    }
    let cov = cross_moment(&batch.p_b3, &batch.x_b1);
    let ratio = cov / (v_b1 - 1.0);
    let clamped = ratio.abs() > 1.0;
    let theta_hat = ratio.clamp(-1.0, 1.0).asin();
    Ok(ThetaEstimate {
        theta_hat,
        clamped,
        cov_pb3_xb1: cov,
        v_b1_hat: v_b1,
        n: batch.n,
    })
}

/// Sign of the proxy used for the unobserved `x_B2` during compensation.
///
/// Under the beam-splitter convention the signal enters `x_B1` and `x_B2`
/// with opposite signs, so `-x_B1` is the proxy that cancels the rotated-in
/// signal term; `+x_B1` reproduces the naive reading and is kept selectable
/// for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProxySign {
    Negated,
    Direct,
}

impl ProxySign {
    fn factor(self) -> f64 {
        match self {
            ProxySign::Negated => -1.0,
            ProxySign::Direct => 1.0,
        }
    }
}

/// Undoes the rotation on the P-branch data:
/// `p_B2_hat = (p_B3 + sin(theta_hat) * s * x_B1) / cos(theta_hat)` with
/// the default proxy sign `s = -1`.
///
/// The vacuum part of the proxy does not cancel, leaving a residual
/// variance of `2 tan^2(theta)` shot-noise units on the output.
pub fn compensate(batch: &QuadratureBatch, theta_hat: f64) -> Vec<f64> {
    compensate_with_sign(batch, theta_hat, ProxySign::Negated)
}

pub fn compensate_with_sign(batch: &QuadratureBatch, theta_hat: f64, sign: ProxySign) -> Vec<f64> {
    let (sin_t, cos_t) = theta_hat.sin_cos();
    let s = sign.factor();
    batch
        .p_b3
        .iter()
        .zip(&batch.x_b1)
        .map(|(&p, &x)| (p + sin_t * s * x) / cos_t)
        .collect()
}

/// Flat summary of everything the estimators extract from one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub t_hat_x: f64,
    pub t_hat_p: f64,
    pub eps_hat_x: f64,
    pub eps_hat_p: f64,
    pub theta_hat: f64,
    pub clamped: bool,
    pub cov_pb3_xb1: f64,
    pub v_b1_hat: f64,
    pub n: usize,
}

/// Runs both branch estimators and the angular-error estimator on a batch,
/// using the modulation variance recorded in the batch parameters.
pub fn estimate_batch(batch: &QuadratureBatch) -> Result<EstimationReport> {
    let v_a = batch.params.modulation_variance();
    let (t_hat_x, eps_hat_x) = estimate_t_eps(&batch.x_a, &batch.x_b1, v_a)?;
    let (t_hat_p, eps_hat_p) = estimate_t_eps(&batch.p_a, &batch.p_b3, v_a)?;
    let theta = estimate_theta(batch)?;
    Ok(EstimationReport {
        t_hat_x,
        t_hat_p,
        eps_hat_x,
        eps_hat_p,
        theta_hat: theta.theta_hat,
        clamped: theta.clamped,
        cov_pb3_xb1: theta.cov_pb3_xb1,
        v_b1_hat: theta.v_b1_hat,
        n: theta.n,
    })
}

/// Bootstrap standard errors of an arbitrary vector statistic.
///
/// `stat` receives a resampled index set (with replacement, `n` out of
/// `n`) and returns the statistic components; the standard deviation of
/// each component across `resamples` replicates is returned. Replicates
/// draw from counter-based streams of `seed`, so the output is
/// deterministic and independent of parallel scheduling.
pub fn bootstrap_se<F>(n: usize, resamples: usize, seed: u64, stat: F) -> Vec<f64>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    assert!(n >= 1 && resamples >= 2);
    let streams = PulseStreams::new(seed, StreamKind::Bootstrap);
    let replicates: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = streams.pulse(r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            stat(&idx)
        })
        .collect();
    let k = replicates[0].len();
    let m = resamples as f64;
    (0..k)
        .map(|j| {
            let mut mean_j = 0.0;
            for rep in &replicates {
                mean_j += rep[j];
            }
            mean_j /= m;
            let mut ss = 0.0;
            for rep in &replicates {
                let d = rep[j] - mean_j;
                ss += d * d;
            }
            (ss / (m - 1.0)).sqrt()
        })
        .collect()
}

/// Second moments of a resampled batch, for bootstrap statistics that only
/// need pair moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMoments {
    pub xa_xb1: f64,
    pub pa_pb3: f64,
    pub xb1_xb1: f64,
    pub pb3_pb3: f64,
    pub xb1_pb3: f64,
    pub n: usize,
}

impl BatchMoments {
    pub fn from_indices(batch: &QuadratureBatch, idx: &[usize]) -> Self {
        let n = idx.len();
        let mut acc = [0.0f64; 5];
        let mut f = |i: usize| {
            let j = idx[i];
            batch.x_a[j] * batch.x_b1[j]
        };
        acc[0] = pairwise_sum(&mut f, 0, n);
        let mut f = |i: usize| {
            let j = idx[i];
            batch.p_a[j] * batch.p_b3[j]
        };
        acc[1] = pairwise_sum(&mut f, 0, n);
        let mut f = |i: usize| {
            let j = idx[i];
            batch.x_b1[j] * batch.x_b1[j]
        };
        acc[2] = pairwise_sum(&mut f, 0, n);
        let mut f = |i: usize| {
            let j = idx[i];
            batch.p_b3[j] * batch.p_b3[j]
        };
        acc[3] = pairwise_sum(&mut f, 0, n);
        let mut f = |i: usize| {
            let j = idx[i];
            batch.x_b1[j] * batch.p_b3[j]
        };
        acc[4] = pairwise_sum(&mut f, 0, n);
        let nf = n as f64;
        BatchMoments {
            xa_xb1: acc[0] / nf,
            pa_pb3: acc[1] / nf,
            xb1_xb1: acc[2] / nf,
            pb3_pb3: acc[3] / nf,
            xb1_pb3: acc[4] / nf,
            n,
        }
    }

    /// `(T_hat, eps_hat)` for the X branch from stored moments.
    pub fn t_eps_x(&self, v_a: f64) -> (f64, f64) {
        let cross = std::f64::consts::SQRT_2 * self.xa_xb1;
        let t = (cross / v_a) * (cross / v_a);
        (t, (2.0 * self.xb1_xb1 - 2.0) / t - v_a)
    }

    /// `(T_hat, eps_hat)` for the P branch from stored moments.
    pub fn t_eps_p(&self, v_a: f64) -> (f64, f64) {
        let cross = std::f64::consts::SQRT_2 * self.pa_pb3;
        let t = (cross / v_a) * (cross / v_a);
        (t, (2.0 * self.pb3_pb3 - 2.0) / t - v_a)
    }

    /// Angular-error estimate from stored moments (clamped arcsine).
    pub fn theta(&self) -> f64 {
        (self.xb1_pb3 / (self.xb1_xb1 - 1.0)).clamp(-1.0, 1.0).asin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::LinkParams;

    const DEG: f64 = std::f64::consts::PI / 180.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn batch_from_arrays(x_b1: Vec<f64>, p_b3: Vec<f64>) -> QuadratureBatch {
        let n = x_b1.len();
        QuadratureBatch {
            seed: 0,
            n,
            x_a: vec![0.0; n],
            p_a: vec![0.0; n],
            x_b1,
            p_b3,
            true_theta: 0.0,
            params: LinkParams::symmetric(20.0, 0.5, 0.01, 0.95, 0.0).unwrap(),
        }
    }

    #[test]
    fn estimator_exact_on_synthetic_identity_channel() {
        // Sample moments arranged exactly: <a^2> = V_A, <a y~> = V_A,
        // <y~^2> = V_A + 2.
        let v_a = 19.0f64;
        let a = v_a.sqrt();
        let w = std::f64::consts::SQRT_2;
        let alice = vec![a, a, -a, -a];
        let y_tilde = [a + w, a - w, -a - w, -a + w];
        let bob: Vec<f64> = y_tilde.iter().map(|y| y / std::f64::consts::SQRT_2).collect();
        let (t, eps) = estimate_t_eps(&alice, &bob, v_a).unwrap();
        assert!(close(t, 1.0, 1e-12));
        assert!(close(eps, 0.0, 1e-10));
    }

    #[test]
    fn estimator_rejects_degenerate_input() {
        assert!(estimate_t_eps(&[1.0, -1.0], &[1.0, 1.0], 19.0).is_err());
        assert!(estimate_t_eps(&[1.0], &[1.0], 19.0).is_err());
        assert!(estimate_t_eps(&[1.0, 2.0], &[1.0], 19.0).is_err());
    }

    #[test]
    fn bias_prediction_matches_known_values() {
        let (t, e) = predict_biased_params(0.5, 0.01, 19.0, 0.0);
        assert_eq!((t, e), (0.5, 0.01));

        let (t, e) = predict_biased_params(0.5, 0.01, 19.0, 10.0 * DEG);
        assert!(close(t, 0.48488, 1e-4));
        assert!(close(e, 0.60104, 1e-4));

        let (t, e) = predict_biased_params(0.5, 0.01, 19.0, 45.0 * DEG);
        assert!(close(t, 0.25, 1e-12));
        assert!(close(e, 0.02 + 19.0, 1e-12));
    }

    #[test]
    fn bias_inversion_round_trips() {
        let (t_b, e_b) = predict_biased_params(0.5, 0.01, 19.0, 10.0 * DEG);
        let inv = invert_bias(t_b, e_b, 19.0, 10.0 * DEG).unwrap();
        assert!(close(inv.t_p, 0.5, tol::BIAS_ROUND_TRIP));
        assert!(close(inv.eps_p, 0.01, tol::BIAS_ROUND_TRIP));
        assert!(!inv.negative_noise);

        let id = invert_bias(0.3, 0.2, 19.0, 0.0).unwrap();
        assert_eq!((id.t_p, id.eps_p), (0.3, 0.2));
    }

    #[test]
    fn bias_inversion_flags_negative_noise() {
        let inv = invert_bias(0.48, 0.1, 19.0, 10.0 * DEG).unwrap();
        assert!(inv.negative_noise);
        assert!(inv.eps_p < 0.0);
    }

    #[test]
    fn theta_from_constructed_moments() {
        let v_b1 = 6.0f64;
        let cov = 5.0 * (5.0 * DEG).sin();
        let batch = batch_from_arrays(
            vec![v_b1.sqrt(), -v_b1.sqrt()],
            vec![cov / v_b1.sqrt(), -cov / v_b1.sqrt()],
        );
        let est = estimate_theta(&batch).unwrap();
        assert!(close(est.theta_hat, 5.0 * DEG, 1e-12));
        assert!(!est.clamped);
    }

    #[test]
    fn theta_zero_covariance_gives_zero() {
        let batch = batch_from_arrays(vec![2.0, -2.0], vec![1.0, 1.0]);
        let est = estimate_theta(&batch).unwrap();
        assert_eq!(est.theta_hat, 0.0);
    }

    #[test]
    fn theta_requires_signal_above_shot_noise() {
        let batch = batch_from_arrays(vec![1.0, -1.0], vec![0.5, -0.5]);
        assert!(matches!(
            estimate_theta(&batch),
            Err(Error::InsufficientSignal { .. })
        ));
    }

    #[test]
    fn theta_clamps_out_of_range_ratio() {
        let batch = batch_from_arrays(vec![2.0, -2.0], vec![4.0, -4.0]);
        let est = estimate_theta(&batch).unwrap();
        assert!(est.clamped);
        assert!(close(est.theta_hat, std::f64::consts::FRAC_PI_2, 1e-12));
    }

    #[test]
    fn compensate_at_zero_is_identity() {
        let batch = batch_from_arrays(vec![1.0, 2.0], vec![0.3, -0.4]);
        assert_eq!(compensate(&batch, 0.0), batch.p_b3);
    }

    #[test]
    fn bootstrap_se_scales_with_spread() {
        // Statistic = mean of resampled values; its bootstrap SE must be
        // near sigma/sqrt(n).
        let n = 4000;
        let data: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let se = bootstrap_se(n, 64, 9, |idx| {
            vec![idx.iter().map(|&j| data[j]).sum::<f64>() / n as f64]
        });
        let expected = 1.0 / (n as f64).sqrt();
        assert!(se[0] > 0.5 * expected && se[0] < 2.0 * expected, "se = {}", se[0]);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let data: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let run = || {
            bootstrap_se(100, 16, 3, |idx| {
                vec![idx.iter().map(|&j| data[j]).sum::<f64>()]
            })
        };
        assert_eq!(run(), run());
    }
}
