//! Prepare-and-measure Monte Carlo engine: Gaussian modulation, linear
//! channel, rotated heterodyne detection, and the photocurrent-level
//! detector model.
//!
//! # Sign convention
//!
//! The stored data follow the entanglement-based receiver convention: the
//! balanced beam splitter maps the incoming mode `B` and a vacuum `v` to
//! `x_B1 = (x_B + x_v)/sqrt2` and `x_B2 = (-x_B + x_v)/sqrt2` (likewise in
//! p), and the rotated P-branch outcome is
//! `p_B3 = -sin(theta) x_B2 + cos(theta) p_B2`. The photocurrent route of
//! [`physical_detect`] produces `I2' = sin(theta) X2 - cos(theta) P2`,
//! which is exactly `-p_B3` when fed the same branch quadratures; the
//! beam-splitter convention is normative for everything persisted.

pub(crate) mod rng;
pub mod io;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::LinkParams;
use rng::{PulseStreams, StreamKind};

/// Gaussian-modulated pulse train: Rayleigh amplitudes, uniform phases, and
/// the equivalent quadratures `x = A cos(phi)`, `p = A sin(phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl Modulation {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Quadratures arriving at the receiver after the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

/// Heterodyne outcomes: X branch and rotated P branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub x_b1: Vec<f64>,
    pub p_b3: Vec<f64>,
}

/// Paired Alice/Bob samples from one simulated run.
///
/// `true_theta` records the angular error the batch was generated with; it
/// exists for tests and reporting and is never consulted by estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureBatch {
    pub seed: u64,
    pub n: usize,
    pub x_a: Vec<f64>,
    pub p_a: Vec<f64>,
    pub x_b1: Vec<f64>,
    pub p_b3: Vec<f64>,
    pub true_theta: f64,
    pub params: LinkParams,
}

/// Draws `n` i.i.d. Gaussian-modulated pulses of variance `v_a` per
/// quadrature. Deterministic in `(v_a, n, seed)`.
pub fn sample_modulation(v_a: f64, n: usize, seed: u64) -> Result<Modulation> {
    if !(v_a >= 0.0) || !v_a.is_finite() {
        return Err(Error::InvalidParam {
            name: "v_a",
            value: v_a,
            constraint: "V_A >= 0",
        });
    }
    if n == 0 {
        return Err(Error::InvalidParam {
            name: "n",
            value: 0.0,
            constraint: "N >= 1",
        });
    }
    let streams = PulseStreams::new(seed, StreamKind::Modulation);
    let mut out = Modulation {
        amplitude: vec![0.0; n],
        phase: vec![0.0; n],
        x: vec![0.0; n],
        p: vec![0.0; n],
    };
    let tau = std::f64::consts::TAU;
    out.amplitude
        .par_iter_mut()
        .zip(out.phase.par_iter_mut())
        .zip(out.x.par_iter_mut().zip(out.p.par_iter_mut()))
        .enumerate()
        .for_each(|(i, ((amp, ph), (x, p)))| {
            let mut rng = streams.pulse(i as u64);
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            // 1 - u1 lies in (0, 1], keeping the logarithm finite.
            let a = (-2.0 * v_a * (1.0 - u1).ln()).sqrt();
            let phi = tau * u2;
            *amp = a;
            *ph = phi;
            *x = a * phi.cos();
            *p = a * phi.sin();
        });
    Ok(out)
}

fn validate_channel(t: f64, eps: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) || !t.is_finite() {
        return Err(Error::InvalidParam {
            name: "t",
            value: t,
            constraint: "0 < T <= 1",
        });
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParam {
            name: "eps",
            value: eps,
            constraint: "eps >= 0",
        });
    }
    Ok(())
}

fn transmit_per_quadrature(
    samples: &Modulation,
    t_x: f64,
    eps_x: f64,
    t_p: f64,
    eps_p: f64,
    seed: u64,
) -> Result<ChannelOutput> {
    validate_channel(t_x, eps_x)?;
    validate_channel(t_p, eps_p)?;
    let streams = PulseStreams::new(seed, StreamKind::ChannelNoise);
    let gain_x = t_x.sqrt();
    let gain_p = t_p.sqrt();
    let sigma_x = (1.0 + t_x * eps_x).sqrt();
    let sigma_p = (1.0 + t_p * eps_p).sqrt();
    let n = samples.len();
    let mut out = ChannelOutput {
        x: vec![0.0; n],
        p: vec![0.0; n],
    };
    out.x
        .par_iter_mut()
        .zip(out.p.par_iter_mut())
        .enumerate()
        .for_each(|(i, (x, p))| {
            let mut rng = streams.pulse(i as u64);
            let nx: f64 = rng.sample(StandardNormal);
            let np: f64 = rng.sample(StandardNormal);
            *x = gain_x * samples.x[i] + sigma_x * nx;
            *p = gain_p * samples.p[i] + sigma_p * np;
        });
    Ok(out)
}

/// Sends the modulated pulses through a linear channel: each quadrature is
/// scaled by `sqrt(T)` and Gaussian noise of variance `1 + T * eps` (shot
/// noise plus input-referred excess noise) is added.
pub fn transmit(samples: &Modulation, t: f64, eps: f64, seed: u64) -> Result<ChannelOutput> {
    transmit_per_quadrature(samples, t, eps, t, eps, seed)
}

/// Heterodyne detection with the P branch rotated by `theta` (expected in
/// `(-pi/2, pi/2)`).
///
/// One vacuum mode of unit variance enters per pulse through the balanced
/// beam splitter; the returned outcomes are `x_B1` and
/// `p_B3 = -sin(theta) x_B2 + cos(theta) p_B2`.
pub fn detect_heterodyne(channel: &ChannelOutput, theta: f64, seed: u64) -> Detection {
    let streams = PulseStreams::new(seed, StreamKind::DetectionVacuum);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let (sin_t, cos_t) = theta.sin_cos();
    let n = channel.x.len();
    let mut out = Detection {
        x_b1: vec![0.0; n],
        p_b3: vec![0.0; n],
    };
    out.x_b1
        .par_iter_mut()
        .zip(out.p_b3.par_iter_mut())
        .enumerate()
        .for_each(|(i, (x_b1, p_b3))| {
            let mut rng = streams.pulse(i as u64);
            let x_v: f64 = rng.sample(StandardNormal);
            let p_v: f64 = rng.sample(StandardNormal);
            let x_b2 = (-channel.x[i] + x_v) * inv_sqrt2;
            let p_b2 = (-channel.p[i] + p_v) * inv_sqrt2;
            *x_b1 = (channel.x[i] + x_v) * inv_sqrt2;
            *p_b3 = -sin_t * x_b2 + cos_t * p_b2;
        });
    out
}

/// Runs the full prepare-and-measure chain for one link configuration.
///
/// The same user seed feeds the three independent stream families
/// (modulation, channel noise, detection vacuum), so a batch is a pure
/// function of `(params, n, seed)`.
pub fn simulate(params: &LinkParams, n: usize, seed: u64) -> Result<QuadratureBatch> {
    let modulation = sample_modulation(params.modulation_variance(), n, seed)?;
    let channel = transmit_per_quadrature(
        &modulation,
        params.t_x(),
        params.eps_x(),
        params.t_p(),
        params.eps_p(),
        seed,
    )?;
    let detection = detect_heterodyne(&channel, params.theta(), seed);
    Ok(QuadratureBatch {
        seed,
        n,
        x_a: modulation.x,
        p_a: modulation.p,
        x_b1: detection.x_b1,
        p_b3: detection.p_b3,
        true_theta: params.theta(),
        params: params.clone(),
    })
}

/// Parameters of the photocurrent-level detector model.
///
/// The model assumes the signal and local oscillator share one laser
/// (`f_signal = f_lo`) and that both picked up the same channel phase;
/// the constructor-style [`validate`](Self::validate) rejects anything
/// else. The phase shifter sits at `pi/2 - theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalDetectorParams {
    pub responsivity_1: f64,
    pub responsivity_2: f64,
    pub eta_1: f64,
    pub eta_2: f64,
    pub lo_amplitude: f64,
    pub f_signal: f64,
    pub f_lo: f64,
    pub laser_phase: f64,
    pub channel_phase_signal: f64,
    pub channel_phase_lo: f64,
    pub theta: f64,
}

impl PhysicalDetectorParams {
    /// Unit-gain detectors with the stated angular error.
    pub fn ideal(theta: f64) -> Self {
        Self {
            responsivity_1: 1.0,
            responsivity_2: 1.0,
            eta_1: 1.0,
            eta_2: 1.0,
            lo_amplitude: 1.0,
            f_signal: 1.9e14,
            f_lo: 1.9e14,
            laser_phase: 0.0,
            channel_phase_signal: 0.0,
            channel_phase_lo: 0.0,
            theta,
        }
    }

    /// Shifter phase `pi/2 - theta`.
    pub fn phase_shift(&self) -> f64 {
        std::f64::consts::FRAC_PI_2 - self.theta
    }

    pub fn validate(&self) -> Result<()> {
        for (name, gain) in [
            ("responsivity_1", self.responsivity_1),
            ("responsivity_2", self.responsivity_2),
            ("eta_1", self.eta_1),
            ("eta_2", self.eta_2),
            ("lo_amplitude", self.lo_amplitude),
        ] {
            if !(gain > 0.0) || !gain.is_finite() {
                return Err(Error::InvalidParam {
                    name: match name {
                        "responsivity_1" => "responsivity_1",
                        "responsivity_2" => "responsivity_2",
                        "eta_1" => "eta_1",
                        "eta_2" => "eta_2",
                        _ => "lo_amplitude",
                    },
                    value: gain,
                    constraint: "gain > 0",
                });
            }
        }
        if self.f_signal != self.f_lo {
            return Err(Error::InvalidParam {
                name: "f_signal - f_lo",
                value: self.f_signal - self.f_lo,
                constraint: "signal and LO share one laser (delta f = 0)",
            });
        }
        if self.channel_phase_signal != self.channel_phase_lo {
            return Err(Error::InvalidParam {
                name: "channel phase difference",
                value: self.channel_phase_signal - self.channel_phase_lo,
                constraint: "common channel phase (delta phi = 0)",
            });
        }
        Ok(())
    }
}

/// Normalized photocurrents of the two balanced detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalOutcome {
    /// `I1' = X1`.
    pub i1: Vec<f64>,
    /// `I2' = sin(theta) X2 - cos(theta) P2`.
    pub i2: Vec<f64>,
}

/// Photocurrent route of the detector: beats each pulse
/// `(amplitude, phase)` against the local oscillator, producing
/// `I1 = R1 eta1 A_LO X1` and
/// `I2 = R2 eta2 A_LO A cos(phi + pi/2 - theta)`, then divides out the
/// `R eta A_LO` gains (shot-noise normalization).
///
/// Expanding the shifted cosine gives
/// `I2' = sin(theta) X2 - cos(theta) P2`; the identity is exercised by the
/// tests rather than assumed. Note the beam-splitter convention stored in
/// batches has `p_B3 = -I2'` for identical branch quadratures.
pub fn physical_detect(
    amplitude: &[f64],
    phase: &[f64],
    params: &PhysicalDetectorParams,
) -> Result<PhysicalOutcome> {
    params.validate()?;
    if amplitude.len() != phase.len() {
        return Err(Error::DegenerateInput(format!(
            "amplitude and phase lengths differ: {} vs {}",
            amplitude.len(),
            phase.len()
        )));
    }
    let shift = params.phase_shift();
    let gain_1 = params.responsivity_1 * params.eta_1 * params.lo_amplitude;
    let gain_2 = params.responsivity_2 * params.eta_2 * params.lo_amplitude;
    let mut i1 = Vec::with_capacity(amplitude.len());
    let mut i2 = Vec::with_capacity(amplitude.len());
    for (&a, &phi) in amplitude.iter().zip(phase) {
        let raw_1 = gain_1 * a * phi.cos();
        let raw_2 = gain_2 * a * (phi + shift).cos();
        i1.push(raw_1 / gain_1);
        i2.push(raw_2 / gain_2);
    }
    Ok(PhysicalOutcome { i1, i2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEG: f64 = std::f64::consts::PI / 180.0;

    fn var(xs: &[f64]) -> f64 {
        xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn modulation_zero_variance_is_silent() {
        let m = sample_modulation(0.0, 100, 3).unwrap();
        assert!(m.x.iter().all(|&v| v == 0.0));
        assert!(m.p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn modulation_is_deterministic() {
        let a = sample_modulation(19.0, 500, 42).unwrap();
        let b = sample_modulation(19.0, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_modulation(19.0, 500, 43).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn modulation_quadratures_match_polar_form() {
        let m = sample_modulation(19.0, 200, 1).unwrap();
        for i in 0..m.len() {
            assert!((m.x[i] - m.amplitude[i] * m.phase[i].cos()).abs() < 1e-12);
            assert!((m.p[i] - m.amplitude[i] * m.phase[i].sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn modulation_rejects_bad_params() {
        assert!(sample_modulation(-1.0, 10, 0).is_err());
        assert!(sample_modulation(19.0, 0, 0).is_err());
    }

    #[test]
    fn transmit_identity_channel_leaves_shot_noise() {
        let m = sample_modulation(19.0, 50_000, 7).unwrap();
        let ch = transmit(&m, 1.0, 0.0, 7).unwrap();
        let resid: Vec<f64> = ch.x.iter().zip(&m.x).map(|(y, x)| y - x).collect();
        let v = var(&resid);
        assert!((v - 1.0).abs() < 0.05, "residual variance {v}");
    }

    #[test]
    fn transmit_rejects_bad_channel() {
        let m = sample_modulation(19.0, 10, 0).unwrap();
        assert!(transmit(&m, 0.0, 0.0, 0).is_err());
        assert!(transmit(&m, 1.1, 0.0, 0).is_err());
        assert!(transmit(&m, 0.5, -0.1, 0).is_err());
    }

    #[test]
    fn detection_at_zero_theta_is_plain_heterodyne() {
        let m = sample_modulation(19.0, 50_000, 11).unwrap();
        let ch = transmit(&m, 0.5, 0.01, 11).unwrap();
        let det = detect_heterodyne(&ch, 0.0, 11);
        let expected = (var(&ch.p) + 1.0) / 2.0;
        let v = var(&det.p_b3);
        assert!((v - expected).abs() < 5.0 * expected * (2.0 / 50_000f64).sqrt());
    }

    #[test]
    fn simulate_is_deterministic_across_partitions() {
        let params = LinkParams::symmetric(20.0, 0.5, 0.01, 0.95, 5.0 * DEG).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate(&params, 20_000, 9).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| simulate(&params, 20_000, 9).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn physical_detect_zero_theta_reads_x_and_minus_p() {
        let m = sample_modulation(19.0, 1000, 13).unwrap();
        let out = physical_detect(&m.amplitude, &m.phase, &PhysicalDetectorParams::ideal(0.0)).unwrap();
        for i in 0..m.len() {
            assert!((out.i1[i] - m.x[i]).abs() < 1e-12);
            assert!((out.i2[i] + m.p[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn physical_detect_gain_cancels() {
        let m = sample_modulation(19.0, 200, 5).unwrap();
        let mut params = PhysicalDetectorParams::ideal(0.2);
        let base = physical_detect(&m.amplitude, &m.phase, &params).unwrap();
        params.lo_amplitude *= 2.0;
        let doubled = physical_detect(&m.amplitude, &m.phase, &params).unwrap();
        for i in 0..m.len() {
            assert!((base.i1[i] - doubled.i1[i]).abs() < 1e-12);
            assert!((base.i2[i] - doubled.i2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn physical_detect_matches_expanded_form_at_30_degrees() {
        let theta = 30.0 * DEG;
        let (a, phi) = (1.0, 0.7);
        let x2 = a * f64::cos(phi);
        let p2 = a * f64::sin(phi);
        let out = physical_detect(&[a], &[phi], &PhysicalDetectorParams::ideal(theta)).unwrap();
        let expected = 0.5 * x2 - 0.86603 * p2;
        assert!((out.i2[0] - expected).abs() < 1e-5);
        assert!((out.i2[0] - (theta.sin() * x2 - theta.cos() * p2)).abs() < 1e-12);
    }

    #[test]
    fn physical_detect_rejects_bad_params() {
        let mut params = PhysicalDetectorParams::ideal(0.0);
        params.responsivity_2 = 0.0;
        assert!(physical_detect(&[1.0], &[0.0], &params).is_err());

        let mut params = PhysicalDetectorParams::ideal(0.0);
        params.f_lo += 1.0;
        assert!(physical_detect(&[1.0], &[0.0], &params).is_err());
    }

    #[test]
    fn physical_route_is_negated_eb_branch() {
        // Feeding the beam-splitter branch quadratures through the
        // photocurrent formula must reproduce -p_B3 pulse by pulse.
        let theta = 12.0 * DEG;
        let x2: [f64; 3] = [0.3, -1.1, 2.4];
        let p2: [f64; 3] = [0.9, 0.2, -0.7];
        let amp: Vec<f64> = x2.iter().zip(&p2).map(|(x, p)| x.hypot(*p)).collect();
        let phase: Vec<f64> = x2.iter().zip(&p2).map(|(x, p)| p.atan2(*x)).collect();
        let out = physical_detect(&amp, &phase, &PhysicalDetectorParams::ideal(theta)).unwrap();
        for i in 0..x2.len() {
            let p_b3 = -theta.sin() * x2[i] + theta.cos() * p2[i];
            assert!((out.i2[i] + p_b3).abs() < 1e-12);
        }
    }
}
