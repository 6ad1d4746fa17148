//! Random channel realizations for Monte Carlo validation.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::impairments::PhaseNoiseModel;
use crate::linalg::{self, c64, CMat};
use crate::scenario::ChannelStatistics;

pub const STREAM_ANGLES: u64 = 1;
pub const STREAM_INITIAL_PHASES: u64 = 2;
pub const STREAM_PROBE: u64 = 3;
/// Monte Carlo trial `t` uses stream `STREAM_TRIALS + t`.
pub const STREAM_TRIALS: u64 = 1 << 32;

/// Independent ChaCha stream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `CN(0, 1)` draw.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    c64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

/// Von Mises draw with zero mean direction (Best & Fisher, 1979). Falls back
/// to the uniform law for negligible concentration and to a wrapped normal
/// approximation when the rejection constants lose precision.
pub fn von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return uniform_angle(rng);
    }
    if kappa > 1e6 {
        let z: f64 = rng.sample(StandardNormal);
        return wrap(z / kappa.sqrt());
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -PI + 2.0 * PI * rng.random::<f64>()
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

pub fn draw_phase_error<R: Rng + ?Sized>(rng: &mut R, model: &PhaseNoiseModel) -> f64 {
    match *model {
        PhaseNoiseModel::Ideal => 0.0,
        PhaseNoiseModel::Uniform => uniform_angle(rng),
        PhaseNoiseModel::VonMises { kappa } => von_mises(rng, kappa),
    }
}

/// One realization of all channels; column `k` belongs to UE `k`.
#[derive(Clone, Debug)]
pub struct ChannelSample {
    pub h_d: CMat,
    pub h_2: CMat,
    pub phase_errors: Vec<f64>,
    /// Composite channels `h_d + H1 Φ Φ̃ h_2`.
    pub h: CMat,
}

/// Precomputed square roots for repeated draws at fixed statistics.
pub struct ChannelSampler {
    direct: Vec<CMat>,
    irs: Vec<CMat>,
    /// `α H1 diag(s)`.
    steered: CMat,
    model: PhaseNoiseModel,
}

impl ChannelSampler {
    pub fn new(stats: &ChannelStatistics, model: PhaseNoiseModel) -> Result<Self> {
        let direct = stats
            .r_bs
            .iter()
            .zip(&stats.beta_d)
            .map(|(r, b)| Ok(linalg::scaled(&linalg::psd_sqrt(r)?, b.sqrt())))
            .collect::<Result<Vec<_>>>()?;
        let irs = stats
            .r_irs
            .iter()
            .zip(&stats.beta_2)
            .map(|(r, b)| Ok(linalg::scaled(&linalg::psd_sqrt(r)?, b.sqrt())))
            .collect::<Result<Vec<_>>>()?;
        let steered = linalg::scaled(
            &crate::impairments::steered_los(&stats.h1, stats.phases()),
            stats.alpha,
        );
        Ok(ChannelSampler { direct, irs, steered, model })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSample {
        let m = self.steered.nrows();
        let n = self.steered.ncols();
        let k = self.direct.len();
        let z_d = CMat::from_fn(m, k, |_, _| complex_normal(rng));
        let z_2 = CMat::from_fn(n, k, |_, _| complex_normal(rng));
        let phase_errors: Vec<f64> = (0..n).map(|_| draw_phase_error(rng, &self.model)).collect();
        let mut h_d = linalg::zeros(m, k);
        let mut h_2 = linalg::zeros(n, k);
        for u in 0..k {
            let a: CMat = &self.direct[u] * z_d.col(u).as_mat();
            let b: CMat = &self.irs[u] * z_2.col(u).as_mat();
            for i in 0..m {
                h_d[(i, u)] = a[(i, 0)];
            }
            for i in 0..n {
                h_2[(i, u)] = b[(i, 0)];
            }
        }
        let rotated = CMat::from_fn(n, k, |i, u| h_2[(i, u)] * c64::from_polar(1.0, phase_errors[i]));
        let mut h = h_d.clone();
        if n > 0 {
            let casc: CMat = &self.steered * &rotated;
            h += &casc;
        }
        ChannelSample { h_d, h_2, phase_errors, h }
    }
}

pub fn draw_sample<R: Rng + ?Sized>(
    stats: &ChannelStatistics,
    model: PhaseNoiseModel,
    rng: &mut R,
) -> Result<ChannelSample> {
    Ok(ChannelSampler::new(stats, model)?.draw(rng))
}
