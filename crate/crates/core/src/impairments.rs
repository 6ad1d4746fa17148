//! Hardware-impairment statistics: IRS phase noise and additive transceiver
//! distortion.

use crate::config::PhaseNoiseConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::scenario::ChannelStatistics;

/// Concentration above which `I1/I0` switches from the continued fraction to
/// the large-argument expansion.
const BESSEL_SWITCH: f64 = 20.0;

/// Distribution of the i.i.d. IRS phase errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseNoiseModel {
    /// Perfect phase control.
    Ideal,
    Uniform,
    VonMises { kappa: f64 },
}

impl PhaseNoiseModel {
    /// `E[exp(j θ)]` of the phase error.
    pub fn characteristic_function(&self) -> f64 {
        match *self {
            PhaseNoiseModel::Ideal => 1.0,
            PhaseNoiseModel::Uniform => 0.0,
            PhaseNoiseModel::VonMises { kappa } => bessel_i1_i0(kappa),
        }
    }
}

impl From<&PhaseNoiseConfig> for PhaseNoiseModel {
    fn from(c: &PhaseNoiseConfig) -> Self {
        match *c {
            PhaseNoiseConfig::Ideal => PhaseNoiseModel::Ideal,
            PhaseNoiseConfig::Uniform => PhaseNoiseModel::Uniform,
            PhaseNoiseConfig::VonMises { kappa } => PhaseNoiseModel::VonMises { kappa },
        }
    }
}

pub fn characteristic_function(model: &PhaseNoiseModel) -> f64 {
    model.characteristic_function()
}

/// Ratio of modified Bessel functions `I1(x) / I0(x)` for `x >= 0`.
///
/// Below the switch point the ratio is evaluated with the Gauss continued
/// fraction `1/(2/x + 1/(4/x + 1/(6/x + ...)))` (modified Lentz); above it,
/// as the quotient of the two large-argument asymptotic series, which never
/// forms `I0` itself and therefore cannot overflow.
pub fn bessel_i1_i0(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < BESSEL_SWITCH {
        ratio_continued_fraction(x)
    } else {
        ratio_asymptotic(x)
    }
}

fn ratio_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    // g = b_0 + 1/(b_1 + 1/(b_2 + ...)), b_j = 2 (j + 1) / x, ratio = 1/g
    let mut g = 2.0 / x;
    let mut c = g;
    let mut d = 0.0;
    for j in 1..10_000 {
        let b = 2.0 * (j + 1) as f64 / x;
        d += b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + 1.0 / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        g *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / g
}

fn ratio_asymptotic(x: f64) -> f64 {
    // I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k
    let series = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let odd = (2 * k - 1) as f64;
            term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
            if term.abs() >= prev {
                break;
            }
            sum += term;
            prev = term.abs();
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    };
    series(1.0) / series(0.0)
}

/// `m² R + (1 - m²) I`. Returns the identity bit-exactly when `m = 0` or when
/// `r_irs` is itself the identity.
pub fn effective_irs_correlation(r_irs: &CMat, m: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Argument(format!("characteristic function {m} outside [0, 1]")));
    }
    let n = r_irs.nrows();
    if m == 0.0 || linalg::is_identity_exact(r_irs) {
        return Ok(linalg::identity(n));
    }
    let m2 = m * m;
    let mut out = linalg::scaled(r_irs, m2);
    linalg::add_diag(&mut out, &vec![1.0 - m2; n]);
    linalg::hermitize(&mut out);
    Ok(out)
}

/// Aggregate covariance `R_k = β_d R_BS + β_2 H1 Φ R̃_IRS Φ^H H1^H`.
///
/// With `Φ = α diag(s)` and `R̃ = m² R_IRS + (1 - m²) I`, the identity part
/// contributes `α² H1 diag(s) diag(s)^H H1^H = α² H1 H1^H` on the unit
/// circle; it is evaluated in that form, so the result is exactly phase
/// independent when `m = 0`. Off the circle (finite-difference probes) this
/// is the smooth extension whose Wirtinger derivative the gradient uses.
pub fn aggregate_covariance(stats: &ChannelStatistics, phases: &[c64], k: usize) -> Result<CMat> {
    let (m_ant, n_irs, users) = stats.dims();
    if k >= users {
        return Err(Error::Argument(format!("UE index {k} out of range for {users} UEs")));
    }
    if phases.len() != n_irs {
        return Err(Error::Argument(format!(
            "phase vector has {} entries for {n_irs} IRS elements",
            phases.len()
        )));
    }
    let mut out = linalg::scaled(&stats.r_bs[k], stats.beta_d[k]);
    if n_irs == 0 || stats.beta_2[k] == 0.0 {
        return Ok(out);
    }
    let m = stats.phase_noise.characteristic_function();
    let gain = stats.alpha * stats.alpha * stats.beta_2[k];
    let m2 = m * m;
    if m2 < 1.0 {
        linalg::add_scaled(&mut out, &stats.h1_gram, gain * (1.0 - m2));
    }
    if m2 > 0.0 {
        let steered = steered_los(&stats.h1, phases);
        let tmp: CMat = &steered * &stats.r_irs[k];
        let mut casc: CMat = &tmp * steered.adjoint();
        linalg::hermitize(&mut casc);
        linalg::add_scaled(&mut out, &casc, gain * m2);
    }
    debug_assert_eq!(out.nrows(), m_ant);
    linalg::hermitize(&mut out);
    Ok(out)
}

/// `H1 diag(s)`.
pub fn steered_los(h1: &CMat, phases: &[c64]) -> CMat {
    CMat::from_fn(h1.nrows(), h1.ncols(), |i, j| h1[(i, j)] * phases[j])
}

/// Additive transceiver distortion covariances.
///
/// `transmit` is `κ_UE Σ_i (p_i/M) h_i h_i^H` and `receive` holds the diagonal
/// of `κ_BS Σ_i (p_i/M) I ∘ h_i h_i^H`. The statistical form replaces
/// `h_i h_i^H` by `R_i`.
#[derive(Clone, Debug)]
pub struct DistortionCovariances {
    pub transmit: CMat,
    pub receive: Vec<f64>,
}

impl DistortionCovariances {
    /// From channel columns `h` (M×K).
    pub fn instantaneous(h: &CMat, p: &[f64], kappa_ue: f64, kappa_bs: f64) -> Self {
        let m = h.nrows();
        let mut transmit = linalg::zeros(m, m);
        let mut receive = vec![0.0; m];
        for (i, &pi) in p.iter().enumerate() {
            let w = pi / m as f64;
            for c in 0..m {
                let hc = h[(c, i)];
                receive[c] += kappa_bs * w * hc.norm_sqr();
                for r in 0..m {
                    transmit[(r, c)] += h[(r, i)] * hc.conj() * (kappa_ue * w);
                }
            }
        }
        linalg::hermitize(&mut transmit);
        DistortionCovariances { transmit, receive }
    }

    pub fn statistical(r: &[CMat], p: &[f64], kappa_ue: f64, kappa_bs: f64) -> Self {
        let m = r.first().map_or(0, |x| x.nrows());
        let mut transmit = linalg::zeros(m, m);
        let mut receive = vec![0.0; m];
        for (ri, &pi) in r.iter().zip(p) {
            let w = pi / m as f64;
            linalg::add_scaled(&mut transmit, ri, kappa_ue * w);
            for (c, d) in receive.iter_mut().enumerate() {
                *d += kappa_bs * w * ri[(c, c)].re;
            }
        }
        DistortionCovariances { transmit, receive }
    }

    pub fn receive_matrix(&self) -> CMat {
        linalg::diag_matrix(&self.receive)
    }
}
