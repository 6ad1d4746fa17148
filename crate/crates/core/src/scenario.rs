//! Deterministic system statistics: path losses, correlation matrices, the
//! BS–IRS line-of-sight matrix and the per-UE aggregate covariances.

use std::f64::consts::PI;

use rand::Rng;

use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};
use crate::impairments::{self, PhaseNoiseModel};
use crate::linalg::{self, c64, CMat};
use crate::sampler;

/// Large-scale fading coefficients (linear).
#[derive(Clone, Debug, PartialEq)]
pub struct PathLosses {
    pub beta_1: f64,
    pub beta_2: Vec<f64>,
    pub beta_d: Vec<f64>,
}

/// `10^(-(C + 10 ν log10 d)/10)`.
pub fn attenuation(constant_db: f64, exponent: f64, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Config(format!("non-positive link distance {distance}")));
    }
    Ok(db_to_linear(-(constant_db + 10.0 * exponent * distance.log10())))
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// UMi path losses without antenna gains.
pub fn path_losses(cfg: &SystemConfig) -> Result<PathLosses> {
    let g = &cfg.geometry;
    let pl = &cfg.path_loss;
    let beta_1 = attenuation(pl.bs_irs_constant_db, pl.bs_irs_exponent, distance(&g.bs, &g.irs))?;
    let users = cfg.user_positions();
    let mut beta_2 = Vec::with_capacity(users.len());
    let mut beta_d = Vec::with_capacity(users.len());
    for u in &users {
        beta_2.push(attenuation(pl.irs_ue_constant_db, pl.irs_ue_exponent, distance(&g.irs, u))?);
        beta_d.push(
            attenuation(pl.irs_ue_constant_db, pl.irs_ue_exponent, distance(&g.bs, u))?
                * db_to_linear(-pl.penetration_loss_db),
        );
    }
    Ok(PathLosses { beta_1, beta_2, beta_d })
}

/// Path losses with the BS antenna and IRS element gains applied: the BS gain
/// to every link ending at the BS, the IRS gain once per IRS hop.
pub fn channel_gains(cfg: &SystemConfig) -> Result<PathLosses> {
    let pl = path_losses(cfg)?;
    let g_bs = db_to_linear(cfg.geometry.bs_antenna_gain_dbi);
    let g_irs = db_to_linear(cfg.geometry.irs_element_gain_dbi);
    Ok(PathLosses {
        beta_1: pl.beta_1 * g_bs * g_irs,
        beta_2: pl.beta_2.iter().map(|b| b * g_irs).collect(),
        beta_d: pl.beta_d.iter().map(|b| b * g_bs).collect(),
    })
}

/// Departure/arrival angles of the BS–IRS link. Entry `i` of each vector
/// serves both as the IRS-side angle of element `i` and the BS-side angle of
/// antenna `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct LosAngles {
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
}

impl LosAngles {
    pub fn draw<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut theta = Vec::with_capacity(len);
        let mut psi = Vec::with_capacity(len);
        for _ in 0..len {
            theta.push(rng.random::<f64>() * PI);
            psi.push(rng.random::<f64>() * 2.0 * PI);
        }
        LosAngles { theta, psi }
    }

    pub fn zeros(len: usize) -> Self {
        LosAngles { theta: vec![0.0; len], psi: vec![0.0; len] }
    }

    /// Angles frozen for a configuration, from its seed.
    pub fn for_config(cfg: &SystemConfig) -> Self {
        let mut rng = sampler::substream(cfg.seed, sampler::STREAM_ANGLES);
        Self::draw(cfg.bs_antennas.max(cfg.irs_elements), &mut rng)
    }
}

/// The M×N LoS matrix. Entry `(m, n)` is
/// `√β1 exp(j 2π/λ [m d_BS sin θ1_n sin ψ1_n + n d_IRS sin θ2_m sin ψ2_m])`
/// with zero-based indices, `θ2_m = π − θ1_m` and `ψ2_m = π + ψ1_m`.
pub fn build_los_matrix(cfg: &SystemConfig, angles: &LosAngles) -> Result<CMat> {
    let beta_1 = channel_gains(cfg)?.beta_1;
    los_matrix(cfg, angles, beta_1)
}

pub(crate) fn los_matrix(cfg: &SystemConfig, angles: &LosAngles, beta_1: f64) -> Result<CMat> {
    let (m, n) = (cfg.bs_antennas, cfg.irs_elements);
    let lambda = cfg.wavelength();
    if !(lambda > 0.0) {
        return Err(Error::Config("wavelength must be positive".into()));
    }
    if !(beta_1 >= 0.0) {
        return Err(Error::Config(format!("negative path loss {beta_1}")));
    }
    let need = m.max(n);
    if angles.theta.len() < need || angles.psi.len() < need {
        return Err(Error::Argument(format!("need {need} LoS angles, got {}", angles.theta.len())));
    }
    let d_bs = cfg.geometry.bs_spacing * lambda;
    let d_irs = cfg.geometry.irs_spacing * lambda;
    let k0 = 2.0 * PI / lambda;
    let amp = beta_1.sqrt();
    Ok(CMat::from_fn(m, n, |i, j| {
        let depart = angles.theta[j].sin() * angles.psi[j].sin();
        let arrive = (PI - angles.theta[i]).sin() * (PI + angles.psi[i]).sin();
        let phase = k0 * (i as f64 * d_bs * depart + j as f64 * d_irs * arrive);
        c64::from_polar(amp, phase)
    }))
}

/// Exponential correlation `ρ^{|i-j|}`; trace `M` by construction.
pub fn bs_correlation(m: usize, rho: f64) -> CMat {
    CMat::from_fn(m, m, |i, j| {
        if i == j {
            linalg::re(1.0)
        } else {
            linalg::re(rho.powi(i.abs_diff(j) as i32))
        }
    })
}

/// Element centres of an `n`-element planar array with the given pitch,
/// filled row by row. `columns = 0` picks `ceil(sqrt(n))`.
pub fn upa_positions(n: usize, columns: usize, pitch: f64) -> Vec<[f64; 2]> {
    let cols = if columns == 0 { (n as f64).sqrt().ceil().max(1.0) as usize } else { columns };
    (0..n).map(|i| [(i % cols) as f64 * pitch, (i / cols) as f64 * pitch]).collect()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Isotropic-scattering IRS correlation `sinc(2‖u_a − u_b‖/λ)` over a planar
/// grid with element size `element_size` (in wavelengths), PSD-repaired and
/// normalized to trace `n`.
pub fn irs_correlation(n: usize, columns: usize, element_size: f64) -> Result<CMat> {
    if n == 0 {
        return Ok(linalg::zeros(0, 0));
    }
    let pos = upa_positions(n, columns, element_size);
    let raw = CMat::from_fn(n, n, |a, b| {
        let d = ((pos[a][0] - pos[b][0]).powi(2) + (pos[a][1] - pos[b][1]).powi(2)).sqrt();
        linalg::re(sinc(2.0 * d))
    });
    linalg::psd_repair(&raw, n as f64)
}

/// Per-UE `(R_BS, R_IRS)`; all UEs share the same array geometry.
pub fn build_correlation_matrices(cfg: &SystemConfig) -> Result<(Vec<CMat>, Vec<CMat>)> {
    let m = cfg.bs_antennas;
    let n = cfg.irs_elements;
    let c = &cfg.correlation;
    let r_bs = bs_correlation(m, c.bs_coefficient);
    let r_irs = if c.irs_correlated {
        irs_correlation(n, cfg.geometry.irs_columns, c.irs_element_size)?
    } else {
        linalg::identity(n)
    };
    Ok((vec![r_bs; cfg.users], vec![r_irs; cfg.users]))
}

/// Everything the deterministic solvers need about the channels, plus the
/// current IRS phase vector and the covariances it induces.
#[derive(Clone, Debug)]
pub struct ChannelStatistics {
    pub h1: CMat,
    /// `H1 H1^H`, the phase-independent part of the cascaded covariance.
    pub h1_gram: CMat,
    pub r_bs: Vec<CMat>,
    pub r_irs: Vec<CMat>,
    pub r_tilde_irs: Vec<CMat>,
    pub beta_1: f64,
    pub beta_2: Vec<f64>,
    pub beta_d: Vec<f64>,
    pub alpha: f64,
    pub phase_noise: PhaseNoiseModel,
    phases: Vec<c64>,
    r_agg: Vec<CMat>,
}

impl ChannelStatistics {
    /// Builds the statistics for `cfg` with all phases at `1`.
    pub fn build(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let gains = channel_gains(cfg)?;
        let angles = LosAngles::for_config(cfg);
        let h1 = los_matrix(cfg, &angles, gains.beta_1)?;
        let (r_bs, r_irs) = build_correlation_matrices(cfg)?;
        let phase_noise = PhaseNoiseModel::from(&cfg.phase_noise);
        Self::from_parts(
            h1,
            r_bs,
            r_irs,
            gains,
            cfg.alpha,
            phase_noise,
            vec![linalg::re(1.0); cfg.irs_elements],
        )
    }

    /// Assembles statistics from explicit constituents.
    pub fn from_parts(
        h1: CMat,
        r_bs: Vec<CMat>,
        r_irs: Vec<CMat>,
        gains: PathLosses,
        alpha: f64,
        phase_noise: PhaseNoiseModel,
        phases: Vec<c64>,
    ) -> Result<Self> {
        let (m, n) = (h1.nrows(), h1.ncols());
        let k = r_bs.len();
        if r_irs.len() != k || gains.beta_2.len() != k || gains.beta_d.len() != k {
            return Err(Error::Argument("per-UE statistics have inconsistent lengths".into()));
        }
        if r_bs.iter().any(|r| r.nrows() != m || r.ncols() != m)
            || r_irs.iter().any(|r| r.nrows() != n || r.ncols() != n)
        {
            return Err(Error::Argument("correlation matrix dimensions do not match H1".into()));
        }
        let mut h1_gram: CMat = &h1 * h1.adjoint();
        linalg::hermitize(&mut h1_gram);
        let cf = phase_noise.characteristic_function();
        let r_tilde_irs = r_irs
            .iter()
            .map(|r| impairments::effective_irs_correlation(r, cf))
            .collect::<Result<Vec<_>>>()?;
        let mut stats = ChannelStatistics {
            h1,
            h1_gram,
            r_bs,
            r_irs,
            r_tilde_irs,
            beta_1: gains.beta_1,
            beta_2: gains.beta_2,
            beta_d: gains.beta_d,
            alpha,
            phase_noise,
            phases: Vec::new(),
            r_agg: Vec::new(),
        };
        stats.set_phases(&phases)?;
        Ok(stats)
    }

    /// `(M, N, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.h1.nrows(), self.h1.ncols(), self.r_bs.len())
    }

    pub fn phases(&self) -> &[c64] {
        &self.phases
    }

    pub fn covariances(&self) -> &[CMat] {
        &self.r_agg
    }

    /// Characteristic function of the phase-error distribution.
    pub fn cf(&self) -> f64 {
        self.phase_noise.characteristic_function()
    }

    pub fn covariances_at(&self, phases: &[c64]) -> Result<Vec<CMat>> {
        (0..self.r_bs.len())
            .map(|k| impairments::aggregate_covariance(self, phases, k))
            .collect()
    }

    pub fn set_phases(&mut self, phases: &[c64]) -> Result<()> {
        if phases.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::Argument("phase vector has non-finite entries".into()));
        }
        self.r_agg = self.covariances_at(phases)?;
        self.phases = phases.to_vec();
        Ok(())
    }

    pub fn with_phases(&self, phases: &[c64]) -> Result<Self> {
        let mut out = self.clone();
        out.set_phases(phases)?;
        Ok(out)
    }
}

/// Projects every entry onto the unit circle; zeros map to `1`.
pub fn project_unit_modulus(v: &[c64]) -> Vec<c64> {
    v.iter()
        .map(|z| {
            let r = z.norm();
            if r == 0.0 {
                linalg::re(1.0)
            } else {
                c64::from_polar(1.0, z.arg())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PhaseNoiseConfig;
    use proptest::prelude::*;

    fn small(m: usize, n: usize, k: usize) -> SystemConfig {
        SystemConfig { bs_antennas: m, irs_elements: n, users: k, ..Default::default() }
    }

    #[test]
    fn attenuation_at_one_metre_is_the_constant() {
        assert!((attenuation(28.0, 3.67, 1.0).unwrap() - 10f64.powf(-2.8)).abs() < 1e-18);
        let a = attenuation(28.0, 3.67, 10.0).unwrap();
        let b = attenuation(28.0, 3.67, 20.0).unwrap();
        assert!((b / a - 2f64.powf(-3.67)).abs() < 1e-12);
        assert!(attenuation(28.0, 3.67, 0.0).is_err());
    }

    #[test]
    fn attenuation_at_forty_metres() {
        // 28 + 36.7 * log10(40) = 28 + 36.7 * 1.6020599913 = 86.7956017 dB
        let db = 86.795_601_681;
        let expect = 10f64.powf(-db / 10.0);
        let got = attenuation(28.0, 3.67, 40.0).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-9, "{got} vs {expect}");
    }

    #[test]
    fn direct_link_carries_penetration_loss() {
        let mut cfg = small(4, 4, 1);
        cfg.geometry.users = vec![[30.0, 40.0, 0.0]];
        let pl = path_losses(&cfg).unwrap();
        let expect = attenuation(28.0, 3.67, 50.0).unwrap() * 10f64.powf(-1.5);
        assert!((pl.beta_d[0] / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_los_matrix() {
        let cfg = small(1, 1, 1);
        let angles = LosAngles { theta: vec![1.1], psi: vec![2.3] };
        let h = build_los_matrix(&cfg, &angles).unwrap();
        let b1 = channel_gains(&cfg).unwrap().beta_1;
        assert_eq!(h[(0, 0)], c64::new(b1.sqrt(), 0.0));
    }

    #[test]
    fn zero_angles_give_constant_matrix() {
        let cfg = small(5, 3, 1);
        let h = build_los_matrix(&cfg, &LosAngles::zeros(5)).unwrap();
        let b1 = channel_gains(&cfg).unwrap().beta_1.sqrt();
        for i in 0..5 {
            for j in 0..3 {
                assert!((h[(i, j)] - linalg::re(b1)).norm() < 1e-15 * b1);
            }
        }
    }

    #[test]
    fn los_matrix_matches_entrywise_formula_and_is_deterministic() {
        let cfg = small(4, 4, 1);
        let angles = LosAngles::for_config(&cfg);
        let h = build_los_matrix(&cfg, &angles).unwrap();
        let again = build_los_matrix(&cfg, &angles).unwrap();
        assert!(linalg::frobenius_diff(&h, &again) == 0.0);
        let b1 = channel_gains(&cfg).unwrap().beta_1;
        let half = 0.5; // spacings in wavelengths
        for m in 0..4 {
            for n in 0..4 {
                let t1 = angles.theta[n];
                let p1 = angles.psi[n];
                let t2 = PI - angles.theta[m];
                let p2 = PI + angles.psi[m];
                let arg = 2.0 * PI * (m as f64 * half * t1.sin() * p1.sin() + n as f64 * half * t2.sin() * p2.sin());
                let want = c64::new(arg.cos(), arg.sin()) * b1.sqrt();
                assert!((h[(m, n)] - want).norm() < 1e-12 * b1.sqrt());
            }
        }
        // generically full rank
        let g: CMat = h.adjoint() * &h;
        let ev = linalg::hermitian_eigenvalues(&g).unwrap();
        assert!(ev[0] > 1e-10 * ev[3]);
    }

    #[test]
    fn bs_correlation_cases() {
        assert!(linalg::is_identity_exact(&bs_correlation(6, 0.0)));
        let r = bs_correlation(4, 0.5);
        assert_eq!(r[(0, 3)].re, 0.125);
        assert_eq!(linalg::trace(&r).re, 4.0);
    }

    #[test]
    fn irs_correlation_matches_kernel_spectrum() {
        let r = irs_correlation(16, 0, 0.25).unwrap();
        // independent kernel: 4x4 grid with λ/4 pitch, sinc(2 d / λ)
        let mut k = linalg::zeros(16, 16);
        for a in 0..16 {
            for b in 0..16 {
                let dx = ((a % 4) as f64 - (b % 4) as f64) * 0.25;
                let dy = ((a / 4) as f64 - (b / 4) as f64) * 0.25;
                let x = 2.0 * (dx * dx + dy * dy).sqrt();
                let v = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
                k[(a, b)] = linalg::re(v);
            }
        }
        let ev_k = linalg::hermitian_eigenvalues(&k).unwrap();
        let ev_r = linalg::hermitian_eigenvalues(&r).unwrap();
        let top = ev_k[15];
        assert!(ev_k[0] > -1e-12 * top, "kernel already PSD on this grid");
        for (a, b) in ev_k.iter().zip(&ev_r) {
            assert!((a.max(0.0) - b).abs() < 1e-10 * top);
        }
    }

    #[test]
    fn irs_correlation_tends_to_all_ones() {
        let r = irs_correlation(9, 0, 1e-9).unwrap();
        for a in 0..9 {
            for b in 0..9 {
                assert!((r[(a, b)].re - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn statistics_invariants() {
        let cfg = small(12, 9, 3);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        assert_eq!(stats.dims(), (12, 9, 3));
        for k in 0..3 {
            assert!((linalg::trace(&stats.r_bs[k]).re / 12.0 - 1.0).abs() < 1e-9);
            assert!((linalg::trace(&stats.r_irs[k]).re / 9.0 - 1.0).abs() < 1e-9);
            let r = &stats.covariances()[k];
            assert!(linalg::is_hermitian_exact(r));
            let ev = linalg::hermitian_eigenvalues(r).unwrap();
            assert!(ev[0] >= -1e-12 * ev[11]);
        }
        assert!(stats.phases().iter().all(|s| s.norm() == 1.0));
    }

    #[test]
    fn aggregate_covariance_matches_direct_product() {
        let mut cfg = small(4, 4, 1);
        cfg.phase_noise = PhaseNoiseConfig::VonMises { kappa: 3.0 };
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let phases: Vec<c64> = (0..4).map(|n| c64::from_polar(1.0, 0.7 * n as f64 - 1.0)).collect();
        let r = impairments::aggregate_covariance(&stats, &phases, 0).unwrap();
        // literal product H1 Φ R̃ Φ^H H1^H with Φ = α diag(s)
        let phi = CMat::from_fn(4, 4, |i, j| if i == j { phases[i] * stats.alpha } else { linalg::re(0.0) });
        let t1: CMat = &stats.h1 * &phi;
        let t2: CMat = &t1 * &stats.r_tilde_irs[0];
        let t3: CMat = &t2 * phi.adjoint();
        let casc: CMat = &t3 * stats.h1.adjoint();
        let mut want = linalg::scaled(&stats.r_bs[0], stats.beta_d[0]);
        linalg::add_scaled(&mut want, &casc, stats.beta_2[0]);
        assert!(linalg::frobenius_diff(&r, &want) < 1e-12 * linalg::frobenius(&want));
    }

    #[test]
    fn uniform_noise_makes_covariance_phase_free() {
        let mut cfg = small(6, 5, 2);
        cfg.phase_noise = PhaseNoiseConfig::Uniform;
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let phases: Vec<c64> = (0..5).map(|n| c64::from_polar(1.0, 1.3 * n as f64)).collect();
        let moved = stats.with_phases(&phases).unwrap();
        for k in 0..2 {
            assert!(linalg::frobenius_diff(&stats.covariances()[k], &moved.covariances()[k]) == 0.0);
        }
    }

    #[test]
    fn no_irs_leaves_direct_path_only() {
        let cfg = small(6, 0, 2);
        let stats = ChannelStatistics::build(&cfg).unwrap();
        for k in 0..2 {
            let want = linalg::scaled(&stats.r_bs[k], stats.beta_d[k]);
            assert!(linalg::frobenius_diff(&stats.covariances()[k], &want) == 0.0);
        }
    }

    #[test]
    fn projection_onto_circle() {
        let p = project_unit_modulus(&[c64::new(2.0, 0.0), c64::new(0.0, 2.0)]);
        assert!((p[0] - c64::new(1.0, 0.0)).norm() < 1e-16);
        assert!((p[1] - c64::new(0.0, 1.0)).norm() < 1e-16);
    }

    proptest! {
        #[test]
        fn attenuation_decreases_with_distance(d in 1.0f64..500.0, extra in 0.01f64..100.0) {
            let a = attenuation(28.0, 3.67, d).unwrap();
            let b = attenuation(28.0, 3.67, d + extra).unwrap();
            prop_assert!(b < a);
            prop_assert!(a <= 1.0);
        }

        #[test]
        fn gauge_rotation_leaves_covariance_unchanged(theta in -3.0f64..3.0) {
            let cfg = small(5, 4, 1);
            let stats = ChannelStatistics::build(&cfg).unwrap();
            let base: Vec<c64> = (0..4).map(|n| c64::from_polar(1.0, 0.4 * n as f64)).collect();
            let rot: Vec<c64> = base.iter().map(|s| s * c64::from_polar(1.0, theta)).collect();
            let a = stats.covariances_at(&base).unwrap();
            let b = stats.covariances_at(&rot).unwrap();
            prop_assert!(linalg::frobenius_diff(&a[0], &b[0]) <= 1e-12 * linalg::frobenius(&a[0]));
        }
    }
}
