//! Scenario configuration.
//!
//! The on-disk form is a flat TOML document with `[phase_noise]`,
//! `[geometry]`, `[correlation]`, `[path_loss]` and `[solver]` sections.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// IRS phase-error distribution as written in a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseNoiseConfig {
    /// No phase errors (characteristic function 1).
    #[default]
    Ideal,
    Uniform,
    VonMises { kappa: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Geometry {
    /// BS array reference position (m).
    pub bs: [f64; 3],
    /// IRS reference position (m).
    pub irs: [f64; 3],
    /// Explicit UE positions (m). When empty, UEs are laid out on an arc in
    /// front of the IRS between `user_distance_min` and `user_distance_max`.
    pub users: Vec<[f64; 3]>,
    pub user_distance_min: f64,
    pub user_distance_max: f64,
    /// Inter-antenna spacing at the BS, in wavelengths.
    pub bs_spacing: f64,
    /// Inter-element spacing at the IRS used by the LoS matrix, in wavelengths.
    pub irs_spacing: f64,
    /// Columns of the IRS planar array; `0` picks the most square layout.
    pub irs_columns: usize,
    pub bs_antenna_gain_dbi: f64,
    pub irs_element_gain_dbi: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            bs: [0.0, 0.0, 0.0],
            irs: [80.0, 0.0, 0.0],
            users: Vec::new(),
            user_distance_min: 8.0,
            user_distance_max: 16.0,
            bs_spacing: 0.5,
            irs_spacing: 0.5,
            irs_columns: 0,
            bs_antenna_gain_dbi: 5.0,
            irs_element_gain_dbi: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    /// Exponential correlation coefficient ρ at the BS (ρ = 0 gives I_M).
    pub bs_coefficient: f64,
    /// IRS element edge length in wavelengths; sets the spacing of the
    /// sinc-kernel element grid.
    pub irs_element_size: f64,
    /// `false` replaces the IRS correlation by the identity.
    pub irs_correlated: bool,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            bs_coefficient: 0.5,
            irs_element_size: 0.25,
            irs_correlated: true,
        }
    }
}

/// UMi attenuation constants. Attenuation in dB is `C + 10 ν log10(d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLossConfig {
    pub bs_irs_constant_db: f64,
    pub bs_irs_exponent: f64,
    pub irs_ue_constant_db: f64,
    pub irs_ue_exponent: f64,
    pub penetration_loss_db: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        PathLossConfig {
            bs_irs_constant_db: 26.0,
            bs_irs_exponent: 2.2,
            irs_ue_constant_db: 28.0,
            irs_ue_exponent: 3.67,
            penetration_loss_db: 15.0,
        }
    }
}

/// Which per-UE gradient drives the phase update.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AscentRule {
    /// Gradient of the power-equalized common SINR: per-UE gradients weighted
    /// by the implicit-function multipliers of the power fixed point. Power is
    /// re-equalized at every candidate phase vector.
    Envelope,
    /// Gradient of the currently weakest UE with powers frozen.
    ArgMin,
    /// Average of the per-UE gradients with powers frozen.
    Average,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub de_tol: f64,
    pub de_max_iter: usize,
    pub power_tol: f64,
    pub power_max_iter: usize,
    /// Anderson mixing depth for the power iteration; 0 is the plain update.
    pub power_acceleration: usize,
    pub pga_max_iter: usize,
    /// Relative objective improvement below which PGA declares convergence.
    pub pga_tol: f64,
    pub step_initial: f64,
    pub step_shrink: f64,
    pub sufficient_ascent: f64,
    pub step_min: f64,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub ascent: AscentRule,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            de_tol: 1e-10,
            de_max_iter: 500,
            power_tol: 1e-8,
            power_max_iter: 1000,
            power_acceleration: 3,
            pga_max_iter: 200,
            pga_tol: 1e-9,
            step_initial: 1.0,
            step_shrink: 0.5,
            sufficient_ascent: 1e-4,
            step_min: 1e-12,
            outer_tol: 1e-5,
            outer_max_iter: 50,
            ascent: AscentRule::Envelope,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// M
    pub bs_antennas: usize,
    /// N (0 disables the IRS path)
    pub irs_elements: usize,
    /// K
    pub users: usize,
    /// Weighted sum-power budget in dB (linear value in W).
    pub p_max_db: f64,
    pub noise_dbm: f64,
    pub kappa_bs: f64,
    pub kappa_ue: f64,
    /// IRS amplitude reflection coefficient.
    pub alpha: f64,
    pub carrier_ghz: f64,
    /// UE priorities η; empty means all ones.
    pub priorities: Vec<f64>,
    /// Power weights β; empty means 1/K each.
    pub power_weights: Vec<f64>,
    pub seed: u64,
    pub phase_noise: PhaseNoiseConfig,
    pub geometry: Geometry,
    pub correlation: CorrelationConfig,
    pub path_loss: PathLossConfig,
    pub solver: SolverSettings,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            bs_antennas: 64,
            irs_elements: 32,
            users: 4,
            p_max_db: 0.0,
            noise_dbm: -80.0,
            kappa_bs: 0.0,
            kappa_ue: 0.0,
            alpha: 1.0,
            carrier_ghz: 2.5,
            priorities: Vec::new(),
            power_weights: Vec::new(),
            seed: 1,
            phase_noise: PhaseNoiseConfig::default(),
            geometry: Geometry::default(),
            correlation: CorrelationConfig::default(),
            path_loss: PathLossConfig::default(),
            solver: SolverSettings::default(),
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.bs_antennas == 0 {
            return fail("bs_antennas must be at least 1".into());
        }
        if self.users == 0 {
            return fail("users must be at least 1".into());
        }
        if !self.p_max_db.is_finite() {
            return fail("p_max_db must be finite".into());
        }
        if !self.noise_dbm.is_finite() {
            return fail("noise_dbm must be finite".into());
        }
        if !(self.kappa_bs >= 0.0 && self.kappa_ue >= 0.0) {
            return fail("distortion severities must be non-negative".into());
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.carrier_ghz > 0.0) {
            return fail("carrier frequency must be positive".into());
        }
        if !self.priorities.is_empty() && self.priorities.len() != self.users {
            return fail(format!(
                "priorities has {} entries for {} users",
                self.priorities.len(),
                self.users
            ));
        }
        if self.priorities.iter().any(|&e| !(e > 0.0)) {
            return fail("priorities must be positive".into());
        }
        if !self.power_weights.is_empty() && self.power_weights.len() != self.users {
            return fail(format!(
                "power_weights has {} entries for {} users",
                self.power_weights.len(),
                self.users
            ));
        }
        if self.power_weights.iter().any(|&b| !(b > 0.0)) {
            return fail("power_weights must be positive".into());
        }
        if let PhaseNoiseConfig::VonMises { kappa } = self.phase_noise {
            if !(kappa >= 0.0) {
                return fail("von Mises concentration must be non-negative".into());
            }
        }
        let g = &self.geometry;
        if !g.users.is_empty() && g.users.len() != self.users {
            return fail(format!(
                "geometry.users has {} positions for {} users",
                g.users.len(),
                self.users
            ));
        }
        if g.users.is_empty() && !(g.user_distance_min > 0.0 && g.user_distance_max >= g.user_distance_min) {
            return fail("user distance range must be positive and ordered".into());
        }
        if !(g.bs_spacing > 0.0 && g.irs_spacing > 0.0) {
            return fail("array spacings must be positive".into());
        }
        let c = &self.correlation;
        if !(0.0..1.0).contains(&c.bs_coefficient) {
            return fail("bs correlation coefficient must lie in [0, 1)".into());
        }
        if !(c.irs_element_size > 0.0) {
            return fail("irs element size must be positive".into());
        }
        let s = &self.solver;
        if !(s.de_tol > 0.0 && s.power_tol > 0.0 && s.outer_tol > 0.0 && s.pga_tol > 0.0) {
            return fail("solver tolerances must be positive".into());
        }
        if !(s.step_shrink > 0.0 && s.step_shrink < 1.0) {
            return fail("step_shrink must lie in (0, 1)".into());
        }
        if !(s.step_initial > 0.0 && s.step_min > 0.0 && s.sufficient_ascent >= 0.0) {
            return fail("line-search constants must be positive".into());
        }
        Ok(())
    }

    pub fn p_max(&self) -> f64 {
        db_to_linear(self.p_max_db)
    }

    /// Noise power in W.
    pub fn sigma2(&self) -> f64 {
        db_to_linear(self.noise_dbm - 30.0)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)
    }

    pub fn eta(&self) -> Vec<f64> {
        if self.priorities.is_empty() {
            vec![1.0; self.users]
        } else {
            self.priorities.clone()
        }
    }

    pub fn beta_w(&self) -> Vec<f64> {
        if self.power_weights.is_empty() {
            vec![1.0 / self.users as f64; self.users]
        } else {
            self.power_weights.clone()
        }
    }

    /// UE positions, either explicit or the default arc layout.
    pub fn user_positions(&self) -> Vec<[f64; 3]> {
        let g = &self.geometry;
        if !g.users.is_empty() {
            return g.users.clone();
        }
        let k = self.users;
        (0..k)
            .map(|i| {
                let t = if k == 1 { 0.5 } else { i as f64 / (k - 1) as f64 };
                let d = g.user_distance_min + t * (g.user_distance_max - g.user_distance_min);
                let ang = (-150.0 + 120.0 * t).to_radians();
                [g.irs[0] + d * ang.cos(), g.irs[1] + d * ang.sin(), g.irs[2]]
            })
            .collect()
    }
}
