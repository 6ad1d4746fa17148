//! Deterministic equivalent of the optimal (LMMSE) SINR.
//!
//! For UE `k` the resolvent is
//!
//! ```text
//! T_k = ( Σ_{i≠k} w_i R_i + κ_BS Σ_i (p_i/M) I∘R_i + σ² I )^{-1},
//! w_i = c_i / (M (1 + c_i δ_i)),   c_i = (1 + κ_UE) p_i,
//! ```
//!
//! and `δ_k = tr(R_k T_k)/M`. The SINR equivalent is
//! `γ̄_k = p_k δ_k / (1 + κ_UE p_k δ_k)`.

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::scenario::ChannelStatistics;

#[derive(Clone, Debug)]
pub struct DEState {
    pub delta: Vec<f64>,
    /// Per-UE resolvents `T_k`.
    pub t: Vec<CMat>,
    pub gamma_bar: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// `c_i = (1 + κ_UE) p_i`.
pub fn effective_power(p: &[f64], kappa_ue: f64) -> Vec<f64> {
    p.iter().map(|&x| (1.0 + kappa_ue) * x).collect()
}

/// Interference weights `w_i = c_i / (M (1 + c_i δ_i))`.
pub fn interference_weights(p: &[f64], delta: &[f64], kappa_ue: f64, m: usize) -> Vec<f64> {
    effective_power(p, kappa_ue)
        .iter()
        .zip(delta)
        .map(|(&c, &d)| c / (m as f64 * (1.0 + c * d)))
        .collect()
}

pub fn gamma_bar(p: &[f64], delta: &[f64], kappa_ue: f64) -> Vec<f64> {
    p.iter()
        .zip(delta)
        .map(|(&pk, &dk)| pk * dk / (1.0 + kappa_ue * pk * dk))
        .collect()
}

/// Diagonal `κ_BS Σ_i (p_i/M) diag(R_i) + σ²`.
fn distortion_floor(r: &[CMat], p: &[f64], kappa_bs: f64, sigma2: f64) -> Vec<f64> {
    let m = r.first().map_or(0, |x| x.nrows());
    let mut d = vec![sigma2; m];
    if kappa_bs > 0.0 {
        for (ri, &pi) in r.iter().zip(p) {
            let w = kappa_bs * pi / m as f64;
            for (j, dj) in d.iter_mut().enumerate() {
                *dj += w * ri[(j, j)].re;
            }
        }
    }
    d
}

/// One application of the fixed-point map: the resolvents at `delta` and the
/// updated `δ`.
pub fn de_map(
    r: &[CMat],
    p: &[f64],
    delta: &[f64],
    cfg: &SystemConfig,
) -> Result<(Vec<CMat>, Vec<f64>)> {
    let k = r.len();
    let m = r.first().map_or(0, |x| x.nrows());
    let w = interference_weights(p, delta, cfg.kappa_ue, m);
    let floor = distortion_floor(r, p, cfg.kappa_bs, cfg.sigma2());
    let mut base = linalg::diag_matrix(&floor);
    for (ri, &wi) in r.iter().zip(&w) {
        linalg::add_scaled(&mut base, ri, wi);
    }
    let mut t = Vec::with_capacity(k);
    let mut next = Vec::with_capacity(k);
    for (ri, &wi) in r.iter().zip(&w) {
        let mut inv = base.clone();
        linalg::add_scaled(&mut inv, ri, -wi);
        let tk = linalg::hpd_inverse(&inv)?;
        next.push(linalg::trace_product_hermitian(ri, &tk).re / m as f64);
        t.push(tk);
    }
    Ok((t, next))
}

/// Solves the fixed point from `δ_k = 1/σ²`.
pub fn solve_de(stats: &ChannelStatistics, p: &[f64], cfg: &SystemConfig) -> Result<DEState> {
    solve_de_covariances(stats.covariances(), p, cfg, None)
}

/// Solves the fixed point for explicit covariances, optionally warm-started.
pub fn solve_de_covariances(
    r: &[CMat],
    p: &[f64],
    cfg: &SystemConfig,
    warm: Option<&[f64]>,
) -> Result<DEState> {
    solve_de_to(r, p, cfg, warm, cfg.solver.de_tol)
}

/// As [`solve_de_covariances`] with an explicit relative tolerance.
pub fn solve_de_to(
    r: &[CMat],
    p: &[f64],
    cfg: &SystemConfig,
    warm: Option<&[f64]>,
    tol: f64,
) -> Result<DEState> {
    let k = r.len();
    if p.len() != k {
        return Err(Error::Argument(format!("{} powers for {k} UEs", p.len())));
    }
    if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Argument("powers must be positive and finite".into()));
    }
    let s = &cfg.solver;
    let mut delta = match warm {
        Some(d) if d.len() == k && d.iter().all(|&x| x > 0.0 && x.is_finite()) => d.to_vec(),
        _ => vec![1.0 / cfg.sigma2(); k],
    };
    let mut history = Vec::new();
    let mut damped = false;
    for it in 1..=s.de_max_iter {
        let (t, next) = de_map(r, p, &delta, cfg)?;
        let residual = delta
            .iter()
            .zip(&next)
            .map(|(&d, &n)| if d > 0.0 { (n - d).abs() / d } else { (n - d).abs() })
            .fold(0.0, f64::max);
        if residual.is_nan() {
            return Err(Error::Internal("deterministic equivalent produced NaN".into()));
        }
        if let Some(&prev) = history.last() {
            if residual > prev {
                damped = true;
            }
        }
        history.push(residual);
        if residual <= tol {
            let gamma_bar = gamma_bar(p, &next, cfg.kappa_ue);
            return Ok(DEState { delta: next, t, gamma_bar, iterations: it, residual });
        }
        delta = if damped {
            delta.iter().zip(&next).map(|(&d, &n)| 0.5 * d + 0.5 * n).collect()
        } else {
            next
        };
    }
    Err(Error::NonConvergence {
        solver: "deterministic equivalent",
        iterations: s.de_max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// `log2(1 + γ̄_k)` per UE.
pub fn de_rate(state: &DEState) -> Vec<f64> {
    state.gamma_bar.iter().map(|g| (1.0 + g).log2()).collect()
}

/// `min_k log2(1 + γ̄_k)`.
pub fn min_rate(state: &DEState) -> f64 {
    de_rate(state).into_iter().fold(f64::INFINITY, f64::min)
}

/// `min_k γ̄_k / η_k`.
pub fn min_weighted_sinr(state: &DEState, eta: &[f64]) -> f64 {
    state
        .gamma_bar
        .iter()
        .zip(eta)
        .map(|(g, e)| g / e)
        .fold(f64::INFINITY, f64::min)
}
