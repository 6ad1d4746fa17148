//! Max-min weighted SINR power allocation.
//!
//! At the optimum every weighted SINR `γ̄_k/η_k` equals the common value `τ̄*`
//! and the weighted budget `(1/M) β^T p = p_max` is active. The solver
//! alternates a deterministic-equivalent solve at the current powers with the
//! update `p_k ← η_k (1 + κ_UE p_k δ_k) / δ_k`, followed by a rescale onto the
//! budget surface.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

use crate::config::SystemConfig;
use crate::deterministic::{self, DEState};
use crate::error::{Error, Result};
use crate::scenario::ChannelStatistics;

#[derive(Clone, Debug)]
pub struct PowerSolution {
    pub p: Vec<f64>,
    pub tau_bar: f64,
    pub de: DEState,
    pub iterations: usize,
    pub residual: f64,
    /// Residual after every iteration.
    pub history: Vec<f64>,
    /// DE iterations summed over all power iterations.
    pub de_iterations: usize,
}

impl PowerSolution {
    /// `max_k |γ̄_k/η_k − τ̄*| / τ̄*`.
    pub fn spread(&self, eta: &[f64]) -> f64 {
        weighted_spread(&self.de.gamma_bar, eta, self.tau_bar)
    }

    /// Mean ratio of consecutive residuals over the last `window` steps.
    pub fn trailing_decay(&self, window: usize) -> Option<f64> {
        trailing_ratio(&self.history, window)
    }
}

pub fn trailing_ratio(history: &[f64], window: usize) -> Option<f64> {
    let tail: Vec<f64> = history.iter().copied().filter(|r| *r > 0.0).collect();
    if tail.len() < 2 {
        return None;
    }
    let start = tail.len().saturating_sub(window + 1);
    let seg = &tail[start..];
    let ratios: Vec<f64> = seg.windows(2).map(|w| w[1] / w[0]).collect();
    // geometric mean
    Some((ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp())
}

fn weighted_spread(gamma_bar: &[f64], eta: &[f64], tau: f64) -> f64 {
    gamma_bar
        .iter()
        .zip(eta)
        .map(|(g, e)| (g / e - tau).abs() / tau)
        .fold(0.0, f64::max)
}

/// Anderson mixing on `x = ln p` for the fixed-point map `x ↦ g(x)`.
struct Anderson {
    depth: usize,
    x: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson { depth, x: Vec::new(), g: Vec::new() }
    }

    fn reset(&mut self) {
        self.x.clear();
        self.g.clear();
    }

    /// Records `(x, g(x))` and returns the mixed iterate.
    fn next(&mut self, x: Vec<f64>, g: Vec<f64>) -> Vec<f64> {
        self.x.push(x);
        self.g.push(g);
        let dim = self.g[0].len();
        let keep = self.depth.min(dim) + 1;
        if self.x.len() > keep {
            self.x.remove(0);
            self.g.remove(0);
        }
        let cur = self.g.len() - 1;
        let plain = self.g[cur].clone();
        if self.depth == 0 || cur == 0 {
            return plain;
        }
        let f = |j: usize, i: usize| self.g[j][i] - self.x[j][i];
        let df = Mat::from_fn(dim, cur, |i, j| f(j + 1, i) - f(j, i));
        let rhs = Mat::from_fn(dim, 1, |i, _| f(cur, i));
        let gamma = df.col_piv_qr().solve_lstsq(&rhs);
        if (0..cur).any(|j| !gamma[(j, 0)].is_finite()) {
            self.reset();
            return plain;
        }
        (0..dim)
            .map(|i| plain[i] - (0..cur).map(|j| gamma[(j, 0)] * (self.g[j + 1][i] - self.g[j][i])).sum::<f64>())
            .collect()
    }
}

/// Rescales `p` so that `(1/M) β^T p = p_max`.
pub fn project_budget(p: &[f64], beta_w: &[f64], p_max: f64, m: usize) -> Vec<f64> {
    let used: f64 = p.iter().zip(beta_w).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    let scale = p_max / used;
    p.iter().map(|x| x * scale).collect()
}

/// Equal split of the budget: `p_k = M p_max / Σ β`.
pub fn uniform_power(cfg: &SystemConfig) -> Vec<f64> {
    let beta = cfg.beta_w();
    let total: f64 = beta.iter().sum();
    vec![cfg.bs_antennas as f64 * cfg.p_max() / total; cfg.users]
}

pub fn solve_power(
    stats: &ChannelStatistics,
    cfg: &SystemConfig,
    initial_p: Option<&[f64]>,
) -> Result<PowerSolution> {
    solve_power_warm(stats, cfg, initial_p, None)
}

/// As [`solve_power`], with the first DE solve warm-started from `delta`.
pub fn solve_power_warm(
    stats: &ChannelStatistics,
    cfg: &SystemConfig,
    initial_p: Option<&[f64]>,
    delta: Option<&[f64]>,
) -> Result<PowerSolution> {
    let (m, _, k) = stats.dims();
    let eta = cfg.eta();
    let beta = cfg.beta_w();
    if eta.len() != k || beta.len() != k {
        return Err(Error::Argument("priority or weight vector length differs from UE count".into()));
    }
    let p_max = cfg.p_max();
    let mut p = match initial_p {
        Some(p0) => {
            if p0.len() != k || p0.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Argument("initial powers must be positive, one per UE".into()));
            }
            project_budget(p0, &beta, p_max, m)
        }
        None => uniform_power(cfg),
    };
    let s = &cfg.solver;
    let mut warm = delta.map(|d| d.to_vec());
    let mut history = Vec::new();
    let mut de_iterations = 0;
    // inner tolerance follows the outer residual down to `de_tol`
    let mut inner = s.de_tol.max(1e-3);
    let mut mixer = Anderson::new(s.power_acceleration);
    for it in 1..=s.power_max_iter {
        let de = deterministic::solve_de_to(stats.covariances(), &p, cfg, warm.as_deref(), inner)?;
        de_iterations += de.iterations;
        if let Some(k0) = de.delta.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Argument(format!("UE {k0} has a zero effective channel (δ = 0)")));
        }
        let tau = deterministic::min_weighted_sinr(&de, &eta);
        let spread = weighted_spread(&de.gamma_bar, &eta, tau);
        let raw: Vec<f64> = (0..k)
            .map(|i| eta[i] * (1.0 + cfg.kappa_ue * p[i] * de.delta[i]) / de.delta[i])
            .collect();
        let next = project_budget(&raw, &beta, p_max, m);
        let change = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / a)
            .fold(0.0, f64::max);
        let residual = change.max(spread);
        history.push(residual);
        if residual <= s.power_tol && inner > s.de_tol {
            inner = s.de_tol;
            warm = Some(de.delta);
            continue;
        }
        if residual <= s.power_tol {
            return Ok(PowerSolution {
                p,
                tau_bar: tau,
                de,
                iterations: it,
                residual,
                history,
                de_iterations,
            });
        }
        inner = (0.01 * residual).clamp(s.de_tol, inner);
        if history.len() >= 2 && residual > history[history.len() - 2] {
            mixer.reset();
        }
        let mixed = mixer.next(p.iter().map(|x| x.ln()).collect(), next.iter().map(|x| x.ln()).collect());
        warm = Some(de.delta);
        p = project_budget(&mixed.iter().map(|x| x.exp()).collect::<Vec<_>>(), &beta, p_max, m);
    }
    Err(Error::NonConvergence {
        solver: "power fixed point",
        iterations: s.power_max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
