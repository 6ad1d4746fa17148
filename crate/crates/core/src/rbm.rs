//! Reflect-beamforming optimization: analytic gradients of the DE SINR with
//! respect to the IRS phases, projected gradient ascent on the unit-modulus
//! set, and the outer power/phase alternation.
//!
//! Gradients are Wirtinger derivatives `∂/∂s_n*` of real objectives, so the
//! steepest-ascent direction is the gradient itself.

use rand::Rng;

use crate::config::{AscentRule, SystemConfig};
use crate::deterministic::{self, DEState};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat};
use crate::power::{self, PowerSolution};
use crate::sampler;
use crate::scenario::{project_unit_modulus, ChannelStatistics};

/// Sensitivities of the DE fixed point at fixed `(p, s)`.
#[derive(Clone, Debug)]
pub struct Sensitivities {
    /// `∂δ_k/∂s_n*`, K×N.
    pub phase: CMat,
    /// `∂δ_k/∂p_j`, K×K.
    pub power: Vec<Vec<f64>>,
}

/// Which scalar multiplies `∂δ_k/∂s_n*` when forming the SINR gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prefactor {
    /// `p_k / (η_k (1 + κ_UE p_k δ_k)²)`, the derivative of `γ̄_k/η_k`.
    ChainRule,
    /// `p_k / (η_k (1 + κ_UE δ_k)²)`. Wrong whenever `κ_UE p_k ≠ κ_UE`;
    /// kept as a negative control for the finite-difference check.
    AsPrinted,
}

/// Differentiates the fixed point `δ_k = tr(R_k T_k)/M`.
///
/// With `A_k = T_k R_k T_k`, the derivatives satisfy `(I − B) d = rhs`, where
/// `B_{k,i} = c_i² tr(A_k R_i) / (M² (1 + c_i δ_i)²)` for `i ≠ k`. For the
/// phases, `rhs_k(n) = (1/M) Σ_i tr(X_{k,i} ∂R_i/∂s_n*)` with
/// `X_{k,k} = T_k − κ_BS (p_k/M) I∘A_k`, `X_{k,i} = −w_i A_k − κ_BS (p_i/M) I∘A_k`
/// and `∂R_i/∂s_n* = α² m² β_{2,i} H1 D R_IRS,i e_n h1_n^H`.
pub fn sensitivities(
    stats: &ChannelStatistics,
    de: &DEState,
    p: &[f64],
    cfg: &SystemConfig,
) -> Result<Sensitivities> {
    let (m, n, k) = stats.dims();
    let r = stats.covariances();
    let mf = m as f64;
    let c = deterministic::effective_power(p, cfg.kappa_ue);
    let w = deterministic::interference_weights(p, &de.delta, cfg.kappa_ue, m);
    let a: Vec<CMat> = de
        .t
        .iter()
        .zip(r)
        .map(|(t, rk)| {
            let tr: CMat = t * rk;
            let mut a: CMat = &tr * t;
            linalg::hermitize(&mut a);
            a
        })
        .collect();
    let tar: Vec<Vec<f64>> = a
        .iter()
        .map(|ak| r.iter().map(|ri| linalg::trace_product_hermitian(ak, ri).re).collect())
        .collect();
    let mut lhs = vec![vec![0.0; k]; k];
    for kk in 0..k {
        for i in 0..k {
            lhs[kk][i] = if i == kk {
                1.0
            } else {
                let den = mf * (1.0 + c[i] * de.delta[i]);
                -c[i] * c[i] * tar[kk][i] / (den * den)
            };
        }
    }

    let mut rhs = linalg::zeros(k, n + k);
    for kk in 0..k {
        let a_diag = linalg::real_diag(&a[kk]);
        for j in 0..k {
            let interference = if j == kk {
                0.0
            } else {
                let den = 1.0 + c[j] * de.delta[j];
                (1.0 + cfg.kappa_ue) / (mf * den * den) * tar[kk][j]
            };
            let receive: f64 = a_diag.iter().enumerate().map(|(i, d)| d * r[j][(i, i)].re).sum();
            rhs[(kk, n + j)] = linalg::re(-(interference + cfg.kappa_bs / mf * receive) / mf);
        }
    }

    let cf = stats.cf();
    if n > 0 && cf > 0.0 {
        let scale = stats.alpha * stats.alpha * cf * cf / mf;
        let s = stats.phases();
        let shared = stats.r_irs.iter().all(|x| linalg::frobenius_diff(x, &stats.r_irs[0]) == 0.0);
        for kk in 0..k {
            let a_diag = linalg::real_diag(&a[kk]);
            // X_{k,i} without the β₂ weight
            let x_of = |i: usize| -> CMat {
                let mut x = if i == kk {
                    de.t[kk].clone()
                } else {
                    linalg::scaled(&a[kk], -w[i])
                };
                let d: Vec<f64> = a_diag.iter().map(|v| -cfg.kappa_bs * p[i] / mf * v).collect();
                linalg::add_diag(&mut x, &d);
                x
            };
            let groups: Vec<(CMat, usize)> = if shared {
                let mut y = linalg::zeros(m, m);
                for i in 0..k {
                    if stats.beta_2[i] != 0.0 {
                        linalg::add_scaled(&mut y, &x_of(i), stats.beta_2[i]);
                    }
                }
                vec![(y, 0)]
            } else {
                (0..k)
                    .filter(|&i| stats.beta_2[i] != 0.0)
                    .map(|i| (linalg::scaled(&x_of(i), stats.beta_2[i]), i))
                    .collect()
            };
            for (y, i) in groups {
                let yh: CMat = &y * &stats.h1;
                let g: CMat = stats.h1.adjoint() * &yh;
                let rirs = &stats.r_irs[i];
                for col in 0..n {
                    let mut acc = c64::new(0.0, 0.0);
                    for j in 0..n {
                        acc += g[(col, j)] * s[j] * rirs[(j, col)];
                    }
                    rhs[(kk, col)] += acc * scale;
                }
            }
        }
    }

    let sol = linalg::real_solve(&lhs, &rhs, "DE sensitivity system (I - B)")?;
    let phase = CMat::from_fn(k, n, |i, j| sol[(i, j)]);
    let power = (0..k).map(|i| (0..k).map(|j| sol[(i, n + j)].re).collect()).collect();
    Ok(Sensitivities { phase, power })
}

/// `∂δ_k/∂s_n*` as a K×N matrix.
pub fn grad_delta(stats: &ChannelStatistics, de: &DEState, p: &[f64], cfg: &SystemConfig) -> Result<CMat> {
    Ok(sensitivities(stats, de, p, cfg)?.phase)
}

fn prefactor(p: f64, delta: f64, eta: f64, kappa_ue: f64, form: Prefactor) -> f64 {
    let x = match form {
        Prefactor::ChainRule => 1.0 + kappa_ue * p * delta,
        Prefactor::AsPrinted => 1.0 + kappa_ue * delta,
    };
    p / (eta * x * x)
}

/// `∂(γ̄_k/η_k)/∂s_n*` at fixed powers, from precomputed `∂δ/∂s*`.
pub fn grad_tau_from(
    d_phase: &CMat,
    de: &DEState,
    p: &[f64],
    eta: &[f64],
    k: usize,
    kappa_ue: f64,
    form: Prefactor,
) -> Vec<c64> {
    let f = prefactor(p[k], de.delta[k], eta[k], kappa_ue, form);
    (0..d_phase.ncols()).map(|n| d_phase[(k, n)] * f).collect()
}

/// Gradient of UE `k`'s weighted DE SINR at fixed powers.
pub fn grad_tau(
    stats: &ChannelStatistics,
    de: &DEState,
    p: &[f64],
    k: usize,
    cfg: &SystemConfig,
) -> Result<Vec<c64>> {
    let d = grad_delta(stats, de, p, cfg)?;
    Ok(grad_tau_from(&d, de, p, &cfg.eta(), k, cfg.kappa_ue, Prefactor::ChainRule))
}

/// Gradient of the power-equalized common SINR `τ̄*(s)`.
///
/// Along the solution of `f_k(s, p) = τ`, `(1/M) β^T p = p_max`, implicit
/// differentiation gives `∂τ̄*/∂s* = Σ_k λ_k ∂f_k/∂s*` with `J^T λ ∝ β`,
/// `J = ∂f/∂p`, normalized to `Σ λ_k = 1`.
pub fn envelope_gradient(stats: &ChannelStatistics, sol: &PowerSolution, cfg: &SystemConfig) -> Result<Vec<c64>> {
    let (_, n, k) = stats.dims();
    let sens = sensitivities(stats, &sol.de, &sol.p, cfg)?;
    let lambda = envelope_weights(&sens, &sol.de, &sol.p, cfg)?;
    let eta = cfg.eta();
    let mut g = vec![c64::new(0.0, 0.0); n];
    for kk in 0..k {
        let gk = grad_tau_from(&sens.phase, &sol.de, &sol.p, &eta, kk, cfg.kappa_ue, Prefactor::ChainRule);
        for (acc, v) in g.iter_mut().zip(gk) {
            *acc += v * lambda[kk];
        }
    }
    Ok(g)
}

/// Multipliers `λ` of the power fixed point, `Σ λ = 1`.
pub fn envelope_weights(sens: &Sensitivities, de: &DEState, p: &[f64], cfg: &SystemConfig) -> Result<Vec<f64>> {
    let k = p.len();
    let eta = cfg.eta();
    let beta = cfg.beta_w();
    // J^T, stored row-major: jt[j][k] = ∂f_k/∂p_j
    let mut jt = vec![vec![0.0; k]; k];
    for kk in 0..k {
        let x = 1.0 + cfg.kappa_ue * p[kk] * de.delta[kk];
        let s = 1.0 / (eta[kk] * x * x);
        for j in 0..k {
            let own = if j == kk { de.delta[kk] } else { 0.0 };
            jt[j][kk] = s * (own + p[kk] * sens.power[kk][j]);
        }
    }
    let rhs = CMat::from_fn(k, 1, |i, _| linalg::re(beta[i]));
    let lam = linalg::real_solve(&jt, &rhs, "power Jacobian")?;
    let lam: Vec<f64> = (0..k).map(|i| lam[(i, 0)].re).collect();
    let total: f64 = lam.iter().sum();
    if !(total.abs() > 0.0) || !total.is_finite() {
        return Err(Error::Singular("envelope multipliers sum to zero".into()));
    }
    Ok(lam.iter().map(|l| l / total).collect())
}

/// Removes the radial component: `q_n − Re(q_n s_n*) s_n`.
pub fn tangent(q: &[c64], s: &[c64]) -> Vec<c64> {
    q.iter().zip(s).map(|(qn, sn)| qn - sn * (qn * sn.conj()).re).collect()
}

#[derive(Clone, Debug)]
pub struct OptimizationState {
    pub stats: ChannelStatistics,
    pub power: PowerSolution,
    /// Current objective value.
    pub tau: f64,
    pub tau_history: Vec<f64>,
    pub step: f64,
    pub gradient: Vec<c64>,
    pub converged: bool,
    pub iterations: usize,
    pub power_iterations: usize,
    full_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepOutcome {
    Accepted { improvement: f64 },
    Stationary,
}

/// Powers held fixed: the state's `PowerSolution` carries `p` unchanged and
/// `tau_bar = min_k γ̄_k/η_k`.
fn frozen_power(stats: &ChannelStatistics, p: &[f64], cfg: &SystemConfig, warm: Option<&[f64]>) -> Result<PowerSolution> {
    let de = deterministic::solve_de_covariances(stats.covariances(), p, cfg, warm)?;
    let tau = deterministic::min_weighted_sinr(&de, &cfg.eta());
    Ok(PowerSolution {
        p: p.to_vec(),
        tau_bar: tau,
        de_iterations: de.iterations,
        residual: 0.0,
        iterations: 0,
        history: Vec::new(),
        de,
    })
}

fn evaluate(stats: &ChannelStatistics, from: &PowerSolution, cfg: &SystemConfig) -> Result<PowerSolution> {
    match cfg.solver.ascent {
        AscentRule::Envelope => power::solve_power_warm(stats, cfg, Some(&from.p), Some(&from.de.delta)),
        AscentRule::ArgMin | AscentRule::Average => frozen_power(stats, &from.p, cfg, Some(&from.de.delta)),
    }
}

fn ascent_direction(stats: &ChannelStatistics, sol: &PowerSolution, cfg: &SystemConfig) -> Result<Vec<c64>> {
    let (_, n, k) = stats.dims();
    if n == 0 {
        return Ok(Vec::new());
    }
    if stats.cf() == 0.0 {
        return Ok(vec![c64::new(0.0, 0.0); n]);
    }
    match cfg.solver.ascent {
        AscentRule::Envelope => envelope_gradient(stats, sol, cfg),
        AscentRule::ArgMin => {
            let eta = cfg.eta();
            let weakest = (0..k)
                .min_by(|&a, &b| (sol.de.gamma_bar[a] / eta[a]).total_cmp(&(sol.de.gamma_bar[b] / eta[b])))
                .unwrap_or(0);
            grad_tau(stats, &sol.de, &sol.p, weakest, cfg)
        }
        AscentRule::Average => {
            let d = grad_delta(stats, &sol.de, &sol.p, cfg)?;
            let eta = cfg.eta();
            let mut g = vec![c64::new(0.0, 0.0); n];
            for kk in 0..k {
                for (acc, v) in g.iter_mut().zip(grad_tau_from(&d, &sol.de, &sol.p, &eta, kk, cfg.kappa_ue, Prefactor::ChainRule)) {
                    *acc += v / k as f64;
                }
            }
            Ok(g)
        }
    }
}

impl OptimizationState {
    /// Starts from `power`, which must have been computed at `stats`' phases.
    pub fn new(stats: ChannelStatistics, power: PowerSolution, cfg: &SystemConfig) -> Result<Self> {
        let power = match cfg.solver.ascent {
            AscentRule::Envelope => power,
            _ => frozen_power(&stats, &power.p, cfg, Some(&power.de.delta))?,
        };
        let gradient = ascent_direction(&stats, &power, cfg)?;
        let tau = power.tau_bar;
        Ok(OptimizationState {
            stats,
            tau,
            tau_history: vec![tau],
            step: cfg.solver.step_initial,
            gradient,
            converged: false,
            iterations: 0,
            power_iterations: 0,
            power,
            full_steps: 0,
        })
    }

    pub fn phases(&self) -> &[c64] {
        self.stats.phases()
    }
}

/// One backtracking step `s' = exp(j arg(s + μ q))`, accepted when
/// `τ(s') ≥ τ(s) + c μ ‖q_t‖²` with `q_t` the tangential part of `q`.
pub fn pga_step(state: &mut OptimizationState, cfg: &SystemConfig) -> Result<StepOutcome> {
    let s = &cfg.solver;
    let phases = state.stats.phases().to_vec();
    let qt = tangent(&state.gradient, &phases);
    let slope: f64 = qt.iter().map(|z| z.norm_sqr()).sum();
    if !(slope > 0.0) {
        state.converged = true;
        return Ok(StepOutcome::Stationary);
    }
    let mut mu = state.step;
    let mut backtracked = false;
    loop {
        let trial: Vec<c64> = phases.iter().zip(&state.gradient).map(|(s, q)| s + q * mu).collect();
        let cand = project_unit_modulus(&trial);
        let cand_stats = state.stats.with_phases(&cand)?;
        let sol = evaluate(&cand_stats, &state.power, cfg)?;
        state.power_iterations += sol.iterations;
        if sol.tau_bar >= state.tau + s.sufficient_ascent * mu * slope && sol.tau_bar > state.tau {
            let improvement = (sol.tau_bar - state.tau) / state.tau;
            if backtracked {
                state.full_steps = 0;
                state.step = mu;
            } else {
                state.full_steps += 1;
                if state.full_steps >= 2 {
                    state.step = mu * 2.0;
                    state.full_steps = 0;
                }
            }
            state.gradient = ascent_direction(&cand_stats, &sol, cfg)?;
            state.stats = cand_stats;
            state.tau = sol.tau_bar;
            state.power = sol;
            state.tau_history.push(state.tau);
            state.iterations += 1;
            return Ok(StepOutcome::Accepted { improvement });
        }
        backtracked = true;
        mu *= s.step_shrink;
        if mu < s.step_min {
            state.converged = true;
            return Ok(StepOutcome::Stationary);
        }
    }
}

/// Runs PGA until stationarity, a relative improvement below `pga_tol`, or
/// the iteration cap.
pub fn run_pga(state: &mut OptimizationState, cfg: &SystemConfig) -> Result<()> {
    for _ in 0..cfg.solver.pga_max_iter {
        match pga_step(state, cfg)? {
            StepOutcome::Stationary => return Ok(()),
            StepOutcome::Accepted { improvement } => {
                if improvement < cfg.solver.pga_tol {
                    state.converged = true;
                    return Ok(());
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub stats: ChannelStatistics,
    pub power: PowerSolution,
    pub tau_bar: f64,
    /// Per-UE DE rates `log2(1 + γ̄_k)`.
    pub rates: Vec<f64>,
    pub min_rate: f64,
    /// Objective after the initial power solve and after every accepted
    /// phase step or outer re-solve.
    pub tau_history: Vec<f64>,
    pub outer_iterations: usize,
    pub power_iterations: usize,
    pub pga_iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn phases(&self) -> &[c64] {
        self.stats.phases()
    }

    pub fn p(&self) -> &[f64] {
        &self.power.p
    }
}

/// Random unit-modulus phases from the configuration seed.
pub fn initial_phases(n: usize, seed: u64) -> Vec<c64> {
    let mut rng = sampler::substream(seed, sampler::STREAM_INITIAL_PHASES);
    (0..n)
        .map(|_| c64::from_polar(1.0, rng.random::<f64>() * 2.0 * std::f64::consts::PI))
        .collect()
}

/// Alternates power equalization and phase ascent from random initial phases.
pub fn alternating_solve(stats: &ChannelStatistics, cfg: &SystemConfig) -> Result<SolveResult> {
    let (_, n, _) = stats.dims();
    alternating_solve_from(stats, cfg, &initial_phases(n, cfg.seed))
}

pub fn alternating_solve_from(stats: &ChannelStatistics, cfg: &SystemConfig, phases: &[c64]) -> Result<SolveResult> {
    let s = &cfg.solver;
    let mut current = stats.with_phases(phases)?;
    let mut power = power::solve_power(&current, cfg, None)?;
    let mut power_iterations = power.iterations;
    let mut pga_iterations = 0;
    let mut tau = power.tau_bar;
    let mut history = vec![tau];
    let mut converged = false;
    let mut outer = 0;
    while outer < s.outer_max_iter {
        outer += 1;
        let mut state = OptimizationState::new(current.clone(), power.clone(), cfg)?;
        run_pga(&mut state, cfg)?;
        pga_iterations += state.iterations;
        power_iterations += state.power_iterations;
        let refreshed = power::solve_power_warm(&state.stats, cfg, Some(&state.power.p), Some(&state.power.de.delta))?;
        power_iterations += refreshed.iterations;
        let envelope = cfg.solver.ascent == AscentRule::Envelope;
        // under a frozen-power rule the PGA values are not τ̄* values
        let next = if envelope && refreshed.tau_bar < state.tau { state.power.clone() } else { refreshed };
        if next.tau_bar < tau {
            converged = true;
            break;
        }
        let improvement = (next.tau_bar - tau) / tau;
        if envelope {
            history.extend_from_slice(&state.tau_history[1..]);
        }
        if next.tau_bar > *history.last().unwrap_or(&f64::NEG_INFINITY) {
            history.push(next.tau_bar);
        }
        tau = next.tau_bar;
        power = next;
        current = state.stats;
        if improvement < s.outer_tol {
            converged = true;
            break;
        }
    }
    let rates = deterministic::de_rate(&power.de);
    let min_rate = rates.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SolveResult {
        stats: current,
        tau_bar: tau,
        rates,
        min_rate,
        tau_history: history,
        outer_iterations: outer,
        power_iterations,
        pga_iterations,
        converged,
        power,
    })
}

/// Largest relative gain `(τ̄ − τ̄*)/τ̄*` over `trials` random perturbations
/// of the converged phases, each entry rotated by an angle uniform in
/// `[−radius, radius]`, with power re-equalized at every probe.
pub fn local_probe(result: &SolveResult, cfg: &SystemConfig, trials: usize, radius: f64, seed: u64) -> Result<f64> {
    let mut rng = sampler::substream(seed, sampler::STREAM_PROBE);
    let base = result.phases().to_vec();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let moved: Vec<c64> = base
            .iter()
            .map(|s| s * c64::from_polar(1.0, radius * (2.0 * rng.random::<f64>() - 1.0)))
            .collect();
        let st = result.stats.with_phases(&moved)?;
        let sol = power::solve_power_warm(&st, cfg, Some(&result.power.p), Some(&result.power.de.delta))?;
        worst = worst.max((sol.tau_bar - result.tau_bar) / result.tau_bar);
    }
    Ok(worst)
}

/// Central finite differences of `δ` under Wirtinger perturbations,
/// `∂/∂s* = (∂/∂x + j ∂/∂y)/2`, for each UE and element. The DE solves are
/// warm-started from `base`.
pub fn finite_difference_delta(
    stats: &ChannelStatistics,
    p: &[f64],
    cfg: &SystemConfig,
    base: &DEState,
    h: f64,
) -> Result<CMat> {
    let (_, n, k) = stats.dims();
    let s0 = stats.phases().to_vec();
    let eval = |s: &[c64]| -> Result<Vec<f64>> {
        let r = stats.covariances_at(s)?;
        Ok(deterministic::solve_de_covariances(&r, p, cfg, Some(&base.delta))?.delta)
    };
    let mut out = linalg::zeros(k, n);
    for col in 0..n {
        let mut diff = [vec![0.0; k], vec![0.0; k]];
        for (axis, d) in [c64::new(h, 0.0), c64::new(0.0, h)].into_iter().enumerate() {
            let mut sp = s0.clone();
            sp[col] += d;
            let mut sm = s0.clone();
            sm[col] -= d;
            let fp = eval(&sp)?;
            let fm = eval(&sm)?;
            for kk in 0..k {
                diff[axis][kk] = (fp[kk] - fm[kk]) / (2.0 * h);
            }
        }
        for kk in 0..k {
            out[(kk, col)] = c64::new(diff[0][kk], diff[1][kk]) * 0.5;
        }
    }
    Ok(out)
}
