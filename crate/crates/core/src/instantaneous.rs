//! Instantaneous SINR under transceiver distortion, the distortion-aware
//! LMMSE receiver, and the Monte Carlo rate estimate.

use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::impairments::PhaseNoiseModel;
use crate::linalg::{self, c64, CMat};
use crate::sampler::{self, ChannelSample, ChannelSampler};
use crate::scenario::ChannelStatistics;

/// Combining vectors, one unit-norm column per UE.
#[derive(Clone, Debug)]
pub struct ReceiverBank {
    pub v: CMat,
}

impl ReceiverBank {
    /// Normalizes the columns of `v`.
    pub fn from_columns(v: CMat) -> Result<Self> {
        let mut v = v;
        for j in 0..v.ncols() {
            let n = linalg::norm(&linalg::col_to_vec(&v, j));
            if !(n > 0.0) {
                return Err(Error::Argument(format!("receiver {j} is the zero vector")));
            }
            for i in 0..v.nrows() {
                v[(i, j)] /= n;
            }
        }
        Ok(ReceiverBank { v })
    }

    pub fn column(&self, k: usize) -> Vec<c64> {
        linalg::col_to_vec(&self.v, k)
    }
}

/// `Σ_i (1+κ_UE)(p_i/M) h_i h_i^H + C_δr + σ² I`: the received covariance
/// including transmit and receive distortion.
pub fn received_covariance(h: &CMat, p: &[f64], cfg: &SystemConfig) -> CMat {
    let m = h.nrows();
    let mut a = linalg::zeros(m, m);
    let mut diag = vec![cfg.sigma2(); m];
    for (i, &pi) in p.iter().enumerate() {
        let c = pi / m as f64;
        let w = (1.0 + cfg.kappa_ue) * c;
        for col in 0..m {
            let hc = h[(col, i)];
            diag[col] += cfg.kappa_bs * c * hc.norm_sqr();
            let hcc = hc.conj() * w;
            for row in 0..m {
                a[(row, col)] += h[(row, i)] * hcc;
            }
        }
    }
    linalg::add_diag(&mut a, &diag);
    linalg::hermitize(&mut a);
    a
}

/// SINR of arbitrary combiners, evaluated term by term:
/// `(p_k/M)|v^H h_k|² / (Σ_{i≠k} (p_i/M)|v^H h_i|² + v^H C_δt v + v^H C_δr v + σ² ‖v‖²)`.
pub fn instantaneous_sinr(
    sample: &ChannelSample,
    v: &ReceiverBank,
    p: &[f64],
    cfg: &SystemConfig,
) -> Vec<f64> {
    let h = &sample.h;
    let (m, k) = (h.nrows(), h.ncols());
    let s2 = cfg.sigma2();
    (0..k)
        .map(|u| {
            let vk = v.column(u);
            let proj: Vec<f64> = (0..k)
                .map(|i| linalg::dot_h(&vk, &linalg::col_to_vec(h, i)).norm_sqr())
                .collect();
            let signal = p[u] / m as f64 * proj[u];
            let mut interference = 0.0;
            let mut transmit = 0.0;
            let mut receive = 0.0;
            for i in 0..k {
                let c = p[i] / m as f64;
                if i != u {
                    interference += c * proj[i];
                }
                transmit += cfg.kappa_ue * c * proj[i];
                for r in 0..m {
                    receive += cfg.kappa_bs * c * h[(r, i)].norm_sqr() * vk[r].norm_sqr();
                }
            }
            let noise = s2 * vk.iter().map(|x| x.norm_sqr()).sum::<f64>();
            signal / (interference + transmit + receive + noise)
        })
        .collect()
}

/// `v_k ∝ A^{-1} h_k` with `A` the full received covariance; by the
/// matrix-inversion lemma this is parallel to the per-UE optimum that
/// excludes UE `k`'s own signal.
pub fn lmmse_receiver(sample: &ChannelSample, p: &[f64], cfg: &SystemConfig) -> Result<ReceiverBank> {
    let a = received_covariance(&sample.h, p, cfg);
    let x = linalg::hpd_solve(&a, &sample.h)?;
    ReceiverBank::from_columns(x)
}

/// Closed-form optimal SINR `(p_k/M) h_k^H Σ_k^{-1} h_k`, where `Σ_k` is `A`
/// with UE `k`'s signal term removed. With `a = h_k^H A^{-1} h_k` and
/// `c = p_k/M`, the downdate gives `γ_k = c a / (1 − c a)`.
pub fn optimal_sinr(sample: &ChannelSample, p: &[f64], cfg: &SystemConfig) -> Result<Vec<f64>> {
    let h = &sample.h;
    let (m, k) = (h.nrows(), h.ncols());
    let a = received_covariance(h, p, cfg);
    let x = linalg::hpd_solve(&a, h)?;
    Ok((0..k)
        .map(|u| {
            let q: c64 = (0..m).map(|r| h[(r, u)].conj() * x[(r, u)]).sum();
            let ca = p[u] / m as f64 * q.re;
            ca / (1.0 - ca)
        })
        .collect())
}

/// Monte Carlo estimate of per-UE SINR and rate.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub trials: usize,
    pub mean_sinr: Vec<f64>,
    pub sinr_stderr: Vec<f64>,
    /// `E[log2(1 + γ_k)]`.
    pub mean_rate: Vec<f64>,
    pub rate_stderr: Vec<f64>,
}

impl McEstimate {
    /// Index of the UE with the lowest mean rate, and that rate.
    pub fn min_rate(&self) -> (usize, f64) {
        self.mean_rate
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, r)| if r < acc.1 { (i, r) } else { acc })
    }
}

fn mean_and_stderr(values: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<f64>) {
    let t = values.len() as f64;
    let mut mean = vec![0.0; k];
    for row in values {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= t;
    }
    let mut var = vec![0.0; k];
    for row in values {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    let se = var
        .iter()
        .map(|s| if values.len() > 1 { (s / (t - 1.0) / t).sqrt() } else { 0.0 })
        .collect();
    (mean, se)
}

/// Averages the optimal SINR over `trials` independent draws. Trial `t` uses
/// substream `STREAM_TRIALS + t` of `seed`; results are summed in trial
/// order, so the estimate does not depend on the thread count.
pub fn mc_rate(
    stats: &ChannelStatistics,
    model: PhaseNoiseModel,
    p: &[f64],
    cfg: &SystemConfig,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Argument("Monte Carlo needs at least one trial".into()));
    }
    let (_, _, k) = stats.dims();
    let sampler = ChannelSampler::new(stats, model)?;
    let sinr: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = sampler::substream(seed, sampler::STREAM_TRIALS + t as u64);
            let sample = sampler.draw(&mut rng);
            optimal_sinr(&sample, p, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<Vec<f64>> = sinr
        .iter()
        .map(|row| row.iter().map(|g| (1.0 + g).log2()).collect())
        .collect();
    let (mean_sinr, sinr_stderr) = mean_and_stderr(&sinr, k);
    let (mean_rate, rate_stderr) = mean_and_stderr(&rates, k);
    Ok(McEstimate { trials, mean_sinr, sinr_stderr, mean_rate, rate_stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PhaseNoiseConfig;
    use crate::sampler::substream;
    use proptest::prelude::*;

    fn scalar_sample(h: f64) -> ChannelSample {
        let hm = CMat::from_fn(1, 1, |_, _| linalg::re(h));
        ChannelSample { h_d: hm.clone(), h_2: linalg::zeros(0, 1), phase_errors: Vec::new(), h: hm }
    }

    fn tiny(m: usize, k: usize) -> SystemConfig {
        SystemConfig { bs_antennas: m, irs_elements: 0, users: k, ..Default::default() }
    }

    fn random_sample(m: usize, k: usize, seed: u64) -> ChannelSample {
        let mut rng = substream(seed, 0);
        let h = CMat::from_fn(m, k, |_, _| sampler::complex_normal(&mut rng) * 1e-5);
        ChannelSample { h_d: h.clone(), h_2: linalg::zeros(0, k), phase_errors: Vec::new(), h }
    }

    #[test]
    fn scalar_ideal_case() {
        let cfg = tiny(1, 1);
        let s = scalar_sample(1e-5);
        let v = ReceiverBank::from_columns(CMat::from_fn(1, 1, |_, _| linalg::re(1.0))).unwrap();
        let g = instantaneous_sinr(&s, &v, &[1.0], &cfg);
        assert!((g[0] * cfg.sigma2() / 1e-10 - 1.0).abs() < 1e-12);
        let o = optimal_sinr(&s, &[1.0], &cfg).unwrap();
        assert!((o[0] / g[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn transmit_distortion_ceiling() {
        let mut cfg = tiny(1, 1);
        cfg.kappa_ue = 0.04;
        let s = scalar_sample(1.0);
        let v = ReceiverBank::from_columns(CMat::from_fn(1, 1, |_, _| linalg::re(1.0))).unwrap();
        let mut last = 0.0;
        for p in [1e-12, 1e-10, 1e-6, 1.0, 1e6] {
            let g = instantaneous_sinr(&s, &v, &[p], &cfg)[0];
            assert!(g < 1.0 / 0.04 && g > last);
            last = g;
        }
        assert!((last - 25.0).abs() < 1e-3);
    }

    #[test]
    fn scale_invariance_is_exact_for_powers_of_two() {
        let cfg = tiny(6, 3);
        let s = random_sample(6, 3, 1);
        let v = lmmse_receiver(&s, &[6.0, 3.0, 9.0], &cfg).unwrap();
        let scaled = ReceiverBank { v: linalg::scaled(&v.v, 4.0) };
        assert_eq!(
            instantaneous_sinr(&s, &v, &[6.0, 3.0, 9.0], &cfg),
            instantaneous_sinr(&s, &scaled, &[6.0, 3.0, 9.0], &cfg)
        );
    }

    #[test]
    fn quadratic_form_oracle() {
        let mut cfg = tiny(6, 3);
        cfg.kappa_ue = 0.02;
        cfg.kappa_bs = 0.03;
        let s = random_sample(6, 3, 2);
        let p = [6.0, 2.0, 11.0];
        let mut rng = substream(2, 1);
        let v = ReceiverBank::from_columns(CMat::from_fn(6, 3, |_, _| sampler::complex_normal(&mut rng))).unwrap();
        let got = instantaneous_sinr(&s, &v, &p, &cfg);
        // from-scratch denominator matrix per UE
        let h = &s.h;
        for k in 0..3 {
            let mut q = linalg::identity(6);
            q = linalg::scaled(&q, cfg.sigma2());
            for i in 0..3 {
                let hi = h.col(i).as_mat().to_owned();
                let outer: CMat = &hi * hi.adjoint();
                let c = p[i] / 6.0;
                if i != k {
                    linalg::add_scaled(&mut q, &outer, c);
                }
                linalg::add_scaled(&mut q, &outer, cfg.kappa_ue * c);
                linalg::add_scaled(&mut q, &linalg::hadamard_identity(&outer), cfg.kappa_bs * c);
            }
            let vk = v.column(k);
            let hk = linalg::col_to_vec(h, k);
            let num = p[k] / 6.0 * linalg::dot_h(&vk, &hk).norm_sqr();
            let want = num / linalg::quad_form(&q, &vk).re;
            assert!((got[k] / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matched_filter_for_single_ideal_user() {
        let cfg = tiny(5, 1);
        let s = random_sample(5, 1, 3);
        let v = lmmse_receiver(&s, &[5.0], &cfg).unwrap();
        let h = linalg::col_to_vec(&s.h, 0);
        let cos = linalg::dot_h(&v.column(0), &h).norm() / linalg::norm(&h);
        assert!((cos - 1.0).abs() < 1e-12);
        let g = optimal_sinr(&s, &[5.0], &cfg).unwrap()[0];
        let want = 1.0 * linalg::norm(&h).powi(2) / cfg.sigma2();
        assert!((g / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn receive_distortion_hurts() {
        let mut cfg = tiny(8, 3);
        let s = random_sample(8, 3, 5);
        let p = [8.0, 8.0, 8.0];
        let mut last = optimal_sinr(&s, &p, &cfg).unwrap();
        for kb in [0.01, 0.1, 1.0] {
            cfg.kappa_bs = kb;
            let now = optimal_sinr(&s, &p, &cfg).unwrap();
            for k in 0..3 {
                assert!(now[k] < last[k]);
            }
            last = now;
        }
    }

    #[test]
    fn mc_rate_vanishes_with_power() {
        let cfg = SystemConfig { bs_antennas: 4, irs_elements: 2, users: 2, ..Default::default() };
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let est = mc_rate(&stats, PhaseNoiseModel::Ideal, &[1e-30, 1e-30], &cfg, 20, 1).unwrap();
        assert!(est.mean_rate.iter().all(|&r| r < 1e-15));
        assert!(mc_rate(&stats, PhaseNoiseModel::Ideal, &[1.0, 1.0], &cfg, 0, 1).is_err());
    }

    #[test]
    fn mc_rate_is_thread_count_independent() {
        let cfg = SystemConfig {
            bs_antennas: 6,
            irs_elements: 4,
            users: 2,
            phase_noise: PhaseNoiseConfig::VonMises { kappa: 1.0 },
            ..Default::default()
        };
        let stats = ChannelStatistics::build(&cfg).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_rate(&stats, stats.phase_noise, &[6.0, 6.0], &cfg, 64, 3).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lmmse_beats_random_receivers(seed in 0u64..1000) {
            let mut cfg = tiny(8, 3);
            cfg.kappa_ue = 0.01;
            cfg.kappa_bs = 0.01;
            let s = random_sample(8, 3, seed);
            let p = [8.0, 3.0, 14.0];
            let best = instantaneous_sinr(&s, &lmmse_receiver(&s, &p, &cfg).unwrap(), &p, &cfg);
            let closed = optimal_sinr(&s, &p, &cfg).unwrap();
            let mut rng = substream(seed, 77);
            for _ in 0..50 {
                let v = ReceiverBank::from_columns(CMat::from_fn(8, 3, |_, _| sampler::complex_normal(&mut rng))).unwrap();
                let g = instantaneous_sinr(&s, &v, &p, &cfg);
                for k in 0..3 {
                    prop_assert!(g[k] <= best[k] * (1.0 + 1e-10));
                }
            }
            for k in 0..3 {
                prop_assert!((best[k] / closed[k] - 1.0).abs() < 1e-10);
            }
        }
    }
}
