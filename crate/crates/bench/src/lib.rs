//! Fixtures shared by the benchmarks.

use irs_maxmin::power::{self, PowerSolution};
use irs_maxmin::{rbm, ChannelStatistics, SystemConfig};

/// `(M, N, K)` with mild distortion, at seeded phases and equalized power.
pub fn fixture(m: usize, n: usize, k: usize) -> (SystemConfig, ChannelStatistics, PowerSolution) {
    let mut cfg = SystemConfig { bs_antennas: m, irs_elements: n, users: k, ..Default::default() };
    cfg.kappa_bs = 0.0025;
    cfg.kappa_ue = 0.0025;
    let stats = ChannelStatistics::build(&cfg).expect("valid fixture");
    let stats = stats.with_phases(&rbm::initial_phases(n, cfg.seed)).expect("phase count");
    let sol = power::solve_power(&stats, &cfg, None).expect("power converges");
    (cfg, stats, sol)
}
