//! Experiment driver: single solves, parameter sweeps, Monte Carlo
//! validation and gradient checks, with CSV, plot-data and JSON output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PhaseNoiseConfig, SystemConfig};
use crate::deterministic::{self, DEState};
use crate::error::{Error, Result};
use crate::instantaneous;
use crate::linalg::{self, c64};
use crate::power;
use crate::rbm::{self, Prefactor};
use crate::scenario::ChannelStatistics;

pub const CSV_COLUMNS: [&str; 9] = [
    "sweep_value",
    "tau_bar",
    "min_rate",
    "mc_rate",
    "mc_stderr",
    "iters_outer",
    "iters_power",
    "iters_pga",
    "wall_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Run,
    Sweep,
    Validate,
    Gradcheck,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Run => "run",
            Mode::Sweep => "sweep",
            Mode::Validate => "validate",
            Mode::Gradcheck => "gradcheck",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// N
    IrsElements,
    /// M
    BsAntennas,
    PMaxDb,
    /// Sets `κ_BS = κ_UE`.
    Kappa,
    /// von Mises concentration of the IRS phase error.
    KappaTheta,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::IrsElements => "irs_elements",
            SweepAxis::BsAntennas => "bs_antennas",
            SweepAxis::PMaxDb => "p_max_db",
            SweepAxis::Kappa => "kappa",
            SweepAxis::KappaTheta => "kappa_theta",
        }
    }

    /// Current value of this axis in `cfg`. `kappa_theta` reads the von Mises
    /// concentration, with `0` for uniform errors and `+∞` for none.
    pub fn value_of(self, cfg: &SystemConfig) -> f64 {
        match self {
            SweepAxis::IrsElements => cfg.irs_elements as f64,
            SweepAxis::BsAntennas => cfg.bs_antennas as f64,
            SweepAxis::PMaxDb => cfg.p_max_db,
            SweepAxis::Kappa => cfg.kappa_bs,
            SweepAxis::KappaTheta => match cfg.phase_noise {
                PhaseNoiseConfig::Ideal => f64::INFINITY,
                PhaseNoiseConfig::Uniform => 0.0,
                PhaseNoiseConfig::VonMises { kappa } => kappa,
            },
        }
    }

    pub fn apply(self, cfg: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut out = cfg.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::Argument(format!("{} needs a non-negative integer, got {v}", self.name())))
            }
        };
        match self {
            SweepAxis::IrsElements => out.irs_elements = count(value)?,
            SweepAxis::BsAntennas => out.bs_antennas = count(value)?,
            SweepAxis::PMaxDb => out.p_max_db = value,
            SweepAxis::Kappa => {
                out.kappa_bs = value;
                out.kappa_ue = value;
            }
            SweepAxis::KappaTheta => {
                out.phase_noise = if value == f64::INFINITY {
                    PhaseNoiseConfig::Ideal
                } else {
                    PhaseNoiseConfig::VonMises { kappa: value }
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irs_elements" | "n" | "N" => Ok(SweepAxis::IrsElements),
            "bs_antennas" | "m" | "M" => Ok(SweepAxis::BsAntennas),
            "p_max_db" | "p_max" => Ok(SweepAxis::PMaxDb),
            "kappa" => Ok(SweepAxis::Kappa),
            "kappa_theta" => Ok(SweepAxis::KappaTheta),
            other => Err(Error::Argument(format!(
                "unknown sweep axis '{other}' (expected irs_elements, bs_antennas, p_max_db, kappa or kappa_theta)"
            ))),
        }
    }
}

/// Parses a comma-separated value list; `inf` is accepted.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Argument(format!("'{t}' is not a number"))))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub axis: Option<SweepAxis>,
    pub values: Vec<f64>,
    pub mode: Mode,
    /// Monte Carlo trials per point; used by `validate`.
    pub trials: usize,
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
    /// Record wall-clock time per row. Off by default so that output files
    /// are byte-identical across runs.
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(base: SystemConfig, mode: Mode) -> Self {
        let seed = base.seed;
        ExperimentSpec {
            base,
            axis: None,
            values: Vec::new(),
            mode,
            trials: 500,
            out_dir: None,
            seed,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.values.iter().any(|v| v.is_nan()) {
            return Err(Error::Argument("sweep values must be numbers".into()));
        }
        if self.values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("sweep values must be strictly increasing".into()));
        }
        if self.mode == Mode::Validate && self.trials == 0 {
            return Err(Error::Argument("validate needs at least one trial".into()));
        }
        if self.axis.is_some() != !self.values.is_empty() {
            return Err(Error::Argument("an axis needs a value list and vice versa".into()));
        }
        if self.mode == Mode::Sweep && self.axis.is_none() {
            return Err(Error::Argument("sweep needs --axis and --values".into()));
        }
        Ok(())
    }

    /// `(sweep value, config)` per point.
    pub fn points(&self) -> Result<Vec<(f64, SystemConfig)>> {
        let mut base = self.base.clone();
        base.seed = self.seed;
        match self.axis {
            Some(axis) => self.values.iter().map(|&v| Ok((v, axis.apply(&base, v)?))).collect(),
            None => Ok(vec![(SweepAxis::IrsElements.value_of(&base), base)]),
        }
    }

    pub fn axis_name(&self) -> &'static str {
        self.axis.unwrap_or(SweepAxis::IrsElements).name()
    }

    pub fn stem(&self) -> String {
        match (self.mode, self.axis) {
            (Mode::Sweep, Some(a)) => format!("sweep_{}", a.name()),
            (m, Some(a)) => format!("{}_{}", m.name(), a.name()),
            (m, None) => m.name().to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct McSummary {
    pub trials: usize,
    /// `min_k E[log2(1 + γ_k)]`.
    pub min_rate: f64,
    pub min_rate_stderr: f64,
    pub mean_sinr: Vec<f64>,
    /// `max_k |γ̄_k − E[γ_k]| / E[γ_k]`.
    pub max_sinr_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub tau_bar: f64,
    pub min_rate: f64,
    pub powers: Vec<f64>,
    pub gamma_bar: Vec<f64>,
    pub iters_outer: usize,
    pub iters_power: usize,
    pub iters_pga: usize,
    pub converged: bool,
    pub mc: Option<McSummary>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(sweep_value: f64, err: &Error) -> Self {
        ResultRow {
            sweep_value,
            tau_bar: f64::NAN,
            min_rate: f64::NAN,
            powers: Vec::new(),
            gamma_bar: Vec::new(),
            iters_outer: 0,
            iters_power: 0,
            iters_pga: 0,
            converged: false,
            mc: None,
            wall_ms: 0.0,
            error: Some(format!("{}: {err}", err.kind())),
        }
    }
}

/// Solves one configuration and optionally validates it by Monte Carlo.
pub fn run_point(cfg: &SystemConfig, sweep_value: f64, trials: Option<usize>) -> Result<ResultRow> {
    let stats = ChannelStatistics::build(cfg)?;
    let res = rbm::alternating_solve(&stats, cfg)?;
    let mc = match trials {
        Some(t) => {
            let est = instantaneous::mc_rate(&res.stats, res.stats.phase_noise, res.p(), cfg, t, cfg.seed)?;
            let (ue, min_rate) = est.min_rate();
            let max_sinr_gap = res
                .power
                .de
                .gamma_bar
                .iter()
                .zip(&est.mean_sinr)
                .map(|(g, m)| (g - m).abs() / m)
                .fold(0.0, f64::max);
            Some(McSummary {
                trials: t,
                min_rate,
                min_rate_stderr: est.rate_stderr[ue],
                mean_sinr: est.mean_sinr,
                max_sinr_gap,
            })
        }
        None => None,
    };
    Ok(ResultRow {
        sweep_value,
        tau_bar: res.tau_bar,
        min_rate: res.min_rate,
        powers: res.p().to_vec(),
        gamma_bar: res.power.de.gamma_bar.clone(),
        iters_outer: res.outer_iterations,
        iters_power: res.power_iterations,
        iters_pga: res.pga_iterations,
        converged: res.converged,
        mc,
        wall_ms: 0.0,
        error: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub axis: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub config: SystemConfig,
    pub rows: Vec<ResultRow>,
}

impl ExperimentReport {
    pub fn failures(&self) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.error.is_some()).collect()
    }
}

/// Runs every sweep point (concurrently) and collects rows in sweep order.
/// A failing point yields a row carrying the error; the run continues.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    if spec.mode == Mode::Gradcheck {
        return Err(Error::Argument("gradcheck produces a GradcheckReport; call gradcheck".into()));
    }
    let trials = (spec.mode == Mode::Validate).then_some(spec.trials);
    let rows = spec
        .points()?
        .into_par_iter()
        .map(|(v, cfg)| {
            let start = Instant::now();
            let mut row = run_point(&cfg, v, trials).unwrap_or_else(|e| ResultRow::failed(v, &e));
            if spec.timing {
                row.wall_ms = start.elapsed().as_secs_f64() * 1e3;
            }
            row
        })
        .collect();
    let mut config = spec.base.clone();
    config.seed = spec.seed;
    Ok(ExperimentReport {
        mode: spec.mode,
        axis: spec.axis_name(),
        seed: spec.seed,
        config_sha256: config.hash(),
        config,
        rows,
    })
}

fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.12e}")
    } else {
        "nan".into()
    }
}

fn provenance(report: &ExperimentReport) -> String {
    let s = &report.config.solver;
    let mut out = String::new();
    let _ = writeln!(out, "# irs-maxmin {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# mode={} axis={} seed={}", report.mode.name(), report.axis, report.seed);
    let _ = writeln!(out, "# config_sha256={}", report.config_sha256);
    let _ = writeln!(
        out,
        "# de_tol={:e} power_tol={:e} pga_tol={:e} outer_tol={:e} ascent={:?}",
        s.de_tol, s.power_tol, s.pga_tol, s.outer_tol, s.ascent
    );
    out
}

pub fn render_csv(report: &ExperimentReport) -> String {
    let mut out = provenance(report);
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in &report.rows {
        let (mc, se) = r.mc.as_ref().map_or((f64::NAN, f64::NAN), |m| (m.min_rate, m.min_rate_stderr));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3}",
            fmt_num(r.sweep_value),
            fmt_num(r.tau_bar),
            fmt_num(r.min_rate),
            fmt_num(mc),
            fmt_num(se),
            r.iters_outer,
            r.iters_power,
            r.iters_pga,
            r.wall_ms
        );
    }
    for r in report.rows.iter().filter(|r| r.error.is_some()) {
        let _ = writeln!(out, "# error at {}: {}", fmt_num(r.sweep_value), r.error.as_deref().unwrap_or(""));
    }
    out
}

/// Two-column plot data: sweep value and one quantity per line.
pub fn render_plot_data(report: &ExperimentReport, value: impl Fn(&ResultRow) -> f64, label: &str) -> String {
    let mut out = provenance(report);
    let _ = writeln!(out, "# {} {}", report.axis, label);
    for r in &report.rows {
        let _ = writeln!(out, "{} {}", fmt_num(r.sweep_value), fmt_num(value(r)));
    }
    out
}

/// Writes `<stem>.csv`, `<stem>.dat` (DE min rate), `<stem>_mc.dat` when
/// Monte Carlo ran, and a `<stem>.json` sidecar. Returns the paths written.
pub fn write_outputs(report: &ExperimentReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec![
        (dir.join(format!("{stem}.csv")), render_csv(report)),
        (dir.join(format!("{stem}.dat")), render_plot_data(report, |r| r.min_rate, "min_rate")),
    ];
    if report.rows.iter().any(|r| r.mc.is_some()) {
        files.push((
            dir.join(format!("{stem}_mc.dat")),
            render_plot_data(report, |r| r.mc.as_ref().map_or(f64::NAN, |m| m.min_rate), "mc_min_rate"),
        ));
    }
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Internal(e.to_string()))?;
    files.push((dir.join(format!("{stem}.json")), json + "\n"));
    for (path, text) in &files {
        std::fs::write(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Default instance grid for [`gradcheck`].
pub const GRADCHECK_GRID: [(usize, usize, usize); 3] = [(8, 4, 2), (8, 4, 3), (16, 8, 3)];
pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckCase {
    pub bs_antennas: usize,
    pub irs_elements: usize,
    pub users: usize,
    /// Largest over UEs of `‖g_k − d_k‖ / ‖d_k‖`, with `d_k` the numerical
    /// gradient (`‖g_k‖` when `d_k = 0`).
    pub max_rel_error: f64,
    /// `(k, n)` entry with the largest absolute discrepancy.
    pub worst: (usize, usize),
    pub analytic_norm: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradcheckReport {
    pub step: f64,
    pub tolerance: f64,
    pub cases: Vec<GradcheckCase>,
    pub pass: bool,
}

impl GradcheckReport {
    pub fn worst_case(&self) -> Option<&GradcheckCase> {
        self.cases.iter().max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// `γ̄_k/η_k` per UE at phases `s`, with powers fixed.
fn weighted_sinr_at(stats: &ChannelStatistics, s: &[c64], p: &[f64], cfg: &SystemConfig, warm: &DEState) -> Result<Vec<f64>> {
    let r = stats.covariances_at(s)?;
    let de = deterministic::solve_de_covariances(&r, p, cfg, Some(&warm.delta))?;
    Ok(de.gamma_bar.iter().zip(cfg.eta()).map(|(g, e)| g / e).collect())
}

/// Compares the analytic per-UE gradient `∂(γ̄_k/η_k)/∂s_n*` at fixed powers
/// with central differences of step `h` on the real and imaginary parts.
pub fn gradcheck_case(cfg: &SystemConfig, h: f64, form: Prefactor) -> Result<GradcheckCase> {
    let mut cfg = cfg.clone();
    cfg.solver.de_tol = cfg.solver.de_tol.min(1e-13);
    cfg.solver.de_max_iter = cfg.solver.de_max_iter.max(2000);
    let stats = ChannelStatistics::build(&cfg)?;
    let stats = stats.with_phases(&rbm::initial_phases(cfg.irs_elements, cfg.seed))?;
    let (_, n, k) = stats.dims();
    let p = power::solve_power(&stats, &cfg, None)?.p;
    let de = deterministic::solve_de(&stats, &p, &cfg)?;
    let d_phase = rbm::grad_delta(&stats, &de, &p, &cfg)?;
    let eta = cfg.eta();
    let analytic: Vec<Vec<c64>> =
        (0..k).map(|kk| rbm::grad_tau_from(&d_phase, &de, &p, &eta, kk, cfg.kappa_ue, form)).collect();
    let s0 = stats.phases().to_vec();
    let mut numeric = vec![vec![c64::new(0.0, 0.0); n]; k];
    for col in 0..n {
        let mut parts = [vec![0.0; k], vec![0.0; k]];
        for (axis, d) in [c64::new(h, 0.0), c64::new(0.0, h)].into_iter().enumerate() {
            let mut sp = s0.clone();
            sp[col] += d;
            let mut sm = s0.clone();
            sm[col] -= d;
            let fp = weighted_sinr_at(&stats, &sp, &p, &cfg, &de)?;
            let fm = weighted_sinr_at(&stats, &sm, &p, &cfg, &de)?;
            for kk in 0..k {
                parts[axis][kk] = (fp[kk] - fm[kk]) / (2.0 * h);
            }
        }
        for kk in 0..k {
            numeric[kk][col] = c64::new(parts[0][kk], parts[1][kk]) * 0.5;
        }
    }
    let mut max_rel_error: f64 = 0.0;
    let mut worst = (0, 0);
    let mut worst_abs = -1.0;
    let mut analytic_norm: f64 = 0.0;
    for kk in 0..k {
        let diff: Vec<c64> = analytic[kk].iter().zip(&numeric[kk]).map(|(a, b)| a - b).collect();
        let dn = linalg::norm(&numeric[kk]);
        let an = linalg::norm(&analytic[kk]);
        analytic_norm = analytic_norm.max(an);
        let err = if dn > 0.0 { linalg::norm(&diff) / dn } else { an };
        max_rel_error = max_rel_error.max(err);
        for (col, d) in diff.iter().enumerate() {
            if d.norm() > worst_abs {
                worst_abs = d.norm();
                worst = (kk, col);
            }
        }
    }
    Ok(GradcheckCase {
        bs_antennas: cfg.bs_antennas,
        irs_elements: n,
        users: k,
        max_rel_error,
        worst,
        analytic_norm,
        pass: max_rel_error <= GRADCHECK_TOL,
    })
}

/// Runs [`gradcheck_case`] over `grid`, each `(M, N, K)` applied to `base`.
pub fn gradcheck(base: &SystemConfig, grid: &[(usize, usize, usize)], form: Prefactor) -> Result<GradcheckReport> {
    let cases = grid
        .par_iter()
        .map(|&(m, n, k)| {
            let cfg = SystemConfig {
                bs_antennas: m,
                irs_elements: n,
                users: k,
                priorities: Vec::new(),
                power_weights: Vec::new(),
                geometry: crate::config::Geometry { users: Vec::new(), ..base.geometry.clone() },
                ..base.clone()
            };
            cfg.validate()?;
            gradcheck_case(&cfg, GRADCHECK_STEP, form)
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = cases.iter().all(|c| c.pass);
    Ok(GradcheckReport { step: GRADCHECK_STEP, tolerance: GRADCHECK_TOL, cases, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        let mut c = SystemConfig { bs_antennas: 8, irs_elements: 4, users: 2, ..Default::default() };
        c.kappa_bs = 0.0025;
        c.kappa_ue = 0.0025;
        c
    }

    #[test]
    fn axis_names_round_trip() {
        for a in [
            SweepAxis::IrsElements,
            SweepAxis::BsAntennas,
            SweepAxis::PMaxDb,
            SweepAxis::Kappa,
            SweepAxis::KappaTheta,
        ] {
            assert_eq!(a.name().parse::<SweepAxis>().unwrap(), a);
        }
        assert!("antennas".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn axis_application() {
        let c = small();
        assert_eq!(SweepAxis::IrsElements.apply(&c, 16.0).unwrap().irs_elements, 16);
        assert!(SweepAxis::BsAntennas.apply(&c, 2.5).is_err());
        let k = SweepAxis::Kappa.apply(&c, 0.01).unwrap();
        assert_eq!((k.kappa_bs, k.kappa_ue), (0.01, 0.01));
        let t = SweepAxis::KappaTheta.apply(&c, f64::INFINITY).unwrap();
        assert_eq!(t.phase_noise, PhaseNoiseConfig::Ideal);
        assert_eq!(SweepAxis::KappaTheta.value_of(&t), f64::INFINITY);
    }

    #[test]
    fn spec_validation() {
        let mut spec = ExperimentSpec::new(small(), Mode::Sweep);
        assert!(spec.validate().is_err());
        spec.axis = Some(SweepAxis::IrsElements);
        spec.values = vec![4.0, 4.0];
        assert!(spec.validate().is_err());
        spec.values = vec![2.0, 4.0];
        assert!(spec.validate().is_ok());
        spec.mode = Mode::Validate;
        spec.trials = 0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("1, 2.5,inf").unwrap(), vec![1.0, 2.5, f64::INFINITY]);
        assert!(parse_values("1,x").is_err());
    }

    #[test]
    fn failed_point_is_recorded() {
        let mut spec = ExperimentSpec::new(small(), Mode::Sweep);
        spec.base.solver.power_max_iter = 1;
        spec.axis = Some(SweepAxis::IrsElements);
        spec.values = vec![4.0];
        let report = run_experiment(&spec).unwrap();
        assert_eq!(report.failures().len(), 1);
        let csv = render_csv(&report);
        assert!(csv.contains("# error at"));
        assert!(csv.contains("non_convergence"));
    }

    #[test]
    fn csv_layout() {
        let spec = ExperimentSpec::new(small(), Mode::Run);
        let report = run_experiment(&spec).unwrap();
        let csv = render_csv(&report);
        let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, CSV_COLUMNS.join(","));
        let row: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), CSV_COLUMNS.len());
        assert_eq!(row[3], "nan");
        assert_eq!(row[8], "0.000");
    }

    #[test]
    fn uniform_noise_gradient_is_zero() {
        let mut c = small();
        c.phase_noise = PhaseNoiseConfig::Uniform;
        let case = gradcheck_case(&c, GRADCHECK_STEP, Prefactor::ChainRule).unwrap();
        assert_eq!(case.analytic_norm, 0.0);
        assert_eq!(case.max_rel_error, 0.0);
        assert!(case.pass);
    }

    #[test]
    fn small_instance_passes_and_printed_prefactor_fails() {
        let c = small();
        let good = gradcheck_case(&c, GRADCHECK_STEP, Prefactor::ChainRule).unwrap();
        assert!(good.pass, "{good:?}");
        let bad = gradcheck_case(&c, GRADCHECK_STEP, Prefactor::AsPrinted).unwrap();
        assert!(!bad.pass, "{bad:?}");
    }
}
