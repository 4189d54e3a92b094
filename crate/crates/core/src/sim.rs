//! Monte Carlo harness: the data-generating process, R^2 calibration, the
//! Naive and Oracle baselines, and the replication engine producing
//! bias/SD/ESE/CR rows.

use crate::error::{Error, Result};
use crate::inference::{CovForm, EstimatorKind, InferenceResult};
use crate::lasso::{fit_step1, lambda_b};
use crate::model::{build_design, default_bandwidth, Dataset, Kernel, LocalizedDesign, QuerySpec};
use crate::normal::{normal_quantile, t3_quantile};
use crate::pipeline::{low_dim_inference, run_inference_on_design, PipelineConfig};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorDist {
    Normal,
    T3,
}

impl ErrorDist {
    pub fn name(self) -> &'static str {
        match self {
            ErrorDist::Normal => "normal",
            ErrorDist::T3 => "t3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(ErrorDist::Normal),
            "t3" | "t(3)" => Ok(ErrorDist::T3),
            other => Err(Error::InvalidInput(format!("unknown error dist '{other}'"))),
        }
    }

    /// tau-quantile q_e(tau) of the error law (not variance-standardized).
    pub fn quantile(self, tau: f64) -> f64 {
        match self {
            ErrorDist::Normal => normal_quantile(tau),
            ErrorDist::T3 => t3_quantile(tau),
        }
    }
}

/// DGP shape parameters (a0,a1,b0,b1,c0,c1,d0,d1,rho,sigma_e).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimParams {
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    pub c1: f64,
    pub d0: f64,
    pub d1: f64,
    pub rho: f64,
    pub sigma_e: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            a0: 1.0,
            a1: 0.1,
            b0: 1.0,
            b1: 0.1,
            c0: 1.0,
            c1: 0.5,
            d0: 1.0,
            d1: 0.2,
            rho: 0.2,
            sigma_e: 1.0,
        }
    }
}

impl SimParams {
    /// Time profile s(u) = c0 u^{c1} + 1 - c0 multiplying the whole
    /// coefficient vector.
    pub fn s(&self, u: f64) -> f64 {
        self.c0 * u.powf(self.c1) + 1.0 - self.c0
    }
    pub fn sigma_e(&self, u: f64) -> f64 {
        self.sigma_e * (1.0 + self.d0 * (u.powf(self.d1) - 1.0))
    }
    pub fn rho_u(&self, u: f64) -> f64 {
        self.rho.powf(1.0 + self.b0 * (u.powf(self.b1) - 1.0))
    }
    pub fn mu_j(&self, j: usize, u: f64) -> f64 {
        self.a0 * j as f64 * (u.powf(self.a1) - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Os,
    Ds,
    Rp,
    Naive,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Os => "os",
            Method::Ds => "ds",
            Method::Rp => "rp",
            Method::Naive => "naive",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "os" => Ok(Method::Os),
            "ds" => Ok(Method::Ds),
            "rp" => Ok(Method::Rp),
            "naive" => Ok(Method::Naive),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidInput(format!("unknown method '{other}'"))),
        }
    }

    pub const ALL: [Method; 5] = [
        Method::Os,
        Method::Ds,
        Method::Rp,
        Method::Naive,
        Method::Oracle,
    ];
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub p: usize,
    /// 0 = homoscedastic, 1 = heteroscedastic errors.
    pub gamma: u8,
    pub error_dist: ErrorDist,
    pub params: SimParams,
    /// Targets (R^2_x, R^2_y); calibration resolves c_x/c_y when absent.
    pub r2_x: f64,
    pub r2_y: f64,
    pub c_x: Option<f64>,
    pub c_y: Option<f64>,
    pub tau: f64,
    pub u0: f64,
    /// Bandwidth; None resolves to 4 n^{-1/3}.
    pub h: Option<f64>,
    pub kernel: Kernel,
    pub m_reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub cov_form: CovForm,
    pub level: f64,
    /// Oracle support keeps groups with |beta_j(u0)| above this threshold.
    pub oracle_tol: f64,
    pub pilot_n: usize,
    pub c_b: f64,
    pub c_v: f64,
    /// Worker threads for the replication loop; None uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 300,
            p: 100,
            gamma: 0,
            error_dist: ErrorDist::Normal,
            params: SimParams::default(),
            r2_x: 0.7,
            r2_y: 0.3,
            c_x: None,
            c_y: None,
            tau: 0.5,
            u0: 1.0,
            h: None,
            kernel: Kernel::Box,
            m_reps: 100,
            seed: 20240811,
            methods: Method::ALL.to_vec(),
            cov_form: CovForm::Empirical,
            level: 0.95,
            oracle_tol: 0.05,
            pilot_n: 100_000,
            c_b: 0.4,
            c_v: 0.02,
            threads: None,
        }
    }
}

impl SimConfig {
    pub fn bandwidth(&self) -> f64 {
        self.h.unwrap_or_else(|| default_bandwidth(self.n))
    }
}

/// Closed-form truth for one simulated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthRecord {
    /// beta_1(tau, u0): the level coefficient of the variable of interest.
    pub beta_true: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub gamma: u8,
    pub error_dist: ErrorDist,
    pub params: SimParams,
    pub p: usize,
}

impl TruthRecord {
    /// nu vector entry for confounder position m (0-based): 1/(m+2)^2.
    fn nu(m: usize) -> f64 {
        let j = (m + 2) as f64;
        1.0 / (j * j)
    }

    /// Closed-form conditional quantile
    /// q(x; tau, u) = x beta(u) + sigma_e(u) sqrt((2-gamma+gamma x_1^2)/2) q_e(tau).
    pub fn q(&self, x: &[f64], tau: f64, u: f64) -> f64 {
        assert_eq!(x.len(), self.p, "covariate row length mismatch");
        let s = self.params.s(u);
        let mut xb = 0.5 * x[0];
        for m in 0..self.p - 1 {
            xb += self.c_y * Self::nu(m) * x[m + 1];
        }
        xb *= s;
        let g = self.gamma as f64;
        let sd = self.params.sigma_e(u) * ((2.0 - g + g * x[0] * x[0]) / 2.0).sqrt();
        xb + sd * self.error_dist.quantile(tau)
    }

    /// Coefficient on covariate j (0-based) at index value u.
    pub fn beta_j(&self, j: usize, u: f64) -> f64 {
        let s = self.params.s(u);
        if j == 0 {
            0.5 * s
        } else {
            self.c_y * Self::nu(j - 1) * s
        }
    }

    /// Variables with |beta_j(u0)| above `tol`, always including the
    /// variable of interest. Returned as 0-based dataset columns.
    pub fn support(&self, tol: f64, u0: f64) -> Vec<usize> {
        let mut out = vec![0usize];
        for j in 1..self.p {
            if self.beta_j(j, u0).abs() > tol {
                out.push(j);
            }
        }
        out
    }
}

/// Draw one dataset from the DGP. Draw order per observation is fixed:
/// U, the p-1 AR innovations, eps_x, then the error-law draw.
pub fn generate_dataset<R: Rng>(cfg: &SimConfig, rng: &mut R) -> (Dataset, TruthRecord) {
    let c_x = cfg.c_x.expect("c_x must be resolved before generation");
    let c_y = cfg.c_y.expect("c_y must be resolved before generation");
    let n = cfg.n;
    let p = cfg.p;
    let par = &cfg.params;
    let t3 = StudentT::new(3.0).expect("valid dof");

    let mut x = Array2::zeros((n, p));
    let mut y = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut z = vec![0.0; p - 1];

    for i in 0..n {
        let ui: f64 = rng.random_range(0.0..2.0);
        u[i] = ui;
        let r = par.rho_u(ui);
        let noise_scale = (1.0 - r * r).max(0.0).sqrt();
        let mut gx = 0.0;
        for m in 0..p - 1 {
            let e: f64 = StandardNormal.sample(rng);
            z[m] = if m == 0 { e } else { r * z[m - 1] + noise_scale * e };
            let xm = par.mu_j(m + 1, ui) + z[m];
            x[[i, m + 1]] = xm;
            gx += TruthRecord::nu(m) * xm;
        }
        let eps_x: f64 = StandardNormal.sample(rng);
        let x1 = c_x * gx + eps_x;
        x[[i, 0]] = x1;
        let draw: f64 = match cfg.error_dist {
            ErrorDist::Normal => StandardNormal.sample(rng),
            ErrorDist::T3 => t3.sample(rng),
        };
        let g = cfg.gamma as f64;
        let eps = par.sigma_e(ui) * draw * ((2.0 - g + g * x1 * x1) / 2.0).sqrt();
        y[i] = par.s(ui) * (0.5 * x1 + c_y * gx) + eps;
    }

    let data = Dataset::new(y, u, x, vec![0]).expect("generated data is valid");
    let truth = TruthRecord {
        beta_true: 0.5 * par.s(cfg.u0),
        c_x,
        c_y,
        gamma: cfg.gamma,
        error_dist: cfg.error_dist,
        params: *par,
        p,
    };
    (data, truth)
}

/// Closed-form conditional quantile of the DGP.
pub fn true_quantile(truth: &TruthRecord, x: &[f64], tau: f64, u: f64) -> f64 {
    truth.q(x, tau, u)
}

/// Pilot-sample ingredients reused by both calibration targets.
struct Pilot {
    gx: Vec<f64>,
    s: Vec<f64>,
    eps_x: Vec<f64>,
    sig_draw: Vec<f64>,
}

fn draw_pilot(cfg: &SimConfig, pilot_n: usize, rng: &mut impl Rng) -> Pilot {
    let p = cfg.p;
    let par = &cfg.params;
    let t3 = StudentT::new(3.0).expect("valid dof");
    let mut gx = Vec::with_capacity(pilot_n);
    let mut s = Vec::with_capacity(pilot_n);
    let mut eps_x = Vec::with_capacity(pilot_n);
    let mut sig_draw = Vec::with_capacity(pilot_n);
    let mut z = vec![0.0; p - 1];
    for _ in 0..pilot_n {
        let ui: f64 = rng.random_range(0.0..2.0);
        let r = par.rho_u(ui);
        let noise_scale = (1.0 - r * r).max(0.0).sqrt();
        let mut g = 0.0;
        for m in 0..p - 1 {
            let e: f64 = StandardNormal.sample(rng);
            z[m] = if m == 0 { e } else { r * z[m - 1] + noise_scale * e };
            g += TruthRecord::nu(m) * (par.mu_j(m + 1, ui) + z[m]);
        }
        gx.push(g);
        s.push(par.s(ui));
        eps_x.push(StandardNormal.sample(rng));
        let draw: f64 = match cfg.error_dist {
            ErrorDist::Normal => StandardNormal.sample(rng),
            ErrorDist::T3 => t3.sample(rng),
        };
        sig_draw.push(par.sigma_e(ui) * draw);
    }
    Pilot {
        gx,
        s,
        eps_x,
        sig_draw,
    }
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Sample R^2 of response = c * signal + noise.
fn sample_r2(signal: &[f64], noise: &[f64], c: f64) -> f64 {
    let resp: Vec<f64> = signal
        .iter()
        .zip(noise.iter())
        .map(|(g, e)| c * g + e)
        .collect();
    let vr = variance(&resp);
    if vr == 0.0 {
        return 0.0;
    }
    1.0 - variance(noise) / vr
}

fn bisect_r2(signal: &[f64], noise: &[f64], target: f64) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::CalibrationFailure(format!(
            "target R^2 {target} outside [0,1)"
        )));
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while sample_r2(signal, noise, hi) < target {
        hi *= 2.0;
        tries += 1;
        if tries > 40 {
            return Err(Error::CalibrationFailure(
                "no bracket found for the R^2 target".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r2 = sample_r2(signal, noise, mid);
        if (r2 - target).abs() <= 1e-6 {
            return Ok(mid);
        }
        if r2 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Calibrate (c_x, c_y) to the configured (R^2_x, R^2_y) targets with a
/// pilot Monte Carlo sample on a dedicated RNG stream.
pub fn calibrate_r2(cfg: &SimConfig, pilot_n: usize, seed: u64) -> Result<(f64, f64)> {
    if pilot_n < 1000 {
        return Err(Error::CalibrationFailure(format!(
            "pilot_n={pilot_n} is too small for calibration"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let pilot = draw_pilot(cfg, pilot_n, &mut rng);

    // R^2_x: X_1 = X_{-1}(c_x nu) + eps_x
    let c_x = bisect_r2(&pilot.gx, &pilot.eps_x, cfg.r2_x)?;

    // R^2_y: Y - X_1 beta_1(U) = X_{-1} beta_{-1}(U) + eps,
    // with signal g s(U) and noise depending on X_1 through gamma.
    let g = cfg.gamma as f64;
    let eps: Vec<f64> = pilot
        .gx
        .iter()
        .zip(pilot.eps_x.iter())
        .zip(pilot.sig_draw.iter())
        .map(|((gx, ex), sd)| {
            let x1 = c_x * gx + ex;
            sd * ((2.0 - g + g * x1 * x1) / 2.0).sqrt()
        })
        .collect();
    let gy: Vec<f64> = pilot
        .gx
        .iter()
        .zip(pilot.s.iter())
        .map(|(gx, s)| gx * s)
        .collect();
    let c_y = bisect_r2(&gy, &eps, cfg.r2_y)?;
    Ok((c_x, c_y))
}

/// Kernel-weighted QR on the true support, with low-dimensional sandwich
/// intervals.
pub fn run_baseline_oracle(
    design: &LocalizedDesign,
    data: &Dataset,
    truth: &TruthRecord,
    cfg: &SimConfig,
    pipe: &PipelineConfig,
) -> Result<InferenceResult> {
    let cols = truth.support(cfg.oracle_tol, cfg.u0);
    // map dataset columns to design variable slots
    let slot_of = |col: usize| design.var_order.iter().position(|&c| c == col);
    let support: Vec<usize> = cols.iter().filter_map(|&c| slot_of(c)).collect();
    low_dim_inference(design, data, &support, cfg.level, cfg.cov_form, &pipe.solver)
}

/// Step-1 fit + post-refit + inference treating the selected set as fixed.
pub fn run_baseline_naive(
    design: &LocalizedDesign,
    data: &Dataset,
    cfg: &SimConfig,
    pipe: &PipelineConfig,
) -> Result<InferenceResult> {
    let lam = lambda_b(design, data, cfg.c_b)?;
    let fit = fit_step1(design, data, lam, &pipe.solver)?;
    naive_from_active(design, data, &fit.active_groups, cfg, pipe)
}

fn naive_from_active(
    design: &LocalizedDesign,
    data: &Dataset,
    active_groups: &[usize],
    cfg: &SimConfig,
    pipe: &PipelineConfig,
) -> Result<InferenceResult> {
    let k = design.k();
    let mut support: Vec<usize> = (0..k).collect();
    for &g in active_groups {
        if g >= k {
            support.push(g);
        }
    }
    low_dim_inference(design, data, &support, cfg.level, cfg.cov_form, &pipe.solver)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: Method,
    pub bias: f64,
    pub sd: f64,
    pub ese: f64,
    pub cr: f64,
    pub m_effective: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub rows: Vec<MethodRow>,
    pub n: usize,
    pub p: usize,
    pub h: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub beta_true: f64,
    /// Fully resolved configuration; rerunning from it reproduces the
    /// report bit for bit.
    pub config: SimConfig,
    /// Wall-clock seconds; excluded from serialized reports so that fixed
    /// seeds give byte-identical files.
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Clone)]
struct PointSummary {
    est: f64,
    se: f64,
    lo: f64,
    hi: f64,
}

type RepOutcome = Vec<(Method, std::result::Result<PointSummary, String>)>;

fn summarize(res: &InferenceResult) -> PointSummary {
    PointSummary {
        est: res.a_check[0],
        se: (res.sigma_a[[0, 0]].max(0.0) / res.nh).sqrt(),
        lo: res.ci[0].0,
        hi: res.ci[0].1,
    }
}

fn run_replication(cfg: &SimConfig, pipe: &PipelineConfig, rep: usize) -> RepOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1 + rep as u64);
    let (data, truth) = generate_dataset(cfg, &mut rng);

    let spec = match QuerySpec::new(cfg.tau, cfg.u0, cfg.bandwidth(), cfg.kernel) {
        Ok(s) => s,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&m| (m, Err(e.category().to_string())))
                .collect()
        }
    };
    let design = match build_design(&data, &spec) {
        Ok(d) => d,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&m| (m, Err(e.category().to_string())))
                .collect()
        }
    };

    let proposed: Vec<EstimatorKind> = cfg
        .methods
        .iter()
        .filter_map(|m| match m {
            Method::Os => Some(EstimatorKind::Os),
            Method::Ds => Some(EstimatorKind::Ds),
            Method::Rp => Some(EstimatorKind::Rp),
            _ => None,
        })
        .collect();

    let mut out: RepOutcome = Vec::new();
    let mut active_groups: Option<Vec<usize>> = None;

    if !proposed.is_empty() {
        let mut pc = pipe.clone();
        pc.estimators = proposed.clone();
        match run_inference_on_design(&design, &data, &pc) {
            Ok(po) => {
                active_groups = Some(po.fit.active_groups.clone());
                for (kind, res) in &po.results {
                    let method = match kind {
                        EstimatorKind::Os => Method::Os,
                        EstimatorKind::Ds => Method::Ds,
                        EstimatorKind::Rp => Method::Rp,
                    };
                    out.push((
                        method,
                        res.as_ref()
                            .map(summarize)
                            .map_err(|e| e.category().to_string()),
                    ));
                }
            }
            Err(e) => {
                for kind in &proposed {
                    let method = match kind {
                        EstimatorKind::Os => Method::Os,
                        EstimatorKind::Ds => Method::Ds,
                        EstimatorKind::Rp => Method::Rp,
                    };
                    out.push((method, Err(e.category().to_string())));
                }
            }
        }
    }

    for &m in &cfg.methods {
        match m {
            Method::Naive => {
                let res = match &active_groups {
                    Some(ag) => naive_from_active(&design, &data, ag, cfg, pipe),
                    None => run_baseline_naive(&design, &data, cfg, pipe),
                };
                out.push((
                    m,
                    res.map(|r| summarize(&r)).map_err(|e| e.category().to_string()),
                ));
            }
            Method::Oracle => {
                let res = run_baseline_oracle(&design, &data, &truth, cfg, pipe);
                out.push((
                    m,
                    res.map(|r| summarize(&r)).map_err(|e| e.category().to_string()),
                ));
            }
            _ => {}
        }
    }

    out
}

/// Run the replication study. Replications use counter-based RNG streams
/// (seed, replication index), so the result is independent of the thread
/// count; aggregation is in replication order.
pub fn run_study(cfg: &SimConfig) -> Result<SimReport> {
    let start = std::time::Instant::now();
    let mut cfg = cfg.clone();
    if cfg.m_reps == 0 {
        return Err(Error::InvalidInput("m_reps must be positive".into()));
    }
    if cfg.c_x.is_none() || cfg.c_y.is_none() {
        let (c_x, c_y) = calibrate_r2(&cfg, cfg.pilot_n, cfg.seed)?;
        cfg.c_x = Some(c_x);
        cfg.c_y = Some(c_y);
    }
    let pipe = PipelineConfig {
        c_b: cfg.c_b,
        c_v: cfg.c_v,
        level: cfg.level,
        cov_form: cfg.cov_form,
        ..PipelineConfig::default()
    };

    let run_all = |cfg: &SimConfig, pipe: &PipelineConfig| -> Vec<RepOutcome> {
        use rayon::prelude::*;
        (0..cfg.m_reps)
            .into_par_iter()
            .map(|rep| run_replication(cfg, pipe, rep))
            .collect()
    };
    let outcomes: Vec<RepOutcome> = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| run_all(&cfg, &pipe)),
        None => run_all(&cfg, &pipe),
    };

    let beta_true = 0.5 * cfg.params.s(cfg.u0);
    let mut rows = Vec::new();
    let mut any_effective = false;
    for &m in &cfg.methods {
        let mut ests = Vec::new();
        let mut ses = Vec::new();
        let mut covered = 0usize;
        for rep in &outcomes {
            for (method, res) in rep {
                if *method == m {
                    if let Ok(s) = res {
                        ests.push(s.est);
                        ses.push(s.se);
                        if s.lo <= beta_true && beta_true <= s.hi {
                            covered += 1;
                        }
                    }
                }
            }
        }
        let m_eff = ests.len();
        let (bias, sd, ese, cr) = if m_eff == 0 {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            any_effective = true;
            let mean = ests.iter().sum::<f64>() / m_eff as f64;
            let sd = if m_eff > 1 {
                (ests.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                    / (m_eff as f64 - 1.0))
                    .sqrt()
            } else {
                0.0
            };
            let ese = ses.iter().sum::<f64>() / m_eff as f64;
            (mean - beta_true, sd, ese, covered as f64 / m_eff as f64)
        };
        rows.push(MethodRow {
            method: m,
            bias,
            sd,
            ese,
            cr,
            m_effective: m_eff,
        });
    }
    if !any_effective {
        return Err(Error::NonConvergence {
            iters: 0,
            objective: f64::NAN,
            kkt_gap: f64::NAN,
        });
    }

    Ok(SimReport {
        rows,
        n: cfg.n,
        p: cfg.p,
        h: cfg.bandwidth(),
        c_x: cfg.c_x.unwrap(),
        c_y: cfg.c_y.unwrap(),
        beta_true,
        config: cfg,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}
