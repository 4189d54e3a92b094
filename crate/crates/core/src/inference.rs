//! Step 3: decorrelated-score, one-step, and reparametrization estimators,
//! the two covariance estimators, and confidence intervals.

use crate::decorrelate::Decorrelator;
use crate::error::{Error, Result};
use crate::lasso::{self, SolverOptions};
use crate::linalg::Lu;
use crate::model::{psi_tau, Dataset, LocalizedDesign};
use crate::normal::normal_quantile;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ds,
    Os,
    Rp,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ds => "ds",
            EstimatorKind::Os => "os",
            EstimatorKind::Rp => "rp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovForm {
    Empirical,
    Expected,
}

impl CovForm {
    pub fn name(self) -> &'static str {
        match self {
            CovForm::Empirical => "empirical",
            CovForm::Expected => "expected",
        }
    }
}

/// One estimator's inference output at the query point.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub kind: EstimatorKind,
    /// Point estimate of the 2k A-block coordinates (interleaved
    /// level/derivative pairs).
    pub a_check: Vec<f64>,
    pub sigma_a: Array2<f64>,
    pub cov_form: CovForm,
    pub level: f64,
    pub ci: Vec<(f64, f64)>,
    pub nh: f64,
}

/// Decorrelated score S_d(b, V) = sum_i -w_i V Gamma_i Psi_tau(y_i - Gamma_i' b).
pub fn score_d(
    design: &LocalizedDesign,
    data: &Dataset,
    b: &[f64],
    v: &Array2<f64>,
) -> Vec<f64> {
    let d = design.gamma.ncols();
    assert_eq!(b.len(), d, "coefficient length mismatch");
    assert_eq!(v.ncols(), d, "V column count mismatch");
    let rows = v.nrows();
    let tau = design.spec.tau;
    let g = design.gamma.as_slice().expect("row-major design");
    let mut out = vec![0.0; rows];
    for i in 0..design.n() {
        let wi = design.weights[i];
        if wi == 0.0 {
            continue;
        }
        let row = &g[i * d..(i + 1) * d];
        let fit: f64 = row.iter().zip(b.iter()).map(|(x, bj)| x * bj).sum();
        let s = -wi * psi_tau(tau, data.y()[i] - fit);
        for (r, o) in out.iter_mut().enumerate() {
            let vg: f64 = v.row(r).iter().zip(row.iter()).map(|(a, b)| a * b).sum();
            *o += s * vg;
        }
    }
    out
}

/// One-step estimator: a-check = a-hat - S_d(b-hat, V-hat).
pub fn estimate_os(
    design: &LocalizedDesign,
    data: &Dataset,
    b_hat: &[f64],
    dec: &Decorrelator,
) -> Vec<f64> {
    let k2 = 2 * design.k();
    let s = score_d(design, data, b_hat, &dec.v_hat);
    (0..k2).map(|j| b_hat[j] - s[j]).collect()
}

#[derive(Debug, Clone)]
pub struct DsOptions {
    /// Search-box half width; defaults to max(1, ||a-hat||_inf).
    pub radius: Option<f64>,
    /// Ridge added to the score covariance before inversion; defaults to
    /// 1e-10 trace / 2k.
    pub ridge: Option<f64>,
    /// Points per axis of the coarse pre-search grid (only used when
    /// 2k <= 4).
    pub grid_points: usize,
    pub nm_max_iter: usize,
}

impl Default for DsOptions {
    fn default() -> Self {
        DsOptions {
            radius: None,
            ridge: None,
            grid_points: 9,
            nm_max_iter: 800,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DsOutcome {
    pub a: Vec<f64>,
    pub objective: f64,
    /// False when no improvement over a-hat was found (the search returns
    /// a-hat in that case).
    pub improved: bool,
    /// V-hat = 0 made the score identically zero.
    pub degenerate: bool,
}

/// Decorrelated-score estimator: minimize the self-normalized quadratic form
/// of the decorrelated score over a box around a-hat, by Nelder-Mead with
/// deterministic restarts and a compass polish.
pub fn estimate_ds(
    design: &LocalizedDesign,
    data: &Dataset,
    b_hat: &[f64],
    dec: &Decorrelator,
    opts: &DsOptions,
) -> Result<DsOutcome> {
    let k2 = 2 * design.k();
    let d = design.gamma.ncols();
    let tau = design.spec.tau;
    let a_hat: Vec<f64> = b_hat[..k2].to_vec();

    // Precompute per (positive-weight) observation: V Gamma_i, the residual
    // offset at a = 0, and the A-block of the row.
    let g = design.gamma.as_slice().expect("row-major design");
    let mut vg: Vec<[f64; 8]> = Vec::new(); // 2k <= 8 supported fast path
    assert!(k2 <= 8, "DS search supports up to 4 variables of interest");
    let mut r0 = Vec::new();
    let mut ga = Vec::new();
    let mut ws = Vec::new();
    for i in 0..design.n() {
        let wi = design.weights[i];
        if wi == 0.0 {
            continue;
        }
        let row = &g[i * d..(i + 1) * d];
        let mut vgi = [0.0f64; 8];
        for r in 0..k2 {
            vgi[r] = dec
                .v_hat
                .row(r)
                .iter()
                .zip(row.iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        vg.push(vgi);
        let tail: f64 = row[k2..]
            .iter()
            .zip(b_hat[k2..].iter())
            .map(|(x, c)| x * c)
            .sum();
        r0.push(data.y()[i] - tail);
        ga.push(row[..k2].to_vec());
        ws.push(wi);
    }
    let m = ws.len();

    let degenerate = dec.v_hat.iter().all(|&x| x == 0.0);

    // Score mean and covariance at a given a; objective is the quadratic
    // form m' (M + ridge I)^{-1} m.
    let eval = |a: &[f64]| -> Option<f64> {
        let mut mean = vec![0.0f64; k2];
        let mut cov = Array2::<f64>::zeros((k2, k2));
        for i in 0..m {
            let fit_a: f64 = ga[i].iter().zip(a.iter()).map(|(x, aj)| x * aj).sum();
            let psi = psi_tau(tau, r0[i] - fit_a);
            let s = -ws[i] * psi;
            for r in 0..k2 {
                let sr = s * vg[i][r];
                mean[r] += sr;
                for c in r..k2 {
                    cov[[r, c]] += sr * (s * vg[i][c]);
                }
            }
        }
        for r in 0..k2 {
            for c in (r + 1)..k2 {
                cov[[c, r]] = cov[[r, c]];
            }
        }
        if mean.iter().all(|&x| x == 0.0) {
            return Some(0.0);
        }
        let trace: f64 = (0..k2).map(|r| cov[[r, r]]).sum();
        let ridge = opts.ridge.unwrap_or(1e-10 * trace / k2 as f64);
        for r in 0..k2 {
            cov[[r, r]] += ridge;
        }
        let lu = Lu::factor(&cov)?;
        let x = lu.solve_vec(&mean);
        Some(mean.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
    };

    let radius = opts
        .radius
        .unwrap_or_else(|| 1.0f64.max(a_hat.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))));
    let lo: Vec<f64> = a_hat.iter().map(|v| v - radius).collect();
    let hi: Vec<f64> = a_hat.iter().map(|v| v + radius).collect();
    let clamp = |a: &mut [f64]| {
        for j in 0..k2 {
            a[j] = a[j].clamp(lo[j], hi[j]);
        }
    };

    let f_ahat = eval(&a_hat).ok_or(Error::DegenerateScoreCov)?;
    if degenerate {
        return Ok(DsOutcome {
            a: a_hat,
            objective: f_ahat,
            improved: false,
            degenerate: true,
        });
    }

    let eval_clamped = |a: &[f64]| -> f64 {
        let mut c = a.to_vec();
        clamp(&mut c);
        eval(&c).unwrap_or(f64::INFINITY)
    };

    let mut best = a_hat.clone();
    let mut best_f = f_ahat;
    let consider = |a: &[f64], f: f64, best: &mut Vec<f64>, best_f: &mut f64| {
        if f < *best_f {
            *best_f = f;
            best.clear();
            best.extend_from_slice(a);
        }
    };

    // deterministic starts: a-hat, coarse grid best (small 2k), axis pokes
    let mut starts: Vec<Vec<f64>> = vec![a_hat.clone()];
    if k2 <= 4 && opts.grid_points >= 2 {
        let gpts = opts.grid_points;
        let mut best_grid = a_hat.clone();
        let mut best_grid_f = f_ahat;
        let mut idx = vec![0usize; k2];
        loop {
            let a: Vec<f64> = (0..k2)
                .map(|j| lo[j] + (hi[j] - lo[j]) * idx[j] as f64 / (gpts - 1) as f64)
                .collect();
            let f = eval_clamped(&a);
            consider(&a, f, &mut best_grid, &mut best_grid_f);
            let mut carry = 0;
            while carry < k2 {
                idx[carry] += 1;
                if idx[carry] < gpts {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == k2 {
                break;
            }
        }
        consider(&best_grid.clone(), best_grid_f, &mut best, &mut best_f);
        starts.push(best_grid);
    }
    for j in 0..k2 {
        for sgn in [1.0, -1.0] {
            let mut s = a_hat.clone();
            s[j] += sgn * radius / 2.0;
            starts.push(s);
        }
    }

    for start in &starts {
        let (a, f) = nelder_mead(eval_clamped, start, radius / 4.0, opts.nm_max_iter);
        let mut a = a;
        clamp(&mut a);
        consider(&a, f, &mut best, &mut best_f);
    }

    // compass polish at decreasing step sizes
    let mut step = radius / 8.0;
    while step > 1e-6 * radius {
        let mut moved = true;
        while moved {
            moved = false;
            for j in 0..k2 {
                for sgn in [1.0, -1.0] {
                    let mut cand = best.clone();
                    cand[j] += sgn * step;
                    clamp(&mut cand);
                    let f = eval_clamped(&cand);
                    if f < best_f {
                        best_f = f;
                        best = cand;
                        moved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }

    let improved = best_f < f_ahat;
    Ok(DsOutcome {
        a: if improved { best } else { a_hat },
        objective: if improved { best_f } else { f_ahat },
        improved,
        degenerate: false,
    })
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    scale: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), f(start)));
    for j in 0..n {
        let mut p = start.to_vec();
        p[j] += scale;
        let fp = f(&p);
        simplex.push((p, fp));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = (simplex[n].1 - simplex[0].1).abs();
        if spread <= 1e-14 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(p, _)| p[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let refl: Vec<f64> = (0..n)
            .map(|j| centroid[j] + alpha * (centroid[j] - worst.0[j]))
            .collect();
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let exp: Vec<f64> = (0..n)
                .map(|j| centroid[j] + gamma * (refl[j] - centroid[j]))
                .collect();
            let f_exp = f(&exp);
            simplex[n] = if f_exp < f_refl { (exp, f_exp) } else { (refl, f_refl) };
        } else if f_refl < simplex[n - 1].1 {
            simplex[n] = (refl, f_refl);
        } else {
            let contr: Vec<f64> = (0..n)
                .map(|j| centroid[j] + rho * (worst.0[j] - centroid[j]))
                .collect();
            let f_contr = f(&contr);
            if f_contr < worst.1 {
                simplex[n] = (contr, f_contr);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    for j in 0..n {
                        item.0[j] = best[j] + sigma * (item.0[j] - best[j]);
                    }
                    item.1 = f(&item.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    simplex[0].clone()
}

#[derive(Debug, Clone)]
pub struct RpOutcome {
    pub a: Vec<f64>,
    pub kkt_gap: f64,
    pub iters: usize,
}

/// Reparametrization estimator: low-dimensional weighted quantile
/// regression of the transformed responses on the decorrelated A-block.
pub fn estimate_rp(
    design: &LocalizedDesign,
    data: &Dataset,
    b_hat: &[f64],
    dec: &Decorrelator,
    opts: &SolverOptions,
) -> Result<RpOutcome> {
    let v2 = dec.v2.as_ref().ok_or(Error::SingularV11 {
        cond: dec.v11_cond,
    })?;
    let k2 = 2 * design.k();
    let d = design.gamma.ncols();
    let dc = d - k2;
    let a_hat = &b_hat[..k2];
    let c_hat = &b_hat[k2..];

    // shifted nuisance coefficient c + V2' a
    let mut c_shift = c_hat.to_vec();
    for (c, val) in c_shift.iter_mut().enumerate() {
        let mut acc = 0.0;
        for r in 0..k2 {
            acc += v2[[r, c]] * a_hat[r];
        }
        *val += acc;
    }

    let active = lasso::active_rows(&design.weights)?;
    let m = active.len();
    let g = design.gamma.as_slice().expect("row-major design");
    let mut rows = Array2::zeros((m, k2));
    let mut y_t = vec![0.0; m];
    let mut w = vec![0.0; m];
    for (r, &i) in active.iter().enumerate() {
        let row = &g[i * d..(i + 1) * d];
        let (ra, rc) = row.split_at(k2);
        for j in 0..k2 {
            let mut acc = ra[j];
            for c in 0..dc {
                acc -= v2[[j, c]] * rc[c];
            }
            rows[[r, j]] = acc;
        }
        let shift: f64 = rc.iter().zip(c_shift.iter()).map(|(x, c)| x * c).sum();
        y_t[r] = data.y()[i] - shift;
        w[r] = design.weights[i];
    }

    if rows.iter().all(|&v| v == 0.0) {
        return Err(Error::SingularRefit);
    }

    let groups: Vec<(usize, usize)> = (0..design.k()).map(|g| (2 * g, 2 * g + 1)).collect();
    let sol = lasso::solve_weighted_group_qr(&rows, &y_t, &w, design.spec.tau, 0.0, &groups, opts);
    let eps = 1e-6 * (1.0 + sol.b.iter().fold(0.0f64, |a, &v| a.max(v.abs())));
    let kkt_gap = lasso::directional_kkt_gap(
        &rows,
        &y_t,
        &w,
        design.spec.tau,
        0.0,
        &groups,
        &sol.b,
        eps,
        opts.random_probes,
        opts.probe_seed,
    );
    if !sol.converged {
        return Err(Error::NonConvergence {
            iters: sol.iters,
            objective: sol.objective,
            kkt_gap,
        });
    }
    Ok(RpOutcome {
        a: sol.b,
        kkt_gap,
        iters: sol.iters,
    })
}

/// Covariance of sqrt(nh)(a-check - a*): either the empirical sandwich
/// nh sum_i w_i^2 Psi^2 (V Gamma_i)(V Gamma_i)' or the expected form
/// tau(1-tau) nu_2 V {sum_j w_j Gamma_j Gamma_j'} V'.
pub fn covariance(
    design: &LocalizedDesign,
    data: &Dataset,
    b_hat: &[f64],
    v: &Array2<f64>,
    form: CovForm,
) -> Array2<f64> {
    let rows = v.nrows();
    let d = design.gamma.ncols();
    assert_eq!(v.ncols(), d, "V column count mismatch");
    let tau = design.spec.tau;
    let g = design.gamma.as_slice().expect("row-major design");
    let nh = design.n() as f64 * design.spec.h;
    let mut out = Array2::zeros((rows, rows));
    let mut vgi = vec![0.0; rows];
    for i in 0..design.n() {
        let wi = design.weights[i];
        if wi == 0.0 {
            continue;
        }
        let row = &g[i * d..(i + 1) * d];
        for (r, slot) in vgi.iter_mut().enumerate() {
            *slot = v.row(r).iter().zip(row.iter()).map(|(a, b)| a * b).sum();
        }
        let c = match form {
            CovForm::Empirical => {
                let fit: f64 = row.iter().zip(b_hat.iter()).map(|(x, bj)| x * bj).sum();
                let psi = psi_tau(tau, data.y()[i] - fit);
                nh * wi * wi * psi * psi
            }
            CovForm::Expected => wi,
        };
        for r in 0..rows {
            for cidx in r..rows {
                out[[r, cidx]] += c * vgi[r] * vgi[cidx];
            }
        }
    }
    if let CovForm::Expected = form {
        let nu2 = design.spec.kernel.moments().nu2;
        let scale = tau * (1.0 - tau) * nu2;
        out.mapv_inplace(|x| x * scale);
    }
    for r in 0..rows {
        for c in (r + 1)..rows {
            out[[c, r]] = out[[r, c]];
        }
    }
    out
}

/// Per-coordinate normal confidence intervals
/// a_j +/- z_{1-(1-level)/2} sqrt(Sigma_jj / nh).
pub fn confidence_intervals(
    a_check: &[f64],
    sigma_a: &Array2<f64>,
    nh: f64,
    level: f64,
) -> Result<Vec<(f64, f64)>> {
    assert!(level > 0.0 && level < 1.0, "level must be in (0,1)");
    assert!(nh > 0.0, "nh must be positive");
    assert_eq!(a_check.len(), sigma_a.nrows(), "dimension mismatch");
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    let trace: f64 = (0..sigma_a.nrows()).map(|j| sigma_a[[j, j]]).sum();
    let tol = 1e-12 * (1.0 + trace.abs());
    a_check
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let mut var = sigma_a[[j, j]];
            if var < 0.0 {
                if var > -tol {
                    var = 0.0;
                } else {
                    return Err(Error::NegativeVariance(var));
                }
            }
            let half = z * (var / nh).sqrt();
            Ok((a - half, a + half))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decorrelate::Decorrelator;
    use crate::model::{build_design, Kernel, QuerySpec};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn single_obs_design() -> (Dataset, LocalizedDesign) {
        // one observation, w = 1/(n h) = 1, Gamma = (1, 0)
        let data = Dataset::new(vec![0.5], vec![0.0], array![[1.0]], vec![0]).unwrap();
        let spec = QuerySpec::new(0.5, 0.0, 1.0, Kernel::Box).unwrap();
        let design = build_design(&data, &spec).unwrap();
        (data, design)
    }

    fn dec_identity(v: Array2<f64>) -> Decorrelator {
        Decorrelator {
            block_kkt: Array2::zeros((1, v.ncols() / 2)),
            v2: None,
            v11_cond: 1.0,
            iters: 0,
            objective: 0.0,
            lambda_v: 0.1,
            v_hat: v,
        }
    }

    #[test]
    fn score_d_examples() {
        let (data, design) = single_obs_design();
        // V = 0 -> zero vector
        let z = score_d(&design, &data, &[0.0, 0.0], &Array2::zeros((2, 2)));
        assert_eq!(z, vec![0.0, 0.0]);
        // single obs, w=1, V=I, Gamma=(1,0), residual 0.5, tau=0.5 -> (-0.25? no)
        let s = score_d(&design, &data, &[0.0, 0.0], &Array2::eye(2));
        assert_abs_diff_eq!(s[0], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 0.0);
        // scaling V scales the output
        let s2 = score_d(&design, &data, &[0.0, 0.0], &(Array2::eye(2) * 3.0));
        assert_abs_diff_eq!(s2[0], 3.0 * s[0], epsilon = 1e-15);
    }

    #[test]
    fn os_examples() {
        let (data, design) = single_obs_design();
        // V-hat = 0 -> a-check = a-hat
        let dec0 = dec_identity(Array2::zeros((2, 2)));
        let a = estimate_os(&design, &data, &[0.7, 0.1], &dec0);
        assert_eq!(a, vec![0.7, 0.1]);
        // one-term correction
        let dec1 = dec_identity(Array2::eye(2));
        let a = estimate_os(&design, &data, &[0.0, 0.0], &dec1);
        assert_abs_diff_eq!(a[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1], 0.0);
    }

    #[test]
    fn covariance_examples() {
        let (data, design) = single_obs_design();
        let v = Array2::eye(2);
        // empirical, single obs: 0.25 [[1,0],[0,0]] (w=1, nh=1, psi=0.5)
        let s = covariance(&design, &data, &[0.0, 0.0], &v, CovForm::Empirical);
        assert_abs_diff_eq!(s[[0, 0]], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s[[0, 1]], 0.0);
        assert_abs_diff_eq!(s[[1, 1]], 0.0);
        // expected, box kernel nu2 = 1, tau = 0.5: 0.25 [[1,0],[0,0]]
        let s = covariance(&design, &data, &[0.0, 0.0], &v, CovForm::Expected);
        assert_abs_diff_eq!(s[[0, 0]], 0.25, epsilon = 1e-15);
        // V = 0 -> zero matrix
        let s = covariance(&design, &data, &[0.0, 0.0], &Array2::zeros((2, 2)), CovForm::Empirical);
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ci_reference_value() {
        let sigma = array![[0.04]];
        let ci = confidence_intervals(&[0.5], &sigma, 100.0, 0.95).unwrap();
        assert_abs_diff_eq!(ci[0].0, 0.4608, epsilon = 1e-4);
        assert_abs_diff_eq!(ci[0].1, 0.5392, epsilon = 1e-4);
        // zero variance -> degenerate interval
        let ci = confidence_intervals(&[0.5], &array![[0.0]], 100.0, 0.95).unwrap();
        assert_eq!(ci[0], (0.5, 0.5));
        // wider at higher level, same centers
        let ci95 = confidence_intervals(&[0.5], &sigma, 100.0, 0.95).unwrap();
        let ci99 = confidence_intervals(&[0.5], &sigma, 100.0, 0.99).unwrap();
        assert!(ci99[0].1 - ci99[0].0 > ci95[0].1 - ci95[0].0);
        assert_abs_diff_eq!(
            ci99[0].0 + ci99[0].1,
            ci95[0].0 + ci95[0].1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ci_width_scales_with_nh() {
        let sigma = array![[0.5]];
        let w1 = {
            let ci = confidence_intervals(&[0.0], &sigma, 25.0, 0.95).unwrap();
            ci[0].1 - ci[0].0
        };
        let w4 = {
            let ci = confidence_intervals(&[0.0], &sigma, 100.0, 0.95).unwrap();
            ci[0].1 - ci[0].0
        };
        assert_abs_diff_eq!(w1, 2.0 * w4, epsilon = 1e-12);
    }

    #[test]
    fn ds_degenerate_v_returns_a_hat() {
        let (data, design) = single_obs_design();
        let dec0 = dec_identity(Array2::zeros((2, 2)));
        let out = estimate_ds(&design, &data, &[0.7, 0.1], &dec0, &DsOptions::default()).unwrap();
        assert_eq!(out.a, vec![0.7, 0.1]);
        assert!(out.degenerate);
        assert!(!out.improved);
    }

    #[test]
    fn rp_requires_v2() {
        let (data, design) = single_obs_design();
        let dec0 = dec_identity(Array2::zeros((2, 2)));
        let err = estimate_rp(
            &design,
            &data,
            &[0.0, 0.0],
            &dec0,
            &SolverOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.category(), "singular_v11");
    }
}
