//! Step 2 plug-ins: Powell and residual bandwidths, the data-adaptive
//! conditional density estimate f_hat, and the plug-in Hessian.

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Dataset, LocalizedDesign};
use crate::normal::{normal_quantile, phi};
use ndarray::Array2;

/// Residual-based density objects for one localized fit.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub h_p: f64,
    pub h_f: f64,
    pub residuals: Vec<f64>,
    /// f_hat_i in {0, 1/(2 h_f)} exactly.
    pub f_hat: Vec<f64>,
    /// Weighted variance of the residuals (plug-in form, no Bessel
    /// correction).
    pub w_var: f64,
    /// Weighted interquartile range Q_{0.75} - Q_{0.25}.
    pub w_iqr: f64,
    /// h_p was clamped to keep tau +/- h_p inside (0,1).
    pub h_p_clamped: bool,
}

/// Plug-in Hessian H = sum_i w_i f_hat_i Gamma_i Gamma_i'.
#[derive(Debug, Clone)]
pub struct PluginHessian {
    pub h_mat: Array2<f64>,
    /// Every w_i * f_hat_i vanished; the matrix is identically zero and
    /// Step 2 must refuse it.
    pub all_zero: bool,
}

/// Powell bandwidth
/// h_p = n^{-1/3} z_{0.975}^{2/3} {1.5 phi^2(z_tau) / (2 z_tau^2 + 1)}^{1/3}.
pub fn powell_bandwidth(tau: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("powell bandwidth needs n >= 2, got {n}")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidInput(format!("tau={tau} not in (0,1)")));
    }
    let z975 = normal_quantile(0.975);
    let zt = normal_quantile(tau);
    let pt = phi(zt);
    let h_p = (n as f64).powf(-1.0 / 3.0)
        * z975.powf(2.0 / 3.0)
        * (1.5 * pt * pt / (2.0 * zt * zt + 1.0)).powf(1.0 / 3.0);
    if tau + h_p >= 1.0 || tau - h_p <= 0.0 {
        return Err(Error::BandwidthOverflow { tau, h_p });
    }
    Ok(h_p)
}

/// Left-continuous weighted quantile
/// Q_alpha = inf{q : sum_i w_i 1{e_i <= q} / sum_i w_i >= alpha};
/// always attained at a data point.
pub fn weighted_quantile(e: &[f64], w: &[f64], alpha: f64) -> Result<f64> {
    if e.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values vs {} weights",
            e.len(),
            w.len()
        )));
    }
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let mut idx: Vec<usize> = (0..e.len()).collect();
    idx.sort_by(|&a, &b| e[a].partial_cmp(&e[b]).expect("finite residuals"));
    let mut cum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        // accumulate the whole tie run before testing the condition
        let v = e[idx[i]];
        while i < idx.len() && e[idx[i]] == v {
            cum += w[idx[i]];
            i += 1;
        }
        if cum / total >= alpha {
            return Ok(v);
        }
    }
    Ok(e[*idx.last().expect("nonempty")])
}

/// Residual bandwidth
/// h_f = (Phi^{-1}(tau+h_p) - Phi^{-1}(tau-h_p)) min{sqrt Var(e), IQR/1.34},
/// with weighted variance and weighted quantiles throughout.
pub fn residual_bandwidth_hf(tau: f64, h_p: f64, e: &[f64], w: &[f64]) -> Result<f64> {
    if !(tau + h_p < 1.0 && tau - h_p > 0.0) {
        return Err(Error::BandwidthOverflow { tau, h_p });
    }
    let (var, iqr) = weighted_spread(e, w)?;
    let scale = var.sqrt().min(iqr / 1.34);
    if scale == 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    Ok((normal_quantile(tau + h_p) - normal_quantile(tau - h_p)) * scale)
}

/// Weighted plug-in variance and weighted IQR of the residuals.
pub fn weighted_spread(e: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    if e.len() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} values vs {} weights",
            e.len(),
            w.len()
        )));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let mean: f64 = e.iter().zip(w.iter()).map(|(ei, wi)| ei * wi).sum::<f64>() / total;
    let var: f64 = e
        .iter()
        .zip(w.iter())
        .map(|(ei, wi)| wi * (ei - mean) * (ei - mean))
        .sum::<f64>()
        / total;
    let iqr = weighted_quantile(e, w, 0.75)? - weighted_quantile(e, w, 0.25)?;
    Ok((var, iqr))
}

/// Histogram density values f_hat_i = 1{|e_i| <= h_f} / (2 h_f); the window
/// is closed, matching the algorithm display.
pub fn f_hat(e: &[f64], h_f: f64) -> Vec<f64> {
    assert!(h_f > 0.0, "h_f must be positive");
    let v = 1.0 / (2.0 * h_f);
    e.iter()
        .map(|&ei| if ei.abs() <= h_f { v } else { 0.0 })
        .collect()
}

/// Plug-in Hessian from kernel weights and density values.
pub fn plugin_hessian(design: &LocalizedDesign, f_hat: &[f64]) -> PluginHessian {
    let n = design.n();
    assert_eq!(f_hat.len(), n, "f_hat length mismatch");
    let d = design.gamma.ncols();
    let g = design.gamma.as_slice().expect("row-major design");
    let mut h = Array2::zeros((d, d));
    let mut any = false;
    for i in 0..n {
        let c = design.weights[i] * f_hat[i];
        if c == 0.0 {
            continue;
        }
        any = true;
        let row = &g[i * d..(i + 1) * d];
        for a in 0..d {
            let ca = c * row[a];
            if ca == 0.0 {
                continue;
            }
            for b in a..d {
                h[[a, b]] += ca * row[b];
            }
        }
    }
    // mirror the upper triangle for exact symmetry
    for a in 0..d {
        for b in (a + 1)..d {
            h[[b, a]] = h[[a, b]];
        }
    }
    PluginHessian {
        h_mat: h,
        all_zero: !any,
    }
}

/// Assemble the full Step-2 density estimate from a Step-1 coefficient.
/// If the Powell bandwidth would push tau +/- h_p outside (0,1), it is
/// clamped to 0.99 min(tau, 1-tau) and flagged.
pub fn estimate_density(
    design: &LocalizedDesign,
    data: &Dataset,
    b: &[f64],
) -> Result<DensityEstimate> {
    let tau = design.spec.tau;
    let residuals = crate::lasso::residuals(design, data, b);
    let (h_p, h_p_clamped) = match powell_bandwidth(tau, data.n()) {
        Ok(h) => (h, false),
        Err(Error::BandwidthOverflow { .. }) => (0.99 * tau.min(1.0 - tau), true),
        Err(e) => return Err(e),
    };
    let (w_var, w_iqr) = weighted_spread(&residuals, &design.weights)?;
    let h_f = residual_bandwidth_hf(tau, h_p, &residuals, &design.weights)?;
    let f = f_hat(&residuals, h_f);
    Ok(DensityEstimate {
        h_p,
        h_f,
        residuals,
        f_hat: f,
        w_var,
        w_iqr,
        h_p_clamped,
    })
}

/// Smallest eigenvalue bound check used by tests and diagnostics: returns
/// the minimum Rayleigh quotient estimate from a few deterministic probes.
pub fn min_eigen_lower_bound(h: &Array2<f64>) -> f64 {
    // shift-and-invert is overkill here; use lambda_min >= trace-based bound
    // via power iteration on (c I - H)
    let d = h.nrows();
    if d == 0 {
        return 0.0;
    }
    let c = linalg::max_eigen_psd(h, 200) * 1.01 + 1e-30;
    let mut shifted = Array2::from_shape_fn((d, d), |(i, j)| -h[[i, j]]);
    for i in 0..d {
        shifted[[i, i]] += c;
    }
    c - linalg::max_eigen_psd(&shifted, 200)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_design, Kernel, QuerySpec};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn powell_reference_values() {
        // frozen from an independent evaluation of the closed form
        assert_abs_diff_eq!(powell_bandwidth(0.5, 1000).unwrap(), 0.09717, epsilon = 1e-4);
        assert_abs_diff_eq!(powell_bandwidth(0.25, 1000).unwrap(), 0.06729, epsilon = 1e-4);
    }

    #[test]
    fn powell_power_law() {
        let h1 = powell_bandwidth(0.5, 1000).unwrap();
        let h8 = powell_bandwidth(0.5, 8000).unwrap();
        assert_abs_diff_eq!(h8 / h1, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn powell_overflow_at_extreme_tau() {
        // tiny n and extreme tau push tau - h_p below zero
        assert!(matches!(
            powell_bandwidth(0.01, 2),
            Err(Error::BandwidthOverflow { .. })
        ));
    }

    #[test]
    fn weighted_quantile_examples() {
        let q = weighted_quantile(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(q, 2.0);
        let q = weighted_quantile(&[1.0, 2.0], &[3.0, 1.0], 0.5).unwrap();
        assert_eq!(q, 1.0);
        let q = weighted_quantile(&[5.0], &[0.7], 0.3).unwrap();
        assert_eq!(q, 5.0);
        assert!(matches!(
            weighted_quantile(&[1.0], &[0.0], 0.5),
            Err(Error::ZeroWeights)
        ));
    }

    #[test]
    fn weighted_quantile_matches_sort_scan_reference() {
        // reference implementation: sort pairs, scan cumulative weight
        fn reference(e: &[f64], w: &[f64], alpha: f64) -> f64 {
            let mut pairs: Vec<(f64, f64)> = e.iter().cloned().zip(w.iter().cloned()).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let total: f64 = w.iter().sum();
            let mut cum = 0.0;
            let mut i = 0;
            while i < pairs.len() {
                let v = pairs[i].0;
                while i < pairs.len() && pairs[i].0 == v {
                    cum += pairs[i].1;
                    i += 1;
                }
                if cum / total >= alpha {
                    return v;
                }
            }
            pairs.last().unwrap().0
        }
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.random_range(1..20);
            let e: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(-5i32..5) as f64) * 0.5)
                .collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            if w.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let alpha = rng.random_range(0.01..0.99);
            assert_eq!(
                weighted_quantile(&e, &w, alpha).unwrap(),
                reference(&e, &w, alpha)
            );
        }
    }

    #[test]
    fn hf_reference_value() {
        // tau=0.5, h_p=0.09717, sqrt(Var)=1, IQR/1.34=2 -> 2 Phi^{-1}(0.59717)
        // Build residuals with weighted variance 1 and large IQR.
        // Easier: call the formula pieces directly.
        let res = residual_bandwidth_hf(
            0.5,
            0.09717,
            &[-1.0, 1.0, -1.0, 1.0],
            &[1.0, 1.0, 1.0, 1.0],
        )
        .unwrap();
        // sqrt(Var) = 1, IQR = 2 -> min(1, 2/1.34) = 1
        let expect = normal_quantile(0.59717) - normal_quantile(0.40283);
        assert_abs_diff_eq!(res, expect, epsilon = 1e-12);
        // frozen from an independent quantile evaluation of the same formula
        assert_abs_diff_eq!(res, 0.49206, epsilon = 1e-4);
    }

    #[test]
    fn hf_scales_linearly_in_residual_scale() {
        let e = [-1.0, 0.5, 2.0, -0.3];
        let w = [1.0, 2.0, 1.0, 0.5];
        let h1 = residual_bandwidth_hf(0.5, 0.1, &e, &w).unwrap();
        let e3: Vec<f64> = e.iter().map(|v| 3.0 * v).collect();
        let h3 = residual_bandwidth_hf(0.5, 0.1, &e3, &w).unwrap();
        assert_abs_diff_eq!(h3, 3.0 * h1, epsilon = 1e-12);
    }

    #[test]
    fn hf_degenerate_residuals() {
        assert!(matches!(
            residual_bandwidth_hf(0.5, 0.1, &[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0]),
            Err(Error::DegenerateResiduals)
        ));
    }

    #[test]
    fn f_hat_window() {
        let f = f_hat(&[0.1, 0.6, 0.5], 0.5);
        assert_eq!(f, vec![1.0, 0.0, 1.0]); // closed window includes |e|=h_f
    }

    #[test]
    fn f_hat_histogram_identity() {
        let e = [0.1, -0.4, 0.9, 0.0, -1.2];
        let w = [0.2, 0.3, 0.1, 0.25, 0.15];
        let h_f = 0.45;
        let f = f_hat(&e, h_f);
        let lhs: f64 = w
            .iter()
            .zip(f.iter())
            .map(|(wi, fi)| wi * fi * 2.0 * h_f)
            .sum();
        let rhs: f64 = w
            .iter()
            .zip(e.iter())
            .map(|(wi, ei)| if ei.abs() <= h_f { *wi } else { 0.0 })
            .sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn hessian_examples() {
        // single obs, w=1, f=1, Gamma=(1,0) -> [[1,0],[0,0]]
        let data = Dataset::new(vec![1.0], vec![0.0], array![[1.0]], vec![0]).unwrap();
        let spec = QuerySpec::new(0.5, 0.0, 1.0, Kernel::Box).unwrap();
        let design = build_design(&data, &spec).unwrap();
        // w = 1/(n h) = 1, du = 0 so Gamma = (1, 0)
        let h = plugin_hessian(&design, &[1.0]);
        assert!(!h.all_zero);
        assert_abs_diff_eq!(h.h_mat[[0, 0]], 1.0);
        assert_abs_diff_eq!(h.h_mat[[0, 1]], 0.0);
        assert_abs_diff_eq!(h.h_mat[[1, 1]], 0.0);

        let hz = plugin_hessian(&design, &[0.0]);
        assert!(hz.all_zero);
        assert!(hz.h_mat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hessian_symmetric_psd_on_random_instances() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(3..12);
            let p = rng.random_range(1..4);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
            let data = Dataset::new(y, u, x, vec![0]).unwrap();
            let spec = QuerySpec::new(0.5, 0.0, 3.0, Kernel::Box).unwrap();
            let design = build_design(&data, &spec).unwrap();
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
            let h = plugin_hessian(&design, &f);
            let d = h.h_mat.nrows();
            let mut trace = 0.0;
            for a in 0..d {
                trace += h.h_mat[[a, a]];
                for b in 0..d {
                    assert_abs_diff_eq!(h.h_mat[[a, b]], h.h_mat[[b, a]], epsilon = 1e-12);
                }
            }
            assert!(min_eigen_lower_bound(&h.h_mat) >= -1e-10 * trace.max(1.0));
        }
    }
}
