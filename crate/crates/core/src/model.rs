//! Domain types and the shared building blocks: check/score functions,
//! kernels, kernel weights, and the local-linear design.

use crate::error::{Error, Result};
use crate::normal::phi;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Observations plus the index set of coefficients of interest.
///
/// Columns of `x` are the covariates; `a_set` holds 0-based column indices,
/// in the order that defines the A-block layout of every downstream object.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    u: Vec<f64>,
    x: Array2<f64>,
    a_set: Vec<usize>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, u: Vec<f64>, x: Array2<f64>, a_set: Vec<usize>) -> Result<Self> {
        let n = y.len();
        let (xn, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidInput("need n >= 1 and p >= 1".into()));
        }
        if u.len() != n || xn != n {
            return Err(Error::DimensionMismatch(format!(
                "y has {n} rows, u has {}, x has {xn}",
                u.len()
            )));
        }
        if a_set.is_empty() || a_set.len() > p {
            return Err(Error::InvalidInput("need 1 <= |A| <= p".into()));
        }
        let mut seen = vec![false; p];
        for &j in &a_set {
            if j >= p {
                return Err(Error::InvalidInput(format!(
                    "A contains column {j}, but p = {p}"
                )));
            }
            if seen[j] {
                return Err(Error::InvalidInput(format!("A contains column {j} twice")));
            }
            seen[j] = true;
        }
        let finite =
            y.iter().all(|v| v.is_finite()) && u.iter().all(|v| v.is_finite()) && x.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite entry in data".into()));
        }
        Ok(Dataset { y, u, x, a_set })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn k(&self) -> usize {
        self.a_set.len()
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn u(&self) -> &[f64] {
        &self.u
    }
    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }
    pub fn a_set(&self) -> &[usize] {
        &self.a_set
    }
}

/// Query point: quantile level, evaluation point of the index variable,
/// bandwidth, and kernel.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuerySpec {
    pub tau: f64,
    pub u0: f64,
    pub h: f64,
    pub kernel: Kernel,
}

impl QuerySpec {
    pub fn new(tau: f64, u0: f64, h: f64, kernel: Kernel) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidInput(format!("tau={tau} not in (0,1)")));
        }
        if !(h > 0.0) || !h.is_finite() || !u0.is_finite() {
            return Err(Error::InvalidInput(format!("bad query point (u0={u0}, h={h})")));
        }
        Ok(QuerySpec { tau, u0, h, kernel })
    }
}

/// Rule-of-thumb bandwidth h = 4 n^{-1/3}.
pub fn default_bandwidth(n: usize) -> f64 {
    4.0 * (n as f64).powf(-1.0 / 3.0)
}

/// Closed-form kernel constants: sup K, integral of K, of K^2, and the
/// second and fourth moments.
#[derive(Debug, Clone, Copy)]
pub struct KernelMoments {
    pub nu0: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub mu2: f64,
    pub mu4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Box,
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Kernel value at `t`. The box kernel uses the strict window
    /// 1{|t| < 0.5}, so boundary points get weight zero.
    pub fn eval(self, t: f64) -> f64 {
        match self {
            Kernel::Box => {
                if t.abs() < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Gaussian => phi(t),
            Kernel::Epanechnikov => {
                if t.abs() <= 1.0 {
                    0.75 * (1.0 - t * t)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn moments(self) -> KernelMoments {
        match self {
            Kernel::Box => KernelMoments {
                nu0: 1.0,
                nu1: 1.0,
                nu2: 1.0,
                mu2: 1.0 / 12.0,
                mu4: 1.0 / 80.0,
            },
            Kernel::Gaussian => KernelMoments {
                nu0: 0.3989422804014327,
                nu1: 1.0,
                nu2: 0.28209479177387814, // 1 / (2 sqrt(pi))
                mu2: 1.0,
                mu4: 3.0,
            },
            Kernel::Epanechnikov => KernelMoments {
                nu0: 0.75,
                nu1: 1.0,
                nu2: 0.6,
                mu2: 0.2,
                mu4: 3.0 / 35.0,
            },
        }
    }

    pub fn parse(s: &str) -> Result<Kernel> {
        match s.to_ascii_lowercase().as_str() {
            "box" => Ok(Kernel::Box),
            "gaussian" => Ok(Kernel::Gaussian),
            "epanechnikov" | "epa" => Ok(Kernel::Epanechnikov),
            other => Err(Error::InvalidInput(format!("unknown kernel '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Box => "box",
            Kernel::Gaussian => "gaussian",
            Kernel::Epanechnikov => "epanechnikov",
        }
    }
}

/// Check loss rho_tau(v) = v (tau - 1{v < 0}).
#[inline]
pub fn rho_tau(tau: f64, v: f64) -> f64 {
    assert!(tau > 0.0 && tau < 1.0, "rho_tau: tau={tau} not in (0,1)");
    v * (tau - if v < 0.0 { 1.0 } else { 0.0 })
}

/// Score Psi_tau(v) = tau - 1{v < 0}; the indicator is strict, so
/// Psi_tau(0) = tau.
#[inline]
pub fn psi_tau(tau: f64, v: f64) -> f64 {
    assert!(tau > 0.0 && tau < 1.0, "psi_tau: tau={tau} not in (0,1)");
    tau - if v < 0.0 { 1.0 } else { 0.0 }
}

/// Knight decomposition of the check-loss increment
/// rho_tau(y-(q+delta)) - rho_tau(y-q) into a linear score term and the
/// integral remainder, both in closed form.
pub fn knight_decompose(tau: f64, y: f64, q: f64, delta: f64) -> (f64, f64) {
    let w_sharp = -delta * psi_tau(tau, y - q);
    let ind_hi = (q + delta <= y && y < q) as i32 as f64;
    let ind_lo = (q <= y && y < q + delta) as i32 as f64;
    let w_natural = (y - (q + delta)) * (ind_hi - ind_lo);
    (w_sharp, w_natural)
}

/// Kernel weights w_i = (nh)^{-1} K((u_i - u0)/h).
pub fn kernel_weights(spec: &QuerySpec, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty index vector".into()));
    }
    let scale = 1.0 / (n as f64 * spec.h);
    let w: Vec<f64> = u
        .iter()
        .map(|&ui| scale * spec.kernel.eval((ui - spec.u0) / spec.h))
        .collect();
    if w.iter().all(|&wi| wi == 0.0) {
        return Err(Error::DegenerateWindow {
            u0: spec.u0,
            h: spec.h,
        });
    }
    Ok(w)
}

/// Local-linear design at a fixed (tau, u0, h).
///
/// Columns are interleaved per variable: variable slot `s` owns the pair
/// (2s, 2s+1) = (level, derivative), with the A-block variables occupying
/// the first k slots in `a_set` order, followed by the complement in
/// ascending column order. This keeps the A-block contiguous (columns
/// 0..2k), which is what the Step-3 slicing relies on; `to_paper_order`
/// maps back to the half-block layout [levels..., derivatives...].
#[derive(Debug, Clone)]
pub struct LocalizedDesign {
    pub spec: QuerySpec,
    pub weights: Vec<f64>,
    pub gamma: Array2<f64>,
    /// (level, derivative) column pairs, one per variable slot.
    pub groups: Vec<(usize, usize)>,
    /// Columns of the A-block; always 0..2k under the interleaved layout.
    pub a_cols: Vec<usize>,
    /// Dataset column index occupying each variable slot.
    pub var_order: Vec<usize>,
    k: usize,
}

impl LocalizedDesign {
    pub fn n(&self) -> usize {
        self.gamma.nrows()
    }
    pub fn p(&self) -> usize {
        self.gamma.ncols() / 2
    }
    pub fn k(&self) -> usize {
        self.k
    }

    /// Map a length-2p vector from the internal interleaved order to the
    /// half-block order [X_A, X_{A^c}, (U-u)X_A, (U-u)X_{A^c}].
    pub fn to_paper_order(&self, v: &[f64]) -> Vec<f64> {
        let p = self.p();
        assert_eq!(v.len(), 2 * p, "expected a length-2p vector");
        let mut out = vec![0.0; 2 * p];
        for s in 0..p {
            out[s] = v[2 * s];
            out[s + p] = v[2 * s + 1];
        }
        out
    }

    /// Inverse of `to_paper_order`.
    pub fn from_paper_order(&self, v: &[f64]) -> Vec<f64> {
        let p = self.p();
        assert_eq!(v.len(), 2 * p, "expected a length-2p vector");
        let mut out = vec![0.0; 2 * p];
        for s in 0..p {
            out[2 * s] = v[s];
            out[2 * s + 1] = v[s + p];
        }
        out
    }
}

/// Assemble kernel weights and the local-linear design matrix.
pub fn build_design(data: &Dataset, spec: &QuerySpec) -> Result<LocalizedDesign> {
    let weights = kernel_weights(spec, data.u())?;
    let n = data.n();
    let p = data.p();
    let k = data.k();

    let mut var_order = Vec::with_capacity(p);
    var_order.extend_from_slice(data.a_set());
    let in_a = {
        let mut flags = vec![false; p];
        for &j in data.a_set() {
            flags[j] = true;
        }
        flags
    };
    for j in 0..p {
        if !in_a[j] {
            var_order.push(j);
        }
    }

    let x = data.x();
    let u = data.u();
    let mut gamma = Array2::zeros((n, 2 * p));
    for i in 0..n {
        let du = u[i] - spec.u0;
        for (s, &j) in var_order.iter().enumerate() {
            let xv = x[[i, j]];
            gamma[[i, 2 * s]] = xv;
            gamma[[i, 2 * s + 1]] = du * xv;
        }
    }

    let groups: Vec<(usize, usize)> = (0..p).map(|s| (2 * s, 2 * s + 1)).collect();
    let a_cols: Vec<usize> = (0..2 * k).collect();

    Ok(LocalizedDesign {
        spec: *spec,
        weights,
        gamma,
        groups,
        a_cols,
        var_order,
        k,
    })
}
