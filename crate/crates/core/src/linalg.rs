//! Small dense linear-algebra helpers: LU with partial pivoting for the
//! low-dimensional solves, and power iteration for spectral norms. Matrices
//! here are at most the size of the local design, so a plain pure-Rust
//! factorization is all that is needed.

use ndarray::Array2;

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Array2<f64>,
    piv: Vec<usize>,
}

impl Lu {
    /// Factorize a square matrix. Returns `None` when a pivot collapses to
    /// zero (matrix numerically singular).
    pub fn factor(a: &Array2<f64>) -> Option<Lu> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Lu::factor expects a square matrix");
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[[col, col]].abs();
            for r in (col + 1)..n {
                let v = lu[[r, col]].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = r;
                }
            }
            if !(pivot_val > 0.0) || !pivot_val.is_finite() {
                return None;
            }
            if pivot_row != col {
                for c in 0..n {
                    lu.swap([col, c], [pivot_row, c]);
                }
                piv.swap(col, pivot_row);
            }
            let d = lu[[col, col]];
            for r in (col + 1)..n {
                let f = lu[[r, col]] / d;
                lu[[r, col]] = f;
                for c in (col + 1)..n {
                    lu[[r, c]] -= f * lu[[col, c]];
                }
            }
        }
        Some(Lu { lu, piv })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&i| b[i]).collect();
        // forward
        for r in 1..n {
            for c in 0..r {
                x[r] -= self.lu[[r, c]] * x[c];
            }
        }
        // backward
        for r in (0..n).rev() {
            for c in (r + 1)..n {
                x[r] -= self.lu[[r, c]] * x[c];
            }
            x[r] /= self.lu[[r, r]];
        }
        x
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.lu.nrows();
        let mut inv = Array2::zeros((n, n));
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve_vec(&e);
            for i in 0..n {
                inv[[i, j]] = col[i];
            }
            e[j] = 0.0;
        }
        inv
    }
}

/// Infinity-norm condition number estimate via explicit inverse;
/// `f64::INFINITY` when singular. Intended for small blocks.
pub fn cond_inf(a: &Array2<f64>) -> f64 {
    match Lu::factor(a) {
        None => f64::INFINITY,
        Some(lu) => {
            let inv = lu.inverse();
            norm_inf(a) * norm_inf(&inv)
        }
    }
}

fn norm_inf(a: &Array2<f64>) -> f64 {
    a.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of a symmetric PSD matrix via power iteration with a
/// deterministic start. Returns 0 for the zero matrix.
pub fn max_eigen_psd(h: &Array2<f64>, iters: usize) -> f64 {
    let n = h.nrows();
    assert_eq!(n, h.ncols());
    if n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    let mut w = vec![0.0; n];
    for _ in 0..iters {
        mat_vec_sym(h, &v, &mut w);
        let norm = l2(&w);
        if norm == 0.0 {
            return 0.0;
        }
        lambda = dot(&v, &w);
        for (vi, wi) in v.iter_mut().zip(w.iter()) {
            *vi = *wi / norm;
        }
    }
    lambda.max(0.0)
}

/// Spectral norm of a rectangular matrix via power iteration on K'K.
pub fn spectral_norm(k: &Array2<f64>, iters: usize) -> f64 {
    let (m, n) = k.dim();
    if m == 0 || n == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
    normalize(&mut v);
    let mut kv = vec![0.0; m];
    let mut ktkv = vec![0.0; n];
    let mut sq = 0.0;
    for _ in 0..iters {
        for (i, row) in k.rows().into_iter().enumerate() {
            kv[i] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        ktkv.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in k.rows().into_iter().enumerate() {
            let c = kv[i];
            if c != 0.0 {
                for (j, a) in row.iter().enumerate() {
                    ktkv[j] += a * c;
                }
            }
        }
        let norm = l2(&ktkv);
        if norm == 0.0 {
            return 0.0;
        }
        sq = dot(&v, &ktkv);
        for (vi, wi) in v.iter_mut().zip(ktkv.iter()) {
            *vi = *wi / norm;
        }
    }
    sq.max(0.0).sqrt()
}

fn mat_vec_sym(a: &Array2<f64>, x: &[f64], out: &mut [f64]) {
    for (i, row) in a.rows().into_iter().enumerate() {
        out[i] = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn lu_solves_small_system() {
        let a = array![[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, -1.0, 2.0]];
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve_vec(&[1.0, 2.0, 3.0]);
        // verify A x = b
        for i in 0..3 {
            let got: f64 = (0..3).map(|j| a[[i, j]] * x[j]).sum();
            assert_abs_diff_eq!(got, [1.0, 2.0, 3.0][i], epsilon = 1e-12);
        }
        let inv = lu.inverse();
        let prod = a.dot(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[[i, j]], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lu_detects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(Lu::factor(&a).is_none());
        assert!(cond_inf(&a).is_infinite());
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let a = array![[3.0, 1.0], [1.0, 2.0]];
        let top = 0.5 * (5.0 + 5f64.sqrt()); // eigenvalues (5 +/- sqrt 5)/2
        assert_abs_diff_eq!(max_eigen_psd(&a, 200), top, epsilon = 1e-9);
    }

    #[test]
    fn spectral_norm_matches_eigen_route() {
        let k = array![[1.0, 2.0, 0.5], [0.0, 1.0, -1.0]];
        let ktk = k.t().dot(&k);
        let via_eigen = max_eigen_psd(&ktk, 300).sqrt();
        assert_abs_diff_eq!(spectral_norm(&k, 300), via_eigen, epsilon = 1e-9);
    }
}
