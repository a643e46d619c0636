//! Householder QR least squares on small dense column-major matrices.

/// Relative tolerance on |R_jj| against the norm of column j.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub(crate) struct QrSolution {
    pub coefficients: Vec<f64>,
    /// Upper-triangular R, row-major p x p.
    pub r: Vec<f64>,
    pub p: usize,
}

pub(crate) enum QrFailure {
    /// Indices of columns numerically dependent on earlier columns.
    Dependent(Vec<usize>),
}

/// Solves min ||X b - y|| for X given as columns of equal length n >= p.
pub(crate) fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<QrSolution, QrFailure> {
    let p = columns.len();
    let n = y.len();
    let norms: Vec<f64> = columns.iter().map(|c| norm(c)).collect();
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = y.to_vec();
    let mut dependent = Vec::new();

    // `row` is the next pivot row; skipped (dependent) columns do not consume one
    let mut row = 0;
    for j in 0..p {
        let alpha = norm(&a[j][row..]);
        if norms[j] == 0.0 || alpha <= RANK_TOLERANCE * norms[j] {
            dependent.push(j);
            continue;
        }
        // H = I - 2 v v^T / v^T v with v = x + sign(x0) ||x|| e1
        let sign = if a[j][row] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = a[j][row..].to_vec();
        v[0] += sign * alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        for k in j..p {
            reflect(&mut a[k][row..], &v, vtv);
        }
        reflect(&mut qty[row..], &v, vtv);
        for x in &mut a[j][row + 1..n] {
            *x = 0.0;
        }
        row += 1;
    }
    if !dependent.is_empty() {
        return Err(QrFailure::Dependent(dependent));
    }

    let mut r = vec![0.0; p * p];
    for (k, col) in a.iter().enumerate() {
        for i in 0..=k {
            r[i * p + k] = col[i];
        }
    }
    let coefficients = back_substitute(&r, p, &qty[..p]);
    Ok(QrSolution { coefficients, r, p })
}

fn reflect(x: &mut [f64], v: &[f64], vtv: f64) {
    let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vtv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large raw-scale columns
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn back_substitute(r: &[f64], p: usize, rhs: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| r[i * p + k] * b[k]).sum();
        b[i] = (rhs[i] - s) / r[i * p + i];
    }
    b
}

impl QrSolution {
    /// (X^T X)^{-1} = R^{-1} R^{-T}, row-major p x p.
    pub fn unscaled_covariance(&self) -> Vec<f64> {
        let p = self.p;
        let mut rinv = vec![0.0; p * p];
        for col in 0..p {
            let mut e = vec![0.0; p];
            e[col] = 1.0;
            let x = back_substitute(&self.r, p, &e);
            for i in 0..p {
                rinv[i * p + col] = x[i];
            }
        }
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                out[i * p + j] = (0..p).map(|k| rinv[i * p + k] * rinv[j * p + k]).sum();
            }
        }
        out
    }
}
