//! Small dense linear algebra and root polishing shared by the static modules.

/// Solves `a x = b` for a small square system by Gaussian elimination with
/// partial pivoting. Returns `None` if a pivot falls below `1e-300`.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Result of a Gauss-Newton solve.
#[derive(Clone, Debug)]
pub(crate) struct Polished {
    pub x: Vec<f64>,
    /// Max-norm of the residual at `x`.
    pub residual: f64,
}

/// Gauss-Newton iteration for `r(x) = 0` with `m >= n` equations.
/// `eval` returns the residual vector and the `m × n` Jacobian.
pub(crate) fn gauss_newton<F>(eval: F, x0: &[f64], max_iter: usize, tol: f64) -> Polished
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<Vec<f64>>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut r, mut j) = eval(&x);
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..max_iter {
        if norm(&r) < tol * 1e-3 || !norm(&r).is_finite() {
            break;
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (ri, row) in r.iter().zip(&j) {
            for a in 0..n {
                jtr[a] -= row[a] * ri;
                for b in 0..n {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let scale = (0..n).map(|a| jtj[a][a]).fold(0.0f64, f64::max).max(1e-300);
        for (a, row) in jtj.iter_mut().enumerate() {
            row[a] += 1e-14 * scale;
        }
        let Some(dx) = solve(jtj, jtr) else { break };
        let step: f64 = dx.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let (r2, j2) = eval(&x);
        r = r2;
        j = j2;
        if step < 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            break;
        }
    }
    Polished {
        residual: norm(&r),
        x,
    }
}

/// `n` equispaced points covering `[lo, hi]` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
