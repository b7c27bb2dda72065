//! Householder QR with column pivoting for tall, narrow regressor matrices
//! stored column-wise.

use nalgebra::DMatrix;

/// Pivots smaller than this fraction of the largest pivot mark rank deficiency.
pub(crate) const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug)]
pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    /// `(X'X)^{-1}` in the original column order.
    pub xtx_inv: DMatrix<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves `min ||y - X b||` for the columns of `X`. On rank deficiency returns
/// the indices of the columns left over once the pivoted factorisation stops.
pub(crate) fn least_squares(columns: &[&[f64]], y: &[f64]) -> Result<LeastSquares, Vec<usize>> {
    let k = columns.len();
    let n = y.len();
    if k == 0 {
        return Ok(LeastSquares {
            coef: Vec::new(),
            xtx_inv: DMatrix::zeros(0, 0),
        });
    }
    let mut work: Vec<Vec<f64>> = columns.iter().map(|c| c.to_vec()).collect();
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut norms: Vec<f64> = work.iter().map(|c| dot(c, c)).collect();
    let mut reference = norms.clone();
    let mut r = DMatrix::<f64>::zeros(k, k);
    let mut largest = 0.0f64;

    for j in 0..k {
        if j >= n {
            return Err(perm[j..].to_vec());
        }
        let mut p = j;
        for c in j + 1..k {
            if norms[c] > norms[p] {
                p = c;
            }
        }
        if p != j {
            work.swap(j, p);
            norms.swap(j, p);
            reference.swap(j, p);
            perm.swap(j, p);
            for row in 0..j {
                r.swap((row, j), (row, p));
            }
        }

        let x = &work[j][j..];
        let norm_x = dot(x, x).sqrt();
        if j == 0 {
            largest = norm_x;
        }
        if largest == 0.0 || norm_x <= RANK_TOLERANCE * largest {
            return Err(perm[j..].to_vec());
        }
        let alpha = if x[0] >= 0.0 { -norm_x } else { norm_x };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        r[(j, j)] = alpha;

        for (off, col) in work[j + 1..].iter_mut().enumerate() {
            let c = j + 1 + off;
            let s = -2.0 * dot(&v, &col[j..]) / vtv;
            axpy(s, &v, &mut col[j..]);
            let rjc = col[j];
            r[(j, c)] = rjc;
            norms[c] -= rjc * rjc;
            if norms[c] <= 1e-2 * reference[c] {
                norms[c] = dot(&col[j + 1..], &col[j + 1..]);
                reference[c] = norms[c];
            }
        }
        let s = -2.0 * dot(&v, &qty[j..]) / vtv;
        axpy(s, &v, &mut qty[j..]);
    }

    // back substitution R b = Q'y
    let mut b = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = qty[i];
        for c in i + 1..k {
            acc -= r[(i, c)] * b[c];
        }
        b[i] = acc / r[(i, i)];
    }
    let mut rinv = DMatrix::<f64>::zeros(k, k);
    for col in 0..k {
        rinv[(col, col)] = 1.0 / r[(col, col)];
        for i in (0..col).rev() {
            let mut acc = 0.0;
            for m in i + 1..=col {
                acc += r[(i, m)] * rinv[(m, col)];
            }
            rinv[(i, col)] = -acc / r[(i, i)];
        }
    }
    let inv_perm = &rinv * rinv.transpose();
    let mut xtx_inv = DMatrix::<f64>::zeros(k, k);
    let mut coef = vec![0.0; k];
    for a in 0..k {
        coef[perm[a]] = b[a];
        for c in 0..k {
            xtx_inv[(perm[a], perm[c])] = inv_perm[(a, c)];
        }
    }
    Ok(LeastSquares { coef, xtx_inv })
}
