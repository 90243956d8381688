//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type IMatrix = DMatrix<i64>;

/// Least-squares solution of `a * x = b` for a tall (or square) complex
/// system, by Householder QR. Falls back to an SVD pseudo-inverse when the
/// triangular factor is numerically rank deficient.
pub fn lstsq(a: &CMatrix, b: &CVector) -> CVector {
    let (m, n) = a.shape();
    debug_assert_eq!(m, b.len());
    if m >= n && n > 0 {
        let qr = a.clone().qr();
        let r = qr.r();
        let rmax = (0..n).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        let rmin = (0..n).map(|i| r[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if rmax > 0.0 && rmin > 1e-13 * rmax {
            let y = qr.q().adjoint() * b;
            if let Some(x) = r.solve_upper_triangular(&y) {
                return x;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(b, smax * 1e-13)
        .unwrap_or_else(|_| CVector::zeros(n))
}

/// Smallest singular value of the matrix whose columns are `cols`.
///
/// The tall matrix is first reduced to its square triangular factor by QR,
/// so the SVD runs on a `k x k` problem.
pub fn smallest_singular_value(cols: &[&CVector]) -> f64 {
    let k = cols.len();
    if k == 0 {
        return 0.0;
    }
    let m = cols[0].len();
    if m < k {
        return 0.0;
    }
    let a = CMatrix::from_fn(m, k, |i, j| cols[j][i]);
    let r = a.qr().r();
    let s = r.singular_values();
    s.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// 2-norm condition number of a square complex matrix.
pub fn condition_number(a: &CMatrix) -> f64 {
    let s = a.singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn vector_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Exact determinant of an integer matrix (Bareiss fraction-free elimination).
pub fn int_det(m: &IMatrix) -> i128 {
    let n = m.nrows();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)] as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Inverse of a unimodular integer matrix, verified exactly.
pub fn int_inverse(m: &IMatrix) -> Option<IMatrix> {
    let n = m.nrows();
    let f = m.map(|x| x as f64);
    let inv = f.try_inverse()?;
    let cand = inv.map(|x| x.round() as i64);
    if m * &cand == IMatrix::identity(n, n) {
        Some(cand)
    } else {
        None
    }
}

/// Round half toward zero, so values exactly at ±1/2 stay put.
pub fn round_half_to_zero(x: f64) -> f64 {
    let t = x.trunc();
    if (x - t).abs() == 0.5 {
        t
    } else {
        x.round()
    }
}
