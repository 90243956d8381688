//! Lattice reduction and exact shortest-vector search for the lattice
//! `{ T n : n in Z^g }` defined by the Cholesky factor of `Im B`.
//!
//! Everything works on Gram matrices `G = T^T T`. Unimodular changes of basis
//! are tracked together with their exact integer inverses, since the Siegel
//! reduction needs both to build a symplectic matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::IMatrix;

/// Lovász constant used by [`lll_gram`].
pub const LLL_DELTA: f64 = 0.99;

/// Coefficients this close to 1/2 count as size reduced.
const SIZE_SLACK: f64 = 1e-12;

/// Shortest nonzero vector of a lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeResult {
    /// Integer coordinates `n*`, first nonzero entry positive.
    pub vector: Vec<i64>,
    /// `|T n*|`.
    pub length: f64,
}

/// A unimodular matrix together with its integer inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Unimodular {
    pub u: IMatrix,
    pub inv: IMatrix,
}

impl Unimodular {
    pub fn identity(n: usize) -> Self {
        Self {
            u: IMatrix::identity(n, n),
            inv: IMatrix::identity(n, n),
        }
    }

    /// `col_k -= r * col_j`.
    fn add_col(&mut self, k: usize, j: usize, r: i64) {
        let n = self.u.nrows();
        for i in 0..n {
            self.u[(i, k)] -= r * self.u[(i, j)];
            self.inv[(j, i)] += r * self.inv[(k, i)];
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        self.u.swap_columns(a, b);
        self.inv.swap_rows(a, b);
    }

    fn negate_col(&mut self, k: usize) {
        self.u.column_mut(k).neg_mut();
        self.inv.row_mut(k).neg_mut();
    }

    pub fn then(&self, other: &Unimodular) -> Unimodular {
        Unimodular {
            u: &self.u * &other.u,
            inv: &other.inv * &self.inv,
        }
    }
}

fn transform_gram(g0: &DMatrix<f64>, u: &IMatrix) -> DMatrix<f64> {
    let uf = u.map(|x| x as f64);
    let g = uf.transpose() * g0 * &uf;
    (&g + g.transpose()) * 0.5
}

/// Gram-Schmidt data (`mu`, squared lengths `b*`) from a Gram matrix.
fn gram_schmidt(g: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = g.nrows();
    let mut mu = DMatrix::<f64>::zeros(n, n);
    let mut bstar = vec![0.0; n];
    for i in 0..n {
        for j in 0..i {
            let mut s = g[(i, j)];
            for l in 0..j {
                s -= mu[(j, l)] * mu[(i, l)] * bstar[l];
            }
            mu[(i, j)] = s / bstar[j];
        }
        let mut s = g[(i, i)];
        for l in 0..i {
            s -= mu[(i, l)] * mu[(i, l)] * bstar[l];
        }
        bstar[i] = s;
        mu[(i, i)] = 1.0;
    }
    (mu, bstar)
}

/// LLL reduction of the basis whose Gram matrix is `gram`. Returns the
/// unimodular `U` such that the reduced Gram matrix is `U^T G U`.
pub fn lll_gram(gram: &DMatrix<f64>) -> Unimodular {
    let n = gram.nrows();
    let mut t = Unimodular::identity(n);
    if n < 2 {
        return t;
    }
    let mut g = gram.clone();
    let mut k = 1;
    let mut guard = 0usize;
    while k < n {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(&g);
            let m = mu[(k, j)];
            let r = if m.abs() <= 0.5 + SIZE_SLACK { 0.0 } else { m.round() };
            if r != 0.0 {
                t.add_col(k, j, r as i64);
                g = transform_gram(gram, &t.u);
            }
        }
        let (mu, bstar) = gram_schmidt(&g);
        let m = mu[(k, k - 1)];
        if bstar[k] >= (LLL_DELTA - m * m) * bstar[k - 1] {
            k += 1;
        } else {
            t.swap_cols(k, k - 1);
            g = transform_gram(gram, &t.u);
            k = (k - 1).max(1);
        }
    }
    t
}

/// All nonzero integer vectors `x` with `x^T G x <= radius_sq`, by
/// Fincke-Pohst enumeration over the Cholesky factor of `G`.
pub fn enumerate_short(gram: &DMatrix<f64>, radius_sq: f64) -> Vec<(Vec<i64>, f64)> {
    let n = gram.nrows();
    let chol = match gram.clone().cholesky() {
        Some(c) => c.l().transpose(),
        None => return Vec::new(),
    };
    // q_ii = r_ii^2, q_ij = r_ij / r_ii
    let diag: Vec<f64> = (0..n).map(|i| chol[(i, i)] * chol[(i, i)]).collect();
    let q = DMatrix::from_fn(n, n, |i, j| {
        if j > i {
            chol[(i, j)] / chol[(i, i)]
        } else {
            0.0
        }
    });
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    recurse(n - 1, 0.0, &mut x, &diag, &q, radius_sq, &mut out);
    out
}

fn recurse(
    level: usize,
    partial: f64,
    x: &mut Vec<i64>,
    diag: &[f64],
    q: &DMatrix<f64>,
    radius_sq: f64,
    out: &mut Vec<(Vec<i64>, f64)>,
) {
    let n = x.len();
    let center: f64 = -(level + 1..n).map(|j| q[(level, j)] * x[j] as f64).sum::<f64>();
    let budget = radius_sq - partial;
    if budget < 0.0 {
        return;
    }
    let half = (budget / diag[level]).sqrt();
    let lo = (center - half).ceil() as i64;
    let hi = (center + half).floor() as i64;
    for v in lo..=hi {
        x[level] = v;
        let d = v as f64 - center;
        let next = partial + diag[level] * d * d;
        if next > radius_sq {
            continue;
        }
        if level == 0 {
            if x.iter().any(|&c| c != 0) {
                out.push((x.clone(), next));
            }
        } else {
            recurse(level - 1, next, x, diag, q, radius_sq, out);
        }
    }
    x[level] = 0;
}

fn normalize_sign(v: &mut [i64]) {
    if let Some(&first) = v.iter().find(|&&c| c != 0) {
        if first < 0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

fn quad(gram: &DMatrix<f64>, v: &[i64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] as f64 * gram[(i, j)] * v[j] as f64;
        }
    }
    s
}

/// Exact shortest nonzero vector of the lattice with Gram matrix `gram`,
/// returned in the coordinates of `gram` together with its squared length.
///
/// Ties (relative 1e-12) go to the lexicographically smallest vector with
/// positive leading entry.
pub fn shortest_vector_gram(gram: &DMatrix<f64>) -> (Vec<i64>, f64) {
    let n = gram.nrows();
    let red = lll_gram(gram);
    let g1 = transform_gram(gram, &red.u);
    let bound = (0..n).map(|i| g1[(i, i)]).fold(f64::INFINITY, f64::min);
    let cands = enumerate_short(&g1, bound * (1.0 + 1e-9));
    let mut best: Vec<(Vec<i64>, f64)> = cands
        .into_iter()
        .map(|(x, _)| {
            let mut v: Vec<i64> = (0..n)
                .map(|i| (0..n).map(|j| red.u[(i, j)] * x[j]).sum())
                .collect();
            normalize_sign(&mut v);
            let l = quad(gram, &v);
            (v, l)
        })
        .collect();
    let min = best.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    best.retain(|c| c.1 <= min * (1.0 + 1e-12));
    best.sort_by(|a, b| a.0.cmp(&b.0));
    best.dedup_by(|a, b| a.0 == b.0);
    best.into_iter().next().expect("enumeration radius contains a basis vector")
}

/// Shortest nonzero vector of `{ T n }` for a full-rank `T`.
pub fn shortest_lattice_vector(t: &DMatrix<f64>) -> Result<LatticeResult> {
    let n = t.ncols();
    if t.nrows() != n || n == 0 {
        return Err(Error::NotSquare {
            rows: t.nrows(),
            cols: n,
        });
    }
    let scale = t.abs().max();
    let s = t.singular_values();
    let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-13 * scale) {
        return Err(Error::RankDeficient);
    }
    let gram = t.transpose() * t;
    let (vector, len_sq) = shortest_vector_gram(&gram);
    let tv = t * nalgebra::DVector::from_iterator(n, vector.iter().map(|&c| c as f64));
    let _ = len_sq;
    Ok(LatticeResult {
        vector,
        length: tv.norm(),
    })
}

/// Unimodular matrix whose first column is the primitive vector `v`.
pub fn complete_to_basis(v: &[i64]) -> Option<Unimodular> {
    let n = v.len();
    // Row operations W bring v to e_1; we track U = W^{-1} as column ops.
    let mut w = v.to_vec();
    let mut t = Unimodular::identity(n);
    loop {
        let nonzero: Vec<usize> = (0..n).filter(|&i| w[i] != 0).collect();
        if nonzero.is_empty() {
            return None;
        }
        if nonzero.len() == 1 {
            let p = nonzero[0];
            if w[p].abs() != 1 {
                return None;
            }
            if p != 0 {
                w.swap(0, p);
                t.swap_cols(0, p);
            }
            if w[0] < 0 {
                w[0] = -w[0];
                t.negate_col(0);
            }
            break;
        }
        let pivot = *nonzero.iter().min_by_key(|&&i| (w[i].abs(), i)).unwrap();
        for &j in &nonzero {
            if j != pivot {
                let r = w[j].div_euclid(w[pivot]);
                // row_j -= r row_pivot on w corresponds to col_pivot += r col_j on U
                w[j] -= r * w[pivot];
                t.add_col(pivot, j, -r);
            }
        }
    }
    debug_assert!((0..n).all(|i| t.u[(i, 0)] == v[i]));
    Some(t)
}
