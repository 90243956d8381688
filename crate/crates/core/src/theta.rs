//! Theta functions with characteristics, summed over a hypercube.
//!
//! The hot path is [`ThetaTable`]: the quadratic part `exp(πi (N+p)^T B (N+p))`
//! is materialised once per matrix and shift `p`, after which every evaluation
//! only multiplies by powers of `exp(2πi w_j)`. When the table would exceed
//! the memory budget, or when those powers could overflow, terms are
//! exponentiated one by one instead.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{round_half_to_zero, CMatrix, CVector};
use crate::matrix::RiemannMatrix;
use crate::{C64, I, TAU};

/// Smallest radius ever used by [`default_radius`].
pub const MIN_RADIUS: usize = 5;

/// Default cap on the cached quadratic table, in bytes.
pub const DEFAULT_TABLE_BUDGET: usize = 256 << 20;

/// Above this bound on `|log|` of the linear factors, cached products could
/// overflow and evaluation switches to per-term exponentials.
const LOG_RANGE_LIMIT: f64 = 500.0;

/// Below this many terms the sum runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub p: DVector<f64>,
    pub q: DVector<f64>,
}

impl Characteristic {
    pub fn new(p: DVector<f64>, q: DVector<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: q.len(),
            });
        }
        Ok(Self { p, q })
    }

    pub fn zero(g: usize) -> Self {
        Self {
            p: DVector::zeros(g),
            q: DVector::zeros(g),
        }
    }

    /// Half-integer characteristic `(a/2, b/2)` from integer vectors.
    pub fn from_halves(a: &[i64], b: &[i64]) -> Self {
        Self {
            p: DVector::from_iterator(a.len(), a.iter().map(|&x| x as f64 / 2.0)),
            q: DVector::from_iterator(b.len(), b.iter().map(|&x| x as f64 / 2.0)),
        }
    }

    /// The odd characteristic `(e_1/2, e_1/2)`.
    pub fn odd_default(g: usize) -> Self {
        let mut e = vec![0; g];
        e[0] = 1;
        Self::from_halves(&e, &e)
    }

    pub fn genus(&self) -> usize {
        self.p.len()
    }

    pub fn is_zero(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|&x| x == 0.0)
    }

    /// `(2p, 2q)` when both are integer vectors.
    pub fn doubled(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let dbl = |v: &DVector<f64>| -> Option<Vec<i64>> {
            v.iter()
                .map(|&x| {
                    let y = 2.0 * x;
                    (y == y.round()).then_some(y as i64)
                })
                .collect()
        };
        Some((dbl(&self.p)?, dbl(&self.q)?))
    }

    pub fn is_half_integer(&self) -> bool {
        self.doubled().is_some()
    }

    pub fn parity(&self) -> Option<Parity> {
        let (a, b) = self.doubled()?;
        let s: i64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        Some(if s.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        })
    }
}

/// Value and `z`-gradient of a theta function.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEval {
    pub value: C64,
    pub gradient: CVector,
}

/// `ceil(sqrt(-ln δ / (π y_min)) + 1/2)`.
pub fn truncation_radius(y_min: f64, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    if !(y_min > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(((-delta.ln() / (std::f64::consts::PI * y_min)).sqrt() + 0.5).ceil() as usize)
}

/// [`truncation_radius`] floored at [`MIN_RADIUS`].
pub fn default_radius(y_min: f64, delta: f64) -> Result<usize> {
    Ok(truncation_radius(y_min, delta)?.max(MIN_RADIUS))
}

/// Cached quadratic terms for one matrix, radius and shift `p`.
#[derive(Debug, Clone)]
pub struct ThetaTable {
    b: CMatrix,
    shift: DVector<f64>,
    radius: usize,
    quad: Option<Vec<C64>>,
}

#[derive(Clone, Copy)]
struct Partial {
    value: C64,
    // Σ t·N_j, without the shift
    moments: [C64; 16],
}

impl ThetaTable {
    pub fn new(b: &RiemannMatrix, radius: usize, shift: &DVector<f64>) -> Self {
        Self::with_budget(b, radius, shift, DEFAULT_TABLE_BUDGET)
    }

    pub fn zero_char(b: &RiemannMatrix, radius: usize) -> Self {
        Self::new(b, radius, &DVector::zeros(b.genus()))
    }

    pub fn with_budget(
        b: &RiemannMatrix,
        radius: usize,
        shift: &DVector<f64>,
        budget_bytes: usize,
    ) -> Self {
        assert!(radius >= 1, "radius must be at least 1");
        assert_eq!(shift.len(), b.genus());
        let g = b.genus();
        assert!(g <= 16, "genus above 16 is not supported");
        let side = 2 * radius + 1;
        let count = (side as f64).powi(g as i32);
        let bytes = count * std::mem::size_of::<C64>() as f64;
        let mut table = Self {
            b: b.matrix().clone(),
            shift: shift.clone(),
            radius,
            quad: None,
        };
        if bytes <= budget_bytes as f64 {
            table.quad = Some(table.build_quad());
        }
        table
    }

    pub fn genus(&self) -> usize {
        self.b.nrows()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn is_cached(&self) -> bool {
        self.quad.is_some()
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn build_quad(&self) -> Vec<C64> {
        let g = self.genus();
        let side = self.side();
        let r = self.radius as i64;
        let total = side.pow(g as u32);
        let b = &self.b;
        let shift = &self.shift;
        let fill = |idx: usize| -> C64 {
            let mut n = [0.0f64; 16];
            let mut k = idx;
            for j in (0..g).rev() {
                n[j] = (k % side) as f64 - r as f64 + shift[j];
                k /= side;
            }
            let mut s = C64::new(0.0, 0.0);
            for i in 0..g {
                let mut row = b[(i, i)] * n[i];
                for j in i + 1..g {
                    row += b[(i, j)] * (2.0 * n[j]);
                }
                s += row * n[i];
            }
            (I * std::f64::consts::PI * s).exp()
        };
        if total >= PARALLEL_THRESHOLD {
            (0..total).into_par_iter().map(fill).collect()
        } else {
            (0..total).map(fill).collect()
        }
    }

    /// `Σ_N exp(πi (N+p)^T B (N+p) + 2πi (N+p)·w)` and its `w`-gradient.
    pub fn eval(&self, w: &CVector) -> ThetaEval {
        let g = self.genus();
        assert_eq!(w.len(), g);
        let r = self.radius as i64;
        let log_range: f64 = w.iter().map(|x| TAU * r as f64 * x.im.abs()).sum();
        let parts = if self.quad.is_some() && log_range <= LOG_RANGE_LIMIT {
            self.chunks(|lead| self.sum_cached(w, lead))
        } else {
            self.chunks(|lead| self.sum_streaming(w, lead))
        };
        let total = pairwise(&parts);
        // p·w contribution appears once, outside the table
        let pw: C64 = self.shift.iter().zip(w.iter()).map(|(&p, &x)| x * p).sum();
        let phase = (I * TAU * pw).exp();
        let value = total.value * phase;
        let gradient = CVector::from_fn(g, |j, _| {
            I * TAU * (total.moments[j] + total.value * self.shift[j]) * phase
        });
        ThetaEval { value, gradient }
    }

    fn chunks<F>(&self, f: F) -> Vec<Partial>
    where
        F: Fn(i64) -> Partial + Sync,
    {
        let r = self.radius as i64;
        let total = self.side().pow(self.genus() as u32);
        if total >= PARALLEL_THRESHOLD && self.genus() > 1 {
            (-r..=r).into_par_iter().map(&f).collect()
        } else if self.genus() > 1 {
            (-r..=r).map(&f).collect()
        } else {
            vec![f(0)]
        }
    }

    /// Terms with leading index `lead` (all terms when `g = 1`).
    fn sum_cached(&self, w: &CVector, lead: i64) -> Partial {
        let g = self.genus();
        let side = self.side();
        let r = self.radius as i64;
        let quad = self.quad.as_ref().unwrap();
        let pows: Vec<Vec<C64>> = w
            .iter()
            .map(|&x| {
                let u = (I * TAU * x).exp();
                let uinv = u.inv();
                let mut v = vec![C64::new(0.0, 0.0); side];
                v[self.radius] = C64::new(1.0, 0.0);
                for k in 1..=self.radius {
                    v[self.radius + k] = v[self.radius + k - 1] * u;
                    v[self.radius - k] = v[self.radius - k + 1] * uinv;
                }
                v
            })
            .collect();
        let last = g - 1;
        let mut acc = Partial {
            value: C64::new(0.0, 0.0),
            moments: [C64::new(0.0, 0.0); 16],
        };
        let zero = C64::new(0.0, 0.0);
        if g == 1 {
            for k in 0..side {
                let t = quad[k] * pows[0][k];
                acc.value += t;
                acc.moments[0] += t * (k as i64 - r) as f64;
            }
            return acc;
        }
        // outer odometer over coordinates 1..last, coordinate 0 fixed to lead
        let outer = g - 2;
        let mut idx = vec![0usize; outer];
        let lead_pos = (lead + r) as usize;
        loop {
            let mut prefix = pows[0][lead_pos];
            let mut base = lead_pos;
            for (j, &k) in idx.iter().enumerate() {
                prefix *= pows[j + 1][k];
                base = base * side + k;
            }
            base *= side;
            let row = &quad[base..base + side];
            let pl = &pows[last];
            let mut s0 = zero;
            let mut s1 = zero;
            for k in 0..side {
                let t = row[k] * (prefix * pl[k]);
                s0 += t;
                s1 += t * (k as i64 - r) as f64;
            }
            acc.value += s0;
            acc.moments[0] += s0 * lead as f64;
            for (j, &k) in idx.iter().enumerate() {
                acc.moments[j + 1] += s0 * (k as i64 - r) as f64;
            }
            acc.moments[last] += s1;
            if !advance(&mut idx, side) {
                break;
            }
        }
        acc
    }

    fn sum_streaming(&self, w: &CVector, lead: i64) -> Partial {
        let g = self.genus();
        let r = self.radius as i64;
        let side = self.side();
        let b = &self.b;
        let p = &self.shift;
        let last = g - 1;
        let pi = std::f64::consts::PI;
        let mut acc = Partial {
            value: C64::new(0.0, 0.0),
            moments: [C64::new(0.0, 0.0); 16],
        };
        let outer = if g == 1 { 0 } else { g - 2 };
        let mut idx = vec![0usize; outer];
        let mut n = vec![0.0f64; g];
        loop {
            if g > 1 {
                n[0] = lead as f64 + p[0];
                for (j, &k) in idx.iter().enumerate() {
                    n[j + 1] = (k as i64 - r) as f64 + p[j + 1];
                }
            }
            // exponent along the last coordinate is a + c1·m + c2·m², m = N_last + p_last
            let mut a = C64::new(0.0, 0.0);
            let mut c1 = w[last];
            for i in 0..last {
                let mut row = C64::new(0.0, 0.0);
                for j in 0..last {
                    row += b[(i, j)] * n[j];
                }
                a += I * pi * row * n[i] + I * TAU * w[i] * (n[i] - p[i]);
                c1 += b[(last, i)] * n[i];
            }
            // the p·w phase is applied once by the caller
            a -= I * TAU * w[last] * p[last];
            let c1 = I * TAU * c1;
            let c2 = I * pi * b[(last, last)];
            let mut s0 = C64::new(0.0, 0.0);
            let mut s1 = C64::new(0.0, 0.0);
            for k in 0..side {
                let nk = (k as i64 - r) as f64;
                let m = nk + p[last];
                let t = (a + c1 * m + c2 * m * m).exp();
                s0 += t;
                s1 += t * nk;
            }
            acc.value += s0;
            if g > 1 {
                acc.moments[0] += s0 * lead as f64;
                for (j, &k) in idx.iter().enumerate() {
                    acc.moments[j + 1] += s0 * (k as i64 - r) as f64;
                }
            }
            acc.moments[last] += s1;
            if !advance(&mut idx, side) {
                break;
            }
        }
        acc
    }
}

fn advance(idx: &mut [usize], side: usize) -> bool {
    for k in idx.iter_mut().rev() {
        *k += 1;
        if *k < side {
            return true;
        }
        *k = 0;
    }
    false
}

fn pairwise(parts: &[Partial]) -> Partial {
    match parts.len() {
        0 => Partial {
            value: C64::new(0.0, 0.0),
            moments: [C64::new(0.0, 0.0); 16],
        },
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            let (a, b) = (pairwise(l), pairwise(r));
            let mut out = a;
            out.value += b.value;
            for j in 0..16 {
                out.moments[j] += b.moments[j];
            }
            out
        }
    }
}

/// Direct evaluation of `Θ[p,q](z, B)` by per-term summation over the
/// hypercube of radius `radius`.
pub fn theta(z: &CVector, b: &RiemannMatrix, ch: &Characteristic, radius: usize) -> ThetaEval {
    assert!(radius >= 1, "radius must be at least 1");
    let table = ThetaTable::with_budget(b, radius, &ch.p, 0);
    let w = z + ch.q.map(|x| C64::new(x, 0.0));
    table.eval(&w)
}

/// `Θ[p,q](z)` from the zero-characteristic table, as
/// `Θ(z + Bp + q) exp(πi p·Bp + 2πi p·(z+q))`.
pub fn theta_via_zero_char(
    z: &CVector,
    b: &RiemannMatrix,
    ch: &Characteristic,
    table: &ThetaTable,
) -> ThetaEval {
    debug_assert!(table.shift.iter().all(|&x| x == 0.0));
    let p = ch.p.map(|x| C64::new(x, 0.0));
    let q = ch.q.map(|x| C64::new(x, 0.0));
    let bp = b.matrix() * &p;
    let inner = table.eval(&(z + &bp + &q));
    if ch.p.iter().all(|&x| x == 0.0) {
        return inner;
    }
    let factor = (I * std::f64::consts::PI * p.dot(&bp) + I * TAU * p.dot(&(z + &q))).exp();
    let value = inner.value * factor;
    let gradient = (inner.gradient + &p * (I * TAU * inner.value)) * factor;
    ThetaEval { value, gradient }
}

/// Characteristics `(p, q)` of a point `z = p + B q`.
pub fn point_characteristics(z: &CVector, b: &RiemannMatrix) -> (DVector<f64>, DVector<f64>) {
    let y = b.im();
    let x = b.re();
    let q = y
        .cholesky()
        .expect("validated imaginary part")
        .solve(&z.map(|c| c.im));
    let p = z.map(|c| c.re) - x * &q;
    (p, q)
}

/// Splits `z = z_wrapped + m + B n` with the characteristics of `z_wrapped`
/// in `[-1/2, 1/2]`.
pub fn wrap_to_fundamental(z: &CVector, b: &RiemannMatrix) -> (CVector, Vec<i64>, Vec<i64>) {
    let (p, q) = point_characteristics(z, b);
    let m: Vec<i64> = p.iter().map(|&x| round_half_to_zero(x) as i64).collect();
    let n: Vec<i64> = q.iter().map(|&x| round_half_to_zero(x) as i64).collect();
    let g = z.len();
    let mc = CVector::from_iterator(g, m.iter().map(|&x| C64::new(x as f64, 0.0)));
    let nc = CVector::from_iterator(g, n.iter().map(|&x| C64::new(x as f64, 0.0)));
    let wrapped = z - mc - b.matrix() * nc;
    (wrapped, m, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_g1(tau: C64, z: C64, p: f64, q: f64, r: i64) -> C64 {
        let pi = std::f64::consts::PI;
        (-r..=r)
            .map(|n| {
                let m = n as f64 + p;
                (I * pi * tau * m * m + I * TAU * m * (z + q)).exp()
            })
            .sum()
    }

    fn random_matrix(g: usize, rng: &mut ChaCha8Rng) -> RiemannMatrix {
        let x = DMatrix::from_fn(g, g, |_, _| rng.random_range(-0.5..0.5));
        let a = DMatrix::from_fn(g, g, |_, _| rng.random_range(-0.4..0.4));
        let y = &a * a.transpose() + DMatrix::<f64>::identity(g, g);
        RiemannMatrix::symmetrized(CMatrix::from_fn(g, g, |i, j| C64::new(x[(i, j)], y[(i, j)])))
            .unwrap()
    }

    #[test]
    fn radius_formula() {
        let y = 3f64.sqrt() / 2.0;
        assert_eq!(truncation_radius(y, 1e-12).unwrap(), 4);
        assert_eq!(truncation_radius(y, 0.999_999).unwrap(), 1);
        assert_eq!(default_radius(y, 1e-12).unwrap(), 5);
        assert!(matches!(truncation_radius(y, 1.0), Err(Error::InvalidDelta(_))));
        assert!(matches!(truncation_radius(y, 0.0), Err(Error::InvalidDelta(_))));
    }

    #[test]
    fn genus_one_identity_value() {
        let b = RiemannMatrix::identity_imaginary(1);
        let z = CVector::from_element(1, C64::new(0.0, 0.0));
        let t = theta(&z, &b, &Characteristic::zero(1), 20);
        let oracle = brute_g1(I, C64::new(0.0, 0.0), 0.0, 0.0, 40);
        assert!((t.value - oracle).norm() < 1e-15);
        assert!((t.value.re - 1.086_434_811_213_308).abs() < 1e-14);
    }

    #[test]
    fn genus_one_characteristic_matches_brute_force() {
        let tau = C64::new(0.3, 1.1);
        let b = RiemannMatrix::new(CMatrix::from_element(1, 1, tau)).unwrap();
        let z = C64::new(0.21, -0.17);
        let zz = CVector::from_element(1, z);
        let ch = Characteristic::new(DVector::from_element(1, 0.3), DVector::from_element(1, -0.2))
            .unwrap();
        let t = theta(&zz, &b, &ch, 12);
        let oracle = brute_g1(tau, z, 0.3, -0.2, 60);
        assert!((t.value - oracle).norm() < 1e-14);
    }

    #[test]
    fn odd_characteristic_vanishes_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_matrix(3, &mut rng);
        let z = CVector::zeros(3);
        let t = theta(&z, &b, &Characteristic::odd_default(3), 6);
        assert!(t.value.norm() < 1e-14);
    }

    #[test]
    fn cached_and_streaming_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for g in 1..=4 {
            let b = random_matrix(g, &mut rng);
            let shift = DVector::from_fn(g, |_, _| rng.random_range(-0.5..0.5));
            let cached = ThetaTable::new(&b, 5, &shift);
            let stream = ThetaTable::with_budget(&b, 5, &shift, 0);
            assert!(cached.is_cached() && !stream.is_cached());
            let w = CVector::from_fn(g, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5))
            });
            let a = cached.eval(&w);
            let s = stream.eval(&w);
            assert!((a.value - s.value).norm() < 1e-13 * (1.0 + s.value.norm()));
            assert!((&a.gradient - &s.gradient).norm() < 1e-12 * (1.0 + s.gradient.norm()));
        }
    }

    #[test]
    fn zero_char_path_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in [2usize, 4] {
            let b = random_matrix(g, &mut rng);
            let table = ThetaTable::zero_char(&b, 7);
            for _ in 0..5 {
                let a: Vec<i64> = (0..g).map(|_| rng.random_range(0..2)).collect();
                let c: Vec<i64> = (0..g).map(|_| rng.random_range(0..2)).collect();
                let ch = Characteristic::from_halves(&a, &c);
                let z = CVector::from_fn(g, |_, _| {
                    C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.3))
                });
                let d = theta(&z, &b, &ch, 7);
                let v = theta_via_zero_char(&z, &b, &ch, &table);
                assert!((d.value - v.value).norm() < 1e-12 * (1.0 + d.value.norm()));
                assert!((&d.gradient - &v.gradient).norm() < 1e-11 * (1.0 + d.gradient.norm()));
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_matrix(3, &mut rng);
        let ch = Characteristic::from_halves(&[1, 0, 1], &[0, 1, 1]);
        let z = CVector::from_fn(3, |_, _| C64::new(rng.random_range(-0.5..0.5), 0.1));
        let t = theta(&z, &b, &ch, 6);
        let h = 1e-6;
        for j in 0..3 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let fd = (theta(&zp, &b, &ch, 6).value - theta(&zm, &b, &ch, 6).value) / (2.0 * h);
            assert!((fd - t.gradient[j]).norm() <= 1e-6 * t.gradient[j].norm().max(1e-3));
        }
    }

    #[test]
    fn wrap_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_matrix(4, &mut rng);
        let z = CVector::from_fn(4, |_, _| C64::new(0.1, 0.05));
        let (w, m, n) = wrap_to_fundamental(&z, &b);
        let (p, q) = point_characteristics(&z, &b);
        if p.amax() <= 0.5 && q.amax() <= 0.5 {
            assert_eq!(w, z);
            assert!(m.iter().chain(&n).all(|&x| x == 0));
        }
        let be1 = b.matrix().column(0).into_owned();
        let (w, m, n) = wrap_to_fundamental(&be1, &b);
        assert!(w.norm() < 1e-12);
        assert_eq!(m, vec![0; 4]);
        assert_eq!(n, vec![1, 0, 0, 0]);
    }

    #[test]
    fn characteristics_and_parity() {
        let odd = Characteristic::odd_default(4);
        assert_eq!(odd.parity(), Some(Parity::Odd));
        assert_eq!(Characteristic::zero(4).parity(), Some(Parity::Even));
        let gen = Characteristic::new(DVector::from_element(2, 0.3), DVector::zeros(2)).unwrap();
        assert_eq!(gen.parity(), None);
    }
}
