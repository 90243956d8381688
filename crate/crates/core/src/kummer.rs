//! Kummer map, odd-theta coefficients and the Fay trisecant function.
//!
//! For a triple `(X, Y, Z)` the function
//! `F = c1 K(Z) + c2 K(Y) - K(X)` with `c1 = λ(Y,X)/λ(Y,Z)`,
//! `c2 = λ(X,Z)/λ(Y,Z)` and `λ(a,b) = Θ*(a+b) Θ*(a-b)` vanishes exactly
//! when the three Kummer points are collinear in the way the trisecant
//! identity requires.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{smallest_singular_value, CMatrix, CVector};
use crate::matrix::RiemannMatrix;
use crate::theta::{wrap_to_fundamental, Characteristic, ThetaTable};
use crate::{C64, I, TAU};

/// Default non-triviality tolerance.
pub const TRIVIAL_TOL: f64 = 1e-6;

/// `|λ(Y,Z)|` below this is reported as [`Error::DenominatorUnderflow`].
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Theta tables for one reduced matrix: zero characteristic on `2B` for the
/// Kummer map and `(e_1/2, e_1/2)` on `B` for the odd theta function.
#[derive(Debug, Clone)]
pub struct FayContext {
    b: RiemannMatrix,
    radius: usize,
    kummer_table: ThetaTable,
    odd_table: ThetaTable,
    odd_q: CVector,
    // B ε and exp(πi/2 ε^T B ε) per ε, ε_j = bit j of the index
    eps_shift: Vec<CVector>,
    eps_phase: Vec<C64>,
}

impl FayContext {
    pub fn new(b: &RiemannMatrix, radius: usize) -> Self {
        let g = b.genus();
        let odd = Characteristic::odd_default(g);
        let kummer_table = ThetaTable::zero_char(&b.scaled(2.0), radius);
        let odd_table = ThetaTable::new(b, radius, &odd.p);
        let odd_q = odd.q.map(|x| C64::new(x, 0.0));
        let mut eps_shift = Vec::with_capacity(1 << g);
        let mut eps_phase = Vec::with_capacity(1 << g);
        for idx in 0..1usize << g {
            let eps = epsilon(idx, g);
            let be = b.matrix() * &eps;
            eps_phase.push((I * std::f64::consts::FRAC_PI_2 * eps.dot(&be)).exp());
            eps_shift.push(be);
        }
        Self {
            b: b.clone(),
            radius,
            kummer_table,
            odd_table,
            odd_q,
            eps_shift,
            eps_phase,
        }
    }

    pub fn matrix(&self) -> &RiemannMatrix {
        &self.b
    }

    pub fn genus(&self) -> usize {
        self.b.genus()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    fn odd_theta(&self, w: &CVector) -> (C64, CVector) {
        let e = self.odd_table.eval(&(w + &self.odd_q));
        (e.value, e.gradient)
    }
}

/// `ε ∈ {0,1}^g` with `ε_j` the `j`-th bit of `idx`, as a complex vector.
pub fn epsilon(idx: usize, g: usize) -> CVector {
    CVector::from_fn(g, |j, _| C64::new(((idx >> (g - 1 - j)) & 1) as f64, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KummerPoint {
    pub values: CVector,
    pub jacobian: CMatrix,
}

/// Components `exp(πi/2 ε·Bε + 2πi ε·Z) Θ(2Z + Bε, 2B)` and their
/// derivatives in `Z`.
pub fn kummer(z: &CVector, ctx: &FayContext) -> KummerPoint {
    let g = ctx.genus();
    let n = 1usize << g;
    let z2 = z * C64::new(2.0, 0.0);
    let rows: Vec<(C64, CVector)> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let eps = epsilon(idx, g);
            let factor = ctx.eps_phase[idx] * (I * TAU * eps.dot(z)).exp();
            let t = ctx.kummer_table.eval(&(&z2 + &ctx.eps_shift[idx]));
            let row = (t.gradient * C64::new(2.0, 0.0) + eps * (I * TAU * t.value)) * factor;
            (factor * t.value, row)
        })
        .collect();
    let values = CVector::from_iterator(n, rows.iter().map(|r| r.0));
    let jacobian = CMatrix::from_fn(n, g, |i, j| rows[i].1[j]);
    KummerPoint { values, jacobian }
}

/// `λ(a, b) = Θ*(a+b) Θ*(a-b)` with its gradients in `a` and `b`.
pub fn lambda_pair(a: &CVector, b: &CVector, ctx: &FayContext) -> (C64, CVector, CVector) {
    let (tp, gp) = ctx.odd_theta(&(a + b));
    let (tm, gm) = ctx.odd_theta(&(a - b));
    let grad_a = &gp * tm + &gm * tp;
    let grad_b = &gp * tm - &gm * tp;
    (tp * tm, grad_a, grad_b)
}

/// Smallest singular value of `[KX, KY, KZ]`.
pub fn linear_dependence_delta(kx: &CVector, ky: &CVector, kz: &CVector) -> f64 {
    smallest_singular_value(&[kx, ky, kz])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrisecantTriple {
    pub x: CVector,
    pub y: CVector,
    pub z: CVector,
}

impl TrisecantTriple {
    pub fn genus(&self) -> usize {
        self.x.len()
    }

    pub fn wrapped(&self, b: &RiemannMatrix) -> Self {
        Self {
            x: wrap_to_fundamental(&self.x, b).0,
            y: wrap_to_fundamental(&self.y, b).0,
            z: wrap_to_fundamental(&self.z, b).0,
        }
    }
}

/// Smallest distance, modulo the period lattice, between any two of the
/// points up to sign.
pub fn triviality_distance(x: &CVector, y: &CVector, z: &CVector, b: &RiemannMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for (u, v) in [(x, y), (y, z), (x, z)] {
        for d in [u - v, u + v] {
            best = best.min(wrap_to_fundamental(&d, b).0.norm());
        }
    }
    best
}

pub fn is_trivial(x: &CVector, y: &CVector, z: &CVector, b: &RiemannMatrix, tol: f64) -> bool {
    triviality_distance(x, y, z, b) <= tol
}

/// Which coordinates of `X`, `Y`, `Z` are held fixed (zero-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pinning {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
}

impl Default for Pinning {
    /// `X_1, X_2, Y_1, Z_1`.
    fn default() -> Self {
        Self {
            x: vec![0, 1],
            y: vec![0],
            z: vec![0],
        }
    }
}

impl Pinning {
    pub fn validate(&self, g: usize) -> Result<()> {
        for set in [&self.x, &self.y, &self.z] {
            let mut s = set.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != set.len() || s.iter().any(|&i| i >= g) {
                return Err(Error::InvalidConfig(format!(
                    "pinned indices {set:?} invalid for genus {g}"
                )));
            }
        }
        if self.free_count(g) == 0 {
            return Err(Error::InvalidConfig("no free coordinates".into()));
        }
        Ok(())
    }

    pub fn free_count(&self, g: usize) -> usize {
        3 * g - self.x.len() - self.y.len() - self.z.len()
    }

    fn free(set: &[usize], g: usize) -> Vec<usize> {
        (0..g).filter(|i| !set.contains(i)).collect()
    }

    /// Column indices of the free coordinates in `[∂X, ∂Y, ∂Z]`.
    pub fn free_columns(&self, g: usize) -> Vec<usize> {
        let mut cols = Vec::with_capacity(self.free_count(g));
        for (k, set) in [&self.x, &self.y, &self.z].into_iter().enumerate() {
            cols.extend(Self::free(set, g).into_iter().map(|i| k * g + i));
        }
        cols
    }

    pub fn split(&self, t: &TrisecantTriple) -> (CVector, FixedComponents) {
        let g = t.genus();
        let all: Vec<C64> = t.x.iter().chain(t.y.iter()).chain(t.z.iter()).cloned().collect();
        let cols = self.free_columns(g);
        let x = CVector::from_iterator(cols.len(), cols.iter().map(|&c| all[c]));
        let fixed = FixedComponents {
            x: self.x.iter().map(|&i| t.x[i]).collect(),
            y: self.y.iter().map(|&i| t.y[i]).collect(),
            z: self.z.iter().map(|&i| t.z[i]).collect(),
        };
        (x, fixed)
    }

    pub fn assemble(&self, x: &CVector, v: &FixedComponents, g: usize) -> Result<TrisecantTriple> {
        let cols = self.free_columns(g);
        if x.len() != cols.len() {
            return Err(Error::DimensionMismatch {
                expected: cols.len(),
                got: x.len(),
            });
        }
        let mut all = vec![C64::new(0.0, 0.0); 3 * g];
        for (&c, &val) in cols.iter().zip(x.iter()) {
            all[c] = val;
        }
        for (k, (set, vals)) in [(&self.x, &v.x), (&self.y, &v.y), (&self.z, &v.z)]
            .into_iter()
            .enumerate()
        {
            if set.len() != vals.len() {
                return Err(Error::DimensionMismatch {
                    expected: set.len(),
                    got: vals.len(),
                });
            }
            for (&i, &val) in set.iter().zip(vals) {
                all[k * g + i] = val;
            }
        }
        let part = |k: usize| CVector::from_iterator(g, all[k * g..(k + 1) * g].iter().cloned());
        Ok(TrisecantTriple {
            x: part(0),
            y: part(1),
            z: part(2),
        })
    }
}

/// Values of the pinned coordinates, in the order of [`Pinning`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedComponents {
    pub x: Vec<C64>,
    pub y: Vec<C64>,
    pub z: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct FayEvaluation {
    pub f: CVector,
    pub jacobian: CMatrix,
    pub residual: f64,
    pub delta: f64,
    pub c1: C64,
    pub c2: C64,
    /// The wrapped triple the evaluation refers to.
    pub triple: TrisecantTriple,
    /// Free coordinates of [`Self::triple`].
    pub x: CVector,
    pub fixed: FixedComponents,
}

/// Assembles, wraps and evaluates `F` with its Jacobian in the free
/// coordinates.
pub fn fay_function(
    x: &CVector,
    v: &FixedComponents,
    pinning: &Pinning,
    ctx: &FayContext,
    tol: f64,
) -> Result<FayEvaluation> {
    let t = pinning.assemble(x, v, ctx.genus())?.wrapped(ctx.matrix());
    if is_trivial(&t.x, &t.y, &t.z, ctx.matrix(), tol) {
        return Err(Error::TrivialConfiguration);
    }
    evaluate_unchecked(&t, pinning, ctx)
}

/// [`fay_function`] on an already wrapped triple without the triviality
/// guard.
pub fn evaluate_unchecked(
    t: &TrisecantTriple,
    pinning: &Pinning,
    ctx: &FayContext,
) -> Result<FayEvaluation> {
    let g = ctx.genus();
    let (l1, l1a, l1b) = lambda_pair(&t.y, &t.z, ctx);
    if !(l1.norm() >= DENOMINATOR_FLOOR) {
        return Err(Error::DenominatorUnderflow(l1.norm()));
    }
    let (n1, n1a, n1b) = lambda_pair(&t.y, &t.x, ctx);
    let (n2, n2a, n2b) = lambda_pair(&t.x, &t.z, ctx);
    let kx = kummer(&t.x, ctx);
    let ky = kummer(&t.y, ctx);
    let kz = kummer(&t.z, ctx);
    let inv = l1.inv();
    let c1 = n1 * inv;
    let c2 = n2 * inv;
    let f = &kz.values * c1 + &ky.values * c2 - &kx.values;

    let dc1 = [&n1b * inv, (&n1a - &l1a * c1) * inv, -&l1b * (c1 * inv)];
    let dc2 = [&n2a * inv, -&l1a * (c2 * inv), (&n2b - &l1b * c2) * inv];
    let n = 1usize << g;
    let mut full = CMatrix::zeros(n, 3 * g);
    for k in 0..3 {
        let mut block = &kz.values * dc1[k].transpose() + &ky.values * dc2[k].transpose();
        match k {
            0 => block -= &kx.jacobian,
            1 => block += &ky.jacobian * c2,
            _ => block += &kz.jacobian * c1,
        }
        full.view_mut((0, k * g), (n, g)).copy_from(&block);
    }
    let cols = pinning.free_columns(g);
    let jacobian = full.select_columns(cols.iter());
    let residual = f.norm();
    let delta = linear_dependence_delta(&kx.values, &ky.values, &kz.values);
    let (x, fixed) = pinning.split(t);
    Ok(FayEvaluation {
        f,
        jacobian,
        residual,
        delta,
        c1,
        c2,
        triple: t.clone(),
        x,
        fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siegel::siegel_reduce;
    use crate::theta::theta;
    use crate::zoo;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(g: usize, b: &RiemannMatrix, rng: &mut ChaCha8Rng) -> CVector {
        let p = CVector::from_fn(g, |_, _| C64::new(rng.random_range(-0.5..0.5), 0.0));
        let q = CVector::from_fn(g, |_, _| C64::new(rng.random_range(-0.5..0.5), 0.0));
        p + b.matrix() * q
    }

    fn bring() -> RiemannMatrix {
        siegel_reduce(&zoo::embedded("bring").unwrap().matrix).unwrap().0
    }

    #[test]
    fn kummer_is_even_with_expected_shape() {
        let b = bring();
        let ctx = FayContext::new(&b, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let z = random_point(4, &b, &mut rng);
            let k1 = kummer(&z, &ctx);
            let k2 = kummer(&(-&z), &ctx);
            assert_eq!(k1.values.len(), 16);
            assert_eq!(k1.jacobian.shape(), (16, 4));
            assert!((&k1.values - &k2.values).camax() <= 1e-10 * k1.values.camax().max(1.0));
        }
    }

    #[test]
    fn kummer_genus_one_at_origin() {
        let b = RiemannMatrix::identity_imaginary(1);
        let ctx = FayContext::new(&b, 20);
        let k = kummer(&CVector::zeros(1), &ctx);
        let b2 = b.scaled(2.0);
        let z = CVector::zeros(1);
        let t0 = theta(&z, &b2, &Characteristic::zero(1), 20).value;
        let t1 = theta(&z, &b2, &Characteristic::from_halves(&[1], &[0]), 20).value;
        assert!((k.values[0] - t0).norm() < 1e-14);
        assert!((k.values[1] - t1).norm() < 1e-14);
    }

    #[test]
    fn kummer_matches_direct_characteristic_theta() {
        let b = bring();
        let ctx = FayContext::new(&b, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = random_point(4, &b, &mut rng);
        let k = kummer(&z, &ctx);
        let b2 = b.scaled(2.0);
        let z2 = &z * C64::new(2.0, 0.0);
        for idx in [0usize, 5, 15] {
            let eps: Vec<i64> = (0..4).map(|j| ((idx >> (3 - j)) & 1) as i64).collect();
            let ch = Characteristic::from_halves(&eps, &[0; 4]);
            let d = theta(&z2, &b2, &ch, 6).value;
            assert!((k.values[idx] - d).norm() < 1e-12 * (1.0 + d.norm()));
        }
    }

    #[test]
    fn kummer_jacobian_matches_finite_differences() {
        let b = bring();
        let ctx = FayContext::new(&b, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = random_point(4, &b, &mut rng) * C64::new(0.5, 0.0);
        let k = kummer(&z, &ctx);
        let h = 1e-6;
        for j in 0..4 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let fd = (kummer(&zp, &ctx).values - kummer(&zm, &ctx).values) / C64::new(2.0 * h, 0.0);
            let col = k.jacobian.column(j);
            assert!((&fd - col).norm() <= 1e-6 * col.norm());
        }
    }

    #[test]
    fn lambda_identities() {
        let b = bring();
        let ctx = FayContext::new(&b, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_point(4, &b, &mut rng);
        let c = random_point(4, &b, &mut rng);
        assert!(lambda_pair(&a, &a, &ctx).0.norm() < 1e-13);
        let (l, ga, gb) = lambda_pair(&a, &c, &ctx);
        let (lm, _, _) = lambda_pair(&a, &(-&c), &ctx);
        assert!((l - lm).norm() <= 1e-12 * l.norm().max(1.0));
        let odd = Characteristic::odd_default(4);
        let direct = theta(&(&a + &c), &b, &odd, 5).value * theta(&(&a - &c), &b, &odd, 5).value;
        assert!((l - direct).norm() <= 1e-12 * direct.norm().max(1.0));
        let h = 1e-6;
        for j in 0..4 {
            let mut e = CVector::zeros(4);
            e[j] = C64::new(h, 0.0);
            let fa = (lambda_pair(&(&a + &e), &c, &ctx).0 - lambda_pair(&(&a - &e), &c, &ctx).0)
                / (2.0 * h);
            let fb = (lambda_pair(&a, &(&c + &e), &ctx).0 - lambda_pair(&a, &(&c - &e), &ctx).0)
                / (2.0 * h);
            assert!((fa - ga[j]).norm() <= 1e-6 * ga.norm());
            assert!((fb - gb[j]).norm() <= 1e-6 * gb.norm());
        }
    }

    #[test]
    fn delta_examples() {
        let v = CVector::from_fn(8, |i, _| C64::new(i as f64 + 1.0, 0.5));
        assert!(linear_dependence_delta(&v, &v, &v) < 1e-13 * v.norm());
        let e = |k: usize| CVector::from_fn(8, |i, _| C64::new((i == k) as u8 as f64, 0.0));
        assert!((linear_dependence_delta(&e(0), &e(1), &e(2)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn triviality() {
        let b = bring();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_point(4, &b, &mut rng);
        let z = random_point(4, &b, &mut rng);
        assert!(is_trivial(&x, &x, &z, &b, TRIVIAL_TOL));
        let shifted = -&x + b.matrix().column(1) + CVector::from_element(4, C64::new(1.0, 0.0));
        assert!(is_trivial(&x, &shifted, &z, &b, TRIVIAL_TOL));
        let y = random_point(4, &b, &mut rng);
        assert!(!is_trivial(&x, &y, &z, &b, TRIVIAL_TOL));
    }

    #[test]
    fn coinciding_points_give_zero_residual() {
        let b = bring();
        let ctx = FayContext::new(&b, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_point(4, &b, &mut rng) * C64::new(0.6, 0.0);
        let z = random_point(4, &b, &mut rng) * C64::new(0.6, 0.0);
        let t = TrisecantTriple {
            x: x.clone(),
            y: x.clone(),
            z,
        };
        let e = evaluate_unchecked(&t, &Pinning::default(), &ctx).unwrap();
        assert!(e.c1.norm() < 1e-12);
        assert!((e.c2 - 1.0).norm() < 1e-12);
        assert!(e.f.camax() <= 1e-10);
        let cp = Pinning::default();
        assert!(matches!(
            fay_function(&e.x, &e.fixed, &cp, &ctx, TRIVIAL_TOL),
            Err(Error::TrivialConfiguration)
        ));
    }

    #[test]
    fn fay_jacobian_matches_finite_differences() {
        let b = bring();
        let ctx = FayContext::new(&b, 5);
        let pin = Pinning::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = TrisecantTriple {
            x: random_point(4, &b, &mut rng) * C64::new(0.4, 0.0),
            y: random_point(4, &b, &mut rng) * C64::new(0.4, 0.0),
            z: random_point(4, &b, &mut rng) * C64::new(0.4, 0.0),
        };
        let e = evaluate_unchecked(&t, &pin, &ctx).unwrap();
        assert_eq!(e.jacobian.shape(), (16, 8));
        let h = 1e-6;
        for j in 0..8 {
            let mut xp = e.x.clone();
            let mut xm = e.x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = evaluate_unchecked(&pin.assemble(&xp, &e.fixed, 4).unwrap(), &pin, &ctx)
                .unwrap()
                .f;
            let fm = evaluate_unchecked(&pin.assemble(&xm, &e.fixed, 4).unwrap(), &pin, &ctx)
                .unwrap()
                .f;
            let fd = (fp - fm) / C64::new(2.0 * h, 0.0);
            let col = e.jacobian.column(j);
            assert!((&fd - col).norm() <= 1e-5 * col.norm(), "column {j}");
        }
    }

    #[test]
    fn pinning_round_trip() {
        let pin = Pinning::default();
        assert_eq!(pin.free_columns(4), vec![2, 3, 5, 6, 7, 9, 10, 11]);
        let t = TrisecantTriple {
            x: CVector::from_fn(4, |i, _| C64::new(i as f64, 1.0)),
            y: CVector::from_fn(4, |i, _| C64::new(i as f64, 2.0)),
            z: CVector::from_fn(4, |i, _| C64::new(i as f64, 3.0)),
        };
        let (x, v) = pin.split(&t);
        assert_eq!(x.len(), 8);
        assert_eq!(pin.assemble(&x, &v, 4).unwrap(), t);
        assert!(Pinning { x: vec![4], y: vec![], z: vec![] }.validate(4).is_err());
    }
}
