//! Symplectic transformations and approximate reduction to Siegel's
//! fundamental domain.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{complete_to_basis, lll_gram, shortest_vector_gram, Unimodular};
use crate::linalg::{condition_number, int_det, CMatrix, CVector, IMatrix};
use crate::matrix::RiemannMatrix;
use crate::theta::{theta, Characteristic};
use crate::{C64, I};

/// Default iteration cap of [`siegel_reduce`].
pub const MAX_REDUCTION_STEPS: usize = 200;

/// Above this condition number `C B + D` counts as singular.
/// Real parts this close to ±1/2 are left in place.
const SHIFT_SLACK: f64 = 1e-12;

pub const MAX_DENOMINATOR_CONDITION: f64 = 1e12;

const INVERSION_GAIN: f64 = 1.0 - 1e-12;

/// Integer `2g x 2g` matrix `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymplecticTransform {
    pub a: IMatrix,
    pub b: IMatrix,
    pub c: IMatrix,
    pub d: IMatrix,
}

impl SymplecticTransform {
    pub fn identity(g: usize) -> Self {
        Self {
            a: IMatrix::identity(g, g),
            b: IMatrix::zeros(g, g),
            c: IMatrix::zeros(g, g),
            d: IMatrix::identity(g, g),
        }
    }

    /// Validates the symplectic relation exactly.
    pub fn from_blocks(a: IMatrix, b: IMatrix, c: IMatrix, d: IMatrix) -> Result<Self> {
        let g = a.nrows();
        for m in [&a, &b, &c, &d] {
            if m.shape() != (g, g) {
                return Err(Error::DimensionMismatch {
                    expected: g,
                    got: m.nrows(),
                });
            }
        }
        let r = Self { a, b, c, d };
        if !r.is_symplectic() {
            return Err(Error::NotSymplectic);
        }
        Ok(r)
    }

    pub fn from_full(m: &IMatrix) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n || n % 2 != 0 {
            return Err(Error::NotSquare {
                rows: n,
                cols: m.ncols(),
            });
        }
        let g = n / 2;
        Self::from_blocks(
            m.view((0, 0), (g, g)).into_owned(),
            m.view((0, g), (g, g)).into_owned(),
            m.view((g, 0), (g, g)).into_owned(),
            m.view((g, g), (g, g)).into_owned(),
        )
    }

    pub fn genus(&self) -> usize {
        self.a.nrows()
    }

    pub fn to_full(&self) -> IMatrix {
        let g = self.genus();
        let mut m = IMatrix::zeros(2 * g, 2 * g);
        m.view_mut((0, 0), (g, g)).copy_from(&self.a);
        m.view_mut((0, g), (g, g)).copy_from(&self.b);
        m.view_mut((g, 0), (g, g)).copy_from(&self.c);
        m.view_mut((g, g), (g, g)).copy_from(&self.d);
        m
    }

    /// `R^T J R = J`, checked in 128-bit integers.
    pub fn is_symplectic(&self) -> bool {
        let g = self.genus();
        let r = self.to_full().map(|x| x as i128);
        let mut j = DMatrix::<i128>::zeros(2 * g, 2 * g);
        for i in 0..g {
            j[(i, g + i)] = 1;
            j[(g + i, i)] = -1;
        }
        r.transpose() * &j * &r == j
    }

    pub fn det(&self) -> i128 {
        int_det(&self.to_full())
    }

    /// Matrix product `self · other`; acting on `B` this applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let m = self.to_full() * other.to_full();
        let g = self.genus();
        Self {
            a: m.view((0, 0), (g, g)).into_owned(),
            b: m.view((0, g), (g, g)).into_owned(),
            c: m.view((g, 0), (g, g)).into_owned(),
            d: m.view((g, g), (g, g)).into_owned(),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d.transpose(),
            b: -self.b.transpose(),
            c: -self.c.transpose(),
            d: self.a.transpose(),
        }
    }

    /// `B ↦ B + S` for integer symmetric `S`.
    pub fn translation(s: &IMatrix) -> Self {
        let g = s.nrows();
        Self {
            a: IMatrix::identity(g, g),
            b: s.clone(),
            c: IMatrix::zeros(g, g),
            d: IMatrix::identity(g, g),
        }
    }

    /// `B ↦ U^T B U`.
    pub fn basis_change(u: &Unimodular) -> Self {
        let g = u.u.nrows();
        Self {
            a: u.u.transpose(),
            b: IMatrix::zeros(g, g),
            c: IMatrix::zeros(g, g),
            d: u.inv.clone(),
        }
    }

    /// Inversion in the coordinates `idx`: `A = D = I - E`, `B = -E`, `C = E`.
    pub fn quasi_inversion(g: usize, idx: &[usize]) -> Self {
        let mut e = IMatrix::zeros(g, g);
        for &i in idx {
            e[(i, i)] = 1;
        }
        let id = IMatrix::identity(g, g);
        Self {
            a: &id - &e,
            b: -&e,
            c: e.clone(),
            d: &id - &e,
        }
    }

    fn real_blocks(&self) -> [CMatrix; 4] {
        let f = |m: &IMatrix| m.map(|x| C64::new(x as f64, 0.0));
        [f(&self.a), f(&self.b), f(&self.c), f(&self.d)]
    }
}

/// Random word in the generators, for tests and property checks.
pub fn random_transform<R: Rng>(g: usize, len: usize, rng: &mut R) -> SymplecticTransform {
    let mut r = SymplecticTransform::identity(g);
    for _ in 0..len {
        let step = match rng.random_range(0..3) {
            0 => {
                let mut s = IMatrix::zeros(g, g);
                let i = rng.random_range(0..g);
                let j = rng.random_range(0..g);
                let v = if rng.random_bool(0.5) { 1 } else { -1 };
                s[(i, j)] = v;
                s[(j, i)] = v;
                SymplecticTransform::translation(&s)
            }
            1 => {
                let mut u = Unimodular::identity(g);
                if g > 1 {
                    let i = rng.random_range(0..g);
                    let j = (i + rng.random_range(1..g)) % g;
                    u.u[(i, j)] = 1;
                    u.inv[(i, j)] = -1;
                }
                SymplecticTransform::basis_change(&u)
            }
            _ => {
                let k = rng.random_range(1..=g);
                let idx: Vec<usize> = (0..k).collect();
                SymplecticTransform::quasi_inversion(g, &idx)
            }
        };
        r = step.compose(&r);
    }
    r
}

/// `(A B0 + B)(C B0 + D)^{-1}`.
pub fn apply_modular(b0: &RiemannMatrix, r: &SymplecticTransform) -> Result<RiemannMatrix> {
    if r.genus() != b0.genus() {
        return Err(Error::DimensionMismatch {
            expected: b0.genus(),
            got: r.genus(),
        });
    }
    let [a, b, c, d] = r.real_blocks();
    let m = &c * b0.matrix() + &d;
    let cond = condition_number(&m);
    if !(cond < MAX_DENOMINATOR_CONDITION) {
        return Err(Error::SingularDenominator(cond));
    }
    let minv = m.try_inverse().ok_or(Error::SingularDenominator(f64::INFINITY))?;
    RiemannMatrix::symmetrized((&a * b0.matrix() + &b) * minv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub input_ymin: f64,
    pub output_ymin: f64,
    pub transform: SymplecticTransform,
    pub iterations: usize,
}

pub fn siegel_reduce(b0: &RiemannMatrix) -> Result<(RiemannMatrix, ReductionReport)> {
    siegel_reduce_with(b0, MAX_REDUCTION_STEPS)
}

pub fn siegel_reduce_with(
    b0: &RiemannMatrix,
    max_steps: usize,
) -> Result<(RiemannMatrix, ReductionReport)> {
    let g = b0.genus();
    let input_ymin = b0.y_min();
    let mut cur = b0.clone();
    let mut total = SymplecticTransform::identity(g);
    let mut best: Option<(f64, RiemannMatrix, SymplecticTransform)> = None;
    for step in 1..=max_steps {
        let r1 = lattice_step(&cur);
        cur = apply_modular(&cur, &r1)?;
        total = r1.compose(&total);

        let shift = cur.re().map(|x| {
            if x.abs() <= 0.5 + SHIFT_SLACK {
                0
            } else {
                -(x.round() as i64)
            }
        });
        let r2 = SymplecticTransform::translation(&shift);
        cur = apply_modular(&cur, &r2)?;
        total = r2.compose(&total);

        let y = cur.y_min();
        if best.as_ref().is_none_or(|(b, _, _)| y > *b + 1e-14) {
            best = Some((y, cur.clone(), total.clone()));
        }

        let mut candidates: Vec<Vec<usize>> = vec![vec![0]];
        if g >= 2 {
            candidates.push(vec![0, 1]);
        }
        if g >= 3 {
            candidates.push((0..g).collect());
        }
        let mut pick: Option<(f64, SymplecticTransform)> = None;
        for idx in candidates {
            let r = SymplecticTransform::quasi_inversion(g, &idx);
            let [_, _, c, d] = r.real_blocks();
            let det = (&c * cur.matrix() + &d).determinant().norm();
            if det < INVERSION_GAIN && pick.as_ref().is_none_or(|(m, _)| det < *m) {
                pick = Some((det, r));
            }
        }
        match pick {
            None => {
                let (best_y, best_b, best_t) = best.unwrap();
                let (output_ymin, out, transform) = if y >= best_y - 1e-14 {
                    (y, cur, total)
                } else {
                    (best_y, best_b, best_t)
                };
                return Ok((
                    out,
                    ReductionReport {
                        input_ymin,
                        output_ymin,
                        transform,
                        iterations: step,
                    },
                ));
            }
            Some((_, r3)) => {
                cur = apply_modular(&cur, &r3)?;
                total = r3.compose(&total);
            }
        }
    }
    Err(Error::NoConvergence(max_steps))
}

/// Basis change putting an exact shortest vector of `Im B` first, with the
/// remaining basis LLL-reduced.
fn lattice_step(b: &RiemannMatrix) -> SymplecticTransform {
    let y = b.im();
    let u1 = lll_gram(&y);
    let uf = u1.u.map(|x| x as f64);
    let y1 = uf.transpose() * &y * &uf;
    let (v, len) = shortest_vector_gram(&y1);
    let w = if y1[(0, 0)] <= len * (1.0 + 1e-12) {
        Unimodular::identity(y.nrows())
    } else {
        complete_to_basis(&v).expect("shortest vectors are primitive")
    };
    let u2 = u1.then(&w);
    let uf = u2.u.map(|x| x as f64);
    let y2 = uf.transpose() * &y * &uf;
    let u3 = lll_gram(&y2);
    SymplecticTransform::basis_change(&u2.then(&u3))
}

/// Largest relative deviation over `samples` of the ratio
/// `Θ[p̃,q̃](M^{-T} z, B̃) / (exp(πi z^T M^{-1} C z) Θ[p,q](z, B0))`
/// with `M = C B0 + D` and `(p̃, q̃)` the transformed characteristic.
/// The ratio is a `z`-independent constant when the transformation law holds.
pub fn modular_theta_consistency(
    b0: &RiemannMatrix,
    r: &SymplecticTransform,
    ch: &Characteristic,
    samples: &[CVector],
    radius: usize,
) -> Result<f64> {
    let bt = apply_modular(b0, r)?;
    let [_, _, c, d] = r.real_blocks();
    let m = &c * b0.matrix() + &d;
    let minv = m.clone().try_inverse().ok_or(Error::SingularDenominator(f64::INFINITY))?;
    let mt_inv = minv.transpose();
    let quad = &minv * &c;
    let cht = transform_characteristic(r, ch);
    let mut first: Option<C64> = None;
    let mut spread = 0.0f64;
    for z in samples {
        let lhs = theta(&(&mt_inv * z), &bt, &cht, radius).value;
        let rhs = (I * std::f64::consts::PI * z.dot(&(&quad * z))).exp()
            * theta(z, b0, ch, radius).value;
        let ratio = lhs / rhs;
        match first {
            None => first = Some(ratio),
            Some(f) => spread = spread.max((ratio - f).norm() / f.norm()),
        }
    }
    Ok(spread)
}

/// `(p̃; q̃) = [[D, -C], [-B, A]] (p; q) + ½ (diag(C D^T); diag(A B^T))`.
pub fn transform_characteristic(r: &SymplecticTransform, ch: &Characteristic) -> Characteristic {
    let f = |m: &IMatrix| m.map(|x| x as f64);
    let (a, b, c, d) = (f(&r.a), f(&r.b), f(&r.c), f(&r.d));
    let cd = &c * d.transpose();
    let ab = &a * b.transpose();
    let p = &d * &ch.p - &c * &ch.q + cd.diagonal() * 0.5;
    let q = -&b * &ch.p + &a * &ch.q + ab.diagonal() * 0.5;
    Characteristic { p, q }
}
