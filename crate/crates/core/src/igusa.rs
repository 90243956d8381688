//! The genus-4 Schottky-Igusa modular form.
//!
//! Characteristics are kept as doubled integer vectors modulo 2, so the
//! subgroup and coset bookkeeping is exact.

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::matrix::RiemannMatrix;
use crate::theta::{theta, theta_via_zero_char, truncation_radius, Characteristic, ThetaTable};
use crate::theta::MIN_RADIUS;
use crate::C64;

/// Doubled characteristic `(2p | 2q)` with entries in `{0, 1}`.
pub type HalfChar = [u8; 8];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IgusaCharacteristicSet {
    pub base: [HalfChar; 3],
    pub generators: [HalfChar; 3],
}

impl Default for IgusaCharacteristicSet {
    fn default() -> Self {
        Self {
            base: [
                [1, 0, 1, 0, 1, 0, 1, 0],
                [0, 0, 0, 1, 1, 0, 0, 0],
                [0, 0, 1, 1, 1, 0, 1, 1],
            ],
            generators: [
                [0, 0, 0, 1, 1, 1, 1, 0],
                [0, 0, 1, 1, 0, 0, 0, 1],
                [0, 0, 1, 0, 1, 0, 1, 1],
            ],
        }
    }
}

fn add(a: &HalfChar, b: &HalfChar) -> HalfChar {
    let mut out = [0u8; 8];
    for i in 0..8 {
        out[i] = (a[i] + b[i]) % 2;
    }
    out
}

impl IgusaCharacteristicSet {
    /// All sums of subsets of the generators.
    pub fn subgroup(&self) -> Vec<HalfChar> {
        (0..8u8)
            .map(|mask| {
                let mut v = [0u8; 8];
                for (k, gen) in self.generators.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        v = add(&v, gen);
                    }
                }
                v
            })
            .collect()
    }

    pub fn coset(&self, i: usize) -> Vec<HalfChar> {
        self.subgroup().iter().map(|n| add(&self.base[i], n)).collect()
    }

    pub fn characteristic(c: &HalfChar) -> Characteristic {
        let a: Vec<i64> = c[..4].iter().map(|&x| x as i64).collect();
        let b: Vec<i64> = c[4..].iter().map(|&x| x as i64).collect();
        Characteristic::from_halves(&a, &b)
    }
}

fn require_genus4(b: &RiemannMatrix) -> Result<()> {
    if b.genus() != 4 {
        return Err(Error::WrongGenus {
            got: b.genus(),
            need: "4".into(),
        });
    }
    Ok(())
}

/// Hypercube radius covering every term above `1e-16` of a theta constant
/// with characteristic in `[0, 1/2]^4`.
pub fn igusa_radius(b: &RiemannMatrix) -> usize {
    let base = truncation_radius(b.y_min(), 1e-16).unwrap_or(MIN_RADIUS);
    let yinv = b.im().try_inverse().expect("validated imaginary part");
    let r2 = -(1e-16f64).ln() / std::f64::consts::PI;
    let ellipsoid = (0..b.genus())
        .map(|i| ((r2 * yinv[(i, i)]).sqrt() + 1.0).ceil() as usize)
        .max()
        .unwrap_or(0);
    base.max(ellipsoid).max(MIN_RADIUS)
}

/// `Θ[p,q](0, B)` for genus 4.
pub fn theta_constant(ch: &Characteristic, b: &RiemannMatrix, radius: usize) -> Result<C64> {
    require_genus4(b)?;
    Ok(theta(&CVector::zeros(4), b, ch, radius).value)
}

/// Products of the eight theta constants over each coset.
pub fn coset_products(b: &RiemannMatrix) -> Result<[C64; 3]> {
    require_genus4(b)?;
    let set = IgusaCharacteristicSet::default();
    let table = ThetaTable::zero_char(b, igusa_radius(b));
    let z = CVector::zeros(4);
    let mut out = [C64::new(1.0, 0.0); 3];
    for (i, pi) in out.iter_mut().enumerate() {
        for c in set.coset(i) {
            let ch = IgusaCharacteristicSet::characteristic(&c);
            *pi *= theta_via_zero_char(&z, b, &ch, &table).value;
        }
    }
    Ok(out)
}

/// `π1² + π2² + π3² − 2(π1π2 + π1π3 + π2π3)`.
pub fn schottky_igusa(b: &RiemannMatrix) -> Result<C64> {
    let [a, c, d] = coset_products(b)?;
    Ok(a * a + c * c + d * d - (a * c + a * d + c * d) * 2.0)
}
