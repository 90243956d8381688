//! Riemann matrices: complex symmetric `g x g` matrices with positive definite
//! imaginary part.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeResult};
use crate::linalg::CMatrix;
use crate::C64;

/// Maximum entrywise asymmetry accepted by [`RiemannMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A validated element of the Siegel upper half space.
///
/// The stored matrix is exactly symmetric: validation averages `B` and `B^T`
/// once the asymmetry is known to be below [`SYMMETRY_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct RiemannMatrix {
    b: CMatrix,
}

impl RiemannMatrix {
    pub fn new(raw: CMatrix) -> Result<Self> {
        let (rows, cols) = raw.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = (0..rows)
            .flat_map(|j| (0..rows).map(move |k| (j, k)))
            .map(|(j, k)| (raw[(j, k)] - raw[(k, j)]).norm())
            .fold(0.0, f64::max);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let b = (&raw + raw.transpose()) * C64::new(0.5, 0.0);
        let im = b.map(|z| z.im);
        if im.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { b })
    }

    /// Symmetrises `raw` before validating. For matrices produced by
    /// floating-point formulas that are symmetric in exact arithmetic.
    pub fn symmetrized(raw: CMatrix) -> Result<Self> {
        let sym = (&raw + raw.transpose()) * C64::new(0.5, 0.0);
        Self::new(sym)
    }

    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch {
                expected: re.nrows(),
                got: im.nrows(),
            });
        }
        Self::new(CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            C64::new(re[(i, j)], im[(i, j)])
        }))
    }

    pub fn identity_imaginary(g: usize) -> Self {
        Self {
            b: CMatrix::identity(g, g) * C64::new(0.0, 1.0),
        }
    }

    pub fn genus(&self) -> usize {
        self.b.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.b
    }

    pub fn into_matrix(self) -> CMatrix {
        self.b
    }

    pub fn re(&self) -> DMatrix<f64> {
        self.b.map(|z| z.re)
    }

    pub fn im(&self) -> DMatrix<f64> {
        self.b.map(|z| z.im)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            b: &self.b * C64::new(factor, 0.0),
        }
    }

    /// Upper-triangular `T` with `Im B = T^T T`.
    pub fn cholesky_im(&self) -> Result<DMatrix<f64>> {
        let chol = self.im().cholesky().ok_or(Error::NotPositiveDefinite)?;
        Ok(chol.l().transpose())
    }

    /// Shortest vector of the lattice generated by the Cholesky factor of `Im B`.
    pub fn shortest_vector(&self) -> Result<LatticeResult> {
        lattice::shortest_lattice_vector(&self.cholesky_im()?)
    }

    /// Length of the shortest lattice vector, `y_min`.
    pub fn y_min(&self) -> f64 {
        self.shortest_vector()
            .map(|r| r.length)
            .expect("validated matrix has positive definite imaginary part")
    }
}

impl TryFrom<CMatrix> for RiemannMatrix {
    type Error = Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<RiemannMatrix> for CMatrix {
    fn from(b: RiemannMatrix) -> Self {
        b.b
    }
}
