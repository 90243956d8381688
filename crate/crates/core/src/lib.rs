//! Numerical test of whether a Riemann matrix lies in the Jacobi locus.
//!
//! Given `B` in the Siegel upper half space, the crate searches for a
//! non-trivial trisecant of the Kummer variety of `B` with a Newton
//! least-squares iteration on the Fay trisecant function. A residual
//! below the working precision `delta` means `B` is, to that precision,
//! the period matrix of a Riemann surface. In genus 4 the Schottky-Igusa
//! form provides an independent check.
//!
//! Module map:
//!
//! * [`matrix`], [`lattice`], [`theta`]: Riemann matrices, shortest lattice
//!   vectors, theta functions with characteristics and their gradients.
//! * [`siegel`]: symplectic transformations and approximate reduction to
//!   Siegel's fundamental domain.
//! * [`kummer`]: Kummer map, odd-theta coefficients, the Fay function with
//!   its Jacobian, and the linear-dependence measure.
//! * [`solver`]: Newton iteration and the full decision procedure.
//! * [`igusa`]: the genus-4 Schottky-Igusa modular form.
//! * [`zoo`]: test matrices (exact families and printed literature values).
//! * [`io`]: JSON matrix/report files shared with the CLI and bindings.

pub mod error;
pub mod igusa;
pub mod io;
pub mod kummer;
pub mod lattice;
pub mod linalg;
pub mod matrix;
pub mod siegel;
pub mod solver;
pub mod theta;
pub mod zoo;

pub use error::{Error, Result};
pub use matrix::RiemannMatrix;
pub use num_complex::Complex64 as C64;

pub(crate) const TAU: f64 = std::f64::consts::TAU;
pub(crate) const I: C64 = C64::new(0.0, 1.0);
