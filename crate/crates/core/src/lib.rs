//! Numerical laboratory for odd-degree orthogonal Laurent polynomials with
//! varying exponential weights exp(-n V): a direct path built on high-precision
//! moment quadrature, and an asymptotic path built on equilibrium measures,
//! hyperelliptic theta functions, and Airy parametrices, with cross-validation
//! between the two.

pub mod airy;
pub mod asym;
pub mod equilibrium;
pub mod fekete;
pub mod field;
pub mod moments;
pub mod mp;
pub mod olp;
pub mod quad;
pub mod surface;

pub use equilibrium::{EquilibriumMeasure, SupportData};
pub use field::{LaurentField, LaurentPolynomial};
pub use moments::MomentTable;
pub use surface::SurfaceData;

use thiserror::Error;

/// Errors shared across the direct and asymptotic paths.
#[derive(Error, Debug)]
pub enum Error {
    #[error("field has a pole at x = 0")]
    PoleAtOrigin,
    #[error("quadrature did not converge: requested {requested} bits, achieved error estimate {achieved:e}")]
    Precision { requested: u32, achieved: f64 },
    #[error("moment c_{k} not in table range [{lo}, {hi}]")]
    MomentRange { k: i64, lo: i64, hi: i64 },
    #[error("linear system is singular or near-singular (pivot ratio {pivot_ratio:e})")]
    IllConditioned { pivot_ratio: f64 },
    #[error("nonpositive Hankel determinant ratio; increase precision_bits")]
    HankelRatio,
    #[error("singular index m = {m}: H^({offset})_{size} vanishes at working precision")]
    SingularIndex { m: usize, offset: i64, size: usize },
    #[error("zero finding failed: {0}")]
    ZeroFinding(String),
    #[error("evaluation point too close to the real axis (|Im z| = {imag:e})")]
    AxisProximity { imag: f64 },
    #[error("endpoint ordering or zero-exclusion violated")]
    BadSupport,
    #[error("endpoint solver did not converge: residual {residual:e} after {iters} iterations")]
    NoConvergence { residual: f64, iters: usize },
    #[error("density negative on a band (min {min:e}); retry with band count N = {n_hint}")]
    WrongBandCount { min: f64, n_hint: usize },
    #[error("degenerate point configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("evaluation on a branch cut or region boundary: {0}")]
    BranchCut(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
