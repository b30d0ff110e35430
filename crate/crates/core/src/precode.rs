//! Downlink MMSE precoding q = H_d^H (H_d H_d^H + rho^{-1} I)^{-1} t followed
//! by per-vector power normalization s = q / ||q||.

use crate::linalg::{gram_regularized_counted, norm_sqr_counted, ComplexMatrix, ComplexVector, HermitianMatrix, Side};
use crate::opcount::{Stage, Tally};
use crate::solvers::{
    cg_solve_counted, cgls_min_norm_solve_counted, cholesky_inverse_counted, neumann_inverse_counted,
    AugmentLayout, Augmented, SolverError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeResult {
    /// precoded vector, length B
    pub q: ComplexVector,
    /// q / ||q||, or `None` when q = 0 (zero input)
    pub s: Option<ComplexVector>,
    pub gain: f64,
}

impl PrecodeResult {
    pub fn is_zero_input(&self) -> bool {
        self.s.is_none()
    }
}

fn normalize<T: Tally>(q: ComplexVector, tally: &mut T) -> PrecodeResult {
    let gain = norm_sqr_counted(q.as_slice(), tally, Stage::Equalize).sqrt();
    if gain == 0.0 {
        return PrecodeResult { q, s: None, gain };
    }
    tally.add(Stage::Equalize, 2 * q.len() as u64);
    let s = ComplexVector::from_fn(q.len(), |i| q[i] / gain);
    PrecodeResult { q, s: Some(s), gain }
}

fn back_project<T: Tally>(h_d: &ComplexMatrix, v: &ComplexVector, tally: &mut T) -> ComplexVector {
    let mut q = ComplexVector::zeros(h_d.cols());
    h_d.adjoint_matvec_into(v.as_slice(), q.as_mut_slice(), tally, Stage::MatchedFilter);
    q
}

fn check_dims(h_d: &ComplexMatrix, t: &ComplexVector) -> Result<(), SolverError> {
    if h_d.rows() != t.len() {
        return Err(crate::linalg::LinalgError::DimensionMismatch { op: "precode", left: h_d.shape(), right: (t.len(), 1) }
            .into());
    }
    Ok(())
}

/// Exact precoding through a Cholesky-based inverse of A_d.
pub fn precode_explicit(h_d: &ComplexMatrix, t: &ComplexVector, rho: f64) -> Result<PrecodeResult, SolverError> {
    precode_explicit_counted(h_d, t, rho, &mut ())
}

pub fn precode_explicit_counted<T: Tally>(
    h_d: &ComplexMatrix,
    t: &ComplexVector,
    rho: f64,
    tally: &mut T,
) -> Result<PrecodeResult, SolverError> {
    check_dims(h_d, t)?;
    let a = gram_regularized_counted(h_d, 1.0 / rho, Side::Downlink, tally);
    let ainv = HermitianMatrix::from_upper(&cholesky_inverse_counted(&a, tally)?)?;
    let mut v = ComplexVector::zeros(a.dim());
    ainv.matvec_into(t.as_slice(), v.as_mut_slice(), tally, Stage::Equalize);
    Ok(normalize(back_project(h_d, &v, tally), tally))
}

/// K CG iterations on A_d v = t, then q = H_d^H v. K = 1 is matched-filter
/// precoding up to a scalar.
pub fn precode_cg(h_d: &ComplexMatrix, t: &ComplexVector, rho: f64, iters: usize) -> Result<PrecodeResult, SolverError> {
    precode_cg_counted(h_d, t, rho, iters, &mut ())
}

pub fn precode_cg_counted<T: Tally>(
    h_d: &ComplexMatrix,
    t: &ComplexVector,
    rho: f64,
    iters: usize,
    tally: &mut T,
) -> Result<PrecodeResult, SolverError> {
    check_dims(h_d, t)?;
    if iters == 0 {
        return Err(SolverError::NoIterations);
    }
    let a = gram_regularized_counted(h_d, 1.0 / rho, Side::Downlink, tally);
    let v = cg_solve_counted(&a, t, iters, tally)?.solution;
    Ok(normalize(back_project(h_d, &v, tally), tally))
}

/// Minimum-norm least squares on [H_d, sqrt(1/rho) I] q̄ = t; q is the first
/// B entries of q̄, the tail is discarded.
pub fn precode_cgls(h_d: &ComplexMatrix, t: &ComplexVector, rho: f64, iters: usize) -> Result<PrecodeResult, SolverError> {
    precode_cgls_counted(h_d, t, rho, iters, &mut ())
}

pub fn precode_cgls_counted<T: Tally>(
    h_d: &ComplexMatrix,
    t: &ComplexVector,
    rho: f64,
    iters: usize,
    tally: &mut T,
) -> Result<PrecodeResult, SolverError> {
    check_dims(h_d, t)?;
    let op = Augmented::new(h_d, 1.0 / rho, AugmentLayout::SideBySide);
    let out = cgls_min_norm_solve_counted(&op, t, iters, tally)?;
    let mut q = out.solution.into_vec();
    q.truncate(h_d.cols());
    Ok(normalize(ComplexVector::from(q), tally))
}

/// Precoding with a K-term Neumann-series inverse of A_d.
pub fn precode_neumann(h_d: &ComplexMatrix, t: &ComplexVector, rho: f64, iters: usize) -> Result<PrecodeResult, SolverError> {
    precode_neumann_counted(h_d, t, rho, iters, &mut ())
}

pub fn precode_neumann_counted<T: Tally>(
    h_d: &ComplexMatrix,
    t: &ComplexVector,
    rho: f64,
    iters: usize,
    tally: &mut T,
) -> Result<PrecodeResult, SolverError> {
    check_dims(h_d, t)?;
    let a = gram_regularized_counted(h_d, 1.0 / rho, Side::Downlink, tally);
    let ainv = HermitianMatrix::from_upper(&neumann_inverse_counted(&a, iters, tally)?)?;
    let mut v = ComplexVector::zeros(a.dim());
    ainv.matvec_into(t.as_slice(), v.as_mut_slice(), tally, Stage::Equalize);
    Ok(normalize(back_project(h_d, &v, tally), tally))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precoder {
    Cholesky,
    Cg { iters: usize },
    Cgls { iters: usize },
    Neumann { iters: usize },
}

impl Precoder {
    pub fn precode<T: Tally>(
        &self,
        h_d: &ComplexMatrix,
        t: &ComplexVector,
        rho: f64,
        tally: &mut T,
    ) -> Result<PrecodeResult, SolverError> {
        match *self {
            Precoder::Cholesky => precode_explicit_counted(h_d, t, rho, tally),
            Precoder::Cg { iters } => precode_cg_counted(h_d, t, rho, iters, tally),
            Precoder::Cgls { iters } => precode_cgls_counted(h_d, t, rho, iters, tally),
            Precoder::Neumann { iters } => precode_neumann_counted(h_d, t, rho, iters, tally),
        }
    }
}
