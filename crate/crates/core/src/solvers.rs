//! Linear-system solvers: conjugate gradients, CGLS, Cholesky-based exact
//! inversion and the truncated Neumann series.
//!
//! The iterative solvers always run the requested number of iterations. The
//! only early exit is an exactly converged residual (for instance b = 0),
//! after which the iterate is held fixed.

use thiserror::Error;

use crate::linalg::{
    axpy_real, norm_sqr_counted, re_dot_h, xpby_real, ComplexMatrix, ComplexVector, HermitianMatrix, LinalgError, C64,
};
use crate::opcount::{Stage, Tally};

/// Curvature p^H A p at or below this value is treated as a breakdown.
pub const BREAKDOWN_CURVATURE: f64 = 1e-30;

/// Residual energy below this fraction of ||b||^2 counts as exactly converged.
const CONVERGED_RATIO: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("CG breakdown at iteration {iteration}: p^H A p = {curvature:e}")]
    Breakdown { iteration: usize, curvature: f64 },
    #[error("matrix is not positive definite (pivot {index} = {value:e})")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("zero diagonal entry at {index}")]
    ZeroDiagonal { index: usize },
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-iteration CG quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct CgState {
    pub k: usize,
    pub v: ComplexVector,
    pub r: ComplexVector,
    pub p: ComplexVector,
    pub alpha: f64,
    pub beta: f64,
    pub rnorm2: f64,
}

/// alpha_k and beta_k of completed iterations; `alphas[k - 1]` is alpha_k.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalarHistory {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl ScalarHistory {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn push(&mut self, alpha: f64, beta: f64) {
        self.alphas.push(alpha);
        self.betas.push(beta);
    }

    /// alpha_k with alpha_k = 1 for k < 1.
    pub fn alpha(&self, k: isize) -> f64 {
        if k < 1 {
            1.0
        } else {
            self.alphas[k as usize - 1]
        }
    }

    /// beta_k with beta_k = 0 for k < 1.
    pub fn beta(&self, k: isize) -> f64 {
        if k < 1 {
            0.0
        } else {
            self.betas[k as usize - 1]
        }
    }
}

/// Output of [`cg_solve`]: the final iterate plus everything needed to
/// validate trackers and solver properties.
#[derive(Debug, Clone)]
pub struct CgOutput {
    pub solution: ComplexVector,
    pub history: ScalarHistory,
    /// `states[k]` is the state after k iterations, starting at k = 0.
    pub states: Vec<CgState>,
}

impl CgOutput {
    /// v_k; iterates past an exact convergence repeat the converged value.
    pub fn iterate(&self, k: usize) -> &ComplexVector {
        &self.states[k.min(self.states.len() - 1)].v
    }
}

/// Step-wise CG on A v = b, started from v_0 = 0.
#[derive(Debug, Clone)]
pub struct CgIteration<'a> {
    a: &'a HermitianMatrix,
    state: CgState,
    e: Vec<C64>,
    converged_floor: f64,
}

impl<'a> CgIteration<'a> {
    pub fn new<T: Tally>(a: &'a HermitianMatrix, b: &ComplexVector, tally: &mut T) -> Result<Self, SolverError> {
        if a.dim() != b.len() {
            return Err(LinalgError::DimensionMismatch { op: "cg", left: (a.dim(), a.dim()), right: (b.len(), 1) }.into());
        }
        let rnorm2 = norm_sqr_counted(b.as_slice(), tally, Stage::CgIteration);
        let state = CgState {
            k: 0,
            v: ComplexVector::zeros(b.len()),
            r: b.clone(),
            p: b.clone(),
            alpha: 0.0,
            beta: 0.0,
            rnorm2,
        };
        Ok(CgIteration { a, state, e: vec![C64::default(); b.len()], converged_floor: CONVERGED_RATIO * rnorm2 })
    }

    pub fn state(&self) -> &CgState {
        &self.state
    }

    pub fn into_state(self) -> CgState {
        self.state
    }

    /// Runs one iteration. Returns `(alpha_k, beta_k)`, or `None` when the
    /// residual is already exactly zero and the iterate stays put.
    pub fn step<T: Tally>(&mut self, tally: &mut T) -> Result<Option<(f64, f64)>, SolverError> {
        let s = &mut self.state;
        if s.rnorm2 == 0.0 || s.rnorm2 <= self.converged_floor {
            return Ok(None);
        }
        let stage = Stage::CgIteration;
        self.a.matvec_into(s.p.as_slice(), &mut self.e, tally, stage);
        let curvature = re_dot_h(s.p.as_slice(), &self.e, tally, stage);
        debug_assert!(
            crate::linalg::dot_h(s.p.as_slice(), &self.e).im.abs() <= 1e-9 * curvature.abs().max(f64::MIN_POSITIVE),
            "p^H A p not real; A is not Hermitian"
        );
        if curvature <= BREAKDOWN_CURVATURE {
            return Err(SolverError::Breakdown { iteration: s.k + 1, curvature });
        }
        let alpha = s.rnorm2 / curvature;
        axpy_real(alpha, s.p.as_slice(), s.v.as_mut_slice(), tally, stage);
        axpy_real(-alpha, &self.e, s.r.as_mut_slice(), tally, stage);
        let rnorm2 = norm_sqr_counted(s.r.as_slice(), tally, stage);
        let beta = rnorm2 / s.rnorm2;
        xpby_real(s.r.as_slice(), beta, s.p.as_mut_slice(), tally, stage);
        s.k += 1;
        s.alpha = alpha;
        s.beta = beta;
        s.rnorm2 = rnorm2;
        Ok(Some((alpha, beta)))
    }
}

/// Runs `k` CG iterations on A v = b from v_0 = 0.
pub fn cg_solve(a: &HermitianMatrix, b: &ComplexVector, k: usize) -> Result<CgOutput, SolverError> {
    cg_solve_counted(a, b, k, &mut ())
}

pub fn cg_solve_counted<T: Tally>(
    a: &HermitianMatrix,
    b: &ComplexVector,
    k: usize,
    tally: &mut T,
) -> Result<CgOutput, SolverError> {
    if k == 0 {
        return Err(SolverError::NoIterations);
    }
    let mut it = CgIteration::new(a, b, tally)?;
    let mut history = ScalarHistory::default();
    let mut states = vec![it.state().clone()];
    for _ in 0..k {
        match it.step(tally)? {
            Some((alpha, beta)) => {
                history.push(alpha, beta);
                states.push(it.state().clone());
            }
            None => break,
        }
    }
    Ok(CgOutput { solution: it.into_state().v, history, states })
}

/// Something that can be applied to a vector and to its adjoint.
pub trait LinearOperator {
    fn shape(&self) -> (usize, usize);
    fn apply<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage);
    fn apply_adjoint<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage);
}

impl LinearOperator for ComplexMatrix {
    fn shape(&self) -> (usize, usize) {
        ComplexMatrix::shape(self)
    }

    fn apply<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        self.matvec_into(x, out, tally, stage)
    }

    fn apply_adjoint<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        self.adjoint_matvec_into(x, out, tally, stage)
    }
}

/// How a scaled identity block is attached to a channel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentLayout {
    /// [H; c I] for a B x U uplink matrix.
    Stacked,
    /// [H, c I] for a U x B downlink matrix.
    SideBySide,
}

/// A channel matrix augmented with sqrt(1/rho) I, applied without
/// materializing the identity block.
#[derive(Debug, Clone, Copy)]
pub struct Augmented<'a> {
    pub h: &'a ComplexMatrix,
    pub scale: f64,
    pub layout: AugmentLayout,
}

impl<'a> Augmented<'a> {
    pub fn new(h: &'a ComplexMatrix, rho_inv: f64, layout: AugmentLayout) -> Self {
        Augmented { h, scale: rho_inv.sqrt(), layout }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        match self.layout {
            AugmentLayout::Stacked => {
                let u = self.h.cols();
                let block = ComplexMatrix::identity(u).scale(C64::new(self.scale, 0.0));
                self.h.vstack(&block).expect("same column count")
            }
            AugmentLayout::SideBySide => {
                let u = self.h.rows();
                let block = ComplexMatrix::identity(u).scale(C64::new(self.scale, 0.0));
                self.h.hstack(&block).expect("same row count")
            }
        }
    }
}

impl LinearOperator for Augmented<'_> {
    fn shape(&self) -> (usize, usize) {
        let (r, c) = self.h.shape();
        match self.layout {
            AugmentLayout::Stacked => (r + c, c),
            AugmentLayout::SideBySide => (r, r + c),
        }
    }

    fn apply<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        let (r, c) = self.h.shape();
        match self.layout {
            AugmentLayout::Stacked => {
                self.h.matvec_into(x, &mut out[..r], tally, stage);
                for (o, xi) in out[r..].iter_mut().zip(x) {
                    *o = xi * self.scale;
                }
                tally.add(stage, 2 * c as u64);
            }
            AugmentLayout::SideBySide => {
                self.h.matvec_into(&x[..c], out, tally, stage);
                for (o, xi) in out.iter_mut().zip(&x[c..]) {
                    *o += xi * self.scale;
                }
                tally.add(stage, 2 * r as u64);
            }
        }
    }

    fn apply_adjoint<T: Tally>(&self, x: &[C64], out: &mut [C64], tally: &mut T, stage: Stage) {
        let (r, c) = self.h.shape();
        match self.layout {
            AugmentLayout::Stacked => {
                self.h.adjoint_matvec_into(&x[..r], out, tally, stage);
                for (o, xi) in out.iter_mut().zip(&x[r..]) {
                    *o += xi * self.scale;
                }
                tally.add(stage, 2 * c as u64);
            }
            AugmentLayout::SideBySide => {
                self.h.adjoint_matvec_into(x, &mut out[..c], tally, stage);
                for (o, xi) in out[c..].iter_mut().zip(x) {
                    *o = xi * self.scale;
                }
                tally.add(stage, 2 * r as u64);
            }
        }
    }
}

/// Iterates and scalars of a CGLS run.
#[derive(Debug, Clone)]
pub struct CglsOutput {
    pub solution: ComplexVector,
    pub history: ScalarHistory,
    /// `trace[k]` is the iterate after k iterations, starting at k = 0.
    pub trace: Vec<ComplexVector>,
}

impl CglsOutput {
    pub fn iterate(&self, k: usize) -> &ComplexVector {
        &self.trace[k.min(self.trace.len() - 1)]
    }
}

/// Step-wise CGLS for min ||b - M x|| with a tall, full-column-rank M.
///
/// alpha_k and beta_k coincide with those of CG on M^H M x = M^H b.
#[derive(Debug, Clone)]
pub struct CglsIteration<'a, M: LinearOperator> {
    op: &'a M,
    x: Vec<C64>,
    r: Vec<C64>,
    s: Vec<C64>,
    p: Vec<C64>,
    q: Vec<C64>,
    gamma: f64,
    converged_floor: f64,
    k: usize,
}

impl<'a, M: LinearOperator> CglsIteration<'a, M> {
    /// Starts from x_0 = 0; s_0 = M^H b is charged to the matched filter.
    pub fn new<T: Tally>(op: &'a M, b: &ComplexVector, tally: &mut T) -> Result<Self, SolverError> {
        let (rows, cols) = op.shape();
        if rows != b.len() {
            return Err(LinalgError::DimensionMismatch { op: "cgls", left: (rows, cols), right: (b.len(), 1) }.into());
        }
        let mut s = vec![C64::default(); cols];
        op.apply_adjoint(b.as_slice(), &mut s, tally, Stage::MatchedFilter);
        Ok(Self::from_gradient(op, b.clone(), s, tally))
    }

    /// Starts from x_0 = 0 with a caller-supplied s_0 = M^H b, for callers
    /// that can form it more cheaply (a zero tail in b, say).
    pub fn from_gradient<T: Tally>(op: &'a M, b: ComplexVector, s: Vec<C64>, tally: &mut T) -> Self {
        let (rows, cols) = op.shape();
        assert_eq!(rows, b.len());
        assert_eq!(cols, s.len());
        let gamma = norm_sqr_counted(&s, tally, Stage::CglsIteration);
        CglsIteration {
            op,
            x: vec![C64::default(); cols],
            r: b.into_vec(),
            p: s.clone(),
            s,
            q: vec![C64::default(); rows],
            gamma,
            converged_floor: CONVERGED_RATIO * gamma,
            k: 0,
        }
    }

    pub fn x(&self) -> &[C64] {
        &self.x
    }

    pub fn step<T: Tally>(&mut self, tally: &mut T) -> Result<Option<(f64, f64)>, SolverError> {
        if self.gamma == 0.0 || self.gamma <= self.converged_floor {
            return Ok(None);
        }
        let stage = Stage::CglsIteration;
        self.op.apply(&self.p, &mut self.q, tally, stage);
        let qq = norm_sqr_counted(&self.q, tally, stage);
        if qq <= BREAKDOWN_CURVATURE {
            return Err(SolverError::Breakdown { iteration: self.k + 1, curvature: qq });
        }
        let alpha = self.gamma / qq;
        axpy_real(alpha, &self.p, &mut self.x, tally, stage);
        axpy_real(-alpha, &self.q, &mut self.r, tally, stage);
        self.op.apply_adjoint(&self.r, &mut self.s, tally, stage);
        let gamma = norm_sqr_counted(&self.s, tally, stage);
        let beta = gamma / self.gamma;
        xpby_real(&self.s, beta, &mut self.p, tally, stage);
        self.gamma = gamma;
        self.k += 1;
        Ok(Some((alpha, beta)))
    }
}

/// Runs `k` CGLS iterations on min ||b_aug - H_aug x||.
pub fn cgls_solve<M: LinearOperator>(h_aug: &M, b_aug: &ComplexVector, k: usize) -> Result<CglsOutput, SolverError> {
    cgls_solve_counted(h_aug, b_aug, k, &mut ())
}

pub fn cgls_solve_counted<M: LinearOperator, T: Tally>(
    h_aug: &M,
    b_aug: &ComplexVector,
    k: usize,
    tally: &mut T,
) -> Result<CglsOutput, SolverError> {
    if k == 0 {
        return Err(SolverError::NoIterations);
    }
    let mut it = CglsIteration::new(h_aug, b_aug, tally)?;
    let mut history = ScalarHistory::default();
    let mut trace = vec![ComplexVector::from(it.x().to_vec())];
    for _ in 0..k {
        match it.step(tally)? {
            Some((alpha, beta)) => {
                history.push(alpha, beta);
                trace.push(ComplexVector::from(it.x().to_vec()));
            }
            None => break,
        }
    }
    let solution = trace.last().cloned().expect("trace starts with x_0");
    Ok(CglsOutput { solution, history, trace })
}

/// Step-wise minimum-norm least squares for a wide M: the iterates stay in
/// the range of M^H, x_k = M^H z_k, where z_k is the CG iterate on
/// (M M^H) z = t. Only products with M and M^H are formed.
#[derive(Debug, Clone)]
pub struct MinNormIteration<'a, M: LinearOperator> {
    op: &'a M,
    x: Vec<C64>,
    r: Vec<C64>,
    p: Vec<C64>,
    w: Vec<C64>,
    g: Vec<C64>,
    rnorm2: f64,
    converged_floor: f64,
    k: usize,
}

impl<'a, M: LinearOperator> MinNormIteration<'a, M> {
    pub fn new<T: Tally>(op: &'a M, t: &ComplexVector, tally: &mut T) -> Result<Self, SolverError> {
        let (rows, cols) = op.shape();
        if rows != t.len() {
            return Err(LinalgError::DimensionMismatch { op: "cgls", left: (rows, cols), right: (t.len(), 1) }.into());
        }
        let mut p = vec![C64::default(); cols];
        op.apply_adjoint(t.as_slice(), &mut p, tally, Stage::CglsIteration);
        let rnorm2 = norm_sqr_counted(t.as_slice(), tally, Stage::CglsIteration);
        Ok(MinNormIteration {
            op,
            x: vec![C64::default(); cols],
            r: t.as_slice().to_vec(),
            g: vec![C64::default(); cols],
            p,
            w: vec![C64::default(); rows],
            rnorm2,
            converged_floor: CONVERGED_RATIO * rnorm2,
            k: 0,
        })
    }

    pub fn x(&self) -> &[C64] {
        &self.x
    }

    pub fn step<T: Tally>(&mut self, tally: &mut T) -> Result<Option<(f64, f64)>, SolverError> {
        if self.rnorm2 == 0.0 || self.rnorm2 <= self.converged_floor {
            return Ok(None);
        }
        let stage = Stage::CglsIteration;
        let pp = norm_sqr_counted(&self.p, tally, stage);
        if pp <= BREAKDOWN_CURVATURE {
            return Err(SolverError::Breakdown { iteration: self.k + 1, curvature: pp });
        }
        let alpha = self.rnorm2 / pp;
        axpy_real(alpha, &self.p, &mut self.x, tally, stage);
        self.op.apply(&self.p, &mut self.w, tally, stage);
        axpy_real(-alpha, &self.w, &mut self.r, tally, stage);
        let rnorm2 = norm_sqr_counted(&self.r, tally, stage);
        let beta = rnorm2 / self.rnorm2;
        self.op.apply_adjoint(&self.r, &mut self.g, tally, stage);
        xpby_real(&self.g, beta, &mut self.p, tally, stage);
        self.rnorm2 = rnorm2;
        self.k += 1;
        Ok(Some((alpha, beta)))
    }
}

/// Runs `k` minimum-norm iterations on min ||t - M x|| for a wide M.
pub fn cgls_min_norm_solve<M: LinearOperator>(m: &M, t: &ComplexVector, k: usize) -> Result<CglsOutput, SolverError> {
    cgls_min_norm_solve_counted(m, t, k, &mut ())
}

pub fn cgls_min_norm_solve_counted<M: LinearOperator, T: Tally>(
    m: &M,
    t: &ComplexVector,
    k: usize,
    tally: &mut T,
) -> Result<CglsOutput, SolverError> {
    if k == 0 {
        return Err(SolverError::NoIterations);
    }
    let mut it = MinNormIteration::new(m, t, tally)?;
    let mut history = ScalarHistory::default();
    let mut trace = vec![ComplexVector::from(it.x().to_vec())];
    for _ in 0..k {
        match it.step(tally)? {
            Some((alpha, beta)) => {
                history.push(alpha, beta);
                trace.push(ComplexVector::from(it.x().to_vec()));
            }
            None => break,
        }
    }
    let solution = trace.last().cloned().expect("trace starts with x_0");
    Ok(CglsOutput { solution, history, trace })
}

/// Lower-triangular factor M of A = M M^H, with a real positive diagonal.
pub fn cholesky_factor<T: Tally>(a: &HermitianMatrix, tally: &mut T) -> Result<ComplexMatrix, SolverError> {
    let n = a.dim();
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.diag()[j];
        for k in 0..j {
            d -= m[(j, k)].norm_sqr();
        }
        tally.add(Stage::Cholesky, 2 * j as u64);
        if !(d > 0.0) || !d.is_finite() {
            return Err(SolverError::NotPositiveDefinite { index: j, value: d });
        }
        let pivot = d.sqrt();
        m[(j, j)] = C64::new(pivot, 0.0);
        let inv = 1.0 / pivot;
        for i in j + 1..n {
            let mut z = a.get(i, j);
            for k in 0..j {
                z -= m[(i, k)] * m[(j, k)].conj();
            }
            m[(i, j)] = z * inv;
        }
        tally.add(Stage::Cholesky, ((n - 1 - j) * (4 * j + 2)) as u64);
    }
    Ok(m)
}

/// Exact inverse through A = M M^H: forward substitution M Y = I, then
/// backward substitution M^H Z = Y column by column.
pub fn cholesky_inverse(a: &HermitianMatrix) -> Result<ComplexMatrix, SolverError> {
    cholesky_inverse_counted(a, &mut ())
}

pub fn cholesky_inverse_counted<T: Tally>(a: &HermitianMatrix, tally: &mut T) -> Result<ComplexMatrix, SolverError> {
    let n = a.dim();
    let m = cholesky_factor(a, tally)?;
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / m[(i, i)].re).collect();

    // Y = M^{-1} is lower triangular; column j starts at row j.
    let mut y = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        y[(j, j)] = C64::new(inv_diag[j], 0.0);
        for i in j + 1..n {
            let mut z = C64::default();
            for k in j..i {
                z += m[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = -z * inv_diag[i];
            tally.add(Stage::Substitution, (4 * (i - j) + 2) as u64);
        }
    }

    let mut out = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        for i in (0..n).rev() {
            let mut z = y[(i, j)];
            for k in i + 1..n {
                z -= m[(k, i)].conj() * out[(k, j)];
            }
            out[(i, j)] = z * inv_diag[i];
            tally.add(Stage::Substitution, (4 * (n - 1 - i) + 2) as u64);
        }
    }
    Ok(out)
}

/// Truncated Neumann series sum_{k=0}^{K-1} (-D^{-1} E)^k D^{-1} with
/// A = D + E and D = diag(A). No convergence check is made.
pub fn neumann_inverse(a: &HermitianMatrix, k: usize) -> Result<ComplexMatrix, SolverError> {
    neumann_inverse_counted(a, k, &mut ())
}

pub fn neumann_inverse_counted<T: Tally>(a: &HermitianMatrix, k: usize, tally: &mut T) -> Result<ComplexMatrix, SolverError> {
    if k == 0 {
        return Err(SolverError::NoIterations);
    }
    let n = a.dim();
    if let Some(index) = a.diag().iter().position(|&d| d == 0.0) {
        return Err(SolverError::ZeroDiagonal { index });
    }
    let dinv: Vec<f64> = a.diag().iter().map(|d| 1.0 / d).collect();
    let mut sum = HermitianMatrix::from_real_diag(&dinv);
    if k == 1 || n == 1 {
        return Ok(sum.to_full());
    }

    // Every term (-D^{-1}E)^k D^{-1} is Hermitian, so only the upper
    // triangle is computed.
    let mut term = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let z = -a.get(i, j) * (dinv[i] * dinv[j]);
            term.set_upper(i, j, z);
            sum.set_upper(i, j, z);
        }
    }
    tally.add(Stage::NeumannTerm, (3 * n * (n - 1) / 2) as u64);

    for _ in 2..k {
        let prev = term.to_full();
        let mut next = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut z = C64::default();
                for l in (0..n).filter(|&l| l != i) {
                    z += a.get(i, l) * prev[(l, j)];
                }
                let z = -z * dinv[i];
                if i == j {
                    next.set_diag(i, z.re);
                    sum.set_diag(i, sum.diag()[i] + z.re);
                } else {
                    next.set_upper(i, j, z);
                    sum.set_upper(i, j, sum.get(i, j) + z);
                }
            }
        }
        tally.add(Stage::NeumannTerm, ((4 * (n - 1) + 2) * n * (n + 1) / 2) as u64);
        term = next;
    }
    Ok(sum.to_full())
}
