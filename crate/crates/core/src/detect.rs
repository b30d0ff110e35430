//! Uplink soft-output MMSE detection.
//!
//! All detectors return a [`SoftOutput`]: equalized symbols x̂, per-user
//! equalized gains mu and post-equalization SINRs rho, and max-log LLRs.
//!
//! * [`detect_explicit`] forms W = A^{-1} H^H and evaluates mu and nu^2 from
//!   W H directly. It is the reference the others are checked against.
//! * [`detect_cholesky`] computes the same numbers from A^{-1} alone.
//! * [`detect_cg`] runs K CG iterations on A x = H^H y and tracks mu and rho
//!   alongside, either exactly (a U x U polynomial in A) or approximately
//!   (the same recursion with A replaced by its diagonal).
//! * [`detect_cgls`] runs CGLS on the augmented least-squares problem with
//!   the approximate tracker.
//! * [`detect_neumann`] uses a truncated Neumann-series inverse.

use crate::linalg::{
    gram_regularized_counted, ComplexMatrix, ComplexVector, HermitianMatrix, Side, C64,
};
use crate::opcount::{Stage, Tally};
use crate::phy::Constellation;
use crate::solvers::{
    cholesky_inverse_counted, neumann_inverse_counted, AugmentLayout, Augmented, CgIteration, CglsIteration,
    ScalarHistory, SolverError,
};

/// LLR magnitudes are clipped to this value.
pub const LLR_MAX: f64 = 64.0;

/// Gains below this magnitude produce all-zero LLRs instead of a division.
pub const MU_ERASURE: f64 = 1e-12;

/// Signal and noise levels seen by a detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// transmit SNR Es / N0 used for regularization
    pub rho: f64,
    pub n0: f64,
    pub es: f64,
}

impl Link {
    pub fn new(rho: f64, n0: f64, es: f64) -> Self {
        assert!(rho > 0.0 && n0 > 0.0 && es > 0.0, "rho, N0 and Es must be positive");
        Link { rho, n0, es }
    }

    /// Unit-energy symbols at average uplink SNR U Es / N0 (linear).
    pub fn uplink(avg_snr: f64, users: usize) -> Self {
        let n0 = users as f64 / avg_snr;
        Link::new(1.0 / n0, n0, 1.0)
    }

    pub fn rho_inv(&self) -> f64 {
        1.0 / self.rho
    }

    /// True when rho = Es / N0, which makes the MMSE shortcut nu^2 = Es mu (1 - mu) exact.
    pub fn is_matched(&self) -> bool {
        (self.rho * self.n0 / self.es - 1.0).abs() <= 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftOutput {
    pub xhat: ComplexVector,
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
    /// row-major U x bits_per_symbol
    pub llrs: Vec<f64>,
    pub bits_per_symbol: usize,
}

impl SoftOutput {
    pub fn new(xhat: ComplexVector, mu: Vec<f64>, rho: Vec<f64>, constellation: &Constellation) -> Self {
        let bps = constellation.bits_per_symbol();
        let mut llrs = vec![0.0; xhat.len() * bps];
        for (i, out) in llrs.chunks_mut(bps).enumerate() {
            compute_llrs_into(xhat[i], mu[i], rho[i], constellation, out);
        }
        SoftOutput { xhat, mu, rho, llrs, bits_per_symbol: bps }
    }

    pub fn users(&self) -> usize {
        self.xhat.len()
    }

    pub fn user_llrs(&self, i: usize) -> &[f64] {
        &self.llrs[i * self.bits_per_symbol..(i + 1) * self.bits_per_symbol]
    }
}

/// Max-log LLRs of one symbol estimate, clipped to ±[`LLR_MAX`]. Positive
/// values favor bit 1.
pub fn compute_llrs(xhat: C64, mu: f64, rho: f64, constellation: &Constellation) -> Vec<f64> {
    let mut out = vec![0.0; constellation.bits_per_symbol()];
    compute_llrs_into(xhat, mu, rho, constellation, &mut out);
    out
}

pub fn compute_llrs_into(xhat: C64, mu: f64, rho: f64, constellation: &Constellation, out: &mut [f64]) {
    if mu.abs() < MU_ERASURE || !mu.is_finite() {
        out.iter_mut().for_each(|l| *l = 0.0);
        return;
    }
    constellation.max_log_llrs(xhat / mu, rho, out);
    for l in out.iter_mut() {
        *l = if l.is_nan() { 0.0 } else { l.clamp(-LLR_MAX, LLR_MAX) };
    }
}

/// rho = mu^2 / nu^2 with nu^2 = Es mu (1 - mu), the MMSE relation between
/// gain and residual variance. Gains at or above 1 give a very large SINR;
/// negative gains give zero.
fn sinr_from_gain(mu: f64, es: f64) -> f64 {
    let denom = (es * (1.0 - mu)).max(es * f64::EPSILON);
    (mu / denom).max(0.0)
}

fn debug_check_real(z: C64, scale: f64) {
    debug_assert!(z.im.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE), "equalized gain {z} is not real");
}

/// W = (H^H H + rho^{-1} I)^{-1} H^H.
pub fn mmse_matrix_explicit(h: &ComplexMatrix, rho: f64) -> Result<ComplexMatrix, SolverError> {
    let a = gram_regularized_counted(h, 1.0 / rho, Side::Uplink, &mut ());
    let ainv = cholesky_inverse_counted(&a, &mut ())?;
    Ok(ainv.matmul(&h.hermitian_of())?)
}

/// Gain and interference-plus-noise variance of user i for an equalizer
/// whose effective channel is `b` = W H and whose noise covariance diagonal
/// is `noise_diag` (the diagonal of W W^H).
fn gain_and_variance(b: &ComplexMatrix, noise_diag: &[f64], link: &Link) -> (Vec<f64>, Vec<f64>) {
    let u = b.rows();
    let mut mu = Vec::with_capacity(u);
    let mut nu2 = Vec::with_capacity(u);
    for i in 0..u {
        let row = b.row(i);
        debug_check_real(row[i], row.iter().map(|z| z.norm()).sum());
        mu.push(row[i].re);
        let interference: f64 = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, z)| z.norm_sqr()).sum();
        nu2.push(interference * link.es + noise_diag[i] * link.n0);
    }
    (mu, nu2)
}

/// Reference detector: x̂ = W y, mu_i = w_i^H h_i,
/// nu_i^2 = sum_{j != i} |w_i^H h_j|^2 Es + ||w_i||^2 N0.
pub fn detect_explicit(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
) -> Result<SoftOutput, SolverError> {
    let w = mmse_matrix_explicit(h, link.rho)?;
    let xhat = w.matvec(y)?;
    let wh = w.matmul(h)?;
    let wnorm: Vec<f64> = (0..w.rows()).map(|i| w.row(i).iter().map(|z| z.norm_sqr()).sum()).collect();
    let (mu, nu2) = gain_and_variance(&wh, &wnorm, link);
    let rho = mu.iter().zip(&nu2).map(|(m, v)| m * m / v).collect();
    Ok(SoftOutput::new(xhat, mu, rho, constellation))
}

/// Cholesky-based exact MMSE detection without forming W.
///
/// With W H = I - rho^{-1} A^{-1}, the gain is mu_i = 1 - rho^{-1} [A^{-1}]_ii
/// and, when rho = Es / N0, nu_i^2 = Es mu_i (1 - mu_i). Links where rho
/// differs from Es / N0 fall back to [`detect_explicit`].
pub fn detect_cholesky(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
) -> Result<SoftOutput, SolverError> {
    detect_cholesky_counted(h, y, link, constellation, &mut ())
}

pub fn detect_cholesky_counted<T: Tally>(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    if !link.is_matched() {
        return detect_explicit(h, y, link, constellation);
    }
    let g = gram_regularized_counted(h, 0.0, Side::Uplink, tally);
    let b = matched_filter(h, y, tally)?;
    cholesky_core(&g, &b, link, constellation, tally)
}

fn cholesky_core<T: Tally>(
    g: &HermitianMatrix,
    b: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    let rho_inv = link.rho_inv();
    let a = g.shifted(rho_inv);
    let ainv = HermitianMatrix::from_upper(&cholesky_inverse_counted(&a, tally)?)?;
    let mut xhat = ComplexVector::zeros(a.dim());
    ainv.matvec_into(b.as_slice(), xhat.as_mut_slice(), tally, Stage::Equalize);
    let mu: Vec<f64> = ainv.diag().iter().map(|d| 1.0 - rho_inv * d).collect();
    let rho = mu.iter().map(|&m| sinr_from_gain(m, link.es)).collect();
    tally.add(Stage::Sinr, 2 * a.dim() as u64);
    Ok(SoftOutput::new(xhat, mu, rho, constellation))
}

fn matched_filter<T: Tally>(h: &ComplexMatrix, y: &ComplexVector, tally: &mut T) -> Result<ComplexVector, SolverError> {
    if h.rows() != y.len() {
        return Err(crate::linalg::LinalgError::DimensionMismatch { op: "matched filter", left: h.shape(), right: (y.len(), 1) }
            .into());
    }
    let mut b = ComplexVector::zeros(h.cols());
    h.adjoint_matvec_into(y.as_slice(), b.as_mut_slice(), tally, Stage::MatchedFilter);
    Ok(b)
}

/// Recursion coefficients (alpha_k (1 + beta_{k-1}) / alpha_{k-1}, alpha_k,
/// alpha_k beta_{k-2} / alpha_{k-2}) for the k-th update.
fn coefficients(h: &ScalarHistory, k: isize) -> (f64, f64, f64) {
    let ak = h.alpha(k);
    (ak * (1.0 + h.beta(k - 1)) / h.alpha(k - 1), ak, ak * h.beta(k - 2) / h.alpha(k - 2))
}

/// Exact tracker: maintains L_k with v_k = L_k H^H y for every CG iterate.
///
/// L_1 = alpha_1 I and, for k >= 2,
/// L_k = L_{k-1} + (c1 I - alpha_k A)(L_{k-1} - L_{k-2}) - c2 (L_{k-2} - L_{k-3}),
/// with L = 0 for indices below 1. Only the last three matrices are kept.
#[derive(Debug, Clone)]
pub struct ExactTracker {
    /// L_k, L_{k-1}, L_{k-2}
    window: [ComplexMatrix; 3],
    history: ScalarHistory,
}

impl ExactTracker {
    pub fn new(users: usize) -> Self {
        let z = ComplexMatrix::zeros(users, users);
        ExactTracker { window: [z.clone(), z.clone(), z], history: ScalarHistory::default() }
    }

    pub fn k(&self) -> usize {
        self.history.len()
    }

    /// L_k after the latest step.
    pub fn current(&self) -> &ComplexMatrix {
        &self.window[0]
    }

    pub fn step<T: Tally>(&mut self, a: &HermitianMatrix, alpha: f64, beta: f64, tally: &mut T) {
        let n = a.dim();
        self.history.push(alpha, beta);
        let k = self.history.len() as isize;
        let next = if k == 1 {
            ComplexMatrix::identity(n).scale(C64::new(alpha, 0.0))
        } else {
            let (c1, ak, c2) = coefficients(&self.history, k);
            let [l1, l2, l3] = &self.window;
            let d1 = l1.sub(l2).expect("square");
            let d2 = l2.sub(l3).expect("square");
            let ad1 = a.to_full().matmul_counted(&d1, tally, Stage::Tracker);
            tally.add(Stage::Tracker, 6 * (n * n) as u64);
            ComplexMatrix::from_fn(n, n, |i, j| l1[(i, j)] + d1[(i, j)] * c1 - ad1[(i, j)] * ak - d2[(i, j)] * c2)
        };
        self.window.rotate_right(1);
        self.window[0] = next;
    }
}

/// mu_{i|k} = Re B_ii and nu^2_{i|k} = sum_{j != i} |B_ij|^2 Es + C_ii N0 with
/// B = L G and C = B L^H.
pub fn tracker_exact_extract(l: &ComplexMatrix, g: &ComplexMatrix, link: &Link) -> (Vec<f64>, Vec<f64>) {
    let b = l.matmul(g).expect("square matrices of equal size");
    let n = l.rows();
    let c_diag: Vec<f64> =
        (0..n).map(|i| b.row(i).iter().zip(l.row(i)).map(|(bij, lij)| (bij * lij.conj()).re).sum()).collect();
    gain_and_variance(&b, &c_diag, link)
}

/// Approximate tracker: the exact recursion with A replaced by D = diag(A),
/// so every L̃_k is diagonal and stored as a real vector.
#[derive(Debug, Clone)]
pub struct ApproxTracker {
    d: Vec<f64>,
    window: [Vec<f64>; 3],
    history: ScalarHistory,
}

impl ApproxTracker {
    pub fn new(a_diag: &[f64]) -> Self {
        let z = vec![0.0; a_diag.len()];
        ApproxTracker { d: a_diag.to_vec(), window: [z.clone(), z.clone(), z], history: ScalarHistory::default() }
    }

    pub fn k(&self) -> usize {
        self.history.len()
    }

    /// Diagonal of L̃_k after the latest step.
    pub fn current(&self) -> &[f64] {
        &self.window[0]
    }

    /// Charged one multiplication per user: the update is a single scaled
    /// difference per diagonal entry.
    pub fn step<T: Tally>(&mut self, alpha: f64, beta: f64, tally: &mut T) {
        self.history.push(alpha, beta);
        let k = self.history.len() as isize;
        let next: Vec<f64> = if k == 1 {
            vec![alpha; self.d.len()]
        } else {
            let (c1, ak, c2) = coefficients(&self.history, k);
            let [l1, l2, l3] = &self.window;
            (0..self.d.len())
                .map(|i| l1[i] + (c1 - ak * self.d[i]) * (l1[i] - l2[i]) - c2 * (l2[i] - l3[i]))
                .collect()
        };
        tally.add(Stage::Tracker, self.d.len() as u64);
        self.window.rotate_right(1);
        self.window[0] = next;
    }
}

/// mu_{i|k} ≈ L̃_ii G_ii and rho_{i|k} ≈ G_ii / N0.
pub fn tracker_approx_extract(l_diag: &[f64], g_diag: &[f64], n0: f64) -> (Vec<f64>, Vec<f64>) {
    let mu = l_diag.iter().zip(g_diag).map(|(l, g)| l * g).collect();
    let rho = g_diag.iter().map(|g| g / n0).collect();
    (mu, rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tracker {
    Exact,
    Approx,
}

/// CG detection with K iterations and in-loop SINR tracking.
pub fn detect_cg(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tracker: Tracker,
) -> Result<SoftOutput, SolverError> {
    detect_cg_counted(h, y, link, constellation, iters, tracker, &mut ())
}

pub fn detect_cg_counted<T: Tally>(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tracker: Tracker,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    if iters == 0 {
        return Err(SolverError::NoIterations);
    }
    let g = gram_regularized_counted(h, 0.0, Side::Uplink, tally);
    let b = matched_filter(h, y, tally)?;
    cg_core(&g, &b, link, constellation, iters, tracker, tally)
}

fn cg_core<T: Tally>(
    g: &HermitianMatrix,
    b: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tracker: Tracker,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    if iters == 0 {
        return Err(SolverError::NoIterations);
    }
    let a = g.shifted(link.rho_inv());
    let mut cg = CgIteration::new(&a, b, tally)?;
    let (mu, rho) = match tracker {
        Tracker::Approx => {
            let mut tr = ApproxTracker::new(a.diag());
            for _ in 0..iters {
                match cg.step(tally)? {
                    Some((alpha, beta)) => tr.step(alpha, beta, tally),
                    None => break,
                }
            }
            tally.add(Stage::Sinr, a.dim() as u64);
            tracker_approx_extract(tr.current(), g.diag(), link.n0)
        }
        Tracker::Exact => {
            let mut tr = ExactTracker::new(a.dim());
            for _ in 0..iters {
                match cg.step(tally)? {
                    Some((alpha, beta)) => tr.step(&a, alpha, beta, tally),
                    None => break,
                }
            }
            let (mu, nu2) = tracker_exact_extract(tr.current(), &g.to_full(), link);
            let rho = mu.iter().zip(&nu2).map(|(m, v)| if *v > 0.0 { m * m / v } else { 0.0 }).collect();
            (mu, rho)
        }
    };
    Ok(SoftOutput::new(cg.into_state().v, mu, rho, constellation))
}

/// CGLS detection on [H; sqrt(1/rho) I] x = [y; 0] with the approximate tracker
/// driven by the CGLS step sizes. D = diag(A) comes from column norms of H.
pub fn detect_cgls(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
) -> Result<SoftOutput, SolverError> {
    detect_cgls_counted(h, y, link, constellation, iters, &mut ())
}

pub fn detect_cgls_counted<T: Tally>(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    let (rows, u) = h.shape();
    let s0 = matched_filter(h, y, tally)?;
    let mut g_diag = vec![0.0; u];
    for r in 0..rows {
        for (g, z) in g_diag.iter_mut().zip(h.row(r)) {
            *g += z.norm_sqr();
        }
    }
    tally.add(Stage::Gram, 2 * (rows * u) as u64);
    cgls_core(h, y, &s0, &g_diag, link, constellation, iters, tally)
}

#[allow(clippy::too_many_arguments)]
fn cgls_core<T: Tally>(
    h: &ComplexMatrix,
    y: &ComplexVector,
    s0: &ComplexVector,
    g_diag: &[f64],
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    if iters == 0 {
        return Err(SolverError::NoIterations);
    }
    let rho_inv = link.rho_inv();
    let (rows, u) = h.shape();
    let a_diag: Vec<f64> = g_diag.iter().map(|g| g + rho_inv).collect();
    let op = Augmented::new(h, rho_inv, AugmentLayout::Stacked);
    let mut b_aug = y.clone().into_vec();
    b_aug.resize(rows + u, C64::default());
    let mut ls = CglsIteration::from_gradient(&op, ComplexVector::from(b_aug), s0.as_slice().to_vec(), tally);
    let mut tr = ApproxTracker::new(&a_diag);
    for _ in 0..iters {
        match ls.step(tally)? {
            Some((alpha, beta)) => tr.step(alpha, beta, tally),
            None => break,
        }
    }
    tally.add(Stage::Sinr, u as u64);
    let (mu, rho) = tracker_approx_extract(tr.current(), g_diag, link.n0);
    Ok(SoftOutput::new(ComplexVector::from(ls.x().to_vec()), mu, rho, constellation))
}

/// Detection with a K-term Neumann-series inverse Ã^{-1}. The gain is
/// mu_i = Re [Ã^{-1} G]_ii and the SINR uses the MMSE relation
/// nu^2 = Es mu (1 - mu).
pub fn detect_neumann(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
) -> Result<SoftOutput, SolverError> {
    detect_neumann_counted(h, y, link, constellation, iters, &mut ())
}

pub fn detect_neumann_counted<T: Tally>(
    h: &ComplexMatrix,
    y: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    let g = gram_regularized_counted(h, 0.0, Side::Uplink, tally);
    let b = matched_filter(h, y, tally)?;
    neumann_core(&g, &b, link, constellation, iters, tally)
}

fn neumann_core<T: Tally>(
    g: &HermitianMatrix,
    b: &ComplexVector,
    link: &Link,
    constellation: &Constellation,
    iters: usize,
    tally: &mut T,
) -> Result<SoftOutput, SolverError> {
    let a = g.shifted(link.rho_inv());
    let ainv = HermitianMatrix::from_upper(&neumann_inverse_counted(&a, iters, tally)?)?;
    let u = a.dim();
    let mut xhat = ComplexVector::zeros(u);
    ainv.matvec_into(b.as_slice(), xhat.as_mut_slice(), tally, Stage::Equalize);
    let mu: Vec<f64> = (0..u).map(|i| (0..u).map(|j| (ainv.get(i, j) * g.get(j, i)).re).sum()).collect();
    let rho = mu.iter().map(|&m| sinr_from_gain(m, link.es)).collect();
    tally.add(Stage::Sinr, (2 * u * u + u) as u64);
    Ok(SoftOutput::new(xhat, mu, rho, constellation))
}

/// Receiver quantities that do not depend on the detector: the
/// unregularized Gram matrix G = H^H H and the matched filter H^H y. A
/// simulator can compute them once per channel and reuse them across
/// detectors and noise levels.
#[derive(Debug, Clone, Copy)]
pub struct FrontEnd<'a> {
    pub h: &'a ComplexMatrix,
    pub y: &'a ComplexVector,
    pub gram: &'a HermitianMatrix,
    pub mf: &'a ComplexVector,
}

/// Detector selection for callers that sweep over methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Cholesky,
    Cg { iters: usize, tracker: Tracker },
    Cgls { iters: usize },
    Neumann { iters: usize },
}

impl Detector {
    pub fn detect<T: Tally>(
        &self,
        h: &ComplexMatrix,
        y: &ComplexVector,
        link: &Link,
        constellation: &Constellation,
        tally: &mut T,
    ) -> Result<SoftOutput, SolverError> {
        match *self {
            Detector::Cholesky => detect_cholesky_counted(h, y, link, constellation, tally),
            Detector::Cg { iters, tracker } => detect_cg_counted(h, y, link, constellation, iters, tracker, tally),
            Detector::Cgls { iters } => detect_cgls_counted(h, y, link, constellation, iters, tally),
            Detector::Neumann { iters } => detect_neumann_counted(h, y, link, constellation, iters, tally),
        }
    }

    /// Detection from precomputed front-end quantities. The tally receives
    /// everything except the front end; see [`Detector::front_end_mults`].
    /// Cholesky always uses the rho = Es / N0 shortcut here.
    pub fn detect_front<T: Tally>(
        &self,
        fe: &FrontEnd<'_>,
        link: &Link,
        constellation: &Constellation,
        tally: &mut T,
    ) -> Result<SoftOutput, SolverError> {
        match *self {
            Detector::Cholesky => cholesky_core(fe.gram, fe.mf, link, constellation, tally),
            Detector::Cg { iters, tracker } => cg_core(fe.gram, fe.mf, link, constellation, iters, tracker, tally),
            Detector::Cgls { iters } => cgls_core(fe.h, fe.y, fe.mf, fe.gram.diag(), link, constellation, iters, tally),
            Detector::Neumann { iters } => neumann_core(fe.gram, fe.mf, link, constellation, iters, tally),
        }
    }

    /// Real multiplications a standalone detection spends on its front end
    /// (Gram matrix or column norms, and the matched filter).
    pub fn front_end_mults(&self, b: usize, u: usize) -> u64 {
        let (b, u) = (b as u64, u as u64);
        let gram = match self {
            Detector::Cgls { .. } => 2 * b * u,
            _ => crate::opcount::gram_mults(b, u),
        };
        gram + 4 * b * u
    }
}
