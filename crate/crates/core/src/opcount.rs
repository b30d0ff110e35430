//! Real-multiplication accounting.
//!
//! Every kernel in [`crate::linalg`] and [`crate::solvers`] reports the real
//! multiplications it performs to a [`Tally`]. The closed-form model in this
//! module predicts the same numbers from the problem dimensions alone, so the
//! two can be checked against each other.
//!
//! Counting conventions:
//!
//! * complex x complex = 4, real x complex = 2, |z|^2 = 2, real x real = 1,
//!   Re(conj(a) * b) = 2;
//! * divisions, reciprocals, square roots and additions are free;
//! * arithmetic on O(1) iteration scalars (alpha, beta and their ratios) is free;
//! * Hermitian matrices are formed on one triangle; real diagonals are exploited;
//! * products with structural zeros (identity blocks, zero right-hand sides,
//!   triangular fill) are skipped;
//! * one approximate-tracker update is one unit per user and iteration.

use std::fmt;

/// Algorithm stage a multiplication is charged to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Gram,
    MatchedFilter,
    CgIteration,
    Tracker,
    Cholesky,
    Substitution,
    NeumannTerm,
    CglsIteration,
    /// Applying an (approximate) inverse to the matched-filter output.
    Equalize,
    /// Gain / SINR extraction for the LLR computation.
    Sinr,
    /// Anything else (oracle-only products, precoder back-projection).
    Other,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Gram,
        Stage::MatchedFilter,
        Stage::CgIteration,
        Stage::Tracker,
        Stage::Cholesky,
        Stage::Substitution,
        Stage::NeumannTerm,
        Stage::CglsIteration,
        Stage::Equalize,
        Stage::Sinr,
        Stage::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Stage::Gram => "gram",
            Stage::MatchedFilter => "matched-filter",
            Stage::CgIteration => "cg-iteration",
            Stage::Tracker => "tracker",
            Stage::Cholesky => "cholesky",
            Stage::Substitution => "substitution",
            Stage::NeumannTerm => "neumann-term",
            Stage::CglsIteration => "cgls-iteration",
            Stage::Equalize => "equalize",
            Stage::Sinr => "sinr",
            Stage::Other => "other",
        }
    }

    fn index(self) -> usize {
        Stage::ALL.iter().position(|&s| s == self).unwrap()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Sink for multiplication counts. `()` discards everything.
pub trait Tally {
    fn add(&mut self, stage: Stage, mults: u64);
}

impl Tally for () {
    #[inline(always)]
    fn add(&mut self, _stage: Stage, _mults: u64) {}
}

/// Per-stage real-multiplication tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpCounter {
    tallies: [u64; Stage::ALL.len()],
}

impl Tally for OpCounter {
    #[inline]
    fn add(&mut self, stage: Stage, mults: u64) {
        self.tallies[stage.index()] += mults;
    }
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, stage: Stage) -> u64 {
        self.tallies[stage.index()]
    }

    pub fn total(&self) -> u64 {
        self.tallies.iter().sum()
    }

    pub fn merge(&mut self, other: &OpCounter) {
        for (a, b) in self.tallies.iter_mut().zip(other.tallies.iter()) {
            *a += b;
        }
    }

    /// Non-empty stages in declaration order.
    pub fn stages(&self) -> impl Iterator<Item = (Stage, u64)> + '_ {
        Stage::ALL
            .iter()
            .map(move |&s| (s, self.get(s)))
            .filter(|&(_, n)| n > 0)
    }
}

/// Detector (or precoder) family for the closed-form model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMethod {
    Cholesky,
    Cg,
    Cgls,
    Neumann,
}

/// Gram matrix H^H H of a B x U matrix, upper triangle only.
pub fn gram_mults(b: u64, u: u64) -> u64 {
    // off-diagonal: B complex mults per entry; diagonal: B magnitudes
    4 * b * u * (u - 1) / 2 + 2 * b * u
}

/// Hermitian matrix times vector with a real diagonal.
pub fn hermitian_matvec_mults(u: u64) -> u64 {
    4 * u * u - 2 * u
}

/// One CG iteration: A p, p^H A p (real part), two axpys, ||r||^2, direction update.
pub fn cg_iteration_mults(u: u64) -> u64 {
    hermitian_matvec_mults(u) + 2 * u + 2 * u + 2 * u + 2 * u + 2 * u
}

/// One CGLS iteration on the augmented B+U by U system. The identity block
/// costs a real scaling instead of a matrix product.
pub fn cgls_iteration_mults(b: u64, u: u64) -> u64 {
    let forward = 4 * b * u + 2 * u; // q = [H p; sqrt(1/rho) p]
    let qnorm = 2 * (b + u);
    let update_x = 2 * u;
    let update_r = 2 * (b + u);
    let backward = 4 * b * u + 2 * u; // s = H^H r_top + sqrt(1/rho) r_bot
    let snorm = 2 * u;
    let update_p = 2 * u;
    forward + qnorm + update_x + update_r + backward + snorm + update_p
}

/// One minimum-norm iteration on the wide U by B+U system [H_d, sqrt(1/rho) I]:
/// the residual lives in C^U, the iterate and direction in C^(B+U).
pub fn cgls_wide_iteration_mults(b: u64, u: u64) -> u64 {
    let forward = 4 * b * u + 2 * u; // w = H_d p_top + sqrt(1/rho) p_bot
    let pnorm = 2 * (b + u);
    let update_x = 2 * (b + u);
    let update_r = 2 * u;
    let rnorm = 2 * u;
    let backward = 4 * b * u + 2 * u; // M^H r
    let update_p = 2 * (b + u);
    forward + pnorm + update_x + update_r + rnorm + backward + update_p
}

/// A = M M^H with lower-triangular M. Off-diagonal entries are scaled by the
/// reciprocal of the (real) pivot.
pub fn cholesky_mults(u: u64) -> u64 {
    (0..u).map(|j| 2 * j + (u - 1 - j) * (4 * j + 2)).sum()
}

/// Forward substitution M Y = I exploiting the zeros of the identity, then a
/// full backward substitution M^H Z = Y for every column.
pub fn substitution_mults(u: u64) -> u64 {
    let forward: u64 = (1..u).map(|d| (u - d) * (4 * d + 2)).sum();
    let backward_col: u64 = (0..u).map(|i| 4 * (u - 1 - i) + 2).sum();
    forward + u * backward_col
}

/// Neumann-series terms 1..K-1 of the approximate inverse. The k = 0 term is
/// D^{-1}, i.e. U reciprocals, which are free.
pub fn neumann_term_mults(u: u64, k: u64) -> u64 {
    if k <= 1 || u == 1 {
        return 0;
    }
    let first = 3 * u * (u - 1) / 2;
    let later = (4 * (u - 1) + 2) * u * (u + 1) / 2;
    first + (k - 2) * later
}

/// Closed-form per-stage model for one soft-output detection on one subcarrier.
///
/// `k` is ignored for Cholesky. CG uses the approximate SINR tracker.
pub fn count_detect_breakdown(method: CountMethod, b: u64, u: u64, k: u64) -> OpCounter {
    assert!(b >= u && u >= 1, "need B >= U >= 1");
    let mut c = OpCounter::new();
    match method {
        CountMethod::Cholesky => {
            c.add(Stage::Gram, gram_mults(b, u));
            c.add(Stage::MatchedFilter, 4 * b * u);
            c.add(Stage::Cholesky, cholesky_mults(u));
            c.add(Stage::Substitution, substitution_mults(u));
            c.add(Stage::Equalize, hermitian_matvec_mults(u));
            // mu = 1 - (1/rho) [A^-1]_ii, rho = mu / (Es (1 - mu))
            c.add(Stage::Sinr, 2 * u);
        }
        CountMethod::Cg => {
            c.add(Stage::Gram, gram_mults(b, u));
            c.add(Stage::MatchedFilter, 4 * b * u);
            c.add(Stage::CgIteration, 2 * u + k * cg_iteration_mults(u));
            c.add(Stage::Tracker, k * u);
            // mu = L~_ii G_ii; rho = G_ii / N0 is a division
            c.add(Stage::Sinr, u);
        }
        CountMethod::Cgls => {
            c.add(Stage::MatchedFilter, 4 * b * u);
            // diag(A) from column norms; ||s_0||^2
            c.add(Stage::Gram, 2 * b * u);
            c.add(Stage::CglsIteration, 2 * u + k * cgls_iteration_mults(b, u));
            c.add(Stage::Tracker, k * u);
            c.add(Stage::Sinr, u);
        }
        CountMethod::Neumann => {
            c.add(Stage::Gram, gram_mults(b, u));
            c.add(Stage::MatchedFilter, 4 * b * u);
            c.add(Stage::NeumannTerm, neumann_term_mults(u, k));
            c.add(Stage::Equalize, hermitian_matvec_mults(u));
            // mu_i = Re sum_j [A~^-1]_ij G_ji, rho = mu / (Es (1 - mu))
            c.add(Stage::Sinr, 2 * u * u + u);
        }
    }
    c
}

/// Total real multiplications for one soft-output detection on one subcarrier.
pub fn count_detect(method: CountMethod, b: u64, u: u64, k: u64) -> u64 {
    count_detect_breakdown(method, b, u, k).total()
}

/// Closed-form count for one precoded vector (no SINR work, plus the
/// back-projection q = H_d^H v and the power normalization).
pub fn count_precode(method: CountMethod, b: u64, u: u64, k: u64) -> u64 {
    assert!(b >= u && u >= 1, "need B >= U >= 1");
    let back = 4 * b * u;
    let norm = 2 * b + 2 * b; // ||q||^2 and the scaling by 1/||q||
    let core = match method {
        CountMethod::Cholesky => {
            gram_mults(b, u)
                + cholesky_mults(u)
                + substitution_mults(u)
                + hermitian_matvec_mults(u)
                + back
        }
        CountMethod::Cg => gram_mults(b, u) + 2 * u + k * cg_iteration_mults(u) + back,
        CountMethod::Cgls => 4 * b * u + 2 * u + 2 * u + k * cgls_wide_iteration_mults(b, u),
        CountMethod::Neumann => {
            gram_mults(b, u) + neumann_term_mults(u, k) + hermitian_matvec_mults(u) + back
        }
    };
    core + norm
}

/// Largest K for which CG detection is strictly cheaper than Cholesky.
pub fn cg_cholesky_crossover(b: u64, u: u64) -> u64 {
    let chol = count_detect(CountMethod::Cholesky, b, u, 0);
    (1..)
        .take_while(|&k| count_detect(CountMethod::Cg, b, u, k) < chol)
        .last()
        .unwrap_or(0)
}
