//! Conjugate-gradient based soft-output MMSE detection and MMSE precoding
//! for massive MIMO, with exact and approximate baselines.
//!
//! * [`linalg`]: dense complex vectors and (Hermitian) matrices.
//! * [`solvers`]: CG, CGLS, Cholesky inversion, Neumann series.
//! * [`detect`]: uplink soft-output detectors and SINR trackers.
//! * [`precode`]: downlink MMSE precoders.
//! * [`phy`]: constellations, channels, convolutional coding, framing.
//! * [`opcount`]: real-multiplication accounting.

pub mod detect;
pub mod linalg;
pub mod opcount;
pub mod phy;
pub mod precode;
pub mod solvers;

pub use linalg::{ComplexMatrix, ComplexVector, HermitianMatrix, Side, C64};
pub use opcount::{OpCounter, Stage, Tally};
