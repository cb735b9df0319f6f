//! Reduced model of the stochastic flux integrals: POD basis, face-integral
//! matrix, least-squares projection and Q-DEIM hyper-reduction.

mod linalg;
mod operator;
mod pod;
mod qdeim;

pub use linalg::{matmul, pseudoinverse, Pinv};
pub use operator::{hyper_reduced_rhs, rom_rhs, run_hyper_reduced, run_rom, HyperReducedOperator, RomOperator};
pub use pod::{build_face_integrals, compute_pod, least_squares_coefficients, PodBasis};
pub use qdeim::{qdeim_indices, qdeim_indices_with, qdeim_select, qdeim_select_with, HyperReduction, Oversampling};
