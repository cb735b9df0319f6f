//! Orchestration behind the `sfv` binary.

pub mod commands;
pub mod experiments;

use sfv::SfvError;

/// Process exit status for an error: 2 configuration or rank, 3 positivity,
/// 4 integration or numerical failure, 5 IO or file format.
pub fn exit_code(e: &SfvError) -> u8 {
    match e.root() {
        SfvError::Config(_) | SfvError::RankDeficient { .. } | SfvError::Index(_) => 2,
        SfvError::Positivity { .. } => 3,
        SfvError::Integration { .. } | SfvError::Numerical(_) | SfvError::AtNode { .. } => 4,
        SfvError::Io(_) | SfvError::Format(_) => 5,
    }
}
