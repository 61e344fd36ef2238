//! Conic programs for the joint resource-allocation problem.
//!
//! Four program families share one builder:
//!
//! * the continuous relaxation of the full mixed-integer SOCP (branch-and-bound nodes),
//! * the backhaul-only upper-bound program,
//! * the penalized majorization step over full beamformers,
//! * the same step over complex gains of predesigned beams.

mod beams;
mod bigm;
mod build;
mod layout;
mod state;

pub use beams::{design_multicast_beams, design_zf_beams, phase_align, PredesignedBeams};
pub use bigm::{compute_bigm, BigMConstants};
pub use build::{
    build_p0_relaxation, build_program, build_pub_relaxation, build_rnp1_subproblem, build_rnp2_subproblem,
    extract_point, BuildOptions, ExtractedPoint, Objective,
};
pub use layout::{LayoutKind, VariableLayout};
pub use state::{binary_penalty, linearized_penalty, BinaryState, Fix, Penalties};
