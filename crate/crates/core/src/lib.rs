//! Joint beamforming, rate selection, admission control and SBS clustering
//! for mmWave self-backhauled small cells.
//!
//! The crate is layered bottom-up:
//!
//! * [`system`] holds static problem data (dimensions, powers, rate tables, geometry).
//! * [`channel`] draws backhaul and access channel realizations.
//! * [`conic`] is a solver-neutral SOCP representation plus the default backend.
//! * [`formulation`] turns a configuration and channel set into conic programs.
//! * [`algorithms`] runs branch-and-bound and the relax-and-penalize heuristics.
//! * [`verify`] re-checks solutions against the original (nonconvex) constraints.
//! * [`scenario`] drives Monte-Carlo sweeps and slotted scheduling.

pub mod algorithms;
pub mod channel;
pub mod conic;
mod error;
pub mod formulation;
pub mod rng;
pub mod scenario;
pub mod system;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
