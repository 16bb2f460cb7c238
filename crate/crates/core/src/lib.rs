//! Stationary states, ghost states, stability spectra, continuation and
//! dynamics of the PT-symmetric nonlinear trimer, plus a linear
//! gain-loss-gain three-channel coupler.

pub mod continuation;
pub mod dynamics;
pub mod error;
pub mod ghost;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod poly;
pub mod spectra;
pub mod stationary;
pub mod waveguide;

pub use num_complex::Complex64;

pub use continuation::{
    BifurcationEvent, Branch, BranchPoint, EventKind, GhostStudy, RegularStudy, Solution,
    StudyOptions,
};
pub use error::{Result, TrimerError};
pub use ghost::GhostPoint;
pub use model::{PolarState, PropagationConstant, TrimerParams, TrimerState};
pub use spectra::{Spectrum, Stability};
pub use stationary::StationaryPoint;
