//! Joint constructions of several particle systems on one probability space.
//!
//! * [`simulate_upper_coupling`]: a Poisson system with raised immigration
//!   plus a top-up system together dominate the self-blocking system.
//! * [`reflection_couple`]: two walks started at `x0` and `0` are mirrored
//!   until they meet or cross, then run independently.
//! * [`simulate_lower_coupling`]: block scheme on a [`TimeGrid`] that plants
//!   one marked self-blocking particle per block and counts how many of them
//!   merge with a particle of a Poisson system with lowered immigration.

mod grid;
mod landing;
mod lower;
mod pair;
mod upper;

use thiserror::Error;

use crate::heat::HeatError;
use crate::particles::SimError;

pub use grid::{build_time_grid, TimeGrid};
pub use landing::LandingLaw;
pub use lower::{simulate_lower_coupling, BlockRecord, LowerOptions, LowerRun};
pub use pair::{
    coupling_success_prob, reflection_couple, reflection_couple_with, CoupleOptions,
    CouplingOutcome, PairPhase, PathPoint, SuccessEstimate,
};
pub use upper::{simulate_upper_coupling, TripleCounts, UpperOptions, UpperRun};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CouplingError {
    #[error("kernel is not symmetric")]
    KernelNotSymmetric,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("coupling unresolved after {events} events")]
    Unresolved { events: u64 },
    #[error("domination violated at t = {t}, x = {x}: eta = {eta} > {dominating}")]
    DominationViolated {
        t: f64,
        x: i64,
        eta: u32,
        dominating: u32,
    },
    #[error("pathwise property violated at t = {t}: {what}")]
    PropertyViolated { t: f64, what: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Heat(#[from] HeatError),
}
