//! Multimode squeezing and entanglement of broadband type-II parametric
//! down-conversion in lossy waveguides.
//!
//! The signal/idler correlation matrices `A = ⟨a†a⟩`, `B = ⟨b†b⟩` and
//! `X = ⟨ab⟩` are propagated along the waveguide by a Lindblad master
//! equation on a discrete frequency grid ([`solver`]). From the final state
//! a pair of broadband modes is selected ([`modes`]) and the resulting
//! two-mode Gaussian state is characterised ([`tmbs`]).
//!
//! ```no_run
//! use pdc_tmbs::{modes, solver, tmbs, waveguide::{PumpSpec, WaveguideSpec}};
//!
//! let pump = PumpSpec::reference();
//! let spec = WaveguideSpec::reference(&pump);
//! let config = solver::SolverConfig::reference(&spec, &pump, 40.0)?;
//! let state = solver::integrate(&config, &spec, &pump)?;
//! let pair = modes::mercer_wolf_modes(&state)?;
//! println!("{:?}", tmbs::report(&state, &pair)?);
//! # Ok::<(), pdc_tmbs::Error>(())
//! ```

pub mod config;
pub mod error;
pub mod gaussian;
pub mod grid;
pub mod linalg;
pub mod modes;
pub mod runner;
pub mod solver;
pub mod tmbs;
pub mod waveguide;

pub use config::Scenario;
pub use error::{Error, Result};
pub use gaussian::{BroadbandMode, CorrelationState, CovarianceMatrix};
pub use grid::FrequencyGrid;
pub use modes::{Basis, ModePair};
pub use tmbs::{TmbsCov, TmbsReport};
