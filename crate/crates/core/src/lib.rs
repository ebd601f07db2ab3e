//! Quantum-jump simulation of spontaneous emission into a structured
//! (Lorentzian) bath, comparing two unravelings of the same dynamics:
//!
//! * jumps between total-system property states driven by probability
//!   currents ([`gaw`]), and
//! * jumps in the reduced Hilbert space driven by time-local decay rates,
//!   with reverse jumps while a rate is negative ([`nmqj`]).
//!
//! Both consume one exact solution of the total-system Schrödinger equation
//! ([`dynamics`]) from which currents and rates are derived ([`observables`]).

pub mod bath;
pub mod density;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod gaw;
pub mod harness;
pub mod nmqj;
pub mod observables;
pub mod oracles;

pub use bath::{build_grid, BathSpec, ModeGrid};
pub use density::DensityMatrix;
pub use dynamics::{Model, System, TotalAmplitudes, Trajectory};
pub use ensemble::{Ensemble, EnsembleConfig, JumpEvent};
pub use error::{Error, Result};
pub use observables::{ChannelRate, CurrentSeries, GawRates, Populations, RateSeries};
pub use oracles::LorentzianChannel;
