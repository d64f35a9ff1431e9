//! Estimation of the parameter of a dynamically selected population.
//!
//! Observations `X_1, X_2, ...` are independent with `X_i ~ F_{θ_i}`. The
//! population that produced the current upper record is selected
//! dynamically, and its parameter `θ_[n] = θ_{T_n}` is the estimation
//! target. This crate provides:
//!
//! - [`families`]: the gamma-type family (a statistic `S(X) ~ Gamma(p, θ)`)
//!   and the proportional (reversed) hazard families, with sampling.
//! - [`records`]: record extraction, batch and streaming.
//! - [`estimators`]: UMVU and natural estimators of `θ_[n]` and unbiased
//!   estimators of their risk under squared error loss.
//! - [`montecarlo`]: parameter-sequence schemes and the simulation engine.
//! - [`stationarity`]: the scale-invariant stationarity statistic and its
//!   simulated critical values.
//! - [`asymptotics`]: Monte Carlo diagnostics for the large-`n` limits.
//!
//! All simulation is driven by counter-split random streams (see [`rng`]),
//! so results depend only on the master seed, never on thread count.

pub mod asymptotics;
pub mod datasets;
pub mod error;
pub mod estimators;
pub mod families;
pub mod input;
pub mod montecarlo;
pub mod quadrature;
pub mod records;
pub mod rng;
pub mod stationarity;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, EstimatorId};
pub use families::{FamilyKind, FamilySpec, Member};
pub use montecarlo::{ParameterSequenceModel, SimulationConfig, SimulationSummary};
pub use records::{Direction, RecordAccumulator, RecordSet};
pub use stationarity::{CriticalValueTable, Decision};
