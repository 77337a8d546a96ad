//! Electromagnetic state estimation for reluctance actuators (solenoid valves,
//! relays).
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`filter`]: a stochastic recursive estimator of coil resistance, apparent
//!   inductance and flux linkage from sampled voltage and current,
//! * [`integral`]: the cyclic integral estimator used as a baseline, with its
//!   offline non-causal variant,
//! * [`observability`]: observability matrices, the closed-form window
//!   determinant, numeric rank and Gramian bounds,
//! * [`actuator`]: a hybrid-automaton plunger solenoid simulator used as
//!   ground truth.
//!
//! File formats, the experiment pipeline and the CLI live in the `relest`
//! companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod actuator;
pub mod error;
pub mod filter;
pub mod integral;
pub mod observability;

pub use error::{Error, Result};
pub use filter::{DerivedEstimates, EstimateFrame, FilterConfig, FilterState, Quality, Semera};
pub use integral::{offline_estimate, IntegralEstimator, IntegralState};
