//! Routing for in-plant material handling: a pickup-and-delivery model with
//! time windows, solved exactly under nominal travel times or under a
//! sampled set of stochastic travel-time scenarios with a reliability
//! budget, and evaluated by out-of-sample Monte Carlo simulation.
//!
//! The pipeline is
//! [`instance::load_instance`] → [`instance::build_network`] →
//! [`scenarios::generate_scenarios`] → [`solver`] → [`evaluator`].

// Validation uses `!(x > 0.0)`-style tests on purpose: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmarks;
pub mod evaluator;
pub mod formulation;
pub mod instance;
pub mod scenarios;
pub mod solver;

/// Absolute tolerance for comparing times and distances.
pub const TIME_EPS: f64 = 1e-9;
