//! Solver core for the electric vehicle scheduling problem with capacitated
//! charging stations and partial charging.
//!
//! The crate is `no_std` (it needs `alloc`). Wall-clock time and parallel
//! pricing are injected through the [`clock::Clock`] and
//! [`pricing::PricingBackend`] traits so the same code runs under a test
//! harness, a single thread, or a thread pool.
//!
//! Pipeline overview:
//!
//! 1. [`instance::Instance`] holds validated problem data.
//! 2. [`discretization`] defines the SoC grid, the time blocks and the two
//!    rounding schemes.
//! 3. [`network::build_network`] expands one time x SoC DAG per
//!    (vehicle type, depot) pair.
//! 4. [`pricing::price`] runs a shortest path sweep under reduced costs.
//! 5. [`master::Rmp`] is the restricted master LP (set covering plus charger
//!    capacity rows) on top of the embedded [`lp`] simplex.
//! 6. [`colgen::run_colgen`] and [`heuristics`] produce integral schedules,
//!    [`bounds`] produces discretization-independent lower bounds and hosts a
//!    brute-force oracle, and [`schedule`] validates results with continuous SoC.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bounds;
pub mod clock;
pub mod colgen;
pub mod discretization;
pub mod duty;
pub mod error;
pub mod heuristics;
pub mod instance;
pub mod lp;
pub mod master;
pub mod network;
pub mod pricing;
pub mod schedule;
#[cfg(test)]
pub(crate) mod testkit;

pub use error::{Error, Result};

/// Money is carried in euro cents.
pub type Cents = f64;

/// Time is carried in integer minutes.
pub type Minutes = i32;
