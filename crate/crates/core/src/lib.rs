//! Kuramoto oscillators on graphs that switch as continuous-time Markov
//! chains.
//!
//! Two switching mechanisms are modelled on a fixed weighted skeleton graph:
//! oscillators riding independent random walkers (coupled when their
//! walkers are adjacent), and one oscillator per vertex with every edge
//! flickering on and off independently. The crate simulates both exactly,
//! integrates the phase equations along the sampled graph paths, and ships
//! the analysis needed to check their synchronization behaviour: energy and
//! Hessian, uniform spectral gaps, equilibrium enumeration, averaging and
//! synchronization-probability experiments.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod formats;
pub mod graph;
pub mod integrator;
pub mod jump;
pub mod phase;
pub mod selftest;

pub use error::{Error, Result};
