//! Return-time, hitting-time and sojourn-time statistics of a fixed word in
//! stationary sources.
//!
//! * [`pattern`] computes the self-overlap (period) structure of a word.
//! * [`source`] defines i.i.d., Markov and renewal-type sources.
//! * [`exact`] computes exact laws through the product of a matching
//!   automaton with the source memory, plus an enumeration oracle.
//! * [`theory`] evaluates the mixture/geometric approximations and their
//!   error envelopes, and checks them against exact laws.
//! * [`montecarlo`] estimates the same laws from simulated trajectories.

pub mod alphabet;
pub mod automaton;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod pattern;
pub mod source;
pub mod theory;

pub use alphabet::{Alphabet, Symbol};
pub use automaton::MatchingAutomaton;
pub use error::{Error, Result};
pub use pattern::{OverlapStructure, Pattern};
pub use source::{IidSource, MarkovSource, MixingProfile, RenewalSource, SourceModel, SourceSpec};
