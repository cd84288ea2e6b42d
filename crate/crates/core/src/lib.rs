//! Ordinal mechanism design toolkit.
//!
//! Agents report strict rankings over outcomes (or items). This crate measures
//! the quality of an outcome by its *rank approximation* factor, checks
//! randomized mechanisms for lex-truthfulness and related truthfulness
//! notions, and implements allocation algorithms for matching, matroid,
//! scheduling and general ordinal markets. All probabilities, factors and
//! linear programs use exact rational arithmetic so verifiers can compare
//! lotteries for equality.
//!
//! Indices are 0-based everywhere (agents, items, outcomes, machines), while
//! ranks/positions are 1-based: position 1 is an agent's top choice.

pub mod error;
pub mod general;
pub mod io;
pub mod lp;
pub mod matching;
pub mod matroid;
pub mod prefs;
pub mod rational;
pub mod sched;
pub mod verify;

pub use error::{Error, Result};
pub use prefs::{
    Assignment, Factor, IndiffProfile, Lottery, RankHistogram, Ranking, ScoringVector,
    StrictProfile,
};
pub use rational::Rational;
