//! Algorithms for Shapley–Scarf housing markets with partially ordered
//! preferences: a linear-time Top Trading Cycles variant, core and strict-core
//! verification, core repair after an agent's house gains value (`improve`),
//! the analogous repair procedure for Stable Roommates (`roommates`),
//! brute-force oracles for small markets (`oracle`), and hardness gadget
//! generators (`reductions`).
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI live
//! in the companion `coremarket` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod bits;

pub mod gen;
pub mod improve;
pub mod market;
pub mod oracle;
pub mod reductions;
pub mod roommates;
pub mod ttc;

pub use market::{
    check_core, check_strict_core, AgentId, Allocation, CoreVerdict, EnvyGraph, HousingMarket,
    MarketError, PosetSpec, PreferencePoset, StrictCoreVerdict,
};
pub use ttc::{maxcore_trivial_approx, ttc};
