//! Simulator and analysis toolkit for ground-state relaxation of ⁸⁷Rb vapor
//! on the D1 line: 16-level density-matrix dynamics with optical pumping,
//! magnetic fields, spin-exchange collisions and uniform relaxation; the three
//! pump/probe protocols; and decay-rate fitting.

pub mod atom;
pub mod config;
pub mod consts;
pub mod csvio;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod protocol;
pub mod spin_exchange;
pub mod trace;
pub mod validation;
pub mod vapor;

pub use error::{Error, Result};
