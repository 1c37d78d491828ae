//! Worst-case bounded stealthy false-data-injection attacks on discrete-time
//! LTI feedback loops, computed by linear programming, together with an
//! audit for unbounded stealthy attack channels and an alternating
//! attack/controller synthesis loop.

pub mod attack;
pub mod cli;
pub mod error;
pub mod horizon;
pub mod lp;
pub mod lti;
pub mod report;
pub mod resilience;
pub mod simkit;
pub mod vulnerability;

pub use error::{Error, Result};
