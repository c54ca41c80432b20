//! Delayed follow-the-regularized-leader with corrections.
//!
//! Learners for prediction with expert advice and for bandits when feedback
//! arrives after arm-dependent delays, plus an episode simulator that
//! certifies regret against closed-form upper bounds.

pub mod delays;
pub mod environments;
pub mod error;
pub mod harness;
pub mod learners;
pub mod oracle;
pub mod regularizers;
pub mod solver;

pub use error::{Error, Result};
