//! The GOE largest-eigenvalue law F₁ through the Hastings–McLeod Painlevé II transcendent.

pub mod airy;
mod ode;
mod table;

pub use table::{
    build_table, default_table, TW1Table, DEFAULT_S_MAX, DEFAULT_S_MIN, DEFAULT_STEP,
};
