//! Pseudospectral simulator and verification harness for the periodic
//! two-component Dullin-Gottwald-Holm system
//!
//! ```text
//! m_t - A u_x + u m_x + 2 u_x m + gamma u_xxx + rho rho_x = 0,   m = u - u_xx
//! rho_t + (u rho)_x = 0
//! ```
//!
//! on the unit circle. See the guide in `book/` for a walk-through.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod timestepper;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests so that the book cannot drift from
// the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/timestepping.md")]
    mod timestepping {}
    #[doc = include_str!("../../../book/src/characteristics.md")]
    mod characteristics {}
    #[doc = include_str!("../../../book/src/criteria.md")]
    mod criteria {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
