#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod calibrate;
pub mod error;
pub mod graph;
pub mod io;
pub mod markov;
pub mod matrix;
pub mod nullspace;
pub mod solve;
pub mod walk;
pub mod whatif;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/markov.md")]
    mod markov {}
    #[doc = include_str!("../../../book/src/nullspace.md")]
    mod nullspace {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/whatif.md")]
    mod whatif {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
