//! Runs the guide's listings as doc-tests.
//!
//! mdbook cannot build listings that depend on an external crate, so each
//! chapter is included here as module docs and checked by `cargo test --doc`.
//! One module per chapter keeps failures traceable to their source file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/contention.md")]
pub mod contention {}
#[doc = include_str!("../../../book/src/gamma.md")]
pub mod gamma {}
#[doc = include_str!("../../../book/src/detection.md")]
pub mod detection {}
#[doc = include_str!("../../../book/src/success.md")]
pub mod success {}
#[doc = include_str!("../../../book/src/optimizer.md")]
pub mod optimizer {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
