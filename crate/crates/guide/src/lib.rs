//! The chapters of the guide in `book/`, compiled as documentation so that
//! `cargo test --doc` runs every snippet against the current crate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/blocks.md")]
pub mod blocks {}
#[doc = include_str!("../../../book/src/schedule.md")]
pub mod schedule {}
#[doc = include_str!("../../../book/src/symtrinmf.md")]
pub mod symtrinmf {}
#[doc = include_str!("../../../book/src/diagnostics.md")]
pub mod diagnostics {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
