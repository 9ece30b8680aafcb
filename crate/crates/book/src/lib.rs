//! Every chapter of the guide in `book/src` is a module here, so `cargo test`
//! compiles and runs its code listings.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/corpus.md")]
pub mod corpus {}
#[doc = include_str!("../../../book/src/ranking.md")]
pub mod ranking {}
#[doc = include_str!("../../../book/src/expansion.md")]
pub mod expansion {}
#[doc = include_str!("../../../book/src/rerank.md")]
pub mod rerank {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
