//! The listings of the guide in `book/`, compiled as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/networks.md")]
pub mod networks {}
#[doc = include_str!("../../../book/src/loading.md")]
pub mod loading {}
#[doc = include_str!("../../../book/src/costs.md")]
pub mod costs {}
#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}
#[doc = include_str!("../../../book/src/oracle.md")]
pub mod oracle {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
