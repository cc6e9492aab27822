//! Closed-form solutions and the identities they satisfy.

pub mod breather;
pub mod identity;
pub mod soliton;

pub use breather::*;
pub use identity::*;
pub use soliton::*;
