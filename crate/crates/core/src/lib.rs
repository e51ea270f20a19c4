//! Isometric dilations of commuting contraction tuples, their transfer
//! function symbols, and von Neumann type inequalities, computed for
//! concrete matrices.

pub mod colligation;
pub mod dilation;
pub mod error;
pub mod hardy;
pub mod io;
pub mod linalg;
pub mod operator_core;
pub mod par;
pub mod generators;
pub mod poly;
pub mod vn;

pub use error::{Error, Result};
pub use operator_core::{OperatorTuple, ToleranceConfig};
pub use par::Execution;
