pub mod affine;
pub mod capacity;
pub mod channels;
pub mod coding;
pub mod error;
pub mod extendibility;
pub mod io;
pub mod labels;
pub mod qlinalg;
pub mod symmetry;

pub use error::{Error, Result};
