pub mod cli;
pub mod clustering;
pub mod descent;
pub mod error;
pub mod extraction;
pub mod fitting;
pub mod generating;
pub mod linalg;
pub mod loss;
pub mod monomial;
pub mod render;

pub use error::{Error, Result};
