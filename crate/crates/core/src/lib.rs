pub mod chars;
pub mod clean;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod geo_filter;
pub mod model;
pub mod normalize;
pub mod parallel;
pub mod tokenizer;

pub use error::{Error, Result};
