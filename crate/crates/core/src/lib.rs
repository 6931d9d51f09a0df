pub mod canonical;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod highenergy;
pub mod local;
pub mod matching;
pub mod model;
pub mod sim;
pub mod singular;

pub use error::{Error, Result};
pub use model::System;
