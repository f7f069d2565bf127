pub mod defgen;
pub mod embeddings;
pub mod error;
pub mod lexicon;
pub mod matcher;
pub mod metrics;
pub mod neural;
pub mod synth;
pub mod textprep;

pub use error::{Error, Result};
