pub mod bhh;
pub mod error;
pub mod gaplab;
pub mod hashing;
pub mod schatten;
pub mod sketches;
pub mod spectra;

pub use error::{Error, Result};
