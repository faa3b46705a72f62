//! Command-line plumbing shared by the `jmpf` binary and integration tests.

pub mod model_file;
pub mod registry;
