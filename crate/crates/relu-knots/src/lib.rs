//! File formats, checks and the command line around `relu-knots-core`.

pub mod cli;
pub mod export;
pub mod format;
pub mod verify;
