//! Test support: an independent brute-force oracle and random scenario
//! generators. Not part of the public API surface.

pub mod gen;
pub mod oracle;
