//! LP decoding of LDPC codes over the binary symmetric channel, with exact
//! pseudo-codeword analysis and the instanton search built on top of it.
//!
//! Positions are 0-based in this API; serialized supports and all user
//! facing text use 1-based positions.

pub mod analysis;
pub mod code;
pub mod decoder;
pub mod experiment;
pub mod isa;
pub mod lp;
pub mod par;
pub mod rng;
