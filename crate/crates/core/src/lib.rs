//! Compilation of quantum circuits onto modular systems whose chips are joined
//! by chip-to-chip couplers.

pub mod circuit;
pub mod cost;
pub mod mapping;
pub mod partition;
pub mod routing;
pub mod search;
pub mod system;
