//! Shared fixtures for the benchmarks.

use irfkit::{simulate, DgpSpec, SimulatedData};

/// Extended process with a persistent shock, `gamma = 0.2`.
pub fn extended(length: usize) -> SimulatedData {
    simulate(&DgpSpec::extended(0.9, 1.5, 1.0, 0.2, length, 7)).expect("valid spec")
}
