//! Shared fixtures for the criterion benches.

use spinsep::SpinSystem;

/// Uniform-coupling system with the reference parameters `ω = 10`, `a = 1`.
pub fn reference_system(n: usize) -> SpinSystem {
    SpinSystem::uniform(n, 10.0, 1.0, true).expect("valid spin count")
}
