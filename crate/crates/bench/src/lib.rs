//! Fixtures shared by the criterion benches.

use cnni::{Dataset, Preset};

/// Seed used by every bench fixture.
pub const SEED: u64 = 1;

/// δ and grid cell length for the 2-D blob presets.
pub const DELTA: f64 = 18.0;
pub const CELL: f64 = 20.0;

/// A blob preset at `n` points.
pub fn blobs(preset: Preset, n: usize) -> Dataset {
    preset
        .generate(n, SEED)
        .expect("blob presets accept any positive n")
}

/// The sizes benched for neighbor construction.
pub const SIZES: [usize; 3] = [1000, 4000, 12000];
