//! Fixtures shared by the criterion benchmarks.

use flatfw_cli::scenarios::bench_group;
use flatfw_core::solver::Problem;
use flatfw_core::{SegmentCount, SolverConfig};

/// A 15-obstacle benchmark problem with `segments` pieces and its initial
/// decision vector.
pub fn problem(segments: usize, seed: u64) -> Problem {
    let config = SolverConfig { segments: SegmentCount::Fixed(segments), ..Default::default() };
    Problem::new(&bench_group(1, seed), &config).expect("benchmark scenario is valid")
}
