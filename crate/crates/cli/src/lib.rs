//! Scenario files, reference scenarios, random environments, benchmarks,
//! sweeps and trajectory export for `flatfw`.

pub mod bench;
pub mod env;
pub mod export;
pub mod gradcheck;
pub mod metrics;
pub mod outcome;
pub mod scenario_file;
pub mod scenarios;
pub mod sweep;
