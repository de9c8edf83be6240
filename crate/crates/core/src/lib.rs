//! Agent-based simulation of airborne exposure among customers rushing
//! through a gridded retail store.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`] – store layout, layout files, neighborhood geometry
//! * [`pathfind`] – A* routing with a BFS oracle
//! * [`agents`] – the customer state machine
//! * [`arrivals`] – the deterministic arrival stream
//! * [`exposure`] – exposure accrual and the infection threshold
//! * [`engine`] – the tick loop of a single run
//! * [`sweep`] – factorial parameter sweeps over seeds
//! * [`report`] – CSV, manifests and text/PPM renderings
//! * [`config`] – flat `key = value` configuration files
//! * [`cli`] – the `rushsim` command line

pub mod agents;
pub mod arrivals;
pub mod cli;
pub mod config;
pub mod engine;
pub mod exposure;
pub mod grid;
pub mod pathfind;
pub mod report;
pub mod rng;
pub mod sweep;

pub use engine::{run, run_batch, Engine, EngineError, RunResult, SimulationConfig};
pub use exposure::ExposureParams;
pub use grid::{CellCoord, StoreLayout};
