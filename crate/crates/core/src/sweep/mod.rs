//! Configuration-driven parameter sweeps written as CSV tables.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{parse_config, Axis, AxisKind, AxisScale, Param, ParseError, SolverKind, SweepConfig};
pub use run::{run_sweep, Cell, SweepResult};
