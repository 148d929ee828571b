//! Frequency-constrained microgrid scheduling.
//!
//! The crate covers the full pipeline for scheduling an islandable microgrid
//! under a dynamic frequency-nadir constraint:
//!
//! * [`pspb`] — reduced positive-sequence power-balance simulator for
//!   islanding events (aggregated diesel swing/governor dynamics plus
//!   DFIG wind turbines with inertia emulation).
//! * [`data`] — forecast/network ingestion, scenario enumeration and
//!   labeled dataset generation.
//! * [`nn`] — ReLU network surrogate mapping operating condition to
//!   frequency nadir: training, evaluation, activation bounds.
//! * [`milp`] — self-contained LP / branch-and-bound MILP solver with a
//!   declarative model builder.
//! * [`encode`] — exact big-M encoding of a trained ReLU network as mixed
//!   integer linear constraints.
//! * [`sched`] — the 24-period scheduling problem (unit commitment,
//!   linearized DistFlow, reserve and inertia-emulation logic, per-period
//!   nadir constraints).
//! * [`verify`] — closed-loop validation: re-simulation of scheduled
//!   islanding, staged underfrequency load shedding, power-replay studies.
//! * [`config`] / [`pipeline`] — TOML run configuration and the artifact
//!   pipeline behind the `nadir` command line tool.
//!
//! Every major capability has a runnable demo under `examples/`.

pub mod config;
pub mod data;
pub mod encode;
pub mod milp;
pub mod nn;
pub mod pipeline;
pub mod pspb;
pub mod report;
pub mod sched;
pub mod verify;

pub use config::RunConfig;
pub use data::{Dataset, Forecast, NetworkModel, Scenario};
pub use milp::{MilpModel, MilpSolution};
pub use nn::{ActivationBounds, NeuralNet};
pub use pspb::{DsgAggregate, DsgUnit, Trajectory, WtgParams};
pub use sched::{Case, ScheduleProblem, ScheduleResult};
