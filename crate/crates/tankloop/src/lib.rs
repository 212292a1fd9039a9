//! Closed-loop simulation and tuning toolkit for liquid level and flow
//! control loops.
//!
//! The crate models three bench-scale process loops (a coupled two-tank
//! level loop, a pump-driven flow loop, and a valve-driven flow loop),
//! closes them with a two-degree-of-freedom PI/PID controller, and layers
//! analysis on top: step-response metrics, PI-vs-PID comparison reports,
//! relay-feedback identification, Ziegler-Nichols rules, and a
//! simplex-search autotuner.
//!
//! The best way in is the `examples/` directory; each example is a
//! self-contained run of one capability:
//!
//! | example              | what it shows                                         |
//! |----------------------|-------------------------------------------------------|
//! | `run_fixture`        | simulate a builtin loop, print step metrics           |
//! | `compare_level`      | PI vs PID on the level loop, metric-by-metric verdict |
//! | `noise_sensitivity`  | control-effort cost of derivative action under noise  |
//! | `relay_ziegler`      | relay experiment + Ziegler-Nichols seed tuning        |
//! | `autotune_level`     | simplex autotune from a detuned start                 |
//! | `custom_scenario`    | parse a scenario file from text and run it            |
//! | `plot_svg`           | render a two-panel SVG of a comparison run            |
//!
//! Run one with `cargo run --example run_fixture`.
//!
//! The same capabilities are reachable from the thin `tankloop` binary
//! (`list`, `run`, `compare`, `tune` subcommands) for scripted use.
//!
//! Everything is deterministic: fixed-step RK4 plant integration, an
//! explicit seeded noise stream, and pure step functions throughout. Two
//! runs of the same scenario are bit-identical.

pub mod cli;
pub mod controller;
pub mod csv;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod plant;
pub mod plot;
pub mod report;
pub mod scenario;
pub mod simloop;
pub mod tuning;

pub use controller::{AntiWindup, PidConfig, PidState};
pub use csv::{emit_csv, parse_csv};
pub use error::Error;
pub use plant::{FlowKind, FlowPlantParams, FlowPlantState, PlantModel, PlantState, TankParams, TankState, ValveChar};
pub use fixtures::{builtin, builtin_scenarios, FIXTURE_NAMES};
pub use metrics::{compare_metrics, error_integrals, step_metrics, MetricComparison, MetricRow, StepMetrics, Winner};
pub use plot::emit_plot;
pub use report::ComparisonReport;
pub use scenario::{parse_scenario, render_scenario};
pub use simloop::{run_closed_loop, run_pair, LoopScenario, Schedule, SimTrace};
pub use tuning::{
    autotune, autotune_observed, relay_identify, relay_identify_integrating, ziegler_nichols,
    RelayExperiment, TuneResult, UltimateParams, VaryMask, ZnRule,
};
