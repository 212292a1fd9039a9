//! Built-in benchmark loops: six named scenarios pairing each plant with
//! a reference PI and PID parameter set from the coupled-tank rig this
//! toolkit models. The numeric values are pinned; tests assert them
//! field-for-field so drift fails the build.

use crate::controller::PidConfig;
use crate::plant::{FlowPlantParams, PlantModel, TankParams};
use crate::scenario::default_disturbance;
use crate::simloop::{LoopScenario, Schedule};

/// Fixture names in listing order.
pub const FIXTURE_NAMES: [&str; 6] = ["level-pi", "level-pid", "pump-pi", "pump-pid", "valve-pi", "valve-pid"];

/// Standard experiment wrapped around each fixture controller: start at
/// rest at 20%, step the setpoint to 60% at t = 1 s, apply the default
/// disturbance pulse, run 120 s noise-free with seed 0.
fn standard_run(plant: PlantModel, controller: PidConfig) -> LoopScenario {
    let (init, _) = plant.equilibrium_from_pv(20.0).expect("fixture rest state");
    let disturbance = default_disturbance(&plant);
    LoopScenario {
        plant,
        init,
        controller,
        setpoint: Schedule::new(vec![(0.0, 20.0), (1.0, 60.0)]).unwrap(),
        disturbance,
        noise_std: 0.0,
        duration: 120.0,
        seed: 0,
        substeps_per_sample: 10,
    }
}

/// The six built-in loop setups, in [`FIXTURE_NAMES`] order.
pub fn builtin_scenarios() -> Vec<(&'static str, LoopScenario)> {
    let tank = || PlantModel::Tank(TankParams::default());
    let pump = || PlantModel::Flow(FlowPlantParams::pump());
    let valve = || PlantModel::Flow(FlowPlantParams::valve());
    vec![
        ("level-pi", standard_run(tank(), PidConfig::pi(124.468, 7.220, 0.8, 0.0999998))),
        ("level-pid", standard_run(tank(), PidConfig::pid(516.209, 1.047, 0.2661543, 0.1, 0.2514394, 0.0, 0.099998))),
        ("pump-pi", standard_run(pump(), PidConfig::pi(6.799, 3.174, 0.8, 0.0999998))),
        ("pump-pid", standard_run(pump(), PidConfig::pid(1.049, 3.688, 4.871, 0.1, 1.0, 0.0, 0.1000025))),
        ("valve-pi", standard_run(valve(), PidConfig::pi(15.326, 2.489, 0.8, 0.0999978))),
        ("valve-pid", standard_run(valve(), PidConfig::pid(6.647, 7.981, 1.869, 0.1, 0.971, 0.0, 0.0999998))),
    ]
}

/// Looks up one built-in scenario by name.
pub fn builtin(name: &str) -> Option<LoopScenario> {
    builtin_scenarios().into_iter().find(|(n, _)| *n == name).map(|(_, s)| s)
}
