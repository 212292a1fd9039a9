//! Relay identification followed by Ziegler-Nichols tuning.
//!
//! Drives the coupled-tank plant with a relay around its 40% operating
//! point, extracts the ultimate gain and period from the sustained
//! oscillation, derives PI and PID settings from them, and closes the
//! loop with the PID result to show the step response it produces.

use tankloop::{
    relay_identify, run_closed_loop, step_metrics, ziegler_nichols, LoopScenario, PlantModel,
    RelayExperiment, Schedule, TankParams, ZnRule,
};

fn main() -> Result<(), tankloop::Error> {
    let plant = PlantModel::Tank(TankParams::default());
    let (init, _) = plant.equilibrium_from_pv(40.0)?;

    let mut experiment = RelayExperiment::new(10.0, 0.5);
    experiment.duration = 600.0;
    let ultimate = relay_identify(&plant, &init, &experiment)?;
    println!(
        "relay result: ku = {:.2}, tu = {:.2} s ({} cycles, amplitude {:.3}%)",
        ultimate.ku, ultimate.tu, ultimate.cycles, ultimate.oscillation_amplitude
    );

    let ts = 0.1;
    let pi = ziegler_nichols(&ultimate, ZnRule::Pi, ts);
    let pid = ziegler_nichols(&ultimate, ZnRule::Pid, ts);
    let show = |label: &str, c: &tankloop::PidConfig| {
        println!(
            "{label}: kp = {:.3}, ti = {:.3}, td = {:.3}",
            c.kp,
            c.ti.unwrap(),
            c.td
        );
    };
    show("ZN PI ", &pi);
    show("ZN PID", &pid);

    let (start, _) = plant.equilibrium_from_pv(40.0)?;
    let scenario = LoopScenario {
        plant,
        init: start,
        controller: pid,
        setpoint: Schedule::step(40.0, 10.0, 60.0)?,
        disturbance: Schedule::constant(0.0),
        noise_std: 0.0,
        duration: 120.0,
        seed: 0,
        substeps_per_sample: 10,
    };
    let trace = run_closed_loop(&scenario)?;
    let m = step_metrics(&trace, (10.0, scenario.duration), (40.0, 60.0))?;
    println!(
        "closed loop with ZN PID: overshoot {:.1}%, rise {:.1} s, settled = {}",
        m.overshoot,
        m.rise_time.unwrap(),
        m.settled
    );
    Ok(())
}
