//! Optimizer-driven retuning of a deliberately detuned level controller.
//!
//! Starts from the stock level PI fixture with its gain cut to a quarter,
//! then lets the simplex search walk kp and ti back toward a good
//! time-weighted-error score. Progress is printed per evaluation so the
//! descent is visible.

use tankloop::{autotune_observed, builtin, VaryMask};

fn main() -> Result<(), tankloop::Error> {
    let mut scenario = builtin("level-pi").unwrap();
    scenario.controller.kp /= 4.0;
    println!(
        "start: kp = {:.3}, ti = {:.3}",
        scenario.controller.kp,
        scenario.controller.ti.unwrap()
    );

    let result = autotune_observed(&scenario, &VaryMask::pi(), 60, |i, cfg, obj| {
        println!(
            "eval {i:>3}: kp = {:>9.3}, ti = {:>8.3} -> itae {obj:.2}",
            cfg.kp,
            cfg.ti.unwrap()
        );
    })?;

    println!();
    println!(
        "done in {} evaluations (converged: {})",
        result.evaluations, result.converged
    );
    println!(
        "objective {:.2} -> {:.2} ({:.0}% of start)",
        result.objective_initial,
        result.objective_final,
        100.0 * result.objective_final / result.objective_initial
    );
    println!(
        "tuned: kp = {:.3}, ti = {:.3}",
        result.config.kp,
        result.config.ti.unwrap()
    );
    Ok(())
}
