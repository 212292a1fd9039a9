//! Simulate one built-in loop and print its step-response metrics.

use tankloop::{builtin, run_closed_loop, step_metrics};

fn main() -> Result<(), tankloop::Error> {
    let scenario = builtin("level-pi").expect("built-in scenario");
    let trace = run_closed_loop(&scenario)?;

    println!("samples: {} at ts = {} s", trace.len(), trace.ts);
    println!("  t        setpoint   pv");
    for k in [0, 50, 100, 300, 600, 1199] {
        println!("  {:7.1}  {:7.2}  {:7.2}", trace.t[k], trace.setpoint[k], trace.pv[k]);
    }

    // Analyze the window that starts at the setpoint step.
    let (t_step, w_before, w_after) = scenario.setpoint.first_change().expect("fixture has a step");
    let m = step_metrics(&trace, (t_step, scenario.duration), (w_before, w_after))?;
    println!();
    println!("step {w_before}% -> {w_after}% at t = {t_step} s");
    println!("  overshoot     {:.2} %", m.overshoot);
    println!("  rise time     {:.2} s", m.rise_time.unwrap());
    println!("  settling time {:.2} s", m.settling_time.unwrap());
    println!("  itae          {:.1}", m.itae);
    Ok(())
}
