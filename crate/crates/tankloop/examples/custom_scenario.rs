//! Authoring a scenario as text, running it, and writing it back out.
//!
//! The same format the command-line tool loads from disk can be built
//! in memory: sections for the plant, the controller, the setpoint and
//! disturbance profile, and the run window. After the run the parsed
//! scenario is rendered back to text to show the canonical form with
//! every default filled in.

use tankloop::{parse_scenario, render_scenario, run_closed_loop};

const SCENARIO: &str = "\
# valve loop with a mid-run supply dip
[plant]
kind = valve-flow
rangeability = 30

[controller]
kp = 6.647
ti = 7.981
td = 1.869
beta = 0.971

[profile]
setpoint = 0:30, 5:70
disturbance = 0:0, 40:-0.15, 55:0

[run]
duration = 90
";

fn main() -> Result<(), tankloop::Error> {
    let scenario = parse_scenario(SCENARIO)?;
    let trace = run_closed_loop(&scenario)?;

    println!("ran {} samples over {} s", trace.len(), scenario.duration);
    for &i in &[0, 49, 99, 399, 550, 899] {
        println!(
            "t = {:>5.1}  setpoint = {:>5.1}  pv = {:>7.3}  u = {:>7.3}",
            trace.t[i], trace.setpoint[i], trace.pv[i], trace.u[i]
        );
    }

    println!();
    println!("canonical rendering:");
    print!("{}", render_scenario(&scenario)?);
    Ok(())
}
