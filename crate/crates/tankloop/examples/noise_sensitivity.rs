//! What derivative action costs under measurement noise.
//!
//! Runs the level PI and PID fixtures with 1% measurement noise over ten
//! seeds, sharing the noise stream within each pair, and compares the
//! variance of the controller-output increments. The derivative term
//! amplifies sample-to-sample noise, so the PID side pays a large
//! control-effort penalty for its faster response.

use tankloop::{builtin, run_pair, step_metrics};

fn main() -> Result<(), tankloop::Error> {
    let mut pid_noisier = 0;
    println!("seed   var(du) PI   var(du) PID   ratio");
    for seed in 0..10 {
        let mut pi = builtin("level-pi").unwrap();
        let mut pid = builtin("level-pid").unwrap();
        for s in [&mut pi, &mut pid] {
            s.noise_std = 1.0;
            s.seed = seed;
        }
        let (pi_trace, pid_trace) = run_pair(&pi, &pid)?;
        let measure = |scenario: &tankloop::LoopScenario, trace| {
            let (t, w0, w1) = scenario.setpoint.first_change().unwrap();
            step_metrics(trace, (t, scenario.duration), (w0, w1)).map(|m| m.control_variance)
        };
        let v_pi = measure(&pi, &pi_trace)?;
        let v_pid = measure(&pid, &pid_trace)?;
        if v_pid > v_pi {
            pid_noisier += 1;
        }
        println!("{seed:>4}   {v_pi:>11.4}   {v_pid:>11.4}   {:>5.1}x", v_pid / v_pi);
    }
    println!();
    println!("PID control effort noisier in {pid_noisier} of 10 seeds");
    Ok(())
}
