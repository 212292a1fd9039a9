//! PI vs PID on the coupled-tank level loop: paired runs, one table,
//! metric-by-metric winners.

use tankloop::{builtin, run_pair, step_metrics, ComparisonReport};

fn main() -> Result<(), tankloop::Error> {
    let pi = builtin("level-pi").unwrap();
    let pid = builtin("level-pid").unwrap();
    let (pi_trace, pid_trace) = run_pair(&pi, &pid)?;

    let window_of = |s: &tankloop::LoopScenario| {
        let (t, w0, w1) = s.setpoint.first_change().unwrap();
        ((t, s.duration), (w0, w1))
    };
    let (win, step) = window_of(&pi);
    let m_pi = step_metrics(&pi_trace, win, step)?;
    let (win, step) = window_of(&pid);
    let m_pid = step_metrics(&pid_trace, win, step)?;

    print!("{}", ComparisonReport::new("level-pi", "level-pid", &m_pi, &m_pid).render());
    Ok(())
}
