//! Step-response metrics and error integrals computed from traces, plus
//! the per-metric PI-vs-PID ordering used by comparison reports.
//!
//! All response metrics are computed on `pv_clean` (the noise-free PV) so
//! they do not depend on the noise seed; `control_variance` is computed on
//! `u`, where noise sensitivity actually shows up.

use crate::error::{Error, Result};
use crate::simloop::SimTrace;

/// Step-response quality numbers for one trace window.
///
/// `rise_time` and `settling_time` are measured from the window start
/// (taken as the step onset). Either can be absent when the response never
/// reaches the corresponding threshold inside the window; `settled` is
/// true exactly when `settling_time` is present.
#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    /// Peak excursion beyond the final setpoint, as % of step magnitude.
    pub overshoot: f64,
    /// 10% -> 90% crossing interval (s).
    pub rise_time: Option<f64>,
    /// Last entry into the +/-2% band around the final setpoint (s).
    pub settling_time: Option<f64>,
    /// Mean |w - pv_clean| over the final 10% of the window (% of span).
    pub steady_state_error: f64,
    pub iae: f64,
    pub ise: f64,
    pub itae: f64,
    /// Variance of first differences of u: the noise-sensitivity proxy.
    pub control_variance: f64,
    pub settled: bool,
}

/// Fraction of the final setpoint that defines the settling band.
pub const SETTLING_BAND: f64 = 0.02;

fn window_indices(trace: &SimTrace, window: (f64, f64)) -> Result<(usize, usize)> {
    let (t0, t1) = window;
    if !(t1 > t0) {
        return Err(Error::Argument(format!("window must satisfy t_start < t_end, got ({t0}, {t1})")));
    }
    let first = trace.t.partition_point(|&t| t < t0);
    let last = trace.t.partition_point(|&t| t <= t1);
    if first >= last {
        return Err(Error::Argument(format!("window ({t0}, {t1}) contains no samples")));
    }
    Ok((first, last))
}

/// Trapezoidal (iae, ise, itae) of the clean error over the window, with
/// the itae time weight measured from the window start.
pub fn error_integrals(trace: &SimTrace, window: (f64, f64)) -> Result<(f64, f64, f64)> {
    let (i0, i1) = window_indices(trace, window)?;
    let e: Vec<f64> = (i0..i1).map(|k| trace.setpoint[k] - trace.pv_clean[k]).collect();
    let tau: Vec<f64> = (i0..i1).map(|k| trace.t[k] - window.0).collect();
    let mut iae = 0.0;
    let mut ise = 0.0;
    let mut itae = 0.0;
    for k in 1..e.len() {
        let h = (tau[k] - tau[k - 1]) / 2.0;
        iae += h * (e[k - 1].abs() + e[k].abs());
        ise += h * (e[k - 1] * e[k - 1] + e[k] * e[k]);
        itae += h * (tau[k - 1] * e[k - 1].abs() + tau[k] * e[k].abs());
    }
    Ok((iae, ise, itae))
}

/// Computes [`StepMetrics`] for a setpoint step from `w_before` to
/// `w_after` whose onset coincides with the window start.
pub fn step_metrics(trace: &SimTrace, window: (f64, f64), step: (f64, f64)) -> Result<StepMetrics> {
    let (w_before, w_after) = step;
    if w_after == w_before {
        return Err(Error::Argument(format!("degenerate step: w_before = w_after = {w_before}")));
    }
    if !w_before.is_finite() || !w_after.is_finite() {
        return Err(Error::Argument("step endpoints must be finite".into()));
    }
    let (i0, i1) = window_indices(trace, window)?;
    let magnitude = w_after - w_before;
    let upward = magnitude > 0.0;

    // Overshoot: worst excursion past the final setpoint, relative to the
    // step magnitude; mirrored for downward steps, floored at zero.
    let overshoot = {
        let extreme = trace.pv_clean[i0..i1]
            .iter()
            .fold(if upward { f64::MIN } else { f64::MAX }, |a, &b| if upward { a.max(b) } else { a.min(b) });
        let past = if upward { extreme - w_after } else { w_after - extreme };
        (past / magnitude.abs() * 100.0).max(0.0)
    };

    let rise_time = {
        let y10 = w_before + 0.1 * magnitude;
        let y90 = w_before + 0.9 * magnitude;
        let t10 = first_crossing(trace, i0, i1, y10, upward, window.0);
        let t90 = first_crossing(trace, i0, i1, y90, upward, window.0);
        match (t10, t90) {
            (Some(a), Some(b)) if b >= a => Some(b - a),
            _ => None,
        }
    };

    let settling_time = {
        let band = SETTLING_BAND * w_after.abs();
        let inside = |k: usize| (trace.pv_clean[k] - w_after).abs() <= band;
        let last_outside = (i0..i1).rev().find(|&k| !inside(k));
        match last_outside {
            None => Some(0.0),
            Some(k) if k + 1 < i1 => Some(trace.t[k + 1] - window.0),
            Some(_) => None,
        }
    };

    let steady_state_error = {
        let t_tail = window.0 + 0.9 * (window.1 - window.0);
        let tail: Vec<usize> = (i0..i1).filter(|&k| trace.t[k] >= t_tail).collect();
        let idx = if tail.is_empty() { vec![i1 - 1] } else { tail };
        idx.iter().map(|&k| (trace.setpoint[k] - trace.pv_clean[k]).abs()).sum::<f64>() / idx.len() as f64
    };

    let (iae, ise, itae) = error_integrals(trace, window)?;

    let control_variance = {
        let diffs: Vec<f64> = trace.u[i0..i1].windows(2).map(|p| p[1] - p[0]).collect();
        if diffs.is_empty() {
            0.0
        } else {
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64
        }
    };

    Ok(StepMetrics {
        overshoot,
        rise_time,
        settling_time,
        steady_state_error,
        iae,
        ise,
        itae,
        control_variance,
        settled: settling_time.is_some(),
    })
}

/// First time (relative to `origin`) the clean PV crosses `threshold` in
/// the step direction, linearly interpolated between samples.
fn first_crossing(trace: &SimTrace, i0: usize, i1: usize, threshold: f64, upward: bool, origin: f64) -> Option<f64> {
    let crossed = |v: f64| if upward { v >= threshold } else { v <= threshold };
    for k in i0..i1 {
        if crossed(trace.pv_clean[k]) {
            if k == i0 {
                return Some(trace.t[k] - origin);
            }
            let (a, b) = (trace.pv_clean[k - 1], trace.pv_clean[k]);
            let frac = if b == a { 0.0 } else { (threshold - a) / (b - a) };
            return Some(trace.t[k - 1] + frac * (trace.t[k] - trace.t[k - 1]) - origin);
        }
    }
    None
}

/// Which controller a comparison row favors. Lower is better for every
/// metric in [`StepMetrics`]; a defined value beats an undefined one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Pi,
    Pid,
    Tie,
}

/// One row of the PI-vs-PID table. `ratio` is PI value over PID value
/// (2.0 means the PID result is twice as good), absent when either side
/// is undefined or the PID value is zero while PI's is not.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: &'static str,
    pub pi: Option<f64>,
    pub pid: Option<f64>,
    pub winner: Winner,
    pub ratio: Option<f64>,
}

/// Per-metric ordering of a paired PI/PID run: one row for each metric of
/// [`StepMetrics`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricComparison {
    pub rows: Vec<MetricRow>,
}

impl MetricComparison {
    pub fn row(&self, metric: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Builds the ordering table from paired metrics.
pub fn compare_metrics(pi: &StepMetrics, pid: &StepMetrics) -> MetricComparison {
    let pairs: [(&'static str, Option<f64>, Option<f64>); 8] = [
        ("overshoot", Some(pi.overshoot), Some(pid.overshoot)),
        ("rise_time", pi.rise_time, pid.rise_time),
        ("settling_time", pi.settling_time, pid.settling_time),
        ("steady_state_error", Some(pi.steady_state_error), Some(pid.steady_state_error)),
        ("iae", Some(pi.iae), Some(pid.iae)),
        ("ise", Some(pi.ise), Some(pid.ise)),
        ("itae", Some(pi.itae), Some(pid.itae)),
        ("control_variance", Some(pi.control_variance), Some(pid.control_variance)),
    ];
    let rows = pairs
        .into_iter()
        .map(|(metric, pv, qv)| {
            let (winner, ratio) = match (pv, qv) {
                (Some(a), Some(b)) if a == b => (Winner::Tie, Some(1.0)),
                (Some(a), Some(b)) => {
                    let winner = if b < a { Winner::Pid } else { Winner::Pi };
                    let ratio = if b != 0.0 { Some(a / b) } else { None };
                    (winner, ratio)
                }
                (None, Some(_)) => (Winner::Pid, None),
                (Some(_), None) => (Winner::Pi, None),
                (None, None) => (Winner::Tie, None),
            };
            MetricRow { metric, pi: pv, pid: qv, winner, ratio }
        })
        .collect();
    MetricComparison { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Trace holding a synthetic pv_clean series at fixed ts with the
    /// setpoint column pinned to `w`.
    fn synthetic(ts: f64, w: f64, pv: Vec<f64>) -> SimTrace {
        let n = pv.len();
        SimTrace {
            ts,
            t: (0..n).map(|k| k as f64 * ts).collect(),
            setpoint: vec![w; n],
            pv: pv.clone(),
            pv_clean: pv,
            u: vec![0.0; n],
            disturbance: vec![0.0; n],
            clamped: vec![false; n],
        }
    }

    /// Closed-form unit step response of a second-order lag with damping
    /// ratio zeta and natural frequency 1 rad/s, scaled onto a step from
    /// w0 to w1.
    fn second_order(zeta: f64, w0: f64, w1: f64, ts: f64, dur: f64) -> SimTrace {
        let n = (dur / ts).ceil() as usize;
        let m = w1 - w0;
        let pv = (0..n)
            .map(|k| {
                let t = k as f64 * ts;
                let y = if zeta < 1.0 {
                    let wd = (1.0 - zeta * zeta).sqrt();
                    let phi = zeta.acos();
                    1.0 - (-zeta * t).exp() / wd * (wd * t + phi).sin()
                } else {
                    1.0 - (1.0 + t) * (-t).exp()
                };
                w0 + m * y
            })
            .collect();
        synthetic(ts, w1, pv)
    }

    #[test]
    fn underdamped_overshoot_matches_the_analytic_formula() {
        let zeta: f64 = 0.5;
        let trace = second_order(zeta, 20.0, 60.0, 0.01, 30.0);
        let m = step_metrics(&trace, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let analytic = 100.0 * (-std::f64::consts::PI * zeta / (1.0 - zeta * zeta).sqrt()).exp();
        assert!((m.overshoot - analytic).abs() < 0.2, "overshoot {} vs {analytic}", m.overshoot);
        assert!(m.settled);
        let (rise, settle) = (m.rise_time.unwrap(), m.settling_time.unwrap());
        assert!(rise <= settle);
        assert!((5.0..12.0).contains(&settle), "settling {settle}");
    }

    #[test]
    fn critically_damped_response_has_exactly_zero_overshoot() {
        let trace = second_order(1.0, 20.0, 60.0, 0.01, 40.0);
        let m = step_metrics(&trace, (0.0, 40.0), (20.0, 60.0)).unwrap();
        assert_eq!(m.overshoot, 0.0);
        assert!(m.steady_state_error < 0.01);
    }

    #[test]
    fn downward_step_mirrors_overshoot() {
        let up = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
        let m_up = step_metrics(&up, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let down = second_order(0.5, 60.0, 20.0, 0.01, 30.0);
        let m_down = step_metrics(&down, (0.0, 30.0), (60.0, 20.0)).unwrap();
        assert!((m_up.overshoot - m_down.overshoot).abs() < 1e-9);
    }

    #[test]
    fn perfect_tracking_gives_zero_everything() {
        let trace = synthetic(0.1, 60.0, vec![60.0; 100]);
        let m = step_metrics(&trace, (0.0, 9.9), (20.0, 60.0)).unwrap();
        assert_eq!(m.overshoot, 0.0);
        assert_eq!(m.settling_time, Some(0.0));
        assert_eq!((m.iae, m.ise, m.itae), (0.0, 0.0, 0.0));
        assert_eq!(m.steady_state_error, 0.0);
        assert!(m.settled);
    }

    #[test]
    fn settling_time_is_the_last_band_entry() {
        let trace = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
        let m = step_metrics(&trace, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let settle = m.settling_time.unwrap();
        let band = SETTLING_BAND * 60.0;
        // Inside the band forever after, strictly outside just before.
        for (k, &t) in trace.t.iter().enumerate() {
            if t >= settle {
                assert!((trace.pv_clean[k] - 60.0).abs() <= band, "t={t}");
            }
        }
        let just_before = trace.t.iter().rposition(|&t| t < settle).unwrap();
        assert!((trace.pv_clean[just_before] - 60.0).abs() > band);
    }

    #[test]
    fn never_settling_response_reports_unsettled() {
        // Sustained oscillation way outside the band.
        let pv = (0..1000).map(|k| 60.0 + 10.0 * (k as f64 * 0.1).sin()).collect();
        let trace = synthetic(0.1, 60.0, pv);
        let m = step_metrics(&trace, (0.0, 99.9), (20.0, 60.0)).unwrap();
        assert!(!m.settled);
        assert_eq!(m.settling_time, None);
    }

    #[test]
    fn constant_error_integrals_are_exact() {
        let trace = synthetic(0.1, 60.0, vec![59.0; 101]);
        // e = 1 over [0, 10].
        let (iae, ise, itae) = error_integrals(&trace, (0.0, 10.0)).unwrap();
        assert!((iae - 10.0).abs() < 1e-9);
        assert!((ise - 10.0).abs() < 1e-9);
        assert!((itae - 50.0).abs() < 1e-9);
    }

    #[test]
    fn exponential_error_iae_matches_closed_form() {
        let n = 101;
        let pv = (0..n).map(|k| 60.0 - (-(k as f64) * 0.1).exp()).collect();
        let trace = synthetic(0.1, 60.0, pv);
        let (iae, _, _) = error_integrals(&trace, (0.0, 10.0)).unwrap();
        let exact = 1.0 - (-10.0f64).exp();
        assert!((iae - exact).abs() < 1e-3, "iae {iae} vs {exact}");
    }

    #[test]
    fn window_shift_leaves_relative_metrics_unchanged() {
        let base = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
        let mut shifted = base.clone();
        for t in &mut shifted.t {
            *t += 5.0;
        }
        let a = step_metrics(&base, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let b = step_metrics(&shifted, (5.0, 35.0), (20.0, 60.0)).unwrap();
        assert!((a.overshoot - b.overshoot).abs() < 1e-9);
        assert!((a.rise_time.unwrap() - b.rise_time.unwrap()).abs() < 1e-9);
        assert!((a.settling_time.unwrap() - b.settling_time.unwrap()).abs() < 1e-9);
        assert!((a.itae - b.itae).abs() < 1e-6);
    }

    #[test]
    fn degenerate_requests_are_argument_errors() {
        let trace = synthetic(0.1, 60.0, vec![60.0; 10]);
        assert!(matches!(
            step_metrics(&trace, (0.0, 0.9), (60.0, 60.0)),
            Err(Error::Argument(_))
        ));
        assert!(step_metrics(&trace, (50.0, 60.0), (20.0, 60.0)).is_err());
        assert!(step_metrics(&trace, (0.9, 0.0), (20.0, 60.0)).is_err());
        assert!(error_integrals(&trace, (500.0, 600.0)).is_err());
    }

    #[test]
    fn control_variance_ignores_ramps_but_sees_jitter() {
        let mut ramp = synthetic(0.1, 60.0, vec![60.0; 100]);
        ramp.u = (0..100).map(|k| k as f64 * 0.5).collect();
        let m = step_metrics(&ramp, (0.0, 9.9), (20.0, 60.0)).unwrap();
        assert!(m.control_variance < 1e-20);

        let mut jitter = synthetic(0.1, 60.0, vec![60.0; 100]);
        jitter.u = (0..100).map(|k| if k % 2 == 0 { 10.0 } else { 12.0 }).collect();
        let m = step_metrics(&jitter, (0.0, 9.9), (20.0, 60.0)).unwrap();
        assert!(m.control_variance > 3.9, "variance {}", m.control_variance);
    }

    #[test]
    fn equal_metrics_compare_as_all_ties() {
        let trace = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
        let m = step_metrics(&trace, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let cmp = compare_metrics(&m, &m);
        assert_eq!(cmp.rows.len(), 8);
        assert!(cmp.rows.iter().all(|r| r.winner == Winner::Tie));
    }

    #[test]
    fn settling_ratio_follows_the_pi_over_pid_convention() {
        let trace = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
        let mut pi = step_metrics(&trace, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let mut pid = pi.clone();
        pi.settling_time = Some(10.0);
        pid.settling_time = Some(5.0);
        let cmp = compare_metrics(&pi, &pid);
        let row = cmp.row("settling_time").unwrap();
        assert_eq!(row.winner, Winner::Pid);
        assert_eq!(row.ratio, Some(2.0));
    }

    #[test]
    fn defined_settling_beats_undefined() {
        let trace = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
        let mut pi = step_metrics(&trace, (0.0, 30.0), (20.0, 60.0)).unwrap();
        let pid = pi.clone();
        pi.settling_time = None;
        let cmp = compare_metrics(&pi, &pid);
        let row = cmp.row("settling_time").unwrap();
        assert_eq!(row.winner, Winner::Pid);
        assert_eq!(row.ratio, None);
    }

    proptest! {
        #[test]
        fn error_integrals_scale_covariantly(c in 0.01f64..50.0) {
            let n = 200;
            let pv: Vec<f64> = (0..n).map(|k| 60.0 - 5.0 * (-(k as f64) * 0.05).exp()).collect();
            let base = synthetic(0.1, 60.0, pv.clone());
            let scaled = synthetic(0.1, 60.0, pv.iter().map(|&v| 60.0 - c * (60.0 - v)).collect());
            let (i1, s1, t1) = error_integrals(&base, (0.0, 19.0)).unwrap();
            let (i2, s2, t2) = error_integrals(&scaled, (0.0, 19.0)).unwrap();
            prop_assert!((i2 - c * i1).abs() < 1e-9 * (1.0 + c * i1));
            prop_assert!((s2 - c * c * s1).abs() < 1e-9 * (1.0 + c * c * s1));
            prop_assert!((t2 - c * t1).abs() < 1e-9 * (1.0 + c * t1));
        }

        #[test]
        fn overshoot_is_invariant_under_full_trace_scaling(c in 0.1f64..10.0) {
            let base = second_order(0.5, 20.0, 60.0, 0.01, 30.0);
            let mut scaled = base.clone();
            for v in scaled.pv_clean.iter_mut() {
                *v *= c;
            }
            for v in scaled.setpoint.iter_mut() {
                *v *= c;
            }
            let a = step_metrics(&base, (0.0, 30.0), (20.0, 60.0)).unwrap();
            let b = step_metrics(&scaled, (0.0, 30.0), (20.0 * c, 60.0 * c)).unwrap();
            prop_assert!((a.overshoot - b.overshoot).abs() < 1e-6);
        }
    }
}
