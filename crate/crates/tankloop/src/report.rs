//! Plain-text rendering of a PI-vs-PID comparison: one table row per
//! metric plus verdict lines summarizing which side the numbers favor.

use crate::metrics::{MetricComparison, StepMetrics, Winner};

/// A named PI-vs-PID comparison ready for rendering.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub pi_name: String,
    pub pid_name: String,
    pub comparison: MetricComparison,
}

impl ComparisonReport {
    pub fn new(pi_name: &str, pid_name: &str, pi: &StepMetrics, pid: &StepMetrics) -> Self {
        ComparisonReport {
            pi_name: pi_name.to_string(),
            pid_name: pid_name.to_string(),
            comparison: crate::metrics::compare_metrics(pi, pid),
        }
    }

    /// Fixed-width table plus verdict lines. Deterministic for a given
    /// comparison.
    pub fn render(&self) -> String {
        let fmt_val = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "-".to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!("PI ({}) vs PID ({})\n", self.pi_name, self.pid_name));
        out.push_str(&format!(
            "{:<20} {:>14} {:>14} {:>8} {:>10}\n",
            "metric", "PI", "PID", "winner", "ratio"
        ));
        for row in &self.comparison.rows {
            let winner = match row.winner {
                Winner::Pi => "PI",
                Winner::Pid => "PID",
                Winner::Tie => "tie",
            };
            out.push_str(&format!(
                "{:<20} {:>14} {:>14} {:>8} {:>10}\n",
                row.metric,
                fmt_val(row.pi),
                fmt_val(row.pid),
                winner,
                match row.ratio {
                    Some(r) => format!("{r:.3}"),
                    None => "-".to_string(),
                }
            ));
        }
        for line in self.verdicts() {
            out.push_str("verdict: ");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Verdict sentences: the win tally, then speed and smoothness calls
    /// when the rows support them.
    pub fn verdicts(&self) -> Vec<String> {
        let rows = &self.comparison.rows;
        let total = rows.len();
        let pid_wins = rows.iter().filter(|r| r.winner == Winner::Pid).count();
        let pi_wins = rows.iter().filter(|r| r.winner == Winner::Pi).count();
        let ties = total - pid_wins - pi_wins;
        let mut lines = vec![format!(
            "PID leads on {pid_wins} of {total} metrics, PI on {pi_wins}{}",
            if ties > 0 { format!(", {ties} tied") } else { String::new() }
        )];
        let winner_of = |metric: &str| self.comparison.row(metric).map(|r| r.winner);
        let speed = [winner_of("rise_time"), winner_of("settling_time")];
        if speed.iter().all(|w| *w == Some(Winner::Pid)) {
            lines.push("the PID loop reaches and holds the setpoint sooner".into());
        } else if speed.iter().all(|w| *w == Some(Winner::Pi)) {
            lines.push("the PI loop reaches and holds the setpoint sooner".into());
        }
        match winner_of("control_variance") {
            Some(Winner::Pi) => lines.push("the PI loop drives the actuator more smoothly".into()),
            Some(Winner::Pid) => lines.push("the PID loop drives the actuator more smoothly".into()),
            _ => {}
        }
        lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(settle: f64, variance: f64) -> StepMetrics {
        StepMetrics {
            overshoot: 10.0,
            rise_time: Some(2.0),
            settling_time: Some(settle),
            steady_state_error: 0.1,
            iae: 50.0,
            ise: 200.0,
            itae: 1000.0,
            control_variance: variance,
            settled: true,
        }
    }

    #[test]
    fn table_lists_every_metric_once() {
        let report = ComparisonReport::new("a", "b", &metrics(10.0, 1.0), &metrics(5.0, 4.0));
        let text = report.render();
        for name in [
            "overshoot",
            "rise_time",
            "settling_time",
            "steady_state_error",
            "iae",
            "ise",
            "itae",
            "control_variance",
        ] {
            let rows = text.lines().filter(|l| l.split_whitespace().next() == Some(name)).count();
            assert_eq!(rows, 1, "{name}: {text}");
        }
        assert!(text.starts_with("PI (a) vs PID (b)\n"));
    }

    #[test]
    fn verdict_tally_counts_wins_and_ties() {
        // PID faster to settle, PI calmer, everything else tied.
        let report = ComparisonReport::new("a", "b", &metrics(10.0, 1.0), &metrics(5.0, 4.0));
        let verdicts = report.verdicts();
        assert_eq!(verdicts[0], "PID leads on 1 of 8 metrics, PI on 1, 6 tied");
        assert!(verdicts.iter().any(|l| l.contains("PI loop drives the actuator more smoothly")));
    }

    #[test]
    fn speed_verdict_requires_both_speed_metrics() {
        let mut pid = metrics(5.0, 1.0);
        pid.rise_time = Some(1.0);
        let report = ComparisonReport::new("a", "b", &metrics(10.0, 1.0), &pid);
        assert!(report.verdicts().iter().any(|l| l.contains("PID loop reaches and holds")));

        // Split speed metrics: no speed verdict.
        let mut pid = metrics(5.0, 1.0);
        pid.rise_time = Some(3.0);
        let report = ComparisonReport::new("a", "b", &metrics(10.0, 1.0), &pid);
        assert!(!report.verdicts().iter().any(|l| l.contains("reaches and holds")));
    }

    #[test]
    fn undefined_values_render_as_dashes() {
        let mut pi = metrics(10.0, 1.0);
        pi.settling_time = None;
        pi.settled = false;
        let report = ComparisonReport::new("a", "b", &pi, &metrics(5.0, 4.0));
        let line = report
            .render()
            .lines()
            .find(|l| l.starts_with("settling_time"))
            .unwrap()
            .to_string();
        assert!(line.split_whitespace().any(|f| f == "-"), "{line}");
        assert!(line.contains("PID"));
    }
}
