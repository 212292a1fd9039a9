//! Discrete two-degree-of-freedom PID control law in backward-difference
//! form, with setpoint weighting, first-order derivative filtering, output
//! saturation, and selectable anti-windup. PI is the exact td = 0
//! specialization, not a separate code path.
//!
//! The step function is pure: `(config, state, w, y) -> (u, next state)`.
//! Sequencing per sample:
//!
//! ```text
//! P   = beta*w - y
//! I_k = I_{k-1} + (ts/ti)*(w - y)            (anti-windup may veto the store)
//! D_k = Tf/(Tf+ts)*D_{k-1} + td/(Tf+ts)*((alpha*w - y) - prev)   Tf = a*td
//! u   = clamp(kp*(P + I_k + D_k), u_min, u_max)
//! ```

use crate::error::{Error, Result};

/// Strategy for keeping the integral term sane while the output is pinned
/// at a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AntiWindup {
    /// Skip integral accumulation when the output is saturated and the
    /// current error would push it further past the limit.
    #[default]
    Conditional,
    /// Back-calculation: bleed the integral toward the saturated output
    /// with tracking time Tt = ti.
    BackCalculation,
    /// No protection. Diagnostic mode; lets tests demonstrate what windup
    /// does to a saturating loop.
    Off,
}

/// Full parameter set of the 2-DOF PID law.
///
/// `kp` is dimensionless (% output per % PV) because controllers only ever
/// see percent-of-span signals. `ti = None` disables integral action
/// explicitly; `td = 0` disables derivative action.
#[derive(Debug, Clone, PartialEq)]
pub struct PidConfig {
    /// Proportional gain.
    pub kp: f64,
    /// Integral action time (s); `None` switches integral action off.
    pub ti: Option<f64>,
    /// Derivative action time (s); 0 switches derivative action off.
    pub td: f64,
    /// Derivative filter factor a, giving filter time constant Tf = a*td.
    pub deriv_delay_coeff: f64,
    /// Proportional setpoint weighting in [0, 1].
    pub beta: f64,
    /// Derivative setpoint weighting in [0, 1].
    pub alpha: f64,
    /// Sampling time of the algorithm (s).
    pub ts: f64,
    /// Lower output limit (%).
    pub u_min: f64,
    /// Upper output limit (%).
    pub u_max: f64,
    pub anti_windup: AntiWindup,
}

impl PidConfig {
    /// PI controller: the PID law with td = 0 and alpha = 0. Default
    /// limits 0..100%, conditional-integration anti-windup, and the filter
    /// factor retained (inert) at 0.1.
    pub fn pi(kp: f64, ti: f64, beta: f64, ts: f64) -> Self {
        PidConfig {
            kp,
            ti: Some(ti),
            td: 0.0,
            deriv_delay_coeff: 0.1,
            beta,
            alpha: 0.0,
            ts,
            u_min: 0.0,
            u_max: 100.0,
            anti_windup: AntiWindup::Conditional,
        }
    }

    /// Full 2-DOF PID controller with default limits 0..100% and
    /// conditional-integration anti-windup.
    pub fn pid(kp: f64, ti: f64, td: f64, a: f64, beta: f64, alpha: f64, ts: f64) -> Self {
        PidConfig {
            kp,
            ti: Some(ti),
            td,
            deriv_delay_coeff: a,
            beta,
            alpha,
            ts,
            u_min: 0.0,
            u_max: 100.0,
            anti_windup: AntiWindup::Conditional,
        }
    }

    /// Pure proportional controller (integral disabled, td = 0, beta = 1):
    /// u_raw = kp*(w - y).
    pub fn pure_p(kp: f64, ts: f64) -> Self {
        PidConfig {
            kp,
            ti: None,
            td: 0.0,
            deriv_delay_coeff: 0.1,
            beta: 1.0,
            alpha: 0.0,
            ts,
            u_min: 0.0,
            u_max: 100.0,
            anti_windup: AntiWindup::Conditional,
        }
    }

    pub fn with_limits(mut self, u_min: f64, u_max: f64) -> Self {
        self.u_min = u_min;
        self.u_max = u_max;
        self
    }

    pub fn with_anti_windup(mut self, anti_windup: AntiWindup) -> Self {
        self.anti_windup = anti_windup;
        self
    }

    /// Checks every field invariant. Violations are configuration errors;
    /// nothing is ever silently clamped into range.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.kp.is_finite() || self.kp <= 0.0 {
            return bad(format!("kp must be finite and > 0, got {}", self.kp));
        }
        if let Some(ti) = self.ti {
            if !ti.is_finite() || ti <= 0.0 {
                return bad(format!("ti must be finite and > 0 (or integral disabled), got {ti}"));
            }
        }
        if !self.td.is_finite() || self.td < 0.0 {
            return bad(format!("td must be finite and >= 0, got {}", self.td));
        }
        if !self.deriv_delay_coeff.is_finite() || (self.td > 0.0 && self.deriv_delay_coeff <= 0.0) {
            return bad(format!(
                "deriv_delay_coeff must be finite and > 0 when td > 0, got {}",
                self.deriv_delay_coeff
            ));
        }
        if !self.beta.is_finite() || !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if !self.alpha.is_finite() || !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !self.ts.is_finite() || self.ts <= 0.0 {
            return bad(format!("ts must be finite and > 0, got {}", self.ts));
        }
        if !self.u_min.is_finite() || !self.u_max.is_finite() || self.u_min >= self.u_max {
            return bad(format!(
                "output limits must be finite with u_min < u_max, got [{}, {}]",
                self.u_min, self.u_max
            ));
        }
        Ok(())
    }

    /// One controller sample: setpoint `w` and measurement `y` in percent
    /// of span, returning the saturated output and the successor state.
    pub fn step(&self, state: &PidState, w: f64, y: f64) -> Result<(f64, PidState)> {
        self.validate()?;
        if !w.is_finite() || !y.is_finite() {
            return Err(Error::Argument(format!("pid step needs finite inputs, got w={w}, y={y}")));
        }

        let e = w - y;
        let integral_candidate = match self.ti {
            Some(ti) => state.integral_sum + self.ts / ti * e,
            None => state.integral_sum,
        };

        let d_in = self.alpha * w - y;
        let deriv = if self.td > 0.0 {
            let tf = self.deriv_delay_coeff * self.td;
            tf / (tf + self.ts) * state.deriv_state
                + self.td / (tf + self.ts) * (d_in - state.prev_deriv_input)
        } else {
            0.0
        };

        let u_raw = self.kp * (self.beta * w - y + integral_candidate + deriv);
        let u = u_raw.clamp(self.u_min, self.u_max);
        let saturated = u != u_raw;

        let integral_sum = if self.ti.is_none() {
            state.integral_sum
        } else {
            match self.anti_windup {
                AntiWindup::Conditional => {
                    let pushing = (u_raw > self.u_max && e > 0.0) || (u_raw < self.u_min && e < 0.0);
                    if pushing {
                        state.integral_sum
                    } else {
                        integral_candidate
                    }
                }
                AntiWindup::BackCalculation => {
                    let tt = self.ti.unwrap();
                    integral_candidate + self.ts / tt * (u - u_raw) / self.kp
                }
                AntiWindup::Off => integral_candidate,
            }
        };

        let next = PidState {
            integral_sum,
            prev_deriv_input: d_in,
            deriv_state: deriv,
            last_saturated: saturated,
        };
        if ![next.integral_sum, next.prev_deriv_input, next.deriv_state].iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric {
                sample: 0,
                detail: format!("controller state went non-finite: {next:?}"),
            });
        }
        Ok((u, next))
    }
}

/// Controller memory between samples. `Default` is the reset state:
/// all-zero with the saturation flag clear.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PidState {
    /// Accumulated integral term (pre-gain).
    pub integral_sum: f64,
    /// Previous derivative input alpha*w - y (%).
    pub prev_deriv_input: f64,
    /// Filtered derivative term (pre-gain).
    pub deriv_state: f64,
    /// Whether the last emitted output was clamped at a limit.
    pub last_saturated: bool,
}

impl PidState {
    /// The all-zero reset state. Idempotent by construction.
    #[must_use]
    pub fn reset(self) -> Self {
        Self::default()
    }
}
