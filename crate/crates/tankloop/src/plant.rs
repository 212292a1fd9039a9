//! Lumped-parameter models of the three controlled processes: a coupled
//! two-tank level process and two flow processes (pump-driven, valve-driven),
//! each with first-order actuator lag, plus the noisy percent-of-span
//! measurement that the controller sees.
//!
//! Plants work in SI units internally; the measurement layer rescales to
//! percent of span so controller gains are dimensionless. All stepping is
//! classical fixed-step RK4: integrate first, then clamp to physical bounds,
//! flagging any clamp on the returned state.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Coupled two-tank level process parameters.
///
/// The pump feeds tank 1; tank 1 drains into tank 2 through a connecting
/// orifice (signed square-root head difference); tank 2 drains out. The
/// controlled level is tank 1's, with tank 2 acting as the interacting
/// downstream load. Outlet coefficients are in Torricelli form and already
/// include sqrt(2g) and discharge factors.
#[derive(Debug, Clone, PartialEq)]
pub struct TankParams {
    /// Tank 1 cross-section (m²).
    pub area_1: f64,
    /// Tank 2 cross-section (m²).
    pub area_2: f64,
    /// Connecting orifice coefficient (m^(5/2)/s).
    pub coeff_12: f64,
    /// Tank 2 outlet coefficient (m^(5/2)/s).
    pub coeff_out: f64,
    /// Tank height (m); levels clamp here.
    pub h_max: f64,
    /// Pump flow per percent drive (m³/s per %).
    pub pump_gain: f64,
    /// Pump lag time constant (s).
    pub pump_tau: f64,
    /// PV span for percent scaling (m).
    pub span: f64,
}

impl Default for TankParams {
    fn default() -> Self {
        TankParams {
            area_1: 0.0154,
            area_2: 0.0154,
            coeff_12: 6e-5,
            coeff_out: 6e-5,
            h_max: 0.5,
            pump_gain: 1.2e-6,
            pump_tau: 1.0,
            span: 0.5,
        }
    }
}

/// Instantaneous tank process state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankState {
    /// Tank 1 level (m).
    pub h1: f64,
    /// Tank 2 level (m).
    pub h2: f64,
    /// Current pump flow (m³/s).
    pub q_pump: f64,
    /// True when the last step had to clamp a level or flow to its
    /// physical bound (overflow at h_max, empty at 0, negative flow).
    pub clamped: bool,
}

impl TankState {
    pub fn new(h1: f64, h2: f64, q_pump: f64) -> Self {
        TankState { h1, h2, q_pump, clamped: false }
    }
}

/// Time derivatives of [`TankState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankDeriv {
    pub dh1: f64,
    pub dh2: f64,
    pub dq_pump: f64,
}

fn sqrt_nn(h: f64) -> f64 {
    // Levels can transiently dip below zero inside an RK4 stage; the
    // physical outflow there is zero, not NaN.
    if h > 0.0 {
        h.sqrt()
    } else {
        0.0
    }
}

/// Signed coupling flow through the connecting orifice (m³/s).
/// Antisymmetric in (h1, h2): swapping the levels flips the sign exactly.
pub fn coupling_flow(coeff_12: f64, h1: f64, h2: f64) -> f64 {
    let head = h1 - h2;
    coeff_12 * head.signum() * head.abs().sqrt()
}

impl TankParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("area_1", self.area_1),
            ("area_2", self.area_2),
            ("coeff_12", self.coeff_12),
            ("coeff_out", self.coeff_out),
            ("h_max", self.h_max),
            ("pump_gain", self.pump_gain),
            ("pump_tau", self.pump_tau),
            ("span", self.span),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!(
                    "tank parameter {name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Time derivatives of the tank state under drive `u` (percent) and
    /// disturbance inflow `d` (m³/s, added to tank 1).
    pub fn derivatives(&self, state: &TankState, u: f64, d: f64) -> Result<TankDeriv> {
        if ![state.h1, state.h2, state.q_pump, u, d].iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric {
                sample: 0,
                detail: format!("non-finite tank derivative input: {state:?}, u={u}, d={d}"),
            });
        }
        Ok(self.deriv_raw(state.h1, state.h2, state.q_pump, u, d))
    }

    fn deriv_raw(&self, h1: f64, h2: f64, q_pump: f64, u: f64, d: f64) -> TankDeriv {
        let q12 = coupling_flow(self.coeff_12, h1, h2);
        let q_out = self.coeff_out * sqrt_nn(h2);
        TankDeriv {
            dh1: (q_pump + d - q12) / self.area_1,
            dh2: (q12 - q_out) / self.area_2,
            dq_pump: (self.pump_gain * u - q_pump) / self.pump_tau,
        }
    }

    /// One RK4 step of length `dt` under constant (u, d), then clamping to
    /// physical bounds. Clamping sets the `clamped` flag on the result.
    pub fn step(&self, state: &TankState, u: f64, d: f64, dt: f64) -> Result<TankState> {
        let y = [state.h1, state.h2, state.q_pump];
        let f = |y: &[f64; 3]| {
            let k = self.deriv_raw(y[0], y[1], y[2], u, d);
            [k.dh1, k.dh2, k.dq_pump]
        };
        let y = rk4(y, dt, f);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric {
                sample: 0,
                detail: format!(
                    "tank state went non-finite: h1={}, h2={}, q_pump={} (from {state:?}, u={u}, d={d}, dt={dt})",
                    y[0], y[1], y[2]
                ),
            });
        }
        let (h1, c1) = clamp_flag(y[0], 0.0, self.h_max);
        let (h2, c2) = clamp_flag(y[1], 0.0, self.h_max);
        let (q_pump, c3) = clamp_flag(y[2], 0.0, f64::INFINITY);
        Ok(TankState { h1, h2, q_pump, clamped: c1 || c2 || c3 })
    }

    /// Steady state (with its holding drive, in percent) whose tank 1 level
    /// sits at `pv` percent of span. Errors when no interior equilibrium
    /// exists (level above h_max or drive above 100%).
    pub fn equilibrium_from_pv(&self, pv: f64) -> Result<(TankState, f64)> {
        let h1 = pv / 100.0 * self.span;
        let ratio = self.coeff_12.powi(2) / (self.coeff_12.powi(2) + self.coeff_out.powi(2));
        let h2 = h1 * ratio;
        let q = self.coeff_out * sqrt_nn(h2);
        let u = q / self.pump_gain;
        if !(0.0..=self.h_max).contains(&h1) || h2 > self.h_max || !(0.0..=100.0).contains(&u) {
            return Err(Error::Config(format!(
                "no interior tank equilibrium at pv={pv}%: h1={h1} m, h2={h2} m, drive={u}%"
            )));
        }
        Ok((TankState::new(h1, h2, q), u))
    }
}

/// Which actuator drives the flow loop. The dynamics share one form; the
/// kind selects the default lag constant and names the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Pump,
    Valve,
}

/// Installed valve/pump characteristic: delivered fraction of full-scale
/// flow as a function of actuator position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValveChar {
    Linear,
    /// phi(x) = R^(x-1), snapped to 0 at x=0 for tight shutoff.
    EqualPercentage { rangeability: f64 },
}

impl ValveChar {
    /// Delivered flow fraction at position `x` in [0, 1].
    pub fn phi(&self, x: f64) -> f64 {
        match *self {
            ValveChar::Linear => x.max(0.0),
            ValveChar::EqualPercentage { rangeability } => {
                if x <= 0.0 {
                    0.0
                } else {
                    rangeability.powf(x - 1.0)
                }
            }
        }
    }
}

/// Flow process parameters (pump-driven or valve-driven).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPlantParams {
    pub kind: FlowKind,
    /// Full-scale flow (m³/s).
    pub q_max: f64,
    /// First-order actuator lag (s).
    pub actuator_tau: f64,
    pub valve_char: ValveChar,
    /// PV span for percent scaling (m³/s).
    pub span: f64,
}

impl FlowPlantParams {
    /// Pump-driven flow loop with the bench defaults.
    pub fn pump() -> Self {
        FlowPlantParams {
            kind: FlowKind::Pump,
            q_max: 1.5e-4,
            actuator_tau: 1.0,
            valve_char: ValveChar::Linear,
            span: 1.5e-4,
        }
    }

    /// Valve-driven flow loop with the bench defaults.
    pub fn valve() -> Self {
        FlowPlantParams {
            kind: FlowKind::Valve,
            q_max: 1.5e-4,
            actuator_tau: 0.5,
            valve_char: ValveChar::EqualPercentage { rangeability: 30.0 },
            span: 1.5e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("q_max", self.q_max),
            ("actuator_tau", self.actuator_tau),
            ("span", self.span),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!(
                    "flow parameter {name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        if let ValveChar::EqualPercentage { rangeability } = self.valve_char {
            if !rangeability.is_finite() || rangeability <= 1.0 {
                return Err(Error::Config(format!(
                    "rangeability must be finite and greater than 1, got {rangeability}"
                )));
            }
        }
        Ok(())
    }

    /// Time derivative of the actuator position under drive `u` (percent),
    /// plus the delivered flow implied by (position, disturbance).
    /// The disturbance `d` is a flow fraction: q = q_max·phi(pos)·(1+d).
    pub fn derivatives(&self, state: &FlowPlantState, u: f64, d: f64) -> Result<FlowDeriv> {
        if ![state.actuator_pos, state.q, u, d].iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric {
                sample: 0,
                detail: format!("non-finite flow derivative input: {state:?}, u={u}, d={d}"),
            });
        }
        Ok(FlowDeriv {
            dpos: (u / 100.0 - state.actuator_pos) / self.actuator_tau,
            q: self.delivered(state.actuator_pos, d),
        })
    }

    fn delivered(&self, pos: f64, d: f64) -> f64 {
        (self.q_max * self.valve_char.phi(pos) * (1.0 + d)).max(0.0)
    }

    /// One RK4 step of the actuator lag, then the algebraic flow map and
    /// clamping of the position into [0, 1].
    pub fn step(&self, state: &FlowPlantState, u: f64, d: f64, dt: f64) -> Result<FlowPlantState> {
        let f = |y: &[f64; 1]| [(u / 100.0 - y[0]) / self.actuator_tau];
        let [pos] = rk4([state.actuator_pos], dt, f);
        if !pos.is_finite() {
            return Err(Error::Numeric {
                sample: 0,
                detail: format!("actuator position went non-finite (from {state:?}, u={u}, dt={dt})"),
            });
        }
        let (pos, clamped) = clamp_flag(pos, 0.0, 1.0);
        let q = self.delivered(pos, d);
        if !q.is_finite() {
            return Err(Error::Numeric {
                sample: 0,
                detail: format!("delivered flow went non-finite at pos={pos}, d={d}"),
            });
        }
        Ok(FlowPlantState { actuator_pos: pos, q, clamped })
    }

    /// Steady state (with its holding drive) delivering `pv` percent of
    /// span at zero disturbance. For an equal-percentage characteristic,
    /// fractions strictly between 0 and 1/R are unreachable (shutoff snap)
    /// and rejected.
    pub fn equilibrium_from_pv(&self, pv: f64) -> Result<(FlowPlantState, f64)> {
        let q = pv / 100.0 * self.span;
        let frac = q / self.q_max;
        if !(0.0..=1.0).contains(&frac) {
            return Err(Error::Config(format!(
                "no flow equilibrium at pv={pv}%: fraction {frac} outside [0, 1]"
            )));
        }
        let pos = match self.valve_char {
            ValveChar::Linear => frac,
            ValveChar::EqualPercentage { rangeability } => {
                if frac == 0.0 {
                    0.0
                } else if frac < 1.0 / rangeability {
                    return Err(Error::Config(format!(
                        "no flow equilibrium at pv={pv}%: fraction {frac} below shutoff snap 1/R"
                    )));
                } else {
                    1.0 + frac.ln() / rangeability.ln()
                }
            }
        };
        Ok((FlowPlantState { actuator_pos: pos, q, clamped: false }, 100.0 * pos))
    }
}

/// Instantaneous flow process state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPlantState {
    /// Effective drive/opening, fraction 0..1.
    pub actuator_pos: f64,
    /// Delivered flow (m³/s).
    pub q: f64,
    /// True when the last step clamped the position to [0, 1] or the flow
    /// to nonnegative.
    pub clamped: bool,
}

impl FlowPlantState {
    pub fn new(actuator_pos: f64, q: f64) -> Self {
        FlowPlantState { actuator_pos, q, clamped: false }
    }
}

/// Derivative/output pair for the flow plant: the actuator position is the
/// only integrated state; the flow is algebraic in (position, disturbance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowDeriv {
    pub dpos: f64,
    pub q: f64,
}

/// One of the three plants, dispatched by value. Closed set on purpose:
/// the simulation loop, tuner, and scenario format all enumerate it.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantModel {
    Tank(TankParams),
    Flow(FlowPlantParams),
}

/// State matching a [`PlantModel`] variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantState {
    Tank(TankState),
    Flow(FlowPlantState),
}

impl PlantState {
    /// True when the last step clamped something.
    pub fn clamped(&self) -> bool {
        match self {
            PlantState::Tank(s) => s.clamped,
            PlantState::Flow(s) => s.clamped,
        }
    }
}

impl PlantModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            PlantModel::Tank(p) => p.validate(),
            PlantModel::Flow(p) => p.validate(),
        }
    }

    /// PV span in engineering units.
    pub fn span(&self) -> f64 {
        match self {
            PlantModel::Tank(p) => p.span,
            PlantModel::Flow(p) => p.span,
        }
    }

    /// The clean process variable in engineering units: tank 1 level for
    /// the level loop, delivered flow for the flow loops.
    pub fn clean_pv(&self, state: &PlantState) -> Result<f64> {
        match (self, state) {
            (PlantModel::Tank(_), PlantState::Tank(s)) => Ok(s.h1),
            (PlantModel::Flow(_), PlantState::Flow(s)) => Ok(s.q),
            _ => Err(Error::Config("plant state kind does not match plant model".into())),
        }
    }

    /// One RK4 step of length `dt` under constant drive and disturbance.
    /// Disturbance units are per-plant: m³/s of extra inflow for the tank,
    /// flow fraction for the flow loops.
    pub fn step(&self, state: &PlantState, u: f64, d: f64, dt: f64) -> Result<PlantState> {
        match (self, state) {
            (PlantModel::Tank(p), PlantState::Tank(s)) => Ok(PlantState::Tank(p.step(s, u, d, dt)?)),
            (PlantModel::Flow(p), PlantState::Flow(s)) => Ok(PlantState::Flow(p.step(s, u, d, dt)?)),
            _ => Err(Error::Config("plant state kind does not match plant model".into())),
        }
    }

    /// Steady state and holding drive for a given PV in percent of span.
    pub fn equilibrium_from_pv(&self, pv: f64) -> Result<(PlantState, f64)> {
        match self {
            PlantModel::Tank(p) => {
                let (s, u) = p.equilibrium_from_pv(pv)?;
                Ok((PlantState::Tank(s), u))
            }
            PlantModel::Flow(p) => {
                let (s, u) = p.equilibrium_from_pv(pv)?;
                Ok((PlantState::Flow(s), u))
            }
        }
    }

    /// Drive that holds the current state stationary if it is an
    /// equilibrium (pump flow backed out through its gain, or actuator
    /// position rescaled). Used to bias relay experiments.
    pub fn holding_drive(&self, state: &PlantState) -> Result<f64> {
        match (self, state) {
            (PlantModel::Tank(p), PlantState::Tank(s)) => {
                Ok((s.q_pump / p.pump_gain).clamp(0.0, 100.0))
            }
            (PlantModel::Flow(_), PlantState::Flow(s)) => Ok((100.0 * s.actuator_pos).clamp(0.0, 100.0)),
            _ => Err(Error::Config("plant state kind does not match plant model".into())),
        }
    }
}

/// Percent-of-span measurement with additive Gaussian noise, clamped to
/// the transmitter range [0, 100]. `noise_std` is in percent of span. The
/// noise draw is taken from the caller's explicit RNG stream, one draw per
/// call, so a fixed seed reproduces the stream bit-for-bit; a zero
/// `noise_std` consumes the draw but returns the clean value exactly.
pub fn measure<R: Rng + ?Sized>(clean_pv: f64, span: f64, noise_std: f64, rng: &mut R) -> f64 {
    debug_assert!(span > 0.0);
    let z: f64 = rng.sample(StandardNormal);
    (100.0 * clean_pv / span + noise_std * z).clamp(0.0, 100.0)
}

fn clamp_flag(v: f64, lo: f64, hi: f64) -> (f64, bool) {
    if v < lo {
        (lo, true)
    } else if v > hi {
        (hi, true)
    } else {
        (v, false)
    }
}

/// Classical RK4 step for a small fixed-size system with frozen inputs.
fn rk4<const N: usize>(y: [f64; N], dt: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let k1 = f(&y);
    let k2 = f(&add_scaled(&y, &k1, dt / 2.0));
    let k3 = f(&add_scaled(&y, &k2, dt / 2.0));
    let k4 = f(&add_scaled(&y, &k3, dt));
    let mut out = y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn add_scaled<const N: usize>(y: &[f64; N], k: &[f64; N], s: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += s * k[i];
    }
    out
}
