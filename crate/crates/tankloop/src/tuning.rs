//! Controller identification and tuning: relay oscillation experiments,
//! the classic ultimate-gain tuning table, and a simplex-search autotuner
//! that minimizes the time-weighted error of a full closed-loop run.

use crate::controller::PidConfig;
use crate::error::{Error, Result};
use crate::metrics::error_integrals;
use crate::plant::{PlantModel, PlantState};
use crate::simloop::{run_closed_loop, LoopScenario, Schedule};

/// Relay oscillation experiment setup. The relay toggles the drive between
/// `bias - amplitude` and `bias + amplitude` around the loop's holding
/// drive and measures the resulting limit cycle on the noise-free PV.
#[derive(Debug, Clone)]
pub struct RelayExperiment {
    /// Relay half-swing in drive units (% of actuator).
    pub amplitude: f64,
    /// Switching deadband in PV units (% of span); zero switches on any
    /// sign change of the error.
    pub hysteresis: f64,
    /// Experiment length (s); the full window always runs and the trailing
    /// cycles are the ones measured.
    pub duration: f64,
    /// Relay decision period (s).
    pub ts: f64,
    pub substeps_per_sample: u32,
    /// Drive midpoint override; defaults to the holding drive of the
    /// initial state.
    pub bias: Option<f64>,
    /// Disturbance applied during the experiment.
    pub disturbance: Schedule,
}

impl RelayExperiment {
    pub fn new(amplitude: f64, hysteresis: f64) -> Self {
        RelayExperiment {
            amplitude,
            hysteresis,
            duration: 600.0,
            ts: 0.1,
            substeps_per_sample: 10,
            bias: None,
            disturbance: Schedule::constant(0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::Config(format!("relay amplitude must be positive, got {}", self.amplitude)));
        }
        if !(self.hysteresis.is_finite() && self.hysteresis >= 0.0) {
            return Err(Error::Config(format!("relay hysteresis must be nonnegative, got {}", self.hysteresis)));
        }
        if !(self.ts.is_finite() && self.ts > 0.0) {
            return Err(Error::Config(format!("relay sample period must be positive, got {}", self.ts)));
        }
        if !(self.duration.is_finite() && self.duration > self.ts) {
            return Err(Error::Config(format!("relay duration must exceed one sample, got {}", self.duration)));
        }
        if self.substeps_per_sample < 1 {
            return Err(Error::Config("relay substeps_per_sample must be at least 1".into()));
        }
        if let Some(b) = self.bias {
            if !b.is_finite() {
                return Err(Error::Config("relay bias must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Sustained-oscillation result: the gain margin pair the tuning table
/// consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltimateParams {
    /// Ultimate gain estimate 4d / (pi * a).
    pub ku: f64,
    /// Ultimate period estimate (s).
    pub tu: f64,
    /// Mean half peak-to-peak PV swing per measured cycle (% of span).
    pub oscillation_amplitude: f64,
    /// Full cycles observed (including the discarded warmup).
    pub cycles: usize,
}

/// Minimum cycles that must precede the measured window.
const RELAY_WARMUP_CYCLES: usize = 2;
/// Trailing cycles averaged for the period and amplitude estimates.
const RELAY_MEASURED_CYCLES: usize = 5;

/// Runs a relay oscillation experiment against the plant, starting from
/// `init` (normally an equilibrium), and extracts the ultimate gain and
/// period from the resulting limit cycle.
///
/// The relay drives high when the PV drops below center by more than the
/// hysteresis and low when it rises above center by more than the
/// hysteresis, starting high. The experiment runs for its full duration
/// and the last [`RELAY_MEASURED_CYCLES`] complete cycles are averaged,
/// so slow startup transients do not bias the estimate; at least
/// [`RELAY_WARMUP_CYCLES`] cycles must remain in front of that window.
pub fn relay_identify(plant: &PlantModel, init: &PlantState, exp: &RelayExperiment) -> Result<UltimateParams> {
    plant.validate()?;
    exp.validate()?;
    let span = plant.span();
    let bias = match exp.bias {
        Some(b) => b,
        None => plant.holding_drive(init)?,
    };
    if bias - exp.amplitude < 0.0 || bias + exp.amplitude > 100.0 {
        return Err(Error::Identification(format!(
            "relay drive range [{}, {}] leaves the actuator range [0, 100]",
            bias - exp.amplitude,
            bias + exp.amplitude
        )));
    }
    let center = 100.0 * plant.clean_pv(init)? / span;
    let dt = exp.ts / exp.substeps_per_sample as f64;
    let n = (exp.duration / exp.ts).ceil() as usize;
    let needed = RELAY_WARMUP_CYCLES + RELAY_MEASURED_CYCLES;

    let mut state = *init;
    let mut high = true;
    let mut last_up: Option<f64> = None;
    let mut periods: Vec<f64> = Vec::new();
    let mut amplitudes: Vec<f64> = Vec::new();
    let mut cycle_min = f64::MAX;
    let mut cycle_max = f64::MIN;

    for k in 0..n {
        let t = k as f64 * exp.ts;
        let clean = plant.clean_pv(&state)?;
        if !clean.is_finite() {
            return Err(Error::Numeric {
                sample: k,
                detail: format!("process variable went non-finite during relay run: {state:?}"),
            });
        }
        let pv = 100.0 * clean / span;
        let e = center - pv;

        if !high && e > exp.hysteresis {
            high = true;
            if let Some(prev) = last_up {
                periods.push(t - prev);
                amplitudes.push((cycle_max - cycle_min) / 2.0);
            }
            last_up = Some(t);
            cycle_min = pv;
            cycle_max = pv;
        } else if high && e < -exp.hysteresis {
            high = false;
        }
        cycle_min = cycle_min.min(pv);
        cycle_max = cycle_max.max(pv);

        let u = if high { bias + exp.amplitude } else { bias - exp.amplitude };
        for i in 0..exp.substeps_per_sample {
            let d = exp.disturbance.value_at(t + i as f64 * dt);
            state = plant.step(&state, u, d, dt)?;
        }
    }

    if periods.len() < needed {
        return Err(Error::Identification(format!(
            "relay produced {} full cycles within {} s; need {}",
            periods.len(),
            exp.duration,
            needed
        )));
    }
    let tail_p = &periods[periods.len() - RELAY_MEASURED_CYCLES..];
    let tail_a = &amplitudes[amplitudes.len() - RELAY_MEASURED_CYCLES..];
    let tu = tail_p.iter().sum::<f64>() / tail_p.len() as f64;
    let a = tail_a.iter().sum::<f64>() / tail_a.len() as f64;
    if !(a.is_finite() && a > 1e-12) {
        return Err(Error::Identification(format!("limit cycle amplitude {a} is too small to identify a gain")));
    }
    Ok(UltimateParams {
        ku: 4.0 * exp.amplitude / (std::f64::consts::PI * a),
        tu,
        oscillation_amplitude: a,
        cycles: periods.len(),
    })
}

/// Relay identification specialized to integrating processes (level-like
/// plants whose response over the oscillation timescale is an integrator
/// behind a single actuator lag).
///
/// A plain hysteresis relay locks its limit cycle where the process lags
/// the switching by 180 degrees minus the hysteresis phase, which for an
/// integrating process sits well below the proportional-feedback critical
/// frequency; reading `4 d / (pi a)` there badly misstates the ultimate
/// gain. This routine instead treats the measured cycle as one point on
/// the process frequency response: the describing function of a relay
/// with hysteresis `eps` switching against amplitude `a` contributes
/// `asin(eps / a)` of phase, and the sample-and-hold contributes half a
/// sample more, which pins both the process gain and its phase at the
/// cycle frequency. Fitting the integrator-plus-lag model through that
/// point and walking it out to the frequency where the held loop reaches
/// 180 degrees of lag yields the ultimate gain and period.
///
/// Requires a strictly positive hysteresis (the phase equation degenerates
/// at zero) and a drive amplitude large enough that the cycle swings well
/// past the hysteresis band.
pub fn relay_identify_integrating(
    plant: &PlantModel,
    init: &PlantState,
    exp: &RelayExperiment,
) -> Result<UltimateParams> {
    if exp.hysteresis <= 0.0 {
        return Err(Error::Config(
            "integrating-process identification needs a positive relay hysteresis".into(),
        ));
    }
    let raw = relay_identify(plant, init, exp)?;
    let a = raw.oscillation_amplitude;
    let ratio = exp.hysteresis / a;
    if ratio > 0.9 {
        return Err(Error::Identification(format!(
            "cycle amplitude {a} barely clears the hysteresis {}; increase the relay amplitude",
            exp.hysteresis
        )));
    }
    let w_c = 2.0 * std::f64::consts::PI / raw.tu;
    let hold = exp.ts / 2.0;
    // Process lag at the cycle frequency, beyond the integrator's 90 degrees.
    let lag_extra = std::f64::consts::FRAC_PI_2 - ratio.asin() - w_c * hold;
    if lag_extra <= 0.0 {
        return Err(Error::Identification(format!(
            "relay cycle at {} s is inconsistent with an integrating process at hysteresis {}",
            raw.tu, exp.hysteresis
        )));
    }
    let tau = lag_extra.tan() / w_c;
    let gain_c = std::f64::consts::PI * a / (4.0 * exp.amplitude);
    let k = gain_c * w_c * (1.0 + (w_c * tau).powi(2)).sqrt();

    // Critical frequency of the held loop: atan(w tau) + w * ts / 2 = pi / 2.
    let excess = |w: f64| (w * tau).atan() + w * hold - std::f64::consts::FRAC_PI_2;
    let mut lo = 1e-9;
    let mut hi = 1.0;
    while excess(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w_u = 0.5 * (lo + hi);
    let ku = w_u * (1.0 + (w_u * tau).powi(2)).sqrt() / k;
    Ok(UltimateParams {
        ku,
        tu: 2.0 * std::f64::consts::PI / w_u,
        oscillation_amplitude: a,
        cycles: raw.cycles,
    })
}

/// Which row of the ultimate-gain tuning table to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZnRule {
    Pi,
    Pid,
}

/// Maps an ultimate gain and period onto controller parameters using the
/// classic sustained-oscillation table: PI takes kp = 0.45 ku and
/// ti = tu / 1.2; PID takes kp = 0.6 ku, ti = tu / 2, td = tu / 8. Both
/// use full setpoint weighting and default limits.
pub fn ziegler_nichols(ult: &UltimateParams, rule: ZnRule, ts: f64) -> PidConfig {
    match rule {
        ZnRule::Pi => PidConfig::pi(0.45 * ult.ku, ult.tu / 1.2, 1.0, ts),
        ZnRule::Pid => PidConfig::pid(0.6 * ult.ku, ult.tu / 2.0, ult.tu / 8.0, 0.1, 1.0, 0.0, ts),
    }
}

/// Which controller parameters the autotuner may move. Frozen parameters
/// keep their values from the starting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VaryMask {
    pub kp: bool,
    pub ti: bool,
    pub td: bool,
    pub beta: bool,
}

impl VaryMask {
    /// Tunes kp, ti and beta, leaving derivative action frozen.
    pub fn pi() -> Self {
        VaryMask { kp: true, ti: true, td: false, beta: true }
    }

    /// Tunes kp, ti, td and beta.
    pub fn pid() -> Self {
        VaryMask { kp: true, ti: true, td: true, beta: true }
    }
}

/// Search boxes. Gains and times move in log10 space; beta moves linearly.
const KP_RANGE: (f64, f64) = (1e-2, 1e4);
const TI_RANGE: (f64, f64) = (1e-2, 1e3);
const TD_RANGE: (f64, f64) = (1e-2, 1e2);
const BETA_RANGE: (f64, f64) = (0.0, 1.0);

/// Objective value charged for candidates whose run fails or diverges.
const PENALTY: f64 = 1e12;

#[derive(Debug, Clone, Copy)]
enum Dim {
    LogKp,
    LogTi,
    LogTd,
    Beta,
}

struct ParamSpace {
    dims: Vec<Dim>,
}

impl ParamSpace {
    fn from_mask(mask: &VaryMask, base: &PidConfig) -> Result<ParamSpace> {
        let mut dims = Vec::new();
        if mask.kp {
            dims.push(Dim::LogKp);
        }
        if mask.ti {
            if base.ti.is_none() {
                return Err(Error::Tuning(
                    "cannot vary the integral time of a controller with integral action disabled".into(),
                ));
            }
            dims.push(Dim::LogTi);
        }
        if mask.td {
            dims.push(Dim::LogTd);
        }
        if mask.beta {
            dims.push(Dim::Beta);
        }
        if dims.is_empty() {
            return Err(Error::Tuning("the vary mask freezes every parameter; nothing to tune".into()));
        }
        Ok(ParamSpace { dims })
    }

    fn encode(&self, base: &PidConfig) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| match d {
                Dim::LogKp => base.kp.clamp(KP_RANGE.0, KP_RANGE.1).log10(),
                Dim::LogTi => base.ti.unwrap().clamp(TI_RANGE.0, TI_RANGE.1).log10(),
                Dim::LogTd => base.td.clamp(TD_RANGE.0, TD_RANGE.1).log10(),
                Dim::Beta => base.beta.clamp(BETA_RANGE.0, BETA_RANGE.1),
            })
            .collect()
    }

    /// Builds a candidate from a search point, clipping into the boxes.
    fn apply(&self, x: &[f64], base: &PidConfig) -> PidConfig {
        let mut cfg = base.clone();
        for (dim, &v) in self.dims.iter().zip(x) {
            match dim {
                Dim::LogKp => cfg.kp = clip_log(v, KP_RANGE),
                Dim::LogTi => cfg.ti = Some(clip_log(v, TI_RANGE)),
                Dim::LogTd => cfg.td = clip_log(v, TD_RANGE),
                Dim::Beta => cfg.beta = v.clamp(BETA_RANGE.0, BETA_RANGE.1),
            }
        }
        cfg
    }

    fn steps(&self) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| match d {
                Dim::Beta => 0.1,
                _ => 0.2,
            })
            .collect()
    }
}

fn clip_log(v: f64, range: (f64, f64)) -> f64 {
    10f64.powf(v.clamp(range.0.log10(), range.1.log10()))
}

/// Outcome of a tuning search. `config` is the best candidate ever
/// evaluated, not merely the final simplex vertex.
#[derive(Debug, Clone)]
pub struct TuneResult {
    pub config: PidConfig,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Time-weighted absolute error of a noise-free run of the scenario; the
/// quantity the autotuner minimizes. Failed or divergent runs cost
/// [`PENALTY`].
fn itae_objective(scenario: &LoopScenario) -> f64 {
    match run_closed_loop(scenario) {
        Ok(trace) => {
            if trace.pv_clean.iter().any(|v| !v.is_finite() || v.abs() > 1000.0) {
                return PENALTY;
            }
            match error_integrals(&trace, (0.0, scenario.duration)) {
                Ok((_, _, itae)) if itae.is_finite() => itae,
                _ => PENALTY,
            }
        }
        Err(_) => PENALTY,
    }
}

/// Tunes the scenario's controller by simplex search, minimizing the
/// time-weighted absolute error of a noise-free closed-loop run.
pub fn autotune(scenario: &LoopScenario, mask: &VaryMask, max_evals: usize) -> Result<TuneResult> {
    autotune_observed(scenario, mask, max_evals, |_, _, _| {})
}

/// [`autotune`] with a progress callback invoked once per objective
/// evaluation with (1-based index, candidate, objective value).
pub fn autotune_observed(
    scenario: &LoopScenario,
    mask: &VaryMask,
    max_evals: usize,
    mut observer: impl FnMut(usize, &PidConfig, f64),
) -> Result<TuneResult> {
    scenario.validate()?;
    let base = scenario.controller.clone();
    let space = ParamSpace::from_mask(mask, &base)?;
    if max_evals < space.dims.len() + 2 {
        return Err(Error::Tuning(format!(
            "evaluation budget {} cannot cover an initial simplex of {} vertices",
            max_evals,
            space.dims.len() + 1
        )));
    }

    let mut quiet = scenario.clone();
    quiet.noise_std = 0.0;

    let mut count = 0usize;
    let mut objective_initial = f64::NAN;
    let mut objective = |x: &[f64]| -> f64 {
        let cfg = space.apply(x, &base);
        quiet.controller = cfg.clone();
        let v = itae_objective(&quiet);
        count += 1;
        if count == 1 {
            objective_initial = v;
        }
        observer(count, &cfg, v);
        v
    };

    let x0 = space.encode(&base);
    let nm = nelder_mead(&mut objective, &x0, &space.steps(), max_evals);
    Ok(TuneResult {
        config: space.apply(&nm.x, &base),
        objective_initial,
        objective_final: nm.fx,
        evaluations: nm.evaluations,
        converged: nm.converged,
    })
}

struct NmResult {
    x: Vec<f64>,
    fx: f64,
    evaluations: usize,
    converged: bool,
}

/// Downhill simplex minimizer with standard coefficients (reflection 1,
/// expansion 2, contraction 0.5, shrink 0.5), a hard evaluation budget,
/// and one restart around the incumbent when the simplex collapses. The
/// returned point is the best ever evaluated. `converged` means the
/// simplex collapsed (twice, the restart included) before the budget ran
/// out.
fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: &[f64], max_evals: usize) -> NmResult {
    const DIAMETER_TOL: f64 = 1e-6;
    let n = x0.len();
    let mut used = 0usize;
    let mut best_x = x0.to_vec();
    let mut best_f = f64::INFINITY;
    let mut converged = false;
    let mut restarts = 0usize;

    macro_rules! eval {
        ($x:expr, $exhausted:tt) => {{
            if used >= max_evals {
                break $exhausted;
            }
            used += 1;
            let v = f($x);
            if v < best_f {
                best_f = v;
                best_x = $x.to_vec();
            }
            v
        }};
    }

    'outer: loop {
        // (Re)build the simplex around the incumbent.
        let origin = best_x.clone();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        {
            let fx = eval!(&origin, 'outer);
            simplex.push((origin.clone(), fx));
        }
        for i in 0..n {
            let mut v = origin.clone();
            v[i] += step[i];
            let fv = eval!(&v, 'outer);
            simplex.push((v, fv));
        }

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

            let scale = 1.0 + simplex[0].0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0f64, |m, d| m.max(d));
            if diameter / scale < DIAMETER_TOL {
                if restarts >= 1 {
                    converged = true;
                    break 'outer;
                }
                restarts += 1;
                continue 'outer;
            }

            let worst = simplex[n].clone();
            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }

            let reflected: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + (c - w)).collect();
            let fr = eval!(&reflected, 'outer);

            if fr < simplex[0].1 {
                let expanded: Vec<f64> = centroid.iter().zip(&reflected).map(|(c, r)| c + 2.0 * (r - c)).collect();
                let fe = eval!(&expanded, 'outer);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let toward = if fr < worst.1 { &reflected } else { &worst.0 };
                let contracted: Vec<f64> = centroid.iter().zip(toward).map(|(c, t)| c + 0.5 * (t - c)).collect();
                let fc = eval!(&contracted, 'outer);
                if fc < fr.min(worst.1) {
                    simplex[n] = (contracted, fc);
                } else {
                    // Shrink everything toward the best vertex.
                    let anchor = simplex[0].0.clone();
                    for item in simplex.iter_mut().skip(1) {
                        let shrunk: Vec<f64> = anchor.iter().zip(&item.0).map(|(a, v)| a + 0.5 * (v - a)).collect();
                        let fs = eval!(&shrunk, 'outer);
                        *item = (shrunk, fs);
                    }
                }
            }
        }
    }

    NmResult { x: best_x, fx: best_f, evaluations: used, converged }
}
