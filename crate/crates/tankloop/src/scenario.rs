//! Text form of a [`LoopScenario`]: bracketed sections with `key = value`
//! lines and `#` comments. Unknown sections and keys are rejected, with
//! line numbers in every diagnostic. `render_scenario` emits a file that
//! parses back to an equal scenario.
//!
//! ```text
//! [plant]
//! kind = tank            # tank | pump-flow | valve-flow
//!
//! [controller]
//! kp = 124.468
//! ti = 7.22              # omit to disable integral action
//!
//! [profile]
//! setpoint = 0:20, 1:60  # piecewise-constant, t:value pairs
//!
//! [run]
//! duration = 120
//! ```

use crate::controller::{AntiWindup, PidConfig};
use crate::error::{Error, Result, ScenarioError};
use crate::plant::{FlowPlantParams, PlantModel, TankParams, ValveChar};
use crate::simloop::{LoopScenario, Schedule};
use std::collections::BTreeMap;
use std::fmt::Write as _;

const SECTIONS: [&str; 4] = ["plant", "controller", "profile", "run"];

/// Default disturbance profile for a plant: a pulse of minus 10% of the
/// actuator's full-scale effect, applied from t = 60 s to t = 70 s.
pub(crate) fn default_disturbance(plant: &PlantModel) -> Schedule {
    let amplitude = match plant {
        PlantModel::Tank(p) => -10.0 * p.pump_gain,
        PlantModel::Flow(_) => -0.1,
    };
    Schedule::new(vec![(0.0, 0.0), (60.0, amplitude), (70.0, 0.0)]).unwrap()
}

struct FileMap {
    entries: BTreeMap<(String, String), (usize, String)>,
    present: Vec<String>,
}

impl FileMap {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn has_section(&self, section: &str) -> bool {
        self.present.iter().any(|s| s == section)
    }

    /// Lowest-line leftover entry, if any key was never consumed.
    fn first_unused(&self) -> Option<(usize, String, String)> {
        self.entries
            .iter()
            .min_by_key(|(_, (line, _))| *line)
            .map(|((section, key), (line, _))| (*line, section.clone(), key.clone()))
    }
}

fn scan(text: &str) -> Result<FileMap> {
    let mut entries = BTreeMap::new();
    let mut present: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                return Err(ScenarioError::Syntax { line: line_no, text: line.to_string() }.into());
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ScenarioError::UnknownSection { line: line_no, section: name }.into());
            }
            if !present.contains(&name) {
                present.push(name.clone());
            }
            current = Some(name);
            continue;
        }
        let Some((key_raw, value_raw)) = line.split_once('=') else {
            return Err(ScenarioError::Syntax { line: line_no, text: line.to_string() }.into());
        };
        let key = key_raw.trim().to_string();
        let value = value_raw.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ScenarioError::Syntax { line: line_no, text: line.to_string() }.into());
        }
        let Some(section) = current.clone() else {
            return Err(ScenarioError::KeyOutsideSection { line: line_no, key }.into());
        };
        if entries.contains_key(&(section.clone(), key.clone())) {
            return Err(ScenarioError::DuplicateKey { line: line_no, section, key }.into());
        }
        entries.insert((section, key), (line_no, value));
    }
    Ok(FileMap { entries, present })
}

fn bad(line: usize, key: &str, detail: impl Into<String>) -> Error {
    ScenarioError::BadValue { line, key: key.to_string(), detail: detail.into() }.into()
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| bad(line, key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(bad(line, key, format!("`{v}` is not finite")));
    }
    Ok(x)
}

fn parse_u64(line: usize, key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| bad(line, key, format!("`{v}` is not a nonnegative integer")))
}

fn parse_u32(line: usize, key: &str, v: &str) -> Result<u32> {
    v.parse().map_err(|_| bad(line, key, format!("`{v}` is not a nonnegative integer")))
}

/// Comma-separated `t:value` breakpoints, e.g. `0:20, 1:60`.
fn parse_schedule(line: usize, key: &str, v: &str) -> Result<Schedule> {
    let mut points = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        let Some((t, val)) = part.split_once(':') else {
            return Err(bad(line, key, format!("`{part}` is not a `t:value` pair")));
        };
        points.push((parse_f64(line, key, t.trim())?, parse_f64(line, key, val.trim())?));
    }
    Schedule::new(points).map_err(|e| bad(line, key, e.to_string()))
}

macro_rules! take_or {
    ($map:expr, $sec:expr, $key:expr, $parse:ident, $default:expr) => {
        match $map.take($sec, $key) {
            Some((line, v)) => $parse(line, $key, &v)?,
            None => $default,
        }
    };
}

fn parse_plant(map: &mut FileMap) -> Result<PlantModel> {
    if !map.has_section("plant") {
        return Err(ScenarioError::MissingSection { section: "plant".into() }.into());
    }
    let Some((kind_line, kind)) = map.take("plant", "kind") else {
        return Err(ScenarioError::MissingKey { section: "plant".into(), key: "kind".into() }.into());
    };
    let plant = match kind.as_str() {
        "tank" => {
            let d = TankParams::default();
            PlantModel::Tank(TankParams {
                area_1: take_or!(map, "plant", "area_1", parse_f64, d.area_1),
                area_2: take_or!(map, "plant", "area_2", parse_f64, d.area_2),
                coeff_12: take_or!(map, "plant", "coeff_12", parse_f64, d.coeff_12),
                coeff_out: take_or!(map, "plant", "coeff_out", parse_f64, d.coeff_out),
                h_max: take_or!(map, "plant", "h_max", parse_f64, d.h_max),
                pump_gain: take_or!(map, "plant", "pump_gain", parse_f64, d.pump_gain),
                pump_tau: take_or!(map, "plant", "pump_tau", parse_f64, d.pump_tau),
                span: take_or!(map, "plant", "span", parse_f64, d.span),
            })
        }
        "pump-flow" => {
            let d = FlowPlantParams::pump();
            PlantModel::Flow(FlowPlantParams {
                q_max: take_or!(map, "plant", "q_max", parse_f64, d.q_max),
                actuator_tau: take_or!(map, "plant", "actuator_tau", parse_f64, d.actuator_tau),
                span: take_or!(map, "plant", "span", parse_f64, d.span),
                ..d
            })
        }
        "valve-flow" => {
            let d = FlowPlantParams::valve();
            let rangeability = take_or!(map, "plant", "rangeability", parse_f64, 30.0);
            PlantModel::Flow(FlowPlantParams {
                q_max: take_or!(map, "plant", "q_max", parse_f64, d.q_max),
                actuator_tau: take_or!(map, "plant", "actuator_tau", parse_f64, d.actuator_tau),
                span: take_or!(map, "plant", "span", parse_f64, d.span),
                valve_char: ValveChar::EqualPercentage { rangeability },
                ..d
            })
        }
        other => {
            return Err(bad(kind_line, "kind", format!("`{other}` is not one of tank, pump-flow, valve-flow")));
        }
    };
    plant.validate()?;
    Ok(plant)
}

fn parse_controller(map: &mut FileMap) -> Result<PidConfig> {
    if !map.has_section("controller") {
        return Err(ScenarioError::MissingSection { section: "controller".into() }.into());
    }
    let Some((kp_line, kp_text)) = map.take("controller", "kp") else {
        return Err(ScenarioError::MissingKey { section: "controller".into(), key: "kp".into() }.into());
    };
    let ti = match map.take("controller", "ti") {
        Some((line, v)) => Some(parse_f64(line, "ti", &v)?),
        None => None,
    };
    let anti_windup = match map.take("controller", "anti_windup") {
        Some((line, v)) => match v.as_str() {
            "conditional" => AntiWindup::Conditional,
            "back-calculation" => AntiWindup::BackCalculation,
            "off" => AntiWindup::Off,
            other => {
                return Err(bad(line, "anti_windup", format!("`{other}` is not one of conditional, back-calculation, off")));
            }
        },
        None => AntiWindup::Conditional,
    };
    let cfg = PidConfig {
        kp: parse_f64(kp_line, "kp", &kp_text)?,
        ti,
        td: take_or!(map, "controller", "td", parse_f64, 0.0),
        deriv_delay_coeff: take_or!(map, "controller", "a", parse_f64, 0.1),
        beta: take_or!(map, "controller", "beta", parse_f64, 1.0),
        alpha: take_or!(map, "controller", "alpha", parse_f64, 0.0),
        ts: take_or!(map, "controller", "ts", parse_f64, 0.1),
        u_min: take_or!(map, "controller", "u_min", parse_f64, 0.0),
        u_max: take_or!(map, "controller", "u_max", parse_f64, 100.0),
        anti_windup,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses scenario text into a runnable [`LoopScenario`], filling
/// documented defaults for everything the file leaves out. The initial
/// plant state is the rest state at `init_pv` (default: the setpoint at
/// t = 0).
pub fn parse_scenario(text: &str) -> Result<LoopScenario> {
    let mut map = scan(text)?;
    let plant = parse_plant(&mut map)?;
    let controller = parse_controller(&mut map)?;

    let setpoint = match map.take("profile", "setpoint") {
        Some((line, v)) => parse_schedule(line, "setpoint", &v)?,
        None => Schedule::new(vec![(0.0, 20.0), (1.0, 60.0)]).unwrap(),
    };
    let disturbance = match map.take("profile", "disturbance") {
        Some((line, v)) => parse_schedule(line, "disturbance", &v)?,
        None => default_disturbance(&plant),
    };
    let noise_std = take_or!(map, "profile", "noise_std", parse_f64, 0.0);

    let duration = take_or!(map, "run", "duration", parse_f64, 120.0);
    let seed = take_or!(map, "run", "seed", parse_u64, 0);
    let substeps_per_sample = take_or!(map, "run", "substeps", parse_u32, 10);
    let init_pv = take_or!(map, "run", "init_pv", parse_f64, setpoint.value_at(0.0));

    if let Some((line, section, key)) = map.first_unused() {
        return Err(ScenarioError::UnknownKey { line, section, key }.into());
    }

    let (init, _) = plant.equilibrium_from_pv(init_pv)?;
    let scenario = LoopScenario {
        plant,
        init,
        controller,
        setpoint,
        disturbance,
        noise_std,
        duration,
        seed,
        substeps_per_sample,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn fmt_schedule(s: &Schedule) -> String {
    s.points()
        .iter()
        .map(|(t, v)| format!("{t}:{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Finds a percent level whose rest state reproduces `scenario.init`
/// bit-for-bit, scanning a few ulps around the nominal back-computed
/// value to absorb rounding in the percent conversion.
fn recover_init_pv(scenario: &LoopScenario) -> Result<f64> {
    let clean = scenario.plant.clean_pv(&scenario.init)?;
    let nominal = 100.0 * clean / scenario.plant.span();
    let nudge = |v: f64, steps: i64| f64::from_bits((v.to_bits() as i64 + steps) as u64);
    for steps in [0, 1, -1, 2, -2] {
        let pv = nudge(nominal, steps);
        if let Ok((state, _)) = scenario.plant.equilibrium_from_pv(pv) {
            if state == scenario.init {
                return Ok(pv);
            }
        }
    }
    Err(Error::Config(
        "initial state is not a rest state expressible as init_pv; scenario files describe runs starting at rest"
            .into(),
    ))
}

/// Renders a scenario as text that [`parse_scenario`] maps back to an
/// equal value. Fails if the initial state is not a rest state, since the
/// file format only records the starting level.
pub fn render_scenario(scenario: &LoopScenario) -> Result<String> {
    scenario.validate()?;
    let init_pv = recover_init_pv(scenario)?;
    let mut out = String::new();
    out.push_str("[plant]\n");
    match &scenario.plant {
        PlantModel::Tank(p) => {
            writeln!(out, "kind = tank").unwrap();
            writeln!(out, "area_1 = {}", p.area_1).unwrap();
            writeln!(out, "area_2 = {}", p.area_2).unwrap();
            writeln!(out, "coeff_12 = {}", p.coeff_12).unwrap();
            writeln!(out, "coeff_out = {}", p.coeff_out).unwrap();
            writeln!(out, "h_max = {}", p.h_max).unwrap();
            writeln!(out, "pump_gain = {}", p.pump_gain).unwrap();
            writeln!(out, "pump_tau = {}", p.pump_tau).unwrap();
            writeln!(out, "span = {}", p.span).unwrap();
        }
        PlantModel::Flow(p) => {
            match p.valve_char {
                ValveChar::Linear => writeln!(out, "kind = pump-flow").unwrap(),
                ValveChar::EqualPercentage { rangeability } => {
                    writeln!(out, "kind = valve-flow").unwrap();
                    writeln!(out, "rangeability = {rangeability}").unwrap();
                }
            }
            writeln!(out, "q_max = {}", p.q_max).unwrap();
            writeln!(out, "actuator_tau = {}", p.actuator_tau).unwrap();
            writeln!(out, "span = {}", p.span).unwrap();
        }
    }
    let c = &scenario.controller;
    out.push_str("\n[controller]\n");
    writeln!(out, "kp = {}", c.kp).unwrap();
    if let Some(ti) = c.ti {
        writeln!(out, "ti = {ti}").unwrap();
    }
    writeln!(out, "td = {}", c.td).unwrap();
    writeln!(out, "a = {}", c.deriv_delay_coeff).unwrap();
    writeln!(out, "beta = {}", c.beta).unwrap();
    writeln!(out, "alpha = {}", c.alpha).unwrap();
    writeln!(out, "ts = {}", c.ts).unwrap();
    writeln!(out, "u_min = {}", c.u_min).unwrap();
    writeln!(out, "u_max = {}", c.u_max).unwrap();
    let aw = match c.anti_windup {
        AntiWindup::Conditional => "conditional",
        AntiWindup::BackCalculation => "back-calculation",
        AntiWindup::Off => "off",
    };
    writeln!(out, "anti_windup = {aw}").unwrap();

    out.push_str("\n[profile]\n");
    writeln!(out, "setpoint = {}", fmt_schedule(&scenario.setpoint)).unwrap();
    writeln!(out, "disturbance = {}", fmt_schedule(&scenario.disturbance)).unwrap();
    writeln!(out, "noise_std = {}", scenario.noise_std).unwrap();

    out.push_str("\n[run]\n");
    writeln!(out, "duration = {}", scenario.duration).unwrap();
    writeln!(out, "seed = {}", scenario.seed).unwrap();
    writeln!(out, "substeps = {}", scenario.substeps_per_sample).unwrap();
    writeln!(out, "init_pv = {init_pv}").unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::builtin_scenarios;
    use proptest::prelude::*;

    const MINIMAL: &str = "[plant]\nkind = tank\n\n[controller]\nkp = 124.468\nti = 7.22\n";

    #[test]
    fn minimal_file_fills_documented_defaults() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.duration, 120.0);
        assert_eq!(s.seed, 0);
        assert_eq!(s.substeps_per_sample, 10);
        assert_eq!(s.noise_std, 0.0);
        assert_eq!(s.setpoint.points(), &[(0.0, 20.0), (1.0, 60.0)]);
        assert_eq!(s.disturbance.points(), &[(0.0, 0.0), (60.0, -1.2e-5), (70.0, 0.0)]);
        assert_eq!(s.controller.beta, 1.0);
        assert_eq!(s.controller.ts, 0.1);
        assert_eq!(s.controller.anti_windup, AntiWindup::Conditional);
        // Starts at rest at the initial setpoint.
        let pv = 100.0 * s.plant.clean_pv(&s.init).unwrap() / s.plant.span();
        assert!((pv - 20.0).abs() < 1e-12);
    }

    #[test]
    fn negative_integral_time_reports_the_offending_parameter() {
        let text = MINIMAL.replace("ti = 7.22", "ti = -1");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("ti"), "message was: {err}");
    }

    #[test]
    fn unknown_key_reports_line_and_name() {
        let text = format!("{MINIMAL}wibble = 3\n");
        match parse_scenario(&text).unwrap_err() {
            Error::Scenario(ScenarioError::UnknownKey { line, section, key }) => {
                assert_eq!(line, 7);
                assert_eq!(section, "controller");
                assert_eq!(key, "wibble");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn keys_are_validated_per_plant_kind() {
        let text = "[plant]\nkind = tank\nrangeability = 30\n\n[controller]\nkp = 1\n";
        match parse_scenario(text).unwrap_err() {
            Error::Scenario(ScenarioError::UnknownKey { line, key, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(key, "rangeability");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn unknown_section_is_rejected_with_its_line() {
        match parse_scenario("[plannt]\nkind = tank\n").unwrap_err() {
            Error::Scenario(ScenarioError::UnknownSection { line, section }) => {
                assert_eq!(line, 1);
                assert_eq!(section, "plannt");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = format!("{MINIMAL}kp = 2\n");
        assert!(matches!(
            parse_scenario(&text).unwrap_err(),
            Error::Scenario(ScenarioError::DuplicateKey { key, .. }) if key == "kp"
        ));
    }

    #[test]
    fn key_before_any_section_is_rejected() {
        assert!(matches!(
            parse_scenario("kp = 1\n").unwrap_err(),
            Error::Scenario(ScenarioError::KeyOutsideSection { line: 1, .. })
        ));
    }

    #[test]
    fn missing_equals_is_a_syntax_error_with_line() {
        let text = "[plant]\nkind = tank\n\n[controller]\nkp 124\n";
        assert!(matches!(
            parse_scenario(text).unwrap_err(),
            Error::Scenario(ScenarioError::Syntax { line: 5, .. })
        ));
    }

    #[test]
    fn missing_sections_are_named() {
        assert!(matches!(
            parse_scenario("[controller]\nkp = 1\n").unwrap_err(),
            Error::Scenario(ScenarioError::MissingSection { section }) if section == "plant"
        ));
        assert!(matches!(
            parse_scenario("[plant]\nkind = tank\n").unwrap_err(),
            Error::Scenario(ScenarioError::MissingSection { section }) if section == "controller"
        ));
    }

    #[test]
    fn comments_and_whitespace_are_ignored() {
        let text = "# loop setup\n\n[plant]\n  kind = tank   # twin vessel rig\n\n[controller]\nkp = 5\nti = 3 # seconds\n";
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.controller.kp, 5.0);
        assert_eq!(s.controller.ti, Some(3.0));
    }

    #[test]
    fn schedule_syntax_errors_name_the_key() {
        let text = format!("{MINIMAL}\n[profile]\nsetpoint = 0:20, abc\n");
        match parse_scenario(&text).unwrap_err() {
            Error::Scenario(ScenarioError::BadValue { key, line, .. }) => {
                assert_eq!(key, "setpoint");
                assert_eq!(line, 9);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn flow_kinds_pick_their_characteristics() {
        let pump = parse_scenario("[plant]\nkind = pump-flow\n\n[controller]\nkp = 6.8\nti = 3.2\n").unwrap();
        assert_eq!(pump.plant, PlantModel::Flow(FlowPlantParams::pump()));

        let valve = parse_scenario("[plant]\nkind = valve-flow\n\n[controller]\nkp = 15\nti = 2.5\n").unwrap();
        assert_eq!(valve.plant, PlantModel::Flow(FlowPlantParams::valve()));
        assert_eq!(valve.disturbance.points(), &[(0.0, 0.0), (60.0, -0.1), (70.0, 0.0)]);
    }

    #[test]
    fn omitted_ti_disables_integral_action() {
        let s = parse_scenario("[plant]\nkind = tank\n\n[controller]\nkp = 40\n").unwrap();
        assert_eq!(s.controller.ti, None);
    }

    #[test]
    fn anti_windup_spellings_parse() {
        for (text, want) in [
            ("conditional", AntiWindup::Conditional),
            ("back-calculation", AntiWindup::BackCalculation),
            ("off", AntiWindup::Off),
        ] {
            let file = format!("{MINIMAL}anti_windup = {text}\n");
            assert_eq!(parse_scenario(&file).unwrap().controller.anti_windup, want);
        }
        let file = format!("{MINIMAL}anti_windup = sometimes\n");
        assert!(parse_scenario(&file).is_err());
    }

    #[test]
    fn every_builtin_round_trips_exactly() {
        for (name, scenario) in builtin_scenarios() {
            let text = render_scenario(&scenario).unwrap();
            let back = parse_scenario(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(back, scenario, "{name} did not round-trip");
        }
    }

    #[test]
    fn render_rejects_a_transient_initial_state() {
        let mut s = builtin_scenarios().remove(0).1;
        if let crate::plant::PlantState::Tank(ref mut t) = s.init {
            t.q_pump *= 2.0;
        }
        assert!(render_scenario(&s).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_rest_scenarios_round_trip(
            tank in proptest::bool::ANY,
            init_pv in 10.0f64..90.0,
            kp in 0.5f64..500.0,
            ti in 0.5f64..20.0,
            td in 0.0f64..2.0,
            beta in 0.0f64..1.0,
            noise in 0.0f64..2.0,
            seed in 0u64..1000,
            w1 in 5.0f64..95.0,
        ) {
            let plant = if tank {
                PlantModel::Tank(TankParams::default())
            } else {
                PlantModel::Flow(FlowPlantParams::valve())
            };
            let (init, _) = plant.equilibrium_from_pv(init_pv).unwrap();
            let disturbance = default_disturbance(&plant);
            let scenario = LoopScenario {
                plant,
                init,
                controller: PidConfig::pid(kp, ti, td, 0.1, beta, 0.0, 0.1),
                setpoint: Schedule::new(vec![(0.0, init_pv), (1.0, w1)]).unwrap(),
                disturbance,
                noise_std: noise,
                duration: 120.0,
                seed,
                substeps_per_sample: 10,
            };
            let text = render_scenario(&scenario).unwrap();
            let back = parse_scenario(&text).unwrap();
            prop_assert_eq!(back, scenario);
        }
    }
}
