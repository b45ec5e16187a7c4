//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments and blank lines are ignored
//! scenario.family = steepening
//! scenario.a = auto
//! model.gamma = 0.5
//! sim.n = 512
//! criteria.eps = 0.1, 1, 10
//! ```
//!
//! Every key must be consumed by the scenario it describes; a misspelt or
//! inapplicable key is an error naming that key.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::str::FromStr;

use crate::characteristics::DEFAULT_SEEDS;
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::model::ModelParams;
use crate::scenario::{build_initial_data, Amplitude, Family, Scenario};
use crate::timestepper::SimConfig;

const DEFAULT_FACTOR: f64 = 1.05;

fn config_error(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

/// Raw key/value pairs, kept sorted so rendering is deterministic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_error(
                    format!("line {}", i + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(config_error(format!("line {}", i + 1), "empty key"));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(config_error(key, "given more than once"));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Interprets the configuration, filling defaults, and checks that the
    /// initial data can be built.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let r = Reader {
            cfg: self,
            used: RefCell::new(BTreeSet::new()),
        };
        let sc = read_scenario(&r)?;
        let used = r.used.into_inner();
        if let Some(key) = self.entries.keys().find(|k| !used.contains(*k)) {
            return Err(config_error(
                key.clone(),
                format!("unknown key, or not used by family `{}`", sc.family.id()),
            ));
        }
        check_buildable(&sc)?;
        Ok(sc)
    }
}

struct Reader<'a> {
    cfg: &'a Config,
    used: RefCell<BTreeSet<String>>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.cfg.get(key);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn parse<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| config_error(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn real(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parse(key, default)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(config_error(key, "must be finite"))
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let Some(v) = self.raw(key) else {
            return Ok(default.to_vec());
        };
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|item| {
                let item = item.trim();
                match item.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(config_error(key, format!("`{item}` is not a finite number"))),
                }
            })
            .collect()
    }

    fn amplitude(&self) -> Result<Amplitude> {
        match self.raw("scenario.a") {
            None | Some("auto") => {
                let factor = self.real("scenario.factor", DEFAULT_FACTOR)?;
                if !(factor > 1.0) {
                    return Err(config_error("scenario.factor", "must exceed 1"));
                }
                Ok(Amplitude::Auto { factor })
            }
            Some(_) => Ok(Amplitude::Fixed(self.real("scenario.a", 0.0)?)),
        }
    }
}

fn read_scenario(r: &Reader) -> Result<Scenario> {
    let family_id = r
        .raw("scenario.family")
        .ok_or_else(|| config_error("scenario.family", "missing"))?;
    let family = match family_id {
        "constant" => Family::Constant {
            u: r.real("scenario.c", 0.0)?,
            rho: r.real("scenario.r", 1.0)?,
        },
        "steepening" => Family::Steepening {
            a: r.amplitude()?,
            b: r.real("scenario.b", 1.0)?,
        },
        "positive-density" => {
            let r0 = r.real("scenario.r0", 2.0)?;
            if !(r0 > 1.0) {
                return Err(config_error("scenario.r0", format!("must exceed 1, got {r0}")));
            }
            Family::PositiveDensity {
                r0,
                ru: r.real("scenario.ru", 0.5)?,
            }
        }
        "zero-mean" => Family::ZeroMean {
            a: r.amplitude()?,
            b: r.real("scenario.b", 1.0)?,
        },
        "custom-fourier" => Family::CustomFourier {
            u_cos: r.list("scenario.u_cos", &[])?,
            u_sin: r.list("scenario.u_sin", &[])?,
            rho_cos: r.list("scenario.rho_cos", &[])?,
            rho_sin: r.list("scenario.rho_sin", &[])?,
        },
        other => return Err(config_error("scenario.family", format!("unknown family `{other}`"))),
    };
    let name = r.raw("scenario.name").unwrap_or(family.id()).to_string();
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(config_error("scenario.name", "must be non-empty and contain no path separators"));
    }

    let shear = r.real("model.shear", 1.0)?;
    let gamma = r.real("model.gamma", 0.5)?;
    let allow = r.parse("model.allow_nonpositive_shear", false)?;
    let params = ModelParams::with_override(shear, gamma, allow)
        .map_err(|e| config_error("model.shear", e.to_string()))?;

    let d = SimConfig::default();
    let sim = SimConfig {
        n: r.parse("sim.n", d.n)?,
        t_end: r.real("sim.t_end", d.t_end)?,
        cfl: r.real("sim.cfl", d.cfl)?,
        slope_dt_factor: r.real("sim.slope_dt_factor", d.slope_dt_factor)?,
        dt_min: r.real("sim.dt_min", d.dt_min)?,
        blowup_slope: r.real("sim.blowup_slope", d.blowup_slope)?,
        resolution_tol: r.real("sim.resolution_tol", d.resolution_tol)?,
        record_every: r.parse("sim.record_every", d.record_every)?,
        snapshot_times: r.list("sim.snapshot_times", &[])?,
    };
    sim.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => config_error(format!("sim.{name}"), reason),
        other => other,
    })?;
    PeriodicGrid::new(sim.n).map_err(|e| config_error("sim.n", e.to_string()))?;

    let eps_list = r.list("criteria.eps", &[0.1, 1.0, 10.0])?;
    if let Some(eps) = eps_list.iter().find(|e| !(**e > 0.0)) {
        return Err(config_error("criteria.eps", format!("{eps} is not positive")));
    }

    Ok(Scenario {
        name,
        family,
        params,
        sim,
        eps_list,
        characteristics: r.parse("scenario.characteristics", false)?,
        seeds: r.parse("scenario.seeds", DEFAULT_SEEDS)?,
    })
}

fn check_buildable(sc: &Scenario) -> Result<()> {
    if sc.characteristics && sc.seeds == 0 {
        return Err(config_error("scenario.seeds", "must be at least 1"));
    }
    let grid = PeriodicGrid::new(sc.sim.n)?;
    build_initial_data(&sc.family, &grid, &sc.params).map_err(|e| match e {
        Error::InvalidParameter { name, reason } => config_error(format!("scenario.{name}"), reason),
        other => other,
    })?;
    Ok(())
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// The fully resolved configuration of `sc`; parsing it gives back `sc`.
pub fn scenario_config(sc: &Scenario) -> Config {
    let mut c = Config::default();
    c.set("scenario.name", sc.name.clone());
    c.set("scenario.family", sc.family.id());
    let amplitude = |c: &mut Config, a: &Amplitude| match a {
        Amplitude::Fixed(a) => c.set("scenario.a", a.to_string()),
        Amplitude::Auto { factor } => {
            c.set("scenario.a", "auto");
            c.set("scenario.factor", factor.to_string());
        }
    };
    match &sc.family {
        Family::Constant { u, rho } => {
            c.set("scenario.c", u.to_string());
            c.set("scenario.r", rho.to_string());
        }
        Family::Steepening { a, b } | Family::ZeroMean { a, b } => {
            amplitude(&mut c, a);
            c.set("scenario.b", b.to_string());
        }
        Family::PositiveDensity { r0, ru } => {
            c.set("scenario.r0", r0.to_string());
            c.set("scenario.ru", ru.to_string());
        }
        Family::CustomFourier {
            u_cos,
            u_sin,
            rho_cos,
            rho_sin,
        } => {
            c.set("scenario.u_cos", join(u_cos));
            c.set("scenario.u_sin", join(u_sin));
            c.set("scenario.rho_cos", join(rho_cos));
            c.set("scenario.rho_sin", join(rho_sin));
        }
    }
    c.set("scenario.characteristics", sc.characteristics.to_string());
    c.set("scenario.seeds", sc.seeds.to_string());
    c.set("model.shear", sc.params.shear.to_string());
    c.set("model.gamma", sc.params.gamma.to_string());
    if !(sc.params.shear > 0.0) {
        c.set("model.allow_nonpositive_shear", "true");
    }
    let s = &sc.sim;
    c.set("sim.n", s.n.to_string());
    c.set("sim.t_end", s.t_end.to_string());
    c.set("sim.cfl", s.cfl.to_string());
    c.set("sim.slope_dt_factor", s.slope_dt_factor.to_string());
    c.set("sim.dt_min", s.dt_min.to_string());
    c.set("sim.blowup_slope", s.blowup_slope.to_string());
    c.set("sim.resolution_tol", s.resolution_tol.to_string());
    c.set("sim.record_every", s.record_every.to_string());
    c.set("sim.snapshot_times", join(&s.snapshot_times));
    c.set("criteria.eps", join(&sc.eps_list));
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn defaults() {
        let sc = Config::parse("scenario.family = steepening\n").unwrap().to_scenario().unwrap();
        assert_eq!(sc.name, "steepening");
        assert_eq!(sc.family, Family::Steepening { a: Amplitude::Auto { factor: 1.05 }, b: 1.0 });
        assert_eq!(sc.params, ModelParams::new(1.0, 0.5).unwrap());
        assert_eq!(sc.sim, SimConfig::default());
        assert_eq!(sc.eps_list, vec![0.1, 1.0, 10.0]);
    }

    #[test]
    fn full_file() {
        let text = "# preset\nscenario.family = custom-fourier\nscenario.u_cos = 0, 1\n\
                    scenario.rho_sin = 0.5 # trailing comment\nsim.n = 64\nsim.snapshot_times = 0.5, 1\n\
                    criteria.eps = 2\nscenario.characteristics = true\n";
        let sc = Config::parse(text).unwrap().to_scenario().unwrap();
        assert_eq!(sc.sim.n, 64);
        assert_eq!(sc.sim.snapshot_times, vec![0.5, 1.0]);
        assert_eq!(sc.eps_list, vec![2.0]);
        assert!(sc.characteristics);
        let Family::CustomFourier { u_cos, rho_sin, u_sin, .. } = sc.family else { panic!() };
        assert_eq!(u_cos, vec![0.0, 1.0]);
        assert_eq!(rho_sin, vec![0.5]);
        assert!(u_sin.is_empty());
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("scenario.family = steepening\nsim.nn = 3\n", "sim.nn"),
            ("scenario.family = steepening\nsim.n = abc\n", "sim.n"),
            ("scenario.family = steepening\nsim.n = 7\n", "sim.n"),
            ("scenario.family = steepening\nsim.cfl = 2\n", "sim.cfl"),
            ("scenario.family = steepening\nscenario.r0 = 2\n", "scenario.r0"),
            ("scenario.family = positive-density\nscenario.r0 = 0.5\n", "scenario.r0"),
            ("scenario.family = bogus\n", "scenario.family"),
            ("sim.n = 64\n", "scenario.family"),
            ("scenario.family = steepening\nscenario.b = nan\n", "scenario.b"),
            ("scenario.family = steepening\ncriteria.eps = 1, x\n", "criteria.eps"),
            ("scenario.family = steepening\ncriteria.eps = -1\n", "criteria.eps"),
            ("scenario.family = steepening\nmodel.shear = 0\n", "model.shear"),
            ("scenario.family = steepening\nscenario.a = 2\nscenario.factor = 2\n", "scenario.factor"),
            ("scenario.family = steepening\nscenario.a = auto\nscenario.factor = 0.5\n", "scenario.factor"),
            ("scenario.family = zero-mean\nmodel.gamma = 1\nscenario.b = 0\n", "scenario.a"),
            ("scenario.family = steepening\nmodel.allow_nonpositive_shear = maybe\n", "model.allow_nonpositive_shear"),
        ];
        for (text, key) in cases {
            let err = Config::parse(text).and_then(|c| c.to_scenario()).unwrap_err();
            assert_eq!(key_of(err), key, "{text}");
        }
    }

    #[test]
    fn syntax_errors() {
        assert_eq!(key_of(Config::parse("just words\n").unwrap_err()), "line 1");
        assert_eq!(key_of(Config::parse("a = 1\na = 2\n").unwrap_err()), "a");
        assert_eq!(key_of(Config::parse("\n = 1\n").unwrap_err()), "line 2");
    }

    #[test]
    fn nonpositive_shear_needs_override() {
        let text = "scenario.family = constant\nmodel.shear = -1\nmodel.allow_nonpositive_shear = true\n";
        let sc = Config::parse(text).unwrap().to_scenario().unwrap();
        assert_eq!(sc.params.shear, -1.0);
    }

    #[test]
    fn render_round_trips() {
        for text in [
            "scenario.family = steepening\nscenario.a = 1.25\nsim.n = 64\n",
            "scenario.family = zero-mean\nsim.snapshot_times = 0.1, 0.2\n",
            "scenario.family = positive-density\nscenario.characteristics = true\n",
            "scenario.family = constant\nscenario.c = 0.1\nmodel.shear = -2\nmodel.allow_nonpositive_shear = true\n",
            "scenario.family = custom-fourier\nscenario.u_cos = 0.1, 0.30000000000000004\n",
        ] {
            let sc = Config::parse(text).unwrap().to_scenario().unwrap();
            let again = Config::parse(&scenario_config(&sc).render()).unwrap().to_scenario().unwrap();
            assert_eq!(sc, again);
        }
    }
}
