//! Run configuration: TOML sections with defaults, whole-section replacement
//! from a user file and `section.key=value` overrides.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::params::{number, required, CouplingParams, LaserParams};
use crate::sim::{estimate_kappa, SystemParams};
use crate::thermal::{convert_mu, thermal_constants, ThermalMaterial, ThermalParams};

/// Defaults in config units. A section given in a user file replaces the
/// matching section here wholesale.
pub const DEFAULT_CONFIG: &str = r#"
[master]
tau_ph_ps = 1.0
tau_e_ns = 1.0
epsilon = 0.3
N_tr = 4.0e7
N_th = 5.5e7
C_sp = 1.0e-5
Gamma = 0.12
alpha = 5.0
chi_per_W = 30.0
lambda_nm = 1550.0

[slave]
tau_ph_ps = 1.0
tau_e_ns = 1.0
epsilon = 0.3
N_tr = 4.0e7
N_th = 5.5e7
C_sp = 1.0e-5
Gamma = 0.12
alpha = 5.0
chi_per_W = 30.0
lambda_nm = 1550.0

[coupling]
kappa_ex_per_s = 1.0e10
delta_omega_hz = 0.0

[thermal]
r_h_K_per_W = 10.0
tau_h_ns = 10.0
mu_omega_GHz_per_K = 10.0
I_b_mA = 0.0
T0_K = 293.15

[drive]
I_s_mA = 30.0
d_ns = 0.1
period_ns = 2.5
width_ns = 1.0
I_low_mA = 6.0
I_high_mA = 30.0
I_off_mA = 0.0

[run]
dt_ps = 0.05
warmup_ns = 2.0
record_stride = 20
pulses = 8
fig4_pulses = 28
fringe_points = 21
members = 50
coding_pulses = 22
kappa_list = [0.0, 1.0e9, 1.0e10, 1.0e11]
noise = false
thermal = false
"#;

const SECTIONS: [&str; 6] = ["master", "slave", "coupling", "thermal", "drive", "run"];

/// Slave pulse train and master drive settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSettings {
    pub i_s: f64,
    pub d: f64,
    pub period: f64,
    pub width: f64,
    pub i_low: f64,
    pub i_high: f64,
    /// Master current before switch-on in the turn-on scenario.
    pub i_off: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub dt: f64,
    pub warmup: f64,
    pub record_stride: usize,
    /// Slave pulses in trace scenarios.
    pub pulses: usize,
    pub fig4_pulses: usize,
    pub fringe_points: usize,
    /// Ensemble members per coupling value in the coding study.
    pub members: usize,
    /// Slave pulses per ensemble member.
    pub coding_pulses: usize,
    pub kappa_list: Vec<f64>,
    pub noise: bool,
    pub thermal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub master: LaserParams,
    pub slave: LaserParams,
    pub coupling: CouplingParams,
    pub thermal: ThermalParams,
    pub drive: DriveSettings,
    pub run: RunSettings,
}

impl Default for Config {
    fn default() -> Self {
        Config::from_table(&parse_table(DEFAULT_CONFIG).expect("default config parses"))
            .expect("default config is valid")
    }
}

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.message().trim().to_string()))
}

fn section<'a>(root: &'a toml::Table, name: &str) -> Result<&'a toml::Table> {
    match root.get(name) {
        Some(toml::Value::Table(t)) => Ok(t),
        Some(_) => Err(Error::Parse(format!("`{name}` must be a table"))),
        None => Err(Error::MissingKey(name.to_string())),
    }
}

fn reject_unknown(table: &toml::Table, allowed: &[&str]) -> Result<()> {
    match table.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::UnknownKey(k.clone())),
        None => Ok(()),
    }
}

fn positive(table: &toml::Table, key: &str) -> Result<f64> {
    let v = required(table, key)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::invalid(key, "must be finite and > 0"));
    }
    Ok(v)
}

fn non_negative(table: &toml::Table, key: &str) -> Result<f64> {
    let v = required(table, key)?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(key, "must be finite and >= 0"));
    }
    Ok(v)
}

fn count(table: &toml::Table, key: &str) -> Result<usize> {
    match table.get(key) {
        Some(toml::Value::Integer(i)) if *i >= 1 => Ok(*i as usize),
        Some(toml::Value::Integer(_)) => Err(Error::invalid(key, "must be >= 1")),
        Some(other) => Err(Error::NotNumeric {
            key: key.to_string(),
            value: other.to_string(),
        }),
        None => Err(Error::MissingKey(key.to_string())),
    }
}

fn flag(table: &toml::Table, key: &str) -> Result<bool> {
    match table.get(key) {
        Some(toml::Value::Boolean(b)) => Ok(*b),
        Some(other) => Err(Error::invalid(key, format!("expected true or false, got {other}"))),
        None => Err(Error::MissingKey(key.to_string())),
    }
}

fn coupling_from(t: &toml::Table) -> Result<CouplingParams> {
    reject_unknown(t, &["kappa_ex_per_s", "delta_omega_hz", "t_MS", "tau_L_ps"])?;
    let t_ms = number(t, "t_MS")?;
    let tau_l = number(t, "tau_L_ps")?.map(|v| v / 1e12);
    let kappa_ex = match (number(t, "kappa_ex_per_s")?, t_ms, tau_l) {
        (Some(k), _, _) => k,
        (None, Some(a), Some(b)) => estimate_kappa(a, b)?,
        _ => return Err(Error::MissingKey("kappa_ex_per_s".into())),
    };
    let c = CouplingParams {
        kappa_ex,
        delta_omega: TAU * required(t, "delta_omega_hz")?,
        t_ms,
        tau_l,
    };
    c.validate()?;
    Ok(c)
}

fn thermal_from(t: &toml::Table, master: &LaserParams) -> Result<ThermalParams> {
    reject_unknown(
        t,
        &[
            "r_h_K_per_W",
            "tau_h_ns",
            "mu_omega_GHz_per_K",
            "mu_lambda_nm_per_K",
            "I_b_mA",
            "T0_K",
            "k",
            "rho",
            "C_heat",
            "l_um",
            "L_um",
            "w_um",
        ],
    )?;
    let (r_h, tau_h) = if t.contains_key("k") {
        let m = ThermalMaterial {
            k: required(t, "k")?,
            rho: required(t, "rho")?,
            c_heat: required(t, "C_heat")?,
            l: required(t, "l_um")? / 1e6,
            length: required(t, "L_um")? / 1e6,
            width: required(t, "w_um")? / 1e6,
        };
        m.validate()?;
        let c = thermal_constants(&m);
        (c.r_h, c.tau_h)
    } else {
        (positive(t, "r_h_K_per_W")?, positive(t, "tau_h_ns")? / 1e9)
    };
    let mu_omega = match (number(t, "mu_omega_GHz_per_K")?, number(t, "mu_lambda_nm_per_K")?) {
        (Some(v), None) => TAU * v * 1e9,
        (None, Some(v)) => convert_mu(v / 1e9, master.lambda),
        (Some(_), Some(_)) => {
            return Err(Error::invalid("mu_lambda_nm_per_K", "give either mu_omega or mu_lambda, not both"))
        }
        (None, None) => return Err(Error::MissingKey("mu_omega_GHz_per_K".into())),
    };
    let tp = ThermalParams {
        r_h,
        tau_h,
        mu_omega,
        lambda: master.lambda,
        epsilon: master.epsilon,
        i_bias: required(t, "I_b_mA")? / 1e3,
        t0: required(t, "T0_K")?,
    };
    tp.validate()?;
    Ok(tp)
}

fn drive_from(t: &toml::Table) -> Result<DriveSettings> {
    reject_unknown(
        t,
        &["I_s_mA", "d_ns", "period_ns", "width_ns", "I_low_mA", "I_high_mA", "I_off_mA"],
    )?;
    let d = DriveSettings {
        i_s: non_negative(t, "I_s_mA")? / 1e3,
        d: positive(t, "d_ns")? / 1e9,
        period: positive(t, "period_ns")? / 1e9,
        width: positive(t, "width_ns")? / 1e9,
        i_low: non_negative(t, "I_low_mA")? / 1e3,
        i_high: non_negative(t, "I_high_mA")? / 1e3,
        i_off: non_negative(t, "I_off_mA")? / 1e3,
    };
    if d.width >= d.period {
        return Err(Error::invalid("width_ns", "must be shorter than period_ns"));
    }
    if d.i_low > d.i_high {
        return Err(Error::invalid("I_high_mA", "must not be below I_low_mA"));
    }
    Ok(d)
}

fn run_from(t: &toml::Table) -> Result<RunSettings> {
    reject_unknown(
        t,
        &[
            "dt_ps",
            "warmup_ns",
            "record_stride",
            "pulses",
            "fig4_pulses",
            "fringe_points",
            "members",
            "coding_pulses",
            "kappa_list",
            "noise",
            "thermal",
        ],
    )?;
    let kappa_list = match t.get("kappa_list") {
        Some(toml::Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                toml::Value::Float(f) => Ok(*f),
                toml::Value::Integer(i) => Ok(*i as f64),
                other => Err(Error::NotNumeric {
                    key: "kappa_list".into(),
                    value: other.to_string(),
                }),
            })
            .collect::<Result<Vec<f64>>>()?,
        Some(other) => {
            return Err(Error::invalid("kappa_list", format!("expected an array, got {other}")))
        }
        None => return Err(Error::MissingKey("kappa_list".into())),
    };
    if kappa_list.is_empty() || kappa_list.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return Err(Error::invalid("kappa_list", "needs at least one finite value >= 0"));
    }
    let r = RunSettings {
        dt: positive(t, "dt_ps")? / 1e12,
        warmup: non_negative(t, "warmup_ns")? / 1e9,
        record_stride: count(t, "record_stride")?,
        pulses: count(t, "pulses")?,
        fig4_pulses: count(t, "fig4_pulses")?,
        fringe_points: count(t, "fringe_points")?,
        members: count(t, "members")?,
        coding_pulses: count(t, "coding_pulses")?,
        kappa_list,
        noise: flag(t, "noise")?,
        thermal: flag(t, "thermal")?,
    };
    if r.coding_pulses < 3 {
        return Err(Error::invalid("coding_pulses", "must be >= 3"));
    }
    if r.pulses < 2 || r.fig4_pulses < 2 {
        return Err(Error::invalid("pulses", "must be >= 2"));
    }
    if r.fringe_points < 2 {
        return Err(Error::invalid("fringe_points", "must be >= 2"));
    }
    Ok(r)
}

impl Config {
    /// Parse a fully populated table (all six sections).
    pub fn from_table(root: &toml::Table) -> Result<Self> {
        reject_unknown(root, &SECTIONS)?;
        let master = LaserParams::from_table(section(root, "master")?)?;
        let slave = LaserParams::from_table(section(root, "slave")?)?;
        Ok(Config {
            coupling: coupling_from(section(root, "coupling")?)?,
            thermal: thermal_from(section(root, "thermal")?, &master)?,
            drive: drive_from(section(root, "drive")?)?,
            run: run_from(section(root, "run")?)?,
            master,
            slave,
        })
    }

    /// Defaults, then the sections of `user_text`, then `overrides`
    /// (`section.key=value`, value in TOML syntax).
    pub fn load(user_text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut root = parse_table(DEFAULT_CONFIG)?;
        if let Some(text) = user_text {
            let user = parse_table(text)?;
            for (name, value) in user {
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(Error::UnknownKey(name));
                }
                if !value.is_table() {
                    return Err(Error::Parse(format!("`{name}` must be a table")));
                }
                root.insert(name, value);
            }
        }
        for o in overrides {
            apply_override(&mut root, o)?;
        }
        Config::from_table(&root)
    }

    pub fn system(&self, thermal: bool) -> SystemParams {
        SystemParams {
            master: self.master,
            slave: self.slave,
            coupling: self.coupling,
            thermal: thermal.then_some(self.thermal),
        }
    }
}

/// Apply one `section.key=value` override to a raw config table.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{spec}` is not of the form section.key=value")))?;
    let (sec, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Parse(format!("override key `{path}` needs a section, e.g. master.alpha")))?;
    if !SECTIONS.contains(&sec) {
        return Err(Error::UnknownKey(sec.to_string()));
    }
    let value = parse_table(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let table = root
        .entry(sec.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match table {
        toml::Value::Table(t) => {
            t.insert(key.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Parse(format!("`{sec}` must be a table"))),
    }
}

/// Full `section.key` name for a config key. A bare name resolves when exactly
/// one default key equals it or extends it with a unit suffix
/// (`kappa_ex` finds `coupling.kappa_ex_per_s`).
pub fn resolve_key(name: &str) -> Result<String> {
    let root = parse_table(DEFAULT_CONFIG)?;
    if let Some((sec, key)) = name.split_once('.') {
        return match root.get(sec).and_then(|s| s.as_table()) {
            Some(t) if t.contains_key(key) => Ok(name.to_string()),
            _ => Err(Error::UnknownKey(name.to_string())),
        };
    }
    let prefix = format!("{name}_");
    let mut hits = Vec::new();
    for sec in SECTIONS {
        if let Some(t) = root.get(sec).and_then(|s| s.as_table()) {
            for key in t.keys() {
                if key == name || key.starts_with(&prefix) {
                    hits.push(format!("{sec}.{key}"));
                }
            }
        }
    }
    match hits.len() {
        1 => Ok(hits.pop().unwrap_or_default()),
        0 => Err(Error::UnknownKey(name.to_string())),
        _ => Err(Error::invalid(name, format!("ambiguous, one of: {}", hits.join(", ")))),
    }
}
