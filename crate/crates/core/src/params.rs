//! Device parameters, physical constants and the small unit conversions shared
//! by every other module.
//!
//! Everything in here is strict SI: seconds, amperes, watts, kelvin, radians and
//! bare photon/carrier counts. Human-facing units (ps, ns, mA, nm) only appear
//! in config key names and are converted on the way in.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Elementary charge [C].
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const C_LIGHT: f64 = 2.997_924_58e8;

/// Per-laser device constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    /// Photon lifetime [s].
    pub tau_ph: f64,
    /// Effective electron lifetime [s].
    pub tau_e: f64,
    /// Differential quantum output.
    pub epsilon: f64,
    /// Carrier number at transparency.
    pub n_tr: f64,
    /// Carrier number at threshold.
    pub n_th: f64,
    /// Fraction of spontaneous emission coupled into the lasing mode.
    pub c_sp: f64,
    /// Confinement factor.
    pub gamma: f64,
    /// Linewidth enhancement (Henry) factor.
    pub alpha: f64,
    /// Gain compression factor [1/W].
    pub chi: f64,
    /// Lasing wavelength [m]. The optical frequency is always derived from this.
    pub lambda: f64,
    /// Active-region volume [m^3], only needed for the photon-density form of chi.
    pub v_active: Option<f64>,
}

impl LaserParams {
    /// The reference device used for both lasers in all preset scenarios,
    /// at a 1550 nm lasing wavelength.
    pub fn reference_device() -> Self {
        LaserParams {
            tau_ph: 1.0e-12,
            tau_e: 1.0e-9,
            epsilon: 0.3,
            n_tr: 4.0e7,
            n_th: 5.5e7,
            c_sp: 1.0e-5,
            gamma: 0.12,
            alpha: 5.0,
            chi: 30.0,
            lambda: 1550.0e-9,
            v_active: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("tau_ph_ps", self.tau_ph),
            ("tau_e_ns", self.tau_e),
            ("epsilon", self.epsilon),
            ("N_tr", self.n_tr),
            ("N_th", self.n_th),
            ("C_sp", self.c_sp),
            ("Gamma", self.gamma),
            ("alpha", self.alpha),
            ("chi_per_W", self.chi),
            ("lambda_nm", self.lambda),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(key, "must be finite"));
            }
        }
        if self.tau_ph <= 0.0 {
            return Err(Error::invalid("tau_ph_ps", "lifetime must be > 0"));
        }
        if self.tau_e <= 0.0 {
            return Err(Error::invalid("tau_e_ns", "lifetime must be > 0"));
        }
        if self.n_tr < 0.0 {
            return Err(Error::invalid("N_tr", "must be >= 0"));
        }
        if self.n_th <= self.n_tr {
            return Err(Error::invalid("N_th", "must exceed N_tr"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("Gamma", "must lie in (0, 1]"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::invalid("epsilon", "must lie in (0, 1]"));
        }
        if self.chi < 0.0 {
            return Err(Error::invalid("chi_per_W", "must be >= 0"));
        }
        if self.c_sp < 0.0 {
            return Err(Error::invalid("C_sp", "must be >= 0"));
        }
        if self.lambda <= 0.0 {
            return Err(Error::invalid("lambda_nm", "must be > 0"));
        }
        if let Some(v) = self.v_active {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("V_active_m3", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Central angular frequency 2*pi*c/lambda [rad/s].
    pub fn omega0(&self) -> f64 {
        2.0 * PI * C_LIGHT / self.lambda
    }

    /// Photon energy hbar*omega0 [J].
    pub fn photon_energy(&self) -> f64 {
        HBAR * self.omega0()
    }

    /// Output power carried per intracavity photon [W].
    pub fn watts_per_photon(&self) -> f64 {
        self.epsilon * self.photon_energy() / (2.0 * self.gamma * self.tau_ph)
    }

    /// Dimensionless compression factor acting on the photon number.
    pub fn chi_q(&self) -> f64 {
        self.chi * self.watts_per_photon()
    }

    pub fn threshold_current(&self) -> f64 {
        threshold_current(self)
    }

    pub fn transparency_current(&self) -> f64 {
        transparency_current(self)
    }

    /// Linear gain (N - N_tr)/(N_th - N_tr).
    #[inline]
    pub fn linear_gain(&self, n: f64) -> f64 {
        (n - self.n_tr) / (self.n_th - self.n_tr)
    }
}

/// Injection coupling between master and slave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    /// Injection rate [1/s].
    pub kappa_ex: f64,
    /// Master minus solitary-slave angular frequency detuning [rad/s].
    pub delta_omega: f64,
    /// Amplitude transmittance of the slave facet, if known.
    pub t_ms: Option<f64>,
    /// Slave cavity round-trip time [s], if known.
    pub tau_l: Option<f64>,
}

impl CouplingParams {
    pub fn new(kappa_ex: f64, delta_omega: f64) -> Result<Self> {
        let c = CouplingParams {
            kappa_ex,
            delta_omega,
            t_ms: None,
            tau_l: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_ex.is_finite() && self.kappa_ex >= 0.0) {
            return Err(Error::invalid("kappa_ex_per_s", "must be finite and >= 0"));
        }
        if !self.delta_omega.is_finite() {
            return Err(Error::invalid("delta_omega_hz", "must be finite"));
        }
        if let Some(t) = self.t_ms {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid("t_MS", "must lie in [0, 1]"));
            }
        }
        if let Some(t) = self.tau_l {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::invalid("tau_L_ps", "must be > 0"));
            }
        }
        Ok(())
    }
}

impl Default for CouplingParams {
    fn default() -> Self {
        CouplingParams {
            kappa_ex: 1.0e10,
            delta_omega: 0.0,
            t_ms: None,
            tau_l: None,
        }
    }
}

/// What a given pump current stands for in a drive program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentRole {
    Bias,
    Steady,
    Perturbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentPoint {
    pub current: f64,
    pub role: CurrentRole,
}

impl CurrentPoint {
    pub fn new(current: f64, role: CurrentRole) -> Result<Self> {
        if !(current.is_finite() && current >= 0.0) {
            return Err(Error::invalid("I", "pump current must be finite and >= 0"));
        }
        Ok(CurrentPoint { current, role })
    }
}

/// I_th = N_th e / tau_e.
pub fn threshold_current(p: &LaserParams) -> f64 {
    p.n_th * E_CHARGE / p.tau_e
}

/// I_tr = N_tr e / tau_e.
pub fn transparency_current(p: &LaserParams) -> f64 {
    p.n_tr * E_CHARGE / p.tau_e
}

/// Single-facet output power for an intracavity photon number.
pub fn photon_to_power(q: f64, p: &LaserParams) -> f64 {
    q * p.watts_per_photon()
}

/// The three equivalent ways of stating gain compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiForm {
    /// Power form, G = G_L (1 - chi P) [1/W].
    Chi,
    /// Photon-number form, G = G_L (1 - chi_Q Q) [dimensionless].
    ChiQ,
    /// Photon-density form, G = G_L (1 - chi_q Q/V) [m^3].
    ChiDensity,
}

/// Convert a compression factor between its power, photon-number and
/// photon-density forms. The P-Q relation is taken as exact.
pub fn chi_convert(value: f64, from: ChiForm, to: ChiForm, p: &LaserParams) -> Result<f64> {
    if from == to {
        return Ok(value);
    }
    let volume = || {
        p.v_active
            .ok_or_else(|| Error::MissingKey("V_active_m3".to_string()))
    };
    let w = p.watts_per_photon();
    let chi = match from {
        ChiForm::Chi => value,
        ChiForm::ChiQ => value / w,
        ChiForm::ChiDensity => value / volume()? / w,
    };
    Ok(match to {
        ChiForm::Chi => chi,
        ChiForm::ChiQ => chi * w,
        ChiForm::ChiDensity => chi * w * volume()?,
    })
}

const LASER_KEYS: [&str; 11] = [
    "tau_ph_ps",
    "tau_e_ns",
    "epsilon",
    "N_tr",
    "N_th",
    "C_sp",
    "Gamma",
    "alpha",
    "chi_per_W",
    "lambda_nm",
    "V_active_m3",
];

pub(crate) fn number(table: &toml::Table, key: &str) -> Result<Option<f64>> {
    match table.get(key) {
        None => Ok(None),
        Some(toml::Value::Float(f)) => Ok(Some(*f)),
        Some(toml::Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(other) => Err(Error::NotNumeric {
            key: key.to_string(),
            value: other.to_string(),
        }),
    }
}

pub(crate) fn required(table: &toml::Table, key: &str) -> Result<f64> {
    number(table, key)?.ok_or_else(|| Error::MissingKey(key.to_string()))
}

impl LaserParams {
    /// Build from one config section. Every key except `V_active_m3` is
    /// mandatory; unknown keys are rejected.
    pub fn from_table(table: &toml::Table) -> Result<Self> {
        if let Some(unknown) = table.keys().find(|k| !LASER_KEYS.contains(&k.as_str())) {
            return Err(Error::UnknownKey(unknown.clone()));
        }
        let p = LaserParams {
            tau_ph: required(table, "tau_ph_ps")? / 1e12,
            tau_e: required(table, "tau_e_ns")? / 1e9,
            epsilon: required(table, "epsilon")?,
            n_tr: required(table, "N_tr")?,
            n_th: required(table, "N_th")?,
            c_sp: required(table, "C_sp")?,
            gamma: required(table, "Gamma")?,
            alpha: required(table, "alpha")?,
            chi: required(table, "chi_per_W")?,
            lambda: required(table, "lambda_nm")? / 1e9,
            v_active: number(table, "V_active_m3")?,
        };
        p.validate()?;
        Ok(p)
    }

    /// Inverse of [`LaserParams::from_table`], in config units.
    pub fn to_table(&self) -> toml::Table {
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: f64| {
            t.insert(k.to_string(), toml::Value::Float(v));
        };
        put("tau_ph_ps", self.tau_ph * 1e12);
        put("tau_e_ns", self.tau_e * 1e9);
        put("epsilon", self.epsilon);
        put("N_tr", self.n_tr);
        put("N_th", self.n_th);
        put("C_sp", self.c_sp);
        put("Gamma", self.gamma);
        put("alpha", self.alpha);
        put("chi_per_W", self.chi);
        put("lambda_nm", self.lambda * 1e9);
        if let Some(v) = self.v_active {
            put("V_active_m3", v);
        }
        t
    }
}

/// Parse a flat `key = value` block into validated laser parameters.
pub fn load_params(config_text: &str) -> Result<LaserParams> {
    let table: toml::Table = config_text
        .parse()
        .map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
    LaserParams::from_table(&table)
}
