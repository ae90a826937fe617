//! Active-layer heating.
//!
//! A one-dimensional slab model (heat flux `P/2A` into a clamping layer of
//! thickness `l` whose far face sits at the heat-sink temperature) gives the
//! exact temperature rise at the end of a rectangular heat pulse as an image
//! series in `ierfc`. Its single-exponential fit defines the thermal
//! resistance `r_h` and rise time `tau_h` that drive the lumped model
//!
//! ```text
//! dT/dt = -dT/tau_h + (1.24/lambda_um) (r_h/tau_h) (1 - eps) (I - I_b)
//! ```
//!
//! Joule heating in the clamping layers is not modelled. Temperature only
//! shifts the optical frequency; carrier and photon dynamics are unaffected.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::C_LIGHT;
use crate::sim::{DriveWaveform, TimeGrid};

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Amplitude of the single-exponential fit to the slab response.
pub const FIT_AMPLITUDE: f64 = 0.87;
/// Rate of the single-exponential fit, in units of D/l^2.
pub const FIT_RATE: f64 = 3.29;
/// `l^2 / (tau_h D)`; equals FIT_RATE rounded through the 0.87 prefactor.
pub const RISE_TIME_DIVISOR: f64 = 3.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalMaterial {
    /// Thermal conductivity [W/(m K)].
    pub k: f64,
    /// Mass density [kg/m^3].
    pub rho: f64,
    /// Specific heat capacity [J/(kg K)].
    pub c_heat: f64,
    /// Clamping-layer thickness [m].
    pub l: f64,
    /// Active-layer length [m].
    pub length: f64,
    /// Active-layer width [m].
    pub width: f64,
}

impl ThermalMaterial {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("k", self.k),
            ("rho", self.rho),
            ("C_heat", self.c_heat),
            ("l_um", self.l),
            ("L_um", self.length),
            ("w_um", self.width),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(key, "must be finite and > 0"));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn diffusivity(&self) -> f64 {
        self.k / (self.rho * self.c_heat)
    }
}

/// Lumped thermal constants derived from a material stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalConstants {
    /// Thermal resistance [K/W].
    pub r_h: f64,
    /// Thermal rise time [s].
    pub tau_h: f64,
    /// Heat diffusion coefficient [m^2/s].
    pub diffusivity: f64,
}

pub fn thermal_constants(m: &ThermalMaterial) -> ThermalConstants {
    let diffusivity = m.diffusivity();
    ThermalConstants {
        r_h: FIT_AMPLITUDE * m.l / (m.k * m.area() * SQRT_PI),
        tau_h: m.l * m.l / (RISE_TIME_DIVISOR * diffusivity),
        diffusivity,
    }
}

/// Parameters of the lumped temperature model for one laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub r_h: f64,
    pub tau_h: f64,
    /// Temperature coefficient of angular frequency [rad/(s K)].
    pub mu_omega: f64,
    /// Lasing wavelength [m].
    pub lambda: f64,
    pub epsilon: f64,
    /// Current at which the active layer sits at `t0` [A].
    pub i_bias: f64,
    /// Reference temperature [K].
    pub t0: f64,
}

impl ThermalParams {
    /// Thermal constants used for the turn-on drift study: 10 K/W, 10 ns,
    /// 10 GHz/K at 1550 nm.
    pub fn reference(epsilon: f64) -> Self {
        ThermalParams {
            r_h: 10.0,
            tau_h: 10e-9,
            mu_omega: 2.0 * PI * 10e9,
            lambda: 1550e-9,
            epsilon,
            i_bias: 0.0,
            t0: 293.15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_h.is_finite() && self.r_h > 0.0) {
            return Err(Error::invalid("r_h_K_per_W", "must be > 0"));
        }
        if !(self.tau_h.is_finite() && self.tau_h > 0.0) {
            return Err(Error::invalid("tau_h_ns", "must be > 0"));
        }
        if !(self.mu_omega.is_finite() && self.mu_omega >= 0.0) {
            return Err(Error::invalid("mu_omega_GHz_per_K", "must be >= 0"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda_nm", "must be > 0"));
        }
        if !(self.i_bias.is_finite() && self.i_bias >= 0.0) {
            return Err(Error::invalid("I_b_mA", "must be >= 0"));
        }
        Ok(())
    }

    /// Stationary temperature deviation while the current is held at `current`.
    pub fn settled_rise(&self, current: f64) -> f64 {
        self.r_h * (heat_power(current, self.lambda, self.epsilon) - heat_power(self.i_bias, self.lambda, self.epsilon))
    }

    /// Advance `dt` over an interval of constant current.
    #[inline]
    pub fn relax(&self, delta_t: f64, current: f64, dt: f64) -> f64 {
        let target = self.settled_rise(current);
        target + (delta_t - target) * (-dt / self.tau_h).exp()
    }
}

/// First iterated integral of the complementary error function,
/// `exp(-z^2)/sqrt(pi) - z erfc(z)`.
pub fn ierfc(z: f64) -> f64 {
    if z > 26.0 {
        // exp(-z^2) underflows
        return 0.0;
    }
    (-z * z).exp() * FRAC_1_SQRT_PI - z * libm::erfc(z)
}

/// Dimensionless temperature rise of the slab at the end of a heat pulse of
/// reduced length `p = D t / l^2`.
pub fn y_exact(p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(format!("y_exact needs p > 0, got {p}")));
    }
    let root = p.sqrt();
    let mut sum = 0.0;
    let mut sign = -1.0;
    for n in 1..=10_000u32 {
        let term = 2.0 * SQRT_PI * ierfc(n as f64 / root);
        sum += sign * term;
        sign = -sign;
        let next = 2.0 * SQRT_PI * ierfc((n + 1) as f64 / root);
        if next < 1e-12 {
            break;
        }
    }
    Ok(root * (1.0 + sum))
}

/// Single-exponential approximation of [`y_exact`].
pub fn f_fit(p: f64) -> f64 {
    FIT_AMPLITUDE * (1.0 - (-FIT_RATE * p).exp())
}

/// Heat dissipated in the active layer, taking the junction voltage as the
/// band gap `1.24/lambda_um` volts.
pub fn heat_power(current: f64, lambda: f64, epsilon: f64) -> f64 {
    let lambda_um = lambda * 1e6;
    1.24 / lambda_um * current * (1.0 - epsilon)
}

/// Frequency offset added to the phase rate: `-mu_omega dT`.
pub fn phase_rate_correction(delta_t: f64, tp: &ThermalParams) -> f64 {
    -tp.mu_omega * delta_t
}

/// Temperature coefficient of angular frequency from that of wavelength.
pub fn convert_mu(mu_lambda: f64, lambda: f64) -> f64 {
    let omega = 2.0 * PI * C_LIGHT / lambda;
    omega * omega * mu_lambda / (2.0 * PI * C_LIGHT)
}

/// Temperature deviation sampled on `grid` for a piecewise-constant drive,
/// starting from zero at the first grid point. Each sample is evaluated from
/// the start of its drive segment with the exact exponential, so no error
/// accumulates across samples.
pub fn integrate_dt(drive: &DriveWaveform, tp: &ThermalParams, grid: &TimeGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n);
    let breaks: Vec<f64> = drive.segments().iter().map(|s| s.start).collect();
    // state at the most recent breakpoint (or grid origin)
    let mut anchor_t = grid.t0;
    let mut anchor_dt = 0.0;
    let mut next_break = breaks.partition_point(|&b| b <= grid.t0);
    for k in 0..grid.n {
        let t = grid.time(k);
        while next_break < breaks.len() && breaks[next_break] <= t {
            let b = breaks[next_break];
            anchor_dt = tp.relax(anchor_dt, drive.current_at(anchor_t), b - anchor_t);
            anchor_t = b;
            next_break += 1;
        }
        out.push(tp.relax(anchor_dt, drive.current_at(anchor_t), t - anchor_t));
    }
    out
}
