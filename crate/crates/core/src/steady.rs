//! Continuous-wave operating points of a single laser and the phase-modulation
//! design rules built on them.
//!
//! The exact operating point solves the carrier and photon balance equations
//! with gain compression; the frequency offset then follows from the linear
//! gain alone. The closed forms are first-order expansions in `C_sp` and
//! `chi_Q` and are kept next to the exact route so the two can be compared.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{LaserParams, E_CHARGE};
use crate::parallel;

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-12;

/// Stationary (noise-free) state of one laser at a fixed pump current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub n_s: f64,
    pub q_s: f64,
    /// omega_s - omega_0 [rad/s].
    pub omega_shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Exact root of the balance equations.
    #[default]
    Numerical,
    /// First-order expansion in C_sp and chi_Q, spontaneous terms kept.
    FirstOrder,
    /// Compression-only rule, no spontaneous emission.
    Simple,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Numerical => "numerical",
            Method::FirstOrder => "first_order",
            Method::Simple => "simple",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numerical" => Ok(Method::Numerical),
            "first_order" => Ok(Method::FirstOrder),
            "simple" => Ok(Method::Simple),
            other => Err(Error::invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Perturbation design for a pi phase step between neighbouring pulse pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDesign {
    /// Perturbation duration [s].
    pub d: f64,
    pub delta_phi: f64,
    /// Current excursion giving `delta_phi` [A].
    pub delta_i_pi: f64,
    pub method: Method,
}

/// Carrier number implied by the sum of both balance lines for a given photon
/// number. Linear in Q.
fn carriers_for(p: &LaserParams, current: f64, q: f64) -> f64 {
    (current / E_CHARGE - q / (p.gamma * p.tau_ph)) * p.tau_e / (1.0 - p.c_sp / p.gamma)
}

/// Photon balance divided by Q/tau_ph; its sign equals the sign of dQ/dt.
fn photon_balance(p: &LaserParams, current: f64, q: f64) -> f64 {
    let n = carriers_for(p, current, q);
    let spont = p.c_sp * n * p.tau_ph / (p.tau_e * q);
    p.linear_gain(n) * (1.0 - p.chi_q() * q) - 1.0 + spont
}

/// Photon balance multiplied out (times tau_ph) and its derivative in Q, for
/// Newton polishing.
fn photon_balance_poly(p: &LaserParams, current: f64, q: f64) -> (f64, f64) {
    let chi_q = p.chi_q();
    let n = carriers_for(p, current, q);
    let dn = -p.tau_e / ((1.0 - p.c_sp / p.gamma) * p.gamma * p.tau_ph);
    let gl = p.linear_gain(n);
    let dgl = dn / (p.n_th - p.n_tr);
    let c = p.c_sp * p.tau_ph / p.tau_e;
    let h = gl * (1.0 - chi_q * q) * q - q + c * n;
    let dh = dgl * (1.0 - chi_q * q) * q + gl * (1.0 - 2.0 * chi_q * q) - 1.0 + c * dn;
    (h, dh)
}

fn state_from(p: &LaserParams, current: f64, q: f64) -> SteadyState {
    let n = carriers_for(p, current, q);
    SteadyState {
        n_s: n,
        q_s: q,
        omega_shift: p.alpha / (2.0 * p.tau_ph) * (n - p.n_th) / (p.n_th - p.n_tr),
    }
}

/// Exact stationary point of the rate equations at pump current `current`.
///
/// Adding the photon line (divided by Gamma) to the carrier line removes the
/// gain and leaves N linear in Q, so the system reduces to the scalar photon
/// balance in Q on `[0, min(Gamma tau_ph I / e, 1/chi_Q)]`, where N stays
/// non-negative. Bisection brackets the lasing root; Newton steps polish it.
pub fn solve_operating_point(p: &LaserParams, current: f64) -> Result<SteadyState> {
    if !(current.is_finite() && current > 0.0) {
        return Err(Error::domain(format!("pump current must be > 0, got {current:e}")));
    }
    if p.c_sp >= p.gamma {
        return Err(Error::domain("C_sp must be smaller than Gamma"));
    }

    let mut hi = p.gamma * p.tau_ph * current / E_CHARGE;
    let chi_q = p.chi_q();
    if chi_q > 0.0 {
        hi = hi.min(1.0 / chi_q);
    }
    let spont_at_zero = p.c_sp * carriers_for(p, current, 0.0);
    if spont_at_zero <= 0.0 {
        // No spontaneous seed: either below threshold (Q = 0) or the lasing
        // branch of G(N, Q) = 1.
        let n0 = carriers_for(p, current, 0.0);
        if p.linear_gain(n0) <= 1.0 {
            return Ok(state_from(p, current, 0.0));
        }
    }
    if photon_balance(p, current, hi) >= 0.0 {
        return Err(Error::NoBracket {
            what: "photon balance".into(),
            lo: 0.0,
            hi,
        });
    }

    let mut lo = 0.0;
    let mut iterations = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::NoConvergence {
                what: "operating point bisection".into(),
                iterations: MAX_ITER,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if photon_balance(p, current, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut q = 0.5 * (lo + hi);
    for _ in 0..3 {
        let (h, dh) = photon_balance_poly(p, current, q);
        if dh == 0.0 || h == 0.0 {
            break;
        }
        let next = q - h / dh;
        if !(next >= lo && next <= hi) {
            break;
        }
        if photon_balance_poly(p, current, next).0.abs() >= h.abs() {
            break;
        }
        q = next;
    }
    let ss = state_from(p, current, q);
    if ss.q_s < 0.0 {
        return Err(Error::domain("only a non-physical root (Q < 0) was found"));
    }
    let (r_carrier, r_photon) = residuals(p, current, &ss);
    if r_carrier.abs() > REL_TOL || r_photon.abs() > REL_TOL {
        return Err(Error::NoConvergence {
            what: format!("operating point residuals {r_carrier:e}, {r_photon:e}"),
            iterations,
        });
    }
    Ok(ss)
}

/// Relative residuals of the carrier and photon balance lines, each scaled by
/// the largest term appearing in that line.
pub fn residuals(p: &LaserParams, current: f64, ss: &SteadyState) -> (f64, f64) {
    let gl = p.linear_gain(ss.n_s);
    let g = gl * (1.0 - p.chi_q() * ss.q_s);
    let pump = current / E_CHARGE;
    let decay = ss.n_s / p.tau_e;
    let stim = ss.q_s * g / (p.gamma * p.tau_ph);
    let r1 = (pump - decay - stim) / pump.abs().max(decay.abs()).max(stim.abs());

    let gain_term = g * ss.q_s / p.tau_ph;
    let loss_term = ss.q_s / p.tau_ph;
    let spont = p.c_sp * ss.n_s / p.tau_e;
    let scale = gain_term.abs().max(loss_term).max(spont.abs());
    let r2 = if scale == 0.0 {
        0.0
    } else {
        (gain_term - loss_term + spont) / scale
    };
    (r1, r2)
}

/// First-order closed form of the operating point, valid above threshold.
pub fn approx_operating_point(p: &LaserParams, current: f64) -> Result<SteadyState> {
    let i_th = p.threshold_current();
    let i_tr = p.transparency_current();
    if current <= i_th {
        return Err(Error::domain(format!(
            "expansion needs I_s > I_th ({:.4} mA), got {:.4} mA",
            i_th * 1e3,
            current * 1e3
        )));
    }
    let over = current - i_th;
    let gtau_e = p.gamma * p.tau_ph / E_CHARGE;
    let chi_q = p.chi_q();
    let q_s = gtau_e
        * over
        * (1.0 + i_th * (current - i_tr) / (over * over * p.gamma) * p.c_sp
            - gtau_e * (i_th - i_tr) * chi_q);
    let n_s = i_th * p.tau_e / E_CHARGE
        * (1.0 - (i_th - i_tr) / (over * p.gamma) * p.c_sp
            + gtau_e / i_th * (i_th - i_tr) * over * chi_q);
    let omega_shift = -p.alpha / (2.0 * p.gamma * p.tau_ph) * i_th / over * p.c_sp
        + p.alpha / (2.0 * E_CHARGE) * p.gamma * over * chi_q;
    Ok(SteadyState {
        n_s,
        q_s,
        omega_shift,
    })
}

/// Phase difference between two pulse pairs whose master perturbations were
/// at `i1` and `i2` for a duration `d`, i.e. `d (omega_s(i2) - omega_s(i1))`.
/// Positive when `i2 > i1` for compression-dominated chirp.
pub fn pair_phase_shift(p: &LaserParams, i1: f64, i2: f64, d: f64, method: Method) -> Result<f64> {
    let i_th = p.threshold_current();
    if i1 <= i_th || i2 <= i_th {
        return Err(Error::domain(format!(
            "both currents must exceed I_th = {:.4} mA",
            i_th * 1e3
        )));
    }
    let di = i2 - i1;
    Ok(match method {
        Method::Numerical => {
            if di == 0.0 {
                return Ok(0.0);
            }
            let w1 = solve_operating_point(p, i1)?.omega_shift;
            let w2 = solve_operating_point(p, i2)?.omega_shift;
            d * (w2 - w1)
        }
        Method::FirstOrder => {
            let spont = p.alpha * d / (2.0 * p.tau_ph) * i_th * di / ((i1 - i_th) * (i2 - i_th))
                * p.c_sp
                / p.gamma;
            spont + compression_phase(p, di, d)
        }
        Method::Simple => compression_phase(p, di, d),
    })
}

fn compression_phase(p: &LaserParams, di: f64, d: f64) -> f64 {
    p.alpha * d / (4.0 * p.tau_ph) * di * p.epsilon * p.photon_energy() / E_CHARGE * p.chi
}

fn simple_delta_i_pi(p: &LaserParams, d: f64) -> Result<f64> {
    if p.chi <= 0.0 {
        return Err(Error::domain(
            "chi = 0: the compression-only rule diverges (Delta I_pi -> infinity)",
        ));
    }
    Ok(4.0 * PI / p.chi * E_CHARGE / (p.epsilon * p.photon_energy()) * p.tau_ph / (p.alpha * d))
}

/// Master current excursion that produces a pi phase step between pairs.
pub fn delta_i_pi(p: &LaserParams, current: f64, d: f64, method: Method) -> Result<PhaseDesign> {
    if !(d > 0.0) {
        return Err(Error::domain("perturbation duration must be > 0"));
    }
    if !(p.alpha > 0.0) {
        return Err(Error::domain("alpha must be > 0"));
    }
    let i_th = p.threshold_current();
    let delta_i_pi = match method {
        Method::Simple => simple_delta_i_pi(p, d)?,
        Method::FirstOrder => {
            if p.chi <= 0.0 {
                return Err(Error::domain("chi = 0: first-order rule diverges"));
            }
            if current <= i_th {
                return Err(Error::domain("first-order rule needs I_s > I_th"));
            }
            let bracket = 2.0 * PI * p.tau_ph / (p.alpha * d) - p.c_sp / p.gamma * i_th / (current - i_th);
            if bracket <= 0.0 {
                return Err(Error::domain(
                    "first-order bracket is negative: I_s too close to threshold",
                ));
            }
            2.0 / p.chi * E_CHARGE / (p.epsilon * p.photon_energy()) * bracket
                + p.c_sp / p.gamma * p.alpha * d / (2.0 * PI * p.tau_ph) * i_th
        }
        Method::Numerical => numerical_delta_i_pi(p, current, d)?,
    };
    Ok(PhaseDesign {
        d,
        delta_phi: PI,
        delta_i_pi,
        method,
    })
}

fn numerical_delta_i_pi(p: &LaserParams, current: f64, d: f64) -> Result<f64> {
    let i_th = p.threshold_current();
    if current <= i_th {
        return Err(Error::domain("numerical rule needs I_s > I_th"));
    }
    let upper = match simple_delta_i_pi(p, d) {
        Ok(s) => 10.0 * s,
        Err(_) => 100.0 * i_th,
    };
    let target = |di: f64| -> Result<f64> {
        Ok(pair_phase_shift(p, current, current + di, d, Method::Numerical)? - PI)
    };
    let (mut lo, mut hi) = (0.0, upper);
    let f_hi = target(hi)?;
    if f_hi <= 0.0 {
        return Err(Error::NoBracket {
            what: "Delta I_pi".into(),
            lo,
            hi,
        });
    }
    let tol = 1e-6 * i_th;
    let mut iterations = 0;
    while hi - lo > tol {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(Error::NoConvergence {
                what: "Delta I_pi bisection".into(),
                iterations,
            });
        }
        let mid = 0.5 * (lo + hi);
        if target(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Magnitude of the spontaneous-emission correction that the simple rule drops.
pub fn spontaneous_scale_estimate(p: &LaserParams, d: f64) -> f64 {
    let ratio = p.alpha * d / p.tau_ph;
    p.c_sp / (8.0 * PI * PI * p.gamma) * ratio * ratio * p.threshold_current() / E_CHARGE
        * p.epsilon
        * p.photon_energy()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub chi: f64,
    pub alpha: f64,
    pub dipi_numerical: f64,
    pub dipi_simple: f64,
}

/// Delta I_pi over a (chi, alpha) grid by both the numerical and simple rules.
/// Rows are ordered alpha-major, then chi.
pub fn sweep_delta_i_pi(
    p: &LaserParams,
    chi_grid: &[f64],
    alpha_list: &[f64],
    current: f64,
    d: f64,
) -> Result<Vec<SweepRow>> {
    if chi_grid.is_empty() || alpha_list.is_empty() {
        return Err(Error::domain("sweep grids must be non-empty"));
    }
    if let Some(bad) = chi_grid.iter().find(|c| !(**c > 0.0)) {
        return Err(Error::invalid("chi_per_W", format!("grid values must be > 0, got {bad}")));
    }
    let cells: Vec<(f64, f64)> = alpha_list
        .iter()
        .flat_map(|&a| chi_grid.iter().map(move |&c| (c, a)))
        .collect();
    parallel::map(&cells, |&(chi, alpha)| {
        let q = LaserParams { chi, alpha, ..*p };
        Ok(SweepRow {
            chi,
            alpha,
            dipi_numerical: delta_i_pi(&q, current, d, Method::Numerical)?.delta_i_pi,
            dipi_simple: delta_i_pi(&q, current, d, Method::Simple)?.delta_i_pi,
        })
    })
    .into_iter()
    .collect()
}
