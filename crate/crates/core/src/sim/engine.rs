use std::f64::consts::TAU;

use super::noise::{langevin_increments, NoiseStream, Q_FLOOR};
use super::{DriveWaveform, LaserState, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::params::{CouplingParams, LaserParams, E_CHARGE};
use crate::steady::solve_operating_point;
use crate::thermal::ThermalParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub master: LaserParams,
    pub slave: LaserParams,
    pub coupling: CouplingParams,
    /// Master-laser heating; only used when a run enables thermal coupling.
    pub thermal: Option<ThermalParams>,
}

impl SystemParams {
    pub fn reference_device() -> Self {
        SystemParams {
            master: LaserParams::reference_device(),
            slave: LaserParams::reference_device(),
            coupling: CouplingParams::default(),
            thermal: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.master.validate()?;
        self.slave.validate()?;
        self.coupling.validate()?;
        if let Some(t) = &self.thermal {
            t.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub dn: f64,
    pub dq: f64,
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Integration step [s].
    pub dt: f64,
    /// Recorded span after warm-up [s]; must be a multiple of `dt`.
    pub t_end: f64,
    /// Discarded settling time before t = 0 [s], drives held at their t = 0 value.
    pub warmup: f64,
    pub noise: bool,
    pub thermal: bool,
    pub seed: u64,
    pub stream: u64,
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    /// Replaces the steady-state start (master, slave).
    pub initial: Option<(LaserState, LaserState)>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: 0.05e-12,
            t_end: 10e-9,
            warmup: 2e-9,
            noise: false,
            thermal: false,
            seed: 0,
            stream: 0,
            record_stride: 1,
            initial: None,
        }
    }
}

#[inline]
fn solitary(p: &LaserParams, s: &LaserState, current: f64) -> Derivs {
    let gl = p.linear_gain(s.n);
    let g = gl * (1.0 - p.chi_q() * s.q);
    Derivs {
        dn: current / E_CHARGE - s.n / p.tau_e - s.q * g / (p.gamma * p.tau_ph),
        dq: (g - 1.0) * s.q / p.tau_ph + p.c_sp * s.n / p.tau_e,
        dphi: p.alpha / (2.0 * p.tau_ph) * (gl - 1.0),
    }
}

/// Noise-free right-hand sides for (master, slave). The slave sees the
/// injected master field; the master phase picks up the thermal frequency
/// offset when `sys.thermal` is set.
#[inline]
pub fn deterministic_rhs(
    master: &LaserState,
    slave: &LaserState,
    i_m: f64,
    i_s: f64,
    sys: &SystemParams,
    t: f64,
) -> (Derivs, Derivs) {
    let mut dm = solitary(&sys.master, master, i_m);
    if let Some(tp) = &sys.thermal {
        dm.dphi -= tp.mu_omega * master.dt;
    }
    let mut ds = solitary(&sys.slave, slave, i_s);
    let kappa = sys.coupling.kappa_ex;
    if kappa != 0.0 {
        let qm = master.q.max(0.0);
        let psi = (slave.phi - master.phi - sys.coupling.delta_omega * t).rem_euclid(TAU);
        let (sin, cos) = psi.sin_cos();
        ds.dq += 2.0 * kappa * (qm * slave.q.max(0.0)).sqrt() * cos;
        ds.dphi -= kappa * (qm / slave.q.max(Q_FLOOR)).sqrt() * sin;
    }
    (dm, ds)
}

fn steps_in(span: f64, dt: f64, key: &str) -> Result<usize> {
    let r = span / dt;
    let k = r.round();
    if !(span >= 0.0 && span.is_finite()) || (r - k).abs() > 1e-6 * r.max(1.0) {
        return Err(Error::invalid(key, format!("{span:e} s is not a multiple of dt = {dt:e} s")));
    }
    Ok(k as usize)
}

/// Solitary steady state at a constant current, phase and temperature zero.
/// Zero current gives an empty cavity.
pub fn rest_state(p: &LaserParams, current: f64) -> Result<LaserState> {
    if current <= 0.0 {
        return Ok(LaserState::default());
    }
    let ss = solve_operating_point(p, current)?;
    Ok(LaserState {
        n: ss.n_s,
        q: ss.q_s,
        phi: 0.0,
        dt: 0.0,
    })
}

#[inline]
fn finite(s: &LaserState) -> bool {
    s.n.is_finite() && s.q.is_finite() && s.phi.is_finite() && s.dt.is_finite()
}

/// Euler-Maruyama integration of the coupled master/slave system.
///
/// Each step evaluates the drives at the step midpoint, adds the drift times
/// `dt` and, with noise on, the Langevin increments for six independent
/// Wiener channels (master A, B, C then slave A, B, C). Negative photon and
/// carrier numbers are reflected. The master temperature is advanced with the
/// exact exponential over the step.
pub fn simulate(
    sys: &SystemParams,
    master_drive: &DriveWaveform,
    slave_drive: &DriveWaveform,
    opts: &SimOptions,
) -> Result<Trajectory> {
    sys.validate()?;
    let dt = opts.dt;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    let cap = 0.1 * sys.master.tau_ph.min(sys.slave.tau_ph);
    if dt > cap * (1.0 + 1e-12) {
        return Err(Error::invalid("dt", format!("{dt:e} s exceeds the stability cap {cap:e} s")));
    }
    if opts.record_stride == 0 {
        return Err(Error::invalid("record_stride", "must be >= 1"));
    }
    let steps = steps_in(opts.t_end, dt, "t_end")?;
    let warm = steps_in(opts.warmup, dt, "warmup")?;
    if steps % opts.record_stride != 0 {
        return Err(Error::invalid("record_stride", "must divide the number of steps"));
    }
    let mut sys = *sys;
    let tp = if opts.thermal {
        Some(sys.thermal.ok_or_else(|| Error::invalid("thermal", "thermal coupling enabled without parameters"))?)
    } else {
        sys.thermal = None;
        None
    };

    let (mut m, mut s) = match opts.initial {
        Some(pair) => pair,
        None => (
            rest_state(&sys.master, master_drive.current_at(0.0))?,
            rest_state(&sys.slave, slave_drive.current_at(0.0))?,
        ),
    };

    let n_samples = steps / opts.record_stride + 1;
    let grid = TimeGrid::new(0.0, dt * opts.record_stride as f64, n_samples)?;
    let mut traj = Trajectory {
        grid,
        master: Vec::with_capacity(n_samples),
        slave: Vec::with_capacity(n_samples),
        i_master: Vec::with_capacity(n_samples),
        i_slave: Vec::with_capacity(n_samples),
    };

    let mut noise = NoiseStream::new(opts.seed, opts.stream);
    let sqrt_dt = dt.sqrt();
    let mut cm = master_drive.cursor();
    let mut cs = slave_drive.cursor();
    let total = warm + steps;
    for k in 0..=total {
        let rel = k as isize - warm as isize;
        let t = rel as f64 * dt;
        let tq = if rel < 0 { 0.5 * dt } else { t + 0.5 * dt };
        let i_m = cm.current_at(tq);
        let i_s = cs.current_at(tq);
        if rel >= 0 && (rel as usize).is_multiple_of(opts.record_stride) {
            traj.master.push(m);
            traj.slave.push(s);
            traj.i_master.push(i_m);
            traj.i_slave.push(i_s);
        }
        if k == total {
            break;
        }

        let (dm, ds) = deterministic_rhs(&m, &s, i_m, i_s, &sys, t);
        let mut nm = LaserState {
            n: m.n + dm.dn * dt,
            q: m.q + dm.dq * dt,
            phi: m.phi + dm.dphi * dt,
            dt: m.dt,
        };
        let mut nsl = LaserState {
            n: s.n + ds.dn * dt,
            q: s.q + ds.dq * dt,
            phi: s.phi + ds.dphi * dt,
            dt: s.dt,
        };
        if opts.noise {
            let wm = noise.triple().map(|x| x * sqrt_dt);
            let ws = noise.triple().map(|x| x * sqrt_dt);
            let (a, b, c) = langevin_increments(&m, &sys.master, wm);
            nm.n += a;
            nm.q += b;
            nm.phi += c;
            let (a, b, c) = langevin_increments(&s, &sys.slave, ws);
            nsl.n += a;
            nsl.q += b;
            nsl.phi += c;
        }
        if let Some(tp) = &tp {
            nm.dt = tp.relax(m.dt, i_m, dt);
        }
        nm.q = nm.q.abs();
        nm.n = nm.n.abs();
        nsl.q = nsl.q.abs();
        nsl.n = nsl.n.abs();
        if !(finite(&nm) && finite(&nsl)) {
            return Err(Error::NonFinite { step: k as u64 });
        }
        m = nm;
        s = nsl;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::build_slave_drive;

    fn quiet() -> SystemParams {
        let mut sys = SystemParams::reference_device();
        sys.coupling.kappa_ex = 0.0;
        sys
    }

    #[test]
    fn steady_state_is_stationary() {
        let sys = quiet();
        let ss = solve_operating_point(&sys.slave, 30e-3).unwrap();
        let st = LaserState {
            n: ss.n_s,
            q: ss.q_s,
            phi: 0.0,
            dt: 0.0,
        };
        let (dm, _) = deterministic_rhs(&st, &st, 30e-3, 30e-3, &sys, 0.0);
        let carrier_scale = 30e-3 / E_CHARGE;
        let photon_scale = ss.q_s / sys.master.tau_ph;
        assert!(dm.dn.abs() < 1e-8 * carrier_scale);
        assert!(dm.dq.abs() < 1e-8 * photon_scale);
        assert!((dm.dphi - ss.omega_shift).abs() < 1e-8 * ss.omega_shift.abs());
    }

    #[test]
    fn no_coupling_decouples_slave() {
        let sys = quiet();
        let s = LaserState { n: 5.6e7, q: 1e4, phi: 0.2, dt: 0.0 };
        let a = LaserState { n: 5.0e7, q: 3e3, phi: 1.0, dt: 0.0 };
        let b = LaserState { n: 6.0e7, q: 9e4, phi: -2.0, dt: 0.0 };
        assert_eq!(
            deterministic_rhs(&a, &s, 20e-3, 30e-3, &sys, 1e-9).1,
            deterministic_rhs(&b, &s, 40e-3, 30e-3, &sys, 1e-9).1
        );
    }

    #[test]
    fn in_phase_injection_adds_photons_only() {
        let mut sys = SystemParams::reference_device();
        sys.coupling.delta_omega = 0.0;
        let m = LaserState { n: 5.6e7, q: 1.6e4, phi: 0.4, dt: 0.0 };
        let s = LaserState { n: 5.6e7, q: 4e3, phi: 0.4, dt: 0.0 };
        let (_, ds) = deterministic_rhs(&m, &s, 30e-3, 30e-3, &sys, 0.0);
        let (_, free) = deterministic_rhs(&m, &s, 30e-3, 30e-3, &quiet(), 0.0);
        let gain = 2.0 * sys.coupling.kappa_ex * (1.6e4f64 * 4e3).sqrt();
        assert!((ds.dq - free.dq - gain).abs() < 1e-9 * gain);
        assert_eq!(ds.dphi, free.dphi);
    }

    #[test]
    fn thermal_offset_on_master_phase() {
        let mut sys = quiet();
        sys.thermal = Some(ThermalParams::reference(0.3));
        let m = LaserState { n: 5.6e7, q: 1.6e4, phi: 0.0, dt: 0.168 };
        let (dm, _) = deterministic_rhs(&m, &m, 30e-3, 30e-3, &sys, 0.0);
        let (cold, _) = deterministic_rhs(&m, &m, 30e-3, 30e-3, &quiet(), 0.0);
        let shift = dm.dphi - cold.dphi;
        assert!((shift + TAU * 1.68e9).abs() < 1e-6 * TAU * 1.68e9);
    }

    #[test]
    fn rejects_bad_steps() {
        let sys = SystemParams::reference_device();
        let d = DriveWaveform::constant(30e-3).unwrap();
        let big = SimOptions { dt: 0.2e-12, ..SimOptions::default() };
        assert!(simulate(&sys, &d, &d, &big).is_err());
        let ragged = SimOptions { t_end: 1.00003e-9, ..SimOptions::default() };
        assert!(simulate(&sys, &d, &d, &ragged).is_err());
    }

    #[test]
    fn same_seed_same_trajectory() {
        let sys = SystemParams::reference_device();
        let slave = build_slave_drive(2.5e-9, 1e-9, 6e-3, 30e-3, 2).unwrap();
        let master = DriveWaveform::constant(30e-3).unwrap();
        let opts = SimOptions {
            t_end: 5e-9,
            warmup: 0.5e-9,
            noise: true,
            seed: 99,
            record_stride: 10,
            ..SimOptions::default()
        };
        let a = simulate(&sys, &master, &slave, &opts).unwrap();
        let b = simulate(&sys, &master, &slave, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10_001);
        let c = simulate(&sys, &master, &slave, &SimOptions { stream: 1, ..opts }).unwrap();
        assert_ne!(a.slave, c.slave);
    }

    #[test]
    fn quiet_cw_run_holds_operating_point() {
        let sys = quiet();
        let d = DriveWaveform::constant(30e-3).unwrap();
        let opts = SimOptions { t_end: 1e-9, warmup: 0.0, record_stride: 100, ..SimOptions::default() };
        let tr = simulate(&sys, &d, &d, &opts).unwrap();
        let ss = solve_operating_point(&sys.master, 30e-3).unwrap();
        let last = tr.master.last().unwrap();
        assert!(((last.q - ss.q_s) / ss.q_s).abs() < 1e-6);
        assert!(((last.n - ss.n_s) / ss.n_s).abs() < 1e-6);
    }
}
