//! Post-processing of slave pulse trains: delayed self-interference, per-pulse
//! phases, fringe scans and coding-error statistics.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::parallel;
use crate::sim::{build_master_drive, build_slave_drive, simulate, SimOptions, SlaveTiming, SystemParams, TimeGrid, Trajectory};

/// Wrap an angle into (-pi, pi].
pub fn wrap_pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTrace {
    /// Starts one delay after the trajectory start.
    pub grid: TimeGrid,
    pub intensity: Vec<f64>,
}

impl InterferenceTrace {
    /// Integrated intensity over `[t0, t1]`.
    pub fn energy(&self, t0: f64, t1: f64) -> f64 {
        let a = self.grid.index_of(t0);
        let b = self.grid.index_of(t1);
        self.intensity[a..=b].iter().sum::<f64>() * self.grid.dt
    }
}

/// Ideal 50/50 interferometer with one arm delayed by `delay`:
/// `(Q1 + Q2 + 2 sqrt(Q1 Q2) cos(phi1 - phi2 - bias)) / 4`.
pub fn interfere_delayed(traj: &Trajectory, delay: f64, bias: f64) -> Result<InterferenceTrace> {
    let r = delay / traj.grid.dt;
    let shift = r.round();
    if !(shift >= 1.0) || (r - shift).abs() > 1e-6 * r {
        return Err(Error::invalid("delay", format!("{delay:e} s is not a positive multiple of the sample step")));
    }
    let shift = shift as usize;
    if shift >= traj.len() {
        return Err(Error::invalid("delay", "longer than the trajectory"));
    }
    let s = &traj.slave;
    let intensity = (shift..traj.len())
        .map(|k| {
            let (a, b) = (&s[k], &s[k - shift]);
            let cross = 2.0 * (a.q * b.q).sqrt() * (a.phi - b.phi - bias).cos();
            (0.25 * (a.q + b.q + cross)).max(0.0)
        })
        .collect();
    Ok(InterferenceTrace {
        grid: TimeGrid::new(traj.time(shift), traj.grid.dt, traj.len() - shift)?,
        intensity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub index: usize,
    pub gate: (f64, f64),
    /// Integrated photon number over the gate [photons s].
    pub energy: f64,
    pub centroid: f64,
    /// Energy-weighted circular mean of the phase, in (-pi, pi].
    pub phase: f64,
    /// The same angle shifted by whole turns to lie nearest the weighted
    /// arithmetic mean of the unwrapped phase.
    pub phase_unwrapped: f64,
    /// False when the gate holds less than 1e-3 of the median pulse energy.
    pub has_pulse: bool,
}

pub fn extract_pulse_phases(traj: &Trajectory, gates: &[(f64, f64)]) -> Result<Vec<PulseRecord>> {
    if gates.is_empty() {
        return Err(Error::invalid("gates", "no gates"));
    }
    let (t_first, t_last) = (traj.time(0), traj.time(traj.len() - 1));
    for (j, &(a, b)) in gates.iter().enumerate() {
        if !(a < b && a >= t_first && b <= t_last + 0.5 * traj.grid.dt) {
            return Err(Error::invalid("gates", format!("gate {j} [{a:e}, {b:e}] outside trajectory or empty")));
        }
        if j > 0 && a < gates[j - 1].1 {
            return Err(Error::invalid("gates", "gates must be ordered and non-overlapping"));
        }
    }
    let mut out: Vec<PulseRecord> = gates
        .iter()
        .enumerate()
        .map(|(index, &(a, b))| {
            let (ka, kb) = (traj.grid.index_of(a), traj.grid.index_of(b));
            let (mut w, mut wt, mut ws, mut wc, mut wphi) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for k in ka..=kb {
                let st = &traj.slave[k];
                let (sin, cos) = st.phi.sin_cos();
                w += st.q;
                wt += st.q * traj.time(k);
                ws += st.q * sin;
                wc += st.q * cos;
                wphi += st.q * st.phi;
            }
            let phase = wrap_pi(ws.atan2(wc));
            let (centroid, mean) = if w > 0.0 {
                (wt / w, wphi / w)
            } else {
                (0.5 * (a + b), phase)
            };
            PulseRecord {
                index,
                gate: (a, b),
                energy: w * traj.grid.dt,
                centroid,
                phase,
                phase_unwrapped: phase + TAU * ((mean - phase) / TAU).round(),
                has_pulse: true,
            }
        })
        .collect();
    let mut energies: Vec<f64> = out.iter().map(|r| r.energy).collect();
    energies.sort_by(f64::total_cmp);
    let median = energies[energies.len() / 2];
    for r in &mut out {
        r.has_pulse = r.energy >= 1e-3 * median && r.energy > 0.0;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPhase {
    /// Index of the later pulse of the pair.
    pub index: usize,
    /// Wrapped to (-pi, pi].
    pub delta_phi: f64,
    /// `2 sqrt(E1 E2) / (E1 + E2)`.
    pub visibility: f64,
}

/// Phase steps between consecutive pulses.
pub fn pair_phases(records: &[PulseRecord]) -> Vec<PairPhase> {
    records
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let sum = a.energy + b.energy;
            PairPhase {
                index: b.index,
                delta_phi: wrap_pi(b.phase - a.phase),
                visibility: if sum > 0.0 { 2.0 * (a.energy * b.energy).sqrt() / sum } else { 0.0 },
            }
        })
        .collect()
}

/// Pulse-train layout shared by the fringe scan and the coding study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSetup {
    pub period: f64,
    pub width: f64,
    pub i_low: f64,
    pub i_high: f64,
    /// Master baseline current [A].
    pub i_s: f64,
    /// Master perturbation length [s].
    pub d: f64,
    pub dt: f64,
    pub warmup: f64,
    pub record_stride: usize,
    pub noise: bool,
    pub seed: u64,
    pub stream: u64,
}

impl Default for TrainSetup {
    fn default() -> Self {
        TrainSetup {
            period: 2.5e-9,
            width: 1e-9,
            i_low: 6e-3,
            i_high: 30e-3,
            i_s: 30e-3,
            d: 0.1e-9,
            dt: 0.05e-12,
            warmup: 2e-9,
            record_stride: 20,
            noise: false,
            seed: 0,
            stream: 0,
        }
    }
}

impl TrainSetup {
    pub fn timing(&self, n_pulses: usize) -> SlaveTiming {
        SlaveTiming {
            period: self.period,
            width: self.width,
            i_low: self.i_low,
            i_high: self.i_high,
            n_pulses,
        }
    }

    pub fn options(&self, n_pulses: usize) -> SimOptions {
        SimOptions {
            dt: self.dt,
            t_end: n_pulses as f64 * self.period,
            warmup: self.warmup,
            noise: self.noise,
            thermal: false,
            seed: self.seed,
            stream: self.stream,
            record_stride: self.record_stride,
            initial: None,
        }
    }

    /// Run a train of `n_pulses` with master excursions `perturbations`
    /// (gap index, amplitude) and return the trajectory and default-gated
    /// pulse records.
    pub fn run(
        &self,
        sys: &SystemParams,
        n_pulses: usize,
        perturbations: &[(usize, f64)],
    ) -> Result<(Trajectory, Vec<PulseRecord>)> {
        let slave = build_slave_drive(self.period, self.width, self.i_low, self.i_high, n_pulses)?;
        let timing = self.timing(n_pulses);
        let master = build_master_drive(self.i_s, perturbations, self.d, &timing)?;
        let traj = simulate(sys, &master, &slave, &self.options(n_pulses))?;
        let gates: Vec<(f64, f64)> = (0..n_pulses).map(|j| timing.gate(j)).collect();
        let records = extract_pulse_phases(&traj, &gates)?;
        Ok((traj, records))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeRow {
    /// Master excursion [A].
    pub di: f64,
    /// Interfered energy of the perturbed pair, with the interferometer set
    /// for constructive output on the unperturbed pair.
    pub pair_energy: f64,
    /// Phase step of the perturbed pair relative to the unperturbed one, not
    /// wrapped.
    pub delta_phi: f64,
}

const FRINGE_PULSES: usize = 4;

/// One four-pulse train per ramp value with the excursion in the last gap;
/// the preceding pair is the unperturbed reference.
pub fn fringe_scan(sys: &SystemParams, ramp: &[f64], setup: &TrainSetup) -> Result<Vec<FringeRow>> {
    if ramp.is_empty() {
        return Err(Error::invalid("ramp", "empty"));
    }
    if ramp.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("ramp", "must be sorted ascending"));
    }
    let gap = FRINGE_PULSES - 2;
    let rows = parallel::map(ramp, |&di| -> Result<FringeRow> {
        let (traj, rec) = setup.run(sys, FRINGE_PULSES, &[(gap, di)])?;
        let reference = rec[gap].phase_unwrapped - rec[gap - 1].phase_unwrapped;
        let step = rec[gap + 1].phase_unwrapped - rec[gap].phase_unwrapped;
        let trace = interfere_delayed(&traj, setup.period, reference)?;
        let (a, b) = rec[gap + 1].gate;
        Ok(FringeRow {
            di,
            pair_energy: trace.energy(a, b),
            delta_phi: step - reference,
        })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRate {
    pub n_pairs: usize,
    pub errors: usize,
    pub rate: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval for `k` successes in `n` trials at `z` standard
/// deviations.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Decode each measured phase step as bit 1 when `cos(dphi) < 0` and count
/// mismatches against the intended bits.
pub fn coding_error_rate(measured: &[f64], bits: &[bool]) -> Result<ErrorRate> {
    if measured.is_empty() {
        return Err(Error::invalid("ensemble", "no pulse pairs"));
    }
    if measured.len() != bits.len() {
        return Err(Error::invalid("bits", "one intended bit per measured pair required"));
    }
    let errors = measured
        .iter()
        .zip(bits)
        .filter(|(&x, &b)| (x.cos() < 0.0) != b)
        .count();
    let n = measured.len();
    let (ci_low, ci_high) = wilson_interval(errors, n, 1.959_963_984_540_054);
    Ok(ErrorRate {
        n_pairs: n,
        errors,
        rate: errors as f64 / n as f64,
        ci_low,
        ci_high,
    })
}
