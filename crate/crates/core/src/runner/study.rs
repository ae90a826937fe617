//! Multi-run studies: the noisy coding ensemble and the thermal turn-on drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{coding_error_rate, extract_pulse_phases, pair_phases, wrap_pi, ErrorRate, TrainSetup};
use crate::error::{Error, Result};
use crate::parallel;
use crate::sim::{
    build_master_drive, build_slave_drive, compute_r, rest_state, simulate, SimOptions, SystemParams, Trajectory,
};

/// Offset separating the bit-pattern generator from the noise generator
/// under the same seed.
const BIT_KEY: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodedPair {
    pub member: usize,
    /// Index of the later pulse.
    pub index: usize,
    pub bit: bool,
    /// Measured phase step relative to the noise-free bit-0 step, wrapped.
    pub delta_phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodingCell {
    pub kappa: f64,
    pub r: f64,
    /// Noise-free phase step of an unperturbed pair.
    pub theta0: f64,
    pub rate: ErrorRate,
    pub pairs: Vec<CodedPair>,
}

/// Circular mean of angles.
pub fn circular_mean(xs: &[f64]) -> f64 {
    let (s, c) = xs.iter().fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
    s.atan2(c)
}

/// Random binary phase coding over a noisy ensemble at the coupling in `sys`.
///
/// Each member is a train of `pulses` slave pulses; the gap after pulse
/// `j >= 1` carries `dipi` when its bit is set, and pair `(j, j + 1)` is scored
/// against that bit. Pair 0 is left out because the first pulse starts from
/// a different carrier history. `theta0` and R come from a noise-free,
/// uncoded run.
pub fn coding_study(
    sys: &SystemParams,
    setup: &TrainSetup,
    dipi: f64,
    members: usize,
    pulses: usize,
    stream_base: u64,
) -> Result<CodingCell> {
    if members == 0 {
        return Err(Error::invalid("members", "must be >= 1"));
    }
    if pulses < 3 {
        return Err(Error::invalid("coding_pulses", "must be >= 3"));
    }
    let quiet = TrainSetup { noise: false, ..*setup };
    let (traj, rec) = quiet.run(sys, pulses, &[])?;
    let r = compute_r(&traj, &sys.slave, &sys.coupling, setup.period)?;
    let steps: Vec<f64> = pair_phases(&rec)[1..].iter().map(|p| p.delta_phi).collect();
    let theta0 = circular_mean(&steps);

    let runs = parallel::map_indexed(members, |m| -> Result<Vec<CodedPair>> {
        let stream = stream_base + m as u64;
        let mut bit_rng = ChaCha8Rng::seed_from_u64(setup.seed ^ BIT_KEY);
        bit_rng.set_stream(stream);
        let bits: Vec<bool> = (1..pulses - 1).map(|_| bit_rng.random()).collect();
        let pert: Vec<(usize, f64)> = bits
            .iter()
            .enumerate()
            .map(|(k, &b)| (k + 1, if b { dipi } else { 0.0 }))
            .collect();
        let noisy = TrainSetup {
            noise: true,
            stream,
            ..*setup
        };
        let (_, rec) = noisy.run(sys, pulses, &pert)?;
        Ok(pair_phases(&rec)[1..]
            .iter()
            .zip(&bits)
            .map(|(p, &bit)| CodedPair {
                member: m,
                index: p.index,
                bit,
                delta_phi: wrap_pi(p.delta_phi - theta0),
            })
            .collect())
    });
    let mut pairs = Vec::with_capacity(members * (pulses - 2));
    for run in runs {
        pairs.extend(run?);
    }
    let measured: Vec<f64> = pairs.iter().map(|p| p.delta_phi).collect();
    let bits: Vec<bool> = pairs.iter().map(|p| p.bit).collect();
    Ok(CodingCell {
        kappa: sys.coupling.kappa_ex,
        r,
        theta0,
        rate: coding_error_rate(&measured, &bits)?,
        pairs,
    })
}

/// Master excursions for the alternating pattern: every odd gap carries `dipi`.
pub fn alternating_pattern(pulses: usize, dipi: f64) -> Vec<(usize, f64)> {
    (0..pulses.saturating_sub(1))
        .map(|j| (j, if j % 2 == 1 { dipi } else { 0.0 }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    /// Index of the earlier pulse.
    pub pair: usize,
    /// Start of the earlier pulse [s].
    pub t: f64,
    pub delta_phi_off: f64,
    pub delta_phi_on: f64,
    /// `delta_phi_on - delta_phi_off`, from unwrapped pulse phases.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftStudy {
    pub rows: Vec<DriftRow>,
    /// `-mu_omega dT_inf T`.
    pub asymptote: f64,
    pub cold: Trajectory,
    pub hot: Trajectory,
}

/// Master switched on at t = 0 from `i_off` with the alternating pattern,
/// run with and without heating. The pair-to-pair phase steps of the two runs
/// are differenced from unwrapped pulse phases.
pub fn thermal_drift(sys: &SystemParams, setup: &TrainSetup, pulses: usize, dipi: f64, i_off: f64) -> Result<DriftStudy> {
    let tp = sys
        .thermal
        .ok_or_else(|| Error::invalid("thermal", "turn-on drift needs thermal parameters"))?;
    let timing = setup.timing(pulses);
    let slave = build_slave_drive(setup.period, setup.width, setup.i_low, setup.i_high, pulses)?;
    let master = build_master_drive(setup.i_s, &alternating_pattern(pulses, dipi), setup.d, &timing)?
        .switched_on_at(0.0, i_off)?;
    let initial = (rest_state(&sys.master, i_off)?, rest_state(&sys.slave, setup.i_low)?);
    let gates: Vec<(f64, f64)> = (0..pulses).map(|j| timing.gate(j)).collect();
    let run = |thermal: bool| -> Result<(Trajectory, Vec<f64>)> {
        let opts = SimOptions {
            warmup: 0.0,
            thermal,
            initial: Some(initial),
            ..setup.options(pulses)
        };
        let traj = simulate(sys, &master, &slave, &opts)?;
        let rec = extract_pulse_phases(&traj, &gates)?;
        let steps = rec.windows(2).map(|w| w[1].phase_unwrapped - w[0].phase_unwrapped).collect();
        Ok((traj, steps))
    };
    let (cold, off) = run(false)?;
    let (hot, on) = run(true)?;
    let rows = off
        .iter()
        .zip(&on)
        .enumerate()
        .map(|(j, (&a, &b))| DriftRow {
            pair: j,
            t: timing.pulse_start(j),
            delta_phi_off: a,
            delta_phi_on: b,
            drift: b - a,
        })
        .collect();
    Ok(DriftStudy {
        rows,
        asymptote: -tp.mu_omega * tp.settled_rise(setup.i_s) * setup.period,
        cold,
        hot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_alternates() {
        let p = alternating_pattern(5, 2.0);
        assert_eq!(p, vec![(0, 0.0), (1, 2.0), (2, 0.0), (3, 2.0)]);
    }

    #[test]
    fn circular_mean_wraps() {
        let m = circular_mean(&[std::f64::consts::PI - 0.1, -std::f64::consts::PI + 0.1]);
        assert!((m.abs() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn small_study_is_reproducible() {
        let sys = SystemParams::reference_device();
        let setup = TrainSetup {
            warmup: 0.5e-9,
            seed: 4,
            ..TrainSetup::default()
        };
        let a = coding_study(&sys, &setup, 3e-3, 2, 4, 0).unwrap();
        let b = coding_study(&sys, &setup, 3e-3, 2, 4, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rate.n_pairs, 4);
        assert!(a.r > 0.0);
    }
}
