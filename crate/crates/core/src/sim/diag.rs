use super::Trajectory;
use crate::error::{Error, Result};
use crate::params::{CouplingParams, LaserParams};

/// Ratio of injection phase pull to spontaneous phase diffusion, averaged over
/// the last `period` of a noise-free trajectory:
/// `kappa (2 tau_e / C_sp) mean(sqrt(Q_M Q) / N)`.
pub fn compute_r(traj: &Trajectory, p: &LaserParams, coupling: &CouplingParams, period: f64) -> Result<f64> {
    let z = (period / traj.grid.dt).round();
    if !(z >= 1.0) {
        return Err(Error::domain(format!(
            "period {period:e} s is shorter than one sample ({:e} s)",
            traj.grid.dt
        )));
    }
    let z = z as usize;
    if z > traj.len() {
        return Err(Error::domain("trajectory shorter than one repetition period"));
    }
    if p.c_sp <= 0.0 {
        return Err(Error::invalid("C_sp", "R needs spontaneous emission"));
    }
    let start = traj.len() - z;
    let mean = (start..traj.len())
        .map(|k| {
            let (m, s) = (&traj.master[k], &traj.slave[k]);
            (m.q * s.q).sqrt() / s.n
        })
        .sum::<f64>()
        / z as f64;
    Ok(coupling.kappa_ex * 2.0 * p.tau_e / p.c_sp * mean)
}

/// Coupling rate from facet amplitude transmittance and round-trip time.
pub fn estimate_kappa(t_ms: f64, tau_l: f64) -> Result<f64> {
    if !(tau_l.is_finite() && tau_l > 0.0) {
        return Err(Error::invalid("tau_L_ps", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&t_ms) {
        return Err(Error::invalid("t_MS", "must lie in [0, 1]"));
    }
    Ok(t_ms / tau_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{LaserState, TimeGrid};

    fn flat(q: f64, n: f64, samples: usize) -> Trajectory {
        let st = LaserState { n, q, phi: 0.0, dt: 0.0 };
        Trajectory {
            grid: TimeGrid::new(0.0, 1e-12, samples).unwrap(),
            master: vec![st; samples],
            slave: vec![st; samples],
            i_master: vec![0.0; samples],
            i_slave: vec![0.0; samples],
        }
    }

    #[test]
    fn r_for_constant_trajectory() {
        let tr = flat(1e4, 5.5e7, 3000);
        let p = LaserParams::reference_device();
        let c = CouplingParams::new(1e10, 0.0).unwrap();
        let r = compute_r(&tr, &p, &c, 2.5e-9).unwrap();
        assert!((r - 363.636_363_636).abs() < 1e-6, "{r}");
        let off = CouplingParams::new(0.0, 0.0).unwrap();
        assert_eq!(compute_r(&tr, &p, &off, 2.5e-9).unwrap(), 0.0);
        let triple = CouplingParams::new(3e10, 0.0).unwrap();
        assert!((compute_r(&tr, &p, &triple, 2.5e-9).unwrap() - 3.0 * r).abs() < 1e-9 * r);
    }

    #[test]
    fn r_needs_a_period() {
        let tr = flat(1e4, 5.5e7, 100);
        let p = LaserParams::reference_device();
        let c = CouplingParams::default();
        assert!(compute_r(&tr, &p, &c, 0.1e-12).is_err());
        assert!(compute_r(&tr, &p, &c, 2.5e-9).is_err());
    }

    #[test]
    fn kappa_estimate() {
        assert!((estimate_kappa(0.1, 10e-12).unwrap() - 1e10).abs() < 1.0);
        assert_eq!(estimate_kappa(0.0, 10e-12).unwrap(), 0.0);
        assert!((estimate_kappa(0.1, 5e-12).unwrap() - 2e10).abs() < 1.0);
        assert!(estimate_kappa(0.1, 0.0).is_err());
        assert!(estimate_kappa(1.5, 1e-12).is_err());
    }
}
