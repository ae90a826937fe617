//! Time-domain master/slave integrator.

mod diag;
mod drive;
mod engine;
mod noise;

pub use diag::{compute_r, estimate_kappa};
pub use drive::{
    build_master_drive, build_slave_drive, DriveCursor, DriveWaveform, Perturbation, Segment, SlaveTiming,
};
pub use engine::{deterministic_rhs, rest_state, simulate, Derivs, SimOptions, SystemParams};
pub use noise::{langevin_increments, NoiseStream, Q_FLOOR};

use crate::error::{Error, Result};

/// Instantaneous state of one laser.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaserState {
    /// Carrier number.
    pub n: f64,
    /// Photon number.
    pub q: f64,
    /// Optical phase [rad], unwrapped.
    pub phi: f64,
    /// Temperature deviation [K].
    pub dt: f64,
}

/// Uniform sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be > 0"));
        }
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one sample"));
        }
        Ok(TimeGrid { t0, dt, n })
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Index of the sample nearest to `t`, clamped to the grid.
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n - 1)
        }
    }
}

/// Sampled master and slave trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub master: Vec<LaserState>,
    pub slave: Vec<LaserState>,
    pub i_master: Vec<f64>,
    pub i_slave: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.grid.time(k)
    }
}
