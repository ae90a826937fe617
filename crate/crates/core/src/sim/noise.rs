//! Wiener increments and Langevin forces.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LaserState;
use crate::params::LaserParams;

/// Photon-number floor used wherever `1/sqrt(Q)` appears.
pub const Q_FLOOR: f64 = 1e-2;

/// Reproducible source of standard normals. A given `(seed, stream)` pair
/// always yields the same sequence; distinct streams are independent ChaCha
/// streams under the same key.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    pub seed: u64,
    pub stream: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        NoiseStream { seed, stream, rng }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Three independent standard normals `(W^A, W^B, W^C)`.
    #[inline]
    pub fn triple(&mut self) -> [f64; 3] {
        [self.normal(), self.normal(), self.normal()]
    }
}

/// Noise contributions `(dN, dQ, dphi)` over one step. `dw` holds the Wiener
/// increments already scaled by `sqrt(dt)`.
#[inline]
pub fn langevin_increments(s: &LaserState, p: &LaserParams, dw: [f64; 3]) -> (f64, f64, f64) {
    let n = s.n.max(0.0);
    let q = s.q.max(0.0);
    let qf = s.q.max(Q_FLOOR);
    let (sin, cos) = s.phi.sin_cos();
    let spont = p.c_sp * n / p.tau_e;
    let dq = 2.0 * (0.5 * spont * q).sqrt() * (cos * dw[0] + sin * dw[1]);
    let dphi = (0.5 * spont / qf).sqrt() * (cos * dw[1] - sin * dw[0]);
    let dn = -dq + (2.0 * n / p.tau_e).sqrt() * dw[2];
    (dn, dq, dphi)
}
