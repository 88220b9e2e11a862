//! Search for the smallest stable CFL scale V at a given incidence angle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::discretization::Discretization;
use super::timestep::{compute_dt, Lsrk4};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProbe {
    /// Time steps per trial.
    pub steps: usize,
    /// A trial is unstable once the energy exceeds this multiple of the initial energy.
    pub growth_limit: f64,
    pub v_max: f64,
    /// Absolute bisection tolerance on V.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for StabilityProbe {
    fn default() -> Self {
        Self {
            steps: 2000,
            growth_limit: 10.0,
            v_max: 256.0,
            tolerance: 0.05,
            seed: 7,
        }
    }
}

/// Run one excitation-free trial at scale `v` from a seeded random state.
pub fn is_stable(disc: &Discretization, v: f64, probe: &StabilityProbe) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(probe.seed);
    let mut q: Vec<f64> = (0..disc.state_len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e0 = disc.energy(&q);
    let dt = compute_dt(disc.mesh.h_min(), disc.reference.order, v, disc.units.c0);
    let mut rk = Lsrk4::new(q.len());
    for step in 0..probe.steps {
        match rk.step(&mut q, step as f64 * dt, dt, |y, t, out| disc.compute_rhs(y, t, out)) {
            Ok(()) => {}
            Err(Error::BlowUp { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
        if step % 10 == 9 || step + 1 == probe.steps {
            let e = disc.energy(&q);
            if !e.is_finite() || e > probe.growth_limit * e0 {
                log::debug!("V = {v}: unstable after {} steps", step + 1);
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Smallest V in [1, v_max] for which a trial stays stable, to within the tolerance.
///
/// V = 1 is tried first; otherwise V is doubled until stable and the last interval is
/// bisected.
pub fn find_min_stable_scale(disc: &Discretization, probe: &StabilityProbe) -> Result<f64> {
    if is_stable(disc, 1.0, probe)? {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = 2.0f64.min(probe.v_max);
    loop {
        if is_stable(disc, hi, probe)? {
            break;
        }
        if hi >= probe.v_max {
            return Err(Error::SearchFailure(format!(
                "unstable even at V = {}",
                probe.v_max
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(probe.v_max);
    }
    while hi - lo > probe.tolerance {
        let mid = 0.5 * (lo + hi);
        if is_stable(disc, mid, probe)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
