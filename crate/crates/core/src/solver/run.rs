//! Time marching with plane probes, energy sampling and blow-up detection.

use super::discretization::{Discretization, FieldState};
use super::timestep::{compute_dt, Lsrk4};
use crate::error::{Error, Result};
use crate::postproc::PlaneProbe;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub t_final: f64,
    pub v_cfl: f64,
    /// Record energy every this many steps (0 disables energy sampling).
    pub energy_every: usize,
    /// Recording planes; A00 is sampled on each after every step.
    pub probe_planes: Vec<f64>,
    /// Energy above this multiple of the reference energy counts as a blow-up.
    pub blowup_factor: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_final: 0.0,
            v_cfl: 1.0,
            energy_every: 0,
            probe_planes: Vec::new(),
            blowup_factor: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub dt: f64,
    pub steps: usize,
    /// Sample times, starting at t = 0.
    pub times: Vec<f64>,
    /// A00 per probe plane per sample time.
    pub a00: Vec<Vec<[f64; 3]>>,
    /// (time, energy) samples.
    pub energy: Vec<(f64, f64)>,
    pub final_state: FieldState,
}

/// March `disc` from `initial` (or rest) to `cfg.t_final` with LSRK4.
///
/// The step is the CFL step rounded down so an integer number of steps reaches
/// `t_final`. Blow-up is a non-finite value, or energy exceeding `blowup_factor` times
/// the largest energy seen while the source is active (or initially present).
pub fn run_simulation(
    disc: &Discretization,
    cfg: &SimulationConfig,
    initial: Option<FieldState>,
) -> Result<SimulationOutput> {
    if !(cfg.t_final >= 0.0 && cfg.v_cfl > 0.0) {
        return Err(Error::Config("t_final must be non-negative and v_cfl positive".into()));
    }
    let probes = cfg
        .probe_planes
        .iter()
        .map(|&z| PlaneProbe::new(&disc.mesh, &disc.reference, &disc.lattice, z))
        .collect::<Result<Vec<_>>>()?;
    let np = disc.np();
    let dt_cfl = compute_dt(disc.mesh.h_min(), disc.reference.order, cfg.v_cfl, disc.units.c0);
    let steps = (cfg.t_final / dt_cfl).ceil() as usize;
    let dt = if steps > 0 { cfg.t_final / steps as f64 } else { dt_cfl };

    let mut state = initial.unwrap_or_else(|| disc.zero_state());
    if state.q.len() != disc.state_len() {
        return Err(Error::Config("initial state does not match the discretization".into()));
    }
    let t_start = state.time;
    let source_end = disc
        .z_tfsf
        .map(|_| 2.0 * disc.incidence.waveform.t0)
        .unwrap_or(0.0);

    let mut times = Vec::with_capacity(steps + 1);
    let mut a00: Vec<Vec<[f64; 3]>> = probes.iter().map(|_| Vec::with_capacity(steps + 1)).collect();
    let mut energy = Vec::new();
    let record = |state: &FieldState, times: &mut Vec<f64>, a00: &mut Vec<Vec<[f64; 3]>>| -> Result<()> {
        times.push(state.time);
        for (p, series) in probes.iter().zip(a00.iter_mut()) {
            series.push(p.record_a00(&state.q, np)?);
        }
        Ok(())
    };
    record(&state, &mut times, &mut a00)?;
    let mut e_ref = disc.energy(&state.q);
    if cfg.energy_every > 0 {
        energy.push((state.time, e_ref));
    }

    let mut rk = Lsrk4::new(state.q.len());
    for step in 1..=steps {
        let t = t_start + (step - 1) as f64 * dt;
        rk.step(&mut state.q, t, dt, |q, tt, out| disc.compute_rhs(q, tt, out))
            .map_err(|e| match e {
                Error::BlowUp { time, .. } => Error::BlowUp { time, step },
                other => other,
            })?;
        state.time = t_start + step as f64 * dt;
        record(&state, &mut times, &mut a00)?;
        if cfg.energy_every > 0 && step % cfg.energy_every == 0 {
            let e = disc.energy(&state.q);
            energy.push((state.time, e));
            if !e.is_finite() {
                return Err(Error::BlowUp { time: state.time, step });
            }
            if state.time <= source_end {
                e_ref = e_ref.max(e);
            } else if e_ref > 0.0 && e > cfg.blowup_factor * e_ref {
                return Err(Error::BlowUp { time: state.time, step });
            }
        }
    }
    log::info!("{steps} steps of {dt:.4e} s on {} elements", disc.n_elements());
    Ok(SimulationOutput {
        dt,
        steps,
        times,
        a00,
        energy,
        final_state: state,
    })
}
