//! Semi-discrete transformed Maxwell system, boundary conditions and time marching.

mod discretization;
mod flux;
mod incidence;
mod run;
mod stability;
mod timestep;

pub use discretization::{Discretization, FieldState};
pub use flux::{bc_jump, numerical_flux, BoundaryCondition, TfsfSide, Trace};
pub use incidence::{incident_fields, Direction, IncidenceConfig, Polarization, Waveform};
pub use run::{run_simulation, SimulationConfig, SimulationOutput};
pub use stability::{find_min_stable_scale, is_stable, StabilityProbe};
pub use timestep::{compute_dt, lsrk4_step, Lsrk4, RK4A, RK4B, RK4C};
