//! Layered unit-cell experiments: build the mesh and operator for a stack of planar
//! layers, run it with a plane-wave source, and reduce the probe records to R(f), T(f).

use crate::error::{Error, Result};
use crate::mesh::{generate_box_mesh, BoundaryKind, BoxLayer, BoxMeshSpec, Lattice2, Region};
use crate::operators::{MaterialTable, Units};
use crate::postproc::{
    incident_reference_spectrum, power_coefficient, spectrum, PowerCoefficient, DEFAULT_FLOOR,
};
use crate::solver::{
    run_simulation, Direction, Discretization, IncidenceConfig, SimulationConfig, SimulationOutput,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub thickness: f64,
    pub eps_r: f64,
    pub mu_r: f64,
}

impl LayerSpec {
    pub fn air(thickness: f64) -> Self {
        Self { thickness, eps_r: 1.0, mu_r: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fill {
    /// Elements inside are removed and the exposed faces become PEC.
    Pec,
    Medium { eps_r: f64, mu_r: f64 },
}

/// A laterally structured object placed inside the layers. Whole grid cells are marked
/// by their centre, so curved or thin shapes are staircased onto the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub region: Region,
    pub fill: Fill,
}

/// A periodic cell filled with planar layers, excited from a TF/SF plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub lattice: Lattice2,
    /// Bottom of the computational domain.
    pub z0: f64,
    /// Layers from bottom to top; together they fill the whole domain.
    pub layers: Vec<LayerSpec>,
    /// Applied in order on top of the layers; later entries win.
    pub inclusions: Vec<Inclusion>,
    pub z_tfsf: f64,
    /// Probe in the scattered-field region (reflection).
    pub z_reflect: f64,
    /// Probe in the total-field region beyond the structure (transmission).
    pub z_transmit: f64,
    pub nx: usize,
    pub ny: usize,
    /// Largest element height along z.
    pub dz_max: f64,
    pub stagger: bool,
    pub order: usize,
    pub incidence: IncidenceConfig,
    pub units: Units,
    pub v_cfl: f64,
    pub t_final: f64,
    /// Zero-padding factor for the spectra.
    pub pad: usize,
}

impl ExperimentSpec {
    pub fn z_top(&self) -> f64 {
        self.z0 + self.layers.iter().map(|l| l.thickness).sum::<f64>()
    }

    fn layer_at(&self, z: f64) -> Option<(usize, &LayerSpec)> {
        let mut lo = self.z0;
        for (i, l) in self.layers.iter().enumerate() {
            if z > lo && z < lo + l.thickness {
                return Some((i, l));
            }
            lo += l.thickness;
        }
        None
    }

    /// Check the plane ordering against the incidence direction.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.iter().any(|l| !(l.thickness > 0.0)) {
            return Err(Error::Config("layers must be non-empty with positive thickness".into()));
        }
        if !(self.dz_max > 0.0) || self.nx == 0 || self.ny == 0 || self.pad == 0 {
            return Err(Error::Config("dz_max, nx, ny and pad must be positive".into()));
        }
        let top = self.z_top();
        for (name, z) in [
            ("tfsf", self.z_tfsf),
            ("reflect", self.z_reflect),
            ("transmit", self.z_transmit),
        ] {
            if !(z > self.z0 && z < top) {
                return Err(Error::Config(format!("{name} plane z = {z} is outside the domain")));
            }
        }
        let (_, l) = self.layer_at(self.z_tfsf).ok_or_else(|| {
            Error::Config("the tfsf plane must not coincide with a layer interface".into())
        })?;
        if l.eps_r != 1.0 || l.mu_r != 1.0 {
            return Err(Error::Config("the tfsf plane must lie in vacuum".into()));
        }
        for inc in &self.inclusions {
            let (lo, hi) = (inc.region.lo[2], inc.region.hi[2]);
            if [self.z_tfsf, self.z_reflect, self.z_transmit].iter().any(|&z| z >= lo && z <= hi) {
                return Err(Error::Config(format!(
                    "inclusion spanning z = {lo}..{hi} crosses the source or a probe plane"
                )));
            }
        }
        // the reflection probe sits on the source side, the transmission probe beyond it
        let s = self.incidence.direction.sign();
        let ordered = match self.incidence.direction {
            Direction::Down => self.z_reflect > self.z_tfsf && self.z_transmit < self.z_tfsf,
            Direction::Up => self.z_reflect < self.z_tfsf && self.z_transmit > self.z_tfsf,
        };
        if !ordered {
            return Err(Error::Config(format!(
                "planes must satisfy reflect {} tfsf {} transmit along the incident direction",
                if s < 0.0 { ">" } else { "<" },
                if s < 0.0 { ">" } else { "<" },
            )));
        }
        Ok(())
    }

    /// Mesh and operator for this cell. Layer `i` uses material id `i`.
    pub fn discretize(&self) -> Result<Discretization> {
        self.validate()?;
        let mut cuts = vec![self.z0];
        let mut z = self.z0;
        for l in &self.layers {
            z += l.thickness;
            cuts.push(z);
        }
        let planes = [self.z_tfsf, self.z_reflect, self.z_transmit];
        let bounds = self.inclusions.iter().flat_map(|i| [i.region.lo[2], i.region.hi[2]]);
        let top = self.z_top();
        let mut breaks: Vec<f64> = cuts
            .iter()
            .chain(planes.iter())
            .copied()
            .chain(bounds.filter(|&z| z > self.z0 && z < top))
            .collect();
        breaks.sort_by(f64::total_cmp);
        let tol = 1e-9 * (self.z_top() - self.z0);
        breaks.dedup_by(|a, b| (*a - *b).abs() < tol);

        let mut layers = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let (i, _) = self
                .layer_at(0.5 * (w[0] + w[1]))
                .ok_or_else(|| Error::Internal("sub-layer outside every layer".into()))?;
            layers.push(BoxLayer {
                nz: ((w[1] - w[0]) / self.dz_max - 1e-9).ceil().max(1.0) as usize,
                material: i as u32,
            });
        }
        let mut mesh = generate_box_mesh(&BoxMeshSpec {
            lattice: self.lattice,
            z_breaks: breaks,
            layers,
            nx: self.nx,
            ny: self.ny,
            stagger: self.stagger,
            top: BoundaryKind::Abc,
            bottom: BoundaryKind::Abc,
        })?;
        let mut materials = MaterialTable::new(self.units);
        for (i, l) in self.layers.iter().enumerate() {
            materials.insert(i as u32, l.eps_r, l.mu_r)?;
        }
        if !self.inclusions.is_empty() {
            let mut remove = vec![false; mesh.n_elements()];
            let hex_centres: Vec<[f64; 3]> = (0..mesh.n_elements() / 6)
                .map(|h| {
                    let mut c = [0.0; 3];
                    for k in 6 * h..6 * h + 6 {
                        let p = mesh.centroid(k);
                        (0..3).for_each(|d| c[d] += p[d] / 6.0);
                    }
                    c
                })
                .collect();
            for (j, inc) in self.inclusions.iter().enumerate() {
                let id = (self.layers.len() + j) as u32;
                if let Fill::Medium { eps_r, mu_r } = inc.fill {
                    materials.insert(id, eps_r, mu_r)?;
                }
                for (h, c) in hex_centres.iter().enumerate() {
                    if inc.region.contains(*c) {
                        for k in 6 * h..6 * h + 6 {
                            remove[k] = inc.fill == Fill::Pec;
                            mesh.material[k] = id;
                        }
                    }
                }
            }
            if remove.iter().all(|&r| r) {
                return Err(Error::Config("inclusions remove every element".into()));
            }
            if remove.iter().any(|&r| r) {
                mesh = mesh.carve(&remove)?;
            }
        }
        let mut inc = self.incidence;
        inc.z_ref = self.z_tfsf;
        Discretization::new(mesh, self.lattice, materials, inc, self.order, Some(self.z_tfsf))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub output: SimulationOutput,
    pub reflectance: PowerCoefficient,
    pub transmittance: PowerCoefficient,
}

/// Run the experiment and turn the two probe records into power coefficients.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let disc = spec.discretize()?;
    run_on(&disc, spec)
}

/// Same as [`run_experiment`] on an already built operator.
pub fn run_on(disc: &Discretization, spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_with_probes(disc, spec.z_reflect, spec.z_transmit, spec.v_cfl, spec.t_final, spec.pad)
}

/// Run `disc` to `t_final` recording A00 on the reflection and transmission planes, and
/// normalise both spectra by the incident pulse.
pub fn run_with_probes(
    disc: &Discretization,
    z_reflect: f64,
    z_transmit: f64,
    v_cfl: f64,
    t_final: f64,
    pad: usize,
) -> Result<ExperimentResult> {
    let cfg = SimulationConfig {
        t_final,
        v_cfl,
        energy_every: 50,
        probe_planes: vec![z_reflect, z_transmit],
        ..SimulationConfig::default()
    };
    let output = run_simulation(disc, &cfg, None)?;
    let r_spec = spectrum(&output.a00[0], output.dt, pad)?;
    let t_spec = spectrum(&output.a00[1], output.dt, pad)?;
    let inc = incident_reference_spectrum(&disc.incidence, &r_spec.freqs);
    Ok(ExperimentResult {
        reflectance: power_coefficient(&r_spec, &inc, DEFAULT_FLOOR)?,
        transmittance: power_coefficient(&t_spec, &inc, DEFAULT_FLOOR)?,
        output,
    })
}

/// Excitation-free cell for stability searches: side `lambda / 2`, cubic elements of
/// edge `lambda / 10`, PEC top and bottom.
pub fn freespace_cell(
    lambda: f64,
    layers: usize,
    order: usize,
    incidence: IncidenceConfig,
    units: Units,
) -> Result<Discretization> {
    let side = 0.5 * lambda;
    let lattice = Lattice2::rectangular(side, side)?;
    let h = 0.1 * lambda;
    let mut spec = BoxMeshSpec::uniform(lattice, 0.0, layers as f64 * h, 5, 5, layers);
    spec.top = BoundaryKind::Pec;
    spec.bottom = BoundaryKind::Pec;
    let mesh = generate_box_mesh(&spec)?;
    let materials = MaterialTable::new(units).with(0, 1.0, 1.0)?;
    Discretization::new(mesh, lattice, materials, incidence, order, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Polarization, Waveform};

    fn spec() -> ExperimentSpec {
        let wf = Waveform::from_band(30e6, 140e6, 1.0).unwrap();
        ExperimentSpec {
            lattice: Lattice2::rectangular(0.35, 0.35).unwrap(),
            z0: 0.0,
            layers: vec![LayerSpec::air(1.0), LayerSpec { thickness: 1.0, eps_r: 4.0, mu_r: 1.0 }, LayerSpec::air(1.0)],
            inclusions: vec![],
            z_tfsf: 2.5,
            z_reflect: 2.75,
            z_transmit: 0.25,
            nx: 1,
            ny: 1,
            dz_max: 0.3,
            stagger: false,
            order: 1,
            incidence: IncidenceConfig::new(0.5, 0.0, Polarization::Te, Direction::Down, wf).unwrap(),
            units: Units::si(),
            v_cfl: 1.0,
            t_final: 1e-9,
            pad: 2,
        }
    }

    #[test]
    fn mesh_respects_layers_and_planes() {
        let d = spec().discretize().unwrap();
        for z in [0.25, 1.0, 2.0, 2.5, 2.75] {
            assert!(!d.mesh.faces_on_z_plane(z, 1e-9).is_empty(), "no faces on z = {z}");
        }
        for k in 0..d.n_elements() {
            let zc = d.mesh.centroid(k)[2];
            let expect = if zc > 1.0 && zc < 2.0 { 4.0 } else { 1.0 };
            assert_eq!(d.element_material(k).eps_r, expect);
        }
        assert_eq!(d.incidence.z_ref, 2.5);
    }

    #[test]
    fn misplaced_planes_rejected() {
        let mut s = spec();
        s.z_tfsf = 1.5;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.z_reflect = 2.25;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.incidence.direction = Direction::Up;
        assert!(s.validate().is_err());
        let mut s = spec();
        s.z_transmit = 3.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn silent_source_gives_silent_probes() {
        let mut s = spec();
        s.incidence.waveform.amplitude = 0.0;
        let r = run_experiment(&s).unwrap();
        assert!(r.output.a00.iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn inclusions_set_materials_and_carve_pec() {
        use crate::mesh::{FaceTag, Shape};
        let mut s = spec();
        s.nx = 4;
        s.ny = 4;
        let bar = Region::new([0.0, 0.0, 1.0], [0.175, 0.35, 2.0], Shape::Box).unwrap();
        let rod = Region::new([0.1, 0.0, 1.2], [0.3, 0.35, 1.8], Shape::Cylinder(1)).unwrap();
        s.inclusions = vec![
            Inclusion { region: bar, fill: Fill::Medium { eps_r: 2.0, mu_r: 1.0 } },
            Inclusion { region: rod, fill: Fill::Pec },
        ];
        let plain = spec_with_grid(4).discretize().unwrap();
        let d = s.discretize().unwrap();
        assert!(d.n_elements() < plain.n_elements());
        assert!(!d.mesh.faces_with_tag(FaceTag::Pec).is_empty());
        assert!(d.mesh.faces_with_tag(FaceTag::Pec).iter().all(|&(k, f)| {
            let c = d.mesh.face_coords(k, f);
            c.iter().all(|p| p[2] >= 1.2 - 1e-12 && p[2] <= 1.8 + 1e-12)
        }));
        let eps: Vec<f64> = (0..d.n_elements()).map(|k| d.element_material(k).eps_r).collect();
        assert!(eps.contains(&2.0) && eps.contains(&4.0) && eps.contains(&1.0));

        let mut s2 = s.clone();
        s2.inclusions[0].region.hi[2] = 2.6;
        assert!(s2.validate().is_err());
    }

    fn spec_with_grid(n: usize) -> ExperimentSpec {
        let mut s = spec();
        s.nx = n;
        s.ny = n;
        s
    }
}
