//! Mode orchestration: simulate, stability, oracle and verify.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use floquet_dgtd::experiment::{freespace_cell, run_with_probes, ExperimentSpec, Fill, Inclusion, LayerSpec};
use floquet_dgtd::mesh::{load_mesh, Axis, Lattice2, MeshFormat, Region, Shape};
use floquet_dgtd::operators::{MaterialTable, Units};
use floquet_dgtd::oracle::{self, Layer, LayerStack, Pol, C0};
use floquet_dgtd::postproc::{write_rt_csv, write_time_series_csv};
use floquet_dgtd::solver::{
    find_min_stable_scale, Direction, Discretization, IncidenceConfig, Polarization, StabilityProbe, Waveform,
};
use rayon::prelude::*;

use crate::config::{DirectionName, PolarizationName, RunConfig, ShapeName};

/// Failure of a run: a short machine-readable kind and a message.
#[derive(Debug)]
pub struct RunError {
    pub kind: &'static str,
    pub message: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for RunError {}

impl From<floquet_dgtd::Error> for RunError {
    fn from(e: floquet_dgtd::Error) -> Self {
        use floquet_dgtd::Error::*;
        let kind = match &e {
            Config(_) => "config",
            NodeSet(_) => "node_set",
            Parse { .. } => "mesh_parse",
            Validation(_) => "mesh_validation",
            Geometry(_) => "geometry",
            Topology { .. } => "topology",
            Material(_) => "material",
            GrazingIncidence { .. } => "grazing_incidence",
            BlowUp { .. } => "blow_up",
            Probe(_) => "probe",
            Spectrum(_) => "spectrum",
            SearchFailure(_) => "search_failure",
            Internal(_) => "internal",
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self { kind: "io", message: e.to_string() }
    }
}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        Self { kind: "config", message: e.to_string() }
    }
}

fn config_error(msg: impl Into<String>) -> RunError {
    RunError { kind: "config", message: msg.into() }
}

pub type RunResult<T> = Result<T, RunError>;

/// Settings that come from the command line rather than the config file.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub out: Option<PathBuf>,
    pub natural_units: bool,
}

fn units(cfg: &RunConfig, inv: &Invocation) -> Units {
    if inv.natural_units || cfg.units.natural {
        Units::natural()
    } else {
        Units::si()
    }
}

fn out_dir(cfg: &RunConfig, inv: &Invocation) -> RunResult<PathBuf> {
    let dir = inv.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn incidence(cfg: &RunConfig) -> RunResult<IncidenceConfig> {
    let i = &cfg.incidence;
    let wf = Waveform::from_band(i.f_min_hz, i.f_max_hz, i.amplitude)?;
    let pol = match i.polarization {
        PolarizationName::Te => Polarization::Te,
        PolarizationName::Tm => Polarization::Tm,
    };
    let dir = match i.direction {
        DirectionName::Down => Direction::Down,
        DirectionName::Up => Direction::Up,
    };
    Ok(IncidenceConfig::new(i.theta_deg.to_radians(), i.phi_deg.to_radians(), pol, dir, wf)?)
}

fn layer_specs(cfg: &RunConfig) -> Vec<LayerSpec> {
    cfg.layers
        .thickness
        .iter()
        .zip(&cfg.layers.material)
        .map(|(&thickness, &id)| LayerSpec {
            thickness,
            eps_r: cfg.materials.eps_r[id as usize],
            mu_r: cfg.materials.mu_r[id as usize],
        })
        .collect()
}

fn inclusions(cfg: &RunConfig) -> RunResult<Vec<Inclusion>> {
    cfg.inclusions
        .iter()
        .map(|i| {
            let shape = match i.shape {
                ShapeName::Box => Shape::Box,
                ShapeName::CylinderX => Shape::Cylinder(0),
                ShapeName::CylinderY => Shape::Cylinder(1),
                ShapeName::CylinderZ => Shape::Cylinder(2),
            };
            let fill = match i.material {
                Some(id) if !i.pec => Fill::Medium {
                    eps_r: cfg.materials.eps_r[id as usize],
                    mu_r: cfg.materials.mu_r[id as usize],
                },
                _ => Fill::Pec,
            };
            Ok(Inclusion { region: Region::new(i.lo, i.hi, shape)?, fill })
        })
        .collect()
}

fn planes(cfg: &RunConfig) -> RunResult<(f64, f64, f64)> {
    match (cfg.planes.z_tfsf, cfg.planes.z_reflect, cfg.planes.z_transmit) {
        (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
        _ => Err(config_error("planes.z_tfsf, planes.z_reflect and planes.z_transmit are required")),
    }
}

/// Mesh and operator described by the configuration.
pub fn build_discretization(cfg: &RunConfig, inv: &Invocation) -> RunResult<Discretization> {
    let (z_tfsf, z_reflect, z_transmit) = planes(cfg)?;
    let lattice = Lattice2::rectangular(cfg.lattice.lx, cfg.lattice.ly)?;
    let units = units(cfg, inv);
    let mut inc = incidence(cfg)?;
    match &cfg.mesh.file {
        None => {
            if cfg.layers.thickness.is_empty() {
                return Err(config_error("layers.thickness is required without mesh.file"));
            }
            let spec = ExperimentSpec {
                lattice,
                z0: cfg.mesh.z0,
                layers: layer_specs(cfg),
                inclusions: inclusions(cfg)?,
                z_tfsf,
                z_reflect,
                z_transmit,
                nx: cfg.mesh.nx,
                ny: cfg.mesh.ny,
                dz_max: cfg.mesh.dz_max,
                stagger: cfg.mesh.stagger,
                order: cfg.mesh.order,
                incidence: inc,
                units,
                v_cfl: cfg.time.v_cfl,
                t_final: cfg.t_final().unwrap_or(0.0),
                pad: cfg.output.pad,
            };
            Ok(spec.discretize()?)
        }
        Some(path) => {
            let file = File::open(path).map_err(|e| config_error(format!("mesh.file {path}: {e}")))?;
            let mesh = load_mesh(std::io::BufReader::new(file), MeshFormat::Msh22)?;
            let mut materials = MaterialTable::new(units);
            for (id, (&e, &m)) in cfg.materials.eps_r.iter().zip(&cfg.materials.mu_r).enumerate() {
                materials.insert(id as u32, e, m)?;
            }
            if let Some(id) = mesh.material.iter().find(|&&id| id as usize >= cfg.materials.eps_r.len()) {
                return Err(config_error(format!("mesh uses material {id}, which materials.eps_r does not define")));
            }
            inc.z_ref = z_tfsf;
            Ok(Discretization::new(mesh, lattice, materials, inc, cfg.mesh.order, Some(z_tfsf))?)
        }
    }
}

fn manifest(cfg: &RunConfig, mode: &str, derived: toml::Table) -> RunResult<String> {
    let mut table = toml::Table::try_from(cfg).map_err(|e| RunError { kind: "internal", message: e.to_string() })?;
    table.insert("mode".into(), toml::Value::String(mode.into()));
    table.insert("derived".into(), toml::Value::Table(derived));
    toml::to_string(&table).map_err(|e| RunError { kind: "internal", message: e.to_string() })
}

fn write_file(path: &Path, contents: &str) -> RunResult<()> {
    fs::write(path, contents)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn mean(values: &[(f64, f64)]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().map(|v| v.1).sum::<f64>() / values.len() as f64
}

/// Summary of a simulate run, also written to the manifest.
#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub out_dir: PathBuf,
    pub steps: usize,
    pub dt: f64,
    pub r_band_mean: f64,
    pub t_band_mean: f64,
}

pub fn simulate(cfg: &RunConfig, inv: &Invocation) -> RunResult<SimulateSummary> {
    let started = Instant::now();
    let t_final = cfg
        .t_final()
        .ok_or_else(|| config_error("time.t_final_s or time.n_periods is required"))?;
    let (_, z_reflect, z_transmit) = planes(cfg)?;
    let disc = build_discretization(cfg, inv)?;
    let dir = out_dir(cfg, inv)?;
    log::info!(
        "{} elements, order {}, {} periodic fragments",
        disc.n_elements(),
        disc.reference.order,
        disc.periodic.fragments.len()
    );
    let res = run_with_probes(&disc, z_reflect, z_transmit, cfg.time.v_cfl, t_final, cfg.output.pad)?;
    let (f_lo, f_hi) = (cfg.incidence.f_min_hz, cfg.incidence.f_max_hz);

    let mut spectra = BufWriter::new(File::create(dir.join(&cfg.output.spectra_csv))?);
    write_rt_csv(&mut spectra, &res.reflectance, &res.transmittance, f_lo, f_hi)?;
    spectra.flush()?;
    let mut series = BufWriter::new(File::create(dir.join(&cfg.output.series_csv))?);
    write_time_series_csv(&mut series, &res.output.times, &res.output.a00, &res.output.energy)?;
    series.flush()?;
    if cfg.output.plot_script {
        write_file(&dir.join("plot_spectra.py"), &plot_script(&cfg.output.spectra_csv))?;
    }

    let r_band_mean = mean(&res.reflectance.band(f_lo, f_hi));
    let t_band_mean = mean(&res.transmittance.band(f_lo, f_hi));
    let n_samples = res.output.times.len();
    let df = 1.0 / (cfg.output.pad as f64 * n_samples as f64 * res.output.dt);
    let mut d = toml::Table::new();
    d.insert("elements".into(), (disc.n_elements() as i64).into());
    d.insert("np".into(), (disc.np() as i64).into());
    d.insert("h_min".into(), disc.mesh.h_min().into());
    d.insert("dt".into(), res.output.dt.into());
    d.insert("steps".into(), (res.output.steps as i64).into());
    d.insert("t_final".into(), t_final.into());
    d.insert("f_resolution".into(), df.into());
    d.insert("units".into(), (if units(cfg, inv).c0 == 1.0 { "natural" } else { "si" }).into());
    d.insert("periodic_fragments".into(), (disc.periodic.fragments.len() as i64).into());
    d.insert(
        "periodic_area_error".into(),
        disc.periodic.area_error(Axis::X).max(disc.periodic.area_error(Axis::Y)).into(),
    );
    d.insert("r_band_mean".into(), r_band_mean.into());
    d.insert("t_band_mean".into(), t_band_mean.into());
    d.insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
    write_file(&dir.join(&cfg.output.manifest), &manifest(cfg, "simulate", d)?)?;
    Ok(SimulateSummary {
        out_dir: dir,
        steps: res.output.steps,
        dt: res.output.dt,
        r_band_mean,
        t_band_mean,
    })
}

fn plot_script(csv: &str) -> String {
    format!(
        "import csv\nimport matplotlib.pyplot as plt\n\nrows = list(csv.DictReader(open({csv:?})))\n\
         f = [float(r['f_hz']) / 1e6 for r in rows]\n\
         plt.plot(f, [float(r['R']) for r in rows], label='R')\n\
         plt.plot(f, [float(r['T']) for r in rows], label='T')\n\
         plt.xlabel('frequency (MHz)')\nplt.legend()\nplt.savefig('spectra.png', dpi=150)\n"
    )
}

/// Smallest stable CFL scale per angle on the free-space cell of side lambda_min / 2.
pub fn stability(cfg: &RunConfig, inv: &Invocation) -> RunResult<Vec<(f64, f64)>> {
    let started = Instant::now();
    let dir = out_dir(cfg, inv)?;
    let units = units(cfg, inv);
    let lambda = units.c0 / cfg.incidence.f_max_hz;
    let s = &cfg.stability;
    let probe = StabilityProbe {
        steps: s.steps,
        growth_limit: 10.0,
        v_max: s.v_max,
        tolerance: s.tolerance,
        seed: s.seed,
    };
    let base = incidence(cfg)?;
    let rows = s
        .thetas_deg
        .par_iter()
        .map(|&theta| -> RunResult<(f64, f64)> {
            let inc = IncidenceConfig::new(theta.to_radians(), base.phi, base.polarization, base.direction, base.waveform)?;
            let disc = freespace_cell(lambda, s.cell_layers, cfg.mesh.order, inc, units)?;
            let v = find_min_stable_scale(&disc, &probe)?;
            log::info!("theta = {theta} deg: V = {v}");
            Ok((theta, v))
        })
        .collect::<RunResult<Vec<_>>>()?;
    let mut csv = String::from("theta_deg,v_cfl\n");
    for (t, v) in &rows {
        csv += &format!("{t},{v:.4}\n");
    }
    write_file(&dir.join(&cfg.output.stability_csv), &csv)?;
    let mut d = toml::Table::new();
    d.insert("lambda_min".into(), lambda.into());
    d.insert("cell_side".into(), (0.5 * lambda).into());
    d.insert("element_edge".into(), (0.1 * lambda).into());
    d.insert(
        "v_cfl".into(),
        toml::Value::Array(rows.iter().map(|r| r.1.into()).collect()),
    );
    d.insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
    write_file(&dir.join(&cfg.output.manifest), &manifest(cfg, "stability", d)?)?;
    Ok(rows)
}

/// Transfer-matrix reference for the configured layer stack.
pub fn oracle_mode(cfg: &RunConfig, inv: &Invocation) -> RunResult<PathBuf> {
    if cfg.mesh.file.is_some() || cfg.layers.thickness.len() < 2 {
        return Err(config_error("oracle mode needs a layered stack of at least two layers"));
    }
    let dir = out_dir(cfg, inv)?;
    let mut layers: Vec<Layer> = layer_specs(cfg)
        .iter()
        .map(|l| Layer { thickness: l.thickness, eps_r: l.eps_r, mu_r: l.mu_r })
        .collect();
    // the oracle lists layers along the incident path
    if cfg.incidence.direction == DirectionName::Down {
        layers.reverse();
    }
    let stack = LayerStack::new(layers)?;
    let pol = match cfg.incidence.polarization {
        PolarizationName::Te => Pol::Te,
        PolarizationName::Tm => Pol::Tm,
    };
    // lengths are in meters either way; natural frequencies are in units of c0 / m
    let to_si = C0 / units(cfg, inv).c0;
    let i = &cfg.incidence;
    let n = ((i.f_max_hz - i.f_min_hz) / cfg.oracle.f_step_hz).floor() as usize;
    let freqs: Vec<f64> = (0..=n).map(|k| i.f_min_hz + k as f64 * cfg.oracle.f_step_hz).collect();
    let si: Vec<f64> = freqs.iter().map(|f| f * to_si).collect();
    let mut body = Vec::new();
    oracle::write_oracle_csv(&mut body, &stack, i.theta_deg.to_radians(), pol, &si)?;
    let path = dir.join(&cfg.output.oracle_csv);
    fs::write(&path, body)?;
    let mut d = toml::Table::new();
    d.insert(
        "floquet_cutoff".into(),
        (oracle::floquet_cutoff(
            &Lattice2::rectangular(cfg.lattice.lx, cfg.lattice.ly)?,
            i.theta_deg.to_radians(),
            i.phi_deg.to_radians(),
        ) / to_si)
            .into(),
    );
    d.insert("frequencies".into(), (freqs.len() as i64).into());
    write_file(&dir.join(&cfg.output.manifest), &manifest(cfg, "oracle", d)?)?;
    Ok(path)
}
