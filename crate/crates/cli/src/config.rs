//! Run configuration: flat TOML with dotted keys, unknown keys rejected.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub layers: LayersConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inclusions: Vec<InclusionConfig>,
    pub incidence: IncidenceSection,
    #[serde(default)]
    pub planes: PlanesConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub units: UnitsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// Gmsh 2.2 file; when absent the layered box generator is used.
    pub file: Option<String>,
    pub nx: usize,
    pub ny: usize,
    pub dz_max: f64,
    pub stagger: bool,
    pub order: usize,
    pub z0: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            file: None,
            nx: 1,
            ny: 1,
            dz_max: 0.25,
            stagger: false,
            order: 3,
            z0: 0.0,
        }
    }
}

/// Material `i` has permittivity `eps_r[i]` and permeability `mu_r[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsConfig {
    pub eps_r: Vec<f64>,
    pub mu_r: Vec<f64>,
}

impl Default for MaterialsConfig {
    fn default() -> Self {
        Self {
            eps_r: vec![1.0],
            mu_r: vec![1.0],
        }
    }
}

/// Box-generator layers from bottom to top.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayersConfig {
    pub thickness: Vec<f64>,
    pub material: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    #[default]
    Box,
    CylinderX,
    CylinderY,
    CylinderZ,
}

/// Box-generator object given by its bounding box; cylinders are inscribed in it.
/// Exactly one of `material` and `pec` selects the filling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InclusionConfig {
    #[serde(default)]
    pub shape: ShapeName,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<u32>,
    #[serde(default)]
    pub pec: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationName {
    Te,
    Tm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Down,
    Up,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidenceSection {
    pub theta_deg: f64,
    #[serde(default)]
    pub phi_deg: f64,
    pub polarization: PolarizationName,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "down")]
    pub direction: DirectionName,
}

fn one() -> f64 {
    1.0
}

fn down() -> DirectionName {
    DirectionName::Down
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanesConfig {
    pub z_tfsf: Option<f64>,
    pub z_reflect: Option<f64>,
    pub z_transmit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_final_s: Option<f64>,
    /// Duration in periods of the lowest band frequency; used when t_final_s is absent.
    pub n_periods: Option<f64>,
    pub v_cfl: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t_final_s: None,
            n_periods: None,
            v_cfl: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub spectra_csv: String,
    pub series_csv: String,
    pub oracle_csv: String,
    pub stability_csv: String,
    pub manifest: String,
    /// Zero-padding factor for the spectra.
    pub pad: usize,
    /// Also write a small matplotlib script next to the spectra.
    pub plot_script: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            spectra_csv: "spectra.csv".into(),
            series_csv: "series.csv".into(),
            oracle_csv: "oracle.csv".into(),
            stability_csv: "stability.csv".into(),
            manifest: "manifest.toml".into(),
            pad: 4,
            plot_script: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub thetas_deg: Vec<f64>,
    pub steps: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub v_max: f64,
    /// Element layers of the free-space cell.
    pub cell_layers: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            thetas_deg: vec![0.0, 10.0, 30.0, 50.0, 70.0],
            steps: 2000,
            seed: 7,
            tolerance: 0.05,
            v_max: 256.0,
            cell_layers: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub f_step_hz: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { f_step_hz: 0.5e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnitsConfig {
    /// c0 = eps0 = mu0 = 1 instead of SI.
    pub natural: bool,
}

/// A configuration problem, with the offending key and its line when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{} (line {l}): {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Line (1-based) where `field` is assigned, either as a dotted key or inside its table.
fn line_of(text: &str, field: &str) -> Option<usize> {
    let (section, key) = field.rsplit_once('.').unwrap_or(("", field));
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs = lhs.trim().replace(' ', "");
        let full = if current.is_empty() { lhs } else { format!("{current}.{lhs}") };
        if full == field || (section.is_empty() && full.ends_with(&format!(".{key}"))) {
            return Some(i + 1);
        }
    }
    None
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].lines().count().max(1));
        ConfigError {
            field: "config".into(),
            line,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate().map_err(|(field, message)| ConfigError {
        line: line_of(text, &field),
        field,
        message,
    })?;
    Ok(cfg)
}

type Check = Result<(), (String, String)>;

fn fail(field: &str, msg: impl Into<String>) -> Check {
    Err((field.to_string(), msg.into()))
}

impl RunConfig {
    /// Semantic checks that do not need the mesh.
    pub fn validate(&self) -> Check {
        if !(self.lattice.lx > 0.0) {
            return fail("lattice.lx", "must be positive");
        }
        if !(self.lattice.ly > 0.0) {
            return fail("lattice.ly", "must be positive");
        }
        let inc = &self.incidence;
        if !(0.0..90.0).contains(&inc.theta_deg) {
            return fail("incidence.theta_deg", format!("{} is outside [0, 90)", inc.theta_deg));
        }
        if !inc.phi_deg.is_finite() {
            return fail("incidence.phi_deg", "must be finite");
        }
        if !(inc.f_min_hz > 0.0) {
            return fail("incidence.f_min_hz", "must be positive");
        }
        if !(inc.f_max_hz > inc.f_min_hz) {
            return fail("incidence.f_max_hz", "must exceed f_min_hz");
        }
        if !inc.amplitude.is_finite() {
            return fail("incidence.amplitude", "must be finite");
        }
        let m = &self.materials;
        if m.eps_r.is_empty() {
            return fail("materials.eps_r", "at least one material is required");
        }
        if m.mu_r.len() != m.eps_r.len() {
            return fail("materials.mu_r", "must have one entry per eps_r entry");
        }
        if m.eps_r.iter().any(|e| !(*e >= 1.0)) {
            return fail("materials.eps_r", "entries must be >= 1");
        }
        if m.mu_r.iter().any(|e| !(*e >= 1.0)) {
            return fail("materials.mu_r", "entries must be >= 1");
        }
        let mesh = &self.mesh;
        if !(1..=8).contains(&mesh.order) {
            return fail("mesh.order", "must be between 1 and 8");
        }
        if mesh.file.is_none() {
            if mesh.nx == 0 {
                return fail("mesh.nx", "must be at least 1");
            }
            if mesh.ny == 0 {
                return fail("mesh.ny", "must be at least 1");
            }
            if !(mesh.dz_max > 0.0) {
                return fail("mesh.dz_max", "must be positive");
            }
            let l = &self.layers;
            if l.thickness.len() != l.material.len() {
                return fail("layers.material", "must have one entry per layer thickness");
            }
            if l.thickness.iter().any(|t| !(*t > 0.0)) {
                return fail("layers.thickness", "entries must be positive");
            }
            if let Some(id) = l.material.iter().find(|&&id| id as usize >= m.eps_r.len()) {
                return fail("layers.material", format!("material {id} is not defined"));
            }
            for (i, inc) in self.inclusions.iter().enumerate() {
                if (0..3).any(|d| !(inc.hi[d] > inc.lo[d])) {
                    return fail("inclusions.hi", format!("inclusion {i}: hi must exceed lo on every axis"));
                }
                match (inc.material, inc.pec) {
                    (Some(_), true) | (None, false) => {
                        return fail("inclusions.pec", format!("inclusion {i}: give either material or pec = true"));
                    }
                    (Some(id), false) if id as usize >= m.eps_r.len() => {
                        return fail("inclusions.material", format!("inclusion {i}: material {id} is not defined"));
                    }
                    _ => {}
                }
            }
        } else if !self.inclusions.is_empty() {
            return fail("inclusions", "inclusions need the box generator; put them in the mesh file instead");
        }
        if !(self.time.v_cfl > 0.0) {
            return fail("time.v_cfl", "must be positive");
        }
        if let Some(t) = self.time.t_final_s {
            if !(t > 0.0) {
                return fail("time.t_final_s", "must be positive");
            }
        }
        if let Some(n) = self.time.n_periods {
            if !(n > 0.0) {
                return fail("time.n_periods", "must be positive");
            }
        }
        if self.output.pad == 0 {
            return fail("output.pad", "must be at least 1");
        }
        let s = &self.stability;
        if s.thetas_deg.iter().any(|t| !(0.0..90.0).contains(t)) {
            return fail("stability.thetas_deg", "angles must lie in [0, 90)");
        }
        if s.steps == 0 || s.cell_layers == 0 {
            return fail("stability.steps", "steps and cell_layers must be positive");
        }
        if !(s.tolerance > 0.0) || !(s.v_max >= 1.0) {
            return fail("stability.tolerance", "tolerance must be positive and v_max >= 1");
        }
        if !(self.oracle.f_step_hz > 0.0) {
            return fail("oracle.f_step_hz", "must be positive");
        }
        self.validate_planes()
    }

    fn validate_planes(&self) -> Check {
        let p = &self.planes;
        let (Some(tfsf), Some(refl), Some(trans)) = (p.z_tfsf, p.z_reflect, p.z_transmit) else {
            if p.z_tfsf.is_some() || p.z_reflect.is_some() || p.z_transmit.is_some() {
                return fail("planes", "z_tfsf, z_reflect and z_transmit must be given together");
            }
            return Ok(());
        };
        let down = self.incidence.direction == DirectionName::Down;
        // the reflection probe must see only scattered field, on the source side
        if down && refl <= tfsf || !down && refl >= tfsf {
            return fail(
                "planes.z_reflect",
                "lies in the total-field region; it must be on the incident side of z_tfsf",
            );
        }
        if down && trans >= tfsf || !down && trans <= tfsf {
            return fail("planes.z_transmit", "must lie in the total-field region beyond z_tfsf");
        }
        if self.mesh.file.is_none() {
            let top = self.mesh.z0 + self.layers.thickness.iter().sum::<f64>();
            for (name, z) in [("planes.z_tfsf", tfsf), ("planes.z_reflect", refl), ("planes.z_transmit", trans)] {
                if !(z > self.mesh.z0 && z < top) {
                    return fail(name, format!("z = {z} is outside the layered domain"));
                }
            }
        }
        Ok(())
    }

    /// Simulation length in seconds (or natural time units).
    pub fn t_final(&self) -> Option<f64> {
        self.time
            .t_final_s
            .or_else(|| self.time.n_periods.map(|n| n / self.incidence.f_min_hz))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_lookup_handles_tables_and_dotted_keys() {
        let text = "lattice.lx = 1\n[planes]\nz_reflect = 2 # probe\n";
        assert_eq!(line_of(text, "lattice.lx"), Some(1));
        assert_eq!(line_of(text, "planes.z_reflect"), Some(3));
        assert_eq!(line_of(text, "planes.z_tfsf"), None);
    }
}
