//! Quick invariant suite shared by CI and the acceptance runs.

use floquet_dgtd::mesh::{generate_box_mesh, Axis, BoundaryKind, BoxMeshSpec, Lattice2};
use floquet_dgtd::operators::{MaterialTable, Units};
use floquet_dgtd::oracle::{self, LayerStack, Pol, C0};
use floquet_dgtd::reference::build_reference;
use floquet_dgtd::solver::{
    compute_dt, Direction, Discretization, IncidenceConfig, Lsrk4, Polarization, Waveform,
};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn cell(theta_deg: f64, stagger: bool, bc: BoundaryKind, tfsf: Option<f64>) -> floquet_dgtd::Result<Discretization> {
    let lat = Lattice2::rectangular(1.0, 1.0)?;
    let mut spec = BoxMeshSpec::uniform(lat, 0.0, 2.0, 2, 2, 4);
    spec.stagger = stagger;
    spec.top = bc;
    spec.bottom = bc;
    let mesh = generate_box_mesh(&spec)?;
    let materials = MaterialTable::new(Units::natural()).with(0, 1.0, 1.0)?;
    let wf = Waveform::from_band(0.2, 0.8, 1.0)?;
    let mut inc = IncidenceConfig::new(theta_deg.to_radians(), 0.2, Polarization::Te, Direction::Down, wf)?;
    inc.z_ref = 1.0;
    Discretization::new(mesh, lat, materials, inc, 2, tfsf)
}

fn smooth(x: [f64; 3]) -> [f64; 6] {
    let (a, b) = (std::f64::consts::TAU * x[0], std::f64::consts::TAU * x[1]);
    [a.sin() + x[2], b.cos(), (a + b).sin(), 0.3 * x[2], (a - b).cos(), a.cos() * b.sin()]
}

fn reference_checks() -> floquet_dgtd::Result<Check> {
    let mut worst = 0.0f64;
    for order in 1..=4 {
        let re = build_reference(order)?;
        // the mass matrix integrates 1 to the reference volume 4/3
        let vol: f64 = re.mass.iter().sum();
        worst = worst.max((vol - 4.0 / 3.0).abs());
        // derivatives of linear fields are exact
        let f: Vec<f64> = re.nodes.iter().map(|p| 2.0 * p[0] - p[1] + 0.5 * p[2]).collect();
        let f = nalgebra::DVector::from_vec(f);
        for (d, exact) in [(&re.dr, 2.0), (&re.ds, -1.0), (&re.dt, 0.5)] {
            worst = worst.max((d * &f).iter().fold(0.0f64, |m, v| m.max((v - exact).abs())));
        }
    }
    Ok(Check {
        name: "reference element",
        pass: worst < 1e-11,
        detail: format!("worst volume/derivative error {worst:.1e} for P = 1..4"),
    })
}

fn fragment_checks() -> floquet_dgtd::Result<Check> {
    let d = cell(30.0, true, BoundaryKind::Abc, None)?;
    let err = d.periodic.area_error(Axis::X).max(d.periodic.area_error(Axis::Y));
    let n = d.periodic.fragments.len();
    Ok(Check {
        name: "non-conformal fragments",
        pass: err <= 1e-12 && n > 0,
        detail: format!("{n} fragments, relative area error {err:.1e}"),
    })
}

fn energy_checks() -> floquet_dgtd::Result<Check> {
    let d = cell(30.0, true, BoundaryKind::Pec, None)?;
    let mut q = d.sample(smooth).q;
    let v = 2.0 / 30f64.to_radians().cos().powi(2);
    let dt = compute_dt(d.mesh.h_min(), 2, v, 1.0);
    let mut rk = Lsrk4::new(q.len());
    let mut prev = d.energy(&q);
    let e0 = prev;
    let mut worst = f64::NEG_INFINITY;
    for step in 0..200 {
        rk.step(&mut q, step as f64 * dt, dt, |y, t, out| d.compute_rhs(y, t, out))?;
        let e = d.energy(&q);
        worst = worst.max((e - prev) / prev);
        prev = e;
    }
    Ok(Check {
        name: "energy dissipation",
        pass: worst <= 1e-10,
        detail: format!("E {e0:.4} -> {prev:.4} over 200 steps, worst relative step change {worst:.1e}"),
    })
}

fn reduction_checks() -> floquet_dgtd::Result<Check> {
    let d = cell(0.0, false, BoundaryKind::Abc, Some(1.0))?;
    let q = d.sample(smooth).q;
    let (mut a, mut b) = (vec![0.0; q.len()], vec![0.0; q.len()]);
    let t = d.incidence.waveform.t0;
    d.compute_rhs(&q, t, &mut a)?;
    d.compute_rhs_untransformed(&q, t, &mut b)?;
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale;
    Ok(Check {
        name: "normal-incidence reduction",
        pass: diff <= 1e-12,
        detail: format!("relative right-hand side difference {diff:.1e}"),
    })
}

fn oracle_checks() -> floquet_dgtd::Result<Check> {
    let stack = LayerStack::slab(1.0, 4.0);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let f = 10e6 + 2e6 * i as f64;
        for pol in [Pol::Te, Pol::Tm] {
            let (r, t) = oracle::multilayer_rt(&stack, 0.8, f, pol)?;
            worst = worst.max((r + t - 1.0).abs());
        }
        let te = oracle::multilayer_rt(&stack, 0.0, f, Pol::Te)?;
        let tm = oracle::multilayer_rt(&stack, 0.0, f, Pol::Tm)?;
        worst = worst.max((te.0 - tm.0).abs());
    }
    let f = 100e6;
    let (r, _) = oracle::multilayer_rt(&LayerStack::slab(C0 / f / 8.0, 4.0), 0.0, f, Pol::Te)?;
    Ok(Check {
        name: "oracle",
        pass: worst <= 1e-12 && (r - 0.36).abs() <= 1e-12,
        detail: format!("energy/polarization error {worst:.1e}, quarter-wave R = {r:.12}"),
    })
}

/// Run every check; construction failures count as failed checks.
pub fn run_checks() -> Vec<Check> {
    let suites: [(&'static str, fn() -> floquet_dgtd::Result<Check>); 5] = [
        ("reference element", reference_checks),
        ("non-conformal fragments", fragment_checks),
        ("energy dissipation", energy_checks),
        ("normal-incidence reduction", reduction_checks),
        ("oracle", oracle_checks),
    ];
    suites
        .iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| Check {
                name,
                pass: false,
                detail: e.to_string(),
            })
        })
        .collect()
}
