//! Command implementations. Each command echoes its resolved configuration
//! as `# key=value` lines before the table.

use std::fs;
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use surftrap::finiteplane::{
    default_disc_grid, modified_greens, modified_greens_large_s, ring_on_disc_potential, sweep_ring_on_disc,
    FiniteDiscSpec,
};
use surftrap::gap1d::{field_gap, field_pol, GapKind, GapProfile, StripSpec};
use surftrap::gapsolver::{
    assemble_plane_potential, electrode_sigma_median, gap_center_residuals, solve_alphas, GapSolveSettings,
    GapSusceptibilityModel, PlanePotential,
};
use surftrap::kernel::{greens_function, propagate, Point3, SurfacePotential};
use surftrap::quad::QuadSettings;
use surftrap::ringtrap::{
    default_gap_grid, optimize_ring_with, solve_ring_alphas, sweep_ring, GapAmplitudes, IonParameters,
    RingOptimizeSettings, RingProfile, RingTrapGeometry, TrapReport,
};
use surftrap::specfun::SeriesControl;

use crate::csv::{num, Cell, CsvWriter};
use crate::oracle;
use crate::{
    Builtin, Common, FieldArgs, GapSolveArgs, GreensArgs, IonArgs, OracleArgs, OracleFailure, RingFiniteArgs,
    RingOptimizeArgs,
};

fn series(c: &Common) -> Result<SeriesControl> {
    Ok(SeriesControl::new(c.series_rel_tol, c.series_max_terms)?)
}

fn quad(c: &Common, abs: f64, rel: f64) -> Result<QuadSettings> {
    let q = match c.quad_tol {
        Some(t) => QuadSettings::new(t, t),
        None => QuadSettings::new(abs, rel),
    };
    if !(q.abs_tol > 0.0 && q.rel_tol > 0.0 && q.rel_tol < 1.0) {
        return Err(
            surftrap::Error::Config(format!("quadrature tolerance must lie in (0, 1), got {}", q.rel_tol)).into(),
        );
    }
    Ok(q)
}

fn writer(c: &Common, command: &str) -> Result<CsvWriter<Box<dyn Write>>> {
    let out: Box<dyn Write> = match &c.output {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    Ok(CsvWriter::new(out, command)?)
}

fn echo_common<W: Write>(w: &mut CsvWriter<W>, c: &Common, q: Option<&QuadSettings>) -> Result<()> {
    w.meta_num("series_rel_tol", c.series_rel_tol)?;
    w.meta("series_max_terms", c.series_max_terms)?;
    if let Some(q) = q {
        w.meta_num("quad_abs_tol", q.abs_tol)?;
        w.meta_num("quad_rel_tol", q.rel_tol)?;
    }
    Ok(())
}

fn susceptibility(m: f64) -> Result<GapSusceptibilityModel> {
    Ok(GapSusceptibilityModel::new(m)?)
}

fn load_geometry(path: &std::path::Path) -> Result<crate::geometry::GeometryFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    crate::geometry::parse(&text).with_context(|| format!("in {}", path.display()))
}

type Field<'a> = Box<dyn Fn(Point3) -> surftrap::Result<f64> + Sync + 'a>;

/// Value and gradient by finite differences of step `h`; the `z` derivative
/// is one-sided at the plane and uses the mirror symmetry below it.
fn value_and_gradient(f: &Field<'_>, p: Point3, h: f64) -> surftrap::Result<[f64; 4]> {
    let zs = p.z.abs();
    let at = |x: f64, y: f64, z: f64| f(Point3::new(x, y, z));
    let v = at(p.x, p.y, zs)?;
    let dx = (at(p.x + h, p.y, zs)? - at(p.x - h, p.y, zs)?) / (2.0 * h);
    let dy = (at(p.x, p.y + h, zs)? - at(p.x, p.y - h, zs)?) / (2.0 * h);
    let dz = if zs > 2.0 * h {
        (at(p.x, p.y, zs + h)? - at(p.x, p.y, zs - h)?) / (2.0 * h)
    } else {
        (-3.0 * v + 4.0 * at(p.x, p.y, zs + h)? - at(p.x, p.y, zs + 2.0 * h)?) / (2.0 * h)
    };
    let sign = if p.z < 0.0 { -1.0 } else { 1.0 };
    Ok([v, dx, dy, sign * dz])
}

fn propagated<'a, P: SurfacePotential>(phi: &'a P, q: QuadSettings) -> Field<'a> {
    Box::new(move |p: Point3| {
        if p.z == 0.0 {
            Ok(phi.value(p.x, p.y))
        } else {
            propagate(phi, p, &q)
        }
    })
}

fn smallest_gap(plane: &PlanePotential) -> f64 {
    plane
        .curves()
        .iter()
        .flat_map(|c| c.samples().iter().map(|s| s.g))
        .filter(|&g| g > 0.0)
        .fold(f64::INFINITY, f64::min)
}

pub fn field(a: &FieldArgs) -> Result<()> {
    let ctl = series(&a.common)?;
    let q = quad(&a.common, 1e-12, 1e-11)?;
    let model = susceptibility(a.susceptibility)?;

    let mut meta: Vec<(&str, String)> = Vec::new();
    // Owners of the potentials the field closures borrow.
    let ring_profile;
    let plane;
    let (f, scale): (Field<'_>, f64) = match (a.builtin, &a.geometry) {
        (Some(Builtin::Gap), _) | (Some(Builtin::Pol), _) => {
            let kind = if a.builtin == Some(Builtin::Gap) {
                GapKind::Interpolation
            } else {
                GapKind::Polarization
            };
            let prof = GapProfile::new(a.g, kind)?;
            meta.push((
                "builtin",
                if kind == GapKind::Interpolation { "gap" } else { "pol" }.to_string(),
            ));
            meta.push(("g", num(a.g)));
            let g = prof.g;
            let f: Field<'_> = match kind {
                GapKind::Interpolation => Box::new(move |p: Point3| Ok(field_gap(p.x, p.z, g))),
                GapKind::Polarization => Box::new(move |p: Point3| Ok(field_pol(p.x, p.z, g))),
            };
            (f, g)
        }
        (Some(Builtin::Strip), _) => {
            let spec = StripSpec::new(a.w, a.g)?;
            let alpha = a.alpha.unwrap_or(spec.alpha() * model.multiplier());
            meta.push(("builtin", "strip".to_string()));
            meta.push(("w", num(a.w)));
            meta.push(("g", num(a.g)));
            meta.push(("alpha", num(alpha)));
            let (h, g) = (0.5 * a.w, a.g);
            let f: Field<'_> = Box::new(move |p: Point3| {
                Ok(field_gap(p.x + h, p.z, g) - field_gap(p.x - h, p.z, g)
                    + alpha * (field_pol(p.x + h, p.z, g) + field_pol(p.x - h, p.z, g)))
            });
            (f, g)
        }
        (Some(Builtin::Ring), _) => {
            let geom = RingTrapGeometry::new(a.r1, a.r2, a.g)?;
            let amps = if a.g > 0.0 {
                solve_ring_alphas(&geom)?.scaled(model.multiplier())
            } else {
                GapAmplitudes::default()
            };
            meta.push(("builtin", "ring".to_string()));
            meta.push(("r1", num(a.r1)));
            meta.push(("r2", num(a.r2)));
            meta.push(("g", num(a.g)));
            meta.push(("alpha1", num(amps.alpha1)));
            meta.push(("alpha2", num(amps.alpha2)));
            ring_profile = RingProfile { geom, amps };
            let scale = if a.g > 0.0 { a.g } else { a.r1.max(1e-3 * a.r2) };
            (propagated(&ring_profile, q), scale)
        }
        (Some(Builtin::RingDisc), _) => {
            let disc = FiniteDiscSpec::new(a.s)?;
            RingTrapGeometry::new(a.r1, a.r2, 0.0)?;
            meta.push(("builtin", "ring-disc".to_string()));
            meta.push(("r1", num(a.r1)));
            meta.push(("r2", num(a.r2)));
            meta.push(("s", num(a.s)));
            let (r1, r2) = (a.r1, a.r2);
            let f: Field<'_> = Box::new(move |p: Point3| {
                if p.z == 0.0 {
                    let r = p.x.hypot(p.y);
                    Ok(if r > r1 && r < r2 { 1.0 } else { 0.0 })
                } else {
                    ring_on_disc_potential(p, r1, r2, &disc, &ctl, &q)
                }
            });
            (f, a.r1.max(1e-3 * a.r2))
        }
        (None, Some(path)) => {
            let geo = load_geometry(path)?;
            let curves = geo.curves()?;
            meta.push(("geometry", path.display().to_string()));
            meta.push(("solve", a.solve.to_string()));
            plane = if a.solve {
                let settings = GapSolveSettings::default();
                solve_alphas(&geo.potentials, curves, &settings)?
                    .plane
                    .with_susceptibility(&model)
            } else {
                assemble_plane_potential(&geo.potentials, curves)?
            };
            let g = smallest_gap(&plane);
            let scale = if g.is_finite() { g } else { 1.0 };
            (propagated(&plane, q), scale)
        }
        (None, None) => unreachable!("clap requires a geometry"),
    };
    let h = 1e-4 * scale;
    let mut w = writer(&a.common, "field")?;
    echo_common(&mut w, &a.common, Some(&q))?;
    w.meta("x", &a.x)?;
    w.meta("y", &a.y)?;
    w.meta("z", &a.z)?;
    w.meta_num("susceptibility", model.multiplier())?;
    for (k, v) in &meta {
        w.meta(k, v)?;
    }
    w.meta_num("difference_step", h)?;
    w.columns(&["x", "y", "z", "phi", "dphi_dx", "dphi_dy", "dphi_dz"])?;
    for &x in &a.x.0 {
        for &y in &a.y.0 {
            for &z in &a.z.0 {
                let [v, dx, dy, dz] = value_and_gradient(&f, Point3::new(x, y, z), h)
                    .with_context(|| format!("at point ({x}, {y}, {z})"))?;
                w.nums(&[x, y, z, v, dx, dy, dz])?;
            }
        }
    }
    w.finish()?;
    Ok(())
}

fn ion(a: &IonArgs) -> Result<Option<(IonParameters, f64)>> {
    match (a.mass_amu, a.urf_volt, a.omega_rf_hz, a.length_unit_m) {
        (None, None, None, None) => Ok(None),
        (Some(m), Some(u), Some(f), Some(l)) => {
            let ion = IonParameters::new(
                m * surftrap::ringtrap::ATOMIC_MASS,
                a.charge_e * surftrap::ringtrap::ELEMENTARY_CHARGE,
                u,
                2.0 * std::f64::consts::PI * f,
            )?;
            if !(l > 0.0 && l.is_finite()) {
                return Err(surftrap::Error::Config("length unit must be positive".into()).into());
            }
            Ok(Some((ion, l)))
        }
        _ => Err(surftrap::Error::Config(
            "ion output needs --mass-amu, --urf-volt, --omega-rf-hz and --length-unit-m together".into(),
        )
        .into()),
    }
}

/// Axial secular frequency in Hz of the pseudopotential at the trap: the
/// axial curvature of the scaled potential is `kappa 4^(1/3) / z^2`.
fn secular_frequency(kappa: f64, z: f64, ion: &IonParameters, length: f64) -> f64 {
    let phi_zz = kappa * 4f64.cbrt() / (z * length).powi(2);
    (2.0 * ion.prefactor() / ion.mass).sqrt() * phi_zz / (2.0 * std::f64::consts::PI)
}

fn status_rows<W: Write>(w: &mut CsvWriter<W>, failures: &[(f64, String)], key: &str) -> Result<()> {
    for (x, msg) in failures {
        w.meta(&format!("failed_{key}_{}", num(*x)), msg)?;
    }
    Ok(())
}

fn report_failures(failures: &[(f64, String)], what: &str) -> Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    Err(surftrap::Error::Convergence(format!("{} of the {what} points failed", failures.len())).into())
}

pub fn ring_optimize(a: &RingOptimizeArgs) -> Result<()> {
    if !(a.z > 0.0 && a.z.is_finite()) {
        return Err(surftrap::Error::Config("trap height must be positive".into()).into());
    }
    let model = susceptibility(a.susceptibility)?;
    let ion = ion(&a.ion)?;
    let mut grid = a.g_over_z.clone().unwrap_or_else(default_gap_grid);
    if !grid.contains(&0.0) {
        grid.insert(0, 0.0);
    }
    let settings = RingOptimizeSettings {
        susceptibility: model.multiplier(),
        ..RingOptimizeSettings::default()
    };
    let mut w = writer(&a.common, "ring-optimize")?;
    echo_common(&mut w, &a.common, None)?;
    w.meta_num("z", a.z)?;
    w.meta("g_over_z", grid.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "))?;
    w.meta_num("susceptibility", model.multiplier())?;
    if let Some((ion, l)) = &ion {
        w.meta_num("mass_kg", ion.mass)?;
        w.meta_num("charge_c", ion.charge)?;
        w.meta_num("urf_volt", ion.u_rf)?;
        w.meta_num("omega_rf_rad_s", ion.omega_rf)?;
        w.meta_num("length_unit_m", *l)?;
        w.meta_num("pseudopotential_prefactor_j_m2", ion.prefactor())?;
    }
    let gs: Vec<f64> = grid.iter().map(|g| g * a.z).collect();
    let results = sweep_ring(&gs, a.z, &settings);
    let mut cols = vec![
        "g_over_z",
        "r1_ratio",
        "r2_ratio",
        "kappa_ratio",
        "r1",
        "r2",
        "kappa",
        "alpha1",
        "alpha2",
    ];
    if ion.is_some() {
        cols.push("axial_secular_freq_hz");
    }
    cols.push("status");
    w.columns(&cols)?;
    let mut failures = Vec::new();
    for (gz, r) in grid.iter().zip(results) {
        let mut row: Vec<Cell> = vec![(*gz).into()];
        let status = match &r {
            Ok(rep) => {
                row.extend(report_cells(rep));
                row.push(rep.amplitudes.alpha1.into());
                row.push(rep.amplitudes.alpha2.into());
                if let Some((ion, l)) = &ion {
                    row.push(secular_frequency(rep.kappa, rep.z, ion, *l).into());
                }
                "ok"
            }
            Err(e) => {
                let n = cols.len() - 2;
                row.extend((0..n).map(|_| Cell::Num(f64::NAN)));
                failures.push((*gz, e.to_string()));
                "failed"
            }
        };
        row.push(status.into());
        w.row(row)?;
    }
    status_rows(&mut w, &failures, "g_over_z")?;
    w.finish()?;
    report_failures(&failures, "sweep")
}

fn report_cells(r: &TrapReport) -> Vec<Cell> {
    vec![
        r.r1_ratio.into(),
        r.r2_ratio.into(),
        r.kappa_ratio.into(),
        r.geometry.r1.into(),
        r.geometry.r2.into(),
        r.kappa.into(),
    ]
}

pub fn ring_finite_optimize(a: &RingFiniteArgs) -> Result<()> {
    let ctl = series(&a.common)?;
    let model = susceptibility(a.susceptibility)?;
    let grid = a.z_over_s.clone().unwrap_or_else(default_disc_grid);
    if let Some(bad) = grid.iter().find(|v| !(**v > 0.0 && **v < 0.5)) {
        return Err(surftrap::Error::Config(format!("z/S must lie in (0, 0.5), got {bad}")).into());
    }
    let settings = RingOptimizeSettings::default();
    let ideal = optimize_ring_with(0.0, 1.0, &settings, None)?;
    let gap = if a.g_over_z > 0.0 {
        let s = RingOptimizeSettings {
            susceptibility: model.multiplier(),
            ..settings
        };
        Some(optimize_ring_with(a.g_over_z, 1.0, &s, None)?)
    } else {
        None
    };
    let mut w = writer(&a.common, "ring-finite-optimize")?;
    echo_common(&mut w, &a.common, None)?;
    w.meta("z_over_s", grid.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "))?;
    w.meta_num("g_over_z", a.g_over_z)?;
    w.meta_num("susceptibility", model.multiplier())?;
    w.meta("lengths", "in units of the trap height")?;
    let gap_ratio = gap.map_or(1.0, |r| r.kappa_ratio);
    w.meta_num("gap_kappa_ratio", gap_ratio)?;
    w.columns(&[
        "z_over_s",
        "r1_ratio",
        "r2_ratio",
        "kappa_ratio",
        "r1",
        "r2",
        "kappa",
        "combined_kappa_ratio",
        "status",
    ])?;
    // The infinite plane is the normalization row.
    let mut row: Vec<Cell> = vec![0.0.into(), 1.0.into(), 1.0.into(), 1.0.into()];
    row.extend([ideal.geometry.r1, ideal.geometry.r2, ideal.kappa, gap_ratio].map(Cell::Num));
    row.push("ok".into());
    w.row(row)?;
    let mut failures = Vec::new();
    for (zs, r) in grid.iter().zip(sweep_ring_on_disc(&grid, &settings, &ctl)) {
        let mut row: Vec<Cell> = vec![(*zs).into()];
        match r {
            Ok(rep) => {
                row.extend(report_cells(&rep));
                // The two corrections are added independently.
                row.push((1.0 + (rep.kappa_ratio - 1.0) + (gap_ratio - 1.0)).into());
                row.push("ok".into());
            }
            Err(e) => {
                row.extend((0..7).map(|_| Cell::Num(f64::NAN)));
                row.push("failed".into());
                failures.push((*zs, e.to_string()));
            }
        }
        w.row(row)?;
    }
    status_rows(&mut w, &failures, "z_over_s")?;
    w.finish()?;
    report_failures(&failures, "sweep")
}

pub fn gap_solve(a: &GapSolveArgs) -> Result<()> {
    let q = quad(&a.common, 1e-8, 1e-6)?;
    let model = susceptibility(a.susceptibility)?;
    let geo = load_geometry(&a.geometry)?;
    let curves = geo.curves()?;
    let settings = GapSolveSettings {
        d_factor: a.d_factor,
        quad: q,
        junction_factor: a.junction_factor,
        ..GapSolveSettings::default()
    };
    let sol = solve_alphas(&geo.potentials, curves, &settings)?;
    let (residuals, median) = if a.no_residuals {
        (Vec::new(), f64::NAN)
    } else {
        (
            gap_center_residuals(&sol.plane, &q)?,
            electrode_sigma_median(&sol.plane, &q)?,
        )
    };
    let plane = sol.plane.with_susceptibility(&model);

    let mut w = writer(&a.common, "gap-solve")?;
    echo_common(&mut w, &a.common, Some(&q))?;
    w.meta("geometry", a.geometry.display())?;
    w.meta_num("d_factor", a.d_factor)?;
    w.meta_num("junction_factor", a.junction_factor)?;
    w.meta_num("susceptibility", model.multiplier())?;
    w.meta_num("condition", sol.condition)?;
    w.meta_num("electrode_sigma_median", median)?;
    // Clamped and interpolated samples carry no condition.
    let worst = residuals
        .iter()
        .filter(|r| sol.solved.contains(&(r.curve, r.sample)))
        .fold(0.0_f64, |m, r| m.max(r.sigma.abs()));
    w.meta_num(
        "max_residual_ratio",
        if a.no_residuals { f64::NAN } else { worst / median },
    )?;
    for msg in &sol.warnings {
        w.meta("warning", msg)?;
    }
    w.columns(&["curve", "sample", "t", "x", "y", "g", "alpha", "solved", "sigma_center"])?;
    for (ci, c) in plane.curves().iter().enumerate() {
        for (k, s) in c.samples().iter().enumerate() {
            let solved = sol.solved.contains(&(ci, k));
            let sigma = residuals
                .iter()
                .find(|r| r.curve == ci && r.sample == k)
                .map_or(f64::NAN, |r| r.sigma);
            let mut row: Vec<Cell> = vec![c.id().into(), Cell::Text(k.to_string())];
            row.extend([s.t, s.x, s.y, s.g, c.alpha(s.t)].map(Cell::Num));
            row.push(if solved { "1" } else { "0" }.into());
            row.push(sigma.into());
            w.row(row)?;
        }
    }
    w.finish()?;
    if let Some(path) = &a.annotated {
        let text = crate::geometry::write(&geo.potentials, plane.curves(), num);
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

pub fn oracle(a: &OracleArgs) -> Result<()> {
    let ctl = series(&a.common)?;
    let q = match a.common.quad_tol {
        Some(_) => Some(quad(&a.common, 0.0, 0.0)?),
        None => None,
    };
    let mut w = writer(&a.common, "oracle")?;
    echo_common(&mut w, &a.common, q.as_ref())?;
    w.meta("suite", a.suite.iter().map(|s| s.name()).collect::<Vec<_>>().join(" "))?;
    w.meta("seed", a.seed)?;
    w.columns(&["suite", "points", "max_rel_err", "median_rel_err", "tolerance", "pass"])?;
    let mut failed = Vec::new();
    for &suite in &a.suite {
        let n = a.points.unwrap_or(suite.default_points());
        let rep = oracle::run(suite, n, a.seed, &ctl, q)?;
        if !rep.passed() {
            failed.push(suite.name());
        }
        w.row(vec![
            suite.name().into(),
            Cell::Text(rep.errors.len().to_string()),
            rep.max().into(),
            rep.median().into(),
            suite.tolerance().into(),
            if rep.passed() { "1" } else { "0" }.into(),
        ])?;
    }
    w.finish()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(OracleFailure(failed.join(", ")).into())
    }
}

pub fn greens_finite(a: &GreensArgs) -> Result<()> {
    let ctl = series(&a.common)?;
    let disc = FiniteDiscSpec::with_margin(a.s, a.margin)?;
    if !(a.rho >= 0.0 && a.rho < a.s) {
        return Err(surftrap::Error::Config(format!("pixel radius must lie in [0, S), got {}", a.rho)).into());
    }
    let mut w = writer(&a.common, "greens-finite")?;
    echo_common(&mut w, &a.common, None)?;
    w.meta_num("rho", a.rho)?;
    w.meta_num("s", a.s)?;
    w.meta_num("margin", a.margin)?;
    w.meta("x", &a.x)?;
    w.meta("y", &a.y)?;
    w.meta("z", &a.z)?;
    w.columns(&["x", "y", "z", "greens_finite", "greens_free", "large_s_approx"])?;
    for &x in &a.x.0 {
        for &y in &a.y.0 {
            for &z in &a.z.0 {
                let p = Point3::new(x, y, z);
                let at = || format!("at point ({x}, {y}, {z})");
                let fin = modified_greens(a.rho, &disc, p, &ctl).with_context(at)?;
                let free = greens_function(Point3::new(x - a.rho, y, z)).with_context(at)?;
                let approx = if a.rho == 0.0 {
                    modified_greens_large_s(a.s, p).with_context(at)?
                } else {
                    f64::NAN
                };
                w.nums(&[x, y, z, fin, free, approx])?;
            }
        }
    }
    w.finish()?;
    Ok(())
}
