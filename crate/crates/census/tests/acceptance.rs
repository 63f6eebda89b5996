//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand::rngs::StdRng;
use vortex_census::pipeline::{self, CensusRun, Layout, Resume};
use vortex_census::PipelineConfig;
use vortex_core::cauchy_green::{build_tensor_field, SymTensor, SymmetricTensorField};
use vortex_core::flowmap::{advect, compute_flow_map_grid, deformation_gradient, IntegratorConfig};
use vortex_core::geometry::Bounds;
use vortex_core::lambda_lines::{eta_direction, Branch, EtaFieldSpec, TensorEtaField};
use vortex_core::topology::{
    census_enclosed, classification_radius, classify_singularity, line_field_index, vector_field_index, Census,
    CLASSIFICATION_SAMPLES,
};
use vortex_core::velocity::{geostrophic_from_ssh, PhysicalConstants, SshSeries, VelocityField};
use vortex_core::{Axis, ClosedPolygon, GridSpec, Point, SingularityType};

type Verdict = Result<String, String>;
type Field = fn(Point) -> Point;
type DoubledField = Box<dyn Fn(Point) -> Point>;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_scenario(name: &str) -> Result<(PipelineConfig, CensusRun, tempfile::TempDir), String> {
    let cfg = PipelineConfig::load(&configs().join(name), &[]).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = pipeline::run_census(&cfg, &Layout::new(dir.path(), None), Resume::Fresh).map_err(|e| e.to_string())?;
    Ok((cfg, run, dir))
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Arclength of the advected closed polyline over its initial arclength.
fn advected_length_ratio(field: &dyn VelocityField, poly: &ClosedPolygon, icfg: &IntegratorConfig) -> Result<f64, String> {
    let v = poly.vertices();
    let moved: Vec<Point> = v.iter().map(|&p| advect(field, p, icfg)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let length = |pts: &[Point]| (0..pts.len()).map(|k| pts[k].distance(pts[(k + 1) % pts.len()])).sum::<f64>();
    Ok(length(&moved) / length(v))
}

fn stretching(cfg: &PipelineConfig, run: &CensusRun) -> Verdict {
    let field = pipeline::velocity_field(&cfg.input).map_err(|e| e.to_string())?;
    let icfg = cfg.flowmap.integrator();
    check(!run.vortices.eddies.is_empty(), || "no boundary detected".into())?;
    let mut parts = Vec::new();
    for e in &run.vortices.eddies {
        let ratio = advected_length_ratio(field.as_ref(), &e.boundary.polygon, &icfg)?;
        let rel = (ratio - e.boundary.lambda).abs() / e.boundary.lambda;
        parts.push(format!("λ {:.3}: ratio {ratio:.4} ({:.2}%)", e.boundary.lambda, 100.0 * rel));
        check(rel <= 0.02, || parts.join(", "))?;
    }
    Ok(parts.join(", "))
}

fn census_two_wedges(run: &CensusRun) -> Verdict {
    check(!run.vortices.eddies.is_empty(), || "no boundary detected".into())?;
    let want = Census { wedges: 2, trisectors: 0, unclassified: 0 };
    for e in &run.vortices.eddies {
        let recount = census_enclosed(&e.boundary.polygon, &run.topology.classified);
        check(e.boundary.census == want && recount == want, || {
            format!("pair {}: reported {:?}, recounted {:?}", e.pair, e.boundary.census, recount)
        })?;
    }
    Ok(format!("{} boundaries with (W, T) = (2, 0)", run.vortices.eddies.len()))
}

fn criterion_1(cfg: &PipelineConfig, run: &CensusRun) -> Verdict {
    let f = &cfg.flowmap;
    check(f.nx >= 400 && f.ny >= 400, || format!("grid {}×{} below 400×400", f.nx, f.ny))?;
    check(f.t0 == 0.0 && (f.horizon - 2.5 * PI).abs() < 1e-12, || "time window is not [0, 5π/2]".into())?;
    let left_gyre = Bounds::new(0.0, 1.0, 0.0, 1.0);
    let pairs: Vec<usize> =
        (0..run.topology.pairs.len()).filter(|&k| left_gyre.contains(run.topology.pairs[k].midpoint)).collect();
    check(!pairs.is_empty(), || "no wedge pair in the left gyre".into())?;
    let lambdas: Vec<f64> =
        run.vortices.eddies.iter().filter(|e| pairs.contains(&e.pair)).map(|e| e.boundary.lambda).collect();
    let hit = lambdas.iter().any(|l| (l - 0.975).abs() <= 0.015 + 1e-12);
    check(hit, || format!("outermost λ {lambdas:?} outside 0.975 ± 0.015"))?;
    Ok(format!("{}×{} grid, {} pair(s), outermost λ = {:?}", f.nx, f.ny, pairs.len(), lambdas))
}

fn sample_circle(center: Point, r: f64, n: usize) -> Vec<Point> {
    (0..n).map(|k| center + r * Point::from_angle(2.0 * PI * k as f64 / n as f64)).collect()
}

/// Star-shaped non-convex polygon around `center`.
fn star(center: Point, r: f64) -> ClosedPolygon {
    let v = (0..10)
        .map(|k| {
            let rr = if k % 2 == 0 { r } else { 0.45 * r };
            center + rr * Point::from_angle(0.3 + 2.0 * PI * k as f64 / 10.0)
        })
        .collect();
    ClosedPolygon::new(v).expect("valid star")
}

/// Major eigenvector of the tensor whose deviatoric part is `(a, b) =
/// (c11 − c22, 2 c12)`.
fn major_axis(a: f64, b: f64) -> Point {
    let c = SymTensor { c11: 3.0 + 0.5 * a, c12: 0.5 * b, c22: 3.0 - 0.5 * a };
    vortex_core::cauchy_green::eigen_decompose(&c).expect("positive definite").xi2
}

fn criterion_4() -> Verdict {
    let o = Point::new(0.3, -0.2);
    let vec_fields: [(&str, Field, i32); 3] = [
        ("source", |p| p, 1),
        ("saddle", |p| Point::new(p.x, -p.y), -1),
        ("constant", |_| Point::new(0.6, -0.8), 0),
    ];
    let line_fields: [(&str, Field, i32); 2] =
        [("wedge", |p| major_axis(p.x, p.y), 1), ("trisector", |p| major_axis(p.x, -p.y), -1)];
    let mut lines = Vec::new();
    for curve in ["circle", "star"] {
        let pts = match curve {
            "circle" => sample_circle(o, 0.7, 720),
            _ => star(o, 0.9).densify(0.005),
        };
        for (name, f, want) in vec_fields {
            let got = vector_field_index(&pts.iter().map(|&p| f(p - o)).collect::<Vec<_>>()).map_err(|e| format!("{name}: {e}"))?;
            check(got == want, || format!("{name} on {curve}: index {got}, expected {want}"))?;
        }
        for (name, f, twice) in line_fields {
            let got = line_field_index(&pts.iter().map(|&p| f(p - o)).collect::<Vec<_>>()).map_err(|e| format!("{name}: {e}"))?;
            check(got.twice() == twice, || format!("{name} on {curve}: index {got}, expected {twice}/2"))?;
        }
        lines.push(curve);
    }
    // two singularities: the doubled-angle field (z − p)(z − q) and
    // (z − p)·conj(z − q) hold +1/2 + 1/2 and +1/2 − 1/2
    let (p, q) = (Point::new(-0.5, 0.1), Point::new(0.6, -0.2));
    let mul = |u: Point, v: Point| Point::new(u.x * v.x - u.y * v.y, u.x * v.y + u.y * v.x);
    let conj = |u: Point| Point::new(u.x, -u.y);
    let pairs: [(&str, DoubledField); 2] = [
        ("wedge+wedge", Box::new(move |z| mul(z - p, z - q))),
        ("wedge+trisector", Box::new(move |z| mul(z - p, conj(z - q)))),
    ];
    for (name, w) in &pairs {
        let idx = |pts: Vec<Point>| {
            line_field_index(&pts.iter().map(|&z| { let d = w(z); major_axis(d.x, d.y) }).collect::<Vec<_>>())
                .map_err(|e| format!("{name}: {e}"))
        };
        let around_p = idx(sample_circle(p, 0.3, 720))?;
        let around_q = idx(sample_circle(q, 0.3, 720))?;
        let around_both = idx(star(Point::new(0.05, -0.05), 1.9).densify(0.005))?;
        check(around_both.twice() == around_p.twice() + around_q.twice(), || {
            format!("{name}: {around_both} != {around_p} + {around_q}")
        })?;
    }
    Ok(format!(
        "source/saddle/constant = 1/−1/0, wedge/trisector = ±1/2 on {}; additivity holds; residual < 1e-6",
        lines.join(" and ")
    ))
}

/// `c11 x² + 2 c12 x y + c22 y²` with error-free products and compensated
/// summation. The three terms reach λ2 ~ 1e6 and cancel to ~1, so plain
/// evaluation carries rounding of order eps·λ2.
fn quadratic_form_exact(c: &SymTensor, v: Point) -> f64 {
    let two_prod = |a: f64, b: f64| {
        let p = a * b;
        (p, a.mul_add(b, -p))
    };
    let mut parts = Vec::with_capacity(9);
    for (k, x, y) in [(c.c11, v.x, v.x), (2.0 * c.c12, v.x, v.y), (c.c22, v.y, v.y)] {
        let (p1, e1) = two_prod(k, x);
        let (p2, e2) = two_prod(p1, y);
        parts.extend([p2, e2, e1 * y]);
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in parts {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

fn criterion_5(run: &CensusRun) -> Verdict {
    let (tf, ef) = (&run.tensor, &run.eigen);
    let b = tf.grid.bounds();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut n, mut tries) = (0usize, 0usize);
    let (mut worst_form, mut worst_norm) = (0.0f64, 0.0f64);
    while n < 100_000 {
        tries += 1;
        check(tries < 10_000_000, || format!("only {n} admissible points found"))?;
        let p = Point::new(rng.random_range(b.x_min..b.x_max), rng.random_range(b.y_min..b.y_max));
        let lambda = rng.random_range(0.85..1.15);
        let branch = if rng.random::<bool>() { Branch::Plus } else { Branch::Minus };
        let spec = EtaFieldSpec::new(lambda, branch).expect("λ > 0");
        let Ok(e) = TensorEtaField::new(tf, ef, spec).eigen_at(p) else { continue };
        let Ok(eta) = eta_direction(&e, &spec) else { continue };
        let c = tf.interpolate(p).expect("interior point");
        let form = quadratic_form_exact(&c, eta);
        worst_form = worst_form.max((form - lambda * lambda).abs() / (lambda * lambda));
        worst_norm = worst_norm.max((eta.x.hypot(eta.y) - 1.0).abs());
        n += 1;
    }
    check(worst_form < 1e-10 && worst_norm < 1e-10, || format!("⟨η, Cη⟩ rel {worst_form:e}, |η| rel {worst_norm:e}"))?;
    let fm = run.flowmap.as_ref().ok_or("flow map not kept in memory")?;
    let mut worst_det = 0.0f64;
    let mut nodes = 0usize;
    for k in 0..tf.grid.len() {
        if !ef.valid[k] {
            continue;
        }
        let (i, j) = tf.grid.ij(k);
        let df = deformation_gradient(fm, i, j).map_err(|e| e.to_string())?;
        let d2 = df.det() * df.det();
        let e = &ef.eigen[k];
        worst_det = worst_det.max((e.lambda1 * e.lambda2 - d2).abs() / d2);
        nodes += 1;
    }
    check(worst_det < 1e-12, || format!("λ1λ2 vs det(DF)² rel {worst_det:e}"))?;
    Ok(format!(
        "{n} points: ⟨η, Cη⟩ rel err {worst_form:.1e}, |η| err {worst_norm:.1e}; {nodes} nodes: λ1λ2 rel err {worst_det:.1e}"
    ))
}

/// Fraction of valid nodes with `|det C − 1| < 1e-2`, and the median
/// deviation.
fn det_stats(tf: &SymmetricTensorField) -> (f64, f64) {
    let mut dev: Vec<f64> =
        tf.tensors.iter().zip(&tf.valid).filter(|(_, v)| **v).map(|(c, _)| (c.det() - 1.0).abs()).collect();
    let within = dev.iter().filter(|d| **d < 1e-2).count() as f64 / dev.len() as f64;
    dev.sort_by(f64::total_cmp);
    (within, dev[dev.len() / 2])
}

fn criterion_6(cfg: &PipelineConfig, run: &CensusRun) -> Verdict {
    let (within, _) = det_stats(&run.tensor);
    check(within >= 0.99, || format!("only {:.2}% of nodes within 1e-2", 100.0 * within))?;
    let field = pipeline::velocity_field(&cfg.input).map_err(|e| e.to_string())?;
    let f = &cfg.flowmap;
    let mut medians = Vec::new();
    for tol in [1e-4, 1e-6, 1e-8] {
        let icfg = IntegratorConfig::rk45(f.t0, f.horizon, tol);
        let fm = compute_flow_map_grid(field.as_ref(), f.grid(), f.rho, &icfg).map_err(|e| e.to_string())?;
        let (tf, _) = build_tensor_field(&fm);
        medians.push((tol, det_stats(&tf).1));
    }
    let shown: Vec<String> = medians.iter().map(|(t, m)| format!("tol {t:.0e}: {m:.2e}")).collect();
    check(medians.windows(2).all(|w| w[1].1 < w[0].1), || format!("median |det C − 1| not decreasing: {}", shown.join(", ")))?;
    Ok(format!("{:.2}% within 1e-2; median |det C − 1| {}", 100.0 * within, shown.join(", ")))
}

/// Largest velocity error, in degrees per day, of the geostrophic operator
/// applied to `h = sin φ sin θ` at spacing `d` degrees.
fn geostrophic_error(d: f64) -> Result<f64, String> {
    let lon = Axis::spanning(0.0, 40.0, (40.0 / d).round() as usize + 1);
    let lat = Axis::spanning(-40.0, -20.0, (20.0 / d).round() as usize + 1);
    let rad = PI / 180.0;
    let mut h = Vec::with_capacity(lon.len * lat.len);
    for j in 0..lat.len {
        for i in 0..lon.len {
            h.push((lon.coord(i) * rad).sin() * (lat.coord(j) * rad).sin());
        }
    }
    let ssh = SshSeries { lon, lat, time: vec![0.0], h };
    let consts = PhysicalConstants::default();
    let vel = geostrophic_from_ssh(&ssh, &consts).map_err(|e| e.to_string())?;
    let to_deg_per_day = 86_400.0 / rad;
    let mut worst = 0.0f64;
    for j in 0..lat.len {
        for i in 0..lon.len {
            let (phi, theta) = (lon.coord(i) * rad, lat.coord(j) * rad);
            let scale = consts.gravity / (consts.earth_radius.powi(2) * 2.0 * consts.earth_rotation * theta.sin() * theta.cos());
            let u = -scale * phi.sin() * theta.cos() * to_deg_per_day;
            let v = scale * phi.cos() * theta.sin() * to_deg_per_day;
            let k = j * lon.len + i;
            worst = worst.max((vel.u()[k] - u).abs()).max((vel.v()[k] - v).abs());
        }
    }
    Ok(worst)
}

fn criterion_7() -> Verdict {
    let coarse = geostrophic_error(1.0)?;
    let fine = geostrophic_error(0.5)?;
    let ratio = coarse / fine;
    check((ratio - 4.0).abs() <= 0.8, || format!("error ratio {ratio:.3} outside 4 ± 20%"))?;
    Ok(format!("max error 1°: {coarse:.3e}, 0.5°: {fine:.3e}, ratio {ratio:.3}"))
}

fn criterion_8(cfg: &PipelineConfig, run: &CensusRun) -> Verdict {
    let r = &run.report;
    check(r.eddies >= 2, || format!("{} eddies detected", r.eddies))?;
    let s = stretching(cfg, run).map_err(|e| format!("stretching: {e}"))?;
    census_two_wedges(run).map_err(|e| format!("census: {e}"))?;
    check(r.is_monotone(), || format!("funnel {:?} not monotone", r.funnel()))?;
    Ok(format!("funnel {:?}; {s}", r.funnel()))
}

fn criterion_9(run: &CensusRun) -> Verdict {
    check(CLASSIFICATION_SAMPLES == 1000, || format!("sample count constant is {CLASSIFICATION_SAMPLES}"))?;
    let grid = GridSpec::covering(Bounds::new(-1.0, 1.0, -1.0, 1.0), 101, 101);
    let wedge = SymmetricTensorField::from_fn(grid, |p| SymTensor { c11: 3.0 + 0.5 * p.x, c12: 0.5 * p.y, c22: 3.0 - 0.5 * p.x });
    let tri = SymmetricTensorField::from_fn(grid, |p| SymTensor { c11: 3.0 + 0.5 * p.x, c12: -0.5 * p.y, c22: 3.0 - 0.5 * p.x });
    let o = Point::new(0.013, -0.021);
    for (name, tf, kind) in [("wedge", &wedge, SingularityType::Wedge), ("trisector", &tri, SingularityType::Trisector)] {
        let c = classify_singularity(tf, o, 0.2, &[]).map_err(|e| format!("{name}: {e}"))?;
        check(c.samples_evaluated == 1000 && c.kind == kind, || format!("{name}: {c:?}"))?;
    }
    let dx = run.tensor.grid.spacing();
    let others: Vec<Point> = run.topology.located.iter().map(|s| s.position).collect();
    let mut counted = 0;
    for s in &run.topology.classified {
        let Some(r) = classification_radius(s.nearest_neighbor_distance, dx) else { continue };
        let c = classify_singularity(&run.tensor, s.position, r, &others).map_err(|e| e.to_string())?;
        check(c.samples_evaluated == 1000, || format!("{} samples at {:?}", c.samples_evaluated, s.position))?;
        check(c.kind == s.kind, || format!("reclassification differs at {:?}", s.position))?;
        counted += 1;
    }
    Ok(format!("1000 samples for analytic wedge/trisector and {counted} double-gyre singularities"))
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, &str, Verdict, f64)> = Vec::new();
    let mut record = |id: u8, title: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        let secs = t.elapsed().as_secs_f64();
        let line = match &v {
            Ok(m) => format!("criterion {id} PASS [{title}] {m} ({secs:.1} s)"),
            Err(m) => format!("criterion {id} FAIL [{title}] {m} ({secs:.1} s)"),
        };
        println!("{line}");
        results.push((id, title, v, secs));
    };

    let gyre = run_scenario("double_gyre.toml");
    let ocean = run_scenario("synthetic_ocean.toml");
    let with = |r: &Result<(PipelineConfig, CensusRun, tempfile::TempDir), String>,
                f: &dyn Fn(&PipelineConfig, &CensusRun) -> Verdict| match r {
        Ok((cfg, run, _)) => f(cfg, run),
        Err(e) => Err(format!("pipeline run failed: {e}")),
    };

    record(1, "double-gyre vortex", &mut || with(&gyre, &criterion_1));
    record(2, "uniform stretching", &mut || with(&gyre, &stretching));
    record(3, "enclosed census (2, 0)", &mut || with(&gyre, &|_, run| census_two_wedges(run)));
    record(4, "index suite", &mut criterion_4);
    record(5, "algebraic identities", &mut || with(&gyre, &|_, run| criterion_5(run)));
    record(6, "incompressibility", &mut || with(&gyre, &criterion_6));
    record(7, "geostrophic convergence", &mut criterion_7);
    record(8, "synthetic multi-eddy census", &mut || with(&ocean, &criterion_8));
    record(9, "classification sampling", &mut || with(&gyre, &|_, run| criterion_9(run)));

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
