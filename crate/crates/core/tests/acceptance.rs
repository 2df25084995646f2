//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use expflow::cli::{self, Command, RunConfig, Shape, EXIT_AUDIT_FAIL};
use expflow::families::{time_grid, EllipseFamily, Resolution, SphereFamily};
use expflow::flow::{check_expansiveness, evolve, flow_residual, FlowConfig, StepPolicy, Trajectory};
use expflow::hypersurface::{compute_curvatures, inner_outer_radii, shapes, Containment};
use expflow::reflection::{
    sample_directions, strict_reflection_check, symmetry_certificate, Hyperplane, ReflectionStatus,
    ReflectionTolerances, SymmetryCertificate,
};
use expflow::rigidity::{comes_out_of_point, rigidity_audit, tau_limit_check, AuditOptions};
use expflow::sphere_ode::{initial_time_estimate, is_ancient, Ancientness};
use expflow::{Hypersurface, Point, SpeedFunction};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

// pinned tolerances
const C1_RADIUS_REL: f64 = 1e-2;
const C1_SPREAD: f64 = 1e-3;
const C1_BUDGET: Duration = Duration::from_secs(10);
const C2_RADIUS_REL: f64 = 2e-2;
const C2_BUDGET: Duration = Duration::from_secs(60);
const C3_BIRTH_TOL: f64 = 1e-3;
const C6_DECREASE: f64 = 1e-3;
const C7_TAU_TOL: f64 = 1e-3;
const C7_DEVIATION: f64 = 1e-6;
const C8_RESIDUAL: f64 = 0.1;
const C9_INVOLUTION: f64 = 1e-12;
const C9_FACTOR: f64 = 3.0;
/// Below this the circumcircle estimator error is round-off, not truncation.
const C9_ROUNDOFF_FLOOR: f64 = 1e-10;
const C9_CASES: u32 = 24;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: impl Into<String>, fail: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(fail.into())
    }
}

fn origin() -> Point {
    Point::zeros()
}

fn radius_stats(m: &Hypersurface, c: Point) -> (f64, f64) {
    let r: Vec<f64> = m.vertices().iter().map(|x| (x - c).norm()).collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let spread = r.iter().cloned().fold(f64::MIN, f64::max) - r.iter().cloned().fold(f64::MAX, f64::min);
    (mean, spread)
}

fn every_frame(interval: f64, t_end: f64) -> FlowConfig {
    FlowConfig {
        frame_interval: Some(interval),
        ..FlowConfig::new(StepPolicy::default(), t_end)
    }
}

/// Unit circle, 256 vertices, `F = k`, `t ∈ [0, 1]`, step at most `1e-3`.
fn criterion_1() -> Outcome {
    let m0 = shapes::circle(origin(), 1.0, 256).map_err(|e| e.to_string())?;
    let speed = SpeedFunction::mean_curvature(1);
    let start = Instant::now();
    let traj = evolve(&m0, &speed, 0.0, &FlowConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let last = traj.last().unwrap();
    let (mean, spread) = radius_stats(&last.surface, origin());
    let rel = (mean - 1f64.exp()).abs() / 1f64.exp();
    // a fixed 1e-3 step violates the parabolic limit of an explicit scheme
    // on this mesh; reported, not gated
    let fixed = evolve(&m0, &speed, 0.0, &FlowConfig::new(StepPolicy::Fixed { dt: 1e-3 }, 1.0));
    let note = match fixed {
        Ok(_) => "fixed dt=1e-3 also completes".to_string(),
        Err(e) => format!("fixed dt=1e-3 fails: {e}"),
    };
    let msg = format!(
        "t={} mean radius {mean:.8} (rel err {rel:.2e}), spread {spread:.2e}, {:.2?} [cfl c=0.2 dt_max=1e-3; {note}]",
        last.t, elapsed
    );
    check(
        last.t == 1.0 && rel < C1_RADIUS_REL && spread < C1_SPREAD && elapsed < C1_BUDGET,
        msg.clone(),
        msg,
    )
}

/// 2562-vertex icosphere under `F = H` with fixed `dt = 1e-3` to `t = 0.5`.
fn criterion_2() -> Outcome {
    let m0 = shapes::icosphere(origin(), 1.0, 4).map_err(|e| e.to_string())?;
    if m0.len() != 2562 {
        return Err(format!("icosphere has {} vertices", m0.len()));
    }
    let speed = SpeedFunction::mean_curvature(2);
    let start = Instant::now();
    let cfg = FlowConfig::new(StepPolicy::Fixed { dt: 1e-3 }, 0.5);
    let traj = evolve(&m0, &speed, 0.0, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let last = traj.last().unwrap();
    let (mean, spread) = radius_stats(&last.surface, origin());
    let want = 0.25f64.exp();
    let rel = (mean - want).abs() / want;
    let msg = format!(
        "t={} mean radius {mean:.8} vs {want:.8} (rel err {rel:.2e}), spread {spread:.2e}, {:.2?}",
        last.t, elapsed
    );
    check(last.t == 0.5 && rel < C2_RADIUS_REL && elapsed < C2_BUDGET, msg.clone(), msg)
}

fn criterion_3() -> Outcome {
    let mut verdicts = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let f = SpeedFunction::mean_curvature_power(1, alpha).map_err(|e| e.to_string())?;
        verdicts.push(is_ancient(&f).map_err(|e| e.to_string())?.verdict);
    }
    let expected = [Ancientness::NonAncient, Ancientness::Ancient, Ancientness::Ancient];
    let root = SpeedFunction::mean_curvature_power(1, 0.5).map_err(|e| e.to_string())?;
    // ∫₀¹ r^{-1/2} dr = 2
    let t0 = initial_time_estimate(&root, 1.0, 0.0).map_err(|e| e.to_string())?;
    let msg = format!("H^α for α=0.5,1,2: {verdicts:?}; birth time under k^(1/2) {t0:.9}");
    check(verdicts == expected && (t0 + 2.0).abs() <= C3_BIRTH_TOL, msg.clone(), msg)
}

/// Ellipse (2, 1) under `F = k`, plane `x = 0.2`, 100 sampled frames.
fn criterion_4() -> Outcome {
    let m0 = shapes::ellipse(origin(), 2.0, 1.0, 256).map_err(|e| e.to_string())?;
    let speed = SpeedFunction::mean_curvature(1);
    let traj = evolve(&m0, &speed, 0.0, &every_frame(0.01, 1.0)).map_err(|e| e.to_string())?;
    let plane = Hyperplane::new(Point::new(1.0, 0.0, 0.0), 0.2).unwrap();
    let tol = ReflectionTolerances::default();
    let bad: Vec<(f64, ReflectionStatus)> = traj
        .frames()
        .iter()
        .map(|f| (f.t, strict_reflection_check(&f.surface, &plane, &tol).status))
        .filter(|(_, s)| *s != ReflectionStatus::Strict)
        .collect();
    let msg = format!("{} frames (t=0 and 100 samples), non-strict {:?}", traj.len(), bad);
    check(traj.len() == 101 && bad.is_empty(), msg.clone(), msg)
}

/// Circle `r = 0.5` inside ellipse (2, 1), both under `F = k`.
fn criterion_5() -> Outcome {
    let speed = SpeedFunction::mean_curvature(1);
    let cfg = every_frame(0.01, 1.0);
    let inner = evolve(&shapes::circle(origin(), 0.5, 128).unwrap(), &speed, 0.0, &cfg).map_err(|e| e.to_string())?;
    let outer = evolve(&shapes::ellipse(origin(), 2.0, 1.0, 256).unwrap(), &speed, 0.0, &cfg).map_err(|e| e.to_string())?;
    if inner.times() != outer.times() {
        return Err("frame times differ".into());
    }
    let mut violations = 0;
    let mut shared = 0;
    for (a, b) in inner.frames().iter().zip(outer.frames()).skip(1) {
        shared += 1;
        violations += a
            .surface
            .vertices()
            .iter()
            .filter(|p| b.surface.contains_point(**p, None) != Containment::Inside)
            .count();
    }
    let msg = format!("{shared} shared sample times, {violations} violations");
    check(shared == 100 && violations == 0, msg.clone(), msg)
}

fn criterion_6() -> Outcome {
    let m0 = shapes::ellipse(origin(), 2.0, 1.0, 256).map_err(|e| e.to_string())?;
    let speed = SpeedFunction::mean_curvature(1);
    let traj = evolve(&m0, &speed, 0.0, &every_frame(0.5, 1.0)).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&t| {
            let m = traj.surface_at(t)?;
            let r = inner_outer_radii(&m, None)?;
            Ok(r.rho_plus / r.rho_minus)
        })
        .collect::<expflow::Result<_>>()
        .map_err(|e| e.to_string())?;
    let ok = ratios.windows(2).all(|w| w[0] - w[1] > C6_DECREASE);
    let msg = format!("ρ+/ρ- at t=0, 0.5, 1: {ratios:.5?}");
    check(ok, msg.clone(), msg)
}

fn audit_options() -> AuditOptions {
    AuditOptions::new(sample_directions(1, 16), vec![0.4, 0.2, 0.1, 0.05])
}

fn criterion_7() -> Outcome {
    let fam = SphereFamily::exponential(origin(), Resolution::Polygon(256), 1.0, 1.0);
    let traj = Trajectory::from_family(Arc::new(fam), &time_grid(-6.0, 0.0, 601)).map_err(|e| e.to_string())?;
    let speed = SpeedFunction::mean_curvature(1);
    let report = rigidity_audit(&traj, Some(&speed), origin(), &audit_options()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for e in &report.tau_table {
        match e.tau {
            Some(t) => worst = worst.max((t - e.c.ln()).abs()),
            None => missing += 1,
        }
    }
    let msg = format!(
        "audit pass={}, {} τ entries, max |τ − ln c| {worst:.2e}, missing {missing}, final deviation {:.2e}",
        report.pass,
        report.tau_table.len(),
        report.final_deviation
    );
    check(
        report.pass
            && report.tau_table.len() == 64
            && missing == 0
            && worst <= C7_TAU_TOL
            && report.final_deviation < C7_DEVIATION,
        msg.clone(),
        msg,
    )
}

fn criterion_8() -> Outcome {
    let fam = Arc::new(EllipseFamily::distinct_rates(256));
    let traj = Trajectory::from_family(fam, &time_grid(-6.0, 0.0, 601)).map_err(|e| e.to_string())?;
    let origin_report = comes_out_of_point(&traj, origin(), &[1.0, 0.5, 0.1, 0.01]).map_err(|e| e.to_string())?;
    let speed = SpeedFunction::mean_curvature(1);
    let residual = flow_residual(&traj, &speed)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.max)
        .fold(0.0, f64::max);
    let mid = traj.surface_at(-1.0).map_err(|e| e.to_string())?;
    let cert = symmetry_certificate(&mid, origin(), &sample_directions(1, 16), 0.25).map_err(|e| e.to_string())?;
    let witness = matches!(cert, SymmetryCertificate::NotSpherical { .. });

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig {
        command: Command::RigidityAudit,
        output_dir: dir.path().join("audit"),
        ..RunConfig::default()
    };
    cfg.geometry.shape = Shape::EllipseFamily;
    cfg.geometry.axes = [1.0, 1.0, 1.0];
    cfg.geometry.rates = [1.0, 2.0, 0.0];
    cfg.validate().map_err(|e| e.to_string())?;
    let code = cli::run(&cfg).map_err(|e| e.to_string())?.exit_code;

    let msg = format!(
        "comes out of point: {}, max residual {residual:.3}, certificate at t=-1 deviation {:.3} with witness: {witness}, exit code {code}",
        origin_report.pass,
        cert.deviation()
    );
    check(
        origin_report.pass && residual > C8_RESIDUAL && witness && code == EXIT_AUDIT_FAIL,
        msg.clone(),
        msg,
    )
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases: C9_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn catalog(dim: usize, alpha: f64) -> Vec<SpeedFunction> {
    if dim == 1 {
        vec![
            SpeedFunction::mean_curvature(1),
            SpeedFunction::mean_curvature_power(1, alpha).unwrap(),
        ]
    } else {
        ["H", "K", "sigma2^(1/2)", "H+K"]
            .iter()
            .map(|n| SpeedFunction::from_name(n, 2, None).unwrap())
            .chain([SpeedFunction::mean_curvature_power(2, alpha).unwrap()])
            .collect()
    }
}

fn ellipse_curvature_error(n: usize) -> f64 {
    let (a, b) = (1.5, 1.0);
    let m = shapes::ellipse(origin(), a, b, n).unwrap();
    let k = compute_curvatures(&m).unwrap();
    m.vertices()
        .iter()
        .zip(&k.principal)
        .map(|(p, l)| {
            // x = a cos θ, y = b sin θ
            let exact = a * b / ((a * p.y / b).powi(2) + (b * p.x / a).powi(2)).powf(1.5);
            (l.as_slice()[0] - exact).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_9() -> Outcome {
    let mut notes = Vec::new();
    let fail = |name: &str, e: String| format!("{name}: {e}");

    // reflect involution
    runner()
        .run(
            &(prop::array::uniform3(-1.0..1.0f64), -5.0..5.0f64, prop::array::uniform3(-50.0..50.0f64)),
            |(v, c, y)| {
                let v = Point::from(v);
                prop_assume!(v.norm() > 1e-3);
                let plane = Hyperplane::from_direction(v, c).unwrap();
                let y = Point::from(y);
                let back = plane.reflect(&plane.reflect(&y));
                prop_assert!((back - y).norm() <= C9_INVOLUTION * y.norm().max(1.0));
                Ok(())
            },
        )
        .map_err(|e| fail("involution", e.to_string()))?;
    notes.push("involution");

    // τ strictly decreasing with c, on families and an evolved circle
    let evolved = evolve(
        &shapes::circle(origin(), 1.0, 128).unwrap(),
        &SpeedFunction::mean_curvature(1),
        0.0,
        &FlowConfig::new(StepPolicy::default(), 1.0),
    )
    .map_err(|e| e.to_string())?;
    let sphere = Trajectory::from_family(
        Arc::new(SphereFamily::exponential(origin(), Resolution::Polygon(128), 1.0, 1.0)),
        &time_grid(-4.0, 0.0, 201),
    )
    .map_err(|e| e.to_string())?;
    let ellipse = Trajectory::from_family(Arc::new(EllipseFamily::distinct_rates(128)), &time_grid(-4.0, 0.0, 201))
        .map_err(|e| e.to_string())?;
    runner()
        .run(
            &(0.0..2.0 * PI, prop::collection::btree_set(1u32..100, 2..5), 0usize..3),
            |(theta, cs, which)| {
                let traj = [&sphere, &ellipse, &evolved][which];
                let reach = traj.first().unwrap().surface.vertices().iter().map(|p| p.norm()).fold(0.0, f64::max);
                let top = traj.last().unwrap().surface.vertices().iter().map(|p| p.norm()).fold(f64::MAX, f64::min);
                let mut cs: Vec<f64> = cs.iter().map(|&k| reach + (top - reach) * k as f64 / 100.0).collect();
                cs.reverse();
                let rep = tau_limit_check(traj, Point::new(theta.cos(), theta.sin(), 0.0), &cs).unwrap();
                prop_assert!(rep.pass, "{:?}", rep.entries);
                Ok(())
            },
        )
        .map_err(|e| fail("τ monotonicity", e.to_string()))?;
    notes.push("τ monotone");

    // expansiveness and volume monotonicity over the catalog
    runner()
        .run(
            &(1usize..3, 0.5..2.0f64, 1.0..2.0f64, 0.1..0.3f64, any::<prop::sample::Index>()),
            |(dim, alpha, aspect, t_end, pick)| {
                let speeds = catalog(dim, alpha);
                let speed = &speeds[pick.index(speeds.len())];
                let m0 = if dim == 1 {
                    shapes::ellipse(origin(), aspect, 1.0, 96).unwrap()
                } else {
                    shapes::ellipsoid(origin(), [aspect, 1.0, 1.0], 2).unwrap()
                };
                let traj = evolve(&m0, speed, 0.0, &every_frame(0.02, t_end)).unwrap();
                prop_assert!(check_expansiveness(&traj, 0).pass(), "{} not expansive", speed.name());
                let vols: Vec<f64> = traj.frames().iter().map(|f| f.surface.enclosed_volume()).collect();
                prop_assert!(vols.windows(2).all(|w| w[1] > w[0]), "{} volumes {:?}", speed.name(), vols);
                Ok(())
            },
        )
        .map_err(|e| fail("expansiveness/volume", e.to_string()))?;
    notes.push("expansive, volume increasing");

    // curvature estimator under mesh doubling
    runner()
        .run(&(0.2..5.0f64, prop::array::uniform2(-3.0..3.0f64), 4u32..7), |(r, c, log_n)| {
            let n = 1usize << log_n;
            let c = Point::new(c[0], c[1], 0.0);
            let err = |n: usize| {
                let k = compute_curvatures(&shapes::circle(c, r, n).unwrap()).unwrap();
                k.principal
                    .iter()
                    .map(|l| (l.as_slice()[0] * r - 1.0).abs())
                    .fold(0.0, f64::max)
            };
            let (e1, e2) = (err(n), err(2 * n));
            prop_assert!(
                e2 <= C9_ROUNDOFF_FLOOR || e1 / e2 >= C9_FACTOR,
                "circle n={n}: {e1:e} -> {e2:e}"
            );
            Ok(())
        })
        .map_err(|e| fail("circle curvature", e.to_string()))?;
    let mut factors = Vec::new();
    for n in [32, 64, 128] {
        factors.push(ellipse_curvature_error(n) / ellipse_curvature_error(2 * n));
    }
    for s in 1..4 {
        let err = |s: usize| {
            let k = compute_curvatures(&shapes::icosphere(origin(), 1.0, s).unwrap()).unwrap();
            (k.max_curvature() - 1.0).abs().max((k.min_curvature() - 1.0).abs())
        };
        factors.push(err(s) / err(s + 1));
    }
    if factors.iter().any(|&f| f < C9_FACTOR) {
        return Err(format!("curvature convergence factors {factors:.2?}"));
    }
    notes.push("curvature converges");
    Ok(format!("{}; ellipse/icosphere doubling factors {factors:.2?}", notes.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("circle under k matches e^t", criterion_1),
        ("icosphere under H matches e^(t/2)", criterion_2),
        ("ancientness and birth time", criterion_3),
        ("strict reflection preserved", criterion_4),
        ("nested solutions stay nested", criterion_5),
        ("roundness improves", criterion_6),
        ("rigidity audit on expanding spheres", criterion_7),
        ("rigidity audit rejects ellipse family", criterion_8),
        ("invariant properties", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let took = start.elapsed();
        match outcome {
            Ok(m) => println!("PASS criterion {} ({name}): {m} [{took:.2?}]", i + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {m} [{took:.2?}]", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
