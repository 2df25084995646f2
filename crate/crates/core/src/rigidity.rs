//! Composite audits over trajectories: "comes out of a point", the
//! moving-plane rigidity audit, touch-time limits, the comparison argument
//! against compact ancient solutions, and pinching diagnostics.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{flow_residual, Trajectory};
use crate::hypersurface::{
    curvature_pinching_ratio, inner_outer_radii, starshapedness_ratio, Hypersurface, Point,
};
use crate::reflection::{
    first_touch_time, strict_reflection_check, symmetry_certificate, AsymmetryWitness, Hyperplane,
    ReflectionStatus, ReflectionTolerances, SymmetryCertificate,
};
use crate::speeds::SpeedFunction;
use crate::sphere_ode::{initial_time_estimate, integrate_radius, is_ancient, Ancientness};

fn max_distance(m: &Hypersurface, y: &Point) -> f64 {
    m.vertices().iter().map(|x| (x - y).norm()).fold(0.0, f64::max)
}

fn check_decreasing(field: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::validation(field, "must not be empty"));
    }
    if values.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::validation(field, "values must be positive"));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation(field, "values must be strictly decreasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PointOriginReport {
    pub y_infinity: [f64; 3],
    pub span: (f64, f64),
    pub radii_checked: Vec<f64>,
    /// Per radius, the latest time `t̄` such that every frame from the start
    /// of the span up to `t̄` lies in `B_r(y∞)`; `None` when even the first
    /// frame does not.
    pub first_containment_times: Vec<Option<f64>>,
    pub pass: bool,
}

/// Checks that the trajectory shrinks into every ball `B_r(y_inf)` toward
/// the start of its span.
///
/// For each radius the containment time is the end of the initial stretch of
/// frames inside the open ball, refined by bisection between the last
/// contained frame and the next one when intermediate surfaces are
/// available. Smaller radii give earlier times.
pub fn comes_out_of_point(traj: &Trajectory, y_inf: Point, radii: &[f64]) -> Result<PointOriginReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_decreasing("radii", radii)?;
    let frames = traj.frames();
    let extent: Vec<f64> = frames.par_iter().map(|f| max_distance(&f.surface, &y_inf)).collect();
    let tol = 1e-2 * traj.resolution();
    let times: Vec<Option<f64>> = radii
        .iter()
        .map(|&r| {
            let inside = extent.iter().take_while(|&&e| e < r).count();
            if inside == 0 {
                return None;
            }
            if inside == frames.len() {
                return Some(frames[inside - 1].t);
            }
            let (mut lo, mut hi) = (frames[inside - 1].t, frames[inside].t);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                match traj.surface_at(mid) {
                    Ok(m) if max_distance(&m, &y_inf) < r => lo = mid,
                    Ok(_) => hi = mid,
                    Err(_) => break,
                }
            }
            Some(lo)
        })
        .collect();
    let pass = times.iter().all(Option::is_some);
    Ok(PointOriginReport {
        y_infinity: y_inf.into(),
        span: (frames[0].t, frames[frames.len() - 1].t),
        radii_checked: radii.to_vec(),
        first_containment_times: times,
        pass,
    })
}

#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub directions: Vec<Point>,
    pub c_schedule: Vec<f64>,
    /// Offset unit for the post-touch checks at `τ + {1, 2, 4}·dt`;
    /// defaults to the trajectory resolution.
    pub probe_dt: Option<f64>,
    /// Frames monitored per plane after the post-touch checks.
    pub monitor_frames: usize,
    /// Frames given a symmetry certificate, besides the final one.
    pub symmetry_frames: usize,
    /// Symmetry tolerance as a multiple of the smallest audited offset.
    pub symmetry_factor: f64,
    pub tolerances: ReflectionTolerances,
}

impl AuditOptions {
    pub fn new(directions: Vec<Point>, c_schedule: Vec<f64>) -> Self {
        Self {
            directions,
            c_schedule,
            probe_dt: None,
            monitor_frames: 32,
            symmetry_frames: 32,
            symmetry_factor: 5.0,
            tolerances: ReflectionTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauEntry {
    pub direction: [f64; 3],
    pub c: f64,
    pub tau: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatusAt {
    pub t: f64,
    pub status: ReflectionStatus,
    pub inclusion_margin: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PostTouch {
    pub direction: [f64; 3],
    pub c: f64,
    pub tau: f64,
    pub checks: Vec<StatusAt>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryRecord {
    pub t: f64,
    pub spherical: bool,
    pub deviation: f64,
    pub witness: Option<AsymmetryWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityAuditReport {
    pub y_infinity: [f64; 3],
    pub origin: PointOriginReport,
    pub reference_time: f64,
    pub r_star: f64,
    pub audited_c: Vec<f64>,
    pub skipped_c: Vec<f64>,
    pub tau_table: Vec<TauEntry>,
    pub post_touch_verdicts: Vec<PostTouch>,
    pub symmetry_tolerance: f64,
    pub limit_symmetry: Vec<SymmetryRecord>,
    pub final_deviation: f64,
    pub flow_residual_max: Option<f64>,
    pub pass: bool,
    pub narrative: Vec<String>,
}

fn is_acceptable(s: ReflectionStatus) -> bool {
    matches!(s, ReflectionStatus::Strict | ReflectionStatus::NonStrict)
}

fn evenly(indices: &[usize], count: usize) -> Vec<usize> {
    if indices.len() <= count || count == 0 {
        return indices.to_vec();
    }
    (0..count)
        .map(|k| indices[k * (indices.len() - 1) / (count - 1).max(1)])
        .collect()
}

/// Moving-plane audit of a trajectory claimed to come out of `y_inf`.
///
/// The final frame fixes `R*` (distance from `y_inf` to the surface) and only
/// offsets `0 < c < R*` are audited. For every plane `⟨x, V⟩ = ⟨y_inf, V⟩ + c`
/// the touch time `τ` is located, reflection is checked at
/// `τ + {1, 2, 4}·dt` and on frames up to the end, and every frame after the
/// last touch of the smallest offset is tested for sphericity about
/// `y_inf` with tolerance `symmetry_factor · min c`. The audit passes iff no
/// reflection check fails and every certificate is spherical. The flow
/// residual under `speed` is reported but not gated on.
pub fn rigidity_audit(
    traj: &Trajectory,
    speed: Option<&SpeedFunction>,
    y_inf: Point,
    opts: &AuditOptions,
) -> Result<RigidityAuditReport> {
    let origin = comes_out_of_point(traj, y_inf, &opts.c_schedule)?;
    if !origin.pass {
        return Err(Error::PreconditionFailed(format!(
            "trajectory does not come out of {:?} for radii {:?}",
            origin.y_infinity, origin.radii_checked
        )));
    }
    let last = traj.last().ok_or(Error::EmptyTrajectory)?;
    if last.surface.contains_point(y_inf, None) != crate::hypersurface::Containment::Inside {
        return Err(Error::PreconditionFailed("y∞ is not inside the final frame".into()));
    }
    let r_star = last.surface.distance_to(y_inf);
    let (audited_c, skipped_c): (Vec<f64>, Vec<f64>) = opts.c_schedule.iter().partition(|&&c| c < r_star);
    if audited_c.is_empty() {
        return Err(Error::PreconditionFailed(format!("no offset below R* = {r_star}")));
    }
    let dt = opts.probe_dt.unwrap_or_else(|| traj.resolution());
    let t1 = last.t;

    let planes: Vec<(Point, f64)> = opts
        .directions
        .iter()
        .flat_map(|d| audited_c.iter().map(move |&c| (d.normalize(), c)))
        .collect();
    let results: Vec<(TauEntry, Option<PostTouch>)> = planes
        .par_iter()
        .map(|&(v, c)| -> Result<(TauEntry, Option<PostTouch>)> {
            let plane = Hyperplane::new(v, y_inf.dot(&v) + c)?;
            let tau = match first_touch_time(traj, &plane) {
                Ok(t) => t,
                Err(e) => {
                    return Ok((
                        TauEntry {
                            direction: v.into(),
                            c,
                            tau: None,
                            error: Some(e.to_string()),
                        },
                        None,
                    ))
                }
            };
            if tau + dt > t1 {
                return Err(Error::NoFramesPastTouch { tau, t_end: t1 });
            }
            let mut checks = Vec::new();
            for k in [1.0, 2.0, 4.0] {
                let t = tau + k * dt;
                if t > t1 {
                    break;
                }
                let verdict = strict_reflection_check(&traj.surface_at(t)?, &plane, &opts.tolerances);
                checks.push(StatusAt {
                    t,
                    status: verdict.status,
                    inclusion_margin: verdict.inclusion_margin,
                });
            }
            let later: Vec<usize> = (0..traj.len()).filter(|&i| traj.frames()[i].t > tau + 4.0 * dt).collect();
            for i in evenly(&later, opts.monitor_frames) {
                let f = &traj.frames()[i];
                let verdict = strict_reflection_check(&f.surface, &plane, &opts.tolerances);
                checks.push(StatusAt {
                    t: f.t,
                    status: verdict.status,
                    inclusion_margin: verdict.inclusion_margin,
                });
            }
            let ok = checks.iter().all(|s| is_acceptable(s.status));
            Ok((
                TauEntry {
                    direction: v.into(),
                    c,
                    tau: Some(tau),
                    error: None,
                },
                Some(PostTouch {
                    direction: v.into(),
                    c,
                    tau,
                    checks,
                    ok,
                }),
            ))
        })
        .collect::<Result<_>>()?;
    let (tau_table, post): (Vec<TauEntry>, Vec<Option<PostTouch>>) = results.into_iter().unzip();
    let post_touch_verdicts: Vec<PostTouch> = post.into_iter().flatten().collect();

    let c_min = audited_c.iter().copied().fold(f64::INFINITY, f64::min);
    let symmetry_tolerance = opts.symmetry_factor * c_min;
    let t_sym = tau_table
        .iter()
        .filter(|e| e.c == c_min)
        .filter_map(|e| e.tau)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut chosen = evenly(
        &(0..traj.len()).filter(|&i| traj.frames()[i].t >= t_sym).collect::<Vec<_>>(),
        opts.symmetry_frames,
    );
    if chosen.last() != Some(&(traj.len() - 1)) {
        chosen.push(traj.len() - 1);
    }
    let limit_symmetry: Vec<SymmetryRecord> = chosen
        .par_iter()
        .map(|&i| {
            let f = &traj.frames()[i];
            let cert = symmetry_certificate(&f.surface, y_inf, &opts.directions, symmetry_tolerance)?;
            let deviation = cert.deviation();
            Ok(match cert {
                SymmetryCertificate::Spherical { .. } => SymmetryRecord {
                    t: f.t,
                    spherical: true,
                    deviation,
                    witness: None,
                },
                SymmetryCertificate::NotSpherical { witness, .. } => SymmetryRecord {
                    t: f.t,
                    spherical: false,
                    deviation,
                    witness: Some(witness),
                },
            })
        })
        .collect::<Result<_>>()?;
    let final_deviation = limit_symmetry.last().map_or(f64::NAN, |r| r.deviation);

    let flow_residual_max = match speed {
        Some(s) if traj.len() >= 3 => flow_residual(traj, s)
            .ok()
            .map(|r| r.iter().map(|f| f.max).fold(0.0, f64::max)),
        _ => None,
    };

    let tau_ok = tau_table.iter().all(|e| e.tau.is_some());
    let reflect_ok = post_touch_verdicts.iter().all(|p| p.ok);
    let sym_ok = limit_symmetry.iter().all(|r| r.spherical);
    let mut narrative = vec![format!(
        "R* = {r_star:.6} at t = {t1}; audited offsets {audited_c:?}, skipped {skipped_c:?}"
    )];
    if !tau_ok {
        narrative.push("some planes have no touch time inside the span".into());
    }
    match post_touch_verdicts.iter().find(|p| !p.ok) {
        Some(p) => narrative.push(format!(
            "reflection fails after touch for V = {:?}, c = {}",
            p.direction, p.c
        )),
        None => narrative.push("every post-touch reflection check is strict or non-strict".into()),
    }
    match limit_symmetry.iter().find(|r| !r.spherical) {
        Some(r) => narrative.push(format!(
            "not spherical at t = {}: deviation {:.4} exceeds {:.4}",
            r.t, r.deviation, symmetry_tolerance
        )),
        None => narrative.push(format!(
            "all {} certified frames spherical (final deviation {:.3e})",
            limit_symmetry.len(),
            final_deviation
        )),
    }
    if let (Some(res), Some(s)) = (flow_residual_max, speed) {
        if res > 0.1 {
            narrative.push(format!(
                "flow residual under {} reaches {res:.3}: the frames do not solve the flow",
                s.name()
            ));
        } else {
            narrative.push(format!("flow residual under {} at most {res:.3e}", s.name()));
        }
    }
    Ok(RigidityAuditReport {
        y_infinity: y_inf.into(),
        origin,
        reference_time: t1,
        r_star,
        audited_c,
        skipped_c,
        tau_table,
        post_touch_verdicts,
        symmetry_tolerance,
        limit_symmetry,
        final_deviation,
        flow_residual_max,
        pass: tau_ok && reflect_ok && sym_ok,
        narrative,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TauLimitReport {
    pub direction: [f64; 3],
    pub entries: Vec<TauEntry>,
    pub strictly_decreasing: bool,
    pub span_start: f64,
    pub pass: bool,
}

/// Touch times along a decreasing offset schedule for planes
/// `⟨x, V⟩ = c`. Passes when every plane is touched and `τ` decreases
/// strictly as `c` decreases.
pub fn tau_limit_check(traj: &Trajectory, v: Point, c_schedule: &[f64]) -> Result<TauLimitReport> {
    check_decreasing("c_schedule", c_schedule)?;
    let span_start = traj.t0()?;
    let v = v.normalize();
    let entries: Vec<TauEntry> = c_schedule
        .par_iter()
        .map(|&c| {
            let plane = Hyperplane::new(v, c)?;
            Ok(match first_touch_time(traj, &plane) {
                Ok(t) => TauEntry {
                    direction: v.into(),
                    c,
                    tau: Some(t),
                    error: None,
                },
                Err(e) => TauEntry {
                    direction: v.into(),
                    c,
                    tau: None,
                    error: Some(e.to_string()),
                },
            })
        })
        .collect::<Result<_>>()?;
    let taus: Option<Vec<f64>> = entries.iter().map(|e| e.tau).collect();
    let strictly_decreasing = taus
        .as_ref()
        .is_some_and(|t| t.windows(2).all(|w| w[1] < w[0]));
    Ok(TauLimitReport {
        direction: v.into(),
        entries,
        strictly_decreasing,
        span_start,
        pass: strictly_decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonWitness {
    pub t: f64,
    pub rho_minus_t: f64,
    pub t_sphere_birth: f64,
    pub t_enclosed: f64,
    pub enclosed_center: [f64; 3],
    pub enclosed_radius: f64,
    pub comparison_radius_t: f64,
    /// First frame time at which the evolved comparison ball is no longer
    /// inside the trajectory.
    pub enclosure_lost_at: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict")]
pub enum NonexistenceVerdict {
    Consistent { reason: String },
    Contradiction { witness: ComparisonWitness },
}

/// Comparison argument against a trajectory claimed to be ancient for a
/// speed whose spherical solutions are not.
///
/// With `T` the last frame time, the sphere of radius `ρ₋(T)` at `T` was born
/// at a finite `T_S`. If the trajectory has a frame at or before `T_S`, the
/// ball inscribed in the latest such frame is flowed to `T` as a sphere; a
/// genuine solution would keep it enclosed and so force its radius below
/// `ρ₋(T)`. A larger radius, or lost enclosure, is a contradiction.
pub fn ancient_nonexistence_check(speed: &SpeedFunction, traj: &Trajectory) -> Result<NonexistenceVerdict> {
    let verdict = is_ancient(speed)?;
    if verdict.verdict == Ancientness::Ancient {
        return Err(Error::NotApplicable(format!(
            "spheres are ancient under {}",
            speed.name()
        )));
    }
    let last = traj.last().ok_or(Error::EmptyTrajectory)?;
    let t = last.t;
    let (_, rho_minus_t) = last.surface.chebyshev_center()?;
    let t_birth = initial_time_estimate(speed, rho_minus_t, t)?;
    let Some(i) = traj.index_at_or_before(t_birth) else {
        return Ok(NonexistenceVerdict::Consistent {
            reason: format!(
                "no frame at or before the sphere birth time {t_birth:.6} (trajectory starts at {})",
                traj.t0()?
            ),
        });
    };
    let f = &traj.frames()[i];
    let (center, r0) = f.surface.chebyshev_center()?;
    let dt = (t - f.t) / 4096.0;
    let sphere = integrate_radius(speed, r0, f.t, t, dt)?;
    let enclosure_lost_at = traj.frames()[i..]
        .iter()
        .find(|g| {
            let r = sphere.radius_at(g.t).unwrap_or(f64::NAN);
            !(g.surface.signed_distance(center) >= r)
        })
        .map(|g| g.t);
    let comparison_radius_t = sphere.final_radius();
    let witness = ComparisonWitness {
        t,
        rho_minus_t,
        t_sphere_birth: t_birth,
        t_enclosed: f.t,
        enclosed_center: center.into(),
        enclosed_radius: r0,
        comparison_radius_t,
        enclosure_lost_at,
    };
    if comparison_radius_t > rho_minus_t || enclosure_lost_at.is_some() {
        Ok(NonexistenceVerdict::Contradiction { witness })
    } else {
        Ok(NonexistenceVerdict::Consistent {
            reason: "comparison sphere stays enclosed and below ρ₋(T)".into(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchingRow {
    pub t: f64,
    pub radius_ratio: f64,
    /// `None` where the frame is not convex.
    pub curvature_ratio: Option<f64>,
    pub starshapedness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PinchingReport {
    pub y_infinity: [f64; 3],
    pub threshold: f64,
    pub rows: Vec<PinchingRow>,
    pub inf_radius_ratio: f64,
    pub inf_curvature_ratio: f64,
    pub inf_starshapedness: f64,
    pub radius_pinched: bool,
    pub curvature_pinched: bool,
    pub starshaped: bool,
    /// Uniform `ε₀` over the conditions that hold, if any.
    pub epsilon0: Option<f64>,
    pub shrinks_backward: bool,
    pub origin: Option<PointOriginReport>,
    /// `Some(true)` when a condition holds uniformly, the trajectory shrinks
    /// backward and it comes out of `y∞`.
    pub implication_confirmed: Option<bool>,
}

/// Per-frame radius pinching `ρ₋/ρ₊` about `y∞`, curvature pinching
/// `min λ / max λ` and starshapedness about `y∞`, with their infima. A
/// condition holds uniformly when its infimum exceeds `threshold`.
pub fn pinching_diagnostics(traj: &Trajectory, y_inf: Point, threshold: f64) -> Result<PinchingReport> {
    let frames = traj.frames();
    if frames.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let rows: Vec<PinchingRow> = frames
        .par_iter()
        .map(|f| {
            let radii = inner_outer_radii(&f.surface, Some(y_inf))?;
            let curvature_ratio = match curvature_pinching_ratio(&f.surface) {
                Ok(r) => Some(r),
                Err(Error::NonConvexInput { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(PinchingRow {
                t: f.t,
                radius_ratio: radii.ratio(),
                curvature_ratio,
                starshapedness: starshapedness_ratio(&f.surface, y_inf)?,
            })
        })
        .collect::<Result<_>>()?;
    let inf = |g: &dyn Fn(&PinchingRow) -> f64| rows.iter().map(g).fold(f64::INFINITY, f64::min);
    let inf_radius_ratio = inf(&|r| r.radius_ratio);
    let inf_curvature_ratio = inf(&|r| r.curvature_ratio.unwrap_or(f64::NEG_INFINITY));
    let inf_starshapedness = inf(&|r| r.starshapedness);
    let radius_pinched = inf_radius_ratio > threshold;
    let curvature_pinched = inf_curvature_ratio > threshold;
    let starshaped = inf_starshapedness > threshold;
    let holding: Vec<f64> = [
        (radius_pinched, inf_radius_ratio),
        (curvature_pinched, inf_curvature_ratio),
        (starshaped, inf_starshapedness),
    ]
    .iter()
    .filter(|(h, _)| *h)
    .map(|&(_, v)| v)
    .collect();
    let epsilon0 = holding.iter().copied().reduce(f64::min);

    let first = max_distance(&frames[0].surface, &y_inf);
    let last = max_distance(&frames[frames.len() - 1].surface, &y_inf);
    let shrinks_backward = frames.len() >= 2 && first < 0.25 * last;
    let origin = if shrinks_backward {
        // geometric radii from half the final extent down to twice the first
        let (hi, lo) = (0.5 * last, 2.0 * first);
        let radii: Vec<f64> = (0..4).map(|k| hi * (lo / hi).powf(k as f64 / 3.0)).collect();
        Some(comes_out_of_point(traj, y_inf, &radii)?)
    } else {
        None
    };
    let implication_confirmed = match (&origin, epsilon0) {
        (Some(o), Some(_)) => Some(o.pass),
        _ => None,
    };
    Ok(PinchingReport {
        y_infinity: y_inf.into(),
        threshold,
        rows,
        inf_radius_ratio,
        inf_curvature_ratio,
        inf_starshapedness,
        radius_pinched,
        curvature_pinched,
        starshaped,
        epsilon0,
        shrinks_backward,
        origin,
        implication_confirmed,
    })
}
