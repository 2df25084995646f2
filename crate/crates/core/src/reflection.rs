//! Plane reflections, the strict-reflection predicate, first-touch times and
//! sphericity certificates.
//!
//! `H₊` is the side `⟨x, V⟩ > c` of the plane, `H₋` the other side. A
//! hypersurface is strictly reflectable when the mirror image of its `H₊`
//! part lies inside the enclosed domain and `V` is nowhere tangent to it on
//! the plane.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::hypersurface::{compute_curvatures, pt2, support_max, Hypersurface, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hyperplane {
    normal: [f64; 3],
    offset: f64,
}

impl Hyperplane {
    /// `{x : ⟨x, V⟩ = c}`; `V` must be a unit vector within `10⁻¹²`.
    pub fn new(v: Point, c: f64) -> Result<Self> {
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::validation("V", format!("must be a unit vector, |V| = {}", v.norm())));
        }
        if !c.is_finite() {
            return Err(Error::validation("c", "must be finite"));
        }
        Ok(Self {
            normal: v.into(),
            offset: c,
        })
    }

    /// Normalizes `v` first.
    pub fn from_direction(v: Point, c: f64) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::validation("V", "direction must be non-zero"));
        }
        Self::new(v / n, c)
    }

    pub fn normal(&self) -> Point {
        Point::from(self.normal)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `⟨x, V⟩ − c`, positive in `H₊`.
    pub fn height(&self, x: &Point) -> f64 {
        x.dot(&self.normal()) - self.offset
    }

    pub fn reflect(&self, y: &Point) -> Point {
        y - self.normal() * (2.0 * self.height(y))
    }
}

/// Every vertex mapped by `y ↦ y − 2(⟨y, V⟩ − c)V`.
pub fn reflect_points(m: &Hypersurface, plane: &Hyperplane) -> Vec<Point> {
    m.vertices().iter().map(|y| plane.reflect(y)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReflectionStatus {
    Strict,
    NonStrict,
    Fails,
    Vacuous,
}

/// Tolerances for [`strict_reflection_check`]. `None` fields are derived
/// from the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionTolerances {
    /// Half-width of the slab around the plane whose vertices are tested for
    /// tangency rather than inclusion. Default: longest edge.
    pub plane_band: Option<f64>,
    /// Inclusion band: reflected points closer than this to the surface are
    /// inconclusive. Default: `max(10⁻⁶·diag, chord deviation)`.
    pub inclusion: Option<f64>,
    /// Minimum angle between `V` and the tangent space on the plane.
    pub angle: f64,
}

impl Default for ReflectionTolerances {
    fn default() -> Self {
        Self {
            plane_band: None,
            inclusion: None,
            angle: 1e-3,
        }
    }
}

impl ReflectionTolerances {
    pub fn resolve(&self, m: &Hypersurface) -> (f64, f64, f64) {
        let band = self.plane_band.unwrap_or_else(|| m.max_edge_length());
        let incl = self
            .inclusion
            .unwrap_or_else(|| (1e-6 * m.bbox_diagonal()).max(m.chord_deviation()));
        (band, incl, self.angle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    ReflectedOutside,
    Tangent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflectionWitness {
    pub vertex: usize,
    pub kind: WitnessKind,
    pub point: [f64; 3],
    pub reflected: [f64; 3],
    /// Signed distance of the reflected point (positive inside) or
    /// `|⟨ν, V⟩|` for tangency witnesses.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReflectionVerdict {
    pub status: ReflectionStatus,
    /// Smallest signed distance (positive inside) of reflected vertices
    /// deeper than the plane band; `None` when there are none.
    pub inclusion_margin: Option<f64>,
    /// Smallest `|⟨ν, V⟩|` over vertices within the plane band.
    pub tangency_margin: Option<f64>,
    pub witnesses: Vec<ReflectionWitness>,
}

const MAX_WITNESSES: usize = 8;

/// Strict-reflection predicate at mesh scale.
///
/// * `Vacuous`: the surface lies strictly in `H₋`.
/// * `Fails`: some reflected vertex is outside by more than the inclusion band.
/// * `NonStrict`: no failure, but a reflected vertex is within the inclusion
///   band, `V` is within `angle` of a tangent space on the plane, or no vertex
///   lies deeper than the plane band.
/// * `Strict`: everything else.
pub fn strict_reflection_check(m: &Hypersurface, plane: &Hyperplane, tol: &ReflectionTolerances) -> ReflectionVerdict {
    let v = plane.normal();
    if support_max(m, &v) < plane.offset() {
        return ReflectionVerdict {
            status: ReflectionStatus::Vacuous,
            inclusion_margin: None,
            tangency_margin: None,
            witnesses: Vec::new(),
        };
    }
    let (band, incl, angle) = tol.resolve(m);
    let verts = m.vertices();
    let checked: Vec<(usize, f64, f64, Point)> = verts
        .par_iter()
        .enumerate()
        .filter_map(|(i, x)| {
            let d = plane.height(x);
            (d > 0.0).then(|| {
                let y = plane.reflect(x);
                (i, d, m.signed_distance(y), y)
            })
        })
        .collect();
    let mut witnesses = Vec::new();
    let mut failed = false;
    let mut inconclusive = false;
    let mut inclusion_margin: Option<f64> = None;
    for &(i, d, s, y) in &checked {
        if s < -incl {
            failed = true;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(ReflectionWitness {
                    vertex: i,
                    kind: WitnessKind::ReflectedOutside,
                    point: verts[i].into(),
                    reflected: y.into(),
                    value: s,
                });
            }
        } else if d > band {
            inclusion_margin = Some(inclusion_margin.map_or(s, |m| m.min(s)));
            if s <= incl {
                inconclusive = true;
            }
        }
    }
    let near: Vec<usize> = (0..verts.len())
        .filter(|&i| plane.height(&verts[i]).abs() <= band)
        .collect();
    let mut tangency_margin = None;
    let mut tangent = false;
    if !near.is_empty() {
        match compute_curvatures(m) {
            Ok(data) => {
                for &i in &near {
                    let c = data.normals[i].dot(&v).abs();
                    tangency_margin = Some(tangency_margin.map_or(c, |m: f64| m.min(c)));
                    if c < angle.sin() {
                        tangent = true;
                        if witnesses.len() < MAX_WITNESSES {
                            witnesses.push(ReflectionWitness {
                                vertex: i,
                                kind: WitnessKind::Tangent,
                                point: verts[i].into(),
                                reflected: plane.reflect(&verts[i]).into(),
                                value: c,
                            });
                        }
                    }
                }
            }
            Err(_) => tangent = true,
        }
    }
    let status = if failed {
        ReflectionStatus::Fails
    } else if tangent || inconclusive || inclusion_margin.is_none() {
        ReflectionStatus::NonStrict
    } else {
        ReflectionStatus::Strict
    };
    ReflectionVerdict {
        status,
        inclusion_margin,
        tangency_margin,
        witnesses,
    }
}

/// First time the trajectory reaches the plane.
///
/// The first frame with `max ⟨x, V⟩ ≥ c` brackets the touch, which is then
/// bisected on re-sampled or re-stepped surfaces down to 1% of the
/// trajectory's resolution. Trajectories that cannot produce intermediate
/// surfaces fall back to linear interpolation of the support values.
pub fn first_touch_time(traj: &Trajectory, plane: &Hyperplane) -> Result<f64> {
    let frames = traj.frames();
    if frames.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let v = plane.normal();
    let c = plane.offset();
    let support = |m: &Hypersurface| support_max(m, &v);
    if support(&frames[0].surface) >= c {
        return Err(Error::TouchesAtStart { t0: frames[0].t });
    }
    let i = frames
        .iter()
        .position(|f| support(&f.surface) >= c)
        .ok_or(Error::NeverTouches)?;
    let (mut lo, mut hi) = (frames[i - 1].t, frames[i].t);
    let tol = 1e-2 * traj.resolution();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match traj.surface_at(mid) {
            Ok(m) => {
                if support(&m) >= c {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Err(Error::FrameUnavailable { .. }) => {
                let (s0, s1) = (support(&frames[i - 1].surface), support(&frames[i].surface));
                let (t0, t1) = (frames[i - 1].t, frames[i].t);
                return Ok(t0 + (c - s0) / (s1 - s0) * (t1 - t0));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Serialize)]
pub struct TimedVerdict {
    pub t: f64,
    pub verdict: ReflectionVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonitorReport {
    pub plane: Hyperplane,
    pub t_start: f64,
    pub verdicts: Vec<TimedVerdict>,
    /// First time at which the verdict is not `Strict`.
    pub first_non_strict: Option<f64>,
}

impl MonitorReport {
    pub fn all_strict(&self) -> bool {
        self.first_non_strict.is_none()
    }
}

/// Verdicts at `t_start` and at every later frame. The verdict at `t_start`
/// must be `Strict`.
pub fn monitor_reflection(
    traj: &Trajectory,
    plane: &Hyperplane,
    t_start: f64,
    tol: &ReflectionTolerances,
) -> Result<MonitorReport> {
    let t1 = traj.t1()?;
    if t_start > t1 {
        return Err(Error::StartNotStrict { t: t_start });
    }
    let start = strict_reflection_check(&traj.surface_at(t_start)?, plane, tol);
    if start.status != ReflectionStatus::Strict {
        return Err(Error::StartNotStrict { t: t_start });
    }
    let later: Vec<TimedVerdict> = traj
        .frames()
        .par_iter()
        .filter(|f| f.t > t_start)
        .map(|f| TimedVerdict {
            t: f.t,
            verdict: strict_reflection_check(&f.surface, plane, tol),
        })
        .collect();
    let mut verdicts = vec![TimedVerdict {
        t: t_start,
        verdict: start,
    }];
    verdicts.extend(later);
    let first_non_strict = verdicts
        .iter()
        .find(|v| v.verdict.status != ReflectionStatus::Strict)
        .map(|v| v.t);
    Ok(MonitorReport {
        plane: *plane,
        t_start,
        verdicts,
        first_non_strict,
    })
}

/// `count` unit directions: equally spaced angles in the plane (`dim = 1`)
/// or a Fibonacci lattice on the sphere (`dim = 2`).
pub fn sample_directions(dim: usize, count: usize) -> Vec<Point> {
    if dim == 1 {
        (0..count)
            .map(|k| {
                let th = TAU * k as f64 / count as f64;
                pt2(th.cos(), th.sin())
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * k as f64;
                Point::new(r * phi.cos(), r * phi.sin(), z)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PlaneDefect {
    pub direction: [f64; 3],
    /// Largest distance from a reflected vertex to the surface, relative to
    /// the mean radius.
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetryWitness {
    /// Direction from the center to the farthest vertex.
    pub farthest_direction: [f64; 3],
    pub farthest_radius: f64,
    pub nearest_radius: f64,
    /// Plane with the largest reflection defect.
    pub worst_plane: [f64; 3],
    pub worst_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome")]
pub enum SymmetryCertificate {
    Spherical {
        deviation: f64,
        max_reflection_defect: f64,
    },
    NotSpherical {
        deviation: f64,
        witness: AsymmetryWitness,
    },
}

impl SymmetryCertificate {
    pub fn is_spherical(&self) -> bool {
        matches!(self, SymmetryCertificate::Spherical { .. })
    }

    pub fn deviation(&self) -> f64 {
        match self {
            SymmetryCertificate::Spherical { deviation, .. } | SymmetryCertificate::NotSpherical { deviation, .. } => {
                *deviation
            }
        }
    }
}

/// Vertices tested per plane in the reflection-defect scan.
const DEFECT_SAMPLE: usize = 256;

/// Reflection symmetry about planes through `center` and the radius
/// deviation `(max − min) / mean` of `|x − center|`. Spherical iff the
/// deviation is below `tol`. Reflection defects are measured on at most
/// 256 evenly strided vertices per plane.
pub fn symmetry_certificate(
    m: &Hypersurface,
    center: Point,
    directions: &[Point],
    tol: f64,
) -> Result<SymmetryCertificate> {
    crate::hypersurface::require_inside(m, center)?;
    let verts = m.vertices();
    let radii: Vec<f64> = verts.iter().map(|x| (x - center).norm()).collect();
    let (mut imax, mut imin) = (0, 0);
    for i in 0..radii.len() {
        if radii[i] > radii[imax] {
            imax = i;
        }
        if radii[i] < radii[imin] {
            imin = i;
        }
    }
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let deviation = (radii[imax] - radii[imin]) / mean;
    let stride = verts.len().div_ceil(DEFECT_SAMPLE).max(1);
    let defects: Vec<PlaneDefect> = directions
        .par_iter()
        .map(|d| {
            let v = d.normalize();
            let plane = Hyperplane {
                normal: v.into(),
                offset: center.dot(&v),
            };
            let defect = verts
                .iter()
                .step_by(stride)
                .map(|x| m.distance_to(plane.reflect(x)))
                .fold(0.0, f64::max)
                / mean;
            PlaneDefect {
                direction: v.into(),
                defect,
            }
        })
        .collect();
    let worst = defects.iter().max_by(|a, b| a.defect.total_cmp(&b.defect));
    let max_defect = worst.map_or(0.0, |w| w.defect);
    if deviation < tol {
        return Ok(SymmetryCertificate::Spherical {
            deviation,
            max_reflection_defect: max_defect,
        });
    }
    Ok(SymmetryCertificate::NotSpherical {
        deviation,
        witness: AsymmetryWitness {
            farthest_direction: (verts[imax] - center).normalize().into(),
            farthest_radius: radii[imax],
            nearest_radius: radii[imin],
            worst_plane: worst.map_or([0.0; 3], |w| w.direction),
            worst_defect: max_defect,
        },
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::families::{time_grid, Resolution, SphereFamily};
    use crate::hypersurface::shapes;

    fn plane(v: Point, c: f64) -> Hyperplane {
        Hyperplane::new(v, c).unwrap()
    }

    #[test]
    fn reflection_formula() {
        assert_eq!(plane(Point::x(), 0.0).reflect(&pt2(1.0, 0.0)), pt2(-1.0, 0.0));
        assert_eq!(plane(Point::x(), 0.25).reflect(&pt2(1.0, 0.0)), pt2(-0.5, 0.0));
        assert_eq!(plane(Point::y(), 1.0).reflect(&pt2(1.0, 2.0)), pt2(1.0, 0.0));
    }

    #[test]
    fn non_unit_normal_rejected() {
        assert!(Hyperplane::new(pt2(1.0, 1.0), 0.0).is_err());
        assert!(Hyperplane::from_direction(pt2(1.0, 1.0), 0.0).is_ok());
    }

    #[test]
    fn circle_verdicts() {
        let c = shapes::circle(Point::zeros(), 1.0, 256).unwrap();
        let tol = ReflectionTolerances::default();
        let v = strict_reflection_check(&c, &plane(Point::x(), 0.5), &tol);
        assert_eq!(v.status, ReflectionStatus::Strict, "{v:?}");
        assert!(v.inclusion_margin.unwrap() > 0.0 && v.tangency_margin.unwrap() > 0.0);
        assert_eq!(
            strict_reflection_check(&c, &plane(Point::x(), 0.0), &tol).status,
            ReflectionStatus::NonStrict
        );
        assert_eq!(
            strict_reflection_check(&c, &plane(Point::x(), 1.5), &tol).status,
            ReflectionStatus::Vacuous
        );
    }

    #[test]
    fn reflection_through_offcenter_plane_fails() {
        // reflecting the big side of a circle lands outside
        let c = shapes::circle(Point::zeros(), 1.0, 128).unwrap();
        let v = strict_reflection_check(&c, &plane(Point::x(), -0.5), &ReflectionTolerances::default());
        assert_eq!(v.status, ReflectionStatus::Fails);
        assert!(!v.witnesses.is_empty());
    }

    #[test]
    fn touch_times_for_exponential_spheres() {
        let fam = SphereFamily::exponential(Point::zeros(), Resolution::Polygon(256), 1.0, 1.0);
        let traj = Trajectory::from_family(Arc::new(fam), &time_grid(-10.0, 0.0, 1001)).unwrap();
        for c in [0.5, 0.9] {
            let tau = first_touch_time(&traj, &plane(Point::x(), c)).unwrap();
            assert!((tau - c.ln()).abs() < 1e-4, "{tau}");
        }
        assert!(matches!(
            first_touch_time(&traj, &plane(Point::x(), 2.0)),
            Err(Error::NeverTouches)
        ));
        assert!(matches!(
            first_touch_time(&traj, &plane(Point::x(), 1e-6)),
            Err(Error::TouchesAtStart { .. })
        ));
    }

    #[test]
    fn certificates() {
        let s = shapes::icosphere(Point::zeros(), 1.0, 3).unwrap();
        let cert = symmetry_certificate(&s, Point::zeros(), &sample_directions(2, 64), 1e-6).unwrap();
        assert!(cert.is_spherical() && cert.deviation() < 1e-6, "{cert:?}");

        let e = shapes::ellipse(Point::zeros(), 2.0, 1.0, 256).unwrap();
        match symmetry_certificate(&e, Point::zeros(), &sample_directions(1, 64), 1e-3).unwrap() {
            SymmetryCertificate::NotSpherical { witness, .. } => {
                assert!(witness.farthest_direction[0].abs() > 0.999, "{witness:?}");
            }
            other => panic!("{other:?}"),
        }

        let noisy = shapes::perturbed_sphere(Point::zeros(), 1.0, 3, |p| 0.01 * p.z.signum()).unwrap();
        let cert = symmetry_certificate(&noisy, Point::zeros(), &sample_directions(2, 64), 1e-3).unwrap();
        assert!(!cert.is_spherical());
        assert!((cert.deviation() - 0.02).abs() < 2e-3, "{}", cert.deviation());

        assert!(matches!(
            symmetry_certificate(&e, Point::new(5.0, 0.0, 0.0), &sample_directions(1, 4), 1e-3),
            Err(Error::CenterOutside { .. })
        ));
    }

    #[test]
    fn fibonacci_directions_are_unit() {
        for d in sample_directions(2, 64) {
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }
}
