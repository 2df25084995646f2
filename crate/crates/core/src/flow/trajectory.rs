use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{advance, EventKind, FlowEvent, StepPolicy};
use crate::error::{Error, Result};
use crate::families::FrameSource;
use crate::hypersurface::{compute_curvatures, ray_triangle, Containment, Hypersurface, Point};
use crate::speeds::{eval_speed, SpeedFunction};

#[derive(Debug, Clone)]
pub struct Frame {
    pub t: f64,
    pub surface: Hypersurface,
}

/// Time-ordered frames of an evolving hypersurface.
///
/// A trajectory can answer [`surface_at`](Self::surface_at) between frames
/// when it knows how the frames were produced: from an analytic family, or
/// from a speed and step policy (re-stepping from the preceding frame).
#[derive(Clone)]
pub struct Trajectory {
    frames: Vec<Frame>,
    speed: Option<SpeedFunction>,
    resolution: f64,
    policy: Option<StepPolicy>,
    source: Option<Arc<dyn FrameSource>>,
    events: Vec<FlowEvent>,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("frames", &self.frames.len())
            .field("span", &(self.frames.first().map(|f| f.t), self.frames.last().map(|f| f.t)))
            .field("speed", &self.speed.as_ref().map(|s| s.name().to_string()))
            .field("resolution", &self.resolution)
            .field("source", &self.source.as_ref().map(|s| s.describe()))
            .field("events", &self.events.len())
            .finish()
    }
}

/// Default time resolution for analytic families.
pub const FAMILY_RESOLUTION: f64 = 1e-3;

impl Trajectory {
    pub(crate) fn new_numeric(speed: SpeedFunction, resolution: f64, policy: StepPolicy) -> Self {
        Self {
            frames: Vec::new(),
            speed: Some(speed),
            resolution,
            policy: Some(policy),
            source: None,
            events: Vec::new(),
        }
    }

    /// Wraps precomputed frames. Without a speed, sub-frame queries fail.
    pub fn from_frames(frames: Vec<Frame>, speed: Option<SpeedFunction>, resolution: f64) -> Result<Self> {
        let mut traj = Self {
            frames: Vec::with_capacity(frames.len()),
            speed,
            resolution,
            policy: Some(StepPolicy::Fixed { dt: resolution }),
            source: None,
            events: Vec::new(),
        };
        for f in frames {
            traj.push_frame(f.t, f.surface)?;
        }
        Ok(traj)
    }

    /// Samples an analytic family at `times` (strictly increasing).
    pub fn from_family(source: Arc<dyn FrameSource>, times: &[f64]) -> Result<Self> {
        let surfaces: Vec<Result<Hypersurface>> = times.par_iter().map(|&t| source.frame_at(t)).collect();
        let mut traj = Self {
            frames: Vec::with_capacity(times.len()),
            speed: None,
            resolution: FAMILY_RESOLUTION,
            policy: None,
            source: Some(source),
            events: Vec::new(),
        };
        for (&t, s) in times.iter().zip(surfaces) {
            traj.push_frame(t, s?)?;
        }
        Ok(traj)
    }

    pub fn with_resolution(mut self, resolution: f64) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_speed(mut self, speed: SpeedFunction) -> Self {
        self.speed = Some(speed);
        self
    }

    pub(crate) fn push_frame(&mut self, t: f64, surface: Hypersurface) -> Result<()> {
        if let Some(last) = self.frames.last() {
            if !(t > last.t) {
                return Err(Error::validation(
                    "frames",
                    format!("frame times must increase strictly ({} then {t})", last.t),
                ));
            }
        }
        self.frames.push(Frame { t, surface });
        Ok(())
    }

    pub(crate) fn push_event(&mut self, t: f64, kind: EventKind, message: String) {
        self.events.push(FlowEvent { t, kind, message });
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn events(&self) -> &[FlowEvent] {
        &self.events
    }

    pub fn speed(&self) -> Option<&SpeedFunction> {
        self.speed.as_ref()
    }

    pub fn source(&self) -> Option<&Arc<dyn FrameSource>> {
        self.source.as_ref()
    }

    /// Time resolution used when refining event times between frames.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn first(&self) -> Option<&Frame> {
        self.frames.first()
    }

    pub fn last(&self) -> Option<&Frame> {
        self.frames.last()
    }

    pub fn t0(&self) -> Result<f64> {
        self.first().map(|f| f.t).ok_or(Error::EmptyTrajectory)
    }

    pub fn t1(&self) -> Result<f64> {
        self.last().map(|f| f.t).ok_or(Error::EmptyTrajectory)
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Index of the last frame with time `≤ t`.
    pub fn index_at_or_before(&self, t: f64) -> Option<usize> {
        let n = self.frames.partition_point(|f| f.t <= t);
        n.checked_sub(1)
    }

    /// The hypersurface at time `t` inside the span: a stored frame when `t`
    /// matches one, otherwise a re-sampled family member or a re-stepped
    /// surface.
    pub fn surface_at(&self, t: f64) -> Result<Hypersurface> {
        let (t0, t1) = (self.t0()?, self.t1()?);
        let tol = 1e-12 * t0.abs().max(t1.abs()).max(1.0);
        if t < t0 - tol || t > t1 + tol {
            return Err(Error::FrameUnavailable {
                t,
                reason: format!("outside the span [{t0}, {t1}]"),
            });
        }
        let i = self.index_at_or_before(t + tol).unwrap_or(0);
        if (self.frames[i].t - t).abs() <= tol {
            return Ok(self.frames[i].surface.clone());
        }
        if let Some(src) = &self.source {
            return src.frame_at(t);
        }
        match (&self.speed, self.policy) {
            (Some(speed), Some(policy)) => {
                let f = &self.frames[i];
                advance(&f.surface, speed, policy, f.t, t)
            }
            _ => Err(Error::FrameUnavailable {
                t,
                reason: "no analytic source or speed to re-step from".into(),
            }),
        }
    }
}

/// Residual of the flow law on one frame.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualFrame {
    pub t: f64,
    pub max: f64,
    pub mean: f64,
}

fn registered(a: &Hypersurface, b: &Hypersurface) -> bool {
    a.len() == b.len() && (a.shares_topology(b) || a.dim() == 1 || a.faces() == b.faces())
}

/// Signed distance along `dir` from `origin` to the nearest crossing of `m`.
fn ray_hit(m: &Hypersurface, origin: Point, dir: Point) -> Option<f64> {
    let v = m.vertices();
    let mut best: Option<f64> = None;
    let mut consider = |s: f64| {
        if best.is_none_or(|b| s.abs() < b.abs()) {
            best = Some(s);
        }
    };
    if m.dim() == 1 {
        let n = v.len();
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let e = b - a;
            let den = dir.x * e.y - dir.y * e.x;
            if den.abs() < 1e-300 {
                continue;
            }
            let w = a - origin;
            let s = (w.x * e.y - w.y * e.x) / den;
            let u = (w.x * dir.y - w.y * dir.x) / den;
            if (0.0..=1.0).contains(&u) {
                consider(s);
            }
        }
    } else {
        for f in m.faces() {
            if let Some(s) = ray_triangle(origin, dir, [v[f[0]], v[f[1]], v[f[2]]]) {
                consider(s);
            }
        }
    }
    best
}

/// Per-frame `max` and `mean` of `|⟨∂x/∂t, ν⟩ − 1/F(λ)|` on interior frames,
/// with `∂x/∂t` from central differences. Frames with the same vertex count
/// and connectivity are matched vertex by vertex; otherwise the normal
/// displacement is measured by casting rays along `ν` to the neighbours.
pub fn flow_residual(traj: &Trajectory, speed: &SpeedFunction) -> Result<Vec<ResidualFrame>> {
    let frames = traj.frames();
    if frames.len() < 3 {
        return Err(Error::InsufficientFrames {
            needed: 3,
            got: frames.len(),
        });
    }
    (1..frames.len() - 1)
        .into_par_iter()
        .map(|i| {
            let (prev, cur, next) = (&frames[i - 1], &frames[i], &frames[i + 1]);
            let data = compute_curvatures(&cur.surface)?;
            let span = next.t - prev.t;
            let matched = registered(&prev.surface, &cur.surface) && registered(&cur.surface, &next.surface);
            let mut max = 0.0_f64;
            let mut sum = 0.0;
            for (j, (x, (nu, lambda))) in cur
                .surface
                .vertices()
                .iter()
                .zip(data.normals.iter().zip(&data.principal))
                .enumerate()
            {
                let vn = if matched {
                    (next.surface.vertices()[j] - prev.surface.vertices()[j]).dot(nu) / span
                } else {
                    let fwd = ray_hit(&next.surface, *x, *nu);
                    let back = ray_hit(&prev.surface, *x, *nu);
                    match (fwd, back) {
                        (Some(a), Some(b)) => (a - b) / span,
                        _ => {
                            return Err(Error::FrameUnavailable {
                                t: cur.t,
                                reason: format!("normal ray from vertex {j} misses a neighbouring frame"),
                            })
                        }
                    }
                };
                let f = eval_speed(speed, lambda).map_err(|_| Error::ConeExit { vertex: j, t: cur.t })?;
                let r = (vn - 1.0 / f).abs();
                max = max.max(r);
                sum += r;
            }
            Ok(ResidualFrame {
                t: cur.t,
                max,
                mean: sum / cur.surface.len() as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansivenessReport {
    pub pairs_checked: usize,
    /// `(t_a, t_b, vertex)` where a vertex of frame `t_a` is not inside frame `t_b`.
    pub violations: Vec<(f64, f64, usize)>,
}

impl ExpansivenessReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every vertex of a frame lies inside the next sampled frame, on
/// up to `max_pairs` evenly spread consecutive pairs.
pub fn check_expansiveness(traj: &Trajectory, max_pairs: usize) -> ExpansivenessReport {
    let frames = traj.frames();
    let total = frames.len().saturating_sub(1);
    let stride = if max_pairs == 0 { 1 } else { total.div_ceil(max_pairs).max(1) };
    let pairs: Vec<usize> = (0..total).step_by(stride).collect();
    let violations = pairs
        .par_iter()
        .flat_map_iter(|&i| {
            let (a, b) = (&frames[i], &frames[i + 1]);
            a.surface
                .vertices()
                .iter()
                .enumerate()
                .filter(|(_, p)| b.surface.contains_point(**p, None) != Containment::Inside)
                .map(|(j, _)| (a.t, b.t, j))
                .collect::<Vec<_>>()
        })
        .collect();
    ExpansivenessReport {
        pairs_checked: pairs.len(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{evolve, FlowConfig, StepPolicy};
    use super::*;
    use crate::families::{time_grid, EllipseFamily, Resolution, SphereFamily};
    use crate::hypersurface::shapes;

    #[test]
    fn sphere_family_solves_curve_flow() {
        let fam = SphereFamily::exponential(Point::zeros(), Resolution::Polygon(256), 1.0, 1.0);
        let traj = Trajectory::from_family(Arc::new(fam), &time_grid(-1.0, 0.0, 101)).unwrap();
        let res = flow_residual(&traj, &SpeedFunction::mean_curvature(1)).unwrap();
        assert_eq!(res.len(), 99);
        for r in res {
            assert!(r.max < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn ellipse_family_is_not_a_solution() {
        let fam = EllipseFamily::distinct_rates(256);
        let traj = Trajectory::from_family(Arc::new(fam), &time_grid(-1.0, 0.0, 101)).unwrap();
        let res = flow_residual(&traj, &SpeedFunction::mean_curvature(1)).unwrap();
        assert!(res.iter().any(|r| r.max > 0.1));
    }

    #[test]
    fn evolved_output_has_small_residual() {
        let e = shapes::ellipse(Point::zeros(), 2.0, 1.0, 128).unwrap();
        let speed = SpeedFunction::mean_curvature(1);
        let mut cfg = FlowConfig::new(StepPolicy::default(), 0.2);
        cfg.frame_interval = Some(1e-3);
        let traj = evolve(&e, &speed, 0.0, &cfg).unwrap();
        let res = flow_residual(&traj, &speed).unwrap();
        let worst = res.iter().map(|r| r.max).fold(0.0, f64::max);
        assert!(worst <= 10.0 * 1e-3, "{worst}");
    }

    #[test]
    fn ray_cast_matches_registered_residual() {
        let times = time_grid(0.0, 0.1, 11);
        // alternating vertex counts force ray casting
        let frames = times
            .iter()
            .enumerate()
            .map(|(i, &t)| Frame {
                t,
                surface: shapes::circle(Point::zeros(), t.exp(), if i % 2 == 0 { 200 } else { 201 }).unwrap(),
            })
            .collect();
        let traj = Trajectory::from_frames(frames, None, 1e-3).unwrap();
        let res = flow_residual(&traj, &SpeedFunction::mean_curvature(1)).unwrap();
        for r in res {
            assert!(r.max < 1e-3, "{r:?}");
        }
    }

    #[test]
    fn too_few_frames() {
        let c = shapes::circle(Point::zeros(), 1.0, 16).unwrap();
        let traj = Trajectory::from_frames(
            vec![Frame { t: 0.0, surface: c.clone() }, Frame { t: 1.0, surface: c }],
            None,
            1e-3,
        )
        .unwrap();
        assert!(matches!(
            flow_residual(&traj, &SpeedFunction::mean_curvature(1)),
            Err(Error::InsufficientFrames { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn frame_times_must_increase() {
        let c = shapes::circle(Point::zeros(), 1.0, 16).unwrap();
        let frames = vec![Frame { t: 0.0, surface: c.clone() }, Frame { t: 0.0, surface: c }];
        assert!(Trajectory::from_frames(frames, None, 1e-3).is_err());
    }

    #[test]
    fn surface_between_frames_by_restepping() {
        let c = shapes::circle(Point::zeros(), 1.0, 64).unwrap();
        let speed = SpeedFunction::mean_curvature(1);
        let traj = evolve(&c, &speed, 0.0, &FlowConfig::new(StepPolicy::default(), 0.05)).unwrap();
        let mid = traj.surface_at(0.0137).unwrap();
        assert!((mid.vertices()[0].norm() - 0.0137f64.exp()).abs() < 1e-9);
        assert!(traj.surface_at(0.2).is_err());
    }

    #[test]
    fn evolved_circle_is_expansive() {
        let c = shapes::circle(Point::zeros(), 1.0, 64).unwrap();
        let speed = SpeedFunction::mean_curvature(1);
        let traj = evolve(&c, &speed, 0.0, &FlowConfig::new(StepPolicy::default(), 0.2)).unwrap();
        let rep = check_expansiveness(&traj, 0);
        assert_eq!(rep.pairs_checked, 20);
        assert!(rep.pass());
    }
}
