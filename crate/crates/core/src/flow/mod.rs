//! Explicit time integration of `∂x/∂t = ν / F(λ)`.
//!
//! Each step is classical RK4 with curvatures recomputed at every stage. The
//! step size either is fixed or follows a stability bound
//!
//! ```text
//! dt ≤ c_cfl · min_i min(h_i·F_i, h_i²·F_i² / max_j ∂F/∂λ_j)
//! ```
//!
//! where `h_i` is the shortest edge at vertex `i`. The second term is the
//! diffusive limit of the linearized flow and is the one that binds on fine
//! meshes.

mod remesh;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypersurface::{compute_curvatures, Hypersurface, Point};
use crate::speeds::{eval_speed, ConeKind, SpeedFunction};

pub use remesh::{remesh, EdgeBand};
pub use trajectory::{
    check_expansiveness, flow_residual, ExpansivenessReport, Frame, ResidualFrame, Trajectory,
};

/// Relative interior margin below which a curvature tuple counts as having
/// left the cone.
pub const CONE_EXIT_MARGIN: f64 = 1e-6;
/// Relative margin below which a warning event is logged.
pub const CONE_WARNING_MARGIN: f64 = 1e-3;
/// Element quality floor (see [`Hypersurface::min_element_quality`]).
pub const QUALITY_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    Fixed { dt: f64 },
    Cfl { c_cfl: f64, dt_max: f64 },
}

impl StepPolicy {
    /// Largest step the policy would ever take.
    pub fn nominal_dt(&self) -> f64 {
        match *self {
            StepPolicy::Fixed { dt } => dt,
            StepPolicy::Cfl { dt_max, .. } => dt_max,
        }
    }

    fn dt_for(&self, bound: f64) -> f64 {
        match *self {
            StepPolicy::Fixed { dt } => dt,
            StepPolicy::Cfl { c_cfl, dt_max } => (c_cfl * bound).min(dt_max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepPolicy::Fixed { dt } => positive("flow.dt", dt),
            StepPolicy::Cfl { c_cfl, dt_max } => {
                if !(c_cfl > 0.0 && c_cfl <= 1.0) {
                    return Err(Error::validation("flow.c_cfl", format!("must lie in (0, 1], got {c_cfl}")));
                }
                positive("flow.dt_max", dt_max)
            }
        }
    }
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::Cfl {
            c_cfl: 0.2,
            dt_max: 1e-3,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive, got {v}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub step: StepPolicy,
    pub t_end: f64,
    /// Time between emitted frames. `None` means `max(1, ⌊0.01/dt⌋)·dt` with
    /// the policy's nominal `dt`.
    pub frame_interval: Option<f64>,
    pub remesh: Option<EdgeBand>,
    pub stop_on_cone_exit: bool,
    pub tangential_redistribution: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: StepPolicy::default(),
            t_end: 1.0,
            frame_interval: None,
            remesh: None,
            stop_on_cone_exit: true,
            tangential_redistribution: false,
        }
    }
}

impl FlowConfig {
    pub fn new(step: StepPolicy, t_end: f64) -> Self {
        Self {
            step,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self, t0: f64) -> Result<()> {
        self.step.validate()?;
        if !(self.t_end > t0) || !self.t_end.is_finite() {
            return Err(Error::validation(
                "flow.t_end",
                format!("must be finite and after the start time {t0}, got {}", self.t_end),
            ));
        }
        if let Some(i) = self.frame_interval {
            positive("flow.frame_interval", i)?;
        }
        if let Some(band) = &self.remesh {
            band.validate()?;
        }
        Ok(())
    }

    pub fn resolved_frame_interval(&self) -> f64 {
        self.frame_interval.unwrap_or_else(|| {
            let dt = self.step.nominal_dt();
            (0.01 / dt).floor().max(1.0) * dt
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Remesh,
    NearConeBoundary,
    ConeExit,
    TangentialRedistribution,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowEvent {
    pub t: f64,
    pub kind: EventKind,
    pub message: String,
}

/// Velocities at one RK stage plus the quantities needed for step control.
struct Field {
    vel: Vec<Point>,
    bound: f64,
    min_margin: f64,
}

fn velocity_field(m: &Hypersurface, speed: &SpeedFunction, t: f64) -> Result<Field> {
    if speed.arity() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: speed.arity(),
            got: m.dim(),
        });
    }
    let data = compute_curvatures(m)?;
    let h = m.local_edge_lengths();
    let cone = speed.cone();
    let mut vel = Vec::with_capacity(m.len());
    let mut bound = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    for (i, (nu, lambda)) in data.normals.iter().zip(&data.principal).enumerate() {
        let l = lambda.as_slice();
        let margin = cone.relative_margin(l);
        let inside = match cone.kind() {
            ConeKind::PositiveCone => margin >= CONE_EXIT_MARGIN,
            _ => cone.contains(l),
        };
        if !inside {
            return Err(Error::ConeExit { vertex: i, t });
        }
        min_margin = min_margin.min(margin);
        let f = eval_speed(speed, lambda).map_err(|_| Error::ConeExit { vertex: i, t })?;
        let g = speed.gradient(l).into_iter().fold(0.0_f64, f64::max);
        let mut b = h[i] * f;
        if g > 0.0 {
            b = b.min(h[i] * h[i] * f * f / g);
        }
        bound = bound.min(b);
        vel.push(nu / f);
    }
    Ok(Field { vel, bound, min_margin })
}

/// Stability bound at `m` before the `c_cfl` factor.
pub fn stability_bound(m: &Hypersurface, speed: &SpeedFunction) -> Result<f64> {
    Ok(velocity_field(m, speed, f64::NAN)?.bound)
}

fn displaced(m: &Hypersurface, vel: &[Point], h: f64) -> Hypersurface {
    m.with_vertices(m.vertices().iter().zip(vel).map(|(x, v)| x + v * h).collect())
}

/// One RK4 step from a precomputed first-stage field.
fn rk4(m: &Hypersurface, speed: &SpeedFunction, k1: &Field, dt: f64, t: f64) -> Result<Hypersurface> {
    let k2 = velocity_field(&displaced(m, &k1.vel, dt / 2.0), speed, t)?;
    let k3 = velocity_field(&displaced(m, &k2.vel, dt / 2.0), speed, t)?;
    let k4 = velocity_field(&displaced(m, &k3.vel, dt), speed, t)?;
    let next: Vec<Point> = (0..m.len())
        .map(|i| {
            m.vertices()[i] + (k1.vel[i] + (k2.vel[i] + k3.vel[i]) * 2.0 + k4.vel[i]) * (dt / 6.0)
        })
        .collect();
    if next.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFiniteState { t: t + dt });
    }
    let out = m.with_vertices(next);
    let q = out.min_element_quality();
    if !(q >= QUALITY_FLOOR) {
        return Err(Error::MeshDegeneracy(format!(
            "element quality {q:.3e} below {QUALITY_FLOOR} at t = {}",
            t + dt
        )));
    }
    Ok(out)
}

/// One RK4 step of size `dt`. The step is taken as given; callers that want
/// a stable step should consult [`stability_bound`]. The output is fully
/// validated, including embeddedness.
pub fn step(m: &Hypersurface, speed: &SpeedFunction, dt: f64) -> Result<Hypersurface> {
    positive("dt", dt)?;
    let k1 = velocity_field(m, speed, f64::NAN)?;
    let out = rk4(m, speed, &k1, dt, f64::NAN)?;
    out.validate().map_err(|e| Error::MeshDegeneracy(e.to_string()))?;
    Ok(out)
}

/// Integrates from `(t_from, m)` to `t_to` under `policy` without remeshing
/// or frame output.
pub(crate) fn advance(
    m: &Hypersurface,
    speed: &SpeedFunction,
    policy: StepPolicy,
    t_from: f64,
    t_to: f64,
) -> Result<Hypersurface> {
    let mut cur = m.clone();
    let mut t = t_from;
    while t < t_to {
        let k1 = velocity_field(&cur, speed, t)?;
        let mut h = policy.dt_for(k1.bound);
        let landing = t + h >= t_to - 1e-12 * t_to.abs().max(1.0);
        if landing {
            h = t_to - t;
        }
        cur = rk4(&cur, speed, &k1, h, t)?;
        t = if landing { t_to } else { t + h };
    }
    Ok(cur)
}

/// Tangential vertex redistribution that keeps vertices on the current
/// surface to second order.
fn redistribute(m: &Hypersurface) -> Result<Hypersurface> {
    const BETA: f64 = 0.5;
    let data = compute_curvatures(m)?;
    let v = m.vertices();
    let n = v.len();
    if m.dim() == 1 {
        let out = (0..n)
            .map(|i| {
                let mid = (v[(i + n - 1) % n] + v[(i + 1) % n]) / 2.0;
                let nu = data.normals[i];
                let tau = Point::new(-nu.y, nu.x, 0.0);
                let s = BETA * (mid - v[i]).dot(&tau);
                let k = data.principal[i].as_slice()[0];
                v[i] + tau * s - nu * (0.5 * k * s * s)
            })
            .collect();
        Ok(m.with_vertices(out))
    } else {
        let topo = m.topology();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let ring = topo.one_ring(i);
            let mid = ring.iter().map(|&j| v[j]).sum::<Point>() / ring.len() as f64;
            let nu = data.normals[i];
            let d = mid - v[i];
            let moved = v[i] + (d - nu * d.dot(&nu)) * BETA;
            let q = remesh::quadric_at(m, i)?;
            out.push(q.project(moved));
        }
        Ok(m.with_vertices(out))
    }
}

/// Evolves `m0` from `t0` to `config.t_end`.
///
/// Frames are emitted at `t0 + k·interval` and at `t_end`; steps are shortened
/// to land on those times exactly. With `stop_on_cone_exit = false`, a cone
/// exit ends the run early and is recorded as an event instead of an error.
/// Near-boundary warnings are logged at most once per frame interval.
pub fn evolve(m0: &Hypersurface, speed: &SpeedFunction, t0: f64, config: &FlowConfig) -> Result<Trajectory> {
    config.validate(t0)?;
    let interval = config.resolved_frame_interval();
    let mut traj = Trajectory::new_numeric(speed.clone(), config.step.nominal_dt(), config.step);
    traj.push_frame(t0, m0.clone())?;
    if config.tangential_redistribution {
        traj.push_event(t0, EventKind::TangentialRedistribution, "tangential redistribution active".into());
    }
    let mut m = m0.clone();
    let mut t = t0;
    let mut k = 1u64;
    let mut warned = false;
    let eps = 1e-12 * config.t_end.abs().max(1.0);
    while t < config.t_end - eps {
        let target = (t0 + k as f64 * interval).min(config.t_end);
        let k1 = match velocity_field(&m, speed, t) {
            Ok(f) => f,
            Err(e @ Error::ConeExit { .. }) if !config.stop_on_cone_exit => {
                traj.push_event(t, EventKind::ConeExit, e.to_string());
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        if k1.min_margin < CONE_WARNING_MARGIN && !warned {
            warned = true;
            traj.push_event(
                t,
                EventKind::NearConeBoundary,
                format!("relative cone margin {:.3e}", k1.min_margin),
            );
        }
        let mut h = config.step.dt_for(k1.bound);
        let landing = t + h >= target - eps;
        if landing {
            h = target - t;
        }
        m = match rk4(&m, speed, &k1, h, t) {
            Ok(next) => next,
            Err(e @ Error::ConeExit { .. }) if !config.stop_on_cone_exit => {
                traj.push_event(t, EventKind::ConeExit, e.to_string());
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        t = if landing { target } else { t + h };
        if config.tangential_redistribution {
            m = redistribute(&m)?;
        }
        if let Some(band) = &config.remesh {
            if !band.contains_all(&m) {
                let before = m.len();
                m = remesh(&m, band)?;
                traj.push_event(
                    t,
                    EventKind::Remesh,
                    format!("{before} -> {} vertices", m.len()),
                );
            }
        }
        if landing {
            m.check_embedded()
                .map_err(|e| Error::MeshDegeneracy(format!("t = {t}: {e}")))?;
            traj.push_frame(t, m.clone())?;
            k += 1;
            warned = false;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::shapes;

    fn radii(m: &Hypersurface) -> Vec<f64> {
        m.vertices().iter().map(|p| p.norm()).collect()
    }

    #[test]
    fn single_step_on_circle() {
        let c = shapes::circle(Point::zeros(), 1.0, 256).unwrap();
        let out = step(&c, &SpeedFunction::mean_curvature(1), 0.01).unwrap();
        for r in radii(&out) {
            assert!((r - 0.01f64.exp()).abs() < 1e-4, "{r}");
        }
    }

    #[test]
    fn single_step_on_icosphere() {
        let s = shapes::icosphere(Point::zeros(), 1.0, 3).unwrap();
        let out = step(&s, &SpeedFunction::mean_curvature(2), 0.01).unwrap();
        for r in radii(&out) {
            assert!((r - 0.005f64.exp()).abs() < 1e-3, "{r}");
        }
    }

    #[test]
    fn step_grows_volume() {
        let e = shapes::ellipse(Point::zeros(), 2.0, 1.0, 64).unwrap();
        for speed in [
            SpeedFunction::mean_curvature(1),
            SpeedFunction::mean_curvature_power(1, 0.5).unwrap(),
            SpeedFunction::mean_curvature_power(1, 2.0).unwrap(),
        ] {
            let dt = 0.2 * stability_bound(&e, &speed).unwrap();
            let out = step(&e, &speed, dt).unwrap();
            assert!(out.enclosed_volume() > e.enclosed_volume());
        }
    }

    #[test]
    fn step_rejects_nonconvex() {
        let sq = shapes::square(Point::zeros(), 2.0, 4).unwrap();
        let err = step(&sq, &SpeedFunction::mean_curvature(1), 1e-3).unwrap_err();
        assert!(matches!(err, Error::ConeExit { .. }), "{err}");
    }

    #[test]
    fn dimension_mismatch() {
        let c = shapes::circle(Point::zeros(), 1.0, 16).unwrap();
        let err = step(&c, &SpeedFunction::mean_curvature(2), 1e-3).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn cone_exit_can_be_an_event() {
        let sq = shapes::square(Point::zeros(), 2.0, 4).unwrap();
        let mut cfg = FlowConfig::new(StepPolicy::Fixed { dt: 1e-3 }, 0.1);
        cfg.stop_on_cone_exit = false;
        let traj = evolve(&sq, &SpeedFunction::mean_curvature(1), 0.0, &cfg).unwrap();
        assert_eq!(traj.frames().len(), 1);
        assert!(traj.events().iter().any(|e| e.kind == EventKind::ConeExit));
        cfg.stop_on_cone_exit = true;
        assert!(evolve(&sq, &SpeedFunction::mean_curvature(1), 0.0, &cfg).is_err());
    }

    #[test]
    fn evolve_circle_to_e() {
        let c = shapes::circle(Point::zeros(), 1.0, 128).unwrap();
        let traj = evolve(&c, &SpeedFunction::mean_curvature(1), 0.0, &FlowConfig::default()).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.t, 1.0);
        let mean = radii(&last.surface).iter().sum::<f64>() / 128.0;
        assert!((mean - 1f64.exp()).abs() / 1f64.exp() < 1e-6, "{mean}");
        // frames every 0.01
        assert_eq!(traj.frames().len(), 101);
        assert!((traj.frames()[37].t - 0.37).abs() < 1e-12);
    }

    #[test]
    fn rk4_order_on_circle() {
        // coarse polygon so that large steps stay stable
        let c = shapes::circle(Point::zeros(), 1.0, 16).unwrap();
        let speed = SpeedFunction::mean_curvature(1);
        let err = |dt: f64| {
            let out = advance(&c, &speed, StepPolicy::Fixed { dt }, 0.0, 1.0).unwrap();
            (out.vertices()[0].norm() - 1f64.exp()).abs()
        };
        let (e1, e2) = (err(0.05), err(0.025));
        assert!(e1 / e2 >= 3.5, "{e1} {e2}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = FlowConfig::default();
        cfg.step = StepPolicy::Cfl {
            c_cfl: 1.5,
            dt_max: 1e-3,
        };
        assert!(cfg.validate(0.0).is_err());
        cfg.step = StepPolicy::default();
        cfg.t_end = -1.0;
        assert!(cfg.validate(0.0).is_err());
        cfg.t_end = 1.0;
        cfg.remesh = Some(EdgeBand { min: 0.2, max: 0.1 });
        assert!(cfg.validate(0.0).is_err());
    }

    #[test]
    fn default_frame_interval() {
        let cfg = FlowConfig::new(StepPolicy::Fixed { dt: 3e-3 }, 1.0);
        assert!((cfg.resolved_frame_interval() - 9e-3).abs() < 1e-15);
        let cfg = FlowConfig::new(StepPolicy::Fixed { dt: 0.05 }, 1.0);
        assert_eq!(cfg.resolved_frame_interval(), 0.05);
    }
}
