//! Configuration-driven runs.
//!
//! A run is described by a TOML file whose keys can be overridden with
//! `--set section.key=value`. Unknown keys are rejected. Every run writes
//! into its output directory:
//!
//! * `resolved_config.toml`: the configuration with defaults filled in,
//! * `run.log`: a deterministic text log,
//! * CSV time series with a `*.schema.json` column description,
//! * JSON reports carrying `schema_version`,
//! * `frames/` with one mesh file per frame and `index.json` (simulate).
//!
//! Exit codes: 0 pass, 1 usage or configuration error, 2 audit failure,
//! 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{time_grid, EllipseFamily, FrameSource, Resolution, SphereFamily};
use crate::flow::{evolve, EdgeBand, FlowConfig, StepPolicy, Trajectory};
use crate::hypersurface::{compute_curvatures, io, shapes, Hypersurface, Point};
use crate::reflection::{monitor_reflection, sample_directions, Hyperplane, ReflectionTolerances};
use crate::rigidity::{rigidity_audit, AuditOptions};
use crate::speeds::{check_admissibility, homogeneity_degree, CurvatureVector, SamplingPlan, SpeedFunction};
use crate::sphere_ode::{initial_time_estimate, integrate_radius, is_ancient};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_AUDIT_FAIL: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Simulate,
    SphereOde,
    ClassifySpeed,
    ReflectAudit,
    RigidityAudit,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SphereOde => "sphere-ode",
            Command::ClassifySpeed => "classify-speed",
            Command::ReflectAudit => "reflect-audit",
            Command::RigidityAudit => "rigidity-audit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedSection {
    /// `k`, `H`, `k^alpha`, `H^alpha`, `K`, `sigma2^(1/2)` or `H+K`.
    pub name: String,
    pub alpha: Option<f64>,
    /// Dimension `n` of the hypersurface (1: curves, 2: surfaces).
    pub dim: usize,
}

impl Default for SpeedSection {
    fn default() -> Self {
        Self {
            name: "k".into(),
            alpha: None,
            dim: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    #[default]
    Circle,
    Ellipse,
    Square,
    Icosphere,
    Ellipsoid,
    Mesh,
    SphereFamily,
    EllipseFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub shape: Shape,
    pub center: [f64; 3],
    pub radius: f64,
    pub axes: [f64; 3],
    pub side: f64,
    /// Polygon vertex count for curves.
    pub vertices: usize,
    /// Icosphere subdivision level for surfaces.
    pub subdivisions: usize,
    pub path: Option<PathBuf>,
    /// Exponential rates of the family radius or axes.
    pub rates: [f64; 3],
    pub family_t0: f64,
    pub family_t1: f64,
    pub family_frames: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            shape: Shape::Circle,
            center: [0.0; 3],
            radius: 1.0,
            axes: [2.0, 1.0, 1.0],
            side: 2.0,
            vertices: 256,
            subdivisions: 4,
            path: None,
            rates: [1.0, 2.0, 0.0],
            family_t0: -6.0,
            family_t1: 0.0,
            family_frames: 601,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Fixed,
    #[default]
    Cfl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub t0: f64,
    pub t_end: f64,
    pub policy: PolicyKind,
    /// Fixed step, or the largest step under the CFL policy.
    pub dt: f64,
    pub c_cfl: f64,
    pub frame_interval: Option<f64>,
    pub remesh_min: Option<f64>,
    pub remesh_max: Option<f64>,
    pub stop_on_cone_exit: bool,
    pub tangential_redistribution: bool,
    pub write_frames: bool,
}

impl Default for FlowSection {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 1.0,
            policy: PolicyKind::Cfl,
            dt: 1e-3,
            c_cfl: 0.2,
            frame_interval: None,
            remesh_min: None,
            remesh_max: None,
            stop_on_cone_exit: true,
            tangential_redistribution: false,
            write_frames: true,
        }
    }
}

impl FlowSection {
    pub fn to_flow_config(&self) -> Result<FlowConfig> {
        let step = match self.policy {
            PolicyKind::Fixed => StepPolicy::Fixed { dt: self.dt },
            PolicyKind::Cfl => StepPolicy::Cfl {
                c_cfl: self.c_cfl,
                dt_max: self.dt,
            },
        };
        let remesh = match (self.remesh_min, self.remesh_max) {
            (Some(min), Some(max)) => Some(EdgeBand { min, max }),
            (None, None) => None,
            _ => {
                return Err(Error::validation(
                    "flow.remesh_min",
                    "remesh_min and remesh_max must be given together",
                ))
            }
        };
        let cfg = FlowConfig {
            step,
            t_end: self.t_end,
            frame_interval: self.frame_interval,
            remesh,
            stop_on_cone_exit: self.stop_on_cone_exit,
            tangential_redistribution: self.tangential_redistribution,
        };
        cfg.validate(self.t0).map_err(|e| match e {
            Error::Validation { field, message } if field == "flow.dt_max" => Error::validation("flow.dt", message),
            other => other,
        })?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereOdeSection {
    pub r0: f64,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

impl Default for SphereOdeSection {
    fn default() -> Self {
        Self {
            r0: 1.0,
            t0: 0.0,
            t1: 1.0,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneSpec {
    pub normal: [f64; 3],
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub directions: usize,
    pub c_schedule: Vec<f64>,
    pub y_inf: [f64; 3],
    pub planes: Vec<PlaneSpec>,
    /// Start of reflection monitoring; defaults to the first frame.
    pub t_start: Option<f64>,
    pub angle_tol: f64,
    pub monitor_frames: usize,
    pub symmetry_frames: usize,
    pub symmetry_factor: f64,
    /// Random off-diagonal samples per magnitude in classify-speed.
    pub samples_per_magnitude: usize,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            directions: 16,
            c_schedule: vec![0.4, 0.2, 0.1, 0.05],
            y_inf: [0.0; 3],
            planes: vec![PlaneSpec {
                normal: [1.0, 0.0, 0.0],
                offset: 0.2,
            }],
            t_start: None,
            angle_tol: 1e-3,
            monitor_frames: 32,
            symmetry_frames: 32,
            symmetry_factor: 5.0,
            samples_per_magnitude: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub speed: SpeedSection,
    pub geometry: GeometrySection,
    pub flow: FlowSection,
    pub sphere_ode: SphereOdeSection,
    pub audit: AuditSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Simulate,
            seed: 0,
            output_dir: PathBuf::from("expflow-out"),
            speed: SpeedSection::default(),
            geometry: GeometrySection::default(),
            flow: FlowSection::default(),
            sphere_ode: SphereOdeSection::default(),
            audit: AuditSection::default(),
        }
    }
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::Validation { field, message } if !field.contains('.') => Error::Validation {
            field: format!("{section}.{field}"),
            message,
        },
        other => other,
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn speed_function(&self) -> Result<SpeedFunction> {
        SpeedFunction::from_name(&self.speed.name, self.speed.dim, self.speed.alpha).map_err(|e| in_section("speed", e))
    }

    fn geometry_dim(&self) -> usize {
        match self.geometry.shape {
            Shape::Circle | Shape::Ellipse | Shape::Square => 1,
            Shape::Icosphere | Shape::Ellipsoid => 2,
            Shape::Mesh => match &self.geometry.path {
                Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) => 2,
                _ => 1,
            },
            Shape::SphereFamily | Shape::EllipseFamily => self.speed.dim,
        }
    }

    fn is_family(&self) -> bool {
        matches!(self.geometry.shape, Shape::SphereFamily | Shape::EllipseFamily)
    }

    /// Range and existence checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        self.speed_function()?;
        let g = &self.geometry;
        match g.shape {
            Shape::Circle | Shape::Icosphere | Shape::SphereFamily => positive("geometry.radius", g.radius)?,
            Shape::Ellipse | Shape::Ellipsoid | Shape::EllipseFamily => {
                for a in &g.axes[..self.geometry_dim() + 1] {
                    positive("geometry.axes", *a)?;
                }
            }
            Shape::Square => positive("geometry.side", g.side)?,
            Shape::Mesh => match &g.path {
                None => return Err(Error::validation("geometry.path", "shape `mesh` needs a path")),
                Some(p) if !p.is_file() => {
                    return Err(Error::validation(
                        "geometry.path",
                        format!("mesh file {} does not exist", p.display()),
                    ))
                }
                _ => {}
            },
        }
        if g.vertices < 3 {
            return Err(Error::validation("geometry.vertices", "need at least 3"));
        }
        if g.subdivisions > 7 {
            return Err(Error::validation("geometry.subdivisions", "at most 7"));
        }
        if self.geometry_dim() != self.speed.dim {
            return Err(Error::validation(
                "speed.dim",
                format!(
                    "speed is for n = {} but the geometry has n = {}",
                    self.speed.dim,
                    self.geometry_dim()
                ),
            ));
        }
        if self.is_family() && !(g.family_t1 > g.family_t0 && g.family_frames >= 3) {
            return Err(Error::validation(
                "geometry.family_frames",
                "families need family_t1 > family_t0 and at least 3 frames",
            ));
        }
        match self.command {
            Command::Simulate if self.is_family() => {
                return Err(Error::validation("geometry.shape", "simulate needs an initial shape, not a family"))
            }
            Command::Simulate | Command::ReflectAudit | Command::RigidityAudit if !self.is_family() => {
                self.flow.to_flow_config()?;
            }
            _ => {}
        }
        let s = &self.sphere_ode;
        positive("sphere_ode.r0", s.r0)?;
        positive("sphere_ode.dt", s.dt)?;
        if !(s.t1 > s.t0) {
            return Err(Error::validation("sphere_ode.t1", "must exceed sphere_ode.t0"));
        }
        let a = &self.audit;
        if a.directions == 0 {
            return Err(Error::validation("audit.directions", "must be positive"));
        }
        if a.c_schedule.is_empty() || a.c_schedule.iter().any(|&c| !(c > 0.0)) || a.c_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::validation(
                "audit.c_schedule",
                "must be a non-empty, positive, strictly decreasing list",
            ));
        }
        for p in &a.planes {
            Hyperplane::from_direction(Point::from(p.normal), p.offset).map_err(|e| in_section("audit.planes", e))?;
        }
        positive("audit.angle_tol", a.angle_tol)?;
        positive("audit.symmetry_factor", a.symmetry_factor)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{raw}` is not of the form key.path=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("override `{raw}` has an empty key segment")));
    }
    let text = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()));
    Ok((path, parsed))
}

fn apply_override(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("`{p}` is not a table")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Parses config text (possibly empty), applies `key.path=value` overrides
/// and validates the result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    for raw in overrides {
        let (path, value) = parse_override(raw)?;
        apply_override(&mut table, &path, value)?;
    }
    let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    parse_config(&text, overrides)
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Validation { .. } | Error::Io { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Lines printed to standard output.
    pub summary: Vec<String>,
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(".lock");
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::Io {
                path: path.clone(),
                message: format!("output directory is locked by another run ({e})"),
            })?;
        Ok(Self(path))
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

struct Output {
    dir: PathBuf,
    log: String,
}

impl Output {
    fn log(&mut self, line: impl AsRef<str>) {
        self.log.push_str(line.as_ref());
        self.log.push('\n');
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(path, e))
    }

    fn write_json<T: Serialize>(&self, name: &str, report: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Versioned<'a, T> {
            schema_version: u32,
            #[serde(flatten)]
            report: &'a T,
        }
        let text = serde_json::to_string_pretty(&Versioned {
            schema_version: SCHEMA_VERSION,
            report,
        })
        .map_err(|e| Error::Parse(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    fn write_csv(&self, name: &str, columns: &[(&str, &str)], rows: &[Vec<f64>]) -> Result<()> {
        let mut s = columns.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
        s.push('\n');
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        self.write(name, &s)?;
        let schema = serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "file": name,
            "columns": columns
                .iter()
                .map(|(n, d)| serde_json::json!({ "name": n, "description": d }))
                .collect::<Vec<_>>(),
        });
        self.write(
            &format!("{}.schema.json", name.trim_end_matches(".csv")),
            &(serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"),
        )
    }
}

fn initial_surface(cfg: &RunConfig) -> Result<Hypersurface> {
    let g = &cfg.geometry;
    let c = Point::from(g.center);
    match g.shape {
        Shape::Circle => shapes::circle(c, g.radius, g.vertices),
        Shape::Ellipse => shapes::ellipse(c, g.axes[0], g.axes[1], g.vertices),
        Shape::Square => shapes::square(c, g.side, g.vertices.div_ceil(4)),
        Shape::Icosphere => shapes::icosphere(c, g.radius, g.subdivisions),
        Shape::Ellipsoid => shapes::ellipsoid(c, g.axes, g.subdivisions),
        Shape::Mesh => io::read(g.path.as_deref().expect("validated")),
        Shape::SphereFamily | Shape::EllipseFamily => unreachable!("families are not initial surfaces"),
    }
}

fn family(cfg: &RunConfig) -> Arc<dyn FrameSource> {
    let g = &cfg.geometry;
    let res = if cfg.speed.dim == 1 {
        Resolution::Polygon(g.vertices)
    } else {
        Resolution::Subdivisions(g.subdivisions)
    };
    let c = Point::from(g.center);
    match g.shape {
        Shape::SphereFamily => Arc::new(SphereFamily::exponential(c, res, g.radius, g.rates[0])),
        _ => Arc::new(EllipseFamily::new(c, res, g.axes, g.rates)),
    }
}

/// Frames from the configured family, or from evolving the configured shape.
fn trajectory(cfg: &RunConfig, speed: &SpeedFunction, out: &mut Output) -> Result<Trajectory> {
    if cfg.is_family() {
        let src = family(cfg);
        out.log(format!("trajectory: {}", src.describe()));
        let g = &cfg.geometry;
        return Trajectory::from_family(src, &time_grid(g.family_t0, g.family_t1, g.family_frames));
    }
    let m0 = initial_surface(cfg)?;
    let flow = cfg.flow.to_flow_config()?;
    out.log(format!(
        "evolve {} vertices under {} from t = {} to {}",
        m0.len(),
        speed.name(),
        cfg.flow.t0,
        flow.t_end
    ));
    let traj = evolve(&m0, speed, cfg.flow.t0, &flow)?;
    for e in traj.events() {
        out.log(format!("event t={} {:?}: {}", e.t, e.kind, e.message));
    }
    Ok(traj)
}

const DIAGNOSTIC_COLUMNS: [(&str, &str); 7] = [
    ("t", "frame time"),
    ("vertices", "vertex count"),
    ("volume", "enclosed area (n = 1) or volume (n = 2)"),
    ("rho_minus", "distance from the reference center to the surface"),
    ("rho_plus", "largest vertex distance from the reference center"),
    ("min_curvature", "smallest principal curvature over vertices"),
    ("max_curvature", "largest principal curvature over vertices"),
];

fn diagnostics_row(t: f64, m: &Hypersurface) -> Result<Vec<f64>> {
    // Chebyshev center for curves, vertex centroid for surfaces
    let center = if m.dim() == 1 {
        m.chebyshev_center()?.0
    } else {
        m.vertex_centroid()
    };
    let r = crate::hypersurface::inner_outer_radii(m, Some(center))?;
    let k = compute_curvatures(m)?;
    Ok(vec![
        t,
        m.len() as f64,
        m.enclosed_volume(),
        r.rho_minus,
        r.rho_plus,
        k.min_curvature(),
        k.max_curvature(),
    ])
}

fn run_simulate(cfg: &RunConfig, out: &mut Output) -> Result<RunOutcome> {
    let speed = cfg.speed_function()?;
    let traj = trajectory(cfg, &speed, out)?;
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        traj.frames()
            .par_iter()
            .map(|f| diagnostics_row(f.t, &f.surface))
            .collect::<Result<_>>()?
    };
    out.write_csv("diagnostics.csv", &DIAGNOSTIC_COLUMNS, &rows)?;
    if cfg.flow.write_frames {
        let dir = out.dir.join("frames");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let ext = if cfg.speed.dim == 1 { "txt" } else { "obj" };
        let mut index = Vec::new();
        let mut prev = f64::NEG_INFINITY;
        for (i, f) in traj.frames().iter().enumerate() {
            let name = format!("frame_{i:05}.{ext}");
            io::write(&f.surface, &dir.join(&name))?;
            let events: Vec<_> = traj
                .events()
                .iter()
                .filter(|e| e.t > prev && e.t <= f.t)
                .collect();
            index.push(serde_json::json!({ "index": i, "t": f.t, "file": name, "events": events }));
            prev = f.t;
        }
        let trailing: Vec<_> = traj.events().iter().filter(|e| e.t > prev).collect();
        let text = serde_json::to_string_pretty(&serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "frames": index,
            "trailing_events": trailing,
        }))
        .expect("index serializes");
        fs::write(dir.join("index.json"), text + "\n").map_err(|e| Error::io(dir.join("index.json"), e))?;
    }
    let last = traj.last().expect("evolve emits the initial frame");
    #[derive(Serialize)]
    struct SimulateReport<'a> {
        speed: &'a str,
        frames: usize,
        t_final: f64,
        final_volume: f64,
        events: &'a [crate::flow::FlowEvent],
    }
    out.write_json(
        "simulate_report.json",
        &SimulateReport {
            speed: speed.name(),
            frames: traj.len(),
            t_final: last.t,
            final_volume: last.surface.enclosed_volume(),
            events: traj.events(),
        },
    )?;
    let line = format!(
        "simulate: {} frames, t = {} .. {}, final volume {:.6}",
        traj.len(),
        traj.t0()?,
        last.t,
        last.surface.enclosed_volume()
    );
    out.log(&line);
    Ok(RunOutcome {
        exit_code: EXIT_PASS,
        summary: vec![line],
    })
}

fn run_sphere_ode(cfg: &RunConfig, out: &mut Output) -> Result<RunOutcome> {
    let speed = cfg.speed_function()?;
    let s = &cfg.sphere_ode;
    let flow = integrate_radius(&speed, s.r0, s.t0, s.t1, s.dt)?;
    let rows: Vec<Vec<f64>> = flow.samples.iter().map(|&(t, r)| vec![t, r]).collect();
    out.write_csv(
        "sphere_ode.csv",
        &[("t", "time"), ("r", "sphere radius")],
        &rows,
    )?;
    let birth = initial_time_estimate(&speed, s.r0, s.t0)?;
    #[derive(Serialize)]
    struct OdeReport<'a> {
        speed: &'a str,
        r0: f64,
        t0: f64,
        t1: f64,
        final_radius: f64,
        #[serde(serialize_with = "crate::sphere_ode::serialize_time")]
        birth_time: f64,
    }
    out.write_json(
        "sphere_ode_report.json",
        &OdeReport {
            speed: speed.name(),
            r0: s.r0,
            t0: s.t0,
            t1: s.t1,
            final_radius: flow.final_radius(),
            birth_time: birth,
        },
    )?;
    let line = format!(
        "sphere-ode: r({}) = {:.9} under {} (birth time {})",
        s.t1,
        flow.final_radius(),
        speed.name(),
        birth
    );
    out.log(&line);
    Ok(RunOutcome {
        exit_code: EXIT_PASS,
        summary: vec![line],
    })
}

fn run_classify(cfg: &RunConfig, out: &mut Output) -> Result<RunOutcome> {
    let speed = cfg.speed_function()?;
    let plan = SamplingPlan {
        off_diagonal_per_magnitude: cfg.audit.samples_per_magnitude,
        ..SamplingPlan::with_seed(cfg.seed)
    };
    let admissibility = check_admissibility(&speed, &plan)?;
    let probe = CurvatureVector::new(&match cfg.speed.dim {
        1 => vec![1.0],
        _ => vec![1.0, 0.7],
    })?;
    let measured = homogeneity_degree(&speed, &probe, &[0.5, 2.0, 4.0])?;
    let ancient = is_ancient(&speed)?;
    #[derive(Serialize)]
    struct Classification<'a> {
        seed: u64,
        admissibility: &'a crate::speeds::AdmissibilityReport,
        measured_homogeneity: Option<f64>,
        ancientness: &'a crate::sphere_ode::AncientnessVerdict,
    }
    out.write_json(
        "classification.json",
        &Classification {
            seed: cfg.seed,
            admissibility: &admissibility,
            measured_homogeneity: measured,
            ancientness: &ancient,
        },
    )?;
    let line = format!(
        "classify-speed: {} admissibility {}, spheres {:?} (decided by {})",
        speed.name(),
        admissibility.summary,
        ancient.verdict,
        ancient.decided_by
    );
    out.log(&line);
    Ok(RunOutcome {
        exit_code: EXIT_PASS,
        summary: vec![line],
    })
}

fn run_reflect(cfg: &RunConfig, out: &mut Output) -> Result<RunOutcome> {
    let speed = cfg.speed_function()?;
    let traj = trajectory(cfg, &speed, out)?;
    let tol = ReflectionTolerances {
        angle: cfg.audit.angle_tol,
        ..ReflectionTolerances::default()
    };
    let t_start = cfg.audit.t_start.unwrap_or(traj.t0()?);
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    let mut all_pass = true;
    for p in &cfg.audit.planes {
        let plane = Hyperplane::from_direction(Point::from(p.normal), p.offset)?;
        let (pass, record) = match monitor_reflection(&traj, &plane, t_start, &tol) {
            Ok(rep) => {
                let pass = rep.all_strict();
                (pass, serde_json::to_value(&rep).expect("report serializes"))
            }
            Err(e @ Error::StartNotStrict { .. }) => (
                false,
                serde_json::json!({ "plane": plane, "t_start": t_start, "error": e.to_string() }),
            ),
            Err(e) => return Err(e),
        };
        all_pass &= pass;
        let line = format!(
            "{} plane V={:?} c={} over {} frames",
            if pass { "PASS" } else { "FAIL" },
            p.normal,
            p.offset,
            traj.len()
        );
        out.log(&line);
        summary.push(line);
        reports.push(record);
    }
    out.write_json("reflect_report.json", &serde_json::json!({ "planes": reports }))?;
    Ok(RunOutcome {
        exit_code: if all_pass { EXIT_PASS } else { EXIT_AUDIT_FAIL },
        summary,
    })
}

fn run_rigidity(cfg: &RunConfig, out: &mut Output) -> Result<RunOutcome> {
    let speed = cfg.speed_function()?;
    let traj = trajectory(cfg, &speed, out)?;
    let mut opts = AuditOptions::new(
        sample_directions(cfg.speed.dim, cfg.audit.directions),
        cfg.audit.c_schedule.clone(),
    );
    opts.monitor_frames = cfg.audit.monitor_frames;
    opts.symmetry_frames = cfg.audit.symmetry_frames;
    opts.symmetry_factor = cfg.audit.symmetry_factor;
    opts.tolerances.angle = cfg.audit.angle_tol;
    let report = rigidity_audit(&traj, Some(&speed), Point::from(cfg.audit.y_inf), &opts)?;
    out.write_json("rigidity_report.json", &report)?;
    for n in &report.narrative {
        out.log(n);
    }
    let line = format!(
        "{} rigidity audit: {}",
        if report.pass { "PASS" } else { "FAIL" },
        report.narrative.join("; ")
    );
    out.log(&line);
    Ok(RunOutcome {
        exit_code: if report.pass { EXIT_PASS } else { EXIT_AUDIT_FAIL },
        summary: vec![line],
    })
}

/// Executes a validated configuration, writing artifacts into
/// `cfg.output_dir`. Module errors are returned; map them with
/// [`exit_code_for`].
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let _lock = Lock::acquire(&dir)?;
    let mut out = Output {
        dir: dir.clone(),
        log: String::new(),
    };
    out.write("resolved_config.toml", &cfg.to_toml())?;
    out.log(format!("command {}", cfg.command.as_str()));
    out.log(format!("seed {}", cfg.seed));
    let result = match cfg.command {
        Command::Simulate => run_simulate(cfg, &mut out),
        Command::SphereOde => run_sphere_ode(cfg, &mut out),
        Command::ClassifySpeed => run_classify(cfg, &mut out),
        Command::ReflectAudit => run_reflect(cfg, &mut out),
        Command::RigidityAudit => run_rigidity(cfg, &mut out),
    };
    match &result {
        Ok(o) => {
            let _ = writeln!(out.log, "exit {}", o.exit_code);
        }
        Err(e) => {
            let _ = writeln!(out.log, "error: {e}\nexit {}", exit_code_for(e));
        }
    }
    out.write("run.log", &out.log)?;
    result
}

#[derive(Debug, Parser)]
#[command(name = "expflow", version, about = "Expansive curvature flow runs and audits")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set flow.t_end=2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<CliCommand>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CliCommand {
    /// Evolve a shape and write frames and diagnostics.
    Simulate,
    /// Integrate the sphere radius equation.
    SphereOde,
    /// Sampled admissibility, homogeneity and ancientness of a speed.
    ClassifySpeed,
    /// Monitor strict reflection across configured planes.
    ReflectAudit,
    /// Moving-plane rigidity audit.
    RigidityAudit,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Simulate => Command::Simulate,
            CliCommand::SphereOde => Command::SphereOde,
            CliCommand::ClassifySpeed => Command::ClassifySpeed,
            CliCommand::ReflectAudit => Command::ReflectAudit,
            CliCommand::RigidityAudit => Command::RigidityAudit,
        }
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let mut overrides = cli.overrides.clone();
    if let Some(c) = cli.command {
        overrides.push(format!("command=\"{}\"", Command::from(c).as_str()));
    }
    if let Some(o) = &cli.output {
        overrides.push(format!("output_dir={}", toml::Value::String(o.display().to_string())));
    }
    let cfg = match load_config(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_simulate_config() {
        let cfg = parse_config(
            "command = \"simulate\"\n[speed]\nname = \"k\"\n[geometry]\nshape = \"circle\"\nradius = 1.0\n[flow]\nt_end = 1.0\n",
            &[],
        )
        .unwrap();
        assert_eq!(cfg.flow.c_cfl, 0.2);
        let echoed = cfg.to_toml();
        assert!(echoed.contains("c_cfl = 0.2"), "{echoed}");
        assert_eq!(parse_config(&echoed, &[]).unwrap(), cfg);
    }

    #[test]
    fn negative_alpha_rejected() {
        let err = parse_config("[speed]\nname = \"H^alpha\"\nalpha = -1.0\n", &[]).unwrap_err();
        match err {
            Error::Validation { field, .. } => assert_eq!(field, "speed.alpha"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_mesh_file_named() {
        let err = parse_config("[geometry]\nshape = \"mesh\"\npath = \"/nonexistent/m.txt\"\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "geometry.path"));
        assert!(err.to_string().contains("/nonexistent/m.txt"));
    }

    #[test]
    fn unknown_keys_rejected_with_context() {
        let err = parse_config("[flow]\nt_ned = 1.0\n", &[]).unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
        assert!(err.to_string().contains("t_ned"), "{err}");
        let err = parse_config("[flow]\nt_end = \n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let cfg = parse_config(
            "[flow]\nt_end = 1.0\n",
            &["flow.t_end=2.5".into(), "speed.name=k^alpha".into(), "speed.alpha=2".into()],
        )
        .unwrap();
        assert_eq!(cfg.flow.t_end, 2.5);
        assert_eq!(cfg.speed.alpha, Some(2.0));
        assert_eq!(cfg.speed.name, "k^alpha");
    }

    #[test]
    fn dimension_consistency() {
        let err = parse_config("[geometry]\nshape = \"icosphere\"\n", &[]).unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "speed.dim"));
    }
}
