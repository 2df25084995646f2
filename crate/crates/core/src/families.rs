//! Analytic one-parameter families of hypersurfaces.
//!
//! Families produce a frame at any requested time, which lets audits refine
//! touch times and post-touch checks without re-integrating anything. The
//! sphere families are exact flow solutions for suitable speeds; the ellipse
//! families with distinct axis rates are not solutions of any flow in the
//! catalog and serve as negative controls.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hypersurface::{shapes, Hypersurface, Point};

/// Anything that can produce the hypersurface at time `t`.
pub trait FrameSource: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn frame_at(&self, t: f64) -> Result<Hypersurface>;
    fn describe(&self) -> String;
}

/// Mesh resolution of a family: polygon vertex count (`n = 1`) or icosphere
/// subdivision level (`n = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Polygon(usize),
    Subdivisions(usize),
}

impl Resolution {
    pub fn dim(&self) -> usize {
        match self {
            Resolution::Polygon(_) => 1,
            Resolution::Subdivisions(_) => 2,
        }
    }
}

type RadiusLaw = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Round spheres `|x − center| = r(t)`.
#[derive(Clone)]
pub struct SphereFamily {
    center: Point,
    resolution: Resolution,
    law: RadiusLaw,
    description: String,
}

impl fmt::Debug for SphereFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereFamily")
            .field("center", &self.center)
            .field("resolution", &self.resolution)
            .field("law", &self.description)
            .finish()
    }
}

impl SphereFamily {
    pub fn new(
        center: Point,
        resolution: Resolution,
        description: impl Into<String>,
        law: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            center,
            resolution,
            law: Arc::new(law),
            description: description.into(),
        }
    }

    /// `r(t) = r0·e^{rate·t}`; with `rate = 1/n` and `r0 = 1` this is the
    /// exact solution for `F = H`.
    pub fn exponential(center: Point, resolution: Resolution, r0: f64, rate: f64) -> Self {
        Self::new(
            center,
            resolution,
            format!("r(t) = {r0}·exp({rate}·t)"),
            move |t| r0 * (rate * t).exp(),
        )
    }

    pub fn radius(&self, t: f64) -> f64 {
        (self.law)(t)
    }

    pub fn center(&self) -> Point {
        self.center
    }
}

impl FrameSource for SphereFamily {
    fn dim(&self) -> usize {
        self.resolution.dim()
    }

    fn frame_at(&self, t: f64) -> Result<Hypersurface> {
        let r = self.radius(t);
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::FrameUnavailable {
                t,
                reason: format!("radius {r} is not positive"),
            });
        }
        match self.resolution {
            Resolution::Polygon(n) => shapes::circle(self.center, r, n),
            Resolution::Subdivisions(k) => shapes::icosphere(self.center, r, k),
        }
    }

    fn describe(&self) -> String {
        format!("sphere family {}", self.description)
    }
}

/// Ellipses (`n = 1`) or ellipsoids (`n = 2`) with semi-axes
/// `aᵢ(t) = aᵢ(0)·e^{rateᵢ·t}`.
#[derive(Debug, Clone)]
pub struct EllipseFamily {
    center: Point,
    resolution: Resolution,
    axes0: [f64; 3],
    rates: [f64; 3],
}

impl EllipseFamily {
    pub fn new(center: Point, resolution: Resolution, axes0: [f64; 3], rates: [f64; 3]) -> Self {
        Self {
            center,
            resolution,
            axes0,
            rates,
        }
    }

    /// The planar family with axes `(e^t, e^{2t})`.
    pub fn distinct_rates(resolution_vertices: usize) -> Self {
        Self::new(
            Point::zeros(),
            Resolution::Polygon(resolution_vertices),
            [1.0, 1.0, 1.0],
            [1.0, 2.0, 0.0],
        )
    }

    pub fn axes(&self, t: f64) -> [f64; 3] {
        [0, 1, 2].map(|i| self.axes0[i] * (self.rates[i] * t).exp())
    }
}

impl FrameSource for EllipseFamily {
    fn dim(&self) -> usize {
        self.resolution.dim()
    }

    fn frame_at(&self, t: f64) -> Result<Hypersurface> {
        let a = self.axes(t);
        match self.resolution {
            Resolution::Polygon(n) => shapes::ellipse(self.center, a[0], a[1], n),
            Resolution::Subdivisions(k) => shapes::ellipsoid(self.center, a, k),
        }
    }

    fn describe(&self) -> String {
        format!(
            "ellipse family axes {:?}·exp({:?}·t)",
            &self.axes0[..self.dim() + 1],
            &self.rates[..self.dim() + 1]
        )
    }
}

/// Equally spaced times `t0, t0 + dt, …, t1` (last time forced to `t1`).
pub fn time_grid(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| {
            if i + 1 == count {
                t1
            } else {
                t0 + (t1 - t0) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}
