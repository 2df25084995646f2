//! Enclosure queries and scalar shape functionals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{compute_curvatures, orient2d, Hypersurface, Point};
use crate::error::{Error, Result};

/// Relative width of the default `OnBoundary` band.
pub const BOUNDARY_TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Containment {
    Inside,
    Outside,
    OnBoundary,
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    };
    (a + ab * t - p).norm()
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection).
fn closest_on_triangle(p: Point, a: Point, b: Point, c: Point) -> Point {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

fn solid_angle(p: Point, a: Point, b: Point, c: Point) -> f64 {
    let (a, b, c) = (a - p, b - p, c - p);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * num.atan2(den)
}

impl Hypersurface {
    /// Unsigned distance from `p` to the curve or mesh.
    pub fn distance_to(&self, p: Point) -> f64 {
        let v = self.vertices();
        if self.dim() == 1 {
            let n = v.len();
            (0..n)
                .map(|i| point_segment_distance(p, v[i], v[(i + 1) % n]))
                .fold(f64::INFINITY, f64::min)
        } else {
            self.faces()
                .iter()
                .map(|f| (closest_on_triangle(p, v[f[0]], v[f[1]], v[f[2]]) - p).norm())
                .fold(f64::INFINITY, f64::min)
        }
    }

    /// Winding number of the curve around `p`, or the generalized winding
    /// number (solid angle / 4π) of the mesh.
    pub fn winding_number(&self, p: Point) -> f64 {
        let v = self.vertices();
        if self.dim() == 1 {
            let n = v.len();
            let mut w = 0i64;
            for i in 0..n {
                let (a, b) = (v[i], v[(i + 1) % n]);
                if a.y <= p.y {
                    if b.y > p.y && orient2d(a, b, p) > 0.0 {
                        w += 1;
                    }
                } else if b.y <= p.y && orient2d(a, b, p) < 0.0 {
                    w -= 1;
                }
            }
            w as f64
        } else {
            self.faces()
                .iter()
                .map(|f| solid_angle(p, v[f[0]], v[f[1]], v[f[2]]))
                .sum::<f64>()
                / (4.0 * PI)
        }
    }

    /// Default `OnBoundary` band: `10⁻⁹ ·` bounding-box diagonal.
    pub fn default_boundary_tol(&self) -> f64 {
        BOUNDARY_TOL_REL * self.bbox_diagonal()
    }

    /// Classify `p` against the enclosed domain.
    pub fn contains_point(&self, p: Point, tol: Option<f64>) -> Containment {
        let tol = tol.unwrap_or_else(|| self.default_boundary_tol());
        if self.distance_to(p) <= tol {
            Containment::OnBoundary
        } else if self.winding_number(p) > 0.5 {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Distance to the surface, positive inside and negative outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.distance_to(p);
        if self.winding_number(p) > 0.5 {
            d
        } else {
            -d
        }
    }

    /// Approximate Chebyshev center: the interior point farthest from the
    /// surface, by an axis-aligned grid search refined once around the best
    /// node. Returns the center and its distance to the surface.
    pub fn chebyshev_center(&self) -> Result<(Point, f64)> {
        let per_axis = if self.dim() == 1 { 33 } else { 17 };
        let (lo, hi) = self.bounding_box();
        let mut best = grid_search(self, lo, hi, per_axis)?;
        let mut cell = (hi - lo) / (per_axis - 1) as f64;
        // zoom in around the incumbent
        for _ in 0..4 {
            if let Ok(r) = grid_search(self, best.0 - 2.0 * cell, best.0 + 2.0 * cell, per_axis) {
                if r.1 >= best.1 {
                    best = r;
                }
            }
            cell *= 4.0 / (per_axis - 1) as f64;
        }
        Ok(best)
    }
}

fn grid_search(m: &Hypersurface, lo: Point, hi: Point, per_axis: usize) -> Result<(Point, f64)> {
    let planar = m.dim() == 1;
    let nz = if planar { 1 } else { per_axis };
    let step = (hi - lo) / (per_axis - 1) as f64;
    let node = |idx: usize| {
        let i = idx % per_axis;
        let j = (idx / per_axis) % per_axis;
        let k = idx / (per_axis * per_axis);
        Point::new(
            lo.x + step.x * i as f64,
            lo.y + step.y * j as f64,
            if planar { 0.0 } else { lo.z + step.z * k as f64 },
        )
    };
    let mut scored: Vec<(usize, f64)> = (0..per_axis * per_axis * nz)
        .into_par_iter()
        .map(|idx| (idx, m.distance_to(node(idx))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .find(|&(idx, _)| m.winding_number(node(idx)) > 0.5)
        .map(|(idx, d)| (node(idx), d))
        .ok_or_else(|| Error::InvalidSurface("no interior grid node found".into()))
}

/// Inner and outer radius about a reference center.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RadiiReport {
    pub center: [f64; 3],
    pub rho_minus: f64,
    pub rho_plus: f64,
}

impl RadiiReport {
    /// `ρ₋/ρ₊`, equal to 1 on a round sphere.
    pub fn ratio(&self) -> f64 {
        self.rho_minus / self.rho_plus
    }
}

/// `ρ₋` (distance from the center to the surface) and `ρ₊` (largest vertex
/// distance) about `center`, or about the approximate Chebyshev center when
/// none is given.
pub fn inner_outer_radii(m: &Hypersurface, center: Option<Point>) -> Result<RadiiReport> {
    let (c, rho_minus) = match center {
        Some(c) => {
            require_inside(m, c)?;
            (c, m.distance_to(c))
        }
        None => m.chebyshev_center()?,
    };
    let rho_plus = m.vertices().iter().map(|v| (v - c).norm()).fold(0.0, f64::max);
    Ok(RadiiReport {
        center: c.into(),
        rho_minus,
        rho_plus,
    })
}

pub(crate) fn require_inside(m: &Hypersurface, p: Point) -> Result<()> {
    if m.contains_point(p, None) == Containment::Inside {
        Ok(())
    } else {
        Err(Error::CenterOutside { point: p.into() })
    }
}

/// `min ⟨x − o, ν⟩ / |x − o|` over vertices.
pub fn starshapedness_ratio(m: &Hypersurface, origin: Point) -> Result<f64> {
    require_inside(m, origin)?;
    let data = compute_curvatures(m)?;
    Ok(m
        .vertices()
        .iter()
        .zip(&data.normals)
        .map(|(x, nu)| {
            let d = x - origin;
            d.dot(nu) / d.norm()
        })
        .fold(f64::INFINITY, f64::min))
}

/// `min λ / max λ` over all vertices and principal directions.
pub fn curvature_pinching_ratio(m: &Hypersurface) -> Result<f64> {
    let data = compute_curvatures(m)?;
    for (i, l) in data.principal.iter().enumerate() {
        if l.min() <= 0.0 {
            return Err(Error::NonConvexInput {
                vertex: i,
                value: l.min(),
            });
        }
    }
    Ok(data.min_curvature() / data.max_curvature())
}

/// `max ⟨x, V⟩` over vertices.
pub fn support_max(m: &Hypersurface, direction: &Point) -> f64 {
    m.vertices()
        .iter()
        .map(|x| x.dot(direction))
        .fold(f64::NEG_INFINITY, f64::max)
}
