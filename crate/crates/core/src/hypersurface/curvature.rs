//! Per-vertex normals and principal curvatures.
//!
//! Curves use the circle through three consecutive vertices, which is exact
//! for polygons inscribed in a circle. Surfaces fit a height function
//! `z = ax² + bxy + cy² + dx + ey` over the 2-ring in a local frame and read
//! the principal curvatures off the fitted shape operator.

use nalgebra::{Matrix5, Vector5};
use rayon::prelude::*;

use super::{Hypersurface, Point};
use crate::error::{Error, Result};
use crate::speeds::CurvatureVector;

const PARALLEL_THRESHOLD: usize = 1024;

/// Outward unit normals and principal curvatures (positive on convex parts).
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub normals: Vec<Point>,
    pub principal: Vec<CurvatureVector>,
}

impl CurvatureData {
    pub fn min_curvature(&self) -> f64 {
        self.principal.iter().map(|l| l.min()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_curvature(&self) -> f64 {
        self.principal
            .iter()
            .map(|l| l.max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn compute_curvatures(m: &Hypersurface) -> Result<CurvatureData> {
    if m.dim() == 1 {
        curve_curvatures(m)
    } else {
        surface_curvatures(m)
    }
}

fn curve_curvatures(m: &Hypersurface) -> Result<CurvatureData> {
    let v = m.vertices();
    let n = v.len();
    let mut normals = Vec::with_capacity(n);
    let mut principal = Vec::with_capacity(n);
    for i in 0..n {
        let a = v[(i + n - 1) % n];
        let p = v[i];
        let b = v[(i + 1) % n];
        let (ea, eb, chord) = ((p - a).norm(), (b - p).norm(), (b - a).norm());
        if ea == 0.0 || eb == 0.0 || chord == 0.0 {
            return Err(Error::DegenerateElement(format!("zero-length edge at vertex {i}")));
        }
        let turn = (p - a).x * (b - p).y - (p - a).y * (b - p).x;
        let k = 2.0 * turn / (ea * eb * chord);
        let chord_normal = Point::new(b.y - a.y, a.x - b.x, 0.0) / chord;
        let normal = if k.abs() * chord > 1e-10 {
            // circumcenter relative to p
            let (u, w) = (a - p, b - p);
            let d = 2.0 * (u.x * w.y - u.y * w.x);
            let c = Point::new(
                (w.y * u.norm_squared() - u.y * w.norm_squared()) / d,
                (u.x * w.norm_squared() - w.x * u.norm_squared()) / d,
                0.0,
            );
            let toward = -c.normalize() * k.signum();
            if toward.dot(&chord_normal) > 0.0 {
                toward
            } else {
                chord_normal
            }
        } else {
            chord_normal
        };
        normals.push(normal);
        principal.push(CurvatureVector::from_raw([k, 0.0], 1));
    }
    Ok(CurvatureData { normals, principal })
}

fn surface_curvatures(m: &Hypersurface) -> Result<CurvatureData> {
    let run = |i: usize| vertex_fit(m, i);
    let fits: Vec<Result<(Point, CurvatureVector)>> = if m.len() >= PARALLEL_THRESHOLD {
        (0..m.len()).into_par_iter().map(run).collect()
    } else {
        (0..m.len()).map(run).collect()
    };
    let mut normals = Vec::with_capacity(m.len());
    let mut principal = Vec::with_capacity(m.len());
    for f in fits {
        let (nrm, l) = f?;
        normals.push(nrm);
        principal.push(l);
    }
    Ok(CurvatureData { normals, principal })
}

/// Area-weighted average of incident face normals.
pub(crate) fn face_normal_average(m: &Hypersurface, i: usize) -> Result<Point> {
    let v = m.vertices();
    let mut acc = Point::zeros();
    for &fi in m.topology().vertex_faces(i) {
        let f = m.faces()[fi];
        let cross = (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]]));
        if cross.norm() == 0.0 {
            return Err(Error::DegenerateElement(format!("zero-area triangle {fi}")));
        }
        acc += cross;
    }
    let len = acc.norm();
    if len == 0.0 {
        return Err(Error::DegenerateElement(format!("vertex {i} has no normal")));
    }
    Ok(acc / len)
}

pub(crate) fn tangent_frame(n: Point) -> (Point, Point) {
    let helper = if n.x.abs() < 0.9 { Point::x() } else { Point::y() };
    let t1 = (helper - n * n.dot(&helper)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Local quadric `z = ax² + bxy + cy² + dx + ey` around vertex `i`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalQuadric {
    pub origin: Point,
    pub frame: (Point, Point, Point),
    pub coeffs: [f64; 5],
}

impl LocalQuadric {
    pub fn height(&self, p: Point) -> f64 {
        let d = p - self.origin;
        let (x, y) = (d.dot(&self.frame.0), d.dot(&self.frame.1));
        let c = self.coeffs;
        c[0] * x * x + c[1] * x * y + c[2] * y * y + c[3] * x + c[4] * y
    }

    /// Move `p` along the frame normal onto the fitted surface.
    pub fn project(&self, p: Point) -> Point {
        let d = p - self.origin;
        let z = d.dot(&self.frame.2);
        p + self.frame.2 * (self.height(p) - z)
    }
}

pub(crate) fn fit_quadric(m: &Hypersurface, i: usize) -> Result<LocalQuadric> {
    let v = m.vertices();
    let p = v[i];
    let n0 = face_normal_average(m, i)?;
    let (t1, t2) = tangent_frame(n0);
    let ring = m.topology().two_ring(i);
    if ring.len() < 5 {
        return Err(Error::DegenerateElement(format!(
            "vertex {i} has only {} neighbours for the quadric fit",
            ring.len()
        )));
    }
    let local: Vec<(f64, f64, f64)> = ring
        .iter()
        .map(|&j| {
            let d = v[j] - p;
            (d.dot(&t1), d.dot(&t2), d.dot(&n0))
        })
        .collect();
    let scale = local.iter().map(|&(x, y, _)| (x * x + y * y).sqrt()).sum::<f64>() / local.len() as f64;
    if scale == 0.0 {
        return Err(Error::DegenerateElement(format!("collapsed neighbourhood at vertex {i}")));
    }
    let mut ata = Matrix5::<f64>::zeros();
    let mut atz = Vector5::<f64>::zeros();
    for &(x, y, z) in &local {
        let (u, w) = (x / scale, y / scale);
        let row = Vector5::new(u * u, u * w, w * w, u, w);
        ata += row * row.transpose();
        atz += row * (z / scale);
    }
    let sol = ata
        .cholesky()
        .map(|c| c.solve(&atz))
        .ok_or_else(|| Error::DegenerateElement(format!("singular quadric fit at vertex {i}")))?;
    let coeffs = [
        sol[0] / scale,
        sol[1] / scale,
        sol[2] / scale,
        sol[3],
        sol[4],
    ];
    Ok(LocalQuadric {
        origin: p,
        frame: (t1, t2, n0),
        coeffs,
    })
}

fn vertex_fit(m: &Hypersurface, i: usize) -> Result<(Point, CurvatureVector)> {
    let q = fit_quadric(m, i)?;
    let [a, b, c, d, e] = q.coeffs;
    let (t1, t2, n0) = q.frame;
    let w = (1.0 + d * d + e * e).sqrt();
    // First and second fundamental forms of the graph at the origin.
    let (g11, g12, g22) = (1.0 + d * d, d * e, 1.0 + e * e);
    let (h11, h12, h22) = (2.0 * a / w, b / w, 2.0 * c / w);
    let det_g = g11 * g22 - g12 * g12;
    // S = G⁻¹ H
    let s11 = (g22 * h11 - g12 * h12) / det_g;
    let s12 = (g22 * h12 - g12 * h22) / det_g;
    let s21 = (g11 * h12 - g12 * h11) / det_g;
    let s22 = (g11 * h22 - g12 * h12) / det_g;
    let tr = s11 + s22;
    let det = s11 * s22 - s12 * s21;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    // The fitted normal points out of the body; a convex surface bends away
    // from it, hence the sign flip.
    let (k1, k2) = (-(0.5 * tr + disc), -(0.5 * tr - disc));
    let normal = (n0 - t1 * d - t2 * e) / w;
    Ok((normal, CurvatureVector::from_raw([k1.min(k2), k1.max(k2)], 2)))
}
