//! Built-in closed shapes.

use std::collections::HashMap;
use std::f64::consts::TAU;

use super::{pt2, Hypersurface, Point};
use crate::error::{Error, Result};

/// Closed curve through `r(θ)·(cos θ, sin θ)` at `n` equally spaced angles.
pub fn radial_curve(center: Point, n: usize, radius: impl Fn(f64) -> f64) -> Result<Hypersurface> {
    let pts = (0..n)
        .map(|i| {
            let th = TAU * i as f64 / n as f64;
            let r = radius(th);
            pt2(center.x + r * th.cos(), center.y + r * th.sin())
        })
        .collect();
    Hypersurface::curve(pts)
}

/// Regular `n`-gon inscribed in the circle of radius `r`.
pub fn circle(center: Point, r: f64, n: usize) -> Result<Hypersurface> {
    check_positive("radius", r)?;
    radial_curve(center, n, |_| r)
}

/// Ellipse with semi-axes `a` (along x) and `b` (along y), sampled at equally
/// spaced parameter values starting at `(a, 0)`.
pub fn ellipse(center: Point, a: f64, b: f64, n: usize) -> Result<Hypersurface> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let pts = (0..n)
        .map(|i| {
            let th = TAU * i as f64 / n as f64;
            pt2(center.x + a * th.cos(), center.y + b * th.sin())
        })
        .collect();
    Hypersurface::curve(pts)
}

/// Axis-aligned square with `per_side` vertices on each side.
pub fn square(center: Point, side: f64, per_side: usize) -> Result<Hypersurface> {
    check_positive("side", side)?;
    let h = side / 2.0;
    let corners = [pt2(h, -h), pt2(h, h), pt2(-h, h), pt2(-h, -h)];
    let per_side = per_side.max(1);
    let mut pts = Vec::with_capacity(4 * per_side);
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for j in 0..per_side {
            let s = j as f64 / per_side as f64;
            pts.push(center + a + (b - a) * s);
        }
    }
    Hypersurface::curve(pts)
}

fn unit_icosphere(subdivisions: usize) -> (Vec<Point>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Point::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Point>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) / 2.0).normalize());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut v);
            let bc = midpoint(b, c, &mut v);
            let ca = midpoint(c, a, &mut v);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (v, faces)
}

/// Subdivided icosahedron with all vertices on the sphere of radius `r`.
/// Level `k` has `10·4ᵏ + 2` vertices (2562 at `k = 4`).
pub fn icosphere(center: Point, r: f64, subdivisions: usize) -> Result<Hypersurface> {
    check_positive("radius", r)?;
    let (v, f) = unit_icosphere(subdivisions);
    Hypersurface::surface(v.into_iter().map(|p| center + p * r).collect(), f)
}

/// Icosphere stretched to semi-axes `axes`.
pub fn ellipsoid(center: Point, axes: [f64; 3], subdivisions: usize) -> Result<Hypersurface> {
    for (i, &a) in axes.iter().enumerate() {
        check_positive(["a", "b", "c"][i], a)?;
    }
    let (v, f) = unit_icosphere(subdivisions);
    let v = v
        .into_iter()
        .map(|p| center + Point::new(p.x * axes[0], p.y * axes[1], p.z * axes[2]))
        .collect();
    Hypersurface::surface(v, f)
}

/// Icosphere with vertex radii `r·(1 + g(p))` for a caller-supplied `g` on
/// the unit sphere.
pub fn perturbed_sphere(
    center: Point,
    r: f64,
    subdivisions: usize,
    perturbation: impl Fn(Point) -> f64,
) -> Result<Hypersurface> {
    check_positive("radius", r)?;
    let (v, f) = unit_icosphere(subdivisions);
    let v = v
        .into_iter()
        .map(|p| center + p * r * (1.0 + perturbation(p)))
        .collect();
    Hypersurface::surface(v, f)
}

fn check_positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive, got {v}")))
    }
}
