//! Closed embedded hypersurfaces at mesh scale.
//!
//! A [`Hypersurface`] is either a closed polygon in the plane (`n = 1`, stored
//! counter-clockwise with `z = 0`) or a closed oriented triangle mesh in space
//! (`n = 2`, outward-facing triangles). Topology is shared between snapshots
//! through an [`Arc`], so moving vertices never re-derives adjacency.

mod curvature;
pub mod io;
mod query;
pub mod shapes;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use curvature::{compute_curvatures, CurvatureData};
pub(crate) use curvature::{fit_quadric, LocalQuadric};
pub(crate) use query::require_inside;
pub use query::{
    curvature_pinching_ratio, inner_outer_radii, starshapedness_ratio, support_max, Containment,
    RadiiReport,
};

/// Points and vectors in ambient space; curves use `z = 0`.
pub type Point = Vector3<f64>;

/// Planar point helper.
pub fn pt2(x: f64, y: f64) -> Point {
    Point::new(x, y, 0.0)
}

/// Adjacency shared by every snapshot of an evolving hypersurface.
#[derive(Debug)]
pub struct Topology {
    dim: usize,
    n_vertices: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    one_ring: Vec<Vec<usize>>,
    two_ring: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl Topology {
    fn curve(n: usize) -> Self {
        let edges = (0..n).map(|i| [i, (i + 1) % n]).collect();
        let one_ring = (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
        Self {
            dim: 1,
            n_vertices: n,
            faces: Vec::new(),
            edges,
            one_ring,
            two_ring: Vec::new(),
            vertex_faces: Vec::new(),
        }
    }

    fn surface(n: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidSurface(format!("face {fi} repeats a vertex")));
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if a >= n || b >= n {
                    return Err(Error::InvalidSurface(format!("face {fi} indexes past {n} vertices")));
                }
                if directed.insert((a, b), fi).is_some() {
                    return Err(Error::InvalidSurface(format!(
                        "directed edge ({a}, {b}) used twice: inconsistent orientation or non-manifold"
                    )));
                }
            }
        }
        let mut edges = Vec::new();
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::InvalidSurface(format!("edge ({a}, {b}) is on a boundary")));
            }
            if a < b {
                edges.push([a, b]);
            }
        }
        edges.sort_unstable();
        let chi = n as i64 - edges.len() as i64 + faces.len() as i64;
        if chi != 2 {
            return Err(Error::InvalidSurface(format!(
                "Euler characteristic {chi}; only sphere topology is supported"
            )));
        }
        let mut one_ring = vec![Vec::new(); n];
        for &[a, b] in &edges {
            one_ring[a].push(b);
            one_ring[b].push(a);
        }
        if let Some(v) = one_ring.iter().position(|r| r.is_empty()) {
            return Err(Error::InvalidSurface(format!("vertex {v} is isolated")));
        }
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        let two_ring = (0..n)
            .map(|v| {
                let mut ring: Vec<usize> = one_ring[v]
                    .iter()
                    .flat_map(|&u| one_ring[u].iter().copied().chain(std::iter::once(u)))
                    .filter(|&u| u != v)
                    .collect();
                ring.sort_unstable();
                ring.dedup();
                ring
            })
            .collect();
        Ok(Self {
            dim: 2,
            n_vertices: n,
            faces,
            edges,
            one_ring,
            two_ring,
            vertex_faces,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn one_ring(&self, v: usize) -> &[usize] {
        &self.one_ring[v]
    }

    pub fn two_ring(&self, v: usize) -> &[usize] {
        &self.two_ring[v]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }
}

/// A closed, oriented, embedded curve (`n = 1`) or surface (`n = 2`).
#[derive(Debug, Clone)]
pub struct Hypersurface {
    vertices: Vec<Point>,
    topology: Arc<Topology>,
}

impl Hypersurface {
    /// A closed polygon; vertices are connected cyclically and must run
    /// counter-clockwise around the enclosed region.
    pub fn curve(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidSurface(format!(
                "a closed curve needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| p.z != 0.0) {
            return Err(Error::InvalidSurface("curve vertices must have z = 0".into()));
        }
        let s = Self {
            topology: Arc::new(Topology::curve(vertices.len())),
            vertices,
        };
        s.validate()?;
        Ok(s)
    }

    /// A closed triangle mesh with outward (counter-clockwise seen from
    /// outside) faces.
    pub fn surface(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let topology = Topology::surface(vertices.len(), faces)?;
        let s = Self {
            vertices,
            topology: Arc::new(topology),
        };
        s.validate()?;
        Ok(s)
    }

    /// Same connectivity, new positions. No validation is performed.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len());
        Self {
            vertices,
            topology: Arc::clone(&self.topology),
        }
    }

    /// Checks finiteness, positive enclosed volume, non-degenerate elements
    /// and embeddedness at mesh scale.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidSurface("non-finite vertex coordinate".into()));
        }
        if self.min_edge_length() <= 0.0 {
            return Err(Error::DegenerateElement("zero-length edge".into()));
        }
        let vol = self.enclosed_volume();
        if !(vol > 0.0) {
            return Err(Error::InvalidSurface(format!(
                "signed enclosed volume {vol} is not positive (orientation must be outward)"
            )));
        }
        self.check_embedded()
    }

    pub fn dim(&self) -> usize {
        self.topology.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.topology.dim + 1
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.topology.faces
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn shares_topology(&self, other: &Hypersurface) -> bool {
        Arc::ptr_eq(&self.topology, &other.topology)
    }

    /// Enclosed area (`n = 1`) or volume (`n = 2`) by the divergence theorem.
    pub fn enclosed_volume(&self) -> f64 {
        let v = &self.vertices;
        if self.dim() == 1 {
            let n = v.len();
            0.5 * (0..n)
                .map(|i| {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    a.x * b.y - a.y * b.x
                })
                .sum::<f64>()
        } else {
            self.faces()
                .iter()
                .map(|f| v[f[0]].dot(&v[f[1]].cross(&v[f[2]])))
                .sum::<f64>()
                / 6.0
        }
    }

    pub fn vertex_centroid(&self) -> Point {
        self.vertices.iter().sum::<Point>() / self.vertices.len() as f64
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.topology
            .edges
            .iter()
            .map(move |&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths().fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edge_lengths().fold(0.0, f64::max)
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.edge_lengths().sum::<f64>() / self.topology.edges.len() as f64
    }

    /// Shortest edge incident to each vertex.
    pub fn local_edge_lengths(&self) -> Vec<f64> {
        let mut h = vec![f64::INFINITY; self.len()];
        for &[a, b] in &self.topology.edges {
            let l = (self.vertices[a] - self.vertices[b]).norm();
            h[a] = h[a].min(l);
            h[b] = h[b].min(l);
        }
        h
    }

    /// Worst element quality in `[0, 1]`: shortest over mean edge length for
    /// curves, `4√3·area / Σ edge²` over triangles for surfaces.
    pub fn min_element_quality(&self) -> f64 {
        if self.dim() == 1 {
            self.min_edge_length() / self.mean_edge_length()
        } else {
            self.faces()
                .iter()
                .map(|f| triangle_quality(self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]))
                .fold(f64::INFINITY, f64::min)
        }
    }

    /// Largest gap between a chord and a circle of the local curvature,
    /// `h²·k/8`, estimated from the longest edge and the vertex curvatures.
    pub fn chord_deviation(&self) -> f64 {
        let h = self.max_edge_length();
        let k = match compute_curvatures(self) {
            Ok(c) => c
                .principal
                .iter()
                .map(|l| l.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
                .fold(0.0, f64::max),
            Err(_) => 2.0 / self.bbox_diagonal().max(f64::MIN_POSITIVE),
        };
        h * h * k / 8.0
    }

    /// Exact segment/triangle crossing tests between non-adjacent elements.
    pub fn check_embedded(&self) -> Result<()> {
        if self.dim() == 1 {
            self.check_curve_embedded()
        } else {
            self.check_surface_embedded()
        }
    }

    fn check_curve_embedded(&self) -> Result<()> {
        let v = &self.vertices;
        let n = v.len();
        let mut order: Vec<usize> = (0..n).collect();
        let xmin = |i: usize| v[i].x.min(v[(i + 1) % n].x);
        let xmax = |i: usize| v[i].x.max(v[(i + 1) % n].x);
        order.sort_by(|&a, &b| xmin(a).total_cmp(&xmin(b)));
        for (pos, &i) in order.iter().enumerate() {
            let hi = xmax(i);
            for &j in &order[pos + 1..] {
                if xmin(j) > hi {
                    break;
                }
                let adjacent = j == (i + 1) % n || i == (j + 1) % n;
                if adjacent {
                    continue;
                }
                if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(Error::InvalidSurface(format!(
                        "edges {i} and {j} intersect: curve is not embedded"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_surface_embedded(&self) -> Result<()> {
        let v = &self.vertices;
        let faces = self.faces();
        let bounds: Vec<(Point, Point)> = faces
            .iter()
            .map(|f| {
                let lo = v[f[0]].inf(&v[f[1]]).inf(&v[f[2]]);
                let hi = v[f[0]].sup(&v[f[1]]).sup(&v[f[2]]);
                (lo, hi)
            })
            .collect();
        let mut order: Vec<usize> = (0..faces.len()).collect();
        order.sort_by(|&a, &b| bounds[a].0.x.total_cmp(&bounds[b].0.x));
        for (pos, &i) in order.iter().enumerate() {
            let (lo_i, hi_i) = bounds[i];
            for &j in &order[pos + 1..] {
                let (lo_j, hi_j) = bounds[j];
                if lo_j.x > hi_i.x {
                    break;
                }
                if lo_j.y > hi_i.y || hi_j.y < lo_i.y || lo_j.z > hi_i.z || hi_j.z < lo_i.z {
                    continue;
                }
                let (fi, fj) = (faces[i], faces[j]);
                if fi.iter().any(|a| fj.contains(a)) {
                    continue;
                }
                if triangles_intersect([v[fi[0]], v[fi[1]], v[fi[2]]], [v[fj[0]], v[fj[1]], v[fj[2]]]) {
                    return Err(Error::InvalidSurface(format!(
                        "faces {i} and {j} intersect: surface is not embedded"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn triangle_quality(a: Point, b: Point, c: Point) -> f64 {
    let area = 0.5 * (b - a).cross(&(c - a)).norm();
    let sq = (b - a).norm_squared() + (c - b).norm_squared() + (a - c).norm_squared();
    if sq == 0.0 {
        0.0
    } else {
        4.0 * 3f64.sqrt() * area / sq
    }
}

#[inline]
pub(crate) fn orient2d(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0 && c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Does the closed segment `p q` cross the triangle `t`?
pub(crate) fn segment_hits_triangle(p: Point, q: Point, t: [Point; 3]) -> bool {
    let dir = q - p;
    ray_triangle(p, dir, t).is_some_and(|s| (0.0..=1.0).contains(&s))
}

/// Möller–Trumbore; returns the ray parameter of the hit.
pub(crate) fn ray_triangle(origin: Point, dir: Point, t: [Point; 3]) -> Option<f64> {
    let e1 = t[1] - t[0];
    let e2 = t[2] - t[0];
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - t[0];
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let w = dir.dot(&qvec) * inv;
    if w < 0.0 || u + w > 1.0 {
        return None;
    }
    Some(e2.dot(&qvec) * inv)
}

fn triangles_intersect(a: [Point; 3], b: [Point; 3]) -> bool {
    (0..3).any(|k| segment_hits_triangle(a[k], a[(k + 1) % 3], b))
        || (0..3).any(|k| segment_hits_triangle(b[k], b[(k + 1) % 3], a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn curve_volume_and_orientation() {
        let c = shapes::circle(Point::zeros(), 1.0, 512).unwrap();
        assert!((c.enclosed_volume() - PI).abs() / PI < 1e-4);
        let mut rev: Vec<Point> = c.vertices().to_vec();
        rev.reverse();
        assert!(Hypersurface::curve(rev).is_err());
    }

    #[test]
    fn sphere_volume() {
        let s = shapes::icosphere(Point::zeros(), 1.0, 4).unwrap();
        assert_eq!(s.len(), 2562);
        let exact = 4.0 * PI / 3.0;
        assert!((s.enclosed_volume() - exact).abs() / exact < 0.02);
    }

    #[test]
    fn self_intersecting_curve_rejected() {
        let bow = vec![pt2(0.0, 0.0), pt2(1.0, 1.0), pt2(1.0, 0.0), pt2(0.0, 1.0)];
        assert!(Hypersurface::curve(bow).is_err());
    }

    #[test]
    fn open_mesh_rejected() {
        let v = vec![Point::zeros(), Point::x(), Point::y(), Point::z()];
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2]];
        assert!(matches!(Hypersurface::surface(v, faces), Err(Error::InvalidSurface(_))));
    }

    #[test]
    fn tetrahedron_ok() {
        let v = vec![Point::zeros(), Point::x(), Point::y(), Point::z()];
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let t = Hypersurface::surface(v, faces).unwrap();
        assert!((t.enclosed_volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn interpenetrating_spheres_rejected() {
        let a = shapes::icosphere(Point::zeros(), 1.0, 1).unwrap();
        let b = shapes::icosphere(Point::new(0.5, 0.0, 0.0), 1.0, 1).unwrap();
        let n = a.len();
        let mut v = a.vertices().to_vec();
        v.extend_from_slice(b.vertices());
        let mut faces = a.faces().to_vec();
        faces.extend(b.faces().iter().map(|f| [f[0] + n, f[1] + n, f[2] + n]));
        // Two components have χ = 4, so build the check directly.
        let topo = Topology {
            dim: 2,
            n_vertices: v.len(),
            faces,
            edges: Vec::new(),
            one_ring: Vec::new(),
            two_ring: Vec::new(),
            vertex_faces: Vec::new(),
        };
        let s = Hypersurface {
            vertices: v,
            topology: Arc::new(topo),
        };
        assert!(s.check_surface_embedded().is_err());
        assert!(a.check_embedded().is_ok());
    }
}
