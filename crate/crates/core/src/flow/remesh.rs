//! Edge-length driven remeshing.
//!
//! Curves insert points on the circular arc fitted through the edge
//! endpoints' curvatures and drop vertices whose removal keeps the merged
//! edge within the band. Surfaces split long edges at quadric-projected
//! midpoints and collapse short edges that pass the link condition.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::QUALITY_FLOOR;
use crate::error::{Error, Result};
use crate::hypersurface::{compute_curvatures, fit_quadric, Hypersurface, LocalQuadric, Point};

const MAX_PASSES: usize = 32;

/// Target edge lengths `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeBand {
    pub min: f64,
    pub max: f64,
}

impl EdgeBand {
    pub fn validate(&self) -> Result<()> {
        // halves of a split edge must not fall below `min`
        if !(self.min > 0.0 && 2.0 * self.min <= self.max && self.max.is_finite()) {
            return Err(Error::validation(
                "flow.remesh",
                format!("edge band [{}, {}] must satisfy 0 < 2·min <= max", self.min, self.max),
            ));
        }
        Ok(())
    }

    pub fn contains_all(&self, m: &Hypersurface) -> bool {
        m.min_edge_length() >= self.min && m.max_edge_length() <= self.max
    }
}

pub(crate) fn quadric_at(m: &Hypersurface, i: usize) -> Result<LocalQuadric> {
    fit_quadric(m, i)
}

/// Brings every edge length into `band`. A mesh already inside the band is
/// returned unchanged.
pub fn remesh(m: &Hypersurface, band: &EdgeBand) -> Result<Hypersurface> {
    band.validate()?;
    if band.contains_all(m) {
        return Ok(m.clone());
    }
    let out = if m.dim() == 1 {
        remesh_curve(m, band)?
    } else {
        remesh_surface(m, band)?
    };
    if !band.contains_all(&out) {
        return Err(Error::MeshDegeneracy(format!(
            "remeshing left edges in [{:.3e}, {:.3e}], outside the band [{}, {}]",
            out.min_edge_length(),
            out.max_edge_length(),
            band.min,
            band.max
        )));
    }
    let q = out.min_element_quality();
    if q < QUALITY_FLOOR {
        return Err(Error::MeshDegeneracy(format!("remeshed quality {q:.3e}")));
    }
    Ok(out)
}

/// Offset of the circular arc of signed curvature `k` over a chord of
/// length `len`, at chord parameter `s ∈ [0, 1]`.
fn arc_offset(k: f64, len: f64, s: f64) -> f64 {
    let x = len * (s - 0.5);
    let half = len / 2.0;
    if k.abs() * half < 0.9 {
        let r = 1.0 / k.abs();
        k.signum() * ((r * r - x * x).sqrt() - (r * r - half * half).sqrt())
    } else {
        0.5 * k * (half * half - x * x)
    }
}

/// Point halfway along the circular arc from `a` to `b` through `p`.
fn arc_midpoint(a: Point, p: Point, b: Point) -> Point {
    let mid = (a + b) / 2.0;
    let (u, w) = (p - a, b - a);
    let cross = u.x * w.y - u.y * w.x;
    if cross.abs() <= 1e-14 * u.norm_squared().max(w.norm_squared()) {
        return mid;
    }
    let (uu, ww) = (u.norm_squared(), w.norm_squared());
    let center = a + Point::new(w.y * uu - u.y * ww, u.x * ww - w.x * uu, 0.0) / (2.0 * cross);
    let r = (a - center).norm();
    let mut dir = mid - center;
    if dir.dot(&(p - center)) < 0.0 {
        dir = -dir;
    }
    center + dir.normalize() * r
}

fn remesh_curve(m: &Hypersurface, band: &EdgeBand) -> Result<Hypersurface> {
    let mut cur = m.clone();
    for _ in 0..MAX_PASSES {
        let k: Vec<f64> = compute_curvatures(&cur)?
            .principal
            .iter()
            .map(|l| l.as_slice()[0])
            .collect();
        let v = cur.vertices();
        let n = v.len();
        let mut pts = Vec::with_capacity(n);
        let mut changed = false;
        for i in 0..n {
            pts.push(v[i]);
            let (a, b) = (v[i], v[(i + 1) % n]);
            let len = (b - a).norm();
            if len > band.max {
                let pieces = (len / band.max).ceil() as usize;
                let kbar = 0.5 * (k[i] + k[(i + 1) % n]);
                let dir = (b - a) / len;
                let out = Point::new(dir.y, -dir.x, 0.0);
                for j in 1..pieces {
                    let s = j as f64 / pieces as f64;
                    pts.push(a + (b - a) * s + out * arc_offset(kbar, len, s));
                }
                changed = true;
            }
        }
        let mut keep = vec![true; pts.len()];
        let len = pts.len();
        let mut i = 0;
        while i < len {
            let next = (i + 1) % len;
            if keep[i] && keep[next] && (pts[next] - pts[i]).norm() < band.min && keep.iter().filter(|&&x| x).count() > 3 {
                // drop `next` when the merged edge stays short enough
                let mut after = (next + 1) % len;
                while !keep[after] {
                    after = (after + 1) % len;
                }
                if (pts[after] - pts[i]).norm() <= band.max {
                    keep[next] = false;
                    changed = true;
                } else {
                    // both neighbours too long to absorb it: recenter instead
                    pts[next] = arc_midpoint(pts[i], pts[next], pts[after]);
                    changed = true;
                }
            }
            i += 1;
        }
        if !changed {
            break;
        }
        let pts: Vec<Point> = pts.into_iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p).collect();
        cur = Hypersurface::curve(pts).map_err(|e| Error::MeshDegeneracy(e.to_string()))?;
    }
    Ok(cur)
}

fn face_edge_map(faces: &[[usize; 3]]) -> HashMap<(usize, usize), usize> {
    let mut map = HashMap::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            map.insert((f[k], f[(k + 1) % 3]), fi);
        }
    }
    map
}

/// Rotates `f` so that it starts with the directed edge `(a, b)` and returns
/// the opposite vertex.
fn opposite(f: [usize; 3], a: usize, b: usize) -> usize {
    (0..3)
        .find(|&k| f[k] == a && f[(k + 1) % 3] == b)
        .map(|k| f[(k + 2) % 3])
        .expect("directed edge belongs to face")
}

fn projected_midpoint(m: &Hypersurface, a: usize, b: usize) -> Result<Point> {
    let v = m.vertices();
    let mid = (v[a] + v[b]) / 2.0;
    let pa = quadric_at(m, a)?.project(mid);
    let pb = quadric_at(m, b)?.project(mid);
    Ok((pa + pb) / 2.0)
}

fn split_pass(m: &Hypersurface, band: &EdgeBand) -> Result<Option<Hypersurface>> {
    let v = m.vertices();
    let mut long: Vec<([usize; 2], f64)> = m
        .topology()
        .edges()
        .iter()
        .map(|&[a, b]| ([a, b], (v[a] - v[b]).norm()))
        .filter(|&(_, l)| l > band.max)
        .collect();
    if long.is_empty() {
        return Ok(None);
    }
    long.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut faces = m.faces().to_vec();
    let mut verts = v.to_vec();
    let map = face_edge_map(&faces);
    let mut touched = vec![false; faces.len()];
    for ([a, b], _) in long {
        let (f1, f2) = (map[&(a, b)], map[&(b, a)]);
        if touched[f1] || touched[f2] {
            continue;
        }
        let c = opposite(faces[f1], a, b);
        let d = opposite(faces[f2], b, a);
        let mid = verts.len();
        verts.push(projected_midpoint(m, a, b)?);
        faces[f1] = [a, mid, c];
        faces.push([mid, b, c]);
        faces[f2] = [b, mid, d];
        faces.push([mid, a, d]);
        touched[f1] = true;
        touched[f2] = true;
    }
    Hypersurface::surface(verts, faces)
        .map(Some)
        .map_err(|e| Error::MeshDegeneracy(e.to_string()))
}

fn normal(a: Point, b: Point, c: Point) -> Point {
    (b - a).cross(&(c - a))
}

fn collapse_pass(m: &Hypersurface, band: &EdgeBand) -> Result<Option<Hypersurface>> {
    let v = m.vertices();
    let topo = m.topology();
    let mut short: Vec<([usize; 2], f64)> = topo
        .edges()
        .iter()
        .map(|&[a, b]| ([a, b], (v[a] - v[b]).norm()))
        .filter(|&(_, l)| l < band.min)
        .collect();
    if short.is_empty() {
        return Ok(None);
    }
    short.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut faces = m.faces().to_vec();
    let mut verts = v.to_vec();
    let mut dead_face = vec![false; faces.len()];
    let mut dead_vertex = vec![false; verts.len()];
    let mut touched = vec![false; faces.len()];
    let mut changed = false;
    for ([a, b], _) in short {
        let around: Vec<usize> = topo
            .vertex_faces(a)
            .iter()
            .chain(topo.vertex_faces(b))
            .copied()
            .collect();
        if around.iter().any(|&f| touched[f]) {
            continue;
        }
        let (ra, rb) = (topo.one_ring(a), topo.one_ring(b));
        let common: Vec<usize> = ra.iter().copied().filter(|x| rb.contains(x)).collect();
        if common.len() != 2
            || (ra.len() <= 3 && rb.len() <= 3)
            || common.iter().any(|&c| topo.one_ring(c).len() <= 3)
        {
            continue;
        }
        let p = projected_midpoint(m, a, b)?;
        let mut ok = true;
        for &fi in &around {
            let f = faces[fi];
            if f.contains(&a) && f.contains(&b) {
                continue;
            }
            let g = f.map(|x| if x == b { a } else { x });
            let pos = |x: usize| if x == a { p } else { verts[x] };
            let (n_old, n_new) = (
                normal(verts[f[0]], verts[f[1]], verts[f[2]]),
                normal(pos(g[0]), pos(g[1]), pos(g[2])),
            );
            let longest = (0..3)
                .map(|k| (pos(g[k]) - pos(g[(k + 1) % 3])).norm())
                .fold(0.0, f64::max);
            if n_old.dot(&n_new) <= 0.0 || longest > band.max {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        verts[a] = p;
        dead_vertex[b] = true;
        for &fi in &around {
            touched[fi] = true;
            if faces[fi].contains(&a) && faces[fi].contains(&b) {
                dead_face[fi] = true;
            } else {
                faces[fi] = faces[fi].map(|x| if x == b { a } else { x });
            }
        }
        changed = true;
    }
    if !changed {
        return Ok(None);
    }
    let mut remap = vec![usize::MAX; verts.len()];
    let mut kept = Vec::with_capacity(verts.len());
    for (i, p) in verts.into_iter().enumerate() {
        if !dead_vertex[i] {
            remap[i] = kept.len();
            kept.push(p);
        }
    }
    let faces = faces
        .into_iter()
        .zip(dead_face)
        .filter(|(_, d)| !d)
        .map(|(f, _)| f.map(|x| remap[x]))
        .collect();
    Hypersurface::surface(kept, faces)
        .map(Some)
        .map_err(|e| Error::MeshDegeneracy(e.to_string()))
}

fn remesh_surface(m: &Hypersurface, band: &EdgeBand) -> Result<Hypersurface> {
    let mut cur = m.clone();
    for _ in 0..MAX_PASSES {
        match split_pass(&cur, band)? {
            Some(next) => cur = next,
            None => break,
        }
    }
    for _ in 0..MAX_PASSES {
        match collapse_pass(&cur, band)? {
            Some(next) => cur = next,
            None => break,
        }
    }
    Ok(cur)
}
