//! Text formats for hypersurfaces.
//!
//! * Surfaces: OBJ subset, `v x y z` and `f i j k` (1-based, outward order).
//! * Curves: one `x y` vertex per line, closure implied, counter-clockwise.
//!
//! Coordinates are written with 17 significant digits so that a write/read
//! cycle reproduces every `f64` exactly. Lines starting with `#` are comments.

use std::fmt::Write as _;
use std::path::Path;

use super::{pt2, Hypersurface, Point};
use crate::error::{Error, Result};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_obj_string(m: &Hypersurface) -> String {
    let mut s = String::new();
    for p in m.vertices() {
        let _ = writeln!(s, "v {} {} {}", num(p.x), num(p.y), num(p.z));
    }
    for f in m.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn to_polyline_string(m: &Hypersurface) -> String {
    let mut s = String::new();
    for p in m.vertices() {
        let _ = writeln!(s, "{} {}", num(p.x), num(p.y));
    }
    s
}

/// OBJ for surfaces, polyline text for curves.
pub fn to_text(m: &Hypersurface) -> String {
    if m.dim() == 1 {
        to_polyline_string(m)
    } else {
        to_obj_string(m)
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("line {line}: missing coordinate")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{tok}` is not a number")))
}

pub fn parse_obj(text: &str) -> Result<Hypersurface> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Point::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        t.split('/')
                            .next()
                            .and_then(|i| i.parse::<usize>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| Error::Parse(format!("line {line}: bad face index `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::Parse(format!("line {line}: only triangles are supported")));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            Some(t) if t.starts_with('#') => {}
            None => {}
            Some(_) => {}
        }
    }
    Hypersurface::surface(vertices, faces)
}

pub fn parse_polyline(text: &str) -> Result<Hypersurface> {
    let mut pts = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let x = parse_f64(toks.next(), no + 1)?;
        let y = parse_f64(toks.next(), no + 1)?;
        if toks.next().is_some() {
            return Err(Error::Parse(format!("line {}: expected two coordinates", no + 1)));
        }
        pts.push(pt2(x, y));
    }
    Hypersurface::curve(pts)
}

pub fn write(m: &Hypersurface, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(m)).map_err(|e| Error::io(path, e))
}

/// Reads `.obj` files as surfaces and anything else as a polyline.
pub fn read(path: &Path) -> Result<Hypersurface> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj")) {
        parse_obj(&text)
    } else {
        parse_polyline(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::super::shapes;
    use super::*;

    #[test]
    fn obj_roundtrip_is_bit_exact() {
        let s = shapes::ellipsoid(Point::new(0.1, 0.2, 0.3), [1.3, 0.7, 0.9], 2).unwrap();
        let back = parse_obj(&to_obj_string(&s)).unwrap();
        assert_eq!(back.vertices(), s.vertices());
        assert_eq!(back.faces(), s.faces());
    }

    #[test]
    fn polyline_roundtrip_is_bit_exact() {
        let c = shapes::ellipse(pt2(0.1, -0.3), 2.0, 1.0 / 3.0, 97).unwrap();
        let back = parse_polyline(&to_polyline_string(&c)).unwrap();
        assert_eq!(back.vertices(), c.vertices());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_polyline("0 0\n1 x\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_obj("v 0 0 0\nf 1 2\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
