//! Mesh files, enclosure queries and curvature estimates.

use expflow::hypersurface::{compute_curvatures, inner_outer_radii, io, shapes};
use expflow::Point;

fn main() -> expflow::Result<()> {
    let dir = std::env::temp_dir().join("expflow-mesh-io");
    std::fs::create_dir_all(&dir).map_err(|e| expflow::Error::Io {
        path: dir.clone(),
        message: e.to_string(),
    })?;

    let curve = shapes::ellipse(Point::new(0.5, 0.0, 0.0), 2.0, 1.0, 128)?;
    let surf = shapes::perturbed_sphere(Point::zeros(), 1.0, 3, |p| 0.1 * p.z * p.z)?;
    io::write(&curve, &dir.join("ellipse.txt"))?;
    io::write(&surf, &dir.join("bumpy.obj"))?;

    for name in ["ellipse.txt", "bumpy.obj"] {
        let m = io::read(&dir.join(name))?;
        let k = compute_curvatures(&m)?;
        let (c, rho) = m.chebyshev_center()?;
        let r = inner_outer_radii(&m, Some(c))?;
        println!(
            "{name}: n={} {} vertices, volume {:.5}, curvature [{:.4}, {:.4}], inscribed radius {:.4}, rho+ {:.4}",
            m.dim(),
            m.len(),
            m.enclosed_volume(),
            k.min_curvature(),
            k.max_curvature(),
            rho,
            r.rho_plus
        );
        for p in [c, Point::new(5.0, 0.0, 0.0)] {
            println!("  {:?} -> {:?}, signed distance {:.4}", p.as_slice(), m.contains_point(p, None), m.signed_distance(p));
        }
    }
    println!("files in {}", dir.display());
    Ok(())
}
