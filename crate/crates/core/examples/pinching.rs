//! Pinching quantities along three families.

use std::sync::Arc;

use expflow::families::{time_grid, EllipseFamily, FrameSource, Resolution, SphereFamily};
use expflow::flow::Trajectory;
use expflow::rigidity::pinching_diagnostics;
use expflow::Point;

fn main() -> expflow::Result<()> {
    let res = Resolution::Polygon(256);
    let families: Vec<Arc<dyn FrameSource>> = vec![
        Arc::new(SphereFamily::exponential(Point::zeros(), res, 1.0, 1.0)),
        // homothetic ellipses (2e^t, e^t)
        Arc::new(EllipseFamily::new(Point::zeros(), res, [2.0, 1.0, 1.0], [1.0, 1.0, 0.0])),
        Arc::new(EllipseFamily::distinct_rates(256)),
    ];
    for fam in families {
        let traj = Trajectory::from_family(fam.clone(), &time_grid(-4.0, 0.0, 41))?;
        let rep = pinching_diagnostics(&traj, Point::zeros(), 0.05)?;
        println!("{}", fam.describe());
        println!(
            "  inf rho-/rho+ {:.4}  inf k_min/k_max {:.4}  inf starshapedness {:.4}  eps0 {:?}  confirmed {:?}",
            rep.inf_radius_ratio, rep.inf_curvature_ratio, rep.inf_starshapedness, rep.epsilon0, rep.implication_confirmed
        );
    }
    Ok(())
}
