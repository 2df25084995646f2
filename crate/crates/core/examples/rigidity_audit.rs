//! Moving-plane audit of two families that come out of the origin.
//!
//! Expanding circles pass. Ellipses with axes `(e^t, e^{2t})` also shrink to
//! the origin but are not a flow solution, and the audit rejects them.

use std::sync::Arc;

use expflow::families::{time_grid, EllipseFamily, FrameSource, Resolution, SphereFamily};
use expflow::flow::Trajectory;
use expflow::reflection::sample_directions;
use expflow::rigidity::{rigidity_audit, AuditOptions};
use expflow::{Point, SpeedFunction};

fn main() -> expflow::Result<()> {
    let speed = SpeedFunction::mean_curvature(1);
    let times = time_grid(-6.0, 0.0, 601);
    let families: Vec<Arc<dyn FrameSource>> = vec![
        Arc::new(SphereFamily::exponential(Point::zeros(), Resolution::Polygon(256), 1.0, 1.0)),
        Arc::new(EllipseFamily::distinct_rates(256)),
    ];
    for fam in families {
        let traj = Trajectory::from_family(fam.clone(), &times)?;
        let opts = AuditOptions::new(sample_directions(1, 16), vec![0.4, 0.2, 0.1, 0.05]);
        let report = rigidity_audit(&traj, Some(&speed), Point::zeros(), &opts)?;
        println!("{}: {}", fam.describe(), if report.pass { "PASS" } else { "FAIL" });
        for line in &report.narrative {
            println!("  {line}");
        }
        let first = report.tau_table.iter().take(4);
        for e in first {
            println!("  tau(V={:.3?}, c={}) = {:?}", &e.direction[..2], e.c, e.tau);
        }
    }
    Ok(())
}
