//! Under `F = k^{1/2}` spheres are born at a finite time, so nothing
//! enclosing a ball can be ancient. A family of circles claimed to exist
//! since `t = -6` is caught by comparison with a sphere.

use std::sync::Arc;

use expflow::families::{time_grid, Resolution, SphereFamily};
use expflow::flow::Trajectory;
use expflow::rigidity::{ancient_nonexistence_check, NonexistenceVerdict};
use expflow::sphere_ode::is_ancient;
use expflow::{Point, SpeedFunction};

fn circles(t0: f64) -> expflow::Result<Trajectory> {
    // r(t) = (1 + t/2)² solves ṙ = √r and vanishes at t = -2
    let fam = SphereFamily::new(Point::zeros(), Resolution::Polygon(256), "(1 + t/2)^2", |t| (1.0 + t / 2.0).powi(2));
    Trajectory::from_family(Arc::new(fam), &time_grid(t0, 0.0, 600))
}

fn main() -> expflow::Result<()> {
    let speed = SpeedFunction::mean_curvature_power(1, 0.5)?;
    let v = is_ancient(&speed)?;
    println!("spheres under {}: {:?}, unit circle born at t = {:.4}", speed.name(), v.verdict, v.t0_estimate);
    for t0 in [-1.99, -6.0] {
        match ancient_nonexistence_check(&speed, &circles(t0)?)? {
            NonexistenceVerdict::Consistent { reason } => println!("frames from t = {t0}: consistent ({reason})"),
            NonexistenceVerdict::Contradiction { witness } => println!(
                "frames from t = {t0}: contradiction, comparison sphere born at {:.4} reaches radius {:.4} > rho- = {:.4}",
                witness.t_sphere_birth, witness.comparison_radius_t, witness.rho_minus_t
            ),
        }
    }
    Ok(())
}
