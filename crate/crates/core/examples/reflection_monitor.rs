//! Strict reflection across planes `x = c`, tracked along an evolving ellipse.

use expflow::flow::{evolve, FlowConfig, StepPolicy};
use expflow::hypersurface::shapes;
use expflow::reflection::{first_touch_time, monitor_reflection, strict_reflection_check, Hyperplane, ReflectionTolerances};
use expflow::{Error, Point, SpeedFunction};

fn main() -> expflow::Result<()> {
    let m0 = shapes::ellipse(Point::zeros(), 2.0, 1.0, 256)?;
    let tol = ReflectionTolerances::default();
    for c in [-0.2, 0.0, 0.2, 1.0] {
        let plane = Hyperplane::new(Point::new(1.0, 0.0, 0.0), c)?;
        println!("t=0, c={c:>5}: {:?}", strict_reflection_check(&m0, &plane, &tol).status);
    }

    let cfg = FlowConfig {
        frame_interval: Some(0.02),
        ..FlowConfig::new(StepPolicy::default(), 1.0)
    };
    let traj = evolve(&m0, &SpeedFunction::mean_curvature(1), 0.0, &cfg)?;
    let plane = Hyperplane::new(Point::new(1.0, 0.0, 0.0), 0.2)?;
    let report = monitor_reflection(&traj, &plane, 0.0, &tol)?;
    println!("x = 0.2 over {} frames: all strict = {}", report.verdicts.len(), report.all_strict());

    // a plane beyond the tip is only reached later
    let far = Hyperplane::new(Point::new(1.0, 0.0, 0.0), 2.5)?;
    match first_touch_time(&traj, &far) {
        Ok(t) => println!("x = 2.5 is first touched at t = {t:.5}"),
        Err(Error::NeverTouches) => println!("x = 2.5 is never touched"),
        Err(e) => return Err(e),
    }
    Ok(())
}
