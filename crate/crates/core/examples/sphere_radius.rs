//! Round spheres stay round and their radius solves `ṙ = 1/ψ(r)`.
//!
//! Prints `r(1/2)` for a few speeds next to the closed form, and the birth
//! time of the unit sphere at `t = 0`.

use expflow::sphere_ode::{initial_time_estimate, integrate_radius, psi};
use expflow::SpeedFunction;

fn main() -> expflow::Result<()> {
    let cases: Vec<(SpeedFunction, Box<dyn Fn(f64) -> f64>)> = vec![
        (SpeedFunction::mean_curvature(1), Box::new(|t: f64| t.exp())),
        (SpeedFunction::mean_curvature(2), Box::new(|t: f64| (t / 2.0).exp())),
        // ṙ = √r
        (SpeedFunction::mean_curvature_power(1, 0.5)?, Box::new(|t: f64| (1.0 + t / 2.0).powi(2))),
        // ṙ = r², blowing up at t = 1
        (SpeedFunction::gauss_curvature(2), Box::new(|t: f64| 1.0 / (1.0 - t))),
    ];
    println!("{:<14} {:>10} {:>16} {:>16} {:>10}", "speed", "psi(1)", "r(1/2) numeric", "r(1/2) exact", "birth");
    for (speed, exact) in &cases {
        let flow = integrate_radius(speed, 1.0, 0.0, 0.5, 1e-3)?;
        let birth = initial_time_estimate(speed, 1.0, 0.0)?;
        println!(
            "{:<14} {:>10.4} {:>16.10} {:>16.10} {:>10.4}",
            speed.name(),
            psi(speed, 1.0)?,
            flow.final_radius(),
            exact(0.5),
            birth
        );
    }
    Ok(())
}
