//! Evolve an ellipsoid under several surface speeds.

use expflow::flow::{evolve, flow_residual, FlowConfig, StepPolicy};
use expflow::hypersurface::{compute_curvatures, shapes};
use expflow::{Point, SpeedFunction};

fn main() -> expflow::Result<()> {
    let m0 = shapes::ellipsoid(Point::zeros(), [1.5, 1.0, 1.0], 3)?;
    println!("{} vertices, volume {:.5}", m0.len(), m0.enclosed_volume());
    for name in ["H", "K", "sigma2^(1/2)", "H+K"] {
        let speed = SpeedFunction::from_name(name, 2, None)?;
        let cfg = FlowConfig {
            frame_interval: Some(0.02),
            ..FlowConfig::new(StepPolicy::default(), 0.2)
        };
        let traj = evolve(&m0, &speed, 0.0, &cfg)?;
        let last = traj.last().unwrap();
        let k = compute_curvatures(&last.surface)?;
        let residual = flow_residual(&traj, &speed)?.iter().map(|r| r.max).fold(0.0, f64::max);
        println!(
            "{:<14} volume {:.5}  curvature [{:.4}, {:.4}]  max residual {:.2e}",
            name,
            last.surface.enclosed_volume(),
            k.min_curvature(),
            k.max_curvature(),
            residual
        );
    }
    Ok(())
}
