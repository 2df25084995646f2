//! Evolve an ellipse under `F = k` and watch it round out.
//!
//! Usage: `cargo run --release --example evolve_ellipse [OUT_DIR]`.
//! With an output directory every tenth frame is written as a polyline.

use expflow::flow::{check_expansiveness, evolve, EdgeBand, FlowConfig, StepPolicy};
use expflow::hypersurface::{inner_outer_radii, io, shapes};
use expflow::{Point, SpeedFunction};

fn main() -> expflow::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let m0 = shapes::ellipse(Point::zeros(), 2.0, 1.0, 256)?;
    let cfg = FlowConfig {
        frame_interval: Some(0.05),
        // keeps the growing polygon resolved
        remesh: Some(EdgeBand { min: 0.02, max: 0.08 }),
        ..FlowConfig::new(StepPolicy::default(), 1.0)
    };
    let traj = evolve(&m0, &SpeedFunction::mean_curvature(1), 0.0, &cfg)?;
    println!("{:>6} {:>9} {:>10} {:>10}", "t", "vertices", "area", "rho+/rho-");
    for (i, f) in traj.frames().iter().enumerate() {
        let r = inner_outer_radii(&f.surface, None)?;
        println!(
            "{:>6.2} {:>9} {:>10.5} {:>10.5}",
            f.t,
            f.surface.len(),
            f.surface.enclosed_volume(),
            r.rho_plus / r.rho_minus
        );
        if let Some(dir) = &out {
            if i % 10 == 0 {
                std::fs::create_dir_all(dir).map_err(|e| expflow::Error::Io {
                    path: dir.clone(),
                    message: e.to_string(),
                })?;
                io::write(&f.surface, &dir.join(format!("ellipse_{i:03}.txt")))?;
            }
        }
    }
    if let (Some(first), Some(last)) = (traj.events().first(), traj.events().last()) {
        println!(
            "{} events, first at t={:.3} ({}), last at t={:.3} ({})",
            traj.events().len(),
            first.t,
            first.message,
            last.t,
            last.message
        );
    }
    println!("expansive: {}", check_expansiveness(&traj, 0).pass());
    Ok(())
}
