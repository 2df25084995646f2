//! Sampled admissibility and sphere ancientness over the built-in speeds.

use expflow::speeds::{check_admissibility, homogeneity_degree, SamplingPlan};
use expflow::sphere_ode::is_ancient;
use expflow::{CurvatureVector, SpeedFunction};

fn main() -> expflow::Result<()> {
    let plan = SamplingPlan::with_seed(2024);
    let mut speeds = vec![
        SpeedFunction::mean_curvature(1),
        SpeedFunction::mean_curvature(2),
        SpeedFunction::gauss_curvature(2),
        SpeedFunction::from_name("sigma2^(1/2)", 2, None)?,
        SpeedFunction::mean_plus_gauss(2),
    ];
    for alpha in [0.5, 1.0, 2.0] {
        speeds.push(SpeedFunction::mean_curvature_power(2, alpha)?);
    }
    println!("{:<16} {:>13} {:>8} {:>11} {:>14}", "speed", "admissible", "alpha", "spheres", "birth of r=1");
    for f in &speeds {
        let adm = check_admissibility(f, &plan)?;
        let probe = CurvatureVector::diagonal(f.arity(), 1.0);
        let alpha = homogeneity_degree(f, &probe, &[0.5, 2.0])?;
        let v = is_ancient(f)?;
        println!(
            "{:<16} {:>13} {:>8} {:>11} {:>14.4}",
            f.name(),
            adm.summary,
            alpha.map_or("-".into(), |a| format!("{a:.3}")),
            format!("{:?}", v.verdict),
            v.t0_estimate
        );
    }
    Ok(())
}
