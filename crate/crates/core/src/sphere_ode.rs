//! Round spheres under the flow.
//!
//! A sphere of radius `r` has all principal curvatures equal to `1/r`, so the
//! flow reduces to the scalar ODE `ṙ = 1/ψ(r)` with `ψ(r) = F(1/r, …, 1/r)`.
//! Separating variables gives the birth time `T₀ = t₀ − ∫₀^{r₀} ψ(r) dr`,
//! which is `−∞` exactly when the sphere is an ancient solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::speeds::{eval_speed, CurvatureVector, SpeedFunction};

/// `ψ` is never evaluated below this radius.
pub const RADIUS_FLOOR: f64 = 1e-15;
/// Number of dyadic shells `[2^{-k}, 2^{-k+1}]` in the divergence probe.
pub const PROBE_SHELLS: usize = 40;
/// Total partial integral above which the probe declares divergence.
pub const DIVERGENCE_TOTAL: f64 = 1e6;

const TAIL_SHELLS: usize = 10;
const FLAT_RATIO: f64 = 1.0 - 1e-9;
const CONTRACTING_RATIO: f64 = 0.999;

/// `ψ(r) = F(1/r, …, 1/r)`.
pub fn psi(speed: &SpeedFunction, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::validation("r", format!("radius must be positive, got {r}")));
    }
    let r = r.max(RADIUS_FLOOR);
    eval_speed(speed, &CurvatureVector::diagonal(speed.arity(), 1.0 / r))
}

/// Sampled radius history of a round sphere.
#[derive(Debug, Clone, Serialize)]
pub struct SphereFlow {
    pub center: [f64; 3],
    pub r0: f64,
    pub t0: f64,
    pub speed: String,
    pub samples: Vec<(f64, f64)>,
}

impl SphereFlow {
    pub fn final_radius(&self) -> f64 {
        self.samples.last().map_or(self.r0, |s| s.1)
    }

    /// Radius at `t` by linear interpolation between samples.
    pub fn radius_at(&self, t: f64) -> Option<f64> {
        let i = self.samples.partition_point(|s| s.0 < t);
        if i < self.samples.len() && self.samples[i].0 == t {
            return Some(self.samples[i].1);
        }
        if i == 0 || i == self.samples.len() {
            return None;
        }
        let (ta, ra) = self.samples[i - 1];
        let (tb, rb) = self.samples[i];
        Some(ra + (rb - ra) * (t - ta) / (tb - ta))
    }
}

/// Integrate `ṙ = 1/ψ(r)` from `(t0, r0)` to `t1` with classical RK4 and
/// fixed step `dt` (the last step is shortened to land on `t1`).
pub fn integrate_radius(speed: &SpeedFunction, r0: f64, t0: f64, t1: f64, dt: f64) -> Result<SphereFlow> {
    if !(t1 > t0) {
        return Err(Error::validation("t1", format!("t1 = {t1} must exceed t0 = {t0}")));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("dt", "must be positive"));
    }
    if !(r0 > 0.0) {
        return Err(Error::validation("r0", "must be positive"));
    }
    let rate = |r: f64, t: f64| -> Result<f64> {
        psi(speed, r).map(|p| 1.0 / p).map_err(|e| match e {
            Error::CurvatureOutsideCone { .. } | Error::NonPositiveSpeed { .. } => {
                Error::ConeExit { vertex: 0, t }
            }
            other => other,
        })
    };
    let mut samples = vec![(t0, r0)];
    let mut t = t0;
    let mut r = r0;
    let steps = ((t1 - t0) / dt).ceil() as usize;
    for i in 0..steps {
        let h = if i + 1 == steps { t1 - t } else { dt };
        let k1 = rate(r, t)?;
        let k2 = rate(r + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = rate(r + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = rate(r + h * k3, t + h)?;
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * dt };
        if !r.is_finite() {
            return Err(Error::NonFiniteState { t });
        }
        samples.push((t, r));
    }
    Ok(SphereFlow {
        center: [0.0; 3],
        r0,
        t0,
        speed: speed.name().to_string(),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Ancientness {
    Ancient,
    NonAncient,
}

/// One dyadic shell of the divergence probe.
#[derive(Debug, Clone, Serialize)]
pub struct ShellIntegral {
    /// Lower end `ε` of the partial integral `∫_ε^{r0} ψ`.
    pub epsilon: f64,
    pub increment: f64,
    pub partial: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AncientnessVerdict {
    pub speed: String,
    pub verdict: Ancientness,
    /// Birth time of the sphere of radius 1 at `t = 0`; `−∞` serializes as `"-inf"`.
    #[serde(serialize_with = "serialize_time")]
    pub t0_estimate: f64,
    /// `"homogeneity"` when the closed-form `α ≥ 1` rule decided, otherwise
    /// `"numeric probe"`.
    pub decided_by: &'static str,
    pub homogeneity: Option<f64>,
    pub evidence: Vec<ShellIntegral>,
}

pub(crate) fn serialize_time<S: serde::Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_finite() {
        s.serialize_f64(*t)
    } else if *t < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("+inf")
    }
}

enum Probe {
    Diverges,
    Converges(f64),
    Inconclusive(String),
}

fn shell_table(speed: &SpeedFunction, r0: f64) -> Result<Vec<ShellIntegral>> {
    let mut partial = 0.0;
    let mut out = Vec::new();
    for k in 1..=PROBE_SHELLS {
        let lo = r0 * 0.5f64.powi(k as i32);
        if lo < RADIUS_FLOOR {
            break;
        }
        let hi = 2.0 * lo;
        psi(speed, lo)?;
        let (inc, _) = quadrature::integrate(|r| psi(speed, r).unwrap_or(f64::NAN), lo, hi, 1e-12);
        if !inc.is_finite() {
            return Err(Error::IndeterminateDivergence {
                reason: format!("ψ is not integrable on [{lo:e}, {hi:e}]"),
            });
        }
        partial += inc;
        out.push(ShellIntegral {
            epsilon: lo,
            increment: inc,
            partial,
        });
    }
    Ok(out)
}

fn classify(table: &[ShellIntegral]) -> Probe {
    let Some(last) = table.last() else {
        return Probe::Inconclusive("no shells".into());
    };
    if last.partial > DIVERGENCE_TOTAL {
        return Probe::Diverges;
    }
    if table.len() < TAIL_SHELLS + 1 {
        return Probe::Inconclusive("too few shells above the radius floor".into());
    }
    let tail = &table[table.len() - TAIL_SHELLS - 1..];
    let ratios: Vec<f64> = tail
        .windows(2)
        .map(|w| w[1].increment / w[0].increment)
        .collect();
    if ratios.iter().all(|&q| q >= FLAT_RATIO) {
        return Probe::Diverges;
    }
    let q_max = ratios.iter().copied().fold(0.0, f64::max);
    if q_max <= CONTRACTING_RATIO {
        // Geometric bound on the remaining ∫₀^ε ψ.
        let tail_estimate = last.increment * q_max / (1.0 - q_max);
        return Probe::Converges(last.partial + tail_estimate);
    }
    Probe::Inconclusive(format!(
        "shell increments neither flat nor contracting (max tail ratio {q_max:.6})"
    ))
}

/// Classify spherical solutions as ancient or not.
///
/// A known homogeneity degree decides by the rule `α ≥ 1 ⟺ ancient`;
/// otherwise the dyadic shell probe is used, and an inconclusive probe is
/// reported as [`Error::IndeterminateDivergence`].
pub fn is_ancient(speed: &SpeedFunction) -> Result<AncientnessVerdict> {
    let evidence = shell_table(speed, 1.0)?;
    let probe = classify(&evidence);
    let (verdict, t0_estimate, decided_by) = match (speed.homogeneity(), probe) {
        (Some(alpha), probe) => {
            if alpha >= 1.0 {
                (Ancientness::Ancient, f64::NEG_INFINITY, "homogeneity")
            } else {
                let psi1 = psi(speed, 1.0)?;
                let integral = match probe {
                    Probe::Converges(v) => v,
                    _ => psi1 / (1.0 - alpha),
                };
                (Ancientness::NonAncient, -integral, "homogeneity")
            }
        }
        (None, Probe::Diverges) => (Ancientness::Ancient, f64::NEG_INFINITY, "numeric probe"),
        (None, Probe::Converges(v)) => (Ancientness::NonAncient, -v, "numeric probe"),
        (None, Probe::Inconclusive(reason)) => {
            return Err(Error::IndeterminateDivergence { reason })
        }
    };
    Ok(AncientnessVerdict {
        speed: speed.name().to_string(),
        verdict,
        t0_estimate,
        decided_by,
        homogeneity: speed.homogeneity(),
        evidence,
    })
}

/// Birth time `T₀ = t₀ − ∫₀^{r₀} ψ(r) dr` of the sphere of radius `r0` at
/// `t0`, or `−∞` when the integral diverges.
pub fn initial_time_estimate(speed: &SpeedFunction, r0: f64, t0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(Error::validation("r0", "must be positive"));
    }
    if let Some(alpha) = speed.homogeneity() {
        if alpha >= 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
    }
    let table = shell_table(speed, r0)?;
    match classify(&table) {
        Probe::Diverges => Ok(f64::NEG_INFINITY),
        Probe::Converges(v) => Ok(t0 - v),
        Probe::Inconclusive(reason) => match speed.homogeneity() {
            Some(alpha) => Ok(t0 - psi(speed, r0)? * r0 / (1.0 - alpha)),
            None => Err(Error::IndeterminateDivergence { reason }),
        },
    }
}
