//! Speed functions `F(λ₁,…,λₙ)` of the principal curvatures.
//!
//! A [`SpeedFunction`] bundles an evaluation rule, an optional closed-form
//! gradient, an optional homogeneity degree and the admissible [`Cone`] it is
//! defined on. The flow moves each point with normal velocity `1/F`, so the
//! standing requirements are positivity of `F`, strict monotonicity in every
//! argument and symmetry under permutation of the curvatures. Those
//! requirements are checked by sampling in [`check_admissibility`]; a passing
//! report means "sampled pass", nothing stronger.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative finite-difference step used when no closed-form gradient exists.
pub const FD_RELATIVE_STEP: f64 = 1e-5;
/// Absolute floor for the finite-difference step.
pub const FD_ABSOLUTE_FLOOR: f64 = 1e-8;

/// Principal curvatures at one point, `n ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureVector {
    values: [f64; 2],
    dim: usize,
}

impl CurvatureVector {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len() > 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(
                "curvature",
                format!("non-finite entry in {values:?}"),
            ));
        }
        let mut buf = [0.0; 2];
        buf[..values.len()].copy_from_slice(values);
        Ok(Self {
            values: buf,
            dim: values.len(),
        })
    }

    /// The umbilic tuple `(λ, …, λ)`.
    pub fn diagonal(dim: usize, lambda: f64) -> Self {
        assert!(dim == 1 || dim == 2, "only n = 1 and n = 2 are supported");
        Self {
            values: [lambda, if dim == 2 { lambda } else { 0.0 }],
            dim,
        }
    }

    pub(crate) fn from_raw(values: [f64; 2], dim: usize) -> Self {
        Self { values, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn min(&self) -> f64 {
        self.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.as_slice()
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Coordinates reversed; for `n ≤ 2` this enumerates every permutation.
    pub fn swapped(&self) -> Self {
        let mut out = *self;
        if self.dim == 2 {
            out.values.swap(0, 1);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for v in &mut out.values[..self.dim] {
            *v *= s;
        }
        out
    }
}

type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeKind {
    PositiveCone,
    FullSpaceMinusOrigin,
    CustomPredicate,
}

/// Domain of a speed function: an open symmetric cone containing the
/// positive diagonal.
#[derive(Clone)]
pub struct Cone {
    kind: ConeKind,
    predicate: Option<Predicate>,
    description: String,
}

impl fmt::Debug for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cone")
            .field("kind", &self.kind)
            .field("description", &self.description)
            .finish()
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

impl Cone {
    pub fn positive() -> Self {
        Self {
            kind: ConeKind::PositiveCone,
            predicate: None,
            description: "positive cone {λᵢ > 0}".into(),
        }
    }

    pub fn full_space_minus_origin() -> Self {
        Self {
            kind: ConeKind::FullSpaceMinusOrigin,
            predicate: None,
            description: "ℝⁿ \\ {0}".into(),
        }
    }

    pub fn custom(
        description: impl Into<String>,
        predicate: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: ConeKind::CustomPredicate,
            predicate: Some(Arc::new(predicate)),
            description: description.into(),
        }
    }

    pub fn kind(&self) -> ConeKind {
        self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        if lambda.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self.kind {
            ConeKind::PositiveCone => lambda.iter().all(|&v| v > 0.0),
            ConeKind::FullSpaceMinusOrigin => lambda.iter().any(|&v| v != 0.0),
            ConeKind::CustomPredicate => self.predicate.as_ref().is_some_and(|p| p(lambda)),
        }
    }

    /// Scale-free distance to the cone boundary.
    ///
    /// For the positive cone this is `min λᵢ / max |λᵢ|`; negative values mean
    /// the tuple is outside. Custom cones only report `1` (inside) or `-1`.
    pub fn relative_margin(&self, lambda: &[f64]) -> f64 {
        match self.kind {
            ConeKind::PositiveCone => {
                let scale = lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if scale == 0.0 {
                    return -1.0;
                }
                lambda.iter().copied().fold(f64::INFINITY, f64::min) / scale
            }
            _ => {
                if self.contains(lambda) {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A symmetric speed `F` on a cone `Γ`.
///
/// Values are immutable once built and cheap to clone.
#[derive(Clone)]
pub struct SpeedFunction {
    name: String,
    arity: usize,
    cone: Cone,
    eval: EvalFn,
    gradient: Option<GradFn>,
    homogeneity: Option<f64>,
    builtin: bool,
}

impl fmt::Debug for SpeedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpeedFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("cone", &self.cone)
            .field("homogeneity", &self.homogeneity)
            .finish()
    }
}

impl SpeedFunction {
    /// A user-supplied speed. Gradient and homogeneity can be attached with
    /// [`with_gradient`](Self::with_gradient) and
    /// [`with_homogeneity`](Self::with_homogeneity).
    pub fn custom(
        name: impl Into<String>,
        arity: usize,
        cone: Cone,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(arity == 1 || arity == 2, "only n = 1 and n = 2 are supported");
        Self {
            name: name.into(),
            arity,
            cone,
            eval: Arc::new(eval),
            gradient: None,
            homogeneity: None,
            builtin: false,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    pub fn with_homogeneity(mut self, alpha: f64) -> Self {
        self.homogeneity = Some(alpha);
        self
    }

    /// The same rule with the declared homogeneity removed, so that
    /// classification falls back to numerical evidence.
    pub fn without_homogeneity(mut self) -> Self {
        self.homogeneity = None;
        self
    }

    /// Mean curvature `H = Σλᵢ` (the curvature `k` when `n = 1`).
    pub fn mean_curvature(arity: usize) -> Self {
        let name = if arity == 1 { "k" } else { "H" };
        let mut f = Self::custom(name, arity, Cone::positive(), |l| l.iter().sum())
            .with_gradient(|_, g| g.iter_mut().for_each(|v| *v = 1.0))
            .with_homogeneity(1.0);
        f.builtin = true;
        f
    }

    /// `H^α` for `α > 0`.
    pub fn mean_curvature_power(arity: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::validation("alpha", format!("must be > 0, got {alpha}")));
        }
        let base = if arity == 1 { "k" } else { "H" };
        let mut f = Self::custom(
            format!("{base}^{alpha}"),
            arity,
            Cone::positive(),
            move |l| l.iter().sum::<f64>().powf(alpha),
        )
        .with_gradient(move |l, g| {
            let h: f64 = l.iter().sum();
            let d = alpha * h.powf(alpha - 1.0);
            g.iter_mut().for_each(|v| *v = d);
        })
        .with_homogeneity(alpha);
        f.builtin = true;
        Ok(f)
    }

    /// Gauss–Kronecker curvature `K = Πλᵢ`, homogeneous of degree `n`.
    pub fn gauss_curvature(arity: usize) -> Self {
        let mut f = Self::custom("K", arity, Cone::positive(), |l| l.iter().product())
            .with_gradient(|l, g| {
                for i in 0..l.len() {
                    g[i] = l
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, v)| v)
                        .product();
                }
            })
            .with_homogeneity(arity as f64);
        f.builtin = true;
        f
    }

    /// Normalised elementary symmetric root `σ_m^{1/m}`, homogeneous of degree 1.
    pub fn elementary_root(arity: usize, order: usize) -> Result<Self> {
        if order == 0 || order > arity {
            return Err(Error::validation(
                "order",
                format!("σ_m requires 1 ≤ m ≤ n = {arity}, got {order}"),
            ));
        }
        let m = order as f64;
        let mut f = Self::custom(
            format!("sigma{order}^(1/{order})"),
            arity,
            Cone::positive(),
            move |l| elementary_symmetric(l, order).powf(1.0 / m),
        )
        .with_gradient(move |l, g| {
            let s = elementary_symmetric(l, order);
            let outer = s.powf(1.0 / m - 1.0) / m;
            let mut rest = [0.0; 2];
            for i in 0..l.len() {
                let mut k = 0;
                for (j, &v) in l.iter().enumerate() {
                    if j != i {
                        rest[k] = v;
                        k += 1;
                    }
                }
                g[i] = outer * elementary_symmetric(&rest[..k], order - 1);
            }
        })
        .with_homogeneity(1.0);
        f.builtin = true;
        Ok(f)
    }

    /// `H + K`, a monotone speed with no homogeneity degree.
    pub fn mean_plus_gauss(arity: usize) -> Self {
        let mut f = Self::custom("H+K", arity, Cone::positive(), |l| {
            l.iter().sum::<f64>() + l.iter().product::<f64>()
        })
        .with_gradient(|l, g| {
            for i in 0..l.len() {
                let others: f64 = l
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v)
                    .product();
                g[i] = 1.0 + others;
            }
        });
        f.builtin = true;
        f
    }

    /// Look up a catalog speed by name: `k`, `H`, `k^alpha`, `H^alpha`, `K`,
    /// `sigma2^(1/2)`, `H+K`.
    pub fn from_name(name: &str, arity: usize, alpha: Option<f64>) -> Result<Self> {
        if arity != 1 && arity != 2 {
            return Err(Error::validation("speed.dimension", "must be 1 or 2"));
        }
        let need_alpha = || {
            alpha.ok_or_else(|| Error::validation("speed.alpha", format!("`{name}` needs alpha")))
        };
        match name {
            "k" | "H" => Ok(Self::mean_curvature(arity)),
            "k^alpha" | "H^alpha" => Self::mean_curvature_power(arity, need_alpha()?),
            "K" => Ok(Self::gauss_curvature(arity)),
            "sigma2^(1/2)" => Self::elementary_root(arity, 2),
            "H+K" => Ok(Self::mean_plus_gauss(arity)),
            other => Err(Error::validation("speed.name", format!("unknown speed `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cone(&self) -> &Cone {
        &self.cone
    }

    pub fn homogeneity(&self) -> Option<f64> {
        self.homogeneity
    }

    pub fn has_closed_form_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn is_builtin(&self) -> bool {
        self.builtin
    }

    /// Raw evaluation with no cone or sign checks.
    #[inline]
    pub fn value_unchecked(&self, lambda: &[f64]) -> f64 {
        (self.eval)(lambda)
    }

    /// Gradient `∂F/∂λᵢ`, closed form when available, otherwise central
    /// differences with step `max(10⁻⁵|λᵢ|, 10⁻⁸)`.
    pub fn gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; lambda.len()];
        match &self.gradient {
            Some(grad) => grad(lambda, &mut g),
            None => finite_difference_gradient(&*self.eval, lambda, &mut g),
        }
        g
    }

    /// Gradient by central differences regardless of any closed form.
    pub fn gradient_fd(&self, lambda: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; lambda.len()];
        finite_difference_gradient(&*self.eval, lambda, &mut g);
        g
    }
}

fn finite_difference_gradient(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), lambda: &[f64], out: &mut [f64]) {
    let mut probe = [0.0; 2];
    let n = lambda.len();
    probe[..n].copy_from_slice(lambda);
    for i in 0..n {
        let h = (FD_RELATIVE_STEP * lambda[i].abs()).max(FD_ABSOLUTE_FLOOR);
        probe[i] = lambda[i] + h;
        let up = f(&probe[..n]);
        probe[i] = lambda[i] - h;
        let down = f(&probe[..n]);
        probe[i] = lambda[i];
        out[i] = (up - down) / (2.0 * h);
    }
}

/// Elementary symmetric polynomial `σ_m` of the entries.
pub fn elementary_symmetric(values: &[f64], order: usize) -> f64 {
    // e[j] accumulates σ_j of the prefix.
    let mut e = [1.0, 0.0, 0.0];
    for &v in values {
        for j in (1..=order.min(2)).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[order.min(2)]
}

/// `F(λ)` with cone membership and positivity enforced.
pub fn eval_speed(speed: &SpeedFunction, lambda: &CurvatureVector) -> Result<f64> {
    if lambda.dim() != speed.arity {
        return Err(Error::DimensionMismatch {
            expected: speed.arity,
            got: lambda.dim(),
        });
    }
    let l = lambda.as_slice();
    if !speed.cone.contains(l) {
        return Err(Error::CurvatureOutsideCone {
            values: l.to_vec(),
            cone: speed.cone.description.clone(),
        });
    }
    let value = speed.value_unchecked(l);
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NonPositiveSpeed {
            values: l.to_vec(),
            value,
        });
    }
    Ok(value)
}

/// Where [`check_admissibility`] samples the cone.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingPlan {
    /// Magnitudes used on the diagonal and as scales for off-diagonal points.
    pub magnitudes: Vec<f64>,
    /// Random anisotropic points drawn per magnitude.
    pub off_diagonal_per_magnitude: usize,
    /// Extra points checked verbatim.
    pub extra_points: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            magnitudes: vec![1e-2, 1e-1, 1.0, 1e1, 1e2],
            off_diagonal_per_magnitude: 32,
            extra_points: Vec::new(),
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Every point of the plan, in or out of the cone.
    pub fn points(&self, arity: usize, cone: &Cone) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let signed = cone.kind() != ConeKind::PositiveCone;
        let mut out = Vec::new();
        for &m in &self.magnitudes {
            out.push(vec![m; arity]);
            for _ in 0..self.off_diagonal_per_magnitude {
                let p: Vec<f64> = (0..arity)
                    .map(|_| {
                        let v = m * 2f64.powf(rng.gen_range(-2.0..2.0));
                        if signed && rng.gen_bool(0.25) {
                            -v
                        } else {
                            v
                        }
                    })
                    .collect();
                out.push(p);
            }
        }
        out.extend(self.extra_points.iter().cloned());
        out
    }
}

/// Per-point outcome of an admissibility sweep.
#[derive(Debug, Clone, Serialize)]
pub struct PointVerdict {
    pub lambda: Vec<f64>,
    pub value: f64,
    pub positive: bool,
    pub gradient: Vec<f64>,
    pub monotone: bool,
    pub symmetry_residual: f64,
    pub symmetric: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub speed: String,
    pub cone: String,
    pub gradient_method: &'static str,
    pub points: Vec<PointVerdict>,
    pub skipped_outside_cone: usize,
    /// Always "sampled pass" or "sampled fail": the hypotheses are checked
    /// on samples, never proved.
    pub summary: String,
    pub pass: bool,
}

impl AdmissibilityReport {
    pub fn failures(&self) -> impl Iterator<Item = &PointVerdict> {
        self.points
            .iter()
            .filter(|p| !(p.positive && p.monotone && p.symmetric))
    }
}

/// Check positivity, monotonicity and symmetry of `F` on a sample of `Γ`.
pub fn check_admissibility(speed: &SpeedFunction, plan: &SamplingPlan) -> Result<AdmissibilityReport> {
    let mut points = Vec::new();
    let mut skipped = 0;
    for lambda in plan.points(speed.arity, &speed.cone) {
        if !speed.cone.contains(&lambda) {
            skipped += 1;
            continue;
        }
        let value = speed.value_unchecked(&lambda);
        let gradient = speed.gradient(&lambda);
        let mut swapped = lambda.clone();
        swapped.reverse();
        let residual = (value - speed.value_unchecked(&swapped)).abs();
        let symmetric = if speed.builtin {
            residual == 0.0
        } else {
            residual <= 1e-12 * value.abs().max(f64::MIN_POSITIVE)
        };
        points.push(PointVerdict {
            positive: value > 0.0 && value.is_finite(),
            monotone: gradient.iter().all(|&g| g > 0.0),
            gradient,
            value,
            symmetry_residual: residual,
            symmetric,
            lambda,
        });
    }
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let pass = points.iter().all(|p| p.positive && p.monotone && p.symmetric);
    Ok(AdmissibilityReport {
        speed: speed.name.clone(),
        cone: speed.cone.description.clone(),
        gradient_method: if speed.gradient.is_some() {
            "closed form"
        } else {
            "central differences"
        },
        points,
        skipped_outside_cone: skipped,
        summary: if pass { "sampled pass" } else { "sampled fail" }.to_string(),
        pass,
    })
}

/// Estimate the homogeneity degree from `log F(sλ) − log F(λ) = α log s`.
///
/// Returns `None` when the per-scale estimates disagree by more than `1e-8`.
pub fn homogeneity_degree(
    speed: &SpeedFunction,
    probe: &CurvatureVector,
    scales: &[f64],
) -> Result<Option<f64>> {
    let base = eval_speed(speed, probe)?.ln();
    let mut estimates = Vec::with_capacity(scales.len());
    for &s in scales {
        if !(s > 0.0) || s == 1.0 {
            return Err(Error::validation("scales", format!("scale {s} must be positive and ≠ 1")));
        }
        let v = eval_speed(speed, &probe.scaled(s))?.ln();
        estimates.push((v - base) / s.ln());
    }
    let Some(&first) = estimates.first() else {
        return Ok(None);
    };
    if estimates.iter().all(|a| (a - first).abs() <= 1e-8 * first.abs().max(1.0)) {
        Ok(Some(estimates.iter().sum::<f64>() / estimates.len() as f64))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(v: &[f64]) -> CurvatureVector {
        CurvatureVector::new(v).unwrap()
    }

    #[test]
    fn catalog_values() {
        let h = SpeedFunction::mean_curvature(2);
        assert_eq!(eval_speed(&h, &cv(&[1.0, 1.0])).unwrap(), 2.0);
        let k = SpeedFunction::gauss_curvature(2);
        assert_eq!(eval_speed(&k, &cv(&[2.0, 3.0])).unwrap(), 6.0);
        let h2 = SpeedFunction::mean_curvature_power(2, 2.0).unwrap();
        assert_eq!(eval_speed(&h2, &cv(&[0.5, 0.5])).unwrap(), 1.0);
    }

    #[test]
    fn outside_cone_and_nonpositive() {
        let h = SpeedFunction::mean_curvature(2);
        assert!(matches!(
            eval_speed(&h, &cv(&[-1.0, 1.0])),
            Err(Error::CurvatureOutsideCone { .. })
        ));
        let neg = SpeedFunction::custom("-H", 2, Cone::positive(), |l| -(l[0] + l[1]));
        assert!(matches!(
            eval_speed(&neg, &cv(&[1.0, 1.0])),
            Err(Error::NonPositiveSpeed { .. })
        ));
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(SpeedFunction::mean_curvature_power(1, -1.0).is_err());
        assert!(SpeedFunction::mean_curvature_power(1, 0.0).is_err());
    }

    #[test]
    fn admissibility_of_h_and_minus_h() {
        let plan = SamplingPlan::default();
        let report = check_admissibility(&SpeedFunction::mean_curvature(2), &plan).unwrap();
        assert!(report.pass);
        assert_eq!(report.summary, "sampled pass");

        let neg = SpeedFunction::custom("-H", 2, Cone::positive(), |l| -(l[0] + l[1]));
        let report = check_admissibility(&neg, &plan).unwrap();
        assert!(!report.pass);
        assert!(report.points.iter().all(|p| !p.positive));
    }

    #[test]
    fn saddle_speed_fails_monotonicity_at_1_2() {
        let f = SpeedFunction::custom("H-K", 2, Cone::positive(), |l| {
            l[0] + l[1] - l[0] * l[1]
        });
        // analytic partial: ∂F/∂λ₁ = 1 − λ₂
        let g = f.gradient(&[1.0, 2.0]);
        assert!((g[0] - (1.0 - 2.0)).abs() < 1e-8, "{g:?}");
        assert!((g[1] - (1.0 - 1.0)).abs() < 1e-8, "{g:?}");

        let plan = SamplingPlan {
            extra_points: vec![vec![1.0, 2.0]],
            ..SamplingPlan::default()
        };
        let report = check_admissibility(&f, &plan).unwrap();
        assert!(!report.pass);
        let at = report
            .points
            .iter()
            .find(|p| p.lambda == vec![1.0, 2.0])
            .unwrap();
        assert!(!at.monotone);
        assert_eq!(report.gradient_method, "central differences");
    }

    #[test]
    fn empty_sample() {
        let f = SpeedFunction::custom("x", 1, Cone::custom("empty", |_| false), |l| l[0]);
        assert!(matches!(
            check_admissibility(&f, &SamplingPlan::default()),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn homogeneity_probe() {
        let probe = cv(&[1.0, 1.0]);
        let scales = [2.0, 4.0];
        let h = SpeedFunction::mean_curvature(2);
        let a = homogeneity_degree(&h, &probe, &scales).unwrap().unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        let k = SpeedFunction::gauss_curvature(2);
        let a = homogeneity_degree(&k, &probe, &scales).unwrap().unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        // H + K at (1,1): log(8/3)/log 2 ≈ 1.415 vs log 8/log 4 = 1.5
        let hk = SpeedFunction::mean_plus_gauss(2);
        assert_eq!(homogeneity_degree(&hk, &probe, &scales).unwrap(), None);
    }

    #[test]
    fn elementary_symmetric_values() {
        assert_eq!(elementary_symmetric(&[2.0, 3.0], 1), 5.0);
        assert_eq!(elementary_symmetric(&[2.0, 3.0], 2), 6.0);
        assert_eq!(elementary_symmetric(&[], 0), 1.0);
        let s = SpeedFunction::elementary_root(2, 2).unwrap();
        assert!((eval_speed(&s, &cv(&[4.0, 9.0])).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn positive_cone_margin() {
        let c = Cone::positive();
        assert_eq!(c.relative_margin(&[1.0, 4.0]), 0.25);
        assert!(c.relative_margin(&[-1.0, 4.0]) < 0.0);
    }
}
