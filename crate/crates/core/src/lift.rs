//! The correspondence between antisymmetric functions on ℝⁿ and 3-isotropic
//! functions on ℝⁿ⁺², isotropic symmetrization, the weighted L¹ norms 𝒜_s and
//! ℒ_s, and mollification.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive_budget, half_line, integrate_space, GaussLegendre, SphereRule};
use crate::special::sphere_area;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Guard = Arc<dyn Fn(&[f64]) -> Result<()> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    None,
    Antisymmetric,
    Symmetric,
    Isotropic3,
}

/// |f(x)| ≤ constant·(1 + |x|)^(−exponent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    pub constant: f64,
    pub exponent: f64,
}

/// An evaluable scalar function on ℝᵈ with symmetry and regularity metadata.
#[derive(Clone)]
pub struct Field {
    dim: usize,
    eval: PointFn,
    pub symmetry: Symmetry,
    /// Declared regularity class, e.g. 2s + δ.
    pub smoothness: f64,
    pub decay: Option<DecayBound>,
    normal_derivative: Option<PointFn>,
    guard: Option<Guard>,
    /// The field vanishes outside this ball, when known.
    pub support_radius: Option<f64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("dim", &self.dim)
            .field("symmetry", &self.symmetry)
            .field("smoothness", &self.smoothness)
            .field("decay", &self.decay)
            .field("normal_derivative", &self.normal_derivative.is_some())
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl Field {
    pub fn new<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Arc::new(f),
            symmetry: Symmetry::None,
            smoothness: f64::INFINITY,
            decay: None,
            normal_derivative: None,
            guard: None,
            support_radius: None,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, |_| 0.0).with_decay(0.0, 64.0).with_support_radius(0.0)
    }

    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn with_smoothness(mut self, smoothness: f64) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn with_decay(mut self, constant: f64, exponent: f64) -> Self {
        self.decay = Some(DecayBound { constant, exponent });
        self
    }

    pub fn with_support_radius(mut self, radius: f64) -> Self {
        self.support_radius = Some(radius);
        self
    }

    /// ∂₁f(0, x′) as a function of x′ ∈ ℝ^(d−1).
    pub fn with_normal_derivative<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.normal_derivative = Some(Arc::new(f));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Evaluation that reports points the field cannot be evaluated at.
    pub fn try_eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!("point of length {} for a field on R^{}", x.len(), self.dim)));
        }
        if let Some(g) = &self.guard {
            g(x)?;
        }
        Ok(self.eval(x))
    }

    pub fn normal_derivative(&self, rest: &[f64]) -> Option<f64> {
        self.normal_derivative.as_ref().map(|d| d(rest))
    }

    pub fn has_normal_derivative(&self) -> bool {
        self.normal_derivative.is_some()
    }

    /// λ·f with the same metadata.
    pub fn scaled(&self, lambda: f64) -> Field {
        let base = self.clone();
        let mut out = self.clone();
        out.eval = Arc::new(move |x| lambda * base.eval(x));
        if let Some(d) = self.normal_derivative.clone() {
            out.normal_derivative = Some(Arc::new(move |x| lambda * d(x)));
        }
        if let Some(b) = &mut out.decay {
            b.constant *= lambda.abs();
        }
        out
    }

    /// Checks the declared symmetry tag at the given probe points.
    pub fn check_symmetry(&self, probes: &[Vec<f64>]) -> Result<()> {
        for x in probes {
            let v = self.eval(x);
            let mut y = x.clone();
            match self.symmetry {
                Symmetry::None => return Ok(()),
                Symmetry::Antisymmetric | Symmetry::Symmetric => {
                    y[0] = -y[0];
                    let w = self.eval(&y);
                    let want = if self.symmetry == Symmetry::Antisymmetric { -v } else { v };
                    if (w - want).abs() > 1e-12 * v.abs().max(1.0) {
                        return Err(Error::SymmetryMismatch(format!("{:?} tag fails at {x:?}", self.symmetry)));
                    }
                }
                Symmetry::Isotropic3 => {
                    if self.dim < 3 {
                        return Err(Error::SymmetryMismatch("isotropic3 needs dimension >= 3".into()));
                    }
                    let a = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    y[0] = a;
                    y[1] = 0.0;
                    y[2] = 0.0;
                    let mut z = y.clone();
                    z[0] = 0.0;
                    z[1] = a;
                    let (p, q) = (self.eval(&y), self.eval(&z));
                    let tol = 1e-12 * p.abs().max(1.0);
                    if (p - q).abs() > tol || (p - v).abs() > 1e-10 * p.abs().max(1.0) {
                        return Err(Error::SymmetryMismatch(format!("isotropic3 tag fails at {x:?}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Norm of the first three coordinates.
#[inline]
pub fn block_norm(x: &[f64]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// ṽ(x̃) = u(|x̃₁₂₃|, x̃₄, …)/|x̃₁₂₃|, with ∂₁u(0, x̃₄, …) where x̃₁ = x̃₂ = x̃₃ = 0.
pub fn lift_field(u: &Field) -> Result<Field> {
    if u.symmetry != Symmetry::Antisymmetric {
        return Err(Error::SymmetryMismatch(format!("lift_field needs an antisymmetric field, got {:?}", u.symmetry)));
    }
    let n = u.dim;
    let base = u.clone();
    let eval = move |x: &[f64]| {
        let rho = block_norm(x);
        if rho > 0.0 {
            let mut y = Vec::with_capacity(n);
            y.push(rho);
            y.extend_from_slice(&x[3..]);
            base.eval(&y) / rho
        } else {
            base.normal_derivative(&x[3..]).unwrap_or(f64::NAN)
        }
    };
    let has_derivative = u.has_normal_derivative();
    let guard: Guard = Arc::new(move |x: &[f64]| {
        if !has_derivative && block_norm(x) == 0.0 {
            Err(Error::MissingNormalDerivative)
        } else {
            Ok(())
        }
    });
    let mut v = Field::new(n + 2, eval).with_symmetry(Symmetry::Isotropic3).with_smoothness(u.smoothness);
    v.guard = Some(guard);
    v.decay = u.decay.map(|d| DecayBound { constant: d.constant, exponent: d.exponent + 1.0 });
    v.support_radius = u.support_radius;
    if u.has_normal_derivative() {
        // ṽ is even in each of x̃₁, x̃₂, x̃₃, so ∂₁ṽ vanishes on the hyperplane.
        v.normal_derivative = Some(Arc::new(|_| 0.0));
    }
    Ok(v)
}

/// u(x) = x₁·v((x₁, 0, 0), x₂, …, x_n).
pub fn restrict_field(v: &Field) -> Result<Field> {
    if v.symmetry != Symmetry::Isotropic3 || v.dim < 3 {
        return Err(Error::SymmetryMismatch(format!("restrict_field needs an isotropic3 field, got {:?}", v.symmetry)));
    }
    let d = v.dim;
    let base = v.clone();
    let eval = move |x: &[f64]| {
        let mut y = vec![0.0; d];
        y[0] = x[0];
        y[3..].copy_from_slice(&x[1..]);
        x[0] * base.eval(&y)
    };
    let plane = v.clone();
    let mut u = Field::new(d - 2, eval)
        .with_symmetry(Symmetry::Antisymmetric)
        .with_smoothness(v.smoothness)
        .with_normal_derivative(move |rest: &[f64]| {
            let mut y = vec![0.0; d];
            y[3..].copy_from_slice(rest);
            plane.eval(&y)
        });
    u.decay = v.decay.map(|b| DecayBound { constant: b.constant, exponent: b.exponent - 1.0 });
    u.support_radius = v.support_radius;
    Ok(u)
}

/// f_sym(x) = (1/4π)∫_{𝕊²} f(|x₁|z, x₂, …) dz on the fixed 32×64 product rule.
pub fn isotropic_symmetrize(f: &Field) -> Result<Field> {
    isotropic_symmetrize_with(f, 32)
}

/// As `isotropic_symmetrize`, with `m` polar nodes and 2m azimuthal nodes.
pub fn isotropic_symmetrize_with(f: &Field, m: usize) -> Result<Field> {
    if f.dim < 3 {
        return Err(Error::InvalidInput(format!("isotropic symmetrization needs dimension >= 3, got {}", f.dim)));
    }
    let d = f.dim;
    let rule = Arc::new(SphereRule::product(3, m));
    let base = f.clone();
    let eval = move |x: &[f64]| {
        let a = x[0].abs();
        let mut y = vec![0.0; d];
        y[3..].copy_from_slice(&x[1..]);
        rule.integrate(|z| {
            y[0] = a * z[0];
            y[1] = a * z[1];
            y[2] = a * z[2];
            base.eval(&y)
        }) / (4.0 * PI)
    };
    let mut out = Field::new(d - 2, eval).with_symmetry(Symmetry::Symmetric).with_smoothness(f.smoothness);
    out.decay = f.decay;
    out.support_radius = f.support_radius;
    Ok(out)
}

/// g_A(x) = ½(g(x₁, x′) − g(−x₁, x′)).
pub fn antisymmetric_part(g: &Field) -> Field {
    if g.symmetry == Symmetry::Antisymmetric {
        return g.clone();
    }
    let base = g.clone();
    let mut out = Field::new(g.dim, move |x: &[f64]| {
        let mut y = x.to_vec();
        y[0] = -y[0];
        0.5 * (base.eval(x) - base.eval(&y))
    })
    .with_symmetry(Symmetry::Antisymmetric)
    .with_smoothness(g.smoothness);
    out.decay = g.decay;
    out.support_radius = g.support_radius;
    out
}

fn require_decay(f: &Field, s: f64, shift: f64) -> Result<()> {
    let decay = f.decay.ok_or_else(|| Error::InvalidInput("weighted norm needs a declared decay bound".into()))?;
    if decay.exponent + shift + 2.0 * s <= 0.0 {
        return Err(Error::NonIntegrable(format!(
            "decay exponent {} leaves the weighted tail divergent at s = {s}",
            decay.exponent
        )));
    }
    Ok(())
}

/// ‖u‖_𝒜s = 4π∫_{x₁>0} x₁|u(x)|(1+|x|)^(−n−2−2s) dx, which equals ℒ_s of the lift.
pub fn weighted_norm_as(u: &Field, s: f64) -> Result<f64> {
    require_decay(u, s, 1.0)?;
    let n = u.dim;
    let p = n as f64 + 2.0 + 2.0 * s;
    let rel = 1e-11;
    let value = half_line(
        |x1| {
            if x1 == 0.0 {
                return 0.0;
            }
            let inner = |rest: &[f64]| {
                let mut x = Vec::with_capacity(n);
                x.push(x1);
                x.extend_from_slice(rest);
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                u.eval(&x).abs() * (1.0 + r).powf(-p)
            };
            x1 * integrate_space(n - 1, &inner, rel).unwrap_or(f64::NAN)
        },
        1.0,
        1e-300,
        rel,
    )
    .map_err(|e| Error::NonIntegrable(e.to_string()))?;
    if !value.is_finite() {
        return Err(Error::NonIntegrable("quadrature of the weighted norm is not finite".into()));
    }
    Ok(4.0 * PI * value)
}

/// ‖v‖_ℒs = ∫_{ℝ^d}|v(x̃)|(1+|x̃|)^(−d−2s) dx̃; isotropic3 fields are reduced to
/// 4π∫₀^∞∫ τ²|v((τ,0,0),b)|(1+√(τ²+|b|²))^(−d−2s) db dτ.
pub fn weighted_norm_ls(v: &Field, s: f64) -> Result<f64> {
    require_decay(v, s, 0.0)?;
    let d = v.dim;
    let p = d as f64 + 2.0 * s;
    if v.symmetry == Symmetry::Isotropic3 && d >= 3 {
        // Fixed composite Gauss–Legendre on the compactifying map τ = t/(1−t).
        let m = d - 3;
        let rule = compact_half_line_rule();
        let mut total = 0.0;
        for &(tau, wt) in &rule {
            let inner = |b: &[f64]| {
                let mut point = vec![0.0; d];
                point[0] = tau;
                point[3..].copy_from_slice(b);
                let r = (tau * tau + b.iter().map(|x| x * x).sum::<f64>()).sqrt();
                v.eval(&point).abs() * (1.0 + r).powf(-p)
            };
            let slice = if m == 0 { inner(&[]) } else { integrate_space(m, &inner, 1e-10)? };
            total += wt * tau * tau * slice;
        }
        if !total.is_finite() {
            return Err(Error::NonIntegrable("quadrature of the weighted norm is not finite".into()));
        }
        return Ok(4.0 * PI * total);
    }
    polar_integral(d, |x| v.eval(x).abs(), p, 1e-10).map_err(|e| Error::NonIntegrable(e.to_string()))
}

/// ∫_{ℝᵈ} f(x)(1+|x|)^(−p) dx as an adaptive radial integral of sphere averages.
fn polar_integral<F: Fn(&[f64]) -> f64>(d: usize, f: F, p: f64, rel_tol: f64) -> Result<f64> {
    let rule = SphereRule::product(d, 24);
    let mut x = vec![0.0; d];
    half_line(
        |r| {
            let shell = rule.integrate(|w| {
                for j in 0..d {
                    x[j] = r * w[j];
                }
                f(&x)
            });
            r.powi(d as i32 - 1) * (1.0 + r).powf(-p) * shell
        },
        1.0,
        1e-300,
        rel_tol,
    )
}

/// Nodes and weights for ∫₀^∞ under τ = t/(1−t), t ∈ (0, 1): 48 panels × 16 points.
fn compact_half_line_rule() -> Vec<(f64, f64)> {
    let gl = GaussLegendre::cached(16);
    let panels = 48;
    let mut out = Vec::with_capacity(panels * gl.len());
    for k in 0..panels {
        let (a, b) = (k as f64 / panels as f64, (k + 1) as f64 / panels as f64);
        for (t, w) in gl.mapped(a, b) {
            let one = 1.0 - t;
            out.push((t / one, w / (one * one)));
        }
    }
    out
}

/// dμ = dx/(1+|x|)^α on ℝ^dim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedMeasureSpec {
    pub dim: usize,
    pub alpha: f64,
}

impl WeightedMeasureSpec {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 || !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("weighted measure needs dim >= 1 and alpha > 0, got ({dim}, {alpha})")));
        }
        Ok(Self { dim, alpha })
    }

    /// μ(B_R).
    pub fn ball_measure(&self, radius: f64) -> Result<f64> {
        let d = self.dim as i32;
        let a = self.alpha;
        let v = adaptive_budget(&mut |r: f64| r.powi(d - 1) * (1.0 + r).powf(-a), 0.0, radius, 1e-300, 1e-13, 2000)?;
        Ok(sphere_area(self.dim) * v)
    }

    /// ‖f‖_{L¹(μ)}; bounded fields need α > d.
    pub fn l1_norm(&self, f: &Field) -> Result<f64> {
        let p = f.decay.map(|b| b.exponent).unwrap_or(0.0);
        if f.support_radius.is_none() && p + self.alpha <= self.dim as f64 {
            return Err(Error::NonIntegrable(format!(
                "decay exponent {p} with alpha = {} is not integrable on R^{}",
                self.alpha, self.dim
            )));
        }
        if self.dim == 1 {
            let a = self.alpha;
            let g = |x: &[f64]| f.eval(x).abs() * (1.0 + x[0].abs()).powf(-a);
            return integrate_space(1, &g, 1e-10);
        }
        polar_integral(self.dim, |x| f.eval(x).abs(), self.alpha, 1e-10)
    }
}

/// Radial bump c·exp(−1/(1−ρ²)) sampled on fixed Gauss nodes in ρ ∈ (0, 1),
/// normalized so the discrete mass on ℝᵈ is exactly one.
struct Mollifier {
    nodes: Vec<(f64, f64)>,
}

impl Mollifier {
    fn new(d: usize, order: usize) -> Self {
        let gl = GaussLegendre::cached(order);
        let raw: Vec<(f64, f64)> = gl
            .mapped(0.0, 1.0)
            .map(|(rho, w)| (rho, w * (-1.0 / (1.0 - rho * rho)).exp() * rho.powi(d as i32 - 1)))
            .collect();
        let mass = sphere_area(d) * raw.iter().map(|p| p.1).sum::<f64>();
        Self { nodes: raw.into_iter().map(|(rho, w)| (rho, w / mass)).collect() }
    }
}

/// v∗η_ε, evaluated pointwise by product Gauss quadrature over the ε-ball.
pub fn mollify(v: &Field, eps: f64) -> Result<Field> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("mollifier radius must be positive, got {eps}")));
    }
    let d = v.dim;
    let bump = Arc::new(Mollifier::new(d, 48));
    let base = v.clone();
    let eval: Box<dyn Fn(&[f64]) -> f64 + Send + Sync> = if v.symmetry == Symmetry::Isotropic3 && d == 3 {
        // Funk–Hecke: the sphere average depends on |x − ερω| only through ω·x̂.
        let gl = GaussLegendre::cached(48);
        Box::new(move |x: &[f64]| {
            let a2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            let a = a2.sqrt();
            let mut total = 0.0;
            for &(rho, w) in &bump.nodes {
                let r = eps * rho;
                let avg: f64 = gl
                    .nodes
                    .iter()
                    .zip(&gl.weights)
                    .map(|(&t, &wt)| wt * base.eval(&[(a2 - 2.0 * a * r * t + r * r).max(0.0).sqrt(), 0.0, 0.0]))
                    .sum();
                total += w * 2.0 * PI * avg;
            }
            total
        })
    } else {
        let rule = SphereRule::product(d, 16);
        Box::new(move |x: &[f64]| {
            let mut y = vec![0.0; d];
            let mut total = 0.0;
            for &(rho, w) in &bump.nodes {
                let r = eps * rho;
                let avg = rule.integrate(|omega| {
                    for j in 0..d {
                        y[j] = x[j] - r * omega[j];
                    }
                    base.eval(&y)
                });
                total += w * avg;
            }
            total
        })
    };
    let mut out = Field::new(d, eval).with_symmetry(v.symmetry).with_smoothness(f64::INFINITY);
    out.decay = v.decay;
    out.support_radius = v.support_radius.map(|r| r + eps);
    Ok(out)
}

/// ‖v∗η_ε − v‖_{L¹(μ)} along the schedule.
pub fn mollifier_convergence_report(v: &Field, spec: &WeightedMeasureSpec, eps_schedule: &[f64]) -> Result<Vec<f64>> {
    if spec.dim != v.dim {
        return Err(Error::InvalidInput(format!("measure on R^{} for a field on R^{}", spec.dim, v.dim)));
    }
    let alpha = spec.alpha;
    eps_schedule
        .iter()
        .map(|&eps| {
            let m = mollify(v, eps)?;
            if v.symmetry == Symmetry::Isotropic3 && v.dim == 3 {
                let g = |t: f64| t * t * (m.eval(&[t, 0.0, 0.0]) - v.eval(&[t, 0.0, 0.0])).abs() * (1.0 + t).powf(-alpha);
                let value = match v.support_radius {
                    Some(r) => {
                        // Break points at the kinks r ± ε keep the adaptive rule honest.
                        let cuts = [0.0, (r - eps).max(0.0), r, r + eps];
                        let mut acc = 0.0;
                        for w in cuts.windows(2) {
                            acc += adaptive_budget(&mut { g }, w[0], w[1], 1e-14, 1e-10, 4000)?;
                        }
                        acc
                    }
                    None => half_line(g, 1.0, 1e-14, 1e-10)?,
                };
                return Ok(4.0 * PI * value);
            }
            let orig = v.clone();
            let diff = Field::new(v.dim, move |x: &[f64]| m.eval(x) - orig.eval(x));
            let diff = Field { support_radius: v.support_radius.map(|r| r + eps), ..diff };
            spec.l1_norm(&diff)
        })
        .collect()
}

/// ω_v(ε)·μ(B_{2R}) for an isotropic3 field on ℝ³ with support in B_R, using the
/// radial profile to bound the modulus of continuity.
pub fn mollifier_error_bound(v: &Field, spec: &WeightedMeasureSpec, eps: f64) -> Result<f64> {
    let radius = v
        .support_radius
        .ok_or_else(|| Error::InvalidInput("error bound needs a compactly supported field".into()))?;
    if v.symmetry != Symmetry::Isotropic3 || v.dim != 3 {
        return Err(Error::InvalidInput("error bound is implemented for isotropic fields on R^3".into()));
    }
    let steps = 4000;
    let h = (radius + eps) / steps as f64;
    let profile: Vec<f64> = (0..=steps).map(|k| v.eval(&[k as f64 * h, 0.0, 0.0])).collect();
    let reach = (eps / h).ceil() as usize;
    let mut omega: f64 = 0.0;
    for i in 0..profile.len() {
        for j in i + 1..=(i + reach).min(profile.len() - 1) {
            omega = omega.max((profile[i] - profile[j]).abs());
        }
    }
    Ok(omega * spec.ball_measure(2.0 * radius)?)
}
