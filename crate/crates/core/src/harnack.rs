//! Manufactured antisymmetric Schrödinger problems L_n u + c u = 0, boundary
//! Harnack quotients u/x₁ and their lifted counterparts, weak Harnack and local
//! boundedness reports, and the annulus lower bound for (−Δ)^s.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::fractional_constant;
use crate::lift::{block_norm, restrict_field, weighted_norm_as, Field, Symmetry};
use crate::operators::{LevyPlan, OperatorSpec, QuadratureSpec};
use crate::quad::adaptive;
use crate::special::{ball_volume, sphere_area};

/// Floor below which a manufactured ṽ counts as non-positive.
pub const POSITIVITY_FLOOR: f64 = 1e-6;

/// An axis-aligned box [a₁, b₁] × … × [a_n, b_n].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidInput(format!("invalid box {lower:?} x {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// [−h, h]ⁿ.
    pub fn cube(n: usize, h: f64) -> Result<Self> {
        Self::new(vec![-h; n], vec![h; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Tensor lattice with `density` points per axis, first coordinate slowest.
    pub fn lattice(&self, density: usize) -> Vec<Vec<f64>> {
        let n = self.dim();
        let density = density.max(2);
        let total = density.pow(n as u32);
        (0..total)
            .map(|mut k| {
                let mut p = vec![0.0; n];
                for j in (0..n).rev() {
                    let i = k % density;
                    k /= density;
                    let t = i as f64 / (density - 1) as f64;
                    p[j] = self.lower[j] + t * (self.upper[j] - self.lower[j]);
                }
                p
            })
            .collect()
    }

    /// Points strictly inside the box with x₁ > 0.
    pub fn interior_positive(&self, density: usize) -> Vec<Vec<f64>> {
        self.lattice(density)
            .into_iter()
            .filter(|p| p[0] > 0.0 && p.iter().enumerate().all(|(j, v)| *v > self.lower[j] && *v < self.upper[j]))
            .collect()
    }
}

/// The compact set K as a sampled box; samples with |x₁| < exclusion are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompactSetSpec {
    pub shape: BoxDomain,
    #[serde(default)]
    pub exclusion: f64,
    #[serde(default = "default_density")]
    pub sample_density: usize,
}

fn default_density() -> usize {
    17
}

impl CompactSetSpec {
    pub fn new(shape: BoxDomain) -> Self {
        Self { shape, exclusion: 0.0, sample_density: 17 }
    }
}

/// L_n u + c u = 0 on Ω with u antisymmetric and x₁u ≥ 0.
#[derive(Clone)]
pub struct SchroedingerProblem {
    pub operator: OperatorSpec,
    pub domain: BoxDomain,
    pub potential: Field,
    /// ‖c‖_∞ over the potential samples of Ω₊.
    pub potential_sup: f64,
    pub solution: Field,
    /// ṽ, when the problem was built from a lifted profile.
    pub lifted: Option<Field>,
    pub residual_tol: f64,
    /// Largest |L_n u + c u| over the interior samples of Ω₊.
    pub residual_max: f64,
    pub quadrature: QuadratureSpec,
    plan: Arc<LevyPlan>,
}

impl std::fmt::Debug for SchroedingerProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchroedingerProblem")
            .field("operator", &self.operator)
            .field("domain", &self.domain)
            .field("potential_sup", &self.potential_sup)
            .field("residual_tol", &self.residual_tol)
            .field("residual_max", &self.residual_max)
            .finish()
    }
}

/// Points per axis used for residual and potential samples.
const RESIDUAL_DENSITY: usize = 9;

impl SchroedingerProblem {
    /// Assembles a problem from its parts and measures the equation residual.
    pub fn from_parts(
        operator: OperatorSpec,
        domain: BoxDomain,
        potential: Field,
        solution: Field,
        quadrature: &QuadratureSpec,
    ) -> Result<Self> {
        let n = domain.dim();
        if solution.dim() != n || potential.dim() != n {
            return Err(Error::InvalidInput(format!("problem on R^{n} with fields on R^{} and R^{}", solution.dim(), potential.dim())));
        }
        if solution.symmetry != Symmetry::Antisymmetric {
            return Err(Error::SymmetryMismatch("the solution must be antisymmetric".into()));
        }
        let plan = Arc::new(LevyPlan::new(&operator.kernel(n)?, quadrature)?);
        let samples = domain.interior_positive(RESIDUAL_DENSITY);
        let c_values: Vec<f64> = samples.par_iter().map(|x| potential.eval(x)).collect();
        let potential_sup = c_values.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if !potential_sup.is_finite() {
            return Err(Error::InvariantViolation("potential is not finite on the samples of the domain".into()));
        }
        let residual_tol = 1e-3 * (1.0 + potential_sup);
        let lu = plan.apply_many(&solution, &samples)?;
        let residual_max = samples
            .iter()
            .zip(&lu)
            .zip(&c_values)
            .fold(0.0f64, |m, ((x, l), c)| m.max((l + c * solution.eval(x)).abs()));
        Ok(Self {
            operator,
            domain,
            potential,
            potential_sup,
            solution,
            lifted: None,
            residual_tol,
            residual_max,
            quadrature: *quadrature,
            plan,
        })
    }

    /// x₁u ≥ 0 at the lattice samples and the residual within tolerance.
    pub fn validate(&self) -> Result<()> {
        for x in self.domain.lattice(RESIDUAL_DENSITY) {
            if x[0] * self.solution.eval(&x) < 0.0 {
                return Err(Error::InvariantViolation(format!("x1 u(x) < 0 at {x:?}")));
            }
        }
        if !(self.residual_max <= self.residual_tol) {
            return Err(Error::InvariantViolation(format!(
                "equation residual {:e} exceeds {:e}",
                self.residual_max, self.residual_tol
            )));
        }
        Ok(())
    }

    /// The problem with u replaced by λu; c is unchanged.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.solution = self.solution.scaled(lambda);
        out.lifted = self.lifted.as_ref().map(|v| v.scaled(lambda));
        out.residual_max *= lambda.abs();
        out
    }

    fn residuals(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let lu = self.plan.apply_many(&self.solution, points)?;
        Ok(points.iter().zip(lu).map(|(x, l)| l + self.potential.eval(x) * self.solution.eval(x)).collect())
    }
}

/// Builds u = restriction of ṽ and c = −L_{n+2}ṽ/ṽ, so that L_n u + c u = 0 on Ω₊.
pub fn manufacture_solution(
    vtilde: &Field,
    op: &OperatorSpec,
    omega: &BoxDomain,
    quadrature: &QuadratureSpec,
) -> Result<SchroedingerProblem> {
    let n = omega.dim();
    if vtilde.dim() != n + 2 || vtilde.symmetry != Symmetry::Isotropic3 {
        return Err(Error::SymmetryMismatch(format!(
            "manufacture_solution needs an isotropic3 field on R^{}, got {:?} on R^{}",
            n + 2,
            vtilde.symmetry,
            vtilde.dim()
        )));
    }
    let lifted_point = move |x: &[f64]| {
        let mut y = vec![0.0; n + 2];
        y[0] = x[0].abs();
        y[3..].copy_from_slice(&x[1..]);
        y
    };
    // The lifted closure of Ω is sampled through (|x₁|, x′) for x on the lattice of Ω.
    let mut worst = (f64::INFINITY, Vec::new());
    for x in omega.lattice(17) {
        let y = lifted_point(&x);
        let v = vtilde.eval(&y);
        if !(v >= worst.0) {
            worst = (v, y);
        }
    }
    if !(worst.0 >= POSITIVITY_FLOOR) {
        return Err(Error::PositivityFailure { min: worst.0, at: worst.1 });
    }
    let high = Arc::new(LevyPlan::new(&op.lifted_kernel(n)?, quadrature)?);
    let potential = {
        let v = vtilde.clone();
        let high = high.clone();
        Field::new(n, move |x: &[f64]| {
            let y = lifted_point(x);
            -high.apply(&v, &y).unwrap_or(f64::NAN) / v.eval(&y)
        })
        .with_symmetry(Symmetry::Symmetric)
    };
    let solution = restrict_field(vtilde)?;
    let mut problem = SchroedingerProblem::from_parts(op.clone(), omega.clone(), potential, solution, quadrature)?;
    problem.lifted = Some(vtilde.clone());
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackReport {
    pub sup_quotient: f64,
    pub inf_quotient: f64,
    pub ratio: f64,
    pub lifted_sup: f64,
    pub lifted_inf: f64,
    pub residual_max: f64,
    /// (x, u(x)/x₁) for every retained sample, in lattice order.
    #[serde(skip)]
    pub samples: Vec<(Vec<f64>, f64)>,
}

/// Golden-spiral unit vector number i of m.
fn spiral(i: usize, m: usize) -> [f64; 3] {
    let golden = PI * (3.0 - 5f64.sqrt());
    let z = 1.0 - (2 * i + 1) as f64 / m as f64;
    let r = (1.0 - z * z).sqrt();
    let phi = golden * i as f64;
    [r * phi.cos(), r * phi.sin(), z]
}

/// sup and inf of u/x₁ over K₀ and of ṽ over the lifted set K̃.
pub fn quotient_report(p: &SchroedingerProblem, k: &CompactSetSpec) -> Result<HarnackReport> {
    let n = p.domain.dim();
    if k.shape.dim() != n {
        return Err(Error::InvalidInput(format!("compact set in R^{} for a problem on R^{n}", k.shape.dim())));
    }
    let u = &p.solution;
    let lattice = k.shape.lattice(k.sample_density);
    let kept: Vec<Vec<f64>> = lattice
        .into_iter()
        .filter(|x| if x[0] == 0.0 { k.exclusion == 0.0 } else { x[0].abs() >= k.exclusion })
        .collect();
    if kept.iter().all(|x| x[0] == 0.0) {
        return Err(Error::EmptyK0);
    }
    let m = kept.len();
    let mut samples = Vec::with_capacity(m);
    let mut lifted_values = Vec::with_capacity(m);
    for (i, x) in kept.iter().enumerate() {
        let q = if x[0] == 0.0 {
            u.normal_derivative(&x[1..]).ok_or(Error::MissingNormalDerivative)?
        } else {
            u.eval(x) / x[0]
        };
        samples.push((x.clone(), q));
        let z = spiral(i, m);
        let a = x[0].abs();
        let mut y = vec![0.0; n + 2];
        y[..3].copy_from_slice(&[a * z[0], a * z[1], a * z[2]]);
        y[3..].copy_from_slice(&x[1..]);
        let lifted = match &p.lifted {
            Some(v) => v.try_eval(&y)?,
            // Without ṽ, the lift of u is evaluated from its definition.
            None => {
                let rho = block_norm(&y);
                if rho == 0.0 {
                    u.normal_derivative(&x[1..]).ok_or(Error::MissingNormalDerivative)?
                } else {
                    let mut w = vec![rho];
                    w.extend_from_slice(&x[1..]);
                    u.eval(&w) / rho
                }
            }
        };
        lifted_values.push(lifted);
    }
    let extrema = |vals: &mut dyn Iterator<Item = f64>| {
        vals.fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), v| (hi.max(v), lo.min(v)))
    };
    let (sup_quotient, inf_quotient) = extrema(&mut samples.iter().map(|s| s.1));
    let (lifted_sup, lifted_inf) = extrema(&mut lifted_values.iter().copied());
    for (a, b) in [(sup_quotient, lifted_sup), (inf_quotient, lifted_inf)] {
        if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
            return Err(Error::InvariantViolation(format!("quotient extremum {a} differs from lifted extremum {b}")));
        }
    }
    Ok(HarnackReport {
        sup_quotient,
        inf_quotient,
        ratio: sup_quotient / inf_quotient,
        lifted_sup,
        lifted_inf,
        residual_max: p.residual_max,
        samples,
    })
}

/// Passes iff the quotient ratio is within `c_budget` and the residual within tolerance.
pub fn verify_theorem_odd_harnack(p: &SchroedingerProblem, k: &CompactSetSpec, c_budget: f64) -> Result<(bool, HarnackReport)> {
    let report = quotient_report(p, k)?;
    let pass = report.ratio <= c_budget && report.residual_max <= p.residual_tol;
    Ok((pass, report))
}

/// Lattice samples of the half ball B_ρ⁺ = {|x| < ρ, x₁ > 0}.
fn half_ball(n: usize, rho: f64, density: usize) -> Result<Vec<Vec<f64>>> {
    Ok(BoxDomain::cube(n, rho)?
        .lattice(density)
        .into_iter()
        .filter(|x| x[0] > 0.0 && x.iter().map(|v| v * v).sum::<f64>() < rho * rho)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakHarnackReport {
    pub norm_as: f64,
    pub inf_quotient: f64,
    /// ‖u‖_𝒜s/(inf + M).
    pub ratio: f64,
}

/// ‖u‖_𝒜s, inf over B_{ρ/2}⁺ of u/x₁, and their ratio for a supersolution.
pub fn weak_harnack_report(p: &SchroedingerProblem, m: f64, rho: f64, s: f64) -> Result<WeakHarnackReport> {
    let n = p.domain.dim();
    if !(m >= 0.0 && rho > 0.0) {
        return Err(Error::InvalidInput(format!("need M >= 0 and rho > 0, got ({m}, {rho})")));
    }
    let ball = half_ball(n, rho, RESIDUAL_DENSITY)?;
    for (x, r) in ball.iter().zip(p.residuals(&ball)?) {
        let value = r + m * x[0];
        if value < -p.residual_tol {
            return Err(Error::NotSupersolution { residual: value, tol: p.residual_tol, at: x.clone() });
        }
    }
    let norm_as = weighted_norm_as(&p.solution, s)?;
    let inner = half_ball(n, 0.5 * rho, 17)?;
    let inf_quotient = inner.iter().map(|x| p.solution.eval(x) / x[0]).fold(f64::INFINITY, f64::min);
    let ratio = if norm_as == 0.0 { 0.0 } else { norm_as / (inf_quotient + m) };
    Ok(WeakHarnackReport { norm_as, inf_quotient, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalBoundednessReport {
    pub sup_quotient: f64,
    pub norm_as: f64,
    /// sup/(‖u‖_𝒜s + M).
    pub ratio: f64,
}

/// sup over B_{ρ/2}⁺ of u/x₁, ‖u‖_𝒜s, and their ratio for a subsolution.
pub fn local_boundedness_report(p: &SchroedingerProblem, m: f64, rho: f64, s: f64) -> Result<LocalBoundednessReport> {
    let n = p.domain.dim();
    if !(m >= 0.0 && rho > 0.0) {
        return Err(Error::InvalidInput(format!("need M >= 0 and rho > 0, got ({m}, {rho})")));
    }
    let ball = half_ball(n, rho, RESIDUAL_DENSITY)?;
    for (x, r) in ball.iter().zip(p.residuals(&ball)?) {
        let value = r - m * x[0];
        if value > p.residual_tol {
            return Err(Error::NotSubsolution { residual: value, tol: p.residual_tol, at: x.clone() });
        }
    }
    let norm_as = weighted_norm_as(&p.solution, s)?;
    let inner = half_ball(n, 0.5 * rho, 17)?;
    let sup_quotient = inner.iter().map(|x| p.solution.eval(x) / x[0]).fold(f64::NEG_INFINITY, f64::max);
    let ratio = if sup_quotient == 0.0 { 0.0 } else { sup_quotient / (norm_as + m) };
    Ok(LocalBoundednessReport { sup_quotient, norm_as, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusReport {
    /// (−Δ)^s χ_{B_4ρ∖B_2ρ}(x) = −C(n,s)∫_{B_4ρ∖B_2ρ}|x − y|^(−n−2s) dy.
    pub value: f64,
    /// C(n,s)·|B₄∖B₂|: |x − y| ≥ ρ on the annulus gives value ≥ −C*ρ^(−2s).
    pub c_star: f64,
}

pub fn annulus_flap_lower_bound(n: usize, s: f64, rho: f64, x: &[f64]) -> Result<AnnulusReport> {
    if x.len() != n || !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("need a point in R^{n} and rho > 0")));
    }
    let a = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(a < rho) {
        return Err(Error::InvalidInput(format!("|x| = {a} must be below rho = {rho}")));
    }
    let c = fractional_constant(n, s)?;
    let p = n as f64 + 2.0 * s;
    let kernel = |d2: f64| d2.powf(-0.5 * p);
    let integral = if n == 1 {
        adaptive(|t| kernel((t - a) * (t - a)) + kernel((t + a) * (t + a)), 2.0 * rho, 4.0 * rho, 1e-300, 1e-14)?
    } else {
        // ∫_𝕊 f(x·ω)dω = |𝕊^(n−2)|∫₀^π f(|x|cos θ) sin^(n−2)θ dθ.
        let ring = sphere_area(n - 1);
        adaptive(
            |t| {
                let shell = adaptive(
                    |theta: f64| kernel(a * a + t * t - 2.0 * a * t * theta.cos()) * theta.sin().powi(n as i32 - 2),
                    0.0,
                    PI,
                    1e-300,
                    1e-14,
                )
                .unwrap_or(f64::NAN);
                ring * t.powi(n as i32 - 1) * shell
            },
            2.0 * rho,
            4.0 * rho,
            1e-300,
            1e-14,
        )?
    };
    let value = -c * integral;
    let c_star = c * ball_volume(n) * (4f64.powi(n as i32) - 2f64.powi(n as i32));
    if !value.is_finite() || value < -c_star * rho.powf(-2.0 * s) {
        return Err(Error::InvariantViolation(format!("annulus value {value} below the bound -{c_star}*rho^(-2s)")));
    }
    Ok(AnnulusReport { value, c_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::gaussian_kernel;
    use crate::lift::lift_field;
    use proptest::prelude::*;

    fn one(d: usize) -> Field {
        Field::new(d, |_| 1.0).with_symmetry(Symmetry::Isotropic3).with_decay(1.0, 0.0)
    }

    fn rational(d: usize) -> Field {
        Field::new(d, |x: &[f64]| 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>()))
            .with_symmetry(Symmetry::Isotropic3)
            .with_decay(1.0, 2.0)
    }

    fn gauss(d: usize) -> Field {
        Field::new(d, |x: &[f64]| (-PI * x.iter().map(|v| v * v).sum::<f64>()).exp())
            .with_symmetry(Symmetry::Isotropic3)
            .with_decay(1.0, 64.0)
    }

    fn omega() -> BoxDomain {
        BoxDomain::cube(1, 1.0).unwrap()
    }

    fn k_set() -> CompactSetSpec {
        CompactSetSpec::new(BoxDomain::cube(1, 0.5).unwrap())
    }

    #[test]
    fn constant_profile() {
        let q = QuadratureSpec::default();
        let p = manufacture_solution(&one(3), &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap();
        assert_eq!(p.solution.eval(&[0.3]), 0.3);
        assert!(p.potential_sup < 1e-12 && p.residual_max < 1e-12, "{p:?}");
        let r = quotient_report(&p, &k_set()).unwrap();
        assert_eq!((r.sup_quotient, r.inf_quotient, r.ratio), (1.0, 1.0, 1.0));
        assert!(verify_theorem_odd_harnack(&p, &k_set(), 1.0).unwrap().0);
        assert!(!verify_theorem_odd_harnack(&p, &k_set(), 0.5).unwrap().0);
    }

    #[test]
    fn rational_profile() {
        let q = QuadratureSpec::default();
        let p = manufacture_solution(&rational(3), &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap();
        assert!(p.potential_sup.is_finite() && p.potential_sup > 0.0);
        assert!(p.residual_max <= 1e-4, "{}", p.residual_max);
    }

    #[test]
    fn gaussian_profile_ratio() {
        let q = QuadratureSpec::default();
        let p = manufacture_solution(&gauss(3), &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap();
        let k = CompactSetSpec::new(BoxDomain::cube(1, 1.0).unwrap());
        let r = quotient_report(&p, &k).unwrap();
        // On [−1, 1] the lifted |x̃|² ranges over [0, 1].
        assert!((r.ratio - PI.exp()).abs() < 1e-12 * PI.exp(), "{}", r.ratio);
        let (pass, _) = verify_theorem_odd_harnack(&p, &k, 2.0 * r.ratio).unwrap();
        assert!(pass);
        assert!(p.residual_max <= p.residual_tol);
    }

    #[test]
    fn gaussian_kernel_problem() {
        let q = QuadratureSpec::default();
        let op = OperatorSpec::Kernel(gaussian_kernel(1).unwrap());
        let p = manufacture_solution(&rational(3), &op, &omega(), &q).unwrap();
        assert!(p.residual_max <= 1e-6, "{}", p.residual_max);
    }

    #[test]
    fn positivity_floor() {
        let q = QuadratureSpec::default();
        let dip = Field::new(3, |x: &[f64]| block_norm(x) - 0.5).with_symmetry(Symmetry::Isotropic3);
        let err = manufacture_solution(&dip, &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap_err();
        assert!(matches!(err, Error::PositivityFailure { .. }));
        let flat = Field::new(3, |_| 1.0);
        assert!(manufacture_solution(&flat, &OperatorSpec::Fractional(0.5), &omega(), &q).is_err());
    }

    #[test]
    fn quotient_edge_cases() {
        let q = QuadratureSpec::default();
        let p = manufacture_solution(&gauss(3), &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap();
        let plane = CompactSetSpec::new(BoxDomain::new(vec![0.0], vec![0.0]).unwrap_or(BoxDomain { lower: vec![0.0], upper: vec![0.0] }));
        assert_eq!(quotient_report(&p, &plane).unwrap_err(), Error::EmptyK0);
        let r = quotient_report(&p, &k_set()).unwrap();
        assert!(r.ratio >= 1.0);
        assert_eq!(r.samples.len(), 17);
    }

    #[test]
    fn weak_harnack_and_local_boundedness() {
        let q = QuadratureSpec::default();
        let p = manufacture_solution(&gauss(3), &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap();
        let w = weak_harnack_report(&p, 0.0, 1.0, 0.5).unwrap();
        assert!(w.ratio.is_finite() && w.ratio > 0.0);
        let w2 = weak_harnack_report(&p.scaled(2.0), 0.0, 1.0, 0.5).unwrap();
        assert!((w2.norm_as - 2.0 * w.norm_as).abs() < 1e-12 * w.norm_as);
        assert!((w2.inf_quotient - 2.0 * w.inf_quotient).abs() < 1e-15);
        assert!((w2.ratio - w.ratio).abs() < 1e-10 * w.ratio);
        let l = local_boundedness_report(&p, 0.0, 1.0, 0.5).unwrap();
        let l2 = local_boundedness_report(&p.scaled(2.0), 0.0, 1.0, 0.5).unwrap();
        assert!(l.ratio.is_finite() && (l2.ratio - l.ratio).abs() < 1e-10 * l.ratio);

        let zero = Field::zero(1).with_symmetry(Symmetry::Antisymmetric).with_normal_derivative(|_| 0.0);
        let z = SchroedingerProblem::from_parts(OperatorSpec::Fractional(0.5), omega(), Field::zero(1), zero, &q).unwrap();
        let w = weak_harnack_report(&z, 1.0, 1.0, 0.5).unwrap();
        assert_eq!((w.norm_as, w.ratio), (0.0, 0.0));
        let l = local_boundedness_report(&z, 0.0, 1.0, 0.5).unwrap();
        assert_eq!((l.sup_quotient, l.norm_as, l.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn super_and_sub_solution_checks() {
        let q = QuadratureSpec::default();
        let p = manufacture_solution(&gauss(3), &OperatorSpec::Fractional(0.5), &omega(), &q).unwrap();
        // Shifting c by −1 makes L u + c u = −u, negative on the half ball.
        let shifted = {
            let c = p.potential.clone();
            Field::new(1, move |x: &[f64]| c.eval(x) - 1.0)
        };
        let bad = SchroedingerProblem::from_parts(p.operator.clone(), omega(), shifted, p.solution.clone(), &q).unwrap();
        assert!(matches!(weak_harnack_report(&bad, 0.0, 1.0, 0.5), Err(Error::NotSupersolution { .. })));
        assert!(local_boundedness_report(&bad, 0.0, 1.0, 0.5).is_ok());
        let raised = {
            let c = p.potential.clone();
            Field::new(1, move |x: &[f64]| c.eval(x) + 1.0)
        };
        let bad = SchroedingerProblem::from_parts(p.operator.clone(), omega(), raised, p.solution.clone(), &q).unwrap();
        assert!(matches!(local_boundedness_report(&bad, 0.0, 1.0, 0.5), Err(Error::NotSubsolution { .. })));
    }

    #[test]
    fn nonnegativity_propagates() {
        let u = Field::new(1, |x: &[f64]| x[0] * (1.0 + x[0] * x[0]).recip() * (2.0 + (3.0 * x[0]).cos()))
            .with_symmetry(Symmetry::Antisymmetric)
            .with_normal_derivative(|_| 3.0);
        let v = lift_field(&u).unwrap();
        for k in 0..41 {
            let x = -2.0 + 0.1 * k as f64;
            let z = spiral(k, 41);
            let y = [x * z[0], x * z[1], x * z[2]];
            assert_eq!(x * u.eval(&[x]) >= 0.0, v.eval(&y) >= 0.0);
        }
    }

    #[test]
    fn annulus_examples() {
        let r = annulus_flap_lower_bound(1, 0.5, 1.0, &[0.0]).unwrap();
        assert!((r.value + 0.5 / PI).abs() < 1e-12, "{}", r.value);
        let r2 = annulus_flap_lower_bound(1, 0.5, 2.0, &[0.0]).unwrap();
        assert!((r2.value / r.value - 0.5).abs() < 1e-10);
        assert!(annulus_flap_lower_bound(1, 0.5, 1.0, &[1.5]).is_err());
        for n in [1usize, 2] {
            for s in [0.25, 0.5, 0.75] {
                let at0 = annulus_flap_lower_bound(n, s, 1.0, &vec![0.0; n]).unwrap().value;
                let mut x = vec![0.0; n];
                x[0] = 0.9;
                let edge = annulus_flap_lower_bound(n, s, 1.0, &x).unwrap().value;
                assert!(at0.abs() <= edge.abs() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn annulus_bound_lattice() {
        for n in [1usize, 2] {
            for s in [0.25, 0.5, 0.75] {
                for rho in [0.5, 1.0, 2.0] {
                    let r = annulus_flap_lower_bound(n, s, rho, &vec![0.0; n]).unwrap();
                    assert!(r.value >= -r.c_star * rho.powf(-2.0 * s));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn annulus_bound_holds(n in 1usize..3, s in 0.1f64..0.9, rho in 0.3f64..3.0, t in -0.95f64..0.95) {
            let mut x = vec![0.0; n];
            x[n - 1] = t * rho;
            let r = annulus_flap_lower_bound(n, s, rho, &x).unwrap();
            prop_assert!(r.value < 0.0 && r.value >= -r.c_star * rho.powf(-2.0 * s));
        }
    }
}
