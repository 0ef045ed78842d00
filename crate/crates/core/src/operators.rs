//! Direct evaluation of Lévy-type operators L_n and of (−Δ)^s, and residual
//! checks for the identities that relate dimension n to dimension n + 2.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{fractional_constant, fractional_kernel, lift_kernel, RadialKernel};
use crate::lift::{antisymmetric_part, block_norm, isotropic_symmetrize_with, lift_field, Field, Symmetry};
use crate::quad::{accelerate_panels, adaptive, adaptive_estimate, half_line, GaussLegendre, SphereRule};
use crate::special::sphere_area;

/// Arc length covered by one angular panel; angular resolution grows with r.
const ANGULAR_ARC: f64 = 0.25;
/// Width of the uniform radial panels between the split radius and the truncation radius.
const SHELL_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Boundary between the geometrically graded core and the uniform shells.
    pub split_radius: f64,
    /// Gauss nodes per graded core panel.
    pub core_nodes: usize,
    /// Gauss nodes per shell panel.
    pub shell_nodes: usize,
    /// Gauss nodes per angular panel.
    pub angular_nodes: usize,
    /// Radius beyond which the kernel tail is handled by its moment.
    pub truncation_radius: f64,
    pub target_tol: f64,
    /// Reduce the 3-D block of 3-isotropic fields to a radial integral.
    pub exploit_isotropy: bool,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            split_radius: 0.5,
            core_nodes: 16,
            shell_nodes: 16,
            angular_nodes: 8,
            truncation_radius: 8.0,
            target_tol: 1e-10,
            exploit_isotropy: true,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_radius > 0.0 && self.truncation_radius > self.split_radius) {
            return Err(Error::InvalidInput(format!(
                "need 0 < split_radius < truncation_radius, got {} and {}",
                self.split_radius, self.truncation_radius
            )));
        }
        if self.core_nodes < 2 || self.shell_nodes < 2 || self.angular_nodes < 2 {
            return Err(Error::InvalidInput("quadrature node counts must be at least 2".into()));
        }
        if !(self.target_tol > 0.0) {
            return Err(Error::InvalidInput(format!("target_tol must be positive, got {}", self.target_tol)));
        }
        Ok(())
    }

    /// Below this radius the second difference is replaced by its even polynomial fit.
    pub fn guard_radius(&self) -> f64 {
        self.split_radius / 50.0
    }
}

/// ∫_lo^hi r^p 𝒦(r) dr, in closed form for fractional kernels; `hi = None` means ∞.
fn kernel_moment(k: &RadialKernel, p: f64, lo: f64, hi: Option<f64>) -> Result<f64> {
    if let Some(s) = k.fractional_order() {
        let c = fractional_constant(k.dimension(), s)?;
        let e = p + 1.0 - k.dimension() as f64 - 2.0 * s;
        return match hi {
            Some(_) if lo == 0.0 && e <= 0.0 => {
                Err(Error::SingularQuadratureFailure(format!("r^{p} moment of the kernel diverges at 0")))
            }
            Some(h) => Ok(c * (h.powf(e) - if lo == 0.0 { 0.0 } else { lo.powf(e) }) / e),
            None if e >= 0.0 => Err(Error::TailDivergence(format!("r^{p} moment of the kernel diverges at infinity"))),
            None => Ok(c * lo.powf(e) / -e),
        };
    }
    match hi {
        Some(h) => k.moment(p, lo, h),
        None => k.tail_moment(p, lo),
    }
}

/// Composite Gauss–Legendre nodes on [a, b] with `panels` equal panels.
fn composite(a: f64, b: f64, panels: usize, nodes: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::cached(nodes);
    let h = (b - a) / panels as f64;
    (0..panels).flat_map(|j| gl.mapped(a + j as f64 * h, a + (j + 1) as f64 * h).collect::<Vec<_>>()).collect()
}

/// A fixed quadrature plan for L u(x) = ½∫(2u(x) − u(x+y) − u(x−y))𝒦(|y|) dy
/// = ∫₀^∞ r^(d−1)𝒦(r)A(r) dr with A(r) = ∫_{𝕊^(d−1)}(u(x) − u(x + rω)) dω.
///
/// The radial variable is split into a core [0, r_g], where the spherical
/// second difference A(r) is fitted by αr² + βr⁴ + γr⁶ and integrated against
/// kernel moments, geometric panels on [r_g, split], uniform shells out to the
/// truncation radius, and a tail handled by the kernel moment.
pub struct LevyPlan {
    kernel: RadialKernel,
    dim: usize,
    spec: QuadratureSpec,
    guard: f64,
    core_moments: [f64; 3],
    nodes: Vec<(f64, f64)>,
    tail_moment: f64,
    area: f64,
    required_smoothness: f64,
    rules: Mutex<HashMap<usize, Arc<SphereRule>>>,
}

impl LevyPlan {
    pub fn new(kernel: &RadialKernel, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let d = kernel.dimension();
        let guard = spec.guard_radius();
        let dm1 = d as f64 - 1.0;
        let mut core_moments = [0.0; 3];
        for (j, m) in core_moments.iter_mut().enumerate() {
            *m = kernel_moment(kernel, dm1 + 2.0 * (j + 1) as f64, 0.0, Some(guard))?;
        }
        let mut radii = Vec::new();
        let near_panels = (spec.split_radius / guard).log2().ceil() as usize;
        let ratio = (spec.split_radius / guard).powf(1.0 / near_panels as f64);
        for j in 0..near_panels {
            let a = guard * ratio.powi(j as i32);
            let b = if j + 1 == near_panels { spec.split_radius } else { a * ratio };
            radii.extend(GaussLegendre::cached(spec.core_nodes).mapped(a, b));
        }
        let shells = ((spec.truncation_radius - spec.split_radius) / SHELL_WIDTH).ceil() as usize;
        radii.extend(composite(spec.split_radius, spec.truncation_radius, shells, spec.shell_nodes));
        let nodes = radii.into_iter().map(|(r, w)| (r, w * r.powf(dm1) * kernel.profile(r))).collect();
        let tail_moment = kernel_moment(kernel, dm1, spec.truncation_radius, None)?;
        let required_smoothness = match kernel.fractional_order() {
            Some(s) => 2.0 * s,
            None => 2.0,
        };
        Ok(Self {
            kernel: kernel.clone(),
            dim: d,
            spec: *spec,
            guard,
            core_moments,
            nodes,
            tail_moment,
            area: sphere_area(d),
            required_smoothness,
            rules: Mutex::new(HashMap::new()),
        })
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    fn sphere_rule(&self, d: usize, m: usize) -> Arc<SphereRule> {
        let key = d * 100_000 + m;
        let mut rules = self.rules.lock().expect("sphere rule cache poisoned");
        rules.entry(key).or_insert_with(|| Arc::new(SphereRule::product(d, m))).clone()
    }

    /// Angular order so that one angular panel spans about ANGULAR_ARC at radius r.
    fn angular_order(&self, r: f64, cap: usize) -> usize {
        let m = (r * PI / ANGULAR_ARC).ceil() as usize * self.spec.angular_nodes / 2;
        m.clamp(self.spec.angular_nodes, cap)
    }

    /// A(r) = ∫_{𝕊^(d−1)} (u(x) − u(x + rω)) dω.
    fn spherical_difference(&self, u: &Field, x: &[f64], r: f64, isotropic: bool) -> f64 {
        if isotropic {
            return self.isotropic_difference(u, x, r);
        }
        let ux = u.eval(x);
        let d = self.dim;
        if d == 1 {
            return 2.0 * ux - u.eval(&[x[0] + r]) - u.eval(&[x[0] - r]);
        }
        let m = match d {
            2 => self.angular_order(r, 2048),
            3 => self.angular_order(r, 128),
            _ => self.spec.angular_nodes,
        };
        let rule = self.sphere_rule(d, m);
        let mut y = vec![0.0; d];
        rule.integrate(|w| {
            for j in 0..d {
                y[j] = x[j] + r * w[j];
            }
            ux - u.eval(&y)
        })
    }

    /// A(r) for a 3-isotropic field: ω = (cos ψ·η, sin ψ·ζ) with η ∈ 𝕊², and the
    /// η-average of φ(|a e₁ + bη|) becomes (2π/ab)∫_{|a−b|}^{a+b} ρ φ(ρ) dρ.
    fn isotropic_difference(&self, u: &Field, x: &[f64], r: f64) -> f64 {
        let d = self.dim;
        let m = d - 3;
        let a = block_norm(x);
        let rest = &x[3..];
        let mut buf = vec![0.0; d];
        let mut phi = |rho: f64, y: &[f64]| {
            buf[0] = rho;
            buf[3..].copy_from_slice(y);
            u.eval(&buf)
        };
        let center = phi(a, rest);
        let nodes = self.spec.angular_nodes;
        let mut inner = |b: f64, y: &[f64]| -> f64 {
            if a <= 1e-14 * b.max(1.0) {
                return 4.0 * PI * (center - phi(b, y));
            }
            if b <= 1e-14 * a.max(1.0) {
                return 4.0 * PI * (center - phi(a, y));
            }
            let lo = (a - b).abs();
            let width = 2.0 * a.min(b);
            let panels = ((width / ANGULAR_ARC).ceil() as usize).max(1);
            let sum: f64 = composite(lo, lo + width, panels, nodes)
                .into_iter()
                .map(|(rho, w)| w * rho * (center - phi(rho, y)))
                .sum();
            2.0 * PI / (a * b) * sum
        };
        if m == 0 {
            return inner(r, rest);
        }
        let psi_panels = ((r * 0.5 * PI / ANGULAR_ARC).ceil() as usize).max(2);
        let zeta = self.sphere_rule(m, if m == 2 { self.angular_order(r, 2048) } else { self.spec.angular_nodes });
        let mut y = vec![0.0; m];
        let mut total = 0.0;
        for (psi, w) in composite(0.0, 0.5 * PI, psi_panels, nodes) {
            let (s, c) = psi.sin_cos();
            let weight = w * c * c * s.powi(m as i32 - 1);
            let b = r * c;
            let mut acc = 0.0;
            for (z, &wz) in zeta.points.iter().zip(&zeta.weights) {
                for j in 0..m {
                    y[j] = rest[j] + r * s * z[j];
                }
                acc += wz * inner(b, &y);
            }
            total += weight * acc;
        }
        total
    }

    /// L u(x).
    pub fn apply(&self, u: &Field, x: &[f64]) -> Result<f64> {
        if u.dim() != self.dim || x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "operator on R^{} applied to a field on R^{} at a point of length {}",
                self.dim,
                u.dim(),
                x.len()
            )));
        }
        if u.smoothness < self.required_smoothness {
            return Err(Error::InsufficientSmoothness { declared: u.smoothness, required: self.required_smoothness });
        }
        let isotropic = self.spec.exploit_isotropy && u.symmetry == Symmetry::Isotropic3 && self.dim >= 3;
        let a = |r: f64| self.spherical_difference(u, x, r, isotropic);

        // Core: A(r)/r² is fitted by a quadratic in t = r² through three samples.
        let g = self.guard;
        let t = [g * g, g * g / 4.0, g * g / 16.0];
        let y = [a(g) / t[0], a(g / 2.0) / t[1], a(g / 4.0) / t[2]];
        let d01 = (y[1] - y[0]) / (t[1] - t[0]);
        let d12 = (y[2] - y[1]) / (t[2] - t[1]);
        let gamma = (d12 - d01) / (t[2] - t[0]);
        let beta = d01 - gamma * (t[0] + t[1]);
        let alpha = y[0] - beta * t[0] - gamma * t[0] * t[0];
        let core = alpha * self.core_moments[0] + beta * self.core_moments[1] + gamma * self.core_moments[2];

        let values: Vec<f64> = self.nodes.par_iter().map(|&(r, w)| w * a(r)).collect();
        let body: f64 = values.iter().sum();
        let mut total = core + body;
        total += self.tail(u, x, isotropic, total)?;
        if !total.is_finite() {
            return Err(Error::SingularQuadratureFailure(format!("operator value at {x:?} is not finite")));
        }
        Ok(total)
    }

    /// ∫_R^∞ r^(d−1)𝒦(r)A(r) dr.
    fn tail(&self, u: &Field, x: &[f64], isotropic: bool, partial: f64) -> Result<f64> {
        let big_r = self.spec.truncation_radius;
        let floor = 1e-3 * self.spec.target_tol * partial.abs().max(1.0);
        let dm1 = self.dim as f64 - 1.0;
        let panel = |lo: f64, hi: f64, f: &(dyn Fn(f64) -> f64 + Sync)| -> f64 {
            let panels = ((hi - lo) / (4.0 * SHELL_WIDTH)).ceil().clamp(1.0, 64.0) as usize;
            let nodes = composite(lo, hi, panels, self.spec.shell_nodes);
            let values: Vec<f64> = nodes
                .par_iter()
                .map(|&(r, w)| w * r.powf(dm1) * self.kernel.profile(r) * f(r))
                .collect();
            values.iter().sum()
        };
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let decay = u.decay.filter(|b| b.exponent > 0.0);
        // Bound on the spherical mean of |u| at radius r, when one is declared.
        let envelope = |r: f64| -> f64 {
            if let Some(support) = u.support_radius {
                if r > xn + support {
                    return 0.0;
                }
            }
            match decay {
                Some(b) if r > xn => self.area * b.constant * (1.0 + r - xn).powf(-b.exponent),
                _ => f64::INFINITY,
            }
        };
        if decay.is_some() || u.support_radius.is_some() {
            // A(r) = |𝕊|u(x) − ∫u(x + rω)dω; the second part decays with u.
            let ux = u.eval(x);
            let main = self.area * ux * self.tail_moment;
            let mean = |r: f64| self.area * ux - self.spherical_difference(u, x, r, isotropic);
            let mut correction = 0.0;
            let mut lo = big_r;
            for _ in 0..40 {
                let bound = envelope(lo);
                if bound == 0.0 || bound * kernel_moment(&self.kernel, dm1, lo, None)? <= floor {
                    return Ok(main - correction);
                }
                let hi = 2.0 * lo;
                correction += panel(lo, hi, &mean);
                lo = hi;
            }
            return Err(Error::SingularQuadratureFailure(format!("decaying tail at {x:?} did not settle")));
        }
        let diff = |r: f64| self.spherical_difference(u, x, r, isotropic);
        let mut total = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        let mut lo = big_r;
        for _ in 0..60 {
            let hi = 2.0 * lo;
            let part = panel(lo, hi, &diff);
            total += part;
            if part.abs() <= floor {
                return Ok(total);
            }
            if let Some((p, q_prev)) = prev {
                let q = part / p;
                // A steady ratio means a power-law tail; sum it geometrically.
                if q > 0.0 && q < 1.0 && (q - q_prev).abs() <= 1e-6 * q {
                    return Ok(total + part * q / (1.0 - q));
                }
                prev = Some((part, q));
            } else {
                prev = Some((part, f64::NAN));
            }
            lo = hi;
        }
        Err(Error::SingularQuadratureFailure(format!("kernel tail at {x:?} did not settle")))
    }

    /// L u at every point, in input order.
    pub fn apply_many(&self, u: &Field, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.apply(u, x)).collect()
    }
}

/// L_n u(x) for the kernel 𝒦_n.
pub fn apply_levy_direct(k: &RadialKernel, u: &Field, x: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    LevyPlan::new(k, spec)?.apply(u, x)
}

/// (−Δ)^s u(x).
pub fn apply_flap_direct(s: f64, u: &Field, x: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    LevyPlan::new(&fractional_kernel(u.dim(), s)?, spec)?.apply(u, x)
}

/// An operator given either by its fractional order or by an explicit kernel in dimension n.
#[derive(Debug, Clone)]
pub enum OperatorSpec {
    Fractional(f64),
    Kernel(RadialKernel),
}

impl OperatorSpec {
    /// The kernel in dimension n.
    pub fn kernel(&self, n: usize) -> Result<RadialKernel> {
        match self {
            Self::Fractional(s) => fractional_kernel(n, *s),
            Self::Kernel(k) if k.dimension() == n => Ok(k.clone()),
            Self::Kernel(k) => {
                Err(Error::InvalidInput(format!("kernel lives on R^{} but the field on R^{n}", k.dimension())))
            }
        }
    }

    /// The kernel in dimension n + 2.
    pub fn lifted_kernel(&self, n: usize) -> Result<RadialKernel> {
        match self {
            Self::Fractional(s) => fractional_kernel(n + 2, *s),
            Self::Kernel(_) => lift_kernel(&self.kernel(n)?),
        }
    }
}

/// ℱ₃ of the radial function with profile f0 at |ξ| = rho.
pub fn radial_fourier_3d(f0: &(dyn Fn(f64) -> f64 + Sync), rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!("rho must be nonnegative, got {rho}")));
    }
    if rho == 0.0 {
        let m = half_line(|r| r * r * f0(r), 1.0, 1e-300, 1e-13)
            .map_err(|e| Error::OscillatoryQuadratureFailure(e.to_string()))?;
        return Ok(4.0 * PI * m);
    }
    let half = 0.5 / rho;
    let sub = (half / 0.5).ceil().max(1.0) as usize;
    let w = 2.0 * PI * rho;
    let panel = |k: usize| {
        let a = k as f64 * half;
        let h = half / sub as f64;
        (0..sub)
            .map(|j| {
                let (lo, hi) = (a + j as f64 * h, a + (j + 1) as f64 * h);
                adaptive_estimate(&mut |r: f64| r * f0(r) * (w * r).sin(), lo, hi, 1e-300, 1e-14, 200).0
            })
            .sum::<f64>()
    };
    let integral = accelerate_panels(panel, 1e-13, 6, 4000)?;
    Ok(2.0 / rho * integral)
}

/// max over ξ of |ℱ₁[x f](ξ) − iξ·ℱ₃f̃(ξ, 0, 0)|.
pub fn bochner_residual(f: &Field, xi_grid: &[f64]) -> Result<f64> {
    Ok(bochner_report(f, xi_grid)?.residual)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BochnerRow {
    pub xi: f64,
    /// Imaginary part of ℱ₁[x f](ξ).
    pub lhs: f64,
    /// ξ·ℱ₃f̃(|ξ|).
    pub rhs: f64,
    /// Imaginary part of ℱ₁[x f](ξ) by the trapezoid rule on a fine grid.
    pub spectral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BochnerReport {
    pub rows: Vec<BochnerRow>,
    pub residual: f64,
    /// Largest gap between the oscillatory and trapezoid evaluations of ℱ₁.
    pub spectral_gap: f64,
}

pub fn bochner_report(f: &Field, xi_grid: &[f64]) -> Result<BochnerReport> {
    if f.dim() != 1 {
        return Err(Error::InvalidInput(format!("bochner_residual needs a field on R, got R^{}", f.dim())));
    }
    let rows: Vec<Result<(BochnerRow, f64)>> = xi_grid
        .par_iter()
        .map(|&xi| {
            let (re, im) = fourier_1d_odd(f, xi)?;
            let profile = |r: f64| f.eval(&[r]);
            let rhs = if xi == 0.0 { 0.0 } else { xi * radial_fourier_3d(&profile, xi.abs())? };
            let spectral = trapezoid_sine(f, xi);
            let gap = re.abs().max((im - rhs).abs());
            Ok((BochnerRow { xi, lhs: im, rhs, spectral }, gap))
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    let mut residual: f64 = 0.0;
    let mut spectral_gap: f64 = 0.0;
    for row in rows {
        let (row, gap) = row?;
        residual = residual.max(gap);
        spectral_gap = spectral_gap.max((row.spectral - row.lhs).abs());
        out.push(row);
    }
    Ok(BochnerReport { rows: out, residual, spectral_gap })
}

/// (Re, Im) of ∫_ℝ x f(x) e^(2πiξx) dx over both half-lines, with half-period
/// panels split into sub-panels of fixed Gauss rules.
fn fourier_1d_odd(f: &Field, xi: f64) -> Result<(f64, f64)> {
    let gl = GaussLegendre::cached(32);
    let piece = |lo: f64, hi: f64, trig: &dyn Fn(f64) -> f64| -> f64 {
        gl.mapped(lo, hi).map(|(x, w)| w * x * f.eval(&[x]) * trig(x)).sum()
    };
    if xi == 0.0 {
        let moment = |lo: f64, hi: f64| piece(lo, hi, &|_| 1.0) + piece(-hi, -lo, &|_| 1.0);
        let mut total = 0.0;
        let mut lo = 0.0;
        for _ in 0..200 {
            let hi = lo + 0.5;
            total += moment(lo, hi);
            lo = hi;
        }
        return Ok((total, 0.0));
    }
    let half = 0.5 / xi.abs();
    let sub = (half / 0.25).ceil().max(1.0) as usize;
    let w = 2.0 * PI * xi;
    let side_sum = |k: usize, trig: &dyn Fn(f64) -> f64| -> f64 {
        let a = k as f64 * half;
        let h = half / sub as f64;
        (0..sub)
            .map(|j| {
                let (lo, hi) = (a + j as f64 * h, a + (j + 1) as f64 * h);
                piece(lo, hi, trig) + piece(-hi, -lo, trig)
            })
            .sum()
    };
    let im = accelerate_panels(|k| side_sum(k, &|x| (w * x).sin()), 1e-13, 6, 4000)?;
    let re = accelerate_panels(|k| side_sum(k, &|x| (w * x).cos()), 1e-13, 6, 4000)?;
    Ok((re, im))
}

/// Σ_j h·x_j f(x_j) sin(2πξx_j) on x_j = jh, |x_j| ≤ 64, h = 1/64.
fn trapezoid_sine(f: &Field, xi: f64) -> f64 {
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    for j in (1..=64 * 64).rev() {
        let x = j as f64 * h;
        sum += 2.0 * x * f.eval(&[x]) * (2.0 * PI * xi * x).sin();
    }
    h * sum
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OddIdentityRow {
    pub point: Vec<f64>,
    /// L_n u(x).
    pub lhs: f64,
    /// L_{n+2}ṽ((x₁, 0, 0), x₂, …).
    pub lifted: f64,
    pub residual: f64,
}

/// max over points of |L_n u(x) − x₁L_{n+2}ṽ((x₁,0,0),x′)| / (|x₁|·max(1, |L_{n+2}ṽ|)).
pub fn odd_identity_residual(op: &OperatorSpec, u: &Field, points: &[Vec<f64>], spec: &QuadratureSpec) -> Result<f64> {
    let rows = odd_identity_report(op, u, points, spec)?;
    Ok(rows.iter().fold(0.0, |m, r| m.max(r.residual)))
}

pub fn odd_identity_report(
    op: &OperatorSpec,
    u: &Field,
    points: &[Vec<f64>],
    spec: &QuadratureSpec,
) -> Result<Vec<OddIdentityRow>> {
    let n = u.dim();
    if points.iter().any(|p| p.len() != n || p[0] == 0.0) {
        return Err(Error::InvalidInput("probe points must lie in R^n off the hyperplane x1 = 0".into()));
    }
    let low = LevyPlan::new(&op.kernel(n)?, spec)?;
    let high = LevyPlan::new(&op.lifted_kernel(n)?, spec)?;
    let v = lift_field(u)?;
    points
        .iter()
        .map(|x| {
            let lhs = low.apply(u, x)?;
            let mut y = vec![0.0; n + 2];
            y[0] = x[0];
            y[3..].copy_from_slice(&x[1..]);
            let lifted = high.apply(&v, &y)?;
            let residual = (lhs - x[0] * lifted).abs() / (x[0].abs() * lifted.abs().max(1.0));
            Ok(OddIdentityRow { point: x.clone(), lhs, lifted, residual })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingReport {
    /// ⟨u, L_n g⟩ on ℝⁿ.
    pub forward_lhs: f64,
    /// (2π)^(−1)⟨ṽ, L_{n+2}f̃⟩ on ℝⁿ⁺² with f̃ the lift of g_A.
    pub forward_rhs: f64,
    pub forward_residual: f64,
    /// (2π)^(−1)⟨ṽ, L_{n+2}f̃_e⟩ for a test f̃_e that is not 3-isotropic.
    pub reverse_lhs: f64,
    /// ⟨u, L_n(x₁f)⟩ with f the isotropic symmetrization of f̃_e.
    pub reverse_rhs: f64,
    pub reverse_residual: f64,
    pub residual: f64,
}

/// Nodes for ∫_ℝ: composite Gauss on [−R, R] plus mapped tails beyond.
fn line_rule(radius: f64) -> Vec<(f64, f64)> {
    let panels = (2.0 * radius / 0.5).ceil() as usize;
    let mut nodes = composite(-radius, radius, panels, 12);
    let gl = GaussLegendre::cached(24);
    for (t, w) in gl.mapped(0.0, 1.0) {
        let x = radius + t / (1.0 - t);
        let wx = w / ((1.0 - t) * (1.0 - t));
        nodes.push((x, wx));
        nodes.push((-x, wx));
    }
    nodes
}

/// ∫_{ℝⁿ} h by the tensor product of `rule`.
fn tensor_points(n: usize, rule: &[(f64, f64)]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|(p, w)| {
                rule.iter().map(move |&(x, wx)| {
                    let mut q = p.clone();
                    q.push(x);
                    (q, w * wx)
                })
            })
            .collect();
    }
    out
}

fn pair_on_rn(u: &Field, lg: &[f64], points: &[(Vec<f64>, f64)]) -> f64 {
    points.iter().zip(lg).map(|((x, w), l)| w * u.eval(x) * l).sum()
}

/// Residual of ⟨u, L g⟩_{ℝⁿ} = (2π)^(−1)⟨ṽ, L f̃⟩_{ℝⁿ⁺²} and of its reverse form.
pub fn weak_pairing_residual(u: &Field, g: &Field, s: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(weak_pairing_report(u, g, &OperatorSpec::Fractional(s), spec)?.residual)
}

pub fn weak_pairing_report(u: &Field, g: &Field, op: &OperatorSpec, spec: &QuadratureSpec) -> Result<PairingReport> {
    let n = u.dim();
    if g.dim() != n {
        return Err(Error::InvalidInput(format!("test function on R^{} paired with a field on R^{n}", g.dim())));
    }
    let support = g
        .support_radius
        .ok_or_else(|| Error::InvalidInput("the test function must declare a compact support radius".into()))?;
    let low = LevyPlan::new(&op.kernel(n)?, spec)?;
    let high = LevyPlan::new(&op.lifted_kernel(n)?, spec)?;
    let v = lift_field(u)?;

    let outer = tensor_points(n, &line_rule(support + 0.5 * spec.truncation_radius));
    let outer_x: Vec<Vec<f64>> = outer.iter().map(|p| p.0.clone()).collect();
    let lg = low.apply_many(g, &outer_x)?;
    let forward_lhs = pair_on_rn(u, &lg, &outer);

    // (n+2)-dimensional sides. L f̃ is not compactly supported, so the forward
    // pairing runs over τ ∈ (0, ∞) and b ∈ ℝ^(n−1); the reverse pairing only
    // needs the support of f̃_e.
    let half: Vec<(f64, f64)> = line_rule(support + 0.5 * spec.truncation_radius).into_iter().filter(|p| p.0 > 0.0).collect();
    let panels = ((support / 0.25).ceil() as usize).max(1);
    let tau_rule = composite(0.0, support, panels, 12);
    let b_rule = composite(-support, support, 2 * panels, 12);
    let b_full = line_rule(support + 0.5 * spec.truncation_radius);
    let lifted_grid = |taus: &[(f64, f64)], bs: &[(f64, f64)]| -> Vec<(Vec<f64>, f64)> {
        tensor_points(n - 1, bs)
            .into_iter()
            .flat_map(|(b, wb)| {
                taus.iter()
                    .map(|&(tau, wt)| {
                        let mut y = vec![0.0; n + 2];
                        y[0] = tau;
                        y[3..].copy_from_slice(&b);
                        (y, 4.0 * PI * tau * tau * wt * wb)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    let forward_points = lifted_grid(&half, &b_full);
    let forward_x: Vec<Vec<f64>> = forward_points.iter().map(|p| p.0.clone()).collect();
    let lifted_points = lifted_grid(&tau_rule, &b_rule);
    let lifted_x: Vec<Vec<f64>> = lifted_points.iter().map(|p| p.0.clone()).collect();

    let ga = antisymmetric_part(g);
    let forward_rhs = if ga_vanishes(&ga, &outer_x) {
        0.0
    } else {
        let f_tilde = lift_field(&ga)?;
        let lf = high.apply_many(&f_tilde, &forward_x)?;
        forward_points.iter().zip(&lf).map(|((y, w), l)| w * v.eval(y) * l).sum::<f64>() / (2.0 * PI)
    };
    let forward_residual = (forward_lhs - forward_rhs).abs() / forward_lhs.abs().max(1.0);

    // Reverse: a non-isotropic f̃_e; ⟨ṽ, L f̃_e⟩ = ⟨Lṽ, f̃_e⟩ and Lṽ is 3-isotropic.
    let (reverse_lhs, reverse_rhs) = if ga_vanishes(&ga, &outer_x) {
        (0.0, 0.0)
    } else {
        let base = lift_field(&ga)?;
        let f_e = {
            let support = base.support_radius;
            let mut f = Field::new(n + 2, move |y: &[f64]| base.eval(y) * (1.0 + 0.5 * y[0] + 0.3 * y[0] * y[0]));
            f.support_radius = support;
            f
        };
        let lv = high.apply_many(&v, &lifted_x)?;
        let sphere = SphereRule::product(3, 12);
        let reverse_lhs = lifted_points
            .iter()
            .zip(&lv)
            .map(|((y, w), l)| {
                let tau = y[0];
                let mut z = y.clone();
                let avg = sphere.integrate(|e| {
                    z[0] = tau * e[0];
                    z[1] = tau * e[1];
                    z[2] = tau * e[2];
                    f_e.eval(&z)
                }) / (4.0 * PI);
                w * l * avg
            })
            .sum::<f64>()
            / (2.0 * PI);
        let sym = isotropic_symmetrize_with(&f_e, 6)?;
        let g_e = {
            let sym = sym.clone();
            let mut f = Field::new(n, move |x: &[f64]| x[0] * sym.eval(x)).with_symmetry(Symmetry::Antisymmetric);
            f.support_radius = Some(support);
            f
        };
        let lge = low.apply_many(&g_e, &outer_x)?;
        (reverse_lhs, pair_on_rn(u, &lge, &outer))
    };
    let reverse_residual = (reverse_lhs - reverse_rhs).abs() / reverse_rhs.abs().max(1.0);
    Ok(PairingReport {
        forward_lhs,
        forward_rhs,
        forward_residual,
        reverse_lhs,
        reverse_rhs,
        reverse_residual,
        residual: forward_residual.max(reverse_residual),
    })
}

fn ga_vanishes(ga: &Field, probes: &[Vec<f64>]) -> bool {
    probes.iter().all(|x| ga.eval(x) == 0.0)
}

/// (lhs, rhs) of r∫_{𝕊²}(α² + |rz − βe₁|²)^(−1−γ)dz = (π/(βγ))[(α²+(r−β)²)^(−γ) − (α²+(r+β)²)^(−γ)].
pub fn sphere_kernel_identity(alpha: f64, beta: f64, r: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && beta > 0.0 && r > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidInput(format!("sphere identity needs positive parameters, got ({alpha}, {beta}, {r}, {gamma})")));
    }
    let c = alpha * alpha + beta * beta + r * r;
    let inner = adaptive(|t| (c - 2.0 * r * beta * t).powf(-1.0 - gamma), -1.0, 1.0, 1e-300, 1e-14)?;
    let lhs = r * 2.0 * PI * inner;
    let near = alpha * alpha + (r - beta) * (r - beta);
    let far = alpha * alpha + (r + beta) * (r + beta);
    // a^(−γ) − b^(−γ) = −a^(−γ)·expm1(γ ln(a/b)), stable when a ≈ b.
    let rhs = -PI / (beta * gamma) * near.powf(-gamma) * (gamma * (near / far).ln()).exp_m1();
    Ok((lhs, rhs))
}

/// Second-order central Laplacian of w at p with step h.
fn fd_laplacian(w: &dyn Fn(&[f64]) -> f64, p: &[f64], h: f64) -> f64 {
    let mut q = p.to_vec();
    let center = w(p);
    let mut sum = 0.0;
    for i in 0..p.len() {
        q[i] = p[i] + h;
        let plus = w(&q);
        q[i] = p[i] - h;
        let minus = w(&q);
        q[i] = p[i];
        sum += plus - 2.0 * center + minus;
    }
    sum / (h * h)
}

/// Fourth-order central first and second derivatives of f at 0 along a line.
fn fd4(f: &dyn Fn(f64) -> f64, h: f64) -> (f64, f64) {
    let (m2, m1, c, p1, p2) = (f(-2.0 * h), f(-h), f(0.0), f(h), f(2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// max over points (ρ, z) of the relative gap between the finite-difference
/// Laplacian of |y|^λ u(|y|, z) on ℝᵏ × ℝᵐ and
/// (λ+k−2)λρ^(λ−2)u + (2λ+k−1)ρ^(λ−1)∂_ρu + ρ^λ∂²_ρu + ρ^λΔ_z u.
pub fn cylindrical_identity_residual(k: usize, lambda: f64, u: &Field, points: &[Vec<f64>]) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("cylindrical identity needs k >= 2, got {k}")));
    }
    let m = u.dim() - 1;
    let h = 1e-3;
    let h_u = 1e-3;
    let kf = k as f64;
    let mut worst: f64 = 0.0;
    for p in points {
        if p.len() != m + 1 || p[0] < 0.1 {
            return Err(Error::InvalidInput(format!("point {p:?} must be (rho, z) with rho >= 0.1")));
        }
        let rho = p[0];
        let z = &p[1..];
        let w = |q: &[f64]| {
            let r = q[..k].iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut arg = Vec::with_capacity(m + 1);
            arg.push(r);
            arg.extend_from_slice(&q[k..]);
            r.powf(lambda) * u.eval(&arg)
        };
        let mut at = vec![0.0; k + m];
        at[0] = rho;
        at[k..].copy_from_slice(z);
        // One Richardson step on the h and h/2 stencils cancels the h² term.
        let lhs = (4.0 * fd_laplacian(&w, &at, 0.5 * h) - fd_laplacian(&w, &at, h)) / 3.0;

        let along = |i: usize| {
            move |t: f64| {
                let mut q = p.clone();
                q[i] += t;
                u.eval(&q)
            }
        };
        let u0 = u.eval(p);
        let (du, d2u) = fd4(&along(0), h_u);
        let lap_z: f64 = (1..=m).map(|i| fd4(&along(i), h_u).1).sum();
        let rhs = (lambda + kf - 2.0) * lambda * rho.powf(lambda - 2.0) * u0
            + (2.0 * lambda + kf - 1.0) * rho.powf(lambda - 1.0) * du
            + rho.powf(lambda) * (d2u + lap_z);
        let mut gap = (lhs - rhs).abs() / rhs.abs().max(1.0);
        if k == 3 && lambda == -1.0 {
            let harmonic = (d2u + lap_z) / rho;
            gap = gap.max((lhs - harmonic).abs() / harmonic.abs().max(1.0));
        }
        worst = worst.max(gap);
    }
    Ok(worst)
}
