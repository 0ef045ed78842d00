//! Radial Lévy kernels, their admissibility checks, and the dimension lift
//! 𝒦_n ↦ 𝒦_{n+2}(r) = −𝒦_n′(r)/(2πr) with its inverse.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive, dyadic_sum};
use crate::special::{log_gamma, sphere_area};

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Dyadic probe radii 2^k, k = −20..=20.
pub fn probe_radii() -> impl Iterator<Item = f64> {
    (-20..=20).map(|k| 2f64.powi(k))
}

/// Parameters of the fractional-Laplacian kernel C(n, s)·r^(−n−2s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalKernelSpec {
    pub dimension: usize,
    pub order: f64,
    pub constant: f64,
}

impl FractionalKernelSpec {
    pub fn new(dimension: usize, order: f64) -> Result<Self> {
        Ok(Self { dimension, order, constant: fractional_constant(dimension, order)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelFamily {
    Fractional(FractionalKernelSpec),
    Gaussian,
    Table(Vec<[f64; 2]>),
    Custom,
}

/// A radial jump kernel 𝒦_n(r) on ℝⁿ.
#[derive(Clone)]
pub struct RadialKernel {
    dimension: usize,
    profile: RadialFn,
    derivative: Option<RadialFn>,
    /// profile(r) ≤ C·r^(−n−decay_rate) for r ≥ 1.
    pub decay_rate: f64,
    /// profile(r) ≤ C·r^(−n−singularity_order) near 0; −n for bounded kernels.
    pub singularity_order: f64,
    family: KernelFamily,
}

impl fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialKernel")
            .field("dimension", &self.dimension)
            .field("decay_rate", &self.decay_rate)
            .field("singularity_order", &self.singularity_order)
            .field("family", &self.family)
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl RadialKernel {
    /// Builds a kernel and checks nonnegativity on the probe radii.
    pub fn new<F>(dimension: usize, profile: F, decay_rate: f64, singularity_order: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if dimension == 0 {
            return Err(Error::InvalidInput("kernel dimension must be >= 1".into()));
        }
        let k = Self {
            dimension,
            profile: Arc::new(profile),
            derivative: None,
            decay_rate,
            singularity_order,
            family: KernelFamily::Custom,
        };
        for r in probe_radii() {
            let v = k.profile(r);
            if !(v >= 0.0) || v.is_infinite() {
                return Err(Error::InvalidInput(format!("kernel profile is {v} at r = {r}")));
            }
        }
        Ok(k)
    }

    /// Attaches an analytic derivative, checked against central differences at {0.5, 1, 2}.
    pub fn with_derivative<F>(mut self, derivative: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let derivative: RadialFn = Arc::new(derivative);
        for r in [0.5, 1.0, 2.0] {
            let fd = self.finite_difference(r);
            let an = derivative(r);
            let scale = an.abs().max(1e-300);
            if (fd - an).abs() > 1e-6 * scale && (fd - an).abs() > 1e-12 * self.profile(r) / r {
                return Err(Error::InvalidInput(format!(
                    "derivative mismatch at r = {r}: analytic {an:e}, finite difference {fd:e}"
                )));
            }
        }
        self.derivative = Some(derivative);
        Ok(self)
    }

    fn with_family(mut self, family: KernelFamily) -> Self {
        self.family = family;
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    #[inline]
    pub fn profile(&self, r: f64) -> f64 {
        (self.profile)(r)
    }

    /// 𝒦′(r), analytic when available, else central differences.
    pub fn derivative(&self, r: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(r),
            None => self.finite_difference(r),
        }
    }

    fn finite_difference(&self, r: f64) -> f64 {
        // h = max(1e−5, 1e−5·r), kept inside (0, ∞) for tiny r.
        let h = (1e-5f64).max(1e-5 * r).min(0.5 * r);
        (self.profile(r + h) - self.profile(r - h)) / (2.0 * h)
    }

    /// Fractional order s when this is a fractional-Laplacian kernel.
    pub fn fractional_order(&self) -> Option<f64> {
        match &self.family {
            KernelFamily::Fractional(spec) => Some(spec.order),
            _ => None,
        }
    }

    /// Order of the operator: 2s for fractional-type singularities, 0 for integrable ones.
    pub fn operator_order(&self) -> f64 {
        self.singularity_order.max(0.0)
    }

    /// ∫_{lo}^{hi} 𝒦(r)·r^p dr.
    pub fn moment(&self, p: f64, lo: f64, hi: f64) -> Result<f64> {
        if lo == 0.0 {
            return dyadic_sum(|r| self.profile(r) * r.powf(p), hi, true, 1e-15, 400);
        }
        adaptive(|r| self.profile(r) * r.powf(p), lo, hi, 1e-300, 1e-14)
    }

    /// ∫_{lo}^∞ 𝒦(r)·r^p dr.
    pub fn tail_moment(&self, p: f64, lo: f64) -> Result<f64> {
        if self.decay_rate + self.dimension as f64 - p - 1.0 <= 0.0 {
            return Err(Error::TailDivergence(format!(
                "r^{p} times a kernel decaying like r^-{} is not integrable",
                self.dimension as f64 + self.decay_rate
            )));
        }
        dyadic_sum(|r| self.profile(r) * r.powf(p), lo, false, 1e-15, 400)
            .map_err(|e| Error::TailDivergence(e.to_string()))
    }

    pub fn spec(&self) -> Option<KernelSpec> {
        match &self.family {
            KernelFamily::Fractional(f) => Some(KernelSpec {
                family: KernelFamilyTag::Fractional,
                n: f.dimension,
                s: Some(f.order),
                samples: None,
            }),
            KernelFamily::Gaussian => {
                Some(KernelSpec { family: KernelFamilyTag::Gaussian, n: self.dimension, s: None, samples: None })
            }
            KernelFamily::Table(samples) => Some(KernelSpec {
                family: KernelFamilyTag::Table,
                n: self.dimension,
                s: None,
                samples: Some(samples.clone()),
            }),
            KernelFamily::Custom => None,
        }
    }
}

/// C(n, s) = 4^s Γ(n/2 + s) / (π^(n/2) |Γ(−s)|).
pub fn fractional_constant(n: usize, s: f64) -> Result<f64> {
    if !(1..=8).contains(&n) || !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidInput(format!("fractional_constant needs 1 <= n <= 8 and 0 < s < 1, got ({n}, {s})")));
    }
    let half_n = n as f64 / 2.0;
    // |Γ(−s)| = Γ(1 − s)/s.
    let log_c = s * 4f64.ln() + log_gamma(half_n + s) - half_n * PI.ln() - log_gamma(1.0 - s) + s.ln();
    Ok(log_c.exp())
}

/// 𝒦(r) = C(n, s)·r^(−n−2s), the kernel of (−Δ)^s on ℝⁿ.
pub fn fractional_kernel(n: usize, s: f64) -> Result<RadialKernel> {
    let spec = FractionalKernelSpec::new(n, s)?;
    let c = spec.constant;
    let p = n as f64 + 2.0 * s;
    Ok(RadialKernel::new(n, move |r| c * r.powf(-p), 2.0 * s, 2.0 * s)?
        .with_derivative(move |r| -p * c * r.powf(-p - 1.0))?
        .with_family(KernelFamily::Fractional(spec)))
}

/// 𝒦(r) = e^(−πr²) on ℝⁿ; a fixed point of the lift.
pub fn gaussian_kernel(n: usize) -> Result<RadialKernel> {
    Ok(RadialKernel::new(n, |r| (-PI * r * r).exp(), 64.0, -(n as f64))?
        .with_derivative(|r| -2.0 * PI * r * (-PI * r * r).exp())?
        .with_family(KernelFamily::Gaussian))
}

/// Kernel given by positive samples, interpolated linearly in log–log scale
/// and extrapolated with the end slopes.
pub fn table_kernel(n: usize, samples: &[[f64; 2]]) -> Result<RadialKernel> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("table kernel needs at least two samples".into()));
    }
    for w in samples.windows(2) {
        if !(w[0][0] > 0.0 && w[1][0] > w[0][0]) {
            return Err(Error::InvalidInput("table radii must be positive and increasing".into()));
        }
    }
    if samples.iter().any(|p| !(p[1] > 0.0) || !p[1].is_finite()) {
        return Err(Error::InvalidInput("table values must be positive and finite".into()));
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|p| (p[0].ln(), p[1].ln())).collect();
    let slope = |i: usize| (logs[i + 1].1 - logs[i].1) / (logs[i + 1].0 - logs[i].0);
    let m = logs.len();
    let first = slope(0);
    let last = slope(m - 2);
    let table = logs.clone();
    let profile = move |r: f64| {
        let x = r.ln();
        let i = match table.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(i) => return table[i].1.exp(),
            Err(i) => i,
        };
        let (a, b) = if i == 0 {
            (table[0], table[1])
        } else if i >= table.len() {
            (table[table.len() - 2], table[table.len() - 1])
        } else {
            (table[i - 1], table[i])
        };
        let t = (x - a.0) / (b.0 - a.0);
        (a.1 + t * (b.1 - a.1)).exp()
    };
    Ok(RadialKernel::new(n, profile, -last - n as f64, -first - n as f64)?.with_family(KernelFamily::Table(samples.to_vec())))
}

/// sphere_area(n)·∫₀^∞ min(1, r²)𝒦(r) r^(n−1) dr, with a heuristic divergence probe.
pub fn check_levy_integrability(k: &RadialKernel) -> Result<f64> {
    let n = k.dimension;
    let g = |r: f64| r.powi(2).min(1.0) * k.profile(r) * r.powi(n as i32 - 1);
    // q(r) = g(r)·r^(1−ε) must not grow toward 0 along the dyadic probes.
    let eps = 1e-3;
    let q = |r: f64| g(r) * r.powf(1.0 - eps);
    let (q_deep, q_mid) = (q(2f64.powi(-20)), q(2f64.powi(-10)));
    if !q_deep.is_finite() || q_deep > q_mid * (1.0 + 1e-9) {
        return Err(Error::DivergentKernel(format!(
            "near-zero integrand exceeds the r^(-1+{eps}) envelope (q(2^-20) = {q_deep:e}, q(2^-10) = {q_mid:e})"
        )));
    }
    if !(k.decay_rate > 0.0) {
        return Err(Error::DivergentKernel(format!("tail bound r^-(n+{}) is not integrable", k.decay_rate)));
    }
    let near = k.moment(n as f64 + 1.0, 0.0, 1.0).map_err(|e| Error::DivergentKernel(e.to_string()))?;
    let far = k.tail_moment(n as f64 - 1.0, 1.0).map_err(|e| Error::DivergentKernel(e.to_string()))?;
    Ok(sphere_area(n) * (near + far))
}

/// 𝒦_{n+2}(r) = −𝒦_n′(r)/(2πr).
pub fn lift_kernel(k: &RadialKernel) -> Result<RadialKernel> {
    for r in probe_radii() {
        let d = k.derivative(r);
        if d > 1e-10 * k.profile(r) / r {
            return Err(Error::NegativeKernel { radius: r, derivative: d });
        }
    }
    let base = k.clone();
    let lifted = RadialKernel {
        dimension: k.dimension + 2,
        profile: Arc::new(move |r| -base.derivative(r) / (2.0 * PI * r)),
        derivative: None,
        decay_rate: k.decay_rate,
        singularity_order: k.singularity_order,
        family: KernelFamily::Custom,
    };
    check_levy_integrability(&lifted)?;
    Ok(lifted)
}

/// 𝒦_n(r) = 2π∫_r^∞ t·𝒦_{n+2}(t) dt.
pub fn unlift_kernel(k2: &RadialKernel) -> Result<RadialKernel> {
    if k2.dimension < 3 {
        return Err(Error::InvalidInput(format!("cannot unlift a kernel on R^{}", k2.dimension)));
    }
    if !(k2.decay_rate > 0.0) {
        return Err(Error::TailDivergence(format!("decay_rate {} is not positive", k2.decay_rate)));
    }
    let n = k2.dimension - 2;
    // Probe the tail integral once so divergence is reported at construction.
    let probe = k2.tail_moment(1.0, 1.0)?;
    if !probe.is_finite() {
        return Err(Error::TailDivergence("tail integral is not finite".into()));
    }
    let base = k2.clone();
    let deriv = k2.clone();
    Ok(RadialKernel {
        dimension: n,
        profile: Arc::new(move |r| 2.0 * PI * base.tail_moment(1.0, r).unwrap_or(f64::NAN)),
        derivative: Some(Arc::new(move |r| -2.0 * PI * r * deriv.profile(r))),
        decay_rate: k2.decay_rate,
        singularity_order: k2.singularity_order,
        family: KernelFamily::Custom,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamilyTag {
    Fractional,
    Gaussian,
    Table,
}

/// Serializable kernel description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: KernelFamilyTag,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<[f64; 2]>>,
}

impl KernelSpec {
    pub fn build(&self) -> Result<RadialKernel> {
        match self.family {
            KernelFamilyTag::Fractional => {
                let s = self.s.ok_or_else(|| Error::InvalidInput("fractional kernel needs field `s`".into()))?;
                fractional_kernel(self.n, s)
            }
            KernelFamilyTag::Gaussian => gaussian_kernel(self.n),
            KernelFamilyTag::Table => {
                let samples =
                    self.samples.as_ref().ok_or_else(|| Error::InvalidInput("table kernel needs field `samples`".into()))?;
                table_kernel(self.n, samples)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rational(n: usize) -> RadialKernel {
        RadialKernel::new(n, |r| 1.0 / (1.0 + r * r), 2.0 - n as f64, -(n as f64))
            .unwrap()
            .with_derivative(|r| -2.0 * r / (1.0 + r * r).powi(2))
            .unwrap()
    }

    #[test]
    fn fractional_constant_examples() {
        assert!((fractional_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
        // C(3, ½) = 1/π², C(2, ½) = 1/(2π)
        assert!((fractional_constant(3, 0.5).unwrap() - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!((fractional_constant(2, 0.5).unwrap() - 0.5 / PI).abs() < 1e-15);
        assert!(fractional_constant(0, 0.5).is_err());
        assert!(fractional_constant(1, 1.0).is_err());
    }

    #[test]
    fn constant_recurrence() {
        for n in 1..=4 {
            for s in [0.25, 0.5, 0.75] {
                let ratio = fractional_constant(n + 2, s).unwrap() / fractional_constant(n, s).unwrap();
                let want = (n as f64 + 2.0 * s) / (2.0 * PI);
                assert!((ratio - want).abs() <= 1e-12 * want, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn gaussian_integrability_matches_oracle() {
        let v = check_levy_integrability(&gaussian_kernel(1).unwrap()).unwrap();
        // 2∫₀^∞ min(1, r²)e^(−πr²) dr
        assert!((v - 0.155_648_487_022_125_124).abs() < 1e-12, "{v}");
    }

    #[test]
    fn fractional_integrability() {
        let v = check_levy_integrability(&fractional_kernel(1, 0.5).unwrap()).unwrap();
        assert!((v - 4.0 / PI).abs() < 1e-10, "{v}");
    }

    #[test]
    fn cubic_singularity_is_divergent() {
        let k = RadialKernel::new(1, |r| r.powi(-3), 2.0, 2.0).unwrap();
        assert!(matches!(check_levy_integrability(&k), Err(Error::DivergentKernel(_))));
        let flat = RadialKernel::new(1, |_| 1.0, 0.0 - 1.0, -1.0).unwrap();
        assert!(matches!(check_levy_integrability(&flat), Err(Error::DivergentKernel(_))));
    }

    #[test]
    fn lift_examples() {
        let g = lift_kernel(&gaussian_kernel(1).unwrap()).unwrap();
        assert_eq!(g.dimension(), 3);
        for r in [0.1, 0.7, 1.0, 2.5] {
            let want = (-PI * r * r).exp();
            assert!((g.profile(r) - want).abs() <= 1e-14 * want);
        }
        let l = lift_kernel(&rational(1)).unwrap();
        for r in [0.1f64, 1.0, 3.0] {
            let want = 1.0 / (PI * (1.0 + r * r).powi(2));
            assert!((l.profile(r) - want).abs() <= 1e-14 * want);
        }
    }

    #[test]
    fn fractional_family_is_closed_under_lift() {
        for n in 1..=4 {
            for s in [0.25, 0.5, 0.75] {
                let lifted = lift_kernel(&fractional_kernel(n, s).unwrap()).unwrap();
                let direct = fractional_kernel(n + 2, s).unwrap();
                for r in [0.1, 1.0, 10.0] {
                    let (a, b) = (lifted.profile(r), direct.profile(r));
                    assert!((a - b).abs() <= 1e-12 * b, "n={n} s={s} r={r}");
                }
            }
        }
    }

    #[test]
    fn increasing_kernel_is_reported() {
        let k = RadialKernel::new(1, |r| (-PI * r * r).exp() * (1.0 + 0.9 * (3.0 * r).sin()), 64.0, -1.0).unwrap();
        assert!(matches!(lift_kernel(&k), Err(Error::NegativeKernel { .. })));
    }

    #[test]
    fn unlift_examples() {
        let k = unlift_kernel(&gaussian_kernel(3).unwrap()).unwrap();
        assert_eq!(k.dimension(), 1);
        for r in [0.2, 1.0, 2.0] {
            let want = (-PI * r * r).exp();
            assert!((k.profile(r) - want).abs() <= 1e-10 * want);
        }
        let k2 = RadialKernel::new(3, |r| 1.0 / (PI * (1.0 + r * r).powi(2)), 1.0, -3.0).unwrap();
        let k1 = unlift_kernel(&k2).unwrap();
        for r in [0.1f64, 0.5, 1.0, 4.0, 20.0] {
            let want = 1.0 / (1.0 + r * r);
            assert!((k1.profile(r) - want).abs() <= 1e-8 * want, "r={r}");
        }
        let back = lift_kernel(&k1).unwrap();
        for r in [0.5, 1.0, 2.0] {
            assert!((back.profile(r) - k2.profile(r)).abs() <= 1e-8 * k2.profile(r));
        }
    }

    #[test]
    fn unlift_power_law() {
        for (n, s) in [(1usize, 0.5), (2, 0.25)] {
            let a = (n as f64 + 2.0 * s) / (2.0 * PI);
            let p = n as f64 + 2.0 + 2.0 * s;
            let k2 = RadialKernel::new(n + 2, move |r| a * r.powf(-p), 2.0 * s, 2.0 * s).unwrap();
            let k = unlift_kernel(&k2).unwrap();
            for r in [0.1f64, 1.0, 10.0] {
                let want = r.powf(-(n as f64) - 2.0 * s);
                assert!((k.profile(r) - want).abs() <= 1e-9 * want, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn lift_without_analytic_derivative_round_trips() {
        let k2 = RadialKernel::new(3, |r| (-PI * r * r).exp() / (1.0 + r * r), 64.0, -3.0).unwrap();
        let mut k1 = unlift_kernel(&k2).unwrap();
        k1.derivative = None;
        let back = lift_kernel(&k1).unwrap();
        for r in [0.5, 1.0, 2.0] {
            let want = k2.profile(r);
            assert!((back.profile(r) - want).abs() <= 1e-7 * want, "r={r}");
        }
    }

    #[test]
    fn derivative_mismatch_rejected() {
        let bad = RadialKernel::new(1, |r| (-r).exp(), 64.0, -1.0).unwrap().with_derivative(|r| (-r).exp());
        assert!(bad.is_err());
    }

    #[test]
    fn table_kernel_reproduces_power_law() {
        let samples: Vec<[f64; 2]> = (0..20).map(|i| {
            let r = 0.01 * 1.6f64.powi(i);
            [r, r.powf(-2.0) / PI]
        }).collect();
        let k = table_kernel(1, &samples).unwrap();
        assert!((k.singularity_order - 1.0).abs() < 1e-12);
        assert!((k.decay_rate - 1.0).abs() < 1e-12);
        for r in [0.003f64, 0.5, 7.0, 1000.0] {
            let want = r.powf(-2.0) / PI;
            assert!((k.profile(r) - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn kernel_spec_json_round_trip() {
        let spec: KernelSpec = serde_json::from_str(r#"{"family": "fractional", "n": 2, "s": 0.75}"#).unwrap();
        let k = spec.build().unwrap();
        assert_eq!(k.spec().unwrap(), spec);
        let bad = serde_json::from_str::<KernelSpec>(r#"{"family": "gaussian", "n": 1, "extra": 3}"#);
        assert!(bad.is_err());
        let table: KernelSpec =
            serde_json::from_str(r#"{"family": "table", "n": 1, "samples": [[0.1, 3.0], [1.0, 1.0], [10.0, 0.01]]}"#)
                .unwrap();
        assert_eq!(table.build().unwrap().spec().unwrap(), table);
    }

    proptest! {
        #[test]
        fn lift_unlift_round_trip(a in 0.3f64..3.0, r in 0.05f64..6.0) {
            // 𝒦₃(r) = e^(−aπr²) on ℝ³
            let k2 = RadialKernel::new(3, move |t| (-a * PI * t * t).exp(), 64.0, -3.0).unwrap();
            let k1 = unlift_kernel(&k2).unwrap();
            let want = (-a * PI * r * r).exp() / a;
            prop_assert!((k1.profile(r) - want).abs() <= 1e-8 * want);
            let back = lift_kernel(&k1).unwrap();
            prop_assert!((back.profile(r) - k2.profile(r)).abs() <= 1e-8 * k2.profile(r));
        }

        #[test]
        fn lifted_smooth_kernels_stay_integrable(a in 0.2f64..4.0, n in 1usize..4) {
            let k = RadialKernel::new(n, move |r| 1.0 / (1.0 + a * r * r).powi(2), 4.0 - n as f64, -(n as f64))
                .unwrap()
                .with_derivative(move |r| -4.0 * a * r / (1.0 + a * r * r).powi(3))
                .unwrap();
            let lifted = lift_kernel(&k).unwrap();
            let v = check_levy_integrability(&lifted).unwrap();
            prop_assert!(v.is_finite() && v > 0.0);
        }
    }
}
