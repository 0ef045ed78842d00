//! Quadrature building blocks: Gauss–Legendre and Gauss–Kronrod rules, dyadic
//! half-line integration, oscillatory panels with Wynn acceleration, and
//! product rules on spheres.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared instance for `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("rule cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&t, &w)| (c + h * t, h * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod panel: (estimate, error estimate).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod on [a, b] with bisection of the worst panel.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    adaptive_budget(&mut f, a, b, abs_tol, rel_tol, 2000)
}

pub fn adaptive_budget<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let (v, err) = adaptive_estimate(f, a, b, abs_tol, rel_tol, max_panels);
    if err > abs_tol.max(rel_tol * v.abs()) || !v.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "adaptive rule on [{a}, {b}] stalled at error {err:e} after {max_panels} panels"
        )));
    }
    Ok(v)
}

/// Adaptive Gauss–Kronrod that always returns its best (value, error estimate).
pub fn adaptive_estimate<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (v, e) = gk15(f, a, b);
    let mut panels = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) && panels.len() < max_panels && err.is_finite() {
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || pe == 0.0 {
            // Interval can no longer be split in floating point.
            panels.push((lo, hi, pv, 0.0));
            err -= pe;
            continue;
        }
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    // Re-sum in panel order for a reproducible result.
    panels.sort_by(|p, q| p.0.total_cmp(&q.0));
    let value = panels.iter().map(|p| p.2).sum();
    let err = panels.iter().map(|p| p.3).sum();
    (value, err)
}

/// ∫₀^∞ f by an adaptive rule on [0, scale] and dyadic panels beyond, stopping
/// once two consecutive panels fall below the tolerance.
pub fn half_line<F: FnMut(f64) -> f64>(mut f: F, scale: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    let mut total = adaptive_budget(&mut f, 0.0, scale, 0.1 * abs_tol, rel_tol, 4000)?;
    let mut lo = scale;
    let mut small = 0;
    for _ in 0..80 {
        let hi = 2.0 * lo;
        let part = adaptive_budget(&mut f, lo, hi, 0.1 * abs_tol, rel_tol, 4000)?;
        total += part;
        if part.abs() <= abs_tol.max(rel_tol * total.abs()) {
            small += 1;
            if small >= 2 {
                return Ok(total);
            }
        } else {
            small = 0;
        }
        lo = hi;
    }
    Err(Error::QuadratureFailure("half-line integral did not settle by 2^80".into()))
}

/// ∫ f over (0, r0] (`toward_zero`) or [r0, ∞) by dyadic panels, each
/// integrated adaptively, with a geometric estimate of the remaining tail.
pub fn dyadic_sum<F: FnMut(f64) -> f64>(
    mut f: F,
    r0: f64,
    toward_zero: bool,
    rel_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut sum: f64 = 0.0;
    let mut prev: Option<f64> = None;
    let mut zeros = 0;
    let mut edge = r0;
    for _ in 0..max_panels {
        let (lo, hi) = if toward_zero { (0.5 * edge, edge) } else { (edge, 2.0 * edge) };
        edge = if toward_zero { lo } else { hi };
        let (part, err) = adaptive_estimate(&mut f, lo, hi, 1e-300, 1e-14, 200);
        if !part.is_finite() || err > 1e-9 * part.abs() + 1e-14 * sum.abs() {
            return Err(Error::QuadratureFailure(format!("panel on [{lo}, {hi}] gave {part:e} +- {err:e}")));
        }
        sum += part;
        if part == 0.0 {
            zeros += 1;
            if zeros >= 3 {
                return Ok(sum);
            }
            continue;
        }
        zeros = 0;
        if let Some(p) = prev {
            let ratio = (part / p).abs();
            if ratio < 1.0 && part.signum() == p.signum() {
                let tail = part * ratio / (1.0 - ratio);
                if tail.abs() <= rel_tol * sum.abs() {
                    return Ok(sum + tail);
                }
            }
        }
        prev = Some(part);
    }
    Err(Error::QuadratureFailure(format!(
        "dyadic panels from {r0} did not settle after {max_panels} panels (sum {sum:e})"
    )))
}

/// ∫_{ℝᵏ} f by nested half-line integrations in each coordinate.
pub fn integrate_space(k: usize, f: &(dyn Fn(&[f64]) -> f64 + Sync), rel_tol: f64) -> Result<f64> {
    let mut prefix = Vec::with_capacity(k);
    nested(k, &mut prefix, f, rel_tol)
}

fn nested(k: usize, prefix: &mut Vec<f64>, f: &(dyn Fn(&[f64]) -> f64 + Sync), rel_tol: f64) -> Result<f64> {
    if prefix.len() == k {
        return Ok(f(prefix));
    }
    let mut failure = None;
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let part = half_line(
            |t| {
                prefix.push(sign * t);
                let v = match nested(k, prefix, f, rel_tol) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        f64::NAN
                    }
                };
                prefix.pop();
                v
            },
            1.0,
            1e-300,
            rel_tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total += part?;
    }
    Ok(total)
}

/// Wynn's epsilon algorithm on a sequence of partial sums; returns the
/// highest-order even-column estimate.
pub fn wynn_epsilon(sums: &[f64]) -> f64 {
    let n = sums.len();
    if n == 0 {
        return 0.0;
    }
    if n < 3 {
        return sums[n - 1];
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur = sums.to_vec();
    let mut best = sums[n - 1];
    let mut column = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for j in 0..cur.len() - 1 {
            let d = cur[j + 1] - cur[j];
            if d == 0.0 || !d.is_finite() {
                return if column % 2 == 0 { cur[j + 1] } else { best };
            }
            next.push(prev[j + 1] + 1.0 / d);
        }
        column += 1;
        prev = cur;
        cur = next;
        if column % 2 == 0 {
            let v = cur[cur.len() - 1];
            if v.is_finite() {
                best = v;
            }
        }
    }
    best
}

/// Sums panel contributions of an oscillatory tail. Each panel is integrated by
/// the caller; the accelerated estimate is returned once three consecutive
/// estimates agree within `tol`.
pub fn accelerate_panels<F: FnMut(usize) -> f64>(
    mut panel: F,
    tol: f64,
    min_panels: usize,
    max_panels: usize,
) -> Result<f64> {
    let mut sums: Vec<f64> = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    let mut partial = 0.0;
    for k in 0..max_panels {
        let p = panel(k);
        partial += p;
        sums.push(partial);
        let window = &sums[sums.len().saturating_sub(24)..];
        let est = wynn_epsilon(window);
        estimates.push(est);
        if k + 1 < min_panels || estimates.len() < 3 {
            continue;
        }
        let m = estimates.len();
        let scale = tol.max(tol * est.abs());
        let agree = (estimates[m - 1] - estimates[m - 2]).abs() <= scale
            && (estimates[m - 2] - estimates[m - 3]).abs() <= scale;
        if agree {
            return Ok(est);
        }
        // Fast decay: the raw partial sums have converged on their own.
        if p.abs() <= 1e-3 * scale && k >= min_panels {
            return Ok(partial);
        }
    }
    Err(Error::OscillatoryQuadratureFailure(format!(
        "no agreement after {max_panels} panels (last estimates {:?})",
        &estimates[estimates.len().saturating_sub(3)..]
    )))
}

/// A quadrature rule on the unit sphere 𝕊^(d−1) ⊂ ℝᵈ; weights sum to its area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Product rule of order `m`: two points for d = 1, `2m` trapezoid points on
    /// the circle, and Gauss–Legendre in the last coordinate times the rule on
    /// the equatorial sphere for d ≥ 3.
    pub fn product(dim: usize, m: usize) -> Self {
        assert!(dim >= 1 && m >= 1);
        match dim {
            1 => Self { dim, points: vec![vec![1.0], vec![-1.0]], weights: vec![1.0, 1.0] },
            2 => {
                let k = 2 * m;
                let w = 2.0 * PI / k as f64;
                let points = (0..k)
                    .map(|j| {
                        let phi = 2.0 * PI * (j as f64 + 0.5) / k as f64;
                        vec![phi.cos(), phi.sin()]
                    })
                    .collect();
                Self { dim, points, weights: vec![w; k] }
            }
            3 => {
                let gl = GaussLegendre::cached(m);
                let circle = Self::product(2, m);
                let mut points = Vec::with_capacity(gl.len() * circle.points.len());
                let mut weights = Vec::with_capacity(points.capacity());
                for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
                    let s = (1.0 - t * t).sqrt();
                    for (p, &wp) in circle.points.iter().zip(&circle.weights) {
                        points.push(vec![t, s * p[0], s * p[1]]);
                        weights.push(wt * wp);
                    }
                }
                Self { dim, points, weights }
            }
            _ => {
                // ω = (√(1−t²)·η, t), dω = (1−t²)^((d−3)/2) dt dη. Odd d: Gauss–Legendre is
                // exact for the polynomial weight; even d: second-kind Chebyshev nodes absorb √(1−t²).
                let inner = Self::product(dim - 1, m);
                let mut nodes = Vec::with_capacity(m);
                if dim % 2 == 1 {
                    let gl = GaussLegendre::cached(m);
                    for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
                        nodes.push((t, w * (1.0 - t * t).powi((dim as i32 - 3) / 2)));
                    }
                } else {
                    for k in 1..=m {
                        let theta = k as f64 * PI / (m as f64 + 1.0);
                        let t = theta.cos();
                        let w = PI / (m as f64 + 1.0) * theta.sin().powi(2);
                        nodes.push((t, w * (1.0 - t * t).powi((dim as i32 - 4) / 2)));
                    }
                }
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (t, wt) in nodes {
                    let c = (1.0 - t * t).sqrt();
                    for (p, &wp) in inner.points.iter().zip(&inner.weights) {
                        let mut q: Vec<f64> = p.iter().map(|v| c * v).collect();
                        q.push(t);
                        points.push(q);
                        weights.push(wt * wp);
                    }
                }
                Self { dim, points, weights }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p)).sum()
    }
}
