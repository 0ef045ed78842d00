//! Radial Fourier symbols of Lévy operators: the Hankel-type transform of a
//! kernel, the invariance ψ_n = ψ_{n+2} under the kernel lift, and spectral
//! application of radial multipliers on uniform grids.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::kernels::{lift_kernel, RadialFn, RadialKernel};
use crate::quad::{accelerate_panels, adaptive_estimate, dyadic_sum};
use crate::special::{hankel_bracket, hankel_constant, reduced_bessel, BesselOrder};

/// A Fourier-multiplier profile τ ↦ ψ(τ).
#[derive(Clone)]
pub struct RadialSymbol {
    profile: RadialFn,
    /// ψ(τ) ≤ C(1 + τ)^growth_order.
    pub growth_order: f64,
}

impl fmt::Debug for RadialSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialSymbol").field("growth_order", &self.growth_order).finish()
    }
}

impl RadialSymbol {
    pub fn new<F>(profile: F, growth_order: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { profile: Arc::new(profile), growth_order }
    }

    /// (2πτ)^(2s), the symbol of (−Δ)^s.
    pub fn fractional(s: f64) -> Self {
        Self::new(move |tau| (2.0 * PI * tau).powf(2.0 * s), 2.0 * s)
    }

    /// The symbol of a kernel, evaluated by `hankel_symbol` on demand (NaN on failure).
    pub fn from_kernel(k: &RadialKernel) -> Self {
        let k = k.clone();
        let growth = k.operator_order();
        Self::new(move |tau| hankel_symbol(&k, tau).unwrap_or(f64::NAN), growth)
    }

    #[inline]
    pub fn value(&self, tau: f64) -> f64 {
        (self.profile)(tau)
    }
}

/// ψ(τ) = (2π)^(d/2)∫₀^∞ [c_d − (ωr)^(1−d/2) J_{d/2−1}(ωr)] r^(d−1) 𝒦(r) dr with ω = 2πτ.
pub fn hankel_symbol(k: &RadialKernel, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("tau must be finite and >= 0, got {tau}")));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let d = k.dimension();
    let order = BesselOrder::for_dimension(d)?;
    let omega = 2.0 * PI * tau;
    let split = 1.0 / omega;
    let dm1 = d as i32 - 1;
    let fail = |e: Error| Error::QuadratureFailure(format!("hankel_symbol at tau = {tau}: {e}"));

    // Core: bracket by its power series, no cancellation.
    let core = dyadic_sum(
        |r| hankel_bracket(d, omega * r).unwrap_or(f64::NAN) * r.powi(dm1) * k.profile(r),
        split,
        true,
        1e-15,
        400,
    )
    .map_err(fail)?;

    // Far field: constant part in closed form against the kernel tail, the
    // Bessel part over half-period panels with Wynn acceleration.
    let flat = hankel_constant(d) * k.tail_moment(d as f64 - 1.0, split).map_err(fail)?;
    let half_period = PI / omega;
    let mut oscillating = |r: f64| reduced_bessel(order, omega * r).unwrap_or(f64::NAN) * r.powi(dm1) * k.profile(r);
    let scale = (core.abs() + flat.abs()).max(1e-300);
    let wave = accelerate_panels(
        |j| {
            let a = split + j as f64 * half_period;
            adaptive_estimate(&mut oscillating, a, a + half_period, 1e-15 * scale, 1e-13, 200).0
        },
        1e-13 * scale,
        6,
        4000,
    )
    .map_err(fail)?;
    let psi = (2.0 * PI).powf(d as f64 / 2.0) * (core + flat - wave);
    if !psi.is_finite() {
        return Err(Error::QuadratureFailure(format!("hankel_symbol at tau = {tau} is not finite")));
    }
    Ok(psi)
}

/// max over τ of |ψ_n(τ) − ψ_{n+2}(τ)| / max(1, ψ_n(τ)), ψ_{n+2} from the lifted kernel.
pub fn symbol_invariance_residual(k: &RadialKernel, taus: &[f64]) -> Result<f64> {
    let lifted = lift_kernel(k)?;
    let rows = symbol_table(k, &lifted, taus)?;
    Ok(rows.iter().map(|r| r.residual).fold(0.0, f64::max))
}

/// One τ row of a symbol comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolRow {
    pub tau: f64,
    pub psi_n: f64,
    pub psi_lifted: f64,
    pub residual: f64,
}

/// ψ_n and ψ_{n+2} side by side; rows keep the order of `taus`.
pub fn symbol_table(k: &RadialKernel, lifted: &RadialKernel, taus: &[f64]) -> Result<Vec<SymbolRow>> {
    taus.par_iter()
        .map(|&tau| {
            let a = hankel_symbol(k, tau)?;
            let b = hankel_symbol(lifted, tau)?;
            Ok(SymbolRow { tau, psi_n: a, psi_lifted: b, residual: (a - b).abs() / a.abs().max(1.0) })
        })
        .collect()
}

/// True when ψ is nondecreasing along the given increasing τ probes.
pub fn symbol_is_monotone(psi: &RadialSymbol, taus: &[f64]) -> bool {
    let vals: Vec<f64> = taus.iter().map(|&t| psi.value(t)).collect();
    vals.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12))
}

/// Samples on the uniform grid x_j = −R + j·2R/N, j = 0..N−1, per axis; row-major
/// with the last axis contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn from_fn<F: Fn(&[f64]) -> f64 + Sync>(dim: usize, n: usize, half_width: f64, f: F) -> Result<Self> {
        if !(1..=4).contains(&dim) {
            return Err(Error::InvalidInput(format!("grid dimension {dim} outside 1..=4")));
        }
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidInput(format!("grid side {n} is not a power of two")));
        }
        let total = n.pow(dim as u32);
        let values = (0..total)
            .into_par_iter()
            .map(|idx| {
                let x = Self::coords(dim, n, half_width, idx);
                f(&x)
            })
            .collect();
        Ok(Self { dim, n, half_width, values })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    fn coords(dim: usize, n: usize, half_width: f64, mut idx: usize) -> Vec<f64> {
        let h = 2.0 * half_width / n as f64;
        let mut x = vec![0.0; dim];
        for a in (0..dim).rev() {
            x[a] = -half_width + (idx % n) as f64 * h;
            idx /= n;
        }
        x
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        Self::coords(self.dim, self.n, self.half_width, idx)
    }

    /// Flat index of the node at integer offsets `j` (each in 0..n).
    pub fn index(&self, j: &[usize]) -> usize {
        j.iter().fold(0, |acc, &v| acc * self.n + v)
    }

    /// Flat index of the grid node nearest to x.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let j: Vec<usize> = x
            .iter()
            .map(|&v| (((v + self.half_width) / h).round().max(0.0) as usize).min(self.n - 1))
            .collect();
        self.index(&j)
    }

    fn boundary_max(&self) -> f64 {
        let n = self.n;
        let mut m: f64 = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let mut k = idx;
            let mut on_edge = false;
            for _ in 0..self.dim {
                let c = k % n;
                if c == 0 || c == n - 1 {
                    on_edge = true;
                }
                k /= n;
            }
            if on_edge {
                m = m.max(v.abs());
            }
        }
        m
    }
}

/// Spectral application of ψ(|ξ|) on the sample grid, without zero padding.
pub fn apply_multiplier_spectral(psi: &RadialSymbol, grid: &Grid) -> Result<Grid> {
    apply_multiplier_spectral_padded(psi, grid, 1)
}

/// Spectral application of ψ(|ξ|) after embedding the grid in a `padding`-times
/// larger zero-filled box, which pushes periodic images of slowly decaying
/// outputs further away.
pub fn apply_multiplier_spectral_padded(psi: &RadialSymbol, grid: &Grid, padding: usize) -> Result<Grid> {
    if padding == 0 || !padding.is_power_of_two() {
        return Err(Error::InvalidInput(format!("padding {padding} is not a power of two")));
    }
    let global = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let boundary = grid.boundary_max();
    let limit = 1e-12 * global;
    if boundary > limit {
        return Err(Error::AliasingError { boundary, limit });
    }
    let (dim, n) = (grid.dim, grid.n);
    let big = n * padding;
    let total = big.pow(dim as u32);
    let offset = (big - n) / 2;
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    for (idx, v) in grid.values.iter().enumerate() {
        data[embed(idx, dim, n, big, offset)] = Complex64::new(*v, 0.0);
    }

    fft_nd(&mut data, dim, big, false);

    // ψ is evaluated once per distinct integer |k|².
    let freq = |c: usize| if c < big / 2 { c as i64 } else { c as i64 - big as i64 };
    let mut norms: BTreeMap<i64, f64> = BTreeMap::new();
    let mut keys = Vec::with_capacity(total);
    for idx in 0..total {
        let mut k = idx;
        let mut sq = 0i64;
        for _ in 0..dim {
            let f = freq(k % big);
            sq += f * f;
            k /= big;
        }
        keys.push(sq);
        norms.entry(sq).or_insert(0.0);
    }
    let dxi = 1.0 / (2.0 * grid.half_width * padding as f64);
    let distinct: Vec<i64> = norms.keys().copied().collect();
    let values: Vec<f64> = distinct.par_iter().map(|&sq| psi.value((sq as f64).sqrt() * dxi)).collect();
    for (sq, v) in distinct.iter().zip(values) {
        if !v.is_finite() {
            return Err(Error::QuadratureFailure(format!("symbol is not finite at |xi| = {}", (*sq as f64).sqrt() * dxi)));
        }
        norms.insert(*sq, v);
    }
    for (c, sq) in data.iter_mut().zip(&keys) {
        *c *= norms[sq];
    }

    fft_nd(&mut data, dim, big, true);

    let scale = 1.0 / total as f64;
    let mut out = Vec::with_capacity(grid.values.len());
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    for idx in 0..grid.values.len() {
        let c = data[embed(idx, dim, n, big, offset)] * scale;
        max_re = max_re.max(c.re.abs());
        max_im = max_im.max(c.im.abs());
        out.push(c.re);
    }
    if max_im > 1e-9 * max_re && max_im > 1e-300 {
        return Err(Error::InvariantViolation(format!(
            "imaginary residue {max_im:e} exceeds 1e-9 of the real part {max_re:e}"
        )));
    }
    Ok(Grid { dim, n, half_width: grid.half_width, values: out })
}

fn embed(idx: usize, dim: usize, n: usize, big: usize, offset: usize) -> usize {
    let mut k = idx;
    let mut coords = vec![0; dim];
    for a in (0..dim).rev() {
        coords[a] = k % n + offset;
        k /= n;
    }
    coords.iter().fold(0, |acc, &c| acc * big + c)
}

fn fft_nd(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let total = data.len();
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        for base in 0..total {
            if (base / stride) % n != 0 {
                continue;
            }
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[base + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[base + j * stride] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{fractional_kernel, gaussian_kernel};
    use proptest::prelude::*;

    #[test]
    fn fractional_symbols() {
        let v = hankel_symbol(&fractional_kernel(1, 0.5).unwrap(), 1.0).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-8 * 2.0 * PI, "{v}");
        let v = hankel_symbol(&fractional_kernel(2, 0.75).unwrap(), 2.0).unwrap();
        let want = (4.0 * PI).powf(1.5);
        assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
        assert_eq!(hankel_symbol(&fractional_kernel(3, 0.25).unwrap(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn fractional_symbols_all_dimensions() {
        for n in 1..=4 {
            for s in [0.25, 0.5, 0.75] {
                let k = fractional_kernel(n, s).unwrap();
                for tau in [0.3, 1.7] {
                    let want = (2.0 * PI * tau).powf(2.0 * s);
                    let got = hankel_symbol(&k, tau).unwrap();
                    assert!((got - want).abs() < 1e-8 * want, "n={n} s={s} tau={tau}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn gaussian_kernel_symbol() {
        // ψ(τ) = 1 − e^(−πτ²) in every dimension.
        for d in 1..=4 {
            let k = gaussian_kernel(d).unwrap();
            for tau in [0.25, 1.0, 3.0] {
                let want = 1.0 - (-PI * tau * tau).exp();
                let got = hankel_symbol(&k, tau).unwrap();
                assert!((got - want).abs() < 1e-10, "d={d} tau={tau}: {got}");
            }
        }
        let got = hankel_symbol(&gaussian_kernel(1).unwrap(), 1.0).unwrap();
        assert!((got - 0.956_786_081_736_227_75).abs() < 1e-12);
    }

    #[test]
    fn invariance_examples() {
        let g = gaussian_kernel(1).unwrap();
        assert!(symbol_invariance_residual(&g, &[0.5, 1.0, 2.0, 4.0]).unwrap() <= 1e-6);
        let f = fractional_kernel(1, 0.5).unwrap();
        assert!(symbol_invariance_residual(&f, &[1.0]).unwrap() <= 1e-6);
        assert_eq!(symbol_invariance_residual(&f, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rational_kernel_invariance() {
        let k = RadialKernel::new(1, |r| 1.0 / (1.0 + r * r), 1.0, -1.0)
            .unwrap()
            .with_derivative(|r| -2.0 * r / (1.0 + r * r).powi(2))
            .unwrap();
        let taus = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        assert!(symbol_invariance_residual(&k, &taus).unwrap() <= 1e-6);
        let psi = RadialSymbol::from_kernel(&k);
        assert!(symbol_is_monotone(&psi, &taus));
    }

    #[test]
    fn zero_multiplier_gives_zero() {
        let grid = Grid::from_fn(1, 64, 6.0, |x| (-PI * x[0] * x[0]).exp()).unwrap();
        let out = apply_multiplier_spectral(&RadialSymbol::new(|_| 0.0, 0.0), &grid).unwrap();
        assert!(out.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn laplacian_multiplier_on_gaussian() {
        let grid = Grid::from_fn(1, 256, 8.0, |x| (-PI * x[0] * x[0]).exp()).unwrap();
        let out = apply_multiplier_spectral(&RadialSymbol::new(|t| (2.0 * PI * t).powi(2), 2.0), &grid).unwrap();
        for idx in (0..256).step_by(7) {
            let x = grid.point(idx)[0];
            let want = (2.0 * PI - 4.0 * PI * PI * x * x) * (-PI * x * x).exp();
            assert!((out.values[idx] - want).abs() < 1e-10, "x={x}");
        }
        assert!((out.values[grid.nearest(&[0.0])] - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn fractional_multiplier_matches_closed_form() {
        // (−Δ)^s e^(−πx²) at x ∈ {0, 0.5, 1}, reference values from the 1F1 closed form.
        let cases = [
            (0.25, [1.3017012597320317585, 0.30479723540124390377, -0.21209475835597740543], 1e-4),
            (0.5, [2.0, 0.084868350249138002096, -0.50759578713278227715], 1e-5),
            (0.75, [3.4131356215119426134, -0.41508159165416606097, -0.90824028173986462776], 1e-4),
        ];
        let grid = Grid::from_fn(1, 256, 8.0, |x| (-PI * x[0] * x[0]).exp()).unwrap();
        for (s, want, tol) in cases {
            let out = apply_multiplier_spectral_padded(&RadialSymbol::fractional(s), &grid, 32).unwrap();
            for (x, w) in [0.0, 0.5, 1.0].iter().zip(want) {
                let got = out.values[grid.nearest(&[*x])];
                assert!((got - w).abs() <= tol * w.abs().max(1.0), "s={s} x={x}: {got} vs {w}");
            }
        }
    }

    #[test]
    fn two_dimensional_gaussian_multiplier() {
        // ψ = 1 − e^(−πτ²) maps e^(−π|x|²) to e^(−π|x|²) − e^(−π|x|²/2)/2 in 2-D.
        let grid = Grid::from_fn(2, 64, 6.0, |x| (-PI * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let psi = RadialSymbol::new(|t| 1.0 - (-PI * t * t).exp(), 0.0);
        let out = apply_multiplier_spectral(&psi, &grid).unwrap();
        for idx in (0..grid.values.len()).step_by(97) {
            let x = grid.point(idx);
            let r2 = x[0] * x[0] + x[1] * x[1];
            let want = (-PI * r2).exp() - 0.5 * (-PI * r2 / 2.0).exp();
            assert!((out.values[idx] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn aliasing_is_detected() {
        let grid = Grid::from_fn(1, 64, 2.0, |x| (-x[0] * x[0]).exp()).unwrap();
        let err = apply_multiplier_spectral(&RadialSymbol::fractional(0.5), &grid).unwrap_err();
        assert!(matches!(err, Error::AliasingError { .. }));
        assert!(Grid::from_fn(1, 100, 2.0, |_| 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn symbols_are_nonnegative_and_vanish_at_zero(s in 0.1f64..0.9, n in 1usize..4, tau in 0.05f64..6.0) {
            let k = fractional_kernel(n, s).unwrap();
            prop_assert_eq!(hankel_symbol(&k, 0.0).unwrap(), 0.0);
            let v = hankel_symbol(&k, tau).unwrap();
            prop_assert!(v >= 0.0);
            let want = (2.0 * PI * tau).powf(2.0 * s);
            prop_assert!((v - want).abs() <= 1e-7 * want);
        }
    }
}
