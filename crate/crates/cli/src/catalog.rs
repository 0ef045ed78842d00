//! Named test fields available to scenario files.

use std::f64::consts::PI;

use oddlift::{Field, Symmetry};

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Antisymmetric fields on ℝⁿ.
pub const ANTISYMMETRIC: [&str; 5] = ["x1_gaussian", "x1_rational", "x1_cubic_gaussian", "x1_bump", "zero"];

pub fn antisymmetric(name: &str, n: usize) -> Option<Field> {
    let field = match name {
        "x1_gaussian" => Field::new(n, |x: &[f64]| x[0] * (-PI * norm2(x)).exp())
            .with_decay(1.0, 64.0)
            .with_normal_derivative(|rest: &[f64]| (-PI * norm2(rest)).exp()),
        "x1_rational" => Field::new(n, |x: &[f64]| x[0] * (1.0 + norm2(x)).powi(-2))
            .with_decay(1.0, 3.0)
            .with_normal_derivative(|rest: &[f64]| (1.0 + norm2(rest)).powi(-2)),
        "x1_cubic_gaussian" => Field::new(n, |x: &[f64]| x[0] * (1.0 + x[0] * x[0]) * (-PI * norm2(x)).exp())
            .with_decay(1.0, 64.0)
            .with_normal_derivative(|rest: &[f64]| (-PI * norm2(rest)).exp()),
        "x1_bump" => Field::new(n, |x: &[f64]| x[0] * bump(norm2(x)))
            .with_support_radius(1.0)
            .with_normal_derivative(|rest: &[f64]| bump(norm2(rest))),
        "zero" => Field::zero(n).with_normal_derivative(|_| 0.0),
        _ => return None,
    };
    Some(field.with_symmetry(Symmetry::Antisymmetric))
}

/// Fields on ℝⁿ that are even in x₁; they pair to zero against antisymmetric ones.
pub fn even(name: &str, n: usize) -> Option<Field> {
    match name {
        "bump" => Some(Field::new(n, |x: &[f64]| bump(norm2(x))).with_support_radius(1.0).with_symmetry(Symmetry::Symmetric)),
        _ => None,
    }
}

/// Test functions for the weak pairing: antisymmetric or even, compactly supported.
pub fn test_function(name: &str, n: usize) -> Option<Field> {
    match name {
        "x1_bump" => antisymmetric(name, n),
        _ => even(name, n),
    }
}

/// Even profiles on ℝ for the Bochner relation.
pub const PROFILES: [&str; 3] = ["gaussian", "rational", "gauss_cos"];

pub fn profile(name: &str) -> Option<Field> {
    let field = match name {
        "gaussian" => Field::new(1, |x: &[f64]| (-PI * x[0] * x[0]).exp()),
        "rational" => Field::new(1, |x: &[f64]| (1.0 + x[0] * x[0]).powi(-2)),
        "gauss_cos" => Field::new(1, |x: &[f64]| (-x[0] * x[0]).exp() * x[0].cos()),
        _ => return None,
    };
    Some(field.with_symmetry(Symmetry::Symmetric))
}

/// Strictly positive 3-isotropic profiles ṽ on ℝᵈ.
pub const LIFTED: [&str; 3] = ["one", "rational", "gaussian"];

pub fn lifted(name: &str, d: usize) -> Option<Field> {
    let field = match name {
        "one" => Field::new(d, |_| 1.0).with_decay(1.0, 0.0),
        "rational" => Field::new(d, |x: &[f64]| 1.0 / (1.0 + norm2(x))).with_decay(1.0, 2.0),
        "gaussian" => Field::new(d, |x: &[f64]| (-PI * norm2(x)).exp()).with_decay(1.0, 64.0),
        _ => return None,
    };
    Some(field.with_symmetry(Symmetry::Isotropic3))
}

/// Functions u(ρ, z) on [0, ∞) × ℝᵐ for the cylindrical identity.
pub fn cylindrical(name: &str, m: usize) -> Option<Field> {
    match name {
        "one" => Some(Field::new(m + 1, |_| 1.0)),
        "square" => Some(Field::new(m + 1, |p: &[f64]| p[0] * p[0])),
        "mixed" if m >= 1 => Some(Field::new(m + 1, |p: &[f64]| p[0] * p[0] * p[1])),
        "gaussian" => Some(Field::new(m + 1, |p: &[f64]| (-PI * norm2(p)).exp())),
        _ => None,
    }
}

/// Isotropic profile on ℝ³ cut off at `radius`, continuous but not C¹.
pub fn truncated_gaussian(radius: f64) -> Field {
    let floor = (-PI * radius * radius).exp();
    Field::new(3, move |x: &[f64]| ((-PI * norm2(x)).exp() - floor).max(0.0))
        .with_symmetry(Symmetry::Isotropic3)
        .with_decay(1.0, 64.0)
        .with_support_radius(radius)
        .with_smoothness(1.0)
}
