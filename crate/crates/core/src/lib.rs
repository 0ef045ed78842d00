//! Odd-to-isotropic dimension lifting for radial Lévy operators.
//!
//! An antisymmetric function u on ℝⁿ lifts to ũ(x̃) = u(|x̃₁₂₃|, x′)/|x̃₁₂₃| on ℝⁿ⁺²,
//! and the kernel lifts by K_{n+2}(r) = −K_n′(r)/(2πr). The modules here build
//! the kernels and their symbols, apply the operators by quadrature, and check
//! the identities that tie the two dimensions together.

pub mod error;
pub mod harnack;
pub mod kernels;
pub mod lift;
pub mod operators;
pub mod quad;
pub mod special;
pub mod symbols;

pub use error::{Error, Result};
pub use harnack::{
    annulus_flap_lower_bound, local_boundedness_report, manufacture_solution, quotient_report,
    verify_theorem_odd_harnack, weak_harnack_report, AnnulusReport, BoxDomain, CompactSetSpec, HarnackReport,
    LocalBoundednessReport, SchroedingerProblem, WeakHarnackReport,
};
pub use kernels::{
    check_levy_integrability, fractional_constant, fractional_kernel, gaussian_kernel, lift_kernel, table_kernel,
    unlift_kernel, KernelFamily, KernelSpec, RadialKernel,
};
pub use lift::{lift_field, restrict_field, DecayBound, Field, Symmetry, WeightedMeasureSpec};
pub use operators::{apply_flap_direct, apply_levy_direct, LevyPlan, OperatorSpec, QuadratureSpec};
pub use symbols::{hankel_symbol, Grid, RadialSymbol};
