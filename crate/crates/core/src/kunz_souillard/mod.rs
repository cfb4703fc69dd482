//! Discretized Kunz-Souillard integral operators
//!
//! ```text
//! U f(x)  = |x|^{-1} f(1/x)
//! T0 f(x) = ∫ r(E − x − 1/y) f(y) dy
//! T1 f(x) = ∫ r(E − x − 1/y) |y|^{-1} f(y) dy
//! ```
//!
//! on a truncated midpoint grid. After the substitution `u = 1/y` both
//! `T0` and `T1` become a correlation against `r_E` applied to an inversion
//! resample of `f`, and every discrete operator here is the cell-average
//! projection of its continuous counterpart. That makes the discrete `U`
//! and `T1` contractions on `ℓ²` and the discrete `T0` an `ℓ¹` contraction
//! that is mass preserving up to truncation at `±X`.

mod grid;
mod jacobian;
mod norms;
mod operators;
mod rho;

pub use grid::{GridFunction, RealGrid};
pub use jacobian::{coordinate_map, jacobian_check, CoordinateChange, JacobianReport};
pub use norms::{norm_certify, power_norm, NormBudgets, NormReport, NormRow, PowerParams, PowerResult};
pub use operators::{InversionMaps, KsOperators};
pub use rho::{rho_operator, rho_operator_profile, rho_operator_with_budget, RhoOperatorValue};

use crate::model::{gershgorin_window, SiteDistribution};
use crate::stats::linspace;

/// `n` equally spaced energies covering `Σ0 = [−2 − M, 2 + M]`.
pub fn sigma0_grid(dist: &SiteDistribution, n: usize) -> Vec<f64> {
    let (a, b) = gershgorin_window(dist);
    linspace(a, b, n)
}
