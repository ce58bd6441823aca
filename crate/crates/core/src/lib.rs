//! Numerical solver and regularity analyzer for the Riemann–Liouville
//! fractional Dirichlet problem
//!
//! ```text
//! D^α u(t) + h(t) f(u(t)) = 0,   t ∈ (0, 1),   u(0) = u(1) = 0,   α ∈ (1, 2],
//! ```
//!
//! where the weight `h` may carry a non-integrable algebraic singularity at
//! `t = 0` as long as `∫₀¹ s^{α−1} h(s) ds < ∞`.
//!
//! Layout:
//! - [`specfun`]: Γ and 1/Γ for real arguments, including negative non-integers.
//! - [`powercalc`]: exact fractional calculus on finite power sums (the oracle).
//! - [`greenkernel`]: pointwise Green's function.
//! - [`singquad`]: weights, graded meshes and the singular Green quadrature.
//! - [`solver`]: linear solve, Picard iteration, Grünwald–Letnikov residuals.
//! - [`regularity`]: `E_α` / `C¹_{2−α}` profiles and membership verdicts.

pub mod error;
pub mod gauss;
pub mod greenkernel;
pub mod interp;
pub mod powercalc;
pub mod regularity;
pub mod singquad;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
pub use powercalc::{Order, PowerSum};
pub use singquad::{GradedMesh, WeightSpec};
