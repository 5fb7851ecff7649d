//! A quasiregular map of transcendental type in R³ whose only zero is the
//! origin, built as `F = Z ∘ T ∘ g ∘ T⁻¹ ∘ φ` from a Zorich-type map `Z`,
//! together with its conjugate `f_λ = M ∘ λF`, numerical dilatation
//! estimates, orbit classification and basin rendering.

pub mod dilatation;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod interp_g;
pub mod linalg;
pub mod maps;
mod parallel;
pub mod render;
pub mod zorich;

pub use error::{Error, Result};
pub use geometry::{ExtPoint, Point3, VerticalAxis};
pub use interp_g::{Cutoff, GConfig, ShiftedG};
pub use linalg::Mat3;
pub use maps::MapConfig;
pub use zorich::BranchIndex;
