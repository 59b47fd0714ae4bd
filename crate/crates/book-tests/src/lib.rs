//! Compiles the guide chapters as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/master-equation.md")]
pub mod master_equation {}
#[doc = include_str!("../../../book/src/closed-forms.md")]
pub mod closed_forms {}
#[doc = include_str!("../../../book/src/cavity.md")]
pub mod cavity {}
#[doc = include_str!("../../../book/src/sweeps.md")]
pub mod sweeps {}
#[doc = include_str!("../../../book/src/validation.md")]
pub mod validation {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
