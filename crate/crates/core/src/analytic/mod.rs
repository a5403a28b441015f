//! Analytic functions on the unit disk: expression trees over polynomials
//! and kernel powers, certified self-maps, Bergman kernels, extremal test
//! functions, and the norms / pairings of the weighted spaces built on them.

mod expr;
mod norms;

pub use expr::{
    bergman_kernel, test_function, AnalyticError, AnalyticFunction, SelfMap,
};
pub use norms::{
    a1_norm, bloch_norm, little_membership, pairing, weighted_sup_norm, BlochNorm, LittleMode,
    MembershipVerdict,
};
