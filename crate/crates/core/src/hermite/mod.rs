//! Hermite polynomials, expansions of subordinating functions, the shift
//! map `phi -> phi_1`, the constant `C(phi)` and the rank-one product
//! formula.

mod expansion;
mod function;
mod mehler;
mod poly;
mod quadrature;

pub use expansion::{
    expand, expand_with_rule, hermite_rank, shift, sparsity, ExpansionConfig, HermiteExpansion,
    Sparsity,
};
pub use function::{c_phi, SubordinatedFunction, WeakDerivative, CENTERING_TOL, FD_STEP};
pub use poly::{
    binomial, factorial, hermite_eval, ln_factorial, product_expectation,
    product_formula_rank_one, ChaosTerm, MAX_ORDER,
};
pub(crate) use poly::hermite_series;
pub use quadrature::GaussianRule;
