//! Reference-triangle elements and quadrature.

mod basis;
mod poly;
mod quadrature;

pub use basis::{ned_basis, pk_basis, Family, ReferenceBasis, REFERENCE_EDGES, REFERENCE_VERTICES};
pub use poly::{eval_monomials, monomial_exponents, monomial_index};
pub use quadrature::{gauss_legendre, legendre, line_rule, quadrature, LineRule, QuadratureRule, MAX_DEGREE};
