//! Nodal bases of the Nédélec families and of `P_k` on the reference triangle.
//!
//! A Nédélec basis is the dual basis of its degrees of freedom: tangential
//! moments against Legendre polynomials on each edge, then interior moments
//! (against `P_{k-1}²` for the first family of order `k`, against the
//! Raviart–Thomas space of index `m-2` for the second family of order `m`).
//! The basis is obtained by inverting the functional matrix on a monomial
//! spanning set of the local space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::poly::{eval_monomials, monomial_exponents, monomial_index};
use super::quadrature::{legendre, line_rule, quadrature, LineRule, QuadratureRule, MAX_DEGREE};
use crate::error::{Error, Result};

pub const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Local edge `i` joins the two vertices other than `i`, lower index first.
pub const REFERENCE_EDGES: [[usize; 2]; 3] = [[1, 2], [0, 2], [0, 1]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Ned1,
    Ned2,
    Pk,
}

#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    pub family: Family,
    pub order: usize,
    pub dim: usize,
    /// Moments per edge (Nédélec only).
    pub edge_dofs: usize,
    /// Interior moments (Nédélec only).
    pub interior_dofs: usize,
    exps: Vec<(u32, u32)>,
    /// Column `j` holds the monomial coefficients of basis function `j`;
    /// vector families stack the x- and y-components.
    coeffs: DMatrix<f64>,
    /// Interior test functions in the same layout.
    interior_tests: Option<(Vec<(u32, u32)>, DMatrix<f64>)>,
    line: LineRule,
    area_rule: QuadratureRule,
}

/// Spanning set of `NED1_k`: `P_k²` plus `(-y, x) p` for homogeneous `p` of degree `k`.
fn ned1_span(k: usize) -> (Vec<(u32, u32)>, DMatrix<f64>) {
    extended_span(k, false)
}

/// Spanning set of the Raviart–Thomas space: `P_k²` plus `(x, y) p`.
fn rt_span(k: usize) -> (Vec<(u32, u32)>, DMatrix<f64>) {
    extended_span(k, true)
}

fn extended_span(k: usize, radial: bool) -> (Vec<(u32, u32)>, DMatrix<f64>) {
    let exps = monomial_exponents(k + 1);
    let nm = exps.len();
    let full = (k + 1) * (k + 2) / 2;
    let dim = (k + 1) * (k + 3);
    let mut s = DMatrix::zeros(2 * nm, dim);
    for m in 0..full {
        s[(m, 2 * m)] = 1.0;
        s[(nm + m, 2 * m + 1)] = 1.0;
    }
    for b in 0..=k as u32 {
        let a = k as u32 - b;
        let col = 2 * full + b as usize;
        if radial {
            s[(monomial_index(a + 1, b), col)] = 1.0;
            s[(nm + monomial_index(a, b + 1), col)] = 1.0;
        } else {
            s[(monomial_index(a, b + 1), col)] = -1.0;
            s[(nm + monomial_index(a + 1, b), col)] = 1.0;
        }
    }
    (exps, s)
}

fn pk_span_vector(m: usize) -> (Vec<(u32, u32)>, DMatrix<f64>) {
    let exps = monomial_exponents(m);
    let nm = exps.len();
    let mut s = DMatrix::zeros(2 * nm, 2 * nm);
    for i in 0..nm {
        s[(i, 2 * i)] = 1.0;
        s[(nm + i, 2 * i + 1)] = 1.0;
    }
    (exps, s)
}

/// Monomials are taken in coordinates centred at the reference centroid,
/// which keeps the dual-basis coefficients small. Shifting does not change
/// any of the spanned spaces.
fn centred(p: [f64; 2]) -> [f64; 2] {
    [p[0] - 1.0 / 3.0, p[1] - 1.0 / 3.0]
}

fn eval_vector_cols(exps: &[(u32, u32)], coeffs: &DMatrix<f64>, p: [f64; 2]) -> Vec<[f64; 2]> {
    let (v, _, _) = eval_monomials(exps, centred(p));
    let nm = exps.len();
    (0..coeffs.ncols())
        .map(|j| {
            let c = coeffs.column(j);
            let mut out = [0.0; 2];
            for m in 0..nm {
                out[0] += c[m] * v[m];
                out[1] += c[nm + m] * v[m];
            }
            out
        })
        .collect()
}

pub fn ned_basis(family: Family, order: usize) -> Result<ReferenceBasis> {
    let (exps, span, edge_dofs, tests) = match family {
        Family::Ned1 if order <= 2 => {
            let (exps, span) = ned1_span(order);
            let tests = (order >= 1).then(|| pk_span_vector(order - 1));
            (exps, span, order + 1, tests)
        }
        Family::Ned2 if (1..=3).contains(&order) => {
            let (exps, span) = pk_span_vector(order);
            // Testing against the rotated space would leave gradients of the
            // cubic bubble undetected.
            let tests = (order >= 2).then(|| rt_span(order - 2));
            (exps, span, order + 1, tests)
        }
        _ => {
            return Err(Error::Config(format!(
                "unsupported reference element {family:?} of order {order}"
            )))
        }
    };
    let dim = span.ncols();
    let interior_dofs = tests.as_ref().map_or(0, |t| t.1.ncols());
    assert_eq!(dim, 3 * edge_dofs + interior_dofs);
    let mut basis = ReferenceBasis {
        family,
        order,
        dim,
        edge_dofs,
        interior_dofs,
        exps,
        coeffs: span.clone(),
        interior_tests: tests,
        line: line_rule(2 * MAX_DEGREE),
        area_rule: quadrature(MAX_DEGREE)?,
    };
    // Functional matrix D[i][j] = dof_i(span_j); the dual basis is span · D⁻¹.
    let mut d = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = span.column(j).into_owned();
        let single = DMatrix::from_column_slice(col.len(), 1, col.as_slice());
        let exps = basis.exps.clone();
        let f = move |p: [f64; 2]| eval_vector_cols(&exps, &single, p)[0];
        let vals = basis.dof_values(&f);
        for i in 0..dim {
            d[(i, j)] = vals[i];
        }
    }
    let inv = d
        .try_inverse()
        .ok_or_else(|| Error::Config(format!("degrees of freedom of {family:?}{order} are not unisolvent")))?;
    basis.coeffs = span * inv;
    Ok(basis)
}

pub fn pk_basis(order: usize) -> Result<ReferenceBasis> {
    if order > 3 {
        return Err(Error::Config(format!("unsupported scalar order {order}")));
    }
    let exps = monomial_exponents(order);
    let dim = exps.len();
    Ok(ReferenceBasis {
        family: Family::Pk,
        order,
        dim,
        edge_dofs: 0,
        interior_dofs: 0,
        exps,
        coeffs: DMatrix::identity(dim, dim),
        interior_tests: None,
        line: line_rule(2 * MAX_DEGREE),
        area_rule: quadrature(MAX_DEGREE)?,
    })
}

impl ReferenceBasis {
    pub fn is_vector(&self) -> bool {
        self.family != Family::Pk
    }

    /// Highest total degree of the basis polynomials.
    pub fn degree(&self) -> usize {
        match self.family {
            Family::Ned1 => self.order + 1,
            _ => self.order,
        }
    }

    /// Index of moment `j` on local edge `i`.
    pub fn edge_dof(&self, edge: usize, j: usize) -> usize {
        edge * self.edge_dofs + j
    }

    pub fn eval(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        debug_assert!(self.is_vector());
        eval_vector_cols(&self.exps, &self.coeffs, p)
    }

    /// Scalar curl `∂₁v₂ − ∂₂v₁` of each basis function.
    pub fn eval_curl(&self, p: [f64; 2]) -> Vec<f64> {
        self.eval_jacobian(p).iter().map(|j| j[1][0] - j[0][1]).collect()
    }

    /// `jac[c][d] = ∂ v_c / ∂ x_d` for each basis function.
    pub fn eval_jacobian(&self, p: [f64; 2]) -> Vec<[[f64; 2]; 2]> {
        debug_assert!(self.is_vector());
        let (_, dx, dy) = eval_monomials(&self.exps, centred(p));
        let nm = self.exps.len();
        (0..self.dim)
            .map(|j| {
                let c = self.coeffs.column(j);
                let mut out = [[0.0; 2]; 2];
                for m in 0..nm {
                    out[0][0] += c[m] * dx[m];
                    out[0][1] += c[m] * dy[m];
                    out[1][0] += c[nm + m] * dx[m];
                    out[1][1] += c[nm + m] * dy[m];
                }
                out
            })
            .collect()
    }

    pub fn eval_scalar(&self, p: [f64; 2]) -> Vec<f64> {
        debug_assert!(!self.is_vector());
        let (v, _, _) = eval_monomials(&self.exps, centred(p));
        (0..self.dim).map(|j| self.coeffs.column(j).dot(&nalgebra::DVector::from_column_slice(&v))).collect()
    }

    pub fn eval_scalar_grad(&self, p: [f64; 2]) -> Vec<[f64; 2]> {
        debug_assert!(!self.is_vector());
        let (_, dx, dy) = eval_monomials(&self.exps, centred(p));
        (0..self.dim)
            .map(|j| {
                let c = self.coeffs.column(j);
                let mut g = [0.0; 2];
                for m in 0..self.exps.len() {
                    g[0] += c[m] * dx[m];
                    g[1] += c[m] * dy[m];
                }
                g
            })
            .collect()
    }

    /// Applies every degree of freedom to a vector field on the reference
    /// triangle. Exact for polynomial fields of degree up to ten.
    pub fn dof_values(&self, f: &dyn Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        assert!(self.is_vector(), "degrees of freedom are defined for vector families");
        let mut out = Vec::with_capacity(self.dim);
        for [a, b] in REFERENCE_EDGES {
            let (pa, pb) = (REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]);
            let t = [pb[0] - pa[0], pb[1] - pa[1]];
            let mut moments = vec![0.0; self.edge_dofs];
            for (&s, &w) in self.line.points.iter().zip(&self.line.weights) {
                let v = f([pa[0] + s * t[0], pa[1] + s * t[1]]);
                let vt = v[0] * t[0] + v[1] * t[1];
                for (m, l) in moments.iter_mut().zip(legendre(self.edge_dofs, 2.0 * s - 1.0)) {
                    *m += w * vt * l;
                }
            }
            out.extend(moments);
        }
        if let Some((exps, tests)) = &self.interior_tests {
            let mut moments = vec![0.0; tests.ncols()];
            for q in 0..self.area_rule.len() {
                let p = self.area_rule.point(q);
                let w = self.area_rule.weights[q];
                let v = f(p);
                for (m, z) in moments.iter_mut().zip(eval_vector_cols(exps, tests, p)) {
                    *m += w * (v[0] * z[0] + v[1] * z[1]);
                }
            }
            out.extend(moments);
        }
        out
    }

    /// `dof_i(φ_j)`; the identity up to roundoff.
    pub fn dof_matrix(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let vals = self.dof_values(&|p| self.eval(p)[j]);
            for i in 0..self.dim {
                d[(i, j)] = vals[i];
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        for k in 0..=2 {
            let b = ned_basis(Family::Ned1, k).unwrap();
            assert_eq!(b.dim, (k + 1) * (k + 3));
            assert_eq!(b.edge_dofs, k + 1);
            assert_eq!(b.interior_dofs, k * (k + 1));
        }
        for m in 1..=3 {
            let b = ned_basis(Family::Ned2, m).unwrap();
            assert_eq!(b.dim, (m + 1) * (m + 2));
            assert_eq!(b.edge_dofs, m + 1);
            assert_eq!(b.interior_dofs, (m - 1) * (m + 1));
        }
        for k in 0..=3 {
            assert_eq!(pk_basis(k).unwrap().dim, (k + 1) * (k + 2) / 2);
        }
        assert!(ned_basis(Family::Ned1, 3).is_err());
        assert!(ned_basis(Family::Ned2, 0).is_err());
        assert!(pk_basis(4).is_err());
    }

    #[test]
    fn unisolvence() {
        let cases = [(Family::Ned1, 0), (Family::Ned1, 1), (Family::Ned1, 2), (Family::Ned2, 1), (Family::Ned2, 2), (Family::Ned2, 3)];
        for (f, k) in cases {
            let b = ned_basis(f, k).unwrap();
            let d = b.dof_matrix();
            let err = (d - DMatrix::identity(b.dim, b.dim)).abs().max();
            assert!(err < 1e-12, "{f:?}{k}: {err}");
        }
    }

    #[test]
    fn whitney_curls_are_constant() {
        let b = ned_basis(Family::Ned1, 0).unwrap();
        let c0 = b.eval_curl([0.1, 0.2]);
        let c1 = b.eval_curl([0.6, 0.3]);
        for (a, c) in c0.iter().zip(&c1) {
            assert!((a - c).abs() < 1e-14);
            // Unit tangential moment on one edge: curl integrates to ±1 over area 1/2.
            assert!((a.abs() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn curl_matches_finite_differences() {
        let h = 1e-5;
        for (f, k) in [(Family::Ned1, 2), (Family::Ned2, 3)] {
            let b = ned_basis(f, k).unwrap();
            for p in [[0.2, 0.3], [0.55, 0.1], [0.1, 0.7]] {
                let curl = b.eval_curl(p);
                let fx1 = b.eval([p[0] + h, p[1]]);
                let fx0 = b.eval([p[0] - h, p[1]]);
                let fy1 = b.eval([p[0], p[1] + h]);
                let fy0 = b.eval([p[0], p[1] - h]);
                for j in 0..b.dim {
                    let fd = (fx1[j][1] - fx0[j][1]) / (2.0 * h) - (fy1[j][0] - fy0[j][0]) / (2.0 * h);
                    assert!((fd - curl[j]).abs() < 1e-6 * (1.0 + curl[j].abs()));
                }
            }
        }
    }

    #[test]
    fn p2_mass_matrix_is_positive_definite() {
        let b = pk_basis(2).unwrap();
        let q = quadrature(4).unwrap();
        let mut m = DMatrix::<f64>::zeros(b.dim, b.dim);
        for i in 0..q.len() {
            let v = b.eval_scalar(q.point(i));
            for a in 0..b.dim {
                for c in 0..b.dim {
                    m[(a, c)] += q.weights[i] * v[a] * v[c];
                }
            }
        }
        assert!((&m - m.transpose()).abs().max() < 1e-15);
        assert!(m.symmetric_eigenvalues().iter().all(|&l| l > 0.0));
    }
}
