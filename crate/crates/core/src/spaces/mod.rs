//! Global numbering of the tensor stress space and the discontinuous velocity
//! space, plus the canonical interpolation operators onto them.
//!
//! A stress field `τ` has two rows, each in the same vector Nédélec space.
//! Global stress unknown `r * n_ned + g` is vector basis function `g` placed in
//! row `r`. Velocity unknowns are grouped per triangle: `t * 2 n_p + c * n_p + i`
//! is local scalar basis function `i` in component `c`.

mod geometry;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::refelems::{ned_basis, pk_basis, quadrature, Family, QuadratureRule, ReferenceBasis, REFERENCE_EDGES};

pub use geometry::ElementMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BcMode {
    /// Velocity vanishes on the whole boundary; the stress carries the
    /// zero-mean constraint on `σ:J`.
    AllDirichlet,
    /// Dirichlet on edges tagged so, traction-free (`σ n = 0`) on Neumann edges.
    MixedTest3,
}

/// The pair `P_k² – NED^(ℓ)_{ℓ+k-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub family: u8,
    pub k: usize,
}

impl SpaceDescriptor {
    pub fn new(family: u8, k: usize) -> Result<Self> {
        if !(1..=2).contains(&family) || k > 2 {
            return Err(Error::Config(format!(
                "unsupported scheme (l={family}, k={k}); expected l in {{1,2}} and k in {{0,1,2}}"
            )));
        }
        Ok(SpaceDescriptor { family, k })
    }

    pub fn stress_family(&self) -> Family {
        if self.family == 1 {
            Family::Ned1
        } else {
            Family::Ned2
        }
    }

    pub fn stress_order(&self) -> usize {
        self.k + self.family as usize - 1
    }

    pub fn velocity_order(&self) -> usize {
        self.k
    }

    /// Highest polynomial degree appearing in the stress basis.
    pub fn stress_degree(&self) -> usize {
        self.k + 1
    }

    /// Quadrature degree exact for every bilinear form of the scheme.
    pub fn quadrature_degree(&self) -> usize {
        2 * self.stress_degree() + 2
    }

    pub fn label(&self) -> String {
        format!("P{}-NED{}_{}", self.k, self.family, self.stress_order())
    }
}

#[derive(Clone, Debug)]
pub struct DofMap {
    pub desc: SpaceDescriptor,
    pub bc: BcMode,
    pub stress_basis: ReferenceBasis,
    pub velocity_basis: ReferenceBasis,
    n_triangles: usize,
    /// Dimension of the vector Nédélec space.
    pub n_ned: usize,
    pub n_sigma: usize,
    pub n_u: usize,
    ned_dofs: Vec<usize>,
    ned_signs: Vec<f64>,
    /// Stress unknowns fixed to zero (edge moments on Neumann edges), ascending.
    pub constrained: Vec<usize>,
}

pub fn build_dofmap(mesh: &Mesh, desc: SpaceDescriptor, bc: BcMode) -> Result<DofMap> {
    if bc == BcMode::MixedTest3 && !mesh.has_tag(BoundaryTag::Neumann) {
        return Err(Error::Config("mixed boundary conditions need at least one Neumann edge".into()));
    }
    let stress_basis = ned_basis(desc.stress_family(), desc.stress_order())?;
    let velocity_basis = pk_basis(desc.velocity_order())?;
    let ne = stress_basis.edge_dofs;
    let ni = stress_basis.interior_dofs;
    let dim = stress_basis.dim;
    let n_ned = mesh.n_edges() * ne + mesh.n_triangles() * ni;
    let mut ned_dofs = Vec::with_capacity(mesh.n_triangles() * dim);
    let mut ned_signs = Vec::with_capacity(mesh.n_triangles() * dim);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for (i, [a, b]) in REFERENCE_EDGES.iter().enumerate() {
            let e = tri.edges[i];
            let agrees = tri.vertices[*a] < tri.vertices[*b];
            for j in 0..ne {
                ned_dofs.push(e * ne + j);
                // Reversing the edge reverses the tangent and reflects the
                // Legendre weight: P_j(-s) = (-1)^j P_j(s).
                let sign = if agrees || j % 2 == 1 { 1.0 } else { -1.0 };
                ned_signs.push(sign);
            }
        }
        for i in 0..ni {
            ned_dofs.push(mesh.n_edges() * ne + t * ni + i);
            ned_signs.push(1.0);
        }
    }
    let mut constrained = Vec::new();
    if bc == BcMode::MixedTest3 {
        for r in 0..2 {
            for (e, edge) in mesh.edges().iter().enumerate() {
                if edge.tag == BoundaryTag::Neumann {
                    constrained.extend((0..ne).map(|j| r * n_ned + e * ne + j));
                }
            }
        }
    }
    Ok(DofMap {
        desc,
        bc,
        n_triangles: mesh.n_triangles(),
        n_ned,
        n_sigma: 2 * n_ned,
        n_u: 2 * mesh.n_triangles() * velocity_basis.dim,
        stress_basis,
        velocity_basis,
        ned_dofs,
        ned_signs,
        constrained,
    })
}

/// Physical vector basis functions of one triangle at one point, signs applied.
#[derive(Clone, Debug)]
pub struct StressBasisAt {
    pub values: Vec<[f64; 2]>,
    pub curls: Vec<f64>,
    pub jacobians: Vec<[[f64; 2]; 2]>,
}

impl DofMap {
    pub fn n_triangles(&self) -> usize {
        self.n_triangles
    }

    /// Global vector-Nédélec indices of the local basis of triangle `t`.
    pub fn ned_dofs(&self, t: usize) -> &[usize] {
        let d = self.stress_basis.dim;
        &self.ned_dofs[t * d..(t + 1) * d]
    }

    pub fn ned_signs(&self, t: usize) -> &[f64] {
        let d = self.stress_basis.dim;
        &self.ned_signs[t * d..(t + 1) * d]
    }

    /// Global index of local velocity function `i` in component `c` of `t`.
    pub fn velocity_dof(&self, t: usize, c: usize, i: usize) -> usize {
        let np = self.velocity_basis.dim;
        t * 2 * np + c * np + i
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained.binary_search(&dof).is_ok()
    }

    /// Stress unknowns that remain after eliminating the constrained ones.
    pub fn free_stress_dofs(&self) -> Vec<usize> {
        (0..self.n_sigma).filter(|&d| !self.is_constrained(d)).collect()
    }

    /// Vector basis of triangle `t` at reference point `xh`.
    pub fn stress_basis_at(&self, map: &ElementMap, t: usize, xh: [f64; 2]) -> StressBasisAt {
        let signs = self.ned_signs(t);
        let vals = self.stress_basis.eval(xh);
        let jacs = self.stress_basis.eval_jacobian(xh);
        let mut out = StressBasisAt {
            values: Vec::with_capacity(vals.len()),
            curls: Vec::with_capacity(vals.len()),
            jacobians: Vec::with_capacity(vals.len()),
        };
        for i in 0..vals.len() {
            let s = signs[i];
            let v = map.covariant(vals[i]);
            let j = map.covariant_jacobian(jacs[i]);
            out.values.push([s * v[0], s * v[1]]);
            out.jacobians.push([[s * j[0][0], s * j[0][1]], [s * j[1][0], s * j[1][1]]]);
            out.curls.push(s * (j[1][0] - j[0][1]));
        }
        out
    }

    /// Value, row-wise curl and gradient (`grad[r][c][d] = ∂σ_rc/∂x_d`) of a
    /// stress field on triangle `t` at reference point `xh`.
    pub fn eval_stress(&self, coeffs: &[f64], map: &ElementMap, t: usize, xh: [f64; 2]) -> StressValue {
        let at = self.stress_basis_at(map, t, xh);
        let dofs = self.ned_dofs(t);
        let mut out = StressValue::default();
        for r in 0..2 {
            for (i, &g) in dofs.iter().enumerate() {
                let c = coeffs[r * self.n_ned + g];
                if c == 0.0 {
                    continue;
                }
                for d in 0..2 {
                    out.value[r][d] += c * at.values[i][d];
                    for e in 0..2 {
                        out.grad[r][d][e] += c * at.jacobians[i][d][e];
                    }
                }
                out.curl[r] += c * at.curls[i];
            }
        }
        out
    }

    /// Velocity on triangle `t` at reference point `xh`.
    pub fn eval_velocity(&self, coeffs: &[f64], t: usize, xh: [f64; 2]) -> [f64; 2] {
        let phi = self.velocity_basis.eval_scalar(xh);
        let mut v = [0.0; 2];
        for (c, vc) in v.iter_mut().enumerate() {
            for (i, p) in phi.iter().enumerate() {
                *vc += coeffs[self.velocity_dof(t, c, i)] * p;
            }
        }
        v
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StressValue {
    pub value: [[f64; 2]; 2],
    pub curl: [f64; 2],
    pub grad: [[[f64; 2]; 2]; 2],
}

/// Canonical Nédélec interpolant `Π_h τ`, applied row by row.
///
/// Each functional is evaluated on the pulled-back rows `Bᵀ τ_r ∘ F`; edge
/// moments are shared by the two adjacent triangles and agree by construction.
pub fn interpolate_ned(mesh: &Mesh, dofmap: &DofMap, tau: impl Fn([f64; 2]) -> [[f64; 2]; 2]) -> Vec<f64> {
    let mut out = vec![0.0; dofmap.n_sigma];
    for t in 0..mesh.n_triangles() {
        let map = ElementMap::new(mesh, t);
        let dofs = dofmap.ned_dofs(t);
        let signs = dofmap.ned_signs(t);
        for r in 0..2 {
            let pulled = |xh: [f64; 2]| map.pull_back(tau(map.to_physical(xh))[r]);
            let local = dofmap.stress_basis.dof_values(&pulled);
            for i in 0..local.len() {
                out[r * dofmap.n_ned + dofs[i]] = signs[i] * local[i];
            }
        }
    }
    out
}

pub(crate) fn local_mass(basis: &ReferenceBasis, rule: &QuadratureRule) -> nalgebra::DMatrix<f64> {
    let n = basis.dim;
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for q in 0..rule.len() {
        let phi = basis.eval_scalar(rule.point(q));
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] += rule.weights[q] * phi[a] * phi[b];
            }
        }
    }
    m
}

/// Element-wise `L²` projection `R_h v` onto discontinuous `P_k²`, laid out
/// like the velocity unknowns of a [`DofMap`] with velocity order `k`.
pub fn l2_project_velocity(mesh: &Mesh, k: usize, v: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    let basis = pk_basis(k)?;
    let rule = quadrature(crate::refelems::MAX_DEGREE)?;
    let chol = local_mass(&basis, &rule)
        .cholesky()
        .ok_or_else(|| Error::Assembly("reference mass matrix is not positive definite".into()))?;
    let np = basis.dim;
    let mut out = vec![0.0; 2 * np * mesh.n_triangles()];
    for t in 0..mesh.n_triangles() {
        let map = ElementMap::new(mesh, t);
        // The Jacobian determinant cancels between mass matrix and load.
        let mut rhs = nalgebra::DMatrix::zeros(np, 2);
        for q in 0..rule.len() {
            let xh = rule.point(q);
            let val = v(map.to_physical(xh));
            for (i, p) in basis.eval_scalar(xh).iter().enumerate() {
                rhs[(i, 0)] += rule.weights[q] * p * val[0];
                rhs[(i, 1)] += rule.weights[q] * p * val[1];
            }
        }
        let sol = chol.solve(&rhs);
        for c in 0..2 {
            for i in 0..np {
                out[t * 2 * np + c * np + i] = sol[(i, c)];
            }
        }
    }
    Ok(out)
}

/// Element-wise `L²` projection of a scalar onto discontinuous `P_k`.
pub fn l2_project_scalar(mesh: &Mesh, k: usize, f: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
    let packed = l2_project_velocity(mesh, k, |x| [f(x), 0.0])?;
    let np = (k + 1) * (k + 2) / 2;
    Ok((0..mesh.n_triangles())
        .flat_map(|t| packed[t * 2 * np..t * 2 * np + np].to_vec())
        .collect())
}
