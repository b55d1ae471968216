//! Quantities recovered from a computed eigenpair: pressure and vorticity
//! from the stress, and the patch-averaged velocity `Θ_h u_h`.

mod vtk;

use serde::{Deserialize, Serialize};

use crate::assembly::tensor::{self, Tensor2, J};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Patches};
use crate::refelems::{pk_basis, quadrature, ReferenceBasis, MAX_DEGREE};
use crate::spaces::{local_mass, DofMap, ElementMap};

pub use vtk::{export_vtk, read_vtk, Location, VtkData, VtkField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    StressTensor,
    Velocity,
    Pressure,
    Vorticity,
    NodalP1Vector,
}

/// Discontinuous piecewise polynomial field with `components` scalar parts.
///
/// The coefficient of basis function `i` of component `c` on triangle `t` is
/// stored at `(t * components + c) * dim + i`, which is the velocity layout
/// of a [`DofMap`].
#[derive(Clone, Debug)]
pub struct DgField {
    pub kind: FieldKind,
    pub degree: usize,
    pub components: usize,
    basis: ReferenceBasis,
    pub coeffs: Vec<f64>,
}

impl DgField {
    pub fn new(kind: FieldKind, degree: usize, components: usize, coeffs: Vec<f64>) -> Result<Self> {
        let basis = pk_basis(degree)?;
        if components == 0 || coeffs.len() % (components * basis.dim) != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coefficients do not fit {components} components of degree {degree}",
                coeffs.len()
            )));
        }
        Ok(DgField {
            kind,
            degree,
            components,
            basis,
            coeffs,
        })
    }

    pub fn n_triangles(&self) -> usize {
        self.coeffs.len() / (self.components * self.basis.dim)
    }

    /// Values of all components at reference point `xh` of triangle `t`.
    pub fn eval(&self, t: usize, xh: [f64; 2]) -> Vec<f64> {
        let phi = self.basis.eval_scalar(xh);
        let np = self.basis.dim;
        (0..self.components)
            .map(|c| {
                let base = (t * self.components + c) * np;
                phi.iter().zip(&self.coeffs[base..base + np]).map(|(p, a)| p * a).sum()
            })
            .collect()
    }

    /// `∫_T` of every component.
    pub fn integral(&self, mesh: &Mesh, t: usize) -> Vec<f64> {
        let rule = quadrature(self.degree.max(1)).expect("degree within table");
        let area = mesh.triangle_area(t);
        let mut out = vec![0.0; self.components];
        for q in 0..rule.len() {
            let v = self.eval(t, rule.point(q));
            for c in 0..self.components {
                out[c] += 2.0 * area * rule.weights[q] * v[c];
            }
        }
        out
    }

    fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.n_triangles() != mesh.n_triangles() {
            return Err(Error::InvalidInput(format!(
                "field has {} triangles, mesh has {}",
                self.n_triangles(),
                mesh.n_triangles()
            )));
        }
        Ok(())
    }
}

/// Exact element-wise `L²` projection onto `P_degree` of a function given in
/// reference coordinates of each triangle.
fn project_local(
    mesh: &Mesh,
    kind: FieldKind,
    degree: usize,
    components: usize,
    f: impl Fn(usize, &ElementMap, [f64; 2]) -> Vec<f64>,
) -> Result<DgField> {
    let basis = pk_basis(degree)?;
    let rule = quadrature(MAX_DEGREE)?;
    let chol = local_mass(&basis, &rule)
        .cholesky()
        .ok_or_else(|| Error::Assembly("reference mass matrix is not positive definite".into()))?;
    let np = basis.dim;
    let phis: Vec<Vec<f64>> = (0..rule.len()).map(|q| basis.eval_scalar(rule.point(q))).collect();
    let mut coeffs = vec![0.0; mesh.n_triangles() * components * np];
    for t in 0..mesh.n_triangles() {
        let map = ElementMap::new(mesh, t);
        let mut rhs = nalgebra::DMatrix::zeros(np, components);
        for q in 0..rule.len() {
            let v = f(t, &map, rule.point(q));
            for (i, p) in phis[q].iter().enumerate() {
                for c in 0..components {
                    rhs[(i, c)] += rule.weights[q] * p * v[c];
                }
            }
        }
        let sol = chol.solve(&rhs);
        for c in 0..components {
            for i in 0..np {
                coeffs[(t * components + c) * np + i] = sol[(i, c)];
            }
        }
    }
    DgField::new(kind, degree, components, coeffs)
}

fn check_stress(dofmap: &DofMap, sigma: &[f64]) -> Result<()> {
    if sigma.len() != dofmap.n_sigma {
        return Err(Error::InvalidInput(format!(
            "stress has {} coefficients, space has {}",
            sigma.len(),
            dofmap.n_sigma
        )));
    }
    Ok(())
}

/// The discrete velocity as a field.
pub fn velocity_field(dofmap: &DofMap, u: &[f64]) -> Result<DgField> {
    if u.len() != dofmap.n_u {
        return Err(Error::InvalidInput(format!(
            "velocity has {} coefficients, space has {}",
            u.len(),
            dofmap.n_u
        )));
    }
    DgField::new(FieldKind::Velocity, dofmap.desc.velocity_order(), 2, u.to_vec())
}

/// `p_h = −½ σ_h : J`, represented exactly in discontinuous `P_d` with `d`
/// the polynomial degree of the stress.
pub fn pressure_from_stress(mesh: &Mesh, dofmap: &DofMap, sigma: &[f64]) -> Result<DgField> {
    check_stress(dofmap, sigma)?;
    project_local(mesh, FieldKind::Pressure, dofmap.desc.stress_degree(), 1, |t, map, xh| {
        let s = dofmap.eval_stress(sigma, map, t, xh).value;
        vec![-0.5 * tensor::ddot(&s, &J)]
    })
}

/// `(1/μ)(σ_h + p_h J)` as a tensor field with components in row-major
/// order.
pub fn vorticity_from_stress(
    mesh: &Mesh,
    dofmap: &DofMap,
    sigma: &[f64],
    pressure: &DgField,
    mu: f64,
) -> Result<DgField> {
    check_stress(dofmap, sigma)?;
    if pressure.kind != FieldKind::Pressure || pressure.components != 1 {
        return Err(Error::InvalidInput(format!("expected a pressure field, got {:?}", pressure.kind)));
    }
    pressure.check_mesh(mesh)?;
    if !(mu > 0.0) {
        return Err(Error::Config(format!("viscosity must be positive, got {mu}")));
    }
    let degree = dofmap.desc.stress_degree().max(pressure.degree);
    project_local(mesh, FieldKind::Vorticity, degree, 4, |t, map, xh| {
        let s = dofmap.eval_stress(sigma, map, t, xh).value;
        let p = pressure.eval(t, xh)[0];
        let w: Tensor2 = [[s[0][0] + p * J[0][0], s[0][1] + p * J[0][1]], [s[1][0] + p * J[1][0], s[1][1] + p * J[1][1]]];
        vec![w[0][0] / mu, w[0][1] / mu, w[1][0] / mu, w[1][1] / mu]
    })
}

/// Continuous piecewise linear vector field given by its vertex values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    pub values: Vec<[f64; 2]>,
}

impl NodalField {
    pub fn eval(&self, mesh: &Mesh, t: usize, xh: [f64; 2]) -> [f64; 2] {
        let v = mesh.triangles()[t].vertices;
        let b = [1.0 - xh[0] - xh[1], xh[0], xh[1]];
        let mut out = [0.0; 2];
        for i in 0..3 {
            out[0] += b[i] * self.values[v[i]][0];
            out[1] += b[i] * self.values[v[i]][1];
        }
        out
    }
}

/// `Θ_h v(z) = Σ_{T ∋ z} ∫_T v / |ω_z|` at every vertex `z`.
pub fn theta_postprocess(mesh: &Mesh, u: &DgField, patches: &Patches) -> Result<NodalField> {
    if u.kind != FieldKind::Velocity || u.components != 2 {
        return Err(Error::InvalidInput(format!("expected a velocity field, got {:?}", u.kind)));
    }
    u.check_mesh(mesh)?;
    if patches.vertex.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput("patches belong to a different mesh".into()));
    }
    let integrals: Vec<Vec<f64>> = (0..mesh.n_triangles()).map(|t| u.integral(mesh, t)).collect();
    let values = patches
        .vertex
        .iter()
        .map(|patch| {
            let mut s = [0.0; 2];
            for &t in &patch.triangles {
                s[0] += integrals[t][0];
                s[1] += integrals[t][1];
            }
            [s[0] / patch.measure, s[1] / patch.measure]
        })
        .collect();
    Ok(NodalField { values })
}
