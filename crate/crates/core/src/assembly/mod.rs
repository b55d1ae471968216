//! Bilinear forms of the stress–velocity eigenproblem and the saddle-point
//! pencil `K x = λ N x`.
//!
//! ```text
//! a(ξ, τ) = (1/μ) ∫ ξ^r : τ^r      b(τ, v) = ∫ v · curl τ      m(u, v) = ∫ u · v
//! ```
//!
//! With `j_i = ∫ φ_i : J` the pencil is
//!
//! ```text
//! K = [ A  Bᵀ  j ]      N = [ 0   0  0 ]
//!     [ B  0   0 ]          [ 0  -M  0 ]
//!     [ jᵀ 0   0 ]          [ 0   0  0 ]
//! ```
//!
//! The multiplier row removes the constant multiples of `J`, which `a` and
//! `b` cannot see. Under mixed conditions the traction-free edge moments are
//! deleted instead and there is no multiplier.

pub mod tensor;

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::refelems::quadrature;
use crate::spaces::{BcMode, DofMap, ElementMap};
use crate::sparse::{factorize, SparseMatrix, Triplets, DEFAULT_PIVOT_TOL};

#[derive(Clone, Debug)]
pub struct Forms {
    /// `n_sigma × n_sigma`
    pub a: SparseMatrix,
    /// `n_u × n_sigma`
    pub b: SparseMatrix,
    /// `n_u × n_u`
    pub m: SparseMatrix,
    /// `∫ φ_i : J` for every stress unknown.
    pub j: Vec<f64>,
    pub mu: f64,
}

struct LocalForms {
    a: Vec<(usize, usize, f64)>,
    b: Vec<(usize, usize, f64)>,
    m: Vec<(usize, usize, f64)>,
    j: Vec<(usize, f64)>,
}

fn element_forms(mesh: &Mesh, dofmap: &DofMap, rule: &crate::refelems::QuadratureRule, mu: f64, t: usize) -> LocalForms {
    let map = ElementMap::new(mesh, t);
    let dofs = dofmap.ned_dofs(t);
    let nd = dofs.len();
    let np = dofmap.velocity_basis.dim;
    let nn = dofmap.n_ned;
    let mut a_loc = vec![0.0; 4 * nd * nd];
    let mut b_loc = vec![0.0; 2 * nd * np];
    let mut m_loc = vec![0.0; np * np];
    let mut j_loc = vec![0.0; 2 * nd];
    for q in 0..rule.len() {
        let xh = rule.point(q);
        let w = rule.weights[q] * map.det;
        let psi = dofmap.stress_basis_at(&map, t, xh);
        let phi = dofmap.velocity_basis.eval_scalar(xh);
        // Local tensor index `r * nd + i` is row r carrying vector function i.
        let tj: Vec<f64> = (0..2 * nd).map(|ri| tensor::row_ddot_j(ri / nd, psi.values[ri % nd])).collect();
        for ri in 0..2 * nd {
            let (r, i) = (ri / nd, ri % nd);
            j_loc[ri] += w * tj[ri];
            for sj in 0..2 * nd {
                let (s, jj) = (sj / nd, sj % nd);
                let dot = if r == s {
                    psi.values[i][0] * psi.values[jj][0] + psi.values[i][1] * psi.values[jj][1]
                } else {
                    0.0
                };
                a_loc[ri * 2 * nd + sj] += w * (dot - 0.5 * tj[ri] * tj[sj]) / mu;
            }
            for p in 0..np {
                b_loc[ri * np + p] += w * phi[p] * psi.curls[i];
            }
        }
        for p in 0..np {
            for r in p..np {
                m_loc[p * np + r] += w * phi[p] * phi[r];
            }
        }
    }
    for p in 0..np {
        for r in 0..p {
            m_loc[p * np + r] = m_loc[r * np + p];
        }
    }
    // Cancellation leaves roundoff where the exact integral vanishes; keeping
    // those entries would only add fill to the factorization.
    prune(&mut a_loc);
    prune(&mut b_loc);
    let global = |ri: usize| (ri / nd) * nn + dofs[ri % nd];
    let mut out = LocalForms {
        a: Vec::with_capacity(4 * nd * nd),
        b: Vec::with_capacity(2 * nd * np),
        m: Vec::with_capacity(2 * np * np),
        j: Vec::with_capacity(2 * nd),
    };
    for ri in 0..2 * nd {
        out.j.push((global(ri), j_loc[ri]));
        for sj in 0..2 * nd {
            let v = a_loc[ri * 2 * nd + sj];
            if v != 0.0 {
                out.a.push((global(ri), global(sj), v));
            }
        }
        // Row r of the stress only meets velocity component r.
        let c = ri / nd;
        for p in 0..np {
            let v = b_loc[ri * np + p];
            if v != 0.0 {
                out.b.push((dofmap.velocity_dof(t, c, p), global(ri), v));
            }
        }
    }
    for c in 0..2 {
        for p in 0..np {
            for r in 0..np {
                out.m.push((dofmap.velocity_dof(t, c, p), dofmap.velocity_dof(t, c, r), m_loc[p * np + r]));
            }
        }
    }
    out
}

/// Zeroes entries at roundoff level relative to the largest local entry.
fn prune(block: &mut [f64]) {
    let cut = 1e-13 * block.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in block.iter_mut() {
        if v.abs() <= cut {
            *v = 0.0;
        }
    }
}

/// Assembles `A`, `B`, `M` and `j` over all triangles.
///
/// Element contributions are computed in parallel and concatenated in
/// triangle order, so the result does not depend on the thread count.
pub fn assemble_forms(mesh: &Mesh, dofmap: &DofMap, mu: f64) -> Result<Forms> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!("viscosity must be positive, got {mu}")));
    }
    if dofmap.n_triangles() != mesh.n_triangles() {
        return Err(Error::Assembly("dof map was built for a different mesh".into()));
    }
    let rule = quadrature(dofmap.desc.quadrature_degree())?;
    let locals: Vec<LocalForms> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| element_forms(mesh, dofmap, &rule, mu, t))
        .collect();
    let (ns, nu) = (dofmap.n_sigma, dofmap.n_u);
    let nd = dofmap.stress_basis.dim;
    let np = dofmap.velocity_basis.dim;
    let nt = mesh.n_triangles();
    let mut a = Triplets::with_capacity(ns, ns, 4 * nd * nd * nt);
    let mut b = Triplets::with_capacity(nu, ns, 2 * nd * np * nt);
    let mut m = Triplets::with_capacity(nu, nu, 2 * np * np * nt);
    let mut j = vec![0.0; ns];
    for l in locals {
        l.a.into_iter().for_each(|(r, c, v)| a.push(r, c, v));
        l.b.into_iter().for_each(|(r, c, v)| b.push(r, c, v));
        l.m.into_iter().for_each(|(r, c, v)| m.push(r, c, v));
        l.j.into_iter().for_each(|(r, v)| j[r] += v);
    }
    // Contributions from neighbouring triangles can cancel as well.
    let a = a.to_csr();
    let b = b.to_csr();
    Ok(Forms {
        a: a.drop_small(1e-13 * a.max_abs()),
        b: b.drop_small(1e-13 * b.max_abs()),
        m: m.to_csr(),
        j,
        mu,
    })
}

/// Position of each block inside the pencil unknown vector.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    /// Global stress unknown for each of the first `n_sigma_free` rows.
    pub stress_dofs: Vec<usize>,
    pub n_sigma_full: usize,
    pub n_u: usize,
    /// 1 when the multiplier row is present.
    pub n_c: usize,
}

impl BlockLayout {
    pub fn n_sigma_free(&self) -> usize {
        self.stress_dofs.len()
    }

    pub fn dim(&self) -> usize {
        self.stress_dofs.len() + self.n_u + self.n_c
    }

    pub fn velocity_range(&self) -> std::ops::Range<usize> {
        let s = self.stress_dofs.len();
        s..s + self.n_u
    }

    /// Splits a pencil vector into full stress coefficients (zeros on
    /// eliminated unknowns), velocity and multiplier.
    pub fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Option<f64>) {
        let mut sigma = vec![0.0; self.n_sigma_full];
        for (i, &g) in self.stress_dofs.iter().enumerate() {
            sigma[g] = x[i];
        }
        let u = x[self.velocity_range()].to_vec();
        let c = (self.n_c == 1).then(|| x[self.dim() - 1]);
        (sigma, u, c)
    }
}

#[derive(Clone, Debug)]
pub struct Pencil {
    pub k: SparseMatrix,
    pub n: SparseMatrix,
    /// Velocity mass matrix, used for `L²` normalisation.
    pub m: SparseMatrix,
    pub layout: BlockLayout,
    pub bc: BcMode,
}

pub fn build_pencil(forms: &Forms, dofmap: &DofMap) -> Result<Pencil> {
    let stress_dofs = dofmap.free_stress_dofs();
    let ns = stress_dofs.len();
    let nu = dofmap.n_u;
    let n_c = usize::from(dofmap.bc == BcMode::AllDirichlet);
    let dim = ns + nu + n_c;
    let a = forms.a.submatrix(&stress_dofs, &stress_dofs);
    let all_u: Vec<usize> = (0..nu).collect();
    let b = forms.b.submatrix(&all_u, &stress_dofs);
    let mut k = Triplets::with_capacity(dim, dim, a.nnz() + 2 * b.nnz() + 2 * ns);
    for (i, j, v) in a.iter() {
        k.push(i, j, v);
    }
    for (i, j, v) in b.iter() {
        k.push(ns + i, j, v);
        k.push(j, ns + i, v);
    }
    if n_c == 1 {
        for (i, &g) in stress_dofs.iter().enumerate() {
            let v = forms.j[g];
            if v != 0.0 {
                k.push(i, dim - 1, v);
                k.push(dim - 1, i, v);
            }
        }
    }
    let mut n = Triplets::with_capacity(dim, dim, forms.m.nnz());
    for (i, j, v) in forms.m.iter() {
        n.push(ns + i, ns + j, -v);
    }
    Ok(Pencil {
        k: k.to_csr(),
        n: n.to_csr(),
        m: forms.m.clone(),
        layout: BlockLayout {
            stress_dofs,
            n_sigma_full: dofmap.n_sigma,
            n_u: nu,
            n_c,
        },
        bc: dofmap.bc,
    })
}

impl Pencil {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Factorizes `K` once to confirm that the constraints leave it regular.
    pub fn verify_nonsingular(&self) -> Result<()> {
        factorize(&self.k, DEFAULT_PIVOT_TOL)
            .map(|_| ())
            .map_err(|e| Error::Assembly(format!("stiffness matrix is singular after constraints: {e}")))
    }

    /// Writes `K.txt` and `N.txt` in coordinate format into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, mat) in [("K.txt", &self.k), ("N.txt", &self.n)] {
            let path = dir.join(name);
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            mat.write_coordinate(std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
