//! Residual a posteriori indicators for the lowest-order schemes.
//!
//! With `ρ = σ_h^r / μ` and `Θ_h` the patch average of the velocity,
//!
//! ```text
//! η_T² = ‖Θ_h u_h − u_h‖²_T + h_T² ‖curl u_h − ρ‖²_T + h_T² ‖div ρ‖²_T
//!      + Σ_{e ⊂ ∂T interior} h_e ‖⟦ρ⟧ n_e‖²_e + Σ_{e ⊂ ∂T ∩ Γ_D} h_e ‖ρ n_e‖²_e .
//! ```
//!
//! Interior edge terms enter the indicators of both neighbours.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::tensor::{self, Tensor2};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};
use crate::postproc::NodalField;
use crate::refelems::{gauss_legendre, quadrature};
use crate::spaces::{DofMap, ElementMap};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalIndicators {
    /// The five addends of `η_T²`, per triangle, in the order above.
    pub addends: Vec<[f64; 5]>,
    pub eta_sq: Vec<f64>,
    /// `sqrt(Σ η_T²)`.
    pub eta: f64,
}

impl LocalIndicators {
    pub fn eta_sq_total(&self) -> f64 {
        self.eta_sq.iter().sum()
    }

    /// `η_T` per triangle.
    pub fn local_eta(&self) -> Vec<f64> {
        self.eta_sq.iter().map(|v| v.sqrt()).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["triangle_id", "addend1", "addend2", "addend3", "addend4", "addend5", "eta_sq"])
            .map_err(|e| csv_error(path, e))?;
        for (t, (a, s)) in self.addends.iter().zip(&self.eta_sq).enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(a.iter().map(|v| format!("{v:e}")));
            row.push(format!("{s:e}"));
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

/// `σ^r / μ` and its row-wise divergence.
fn reduced_stress(dofmap: &DofMap, sigma: &[f64], map: &ElementMap, t: usize, xh: [f64; 2], mu: f64) -> (Tensor2, [f64; 2]) {
    let s = dofmap.eval_stress(sigma, map, t, xh);
    let r = tensor::dev_r(&s.value);
    let rho = [[r[0][0] / mu, r[0][1] / mu], [r[1][0] / mu, r[1][1] / mu]];
    // ∂_d (σ:J) = ∂_d σ_01 − ∂_d σ_10, and J_rd enters div row r at column d.
    let g = &s.grad;
    let dj = [g[0][1][0] - g[1][0][0], g[0][1][1] - g[1][0][1]];
    let mut div = [0.0; 2];
    for (row, d) in div.iter_mut().enumerate() {
        for col in 0..2 {
            *d += g[row][col][col] - 0.5 * dj[col] * tensor::J[row][col];
        }
        *d /= mu;
    }
    (rho, div)
}

/// Row-wise curl of the velocity: row `c` is `(−∂_y u_c, ∂_x u_c)`.
fn velocity_curl(dofmap: &DofMap, u: &[f64], map: &ElementMap, t: usize, xh: [f64; 2]) -> Tensor2 {
    let grads = dofmap.velocity_basis.eval_scalar_grad(xh);
    let mut out = [[0.0; 2]; 2];
    for (c, row) in out.iter_mut().enumerate() {
        for (i, gh) in grads.iter().enumerate() {
            let g = map.gradient(*gh);
            let a = u[dofmap.velocity_dof(t, c, i)];
            row[0] -= a * g[1];
            row[1] += a * g[0];
        }
    }
    out
}

fn norm_sq(t: &Tensor2) -> f64 {
    t[0][0] * t[0][0] + t[0][1] * t[0][1] + t[1][0] * t[1][0] + t[1][1] * t[1][1]
}

/// Local indicators `η_T²` for one eigenpair of a `k = 0` scheme.
///
/// Neumann edges carry no boundary addend since `σ n = 0` holds there
/// exactly.
pub fn compute_indicators(
    mesh: &Mesh,
    dofmap: &DofMap,
    sigma: &[f64],
    u: &[f64],
    theta: &NodalField,
    mu: f64,
) -> Result<LocalIndicators> {
    if dofmap.desc.k != 0 {
        return Err(Error::Unsupported(format!(
            "the estimator covers k = 0 only, scheme is {}",
            dofmap.desc.label()
        )));
    }
    if sigma.len() != dofmap.n_sigma || u.len() != dofmap.n_u || theta.values.len() != mesh.n_vertices() {
        return Err(Error::InvalidInput("field sizes do not match the discrete spaces".into()));
    }
    if dofmap.n_triangles() != mesh.n_triangles() {
        return Err(Error::InvalidInput("dof map was built for a different mesh".into()));
    }
    if !(mu > 0.0) {
        return Err(Error::Config(format!("viscosity must be positive, got {mu}")));
    }
    let rule = quadrature(2 * dofmap.desc.stress_degree() + 2)?;
    let (gx, gw) = gauss_legendre(4);
    let edge_pts: Vec<(f64, f64)> = gx.iter().zip(&gw).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();

    // Edge terms, computed once per edge and then credited to the neighbours.
    let edge_terms: Vec<f64> = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let edge = &mesh.edges()[e];
            if edge.tag == BoundaryTag::Neumann {
                return 0.0;
            }
            let [a, b] = mesh.edge_points(e);
            let len = mesh.edge_length(e);
            let n = mesh.edge_normal(e);
            let sides: Vec<(usize, ElementMap)> = edge.adjacent().map(|t| (t, ElementMap::new(mesh, t))).collect();
            let mut sum = 0.0;
            for &(s, w) in &edge_pts {
                let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let mut jump = [0.0; 2];
                for (k, (t, map)) in sides.iter().enumerate() {
                    let (rho, _) = reduced_stress(dofmap, sigma, map, *t, map.to_reference(x), mu);
                    let rn = tensor::matvec(&rho, n);
                    let sign = if k == 0 { 1.0 } else { -1.0 };
                    jump[0] += sign * rn[0];
                    jump[1] += sign * rn[1];
                }
                sum += w * len * (jump[0] * jump[0] + jump[1] * jump[1]);
            }
            len * sum
        })
        .collect();

    let addends: Vec<[f64; 5]> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let map = ElementMap::new(mesh, t);
            let h = mesh.h_triangle(t);
            let w0 = 2.0 * map.area();
            let mut out = [0.0; 5];
            for q in 0..rule.len() {
                let xh = rule.point(q);
                let w = w0 * rule.weights[q];
                let th = theta.eval(mesh, t, xh);
                let uh = dofmap.eval_velocity(u, t, xh);
                out[0] += w * ((th[0] - uh[0]).powi(2) + (th[1] - uh[1]).powi(2));
                let (rho, div) = reduced_stress(dofmap, sigma, &map, t, xh, mu);
                let c = velocity_curl(dofmap, u, &map, t, xh);
                let diff = [[c[0][0] - rho[0][0], c[0][1] - rho[0][1]], [c[1][0] - rho[1][0], c[1][1] - rho[1][1]]];
                out[1] += w * h * h * norm_sq(&diff);
                out[2] += w * h * h * (div[0] * div[0] + div[1] * div[1]);
            }
            for &e in &mesh.triangles()[t].edges {
                let edge = &mesh.edges()[e];
                let slot = if edge.is_boundary() { 4 } else { 3 };
                out[slot] += edge_terms[e];
            }
            out
        })
        .collect();
    let eta_sq: Vec<f64> = addends.iter().map(|a| a.iter().sum()).collect();
    let eta = eta_sq.iter().sum::<f64>().sqrt();
    Ok(LocalIndicators { addends, eta_sq, eta })
}

/// `|λ_ref − λ_h| / η²`; infinite when `η = 0` and the error is not.
pub fn effectivity(lambda_ref: f64, lambda_h: f64, eta: f64) -> f64 {
    let err = (lambda_ref - lambda_h).abs();
    if err == 0.0 {
        0.0
    } else if eta == 0.0 {
        f64::INFINITY
    } else {
        err / (eta * eta)
    }
}
