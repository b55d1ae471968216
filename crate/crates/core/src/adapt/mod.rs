//! Adaptive refinement driven by the residual estimator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_forms, build_pencil, Pencil};
use crate::error::{Error, Result};
use crate::estimator::{compute_indicators, effectivity, LocalIndicators};
use crate::harness::fit_order;
use crate::mesh::{patches, refine, Mesh};
use crate::postproc::{theta_postprocess, velocity_field};
use crate::spaces::{build_dofmap, BcMode, DofMap, SpaceDescriptor};
use crate::speig::{solve_eig, EigConfig, SpectralSolution};

/// Triangles with `η_T ≥ fraction · max η`. The maximiser is always
/// included; `fraction = 0` marks everything.
pub fn mark(indicators: &LocalIndicators, fraction: f64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("marking fraction must lie in [0, 1], got {fraction}")));
    }
    let eta = indicators.local_eta();
    if eta.is_empty() {
        return Ok(Vec::new());
    }
    let (imax, max) = eta
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let cut = fraction * max;
    let mut out: Vec<usize> = (0..eta.len()).filter(|&t| eta[t] >= cut).collect();
    if !out.contains(&imax) {
        out.push(imax);
        out.sort_unstable();
    }
    Ok(out)
}

/// Everything produced by one solve on a fixed mesh.
pub struct Discrete {
    pub dofmap: DofMap,
    pub pencil: Pencil,
    pub solution: SpectralSolution,
}

pub fn solve_on_mesh(mesh: &Mesh, desc: SpaceDescriptor, bc: BcMode, mu: f64, eig: &EigConfig) -> Result<Discrete> {
    let dofmap = build_dofmap(mesh, desc, bc)?;
    let forms = assemble_forms(mesh, &dofmap, mu)?;
    let pencil = build_pencil(&forms, &dofmap)?;
    let solution = solve_eig(&pencil, eig)?;
    Ok(Discrete {
        dofmap,
        pencil,
        solution,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    /// Index (0-based, ascending) of the tracked eigenvalue on the initial mesh.
    pub target: usize,
    pub fraction: f64,
    pub max_iterations: usize,
    /// No mesh beyond the first is solved on with more degrees of freedom.
    pub dof_cap: usize,
    /// Relative window for matching the tracked eigenvalue between meshes.
    pub window: f64,
    /// Known eigenvalue for effectivity and error columns.
    pub reference: Option<f64>,
    pub mu: f64,
    pub eig: EigConfig,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            target: 0,
            fraction: 0.5,
            max_iterations: 40,
            dof_cap: 50_000,
            window: 0.2,
            reference: None,
            mu: 1.0,
            eig: EigConfig::with_nev(4),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AdaptIteration {
    pub iteration: usize,
    /// Free stress unknowns plus velocity unknowns.
    pub dof: usize,
    pub lambda: f64,
    pub error: Option<f64>,
    pub eta_sq: f64,
    pub effectivity: Option<f64>,
    pub marked: usize,
    pub n_triangles: usize,
    pub n_vertices: usize,
    pub h_min: f64,
    pub h_max: f64,
    /// Centroid of the smallest triangle.
    pub finest_at: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaptReport {
    pub scheme: String,
    pub iterations: Vec<AdaptIteration>,
    /// Slope of `log |λ − λ_ref|` against `log dof` when a reference is known.
    pub decay_order: Option<f64>,
    pub eta_order: Option<f64>,
}

impl AdaptReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| crate::estimator::csv_error(path, e))?;
        w.write_record([
            "iteration",
            "dof",
            "lambda",
            "error",
            "eta_sq",
            "effectivity",
            "marked",
            "n_triangles",
            "n_vertices",
            "h_min",
            "h_max",
        ])
        .map_err(|e| crate::estimator::csv_error(path, e))?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for it in &self.iterations {
            w.write_record([
                it.iteration.to_string(),
                it.dof.to_string(),
                format!("{:.10}", it.lambda),
                opt(it.error),
                format!("{:e}", it.eta_sq),
                opt(it.effectivity),
                it.marked.to_string(),
                it.n_triangles.to_string(),
                it.n_vertices.to_string(),
                format!("{:e}", it.h_min),
                format!("{:e}", it.h_max),
            ])
            .map_err(|e| crate::estimator::csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Index of the eigenvalue closest to `previous`, rejecting matches outside
/// the window and ambiguous ones where a second candidate inside the window
/// is less than twice as far away.
fn track(eigenvalues: &[f64], previous: f64, window: f64) -> Result<usize> {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| (eigenvalues[a] - previous).abs().total_cmp(&(eigenvalues[b] - previous).abs()));
    let Some(&best) = order.first() else {
        return Err(Error::Tracking("no eigenvalues were computed".into()));
    };
    let d0 = (eigenvalues[best] - previous).abs();
    let limit = window * previous.abs();
    if d0 > limit {
        return Err(Error::Tracking(format!(
            "no eigenvalue within {:.0}% of {previous}; nearest is {}",
            100.0 * window,
            eigenvalues[best]
        )));
    }
    if let Some(&second) = order.get(1) {
        let d1 = (eigenvalues[second] - previous).abs();
        if d1 <= limit && d1 <= 2.0 * d0 {
            return Err(Error::Tracking(format!(
                "eigenvalues {} and {} are both close to {previous}",
                eigenvalues[best], eigenvalues[second]
            )));
        }
    }
    Ok(best)
}

/// Free stress unknowns plus velocity unknowns.
fn dof_count(dofmap: &DofMap) -> usize {
    dofmap.n_sigma - dofmap.constrained.len() + dofmap.n_u
}

/// Solve, estimate, mark, refine until the iteration limit is hit or the
/// next mesh would exceed the dof cap. Only the starting mesh may exceed it.
/// Every iteration rebuilds spaces, forms and the eigensolver from scratch.
pub fn afem_loop(mesh: Mesh, desc: SpaceDescriptor, bc: BcMode, cfg: &AdaptConfig) -> Result<(AdaptReport, Mesh)> {
    if desc.k != 0 {
        return Err(Error::Unsupported(format!(
            "adaptive refinement needs a k = 0 scheme, got {}",
            desc.label()
        )));
    }
    if cfg.eig.nev <= cfg.target {
        return Err(Error::Config(format!(
            "nev = {} does not cover target index {}",
            cfg.eig.nev, cfg.target
        )));
    }
    let mut mesh = mesh;
    let mut iterations = Vec::new();
    let mut previous: Option<f64> = None;
    for iteration in 0..=cfg.max_iterations {
        let d = solve_on_mesh(&mesh, desc, bc, cfg.mu, &cfg.eig)?;
        let idx = match previous {
            None => cfg.target,
            Some(p) => track(&d.solution.eigenvalues, p, cfg.window)?,
        };
        let lambda = d.solution.eigenvalues[idx];
        let u = &d.solution.u[idx];
        let theta = theta_postprocess(&mesh, &velocity_field(&d.dofmap, u)?, &patches(&mesh))?;
        let ind = compute_indicators(&mesh, &d.dofmap, &d.solution.sigma[idx], u, &theta, cfg.mu)?;
        let eta_sq = ind.eta_sq_total();
        let dof = dof_count(&d.dofmap);
        let last = iteration == cfg.max_iterations || dof >= cfg.dof_cap;
        let marked = if last { Vec::new() } else { mark(&ind, cfg.fraction)? };
        let hs: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.h_triangle(t)).collect();
        let finest = (0..hs.len()).min_by(|&a, &b| hs[a].total_cmp(&hs[b])).unwrap_or(0);
        iterations.push(AdaptIteration {
            iteration,
            dof,
            lambda,
            error: cfg.reference.map(|r| (r - lambda).abs()),
            eta_sq,
            effectivity: cfg.reference.map(|r| effectivity(r, lambda, eta_sq.sqrt())),
            marked: marked.len(),
            n_triangles: mesh.n_triangles(),
            n_vertices: mesh.n_vertices(),
            h_min: hs.iter().copied().fold(f64::INFINITY, f64::min),
            h_max: mesh.h_max(),
            finest_at: mesh.centroid(finest),
        });
        previous = Some(lambda);
        if last {
            break;
        }
        let refined = refine(&mesh, &marked);
        if dof_count(&build_dofmap(&refined, desc, bc)?) > cfg.dof_cap {
            break;
        }
        mesh = refined;
    }
    let fit = |f: &dyn Fn(&AdaptIteration) -> Option<f64>| -> Option<f64> {
        let pairs: Vec<(f64, f64)> = iterations
            .iter()
            .filter_map(|it| f(it).filter(|v| *v > 0.0).map(|v| (it.dof as f64, v)))
            .collect();
        fit_order(&pairs).ok().map(|(s, _)| s)
    };
    let decay_order = fit(&|it| it.error);
    let eta_order = fit(&|it| Some(it.eta_sq));
    Ok((
        AdaptReport {
            scheme: desc.label(),
            iterations,
            decay_order,
            eta_order,
        },
        mesh,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicators(eta_sq: &[f64]) -> LocalIndicators {
        LocalIndicators {
            addends: eta_sq.iter().map(|&v| [v, 0.0, 0.0, 0.0, 0.0]).collect(),
            eta_sq: eta_sq.to_vec(),
            eta: eta_sq.iter().sum::<f64>().sqrt(),
        }
    }

    #[test]
    fn marking_threshold() {
        let ind = indicators(&[1.0, 0.25, 0.2, 0.0]);
        assert_eq!(mark(&ind, 0.5).unwrap(), vec![0, 1]);
        assert_eq!(mark(&ind, 1.0).unwrap(), vec![0]);
        assert_eq!(mark(&ind, 0.0).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(mark(&indicators(&[0.0, 0.0]), 0.5).unwrap(), vec![0, 1]);
        assert!(mark(&ind, 1.5).is_err());
    }

    #[test]
    fn tracking_rules() {
        assert_eq!(track(&[10.0, 20.0, 30.0], 19.0, 0.2).unwrap(), 1);
        assert!(track(&[10.0, 30.0], 20.0, 0.2).is_err());
        assert!(track(&[19.0, 20.5], 20.0, 0.2).is_err());
        assert_eq!(track(&[10.0, 20.0, 23.5], 19.8, 0.2).unwrap(), 1);
    }
}
