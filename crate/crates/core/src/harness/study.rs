use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::fit::{extrapolate, fit_order, Extrapolation};
use crate::adapt::{afem_loop, solve_on_mesh, AdaptConfig, AdaptReport};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StudyRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub n_triangles: usize,
    /// Size of the pencil.
    pub unknowns: usize,
    pub eigenvalues: Vec<f64>,
    pub max_residual: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenSeries {
    /// 1-based, ascending.
    pub index: usize,
    /// One value per row of the study.
    pub values: Vec<f64>,
    pub extrapolation: Option<Extrapolation>,
    /// Slope of `log |λ_h − λ_extr|` against `log h`.
    pub order: Option<f64>,
    pub order_residual: Option<f64>,
    /// `|λ_h − λ_extr| / |λ_extr|` per row.
    pub relative_errors: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    pub scheme: String,
    pub h_definition: String,
    pub rows: Vec<StudyRow>,
    pub series: Vec<EigenSeries>,
}

fn series(rows: &[StudyRow], index: usize) -> EigenSeries {
    let values: Vec<f64> = rows.iter().map(|r| r.eigenvalues[index]).collect();
    let pairs: Vec<(f64, f64)> = rows.iter().zip(&values).map(|(r, &v)| (r.h, v)).collect();
    let extrapolation = extrapolate(&pairs).ok();
    let (mut order, mut order_residual, mut relative_errors) = (None, None, None);
    if let Some(ex) = &extrapolation {
        let errs: Vec<f64> = values.iter().map(|v| (v - ex.lambda).abs()).collect();
        relative_errors = Some(errs.iter().map(|e| e / ex.lambda.abs()).collect());
        let fit_pairs: Vec<(f64, f64)> = pairs.iter().zip(&errs).filter(|(_, &e)| e > 0.0).map(|(p, &e)| (p.0, e)).collect();
        if let Ok((s, r)) = fit_order(&fit_pairs) {
            order = Some(s);
            order_residual = Some(r);
        }
    }
    EigenSeries {
        index: index + 1,
        values,
        extrapolation,
        order,
        order_residual,
        relative_errors,
    }
}

/// Solves on every `N` of the configuration (concurrently) and fits each
/// eigenvalue series. Nothing is written to disk.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if cfg.n.is_empty() {
        return Err(Error::Config("a study needs at least one N".into()));
    }
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let desc = cfg.descriptor()?;
    let eig = cfg.eig_config();
    let rows = ns
        .par_iter()
        .map(|&n| -> Result<StudyRow> {
            let start = Instant::now();
            let mesh = cfg.mesh(n)?;
            let d = solve_on_mesh(&mesh, desc, cfg.bc_mode(), cfg.mu, &eig)
                .map_err(|e| e.context(format!("{} on {:?} with N = {n}", desc.label(), cfg.domain)))?;
            Ok(StudyRow {
                n,
                h: cfg.domain.h(n),
                n_triangles: mesh.n_triangles(),
                unknowns: d.pencil.dim(),
                eigenvalues: d.solution.eigenvalues.clone(),
                max_residual: d.solution.residuals.iter().copied().fold(0.0, f64::max),
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let nev = rows.iter().map(|r| r.eigenvalues.len()).min().unwrap_or(0);
    let series = (0..nev).map(|i| series(&rows, i)).collect();
    Ok(ConvergenceReport {
        config: cfg.clone(),
        scheme: desc.label(),
        h_definition: cfg.domain.h_definition().to_string(),
        rows,
        series,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| crate::estimator::csv_error(path, e)
}

impl ConvergenceReport {
    /// One row per eigenvalue: the value at each `N`, the fitted order and
    /// the extrapolated limit.
    pub fn write_table_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
        let mut header = vec!["eigenvalue".to_string()];
        header.extend(self.rows.iter().map(|r| format!("N={}", r.n)));
        header.extend(["order".to_string(), "lambda_extr".to_string()]);
        w.write_record(&header).map_err(csv_err(path))?;
        for s in &self.series {
            let mut rec = vec![format!("lambda_{}", s.index)];
            rec.extend(s.values.iter().map(|v| format!("{v:.5}")));
            rec.push(s.order.map(|o| format!("{o:.2}")).unwrap_or_default());
            rec.push(s.extrapolation.map(|e| format!("{:.5}", e.lambda)).unwrap_or_default());
            w.write_record(&rec).map_err(csv_err(path))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Relative errors against the extrapolated values, one row per `N`.
    pub fn write_errors_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
        let mut header = vec!["N".to_string(), "h".to_string()];
        header.extend(self.series.iter().map(|s| format!("e_lambda_{}", s.index)));
        w.write_record(&header).map_err(csv_err(path))?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = vec![row.n.to_string(), format!("{:e}", row.h)];
            rec.extend(self.series.iter().map(|s| {
                s.relative_errors.as_ref().map(|e| format!("{:e}", e[i])).unwrap_or_default()
            }));
            w.write_record(&rec).map_err(csv_err(path))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))
}

/// Runs the study and writes `table.csv`, `errors.csv` and `report.json`
/// into the output directory.
pub fn run_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let report = convergence_study(cfg)?;
    prepare_out(cfg)?;
    report.write_table_csv(&cfg.out.join("table.csv"))?;
    report.write_errors_csv(&cfg.out.join("errors.csv"))?;
    report.write_json(&cfg.out.join("report.json"))?;
    Ok(report)
}

/// Adaptive run from the structured mesh with `N = adaptive.initial_n`;
/// writes `adapt.csv`, `adapt.json` and the final mesh.
pub fn run_adapt(cfg: &ExperimentConfig) -> Result<AdaptReport> {
    cfg.validate_adaptive()?;
    let a = &cfg.adaptive;
    let acfg = AdaptConfig {
        target: a.target,
        fraction: a.fraction,
        max_iterations: a.max_iterations,
        dof_cap: a.dof_cap,
        reference: a.reference,
        mu: cfg.mu,
        eig: crate::speig::EigConfig {
            nev: cfg.nev.max(a.target + 1),
            ..cfg.eig_config()
        },
        ..AdaptConfig::default()
    };
    let mesh = cfg.mesh(a.initial_n)?;
    let (report, last) = afem_loop(mesh, cfg.descriptor()?, cfg.bc_mode(), &acfg)?;
    prepare_out(cfg)?;
    report.write_csv(&cfg.out.join("adapt.csv"))?;
    report.write_json(&cfg.out.join("adapt.json"))?;
    crate::mesh::write_mesh(&last, &cfg.out.join("adapt_final_mesh.txt"))?;
    Ok(report)
}
