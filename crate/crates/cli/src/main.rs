use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nedstokes::adapt::solve_on_mesh;
use nedstokes::estimator::compute_indicators;
use nedstokes::harness::{run_adapt, run_study, BoundaryChoice, Domain, ExperimentConfig};
use nedstokes::mesh::{patches, write_mesh};
use nedstokes::postproc::{
    export_vtk, pressure_from_stress, theta_postprocess, velocity_field, vorticity_from_stress, VtkField,
};
use nedstokes::{Error, Result};

#[derive(Parser)]
#[command(name = "nedstokes", version, about = "Stokes eigenvalues with tensor Nédélec stress elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the structured meshes and write them as text files.
    Mesh(Common),
    /// Solve the eigenvalue problem on each mesh and print the spectrum.
    Solve(Common),
    /// Convergence study over the N list: tables, fitted orders, extrapolation.
    Study(Common),
    /// Adaptive refinement driven by the a posteriori estimator.
    Adapt(Common),
    /// Write matrices, VTK fields and estimator indicators for one eigenpair.
    Export {
        #[command(flatten)]
        common: Common,
        /// Eigenpair to export (1-based).
        #[arg(long, default_value_t = 1)]
        index: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; other flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Square, BiUnitSquare, Circle or LShape.
    #[arg(long)]
    domain: Option<String>,
    /// Stress family and velocity degree, e.g. `1,0`.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    nev: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mu: Option<f64>,
    /// dirichlet or mixed.
    #[arg(long)]
    bc: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.domain {
            cfg.domain = d.parse::<Domain>()?;
        }
        if let Some(s) = &self.scheme {
            cfg.scheme = parse_scheme(s)?;
        }
        if let Some(n) = &self.n {
            cfg.n = n.clone();
        }
        if let Some(nev) = self.nev {
            cfg.nev = nev;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mu) = self.mu {
            cfg.mu = mu;
        }
        if let Some(bc) = &self.bc {
            cfg.bc = bc.parse::<BoundaryChoice>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_scheme(s: &str) -> Result<(u8, usize)> {
    let bad = || Error::Config(format!("scheme must look like `l,k`, got {s:?}"));
    let (l, k) = s.split_once(',').ok_or_else(bad)?;
    Ok((l.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
}

fn create_out(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))
}

fn mesh(cfg: &ExperimentConfig) -> Result<()> {
    create_out(cfg)?;
    for &n in &cfg.n {
        let m = cfg.mesh(n)?;
        let path = cfg.out.join(format!("mesh_N{n}.txt"));
        write_mesh(&m, &path)?;
        println!(
            "N={n}: {} triangles, {} vertices, {} edges, h_max {:.4}, min angle {:.2} deg -> {}",
            m.n_triangles(),
            m.n_vertices(),
            m.n_edges(),
            m.h_max(),
            m.min_angle().to_degrees(),
            path.display()
        );
    }
    Ok(())
}

fn solve(cfg: &ExperimentConfig) -> Result<()> {
    let desc = cfg.descriptor()?;
    for &n in &cfg.n {
        let m = cfg.mesh(n)?;
        let d = solve_on_mesh(&m, desc, cfg.bc_mode(), cfg.mu, &cfg.eig_config())?;
        println!("{} on {:?}, N={n} ({} unknowns)", desc.label(), cfg.domain, d.pencil.dim());
        for (i, (l, r)) in d.solution.eigenvalues.iter().zip(&d.solution.residuals).enumerate() {
            println!("  lambda_{} = {l:.8}  (residual {r:.2e})", i + 1);
        }
    }
    Ok(())
}

fn study(cfg: &ExperimentConfig) -> Result<()> {
    let report = run_study(cfg)?;
    println!("{} on {:?}; {}", report.scheme, cfg.domain, report.h_definition);
    let header: Vec<String> = report.rows.iter().map(|r| format!("{:>12}", format!("N={}", r.n))).collect();
    println!("{:>10}{}{:>8}{:>14}", "", header.join(""), "order", "lambda_extr");
    for s in &report.series {
        let vals: String = s.values.iter().map(|v| format!("{v:>12.5}")).collect();
        let order = s.order.map(|o| format!("{o:>8.2}")).unwrap_or_else(|| format!("{:>8}", "-"));
        let extr = s.extrapolation.map(|e| format!("{:>14.5}", e.lambda)).unwrap_or_else(|| format!("{:>14}", "-"));
        println!("{:>10}{vals}{order}{extr}", format!("lambda_{}", s.index));
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn adapt(cfg: &ExperimentConfig) -> Result<()> {
    let report = run_adapt(cfg)?;
    println!("{:>4} {:>9} {:>14} {:>12} {:>12} {:>7}", "it", "dof", "lambda", "eta^2", "effectivity", "marked");
    for it in &report.iterations {
        let eff = it.effectivity.map(|e| format!("{e:>12.4e}")).unwrap_or_else(|| format!("{:>12}", "-"));
        println!(
            "{:>4} {:>9} {:>14.8} {:>12.4e} {eff} {:>7}",
            it.iteration, it.dof, it.lambda, it.eta_sq, it.marked
        );
    }
    if let Some(s) = report.decay_order {
        println!("error decay O(dof^{s:.2})");
    }
    println!("wrote {}", cfg.out.display());
    Ok(())
}

fn export(cfg: &ExperimentConfig, index: usize) -> Result<()> {
    let n = *cfg.n.first().ok_or_else(|| Error::Config("export needs one N".into()))?;
    if index == 0 || index > cfg.nev {
        return Err(Error::Config(format!("index must lie in 1..={}", cfg.nev)));
    }
    let desc = cfg.descriptor()?;
    let m = cfg.mesh(n)?;
    let d = solve_on_mesh(&m, desc, cfg.bc_mode(), cfg.mu, &cfg.eig_config())?;
    let i = index - 1;
    if i >= d.solution.len() {
        return Err(Error::InvalidInput(format!("only {} eigenpairs were computed", d.solution.len())));
    }
    create_out(cfg)?;
    d.pencil.export(&cfg.out)?;
    write_mesh(&m, &cfg.out.join("mesh.txt"))?;
    let (sigma, u) = (&d.solution.sigma[i], &d.solution.u[i]);
    let velocity = velocity_field(&d.dofmap, u)?;
    let pressure = pressure_from_stress(&m, &d.dofmap, sigma)?;
    let vorticity = vorticity_from_stress(&m, &d.dofmap, sigma, &pressure, cfg.mu)?;
    let theta = theta_postprocess(&m, &velocity, &patches(&m))?;
    let vtk = cfg.out.join(format!("eigenpair_{index}.vtk"));
    export_vtk(
        &m,
        &[
            VtkField::cells("velocity", &velocity),
            VtkField::cells("pressure", &pressure),
            VtkField::cells("vorticity", &vorticity),
            VtkField::points("velocity_postprocessed", &theta),
        ],
        &vtk,
    )?;
    println!("lambda_{index} = {:.8}; wrote {}", d.solution.eigenvalues[i], vtk.display());
    if desc.k == 0 {
        let ind = compute_indicators(&m, &d.dofmap, sigma, u, &theta, cfg.mu)?;
        let path = cfg.out.join(format!("indicators_{index}.csv"));
        ind.write_csv(&path)?;
        println!("eta^2 = {:.6e}; wrote {}", ind.eta_sq_total(), path.display());
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" | "input" | "parse" | "unsupported" => 2,
        "io" | "format" => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mesh(c) => c.resolve().and_then(|cfg| mesh(&cfg)),
        Command::Solve(c) => c.resolve().and_then(|cfg| solve(&cfg)),
        Command::Study(c) => c.resolve().and_then(|cfg| study(&cfg)),
        Command::Adapt(c) => c.resolve().and_then(|cfg| adapt(&cfg)),
        Command::Export { common, index } => common.resolve().and_then(|cfg| export(&cfg, *index)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!(
                "{}",
                serde_json::json!({ "status": "error", "category": e.category(), "message": e.to_string() })
            );
            ExitCode::from(exit_code(&e))
        }
    }
}
