//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits with a failure status if any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use nedstokes::adapt::{afem_loop, AdaptConfig, AdaptReport};
use nedstokes::assembly::{assemble_forms, build_pencil, Pencil};
use nedstokes::estimator::compute_indicators;
use nedstokes::harness::{convergence_study, BoundaryChoice, ConvergenceReport, Domain, ExperimentConfig};
use nedstokes::mesh::{build_lshape_mesh, build_square_mesh, build_square_mesh_with, patches, DiagonalPattern, Mesh, SquareDomain};
use nedstokes::postproc::{theta_postprocess, velocity_field};
use nedstokes::refelems::{ned_basis, quadrature, Family, MAX_DEGREE};
use nedstokes::spaces::*;
use nedstokes::speig::{dense_pencil_eigenvalues, EigConfig};

const NS: [usize; 4] = [20, 30, 40, 50];

/// Published eigenvalues on the square, one row per eigenvalue, one column per N.
const TABLE1: [[f64; 4]; 5] = [
    [13.07172, 13.07948, 13.08235, 13.08371],
    [22.92407, 22.98365, 23.00442, 23.01402],
    [22.92407, 22.98365, 23.00442, 23.01402],
    [31.92158, 31.99380, 32.01930, 32.03116],
    [38.18216, 38.37946, 38.44657, 38.47729],
];
const SQUARE_LIMITS: [f64; 5] = [13.08617, 23.03109, 23.03109, 32.05239, 38.53136];
const MIXED_LIMITS: [f64; 5] = [2.4674, 6.2799, 15.2090, 22.2065, 26.9479];
const CIRCLE_LAMBDA1: f64 = 14.682;
const LSHAPE_LAMBDA1: f64 = 32.13183;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn study(domain: Domain, scheme: (u8, usize), ns: &[usize], nev: usize, bc: BoundaryChoice) -> ConvergenceReport {
    let cfg = ExperimentConfig {
        domain,
        scheme,
        n: ns.to_vec(),
        nev,
        bc,
        diagonals: DiagonalPattern::Alternating,
        ..Default::default()
    };
    convergence_study(&cfg).expect("study failed")
}

fn fmt(v: &[f64], prec: usize) -> String {
    v.iter().map(|x| format!("{x:.prec$}")).collect::<Vec<_>>().join(", ")
}

fn limits(r: &ConvergenceReport) -> Vec<f64> {
    r.series.iter().map(|s| s.extrapolation.map_or(f64::NAN, |e| e.lambda)).collect()
}

fn orders(r: &ConvergenceReport) -> Vec<f64> {
    r.series.iter().map(|s| s.order.unwrap_or(f64::NAN)).collect()
}

fn criterion1(r: &ConvergenceReport) -> Outcome {
    let mut worst_row = 0.0f64;
    for (j, row) in r.rows.iter().enumerate() {
        for i in 0..5 {
            worst_row = worst_row.max(rel(row.eigenvalues[i], TABLE1[i][j]));
        }
    }
    let lim = limits(r);
    let worst_lim = lim.iter().zip(&SQUARE_LIMITS).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let ord = orders(r);
    let pass = worst_row <= 5e-3 && worst_lim <= 5e-4 && ord.iter().all(|o| (1.7..=2.3).contains(o));
    Outcome {
        pass,
        detail: format!(
            "max rel dev from table {worst_row:.2e} (tol 5e-3); extrapolated [{}] max rel dev {worst_lim:.2e} (tol 5e-4); orders [{}] (need [1.7, 2.3])",
            fmt(&lim, 5),
            fmt(&ord, 2)
        ),
    }
}

fn criterion2(r: &ConvergenceReport) -> Outcome {
    let lim = limits(r);
    let worst = lim.iter().zip(&SQUARE_LIMITS).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let ord = orders(r);
    Outcome {
        pass: worst <= 1e-5 && ord.iter().all(|o| (3.6..=4.4).contains(o)),
        detail: format!(
            "orders [{}] (need [3.6, 4.4]); extrapolated [{}] max rel dev {worst:.2e} (tol 1e-5)",
            fmt(&ord, 2),
            fmt(&lim, 5)
        ),
    }
}

fn criterion3(reports: &[&ConvergenceReport]) -> Outcome {
    let mut worst = 0.0f64;
    let mut meshes = 0;
    for r in reports {
        for row in &r.rows {
            worst = worst.max(rel(row.eigenvalues[2], row.eigenvalues[1]));
            meshes += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max |λ2 − λ3|/λ2 over {meshes} square meshes = {worst:.2e} (tol 1e-6)"),
    }
}

fn criterion4(r: &ConvergenceReport) -> Outcome {
    let s = &r.series[0];
    let lim = s.extrapolation.map_or(f64::NAN, |e| e.lambda);
    let order = s.order.unwrap_or(f64::NAN);
    Outcome {
        pass: (1.7..=2.3).contains(&order) && rel(lim, CIRCLE_LAMBDA1) <= 2e-3,
        detail: format!(
            "N = {:?}: λ1 = [{}], order {order:.2} (need [1.7, 2.3]), extrapolated {lim:.5} rel dev {:.2e} (tol 2e-3)",
            r.rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            fmt(&s.values, 5),
            rel(lim, CIRCLE_LAMBDA1)
        ),
    }
}

fn criterion5(reports: &[(&str, ConvergenceReport)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in reports {
        let lim = limits(r);
        let first = rel(lim[0], 2.46740);
        let worst = lim.iter().zip(&MIXED_LIMITS).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
        pass &= first <= 5e-4 && worst <= 2e-3;
        parts.push(format!(
            "{name}: extrapolated [{}], λ1 rel dev {first:.2e} (tol 5e-4), max rel dev {worst:.2e} (tol 2e-3)",
            fmt(&lim, 5)
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn lshape_run(fraction: f64) -> AdaptReport {
    let cfg = AdaptConfig {
        fraction,
        dof_cap: 50_000,
        reference: Some(LSHAPE_LAMBDA1),
        ..Default::default()
    };
    afem_loop(build_lshape_mesh(4), SpaceDescriptor::new(1, 0).unwrap(), BcMode::AllDirichlet, &cfg)
        .expect("adaptive run failed")
        .0
}

fn criterion6(adaptive: &AdaptReport, uniform: &AdaptReport, seconds: f64) -> Outcome {
    let a = adaptive.decay_order.unwrap_or(f64::NAN);
    let u = uniform.decay_order.unwrap_or(f64::NAN);
    let last = adaptive.iterations.last().unwrap();
    Outcome {
        pass: (-1.25..=-0.85).contains(&a) && u.abs() <= 0.75 && seconds <= 900.0,
        detail: format!(
            "adaptive slope {a:.3} over {} iterations up to {} dof, final λ1 {:.5} (need [-1.25, -0.85]); uniform slope {u:.3} (need |s| ≤ 0.75); {seconds:.1} s (limit 900 s)",
            adaptive.iterations.len(),
            last.dof,
            last.lambda
        ),
    }
}

fn criterion7(adaptive: &AdaptReport) -> Outcome {
    let eff: Vec<f64> = adaptive
        .iterations
        .iter()
        .filter(|it| it.iteration >= 3)
        .map(|it| it.effectivity.unwrap_or(f64::NAN))
        .collect();
    let lo = eff.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eff.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: !eff.is_empty() && lo >= 5e-3 && hi <= 1.0 && hi / lo <= 25.0,
        detail: format!(
            "effectivity over iterations 3..{}: min {lo:.3e}, max {hi:.3e} (need [5e-3, 1]), ratio {:.2} (need ≤ 25)",
            adaptive.iterations.len() - 1,
            hi / lo
        ),
    }
}

// Property suite.

fn pencil(mesh: &Mesh, l: u8, k: usize, mu: f64) -> Pencil {
    let dm = build_dofmap(mesh, SpaceDescriptor::new(l, k).unwrap(), BcMode::AllDirichlet).unwrap();
    build_pencil(&assemble_forms(mesh, &dm, mu).unwrap(), &dm).unwrap()
}

fn commuting_diagram() -> f64 {
    let smooth = |x: [f64; 2]| [[x[1].sin(), x[0] * x[0]], [x[0] * x[1], x[0].cos()]];
    let smooth_curl = |x: [f64; 2]| [2.0 * x[0] - x[1].cos(), -x[0].sin() - x[0]];
    let mesh = build_square_mesh(4, SquareDomain::BiUnit);
    let rule = quadrature(6).unwrap();
    let mut err = 0.0f64;
    for l in 1..=2 {
        for k in 0..=2 {
            let dm = build_dofmap(&mesh, SpaceDescriptor::new(l, k).unwrap(), BcMode::AllDirichlet).unwrap();
            let pi = interpolate_ned(&mesh, &dm, smooth);
            let rh = l2_project_velocity(&mesh, k, smooth_curl).unwrap();
            for t in 0..mesh.n_triangles() {
                let map = ElementMap::new(&mesh, t);
                for q in 0..rule.len() {
                    let xh = rule.point(q);
                    let c = dm.eval_stress(&pi, &map, t, xh).curl;
                    let p = dm.eval_velocity(&rh, t, xh);
                    err = err.max((c[0] - p[0]).abs()).max((c[1] - p[1]).abs());
                }
            }
        }
    }
    err
}

fn unisolvence() -> f64 {
    [(Family::Ned1, 0), (Family::Ned1, 1), (Family::Ned1, 2), (Family::Ned2, 1), (Family::Ned2, 2), (Family::Ned2, 3)]
        .iter()
        .map(|&(f, k)| {
            let b = ned_basis(f, k).unwrap();
            (b.dof_matrix() - DMatrix::identity(b.dim, b.dim)).abs().max()
        })
        .fold(0.0, f64::max)
}

/// Finite eigenvalues from the general eigenvalues of `K⁻¹N`.
fn brute_force(p: &Pencil) -> Vec<f64> {
    let ev = (p.k.to_dense().try_inverse().unwrap() * p.n.to_dense()).complex_eigenvalues();
    let scale = ev.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let mut out: Vec<f64> = ev.iter().filter(|z| z.norm() > 1e-10 * scale).map(|z| 1.0 / z.re).collect();
    out.sort_by(f64::total_cmp);
    out
}

fn dense_oracle() -> f64 {
    let mesh = build_square_mesh(1, SquareDomain::Unit);
    let mut worst = 0.0f64;
    for (l, k) in [(1, 0), (1, 1), (2, 0), (2, 1)] {
        let p = pencil(&mesh, l, k, 1.0);
        let sol = nedstokes::speig::solve_eig(&p, &EigConfig::with_nev(p.layout.n_u)).unwrap();
        let oracle = brute_force(&p);
        if sol.len() != oracle.len() {
            return f64::INFINITY;
        }
        for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
            worst = worst.max(rel(*a, *b));
        }
    }
    worst
}

fn k_symmetry() -> f64 {
    let mesh = build_square_mesh(4, SquareDomain::BiUnit);
    let mut worst = 0.0f64;
    for l in 1..=2 {
        for k in 0..=2 {
            let p = pencil(&mesh, l, k, 1.0);
            worst = worst.max(p.k.asymmetry() / p.k.max_abs());
        }
    }
    worst
}

fn mu_scaling() -> f64 {
    let mesh = build_square_mesh(2, SquareDomain::BiUnit);
    let base = dense_pencil_eigenvalues(&pencil(&mesh, 1, 0, 1.0)).unwrap();
    let scaled = dense_pencil_eigenvalues(&pencil(&mesh, 1, 0, 3.0)).unwrap();
    base.iter().zip(&scaled).map(|(a, b)| rel(3.0 * a, *b)).fold(0.0, f64::max)
}

fn renumbering() -> f64 {
    let mesh = build_square_mesh(3, SquareDomain::BiUnit);
    let mut perm: Vec<usize> = (0..mesh.n_edges()).collect();
    perm.reverse();
    perm.swap(0, 5);
    let other = mesh.with_edge_permutation(&perm).unwrap();
    let mut worst = 0.0f64;
    for (l, k) in [(1, 0), (1, 1), (2, 0)] {
        let a = dense_pencil_eigenvalues(&pencil(&mesh, l, k, 1.0)).unwrap();
        let b = dense_pencil_eigenvalues(&pencil(&other, l, k, 1.0)).unwrap();
        worst = worst.max(a.iter().zip(&b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max));
    }
    worst
}

fn theta_constants() -> f64 {
    let mesh = build_square_mesh_with(5, SquareDomain::BiUnit, DiagonalPattern::Alternating);
    let dm = build_dofmap(&mesh, SpaceDescriptor::new(1, 0).unwrap(), BcMode::AllDirichlet).unwrap();
    let u = l2_project_velocity(&mesh, 0, |_| [1.5, -2.0]).unwrap();
    let th = theta_postprocess(&mesh, &velocity_field(&dm, &u).unwrap(), &patches(&mesh)).unwrap();
    th.values.iter().map(|v| (v[0] - 1.5).abs().max((v[1] + 2.0).abs())).fold(0.0, f64::max)
}

fn zero_residual() -> f64 {
    let mesh = build_square_mesh_with(4, SquareDomain::BiUnit, DiagonalPattern::Alternating);
    let dm = build_dofmap(&mesh, SpaceDescriptor::new(2, 0).unwrap(), BcMode::AllDirichlet).unwrap();
    let sigma = interpolate_ned(&mesh, &dm, |x| {
        let s = 1.0 + x[0] + 2.0 * x[1];
        [[0.0, s], [-s, 0.0]]
    });
    let u = l2_project_velocity(&mesh, 0, |_| [0.7, -1.3]).unwrap();
    let th = theta_postprocess(&mesh, &velocity_field(&dm, &u).unwrap(), &patches(&mesh)).unwrap();
    compute_indicators(&mesh, &dm, &sigma, &u, &th, 1.0).unwrap().eta
}

fn quadrature_exactness() -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let mut worst = 0.0f64;
    for d in 0..=MAX_DEGREE {
        let q = quadrature(d).unwrap();
        for a in 0..=d as u32 {
            for b in 0..=(d as u32 - a) {
                let v = q.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                worst = worst.max((v - fact(a) * fact(b) / fact(a + b + 2)).abs());
            }
        }
    }
    worst
}

fn criterion8() -> Outcome {
    let checks: [(&str, f64, f64); 9] = [
        ("commuting diagram", commuting_diagram(), 1e-10),
        ("unisolvence", unisolvence(), 1e-12),
        ("dense oracle", dense_oracle(), 1e-9),
        ("K symmetry", k_symmetry(), 1e-12),
        ("mu scaling", mu_scaling(), 1e-9),
        ("edge renumbering", renumbering(), 1e-9),
        ("theta constants", theta_constants(), 1e-13),
        ("eta on zero-residual input", zero_residual(), 1e-12),
        ("quadrature exactness", quadrature_exactness(), 1e-13),
    ];
    let pass = checks.iter().all(|(_, v, tol)| *v <= *tol);
    let detail = checks
        .iter()
        .map(|(name, v, tol)| format!("{name} {v:.1e} (tol {tol:.0e})"))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn report(id: usize, title: &str, o: &Outcome) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id} ({title}): {}", o.detail);
}

fn main() {
    let start = Instant::now();
    let mut all = true;
    let mut emit = |id: usize, title: &str, o: Outcome| {
        report(id, title, &o);
        all &= o.pass;
    };

    let t1 = study(Domain::BiUnitSquare, (1, 0), &NS, 5, BoundaryChoice::Dirichlet);
    emit(1, "square spectrum, Ned1 k=0", criterion1(&t1));
    let t2 = study(Domain::BiUnitSquare, (2, 1), &NS, 5, BoundaryChoice::Dirichlet);
    emit(2, "square spectrum, Ned2 k=1", criterion2(&t2));
    emit(3, "double eigenvalue", criterion3(&[&t1, &t2]));
    let circle = study(Domain::Circle, (1, 1), &[10, 20, 30, 40], 1, BoundaryChoice::Dirichlet);
    emit(4, "circle, Ned1 k=1", criterion4(&circle));
    let mixed = [
        ("Ned1 k=0", study(Domain::Square, (1, 0), &NS, 5, BoundaryChoice::Mixed)),
        ("Ned2 k=0", study(Domain::Square, (2, 0), &NS, 5, BoundaryChoice::Mixed)),
    ];
    emit(5, "mixed boundary conditions", criterion5(&mixed));
    let t = Instant::now();
    let adaptive = lshape_run(0.5);
    let adaptive_seconds = t.elapsed().as_secs_f64();
    let uniform = lshape_run(0.0);
    emit(6, "adaptive L-shape", criterion6(&adaptive, &uniform, adaptive_seconds));
    emit(7, "effectivity band", criterion7(&adaptive));
    emit(8, "property suite", criterion8());

    println!("acceptance run took {:.1} s", start.elapsed().as_secs_f64());
    if !all {
        std::process::exit(1);
    }
}
