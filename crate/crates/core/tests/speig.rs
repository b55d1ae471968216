use nedstokes::assembly::*;
use nedstokes::mesh::{build_square_mesh, build_square_mesh_with, DiagonalPattern, Mesh, SquareDomain};
use nedstokes::spaces::*;
use nedstokes::speig::*;
use nedstokes::Error;

fn pencil_for(mesh: &Mesh, l: u8, k: usize) -> Pencil {
    let dm = build_dofmap(mesh, SpaceDescriptor::new(l, k).unwrap(), BcMode::AllDirichlet).unwrap();
    let forms = assemble_forms(mesh, &dm, 1.0).unwrap();
    build_pencil(&forms, &dm).unwrap()
}

fn square(n: usize) -> Mesh {
    build_square_mesh_with(n, SquareDomain::BiUnit, DiagonalPattern::Alternating)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Finite eigenvalues of `K x = λ N x` from the general eigenvalues of `K⁻¹N`.
fn brute_force(p: &Pencil) -> Vec<f64> {
    let t = p.k.to_dense().try_inverse().unwrap() * p.n.to_dense();
    let ev = t.complex_eigenvalues();
    let scale = ev.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let mut out: Vec<f64> = ev
        .iter()
        .filter(|z| z.norm() > 1e-10 * scale)
        .map(|z| {
            assert!(z.im.abs() < 1e-10 * scale);
            1.0 / z.re
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

#[test]
fn two_triangle_pencil_matches_brute_force() {
    let mesh = build_square_mesh(1, SquareDomain::Unit);
    for (l, k) in [(1, 0), (1, 1), (2, 0), (2, 1)] {
        let p = pencil_for(&mesh, l, k);
        let oracle = brute_force(&p);
        let reduced = dense_pencil_eigenvalues(&p).unwrap();
        assert_eq!(reduced.len(), oracle.len());
        for (a, b) in reduced.iter().zip(&oracle) {
            assert!(rel(*a, *b) < 1e-9);
        }
        let sol = solve_eig(&p, &EigConfig::with_nev(oracle.len())).unwrap();
        assert_eq!(sol.len(), oracle.len(), "l={l} k={k}");
        for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
            assert!(rel(*a, *b) < 1e-9, "l={l} k={k}: {a} vs {b}");
        }
    }
}

#[test]
fn krylov_iteration_matches_dense_oracle() {
    // 576 velocity unknowns, above the dense cut-over.
    let mesh = square(12);
    let p = pencil_for(&mesh, 1, 0);
    assert!(p.layout.n_u > 400);
    let oracle = dense_pencil_eigenvalues(&p).unwrap();
    let sol = solve_eig(&p, &EigConfig::with_nev(8)).unwrap();
    assert_eq!(sol.len(), 8);
    for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
        assert!(rel(*a, *b) < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn reported_pairs_are_normalised_and_accurate() {
    let mesh = square(10);
    for (l, k) in [(1, 0), (2, 1)] {
        let p = pencil_for(&mesh, l, k);
        let sol = solve_eig(&p, &EigConfig::default()).unwrap();
        let knorm = p.k.norm_inf();
        assert_eq!(sol.len(), 5);
        assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..sol.len() {
            assert!(sol.eigenvalues[i] > 0.0);
            assert!(sol.residuals[i] <= 1e-8 * knorm, "{}", sol.residuals[i]);
            let mu = p.m.matvec(&sol.u[i]).unwrap();
            let nrm: f64 = sol.u[i].iter().zip(&mu).map(|(a, b)| a * b).sum();
            assert!((nrm - 1.0).abs() < 1e-10);
            assert!(sol.normalized[i]);
            assert!(sol.multiplier[i].is_some());
        }
    }
}

#[test]
fn shift_does_not_change_the_eigenvalues() {
    let mesh = square(12);
    let p = pencil_for(&mesh, 1, 0);
    let a = solve_eig(&p, &EigConfig::with_nev(3)).unwrap();
    let b = solve_eig(&p, &EigConfig { shift: 5.0, ..EigConfig::with_nev(3) }).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!(rel(*x, *y) < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn square_has_a_double_second_eigenvalue() {
    for n in [8, 14] {
        let sol = solve_eig(&pencil_for(&square(n), 1, 0), &EigConfig::with_nev(3)).unwrap();
        assert!(rel(sol.eigenvalues[2], sol.eigenvalues[1]) < 1e-6);
    }
}

#[test]
fn first_eigenvalue_converges_monotonically() {
    let limit = 13.08617;
    for (l, k) in [(1, 0), (2, 0)] {
        let errs: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&n| {
                let sol = solve_eig(&pencil_for(&square(n), l, k), &EigConfig::with_nev(1)).unwrap();
                (sol.eigenvalues[0] - limit).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "l={l}: {errs:?}");
    }
}

#[test]
fn perturbed_vectors_have_larger_residuals() {
    let p = pencil_for(&square(6), 1, 0);
    let mut sol = solve_eig(&p, &EigConfig::with_nev(1)).unwrap();
    let good = sol.residuals[0];
    let scale = sol.vectors[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for (i, v) in sol.vectors[0].iter_mut().enumerate() {
        *v += 1e-3 * scale * (((i * 7919) % 200) as f64 / 100.0 - 1.0);
    }
    let bad = eigen_residuals(&p, &sol).unwrap()[0];
    assert!(bad >= 10.0 * good.max(1e-16), "{good} -> {bad}");

    sol.vectors[0].iter_mut().for_each(|v| *v = 0.0);
    assert!(matches!(eigen_residuals(&p, &sol), Err(Error::InvalidInput(_))));
    sol.vectors[0].pop();
    assert!(eigen_residuals(&p, &sol).is_err());
}

#[test]
fn invalid_configurations_are_rejected() {
    let p = pencil_for(&square(2), 1, 0);
    assert!(matches!(solve_eig(&p, &EigConfig::with_nev(0)), Err(Error::Config(_))));
    let cramped = EigConfig {
        krylov_dim: Some(10),
        ..EigConfig::with_nev(5)
    };
    assert!(matches!(solve_eig(&p, &cramped), Err(Error::Config(_))));
}

#[test]
fn shifting_onto_an_eigenvalue_is_reported() {
    let p = pencil_for(&build_square_mesh(1, SquareDomain::Unit), 1, 0);
    let lambda = dense_pencil_eigenvalues(&p).unwrap()[0];
    let r = solve_eig(&p, &EigConfig { shift: lambda, ..EigConfig::with_nev(1) });
    assert!(matches!(r, Err(Error::ShiftAtEigenvalue { .. })), "{r:?}");
}

#[test]
fn solution_is_reproducible() {
    let p = pencil_for(&square(16), 1, 0);
    let a = solve_eig(&p, &EigConfig::default()).unwrap();
    let b = solve_eig(&p, &EigConfig::default()).unwrap();
    assert_eq!(a.eigenvalues, b.eigenvalues);
    assert_eq!(a.vectors, b.vectors);
}
