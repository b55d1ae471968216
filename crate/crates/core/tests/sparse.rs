use nalgebra::DMatrix;
use nedstokes::sparse::{factorize, SparseMatrix, DEFAULT_PIVOT_TOL};
use proptest::prelude::*;

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Plain Gaussian elimination with partial pivoting.
fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs())).unwrap();
        m.swap_rows(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    x
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn saddle_point_system_of_size_200() {
    // [[A, Bᵀ], [B, 0]] with A sparse SPD and B of full row rank.
    let (na, nb) = (140, 60);
    let mut rng = Lcg(7);
    let mut entries = Vec::new();
    for i in 0..na {
        entries.push((i, i, 4.0 + rng.next().abs()));
        for d in [1, 7] {
            if i + d < na {
                let v = 0.5 * rng.next();
                entries.push((i, i + d, v));
                entries.push((i + d, i, v));
            }
        }
    }
    for r in 0..nb {
        for c in [2 * r, 2 * r + 1, (5 * r + 3) % na] {
            let v = rng.next() + if c == 2 * r { 2.0 } else { 0.0 };
            entries.push((na + r, c, v));
            entries.push((c, na + r, v));
        }
    }
    let n = na + nb;
    let a = SparseMatrix::from_triplets(n, n, &entries);
    let x_true: Vec<f64> = (0..n).map(|_| rng.next()).collect();
    let b = a.matvec(&x_true).unwrap();
    let f = factorize(&a, DEFAULT_PIVOT_TOL).unwrap();
    let x = f.solve(&b).unwrap();
    let r: Vec<f64> = a.matvec(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
    let rel = inf_norm(&r) / (a.norm_inf() * inf_norm(&x) + inf_norm(&b));
    assert!(rel <= 1e-10, "relative residual {rel}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn matches_dense_elimination(n in 1usize..50, density in 0.05f64..0.5, seed in 0u64..1000) {
        let mut rng = Lcg(seed);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0 + rng.next().abs();
            for j in 0..n {
                if i != j && rng.next().abs() < density {
                    a[(i, j)] = rng.next();
                }
            }
        }
        // Zero a few diagonals so that off-diagonal pivots are exercised.
        for i in (0..n).step_by(5) {
            a[(i, i)] = 0.0;
        }
        prop_assume!(a.clone().lu().determinant().abs() > 1e-6);
        let b: Vec<f64> = (0..n).map(|_| rng.next()).collect();
        let s = SparseMatrix::from_dense(&a);
        let x = factorize(&s, DEFAULT_PIVOT_TOL).unwrap().solve(&b).unwrap();
        let y = dense_solve(&a, &b);
        let scale = inf_norm(&y).max(1.0);
        for (p, q) in x.iter().zip(&y) {
            prop_assert!((p - q).abs() <= 1e-9 * scale, "{p} vs {q}");
        }
    }
}
