//! Lowest eigenpairs of `K x = λ N x` by shift-invert Krylov iteration.
//!
//! Only the velocity block of `N` is non-zero, so the shift-inverted operator
//! acts on velocities alone:
//!
//! ```text
//! S f = [ (K − θN)⁻¹ (0, −M f, 0) ]_u ,   S u = ν u  with  ν = 1 / (λ − θ).
//! ```
//!
//! `M S` is symmetric, so `S` is self-adjoint in the `M` inner product. The
//! iteration keeps an `M`-orthonormal basis built by Krylov expansion, extracts
//! Ritz pairs by Rayleigh–Ritz, and restarts by keeping the best Ritz vectors.
//! Once the requested pairs have converged, a further search in their
//! `M`-orthogonal complement makes sure no copy of a multiple eigenvalue was
//! missed.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::assembly::Pencil;
use crate::error::{Error, Result};
use crate::sparse::{factorize, Factorization, SparseMatrix, DEFAULT_PIVOT_TOL};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigConfig {
    pub nev: usize,
    pub shift: f64,
    /// Basis size; `None` selects `max(40, 4 nev)`.
    pub krylov_dim: Option<usize>,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigConfig {
    fn default() -> Self {
        EigConfig {
            nev: 5,
            shift: 0.0,
            krylov_dim: None,
            tol: 1e-10,
            max_restarts: 50,
            seed: 20_240_601,
        }
    }
}

impl EigConfig {
    pub fn with_nev(nev: usize) -> Self {
        EigConfig {
            nev,
            ..Default::default()
        }
    }

    pub fn krylov(&self) -> usize {
        self.krylov_dim.unwrap_or((4 * self.nev).max(40))
    }

    fn validate(&self) -> Result<()> {
        if self.nev == 0 {
            return Err(Error::Config("nev must be at least 1".into()));
        }
        if self.krylov() <= self.nev + 5 {
            return Err(Error::Config(format!(
                "Krylov dimension {} must exceed nev + 5 = {}",
                self.krylov(),
                self.nev + 5
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSolution {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Full stress coefficients (eliminated unknowns are zero).
    pub sigma: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub multiplier: Vec<Option<f64>>,
    /// Pencil-sized eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    /// `‖K x − λ N x‖₂ / ‖x‖₂`.
    pub residuals: Vec<f64>,
    /// Whether `‖u‖₀ = 1` was imposed (always true for reported pairs).
    pub normalized: Vec<bool>,
    pub shift: f64,
    pub restarts: usize,
}

impl SpectralSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Deterministic generator for start vectors.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next()).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct ShiftInvert<'a> {
    pencil: &'a Pencil,
    lu: Factorization,
}

impl ShiftInvert<'_> {
    fn full_solve(&self, f: &[f64]) -> Vec<f64> {
        let range = self.pencil.layout.velocity_range();
        let mf = self.pencil.m.matvec(f).expect("velocity length");
        let mut rhs = vec![0.0; self.pencil.dim()];
        for (slot, v) in rhs[range].iter_mut().zip(mf) {
            *slot = -v;
        }
        self.lu.solve_in_place(&mut rhs).expect("pencil length");
        rhs
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.full_solve(f)[self.pencil.layout.velocity_range()].to_vec()
    }
}

/// `M`-orthonormal basis together with `M V` and `S V`.
struct Basis {
    v: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    sv: Vec<Vec<f64>>,
}

/// Removes the components along `locked` and `basis` (two passes of
/// classical Gram–Schmidt) and normalises. Returns `None` if nothing is left.
fn orthonormalize(
    m: &SparseMatrix,
    w: &mut Vec<f64>,
    locked: &[(Vec<f64>, Vec<f64>)],
    v: &[Vec<f64>],
    mv: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let before = dot(w, &m.matvec(w).unwrap()).max(0.0).sqrt();
    for _ in 0..2 {
        for (q, mq) in locked {
            let c = dot(mq, w);
            axpy(w, -c, q);
        }
        let coeffs: Vec<f64> = mv.iter().map(|mvi| dot(mvi, w)).collect();
        for (vi, c) in v.iter().zip(coeffs) {
            axpy(w, -c, vi);
        }
    }
    let mw = m.matvec(w).unwrap();
    let nrm = dot(w, &mw).max(0.0).sqrt();
    if !(nrm > 1e-10 * before) || nrm == 0.0 {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= nrm);
    Some(mw.into_iter().map(|x| x / nrm).collect())
}

struct RitzPair {
    nu: f64,
    /// Velocity vector, `M`-normalised.
    y: Vec<f64>,
    residual: f64,
}

fn ritz(basis: &Basis) -> (Vec<f64>, DMatrix<f64>) {
    let k = basis.v.len();
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            h[(i, j)] = dot(&basis.mv[i], &basis.sv[j]);
        }
    }
    let sym = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
}

fn combine(cols: &[Vec<f64>], s: nalgebra::DVectorView<f64>) -> Vec<f64> {
    let mut out = vec![0.0; cols[0].len()];
    for (c, &w) in cols.iter().zip(s.iter()) {
        axpy(&mut out, w, c);
    }
    out
}

/// Finds the `want` Ritz pairs of largest `|ν|` in the complement of `locked`.
fn krylov_search(
    op: &ShiftInvert,
    locked: &[(Vec<f64>, Vec<f64>)],
    want: usize,
    cfg: &EigConfig,
    rng: &mut Lcg,
    restarts_used: &mut usize,
) -> Result<Vec<RitzPair>> {
    let m = &op.pencil.m;
    let n = m.nrows();
    let room = n.saturating_sub(locked.len());
    let kdim = cfg.krylov().min(room);
    let keep = (want + (kdim - want) / 2).min(kdim.saturating_sub(1)).max(want.min(kdim));
    let mut basis = Basis {
        v: Vec::new(),
        mv: Vec::new(),
        sv: Vec::new(),
    };
    let mut next = rng.vector(n);
    for restart in 0..=cfg.max_restarts {
        while basis.v.len() < kdim {
            let mut w = std::mem::take(&mut next);
            let mw = match orthonormalize(m, &mut w, locked, &basis.v, &basis.mv) {
                Some(mw) => mw,
                None => {
                    // Invariant subspace reached: continue with a fresh direction.
                    let mut fresh = rng.vector(n);
                    match orthonormalize(m, &mut fresh, locked, &basis.v, &basis.mv) {
                        Some(mw) => {
                            w = fresh;
                            mw
                        }
                        None => break,
                    }
                }
            };
            let sw = op.apply(&w);
            next = sw.clone();
            basis.v.push(w);
            basis.mv.push(mw);
            basis.sv.push(sw);
        }
        let (vals, vecs) = ritz(&basis);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
        let mut pairs = Vec::new();
        for &i in order.iter().take(want) {
            let s = vecs.column(i);
            let y = combine(&basis.v, s);
            let sy = combine(&basis.sv, s);
            let mut r = sy;
            axpy(&mut r, -vals[i], &y);
            let mr = m.matvec(&r).unwrap();
            let res = dot(&r, &mr).max(0.0).sqrt();
            pairs.push(RitzPair {
                nu: vals[i],
                y,
                residual: res,
            });
        }
        let converged = pairs
            .iter()
            .filter(|p| p.residual <= cfg.tol * p.nu.abs().max(1e-300) || p.residual <= 1e-14 * scale)
            .count();
        let exhausted = basis.v.len() >= room;
        if converged == pairs.len() || exhausted {
            *restarts_used += restart;
            return Ok(pairs);
        }
        if restart == cfg.max_restarts {
            *restarts_used += restart;
            return Err(Error::Unconverged {
                restarts: restart,
                converged,
                requested: want,
            });
        }
        // Thick restart: keep the best Ritz vectors and continue from the
        // Krylov remainder, the part of the last expansion direction outside
        // the old basis. Every Ritz residual is parallel to it, so the new
        // basis is again a Krylov decomposition.
        if orthonormalize(m, &mut next, locked, &basis.v, &basis.mv).is_none() {
            next = rng.vector(n);
        }
        let mut v = Vec::with_capacity(kdim);
        let mut mv = Vec::with_capacity(kdim);
        let mut sv = Vec::with_capacity(kdim);
        for &i in order.iter().take(keep) {
            let s = vecs.column(i);
            v.push(combine(&basis.v, s));
            mv.push(combine(&basis.mv, s));
            sv.push(combine(&basis.sv, s));
        }
        basis = Basis { v, mv, sv };
    }
    unreachable!("loop returns on its last iteration")
}

/// Dense path for small problems: all of `S` is formed explicitly.
fn dense_search(op: &ShiftInvert) -> Result<Vec<RitzPair>> {
    let m = &op.pencil.m;
    let n = m.nrows();
    let mut s = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = op.apply(&e);
        for i in 0..n {
            s[(i, j)] = col[i];
        }
    }
    let md = m.to_dense();
    let ms = &md * &s;
    let ms = (&ms + ms.transpose()) * 0.5;
    let chol = md
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Assembly("velocity mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Assembly("velocity mass matrix is singular".into()))?;
    let c = &linv * ms * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let z = eig.eigenvectors.column(i);
        let y = linv.transpose() * z;
        out.push(RitzPair {
            nu: eig.eigenvalues[i],
            y: y.as_slice().to_vec(),
            residual: 0.0,
        });
    }
    out.sort_by(|a, b| b.nu.abs().total_cmp(&a.nu.abs()));
    Ok(out)
}

const DENSE_LIMIT: usize = 400;

/// Computes the `nev` eigenvalues of the pencil closest to the shift.
pub fn solve_eig(pencil: &Pencil, cfg: &EigConfig) -> Result<SpectralSolution> {
    cfg.validate()?;
    if cfg.nev > pencil.layout.n_u {
        return Err(Error::Config(format!(
            "nev = {} exceeds the {} velocity unknowns, which bound the number of finite eigenvalues",
            cfg.nev, pencil.layout.n_u
        )));
    }
    let shifted = if cfg.shift == 0.0 {
        pencil.k.clone()
    } else {
        pencil.k.add_scaled(-cfg.shift, &pencil.n)?
    };
    let lu = factorize(&shifted, DEFAULT_PIVOT_TOL).map_err(|source| Error::ShiftAtEigenvalue {
        shift: cfg.shift,
        source,
    })?;
    let op = ShiftInvert { pencil, lu };
    let n_u = pencil.layout.n_u;
    let mut restarts = 0;
    let mut pairs = if n_u <= DENSE_LIMIT.max(cfg.krylov() + 5) {
        dense_search(&op)?
    } else {
        let mut rng = Lcg(cfg.seed);
        let mut found = krylov_search(&op, &[], cfg.nev, cfg, &mut rng, &mut restarts)?;
        // Look for pairs the single-vector iteration may have missed.
        loop {
            let locked: Vec<(Vec<f64>, Vec<f64>)> =
                found.iter().map(|p| (p.y.clone(), pencil.m.matvec(&p.y).unwrap())).collect();
            let extra = krylov_search(&op, &locked, 1, cfg, &mut rng, &mut restarts)?;
            let weakest = found.iter().map(|p| p.nu.abs()).fold(f64::INFINITY, f64::min);
            match extra.into_iter().next() {
                Some(p) if p.nu.abs() > weakest * (1.0 + 1e-9) => {
                    found.push(p);
                    found.sort_by(|a, b| b.nu.abs().total_cmp(&a.nu.abs()));
                    found.truncate(cfg.nev);
                }
                _ => break,
            }
        }
        found
    };
    let nu_max = pairs.iter().fold(0.0f64, |a, p| a.max(p.nu.abs()));
    pairs.retain(|p| p.nu.abs() >= 1e-8 * nu_max);

    let mut results: Vec<(f64, Vec<f64>)> = Vec::new();
    for p in pairs {
        if results.len() == cfg.nev {
            break;
        }
        let lambda = cfg.shift + 1.0 / p.nu;
        let mut x = op.full_solve(&p.y);
        x.iter_mut().for_each(|v| *v /= p.nu);
        let u = &x[pencil.layout.velocity_range()];
        let mu = pencil.m.matvec(u).unwrap();
        let nrm = dot(u, &mu).max(0.0).sqrt();
        if !(nrm > 1e-12 * norm2(&x)) {
            continue;
        }
        // Deterministic sign: the largest velocity coefficient is positive.
        let big = u.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        let scale = big.signum() / nrm;
        x.iter_mut().for_each(|v| *v *= scale);
        results.push((lambda, x));
    }
    results.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut sol = SpectralSolution {
        eigenvalues: Vec::new(),
        sigma: Vec::new(),
        u: Vec::new(),
        multiplier: Vec::new(),
        vectors: Vec::new(),
        residuals: Vec::new(),
        normalized: Vec::new(),
        shift: cfg.shift,
        restarts,
    };
    for (lambda, x) in results {
        let (sigma, u, c) = pencil.layout.split(&x);
        sol.eigenvalues.push(lambda);
        sol.sigma.push(sigma);
        sol.u.push(u);
        sol.multiplier.push(c);
        sol.vectors.push(x);
        sol.normalized.push(true);
    }
    sol.residuals = eigen_residuals(pencil, &sol)?;
    Ok(sol)
}

/// `‖K x − λ N x‖₂ / ‖x‖₂` for every pair, recomputed from the matrices.
pub fn eigen_residuals(pencil: &Pencil, sol: &SpectralSolution) -> Result<Vec<f64>> {
    sol.eigenvalues
        .iter()
        .zip(&sol.vectors)
        .map(|(&lambda, x)| {
            if x.len() != pencil.dim() {
                return Err(Error::InvalidInput(format!(
                    "eigenvector has length {}, pencil has {}",
                    x.len(),
                    pencil.dim()
                )));
            }
            let nx = norm2(x);
            if nx == 0.0 {
                return Err(Error::InvalidInput("zero eigenvector".into()));
            }
            let kx = pencil.k.matvec(x)?;
            let bx = pencil.n.matvec(x)?;
            let r: Vec<f64> = kx.iter().zip(&bx).map(|(a, b)| a - lambda * b).collect();
            Ok(norm2(&r) / nx)
        })
        .collect()
}

/// All finite eigenvalues of a small pencil by dense linear algebra, for
/// cross-checking. `K` is inverted explicitly, so it must be regular.
///
/// Eliminating everything but the velocity from `K x = λ N x` leaves the
/// symmetric problem `−T M u = (1/λ) u` with `T` the velocity block of `K⁻¹`;
/// with `M = L Lᵀ` it becomes `Lᵀ(−T)L w = (1/λ) w`.
pub fn dense_pencil_eigenvalues(pencil: &Pencil) -> Result<Vec<f64>> {
    let kinv = pencil
        .k
        .to_dense()
        .try_inverse()
        .ok_or_else(|| Error::Assembly("stiffness matrix is singular".into()))?;
    let r = pencil.layout.velocity_range();
    let t = -kinv.view((r.start, r.start), (r.len(), r.len())).into_owned();
    let l = nalgebra::Cholesky::new(pencil.m.to_dense())
        .ok_or_else(|| Error::Assembly("velocity mass matrix is not positive definite".into()))?
        .l();
    let mut s = l.transpose() * t * &l;
    s = (&s + s.transpose()) * 0.5;
    let ev = SymmetricEigen::new(s).eigenvalues;
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut out: Vec<f64> = ev.iter().filter(|v| v.abs() > 1e-10 * scale).map(|v| 1.0 / v).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}
