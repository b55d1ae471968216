//! Convergence-order fits and eigenvalue extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares slope of `log e` against `log h`, and the root-mean-square
/// residual of that fit.
pub fn fit_order(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("an order fit needs at least two points".into()));
    }
    if let Some(&(h, e)) = pairs.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::InvalidInput(format!("order fit needs positive values, got ({h}, {e})")));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("order fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    Ok((slope, (ss / n).sqrt()))
}

/// Fit `λ_h ≈ λ∞ + C h^t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub lambda: f64,
    pub c: f64,
    /// `None` when the series is constant and no rate can be identified.
    pub t: Option<f64>,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

const T_MIN: f64 = 0.25;
const T_MAX: f64 = 8.0;

/// Linear least squares for `(λ∞, C)` at fixed `t`; returns the residual
/// sum of squares as well.
fn fit_at(pairs: &[(f64, f64)], t: f64) -> (f64, f64, f64) {
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.powf(t)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(pairs).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let lambda = my - c * mx;
    let ss = xs.iter().zip(pairs).map(|(x, p)| (p.1 - lambda - c * x).powi(2)).sum();
    (lambda, c, ss)
}

/// Minimises `Σ (λ_h − λ∞ − C h^t)²` over `t ∈ [0.25, 8]` (golden-section
/// search after a coarse scan, which picks the bracket) with `(λ∞, C)`
/// solved exactly at every `t`.
pub fn extrapolate(pairs: &[(f64, f64)]) -> Result<Extrapolation> {
    if pairs.len() < 3 {
        return Err(Error::InvalidInput("extrapolation needs at least three mesh sizes".into()));
    }
    if pairs.iter().any(|p| !(p.0 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InvalidInput("extrapolation needs positive h and finite values".into()));
    }
    let n = pairs.len() as f64;
    let mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let spread = pairs.iter().fold(0.0f64, |m, p| m.max((p.1 - mean).abs()));
    if spread <= 1e-14 * mean.abs().max(1e-300) {
        return Ok(Extrapolation {
            lambda: mean,
            c: 0.0,
            t: None,
            residual: spread,
        });
    }
    let ss = |t: f64| fit_at(pairs, t).2;
    const SCAN: usize = 400;
    let grid: Vec<f64> = (0..=SCAN)
        .map(|i| T_MIN * (T_MAX / T_MIN).powf(i as f64 / SCAN as f64))
        .collect();
    let best = (0..=SCAN).min_by(|&a, &b| ss(grid[a]).total_cmp(&ss(grid[b]))).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(SCAN)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ss(c), ss(d));
    while b - a > 1e-13 * b {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ss(d);
        }
    }
    let t = 0.5 * (a + b);
    let (lambda, c, ss) = fit_at(pairs, t);
    Ok(Extrapolation {
        lambda,
        c,
        t: Some(t),
        residual: (ss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let h = [0.1, 0.05, 0.025];
        let (s, r) = fit_order(&h.map(|h| (h, h * h))).unwrap();
        assert!((s - 2.0).abs() < 1e-10 && r < 1e-12);
        let (s, _) = fit_order(&h.map(|h| (h, 3.0 * h.powf(1.08)))).unwrap();
        assert!((s - 1.08).abs() < 1e-10);
        assert!(fit_order(&[(0.1, 0.0), (0.2, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0)]).is_err());
    }

    #[test]
    fn synthetic_extrapolation() {
        let pairs: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05].iter().map(|&h| (h, 10.0 + h * h)).collect();
        let e = extrapolate(&pairs).unwrap();
        assert!((e.lambda - 10.0).abs() < 1e-8);
        assert!((e.c - 1.0).abs() < 1e-8);
        assert!((e.t.unwrap() - 2.0).abs() < 1e-8);
        let flat = extrapolate(&[(0.1, 3.0), (0.2, 3.0), (0.3, 3.0)]).unwrap();
        assert_eq!((flat.lambda, flat.c, flat.t), (3.0, 0.0, None));
        assert!(extrapolate(&pairs[..2]).is_err());
    }
}
