//! Monomial bookkeeping for bivariate polynomials.

/// Exponents `(a, b)` of `x^a y^b` with `a + b <= degree`, ordered by total
/// degree and then by decreasing power of `x`.
pub fn monomial_exponents(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity((degree + 1) * (degree + 2) / 2);
    for d in 0..=degree as u32 {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Index of `x^a y^b` in [`monomial_exponents`].
pub fn monomial_index(a: u32, b: u32) -> usize {
    let d = (a + b) as usize;
    d * (d + 1) / 2 + b as usize
}

fn pow(x: f64, n: i32) -> f64 {
    if n <= 0 {
        1.0
    } else {
        x.powi(n)
    }
}

/// Values and first derivatives of all monomials at `p`.
pub fn eval_monomials(exps: &[(u32, u32)], p: [f64; 2]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let [x, y] = p;
    let mut v = Vec::with_capacity(exps.len());
    let mut dx = Vec::with_capacity(exps.len());
    let mut dy = Vec::with_capacity(exps.len());
    for &(a, b) in exps {
        let (a, b) = (a as i32, b as i32);
        v.push(pow(x, a) * pow(y, b));
        dx.push(if a > 0 { a as f64 * pow(x, a - 1) * pow(y, b) } else { 0.0 });
        dy.push(if b > 0 { b as f64 * pow(x, a) * pow(y, b - 1) } else { 0.0 });
    }
    (v, dx, dy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_matches_ordering() {
        for (i, &(a, b)) in monomial_exponents(5).iter().enumerate() {
            assert_eq!(monomial_index(a, b), i);
        }
        assert_eq!(monomial_exponents(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }
}
