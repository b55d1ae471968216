//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)` and on `[0, 1]`.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 10;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    /// Barycentric coordinates `(λ0, λ1, λ2)` of each point.
    pub barycentric: Vec<[f64; 3]>,
    /// Weights summing to the reference area `1/2`.
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cartesian reference coordinates of point `i`.
    pub fn point(&self, i: usize) -> [f64; 2] {
        let b = self.barycentric[i];
        [b[1], b[2]]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.point(i))).sum()
    }
}

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).sum()
    }
}

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomials `P_0 .. P_{n-1}` at `x ∈ [-1, 1]`.
pub fn legendre(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let v = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let kf = k as f64;
                ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf
            }
        };
        out.push(v);
    }
    out
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn line_rule(degree: usize) -> LineRule {
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    LineRule {
        points: x.iter().map(|&s| 0.5 * (s + 1.0)).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
    }
}

fn orbit3(a: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a, b], [a, b, a], [b, a, a]] {
        out.push((p, w));
    }
}

fn orbit6(a: f64, b: f64, w: f64, out: &mut Vec<([f64; 3], f64)>) {
    let c = 1.0 - a - b;
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        out.push((p, w));
    }
}

fn from_orbits(degree: usize, pts: Vec<([f64; 3], f64)>) -> QuadratureRule {
    QuadratureRule {
        barycentric: pts.iter().map(|p| p.0).collect(),
        weights: pts.iter().map(|p| 0.5 * p.1).collect(),
        degree,
    }
}

/// Collapsed tensor Gauss rule, averaged over the six vertex permutations so
/// the result is symmetric.
fn collapsed(degree: usize) -> QuadratureRule {
    let rule = line_rule(degree + 1);
    let mut pts = Vec::new();
    for (&u, &wu) in rule.points.iter().zip(&rule.weights) {
        for (&v, &wv) in rule.points.iter().zip(&rule.weights) {
            let (x, y) = (u, v * (1.0 - u));
            // 2 * weight so that the orbit normalization (sum 1) applies.
            orbit6(1.0 - x - y, x, 2.0 * wu * wv * (1.0 - u) / 6.0, &mut pts);
        }
    }
    from_orbits(degree, pts)
}

/// Symmetric rule exact for all polynomials of total degree `degree`.
pub fn quadrature(degree: usize) -> Result<QuadratureRule> {
    let mut pts = Vec::new();
    let rule = match degree {
        0 | 1 => {
            pts.push(([1.0 / 3.0; 3], 1.0));
            from_orbits(1, pts)
        }
        2 => {
            orbit3(1.0 / 6.0, 1.0 / 3.0, &mut pts);
            from_orbits(2, pts)
        }
        3 | 4 => {
            orbit3(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_70, &mut pts);
            orbit3(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64, &mut pts);
            from_orbits(4, pts)
        }
        5 => {
            pts.push(([1.0 / 3.0; 3], 0.225));
            orbit3(0.470_142_064_105_115_089_77, 0.132_394_152_788_506_180_74, &mut pts);
            orbit3(0.101_286_507_323_456_338_80, 0.125_939_180_544_827_152_60, &mut pts);
            from_orbits(5, pts)
        }
        6 => {
            orbit3(0.249_286_745_170_910_421_29, 0.116_786_275_726_379_366_03, &mut pts);
            orbit3(0.063_089_014_491_502_228_34, 0.050_844_906_370_206_816_92, &mut pts);
            orbit6(
                0.053_145_049_844_816_947_35,
                0.310_352_451_033_784_405_42,
                0.082_851_075_618_373_575_19,
                &mut pts,
            );
            from_orbits(6, pts)
        }
        7..=MAX_DEGREE => collapsed(degree),
        _ => {
            return Err(Error::Config(format!(
                "quadrature degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )))
        }
    };
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(a: u32, b: u32) -> f64 {
        let f = |n: u32| (1..=n).map(|k| k as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn all_rules_are_exact_to_their_degree() {
        for d in 0..=MAX_DEGREE {
            let q = quadrature(d).unwrap();
            assert!(q.degree >= d);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let v = q.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!((v - exact(a, b)).abs() < 1e-13, "degree {d}, x^{a} y^{b}: {v}");
                }
            }
        }
    }

    #[test]
    fn named_values() {
        let q = quadrature(1).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights[0], 0.5);
        let q = quadrature(3).unwrap();
        assert!((q.integrate(|p| p[0] * p[0] * p[1]) - 1.0 / 60.0).abs() < 1e-15);
        let q = quadrature(6).unwrap();
        assert!((q.integrate(|p| (p[0] * p[1]).powi(3)) - 1.0 / 1120.0).abs() < 1e-14);
        assert!(quadrature(11).is_err());
    }

    #[test]
    fn line_rules() {
        for d in 0..=12 {
            let r = line_rule(d);
            for k in 0..=d {
                let v = r.integrate(|s| s.powi(k as i32));
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14);
            }
        }
        let l = legendre(4, 0.3);
        assert!((l[3] - 0.5 * (5.0 * 0.027 - 0.9)).abs() < 1e-15);
    }
}
