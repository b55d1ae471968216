use crate::mesh::{Mesh, Point};

/// Affine map `x = p0 + B x̂` from the reference triangle onto a mesh
/// triangle, with local vertex `i` sent to `triangle.vertices[i]`.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: Point,
    pub b: [[f64; 2]; 2],
    pub b_inv: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementMap {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let [p0, p1, p2] = mesh.triangle_points(t);
        let b = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let b_inv = [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]];
        ElementMap { origin: p0, b, b_inv, det }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn to_physical(&self, xh: [f64; 2]) -> Point {
        [
            self.origin[0] + self.b[0][0] * xh[0] + self.b[0][1] * xh[1],
            self.origin[1] + self.b[1][0] * xh[0] + self.b[1][1] * xh[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.b_inv[0][0] * d[0] + self.b_inv[0][1] * d[1],
            self.b_inv[1][0] * d[0] + self.b_inv[1][1] * d[1],
        ]
    }

    /// Covariant transform `B^{-T} v̂`.
    pub fn covariant(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.b_inv[0][0] * v[0] + self.b_inv[1][0] * v[1],
            self.b_inv[0][1] * v[0] + self.b_inv[1][1] * v[1],
        ]
    }

    /// Pull-back `Bᵀ v` of a physical vector, inverse of [`Self::covariant`].
    pub fn pull_back(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.b[0][0] * v[0] + self.b[1][0] * v[1],
            self.b[0][1] * v[0] + self.b[1][1] * v[1],
        ]
    }

    /// Physical Jacobian `B^{-T} Ĵ B^{-1}` of a covariantly mapped field.
    pub fn covariant_jacobian(&self, jh: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let bit = [[self.b_inv[0][0], self.b_inv[1][0]], [self.b_inv[0][1], self.b_inv[1][1]]];
        let left = mul(bit, jh);
        mul(left, self.b_inv)
    }

    /// Physical gradient `B^{-T} ∇̂` of a scalar.
    pub fn gradient(&self, g: [f64; 2]) -> [f64; 2] {
        self.covariant(g)
    }
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}
