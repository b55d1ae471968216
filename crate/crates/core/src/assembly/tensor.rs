//! The skew tensor `J` and the `J`-free part of a 2×2 tensor.

pub type Tensor2 = [[f64; 2]; 2];

pub const J: Tensor2 = [[0.0, 1.0], [-1.0, 0.0]];
pub const IDENTITY: Tensor2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn ddot(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// `τ^r = τ − ½ (τ:J) J`.
pub fn dev_r(t: &Tensor2) -> Tensor2 {
    let c = 0.5 * ddot(t, &J);
    [[t[0][0], t[0][1] - c], [t[1][0] + c, t[1][1]]]
}

/// `τ:J` for a tensor whose only non-zero row is `row`, equal to `v`.
pub fn row_ddot_j(row: usize, v: [f64; 2]) -> f64 {
    if row == 0 {
        v[1]
    } else {
        -v[0]
    }
}

pub fn matvec(t: &Tensor2, v: [f64; 2]) -> [f64; 2] {
    [t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]]
}
