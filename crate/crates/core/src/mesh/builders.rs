use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BoundaryTag, Mesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SquareDomain {
    /// `(0,1)²`
    Unit,
    /// `(-1,1)²`
    BiUnit,
}

/// How grid cells are cut into triangles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPattern {
    /// Every cell cut from bottom-left to top-right.
    #[default]
    Fixed,
    /// Diagonals alternate in a checkerboard, starting bottom-left to
    /// top-right in cell `(0, 0)`. For even `N` the mesh is invariant under
    /// the symmetries of the square.
    Alternating,
}

/// Splits each grid cell `(i, j)` (lower-left corner index) along one of its
/// diagonals; `rising(i, j)` selects bottom-left to top-right.
fn grid_triangles(
    n: usize,
    cells: impl Iterator<Item = (usize, usize)>,
    vid: impl Fn(usize, usize) -> usize,
    rising: impl Fn(usize, usize) -> bool,
) -> Vec<([usize; 3], Option<usize>)> {
    let mut tris = Vec::with_capacity(2 * n * n);
    for (i, j) in cells {
        let v00 = vid(i, j);
        let v10 = vid(i + 1, j);
        let v11 = vid(i + 1, j + 1);
        let v01 = vid(i, j + 1);
        if rising(i, j) {
            tris.push(([v00, v10, v11], None));
            tris.push(([v00, v11, v01], None));
        } else {
            tris.push(([v00, v10, v01], None));
            tris.push(([v10, v11, v01], None));
        }
    }
    tris
}

fn finish(vertices: Vec<Point>, tris: Vec<([usize; 3], Option<usize>)>) -> Mesh {
    let mut mesh = Mesh::from_triangles(vertices, tris, |_| BoundaryTag::Dirichlet)
        .expect("structured mesh construction is consistent");
    mesh.label_longest_edges();
    mesh
}

/// `N × N` squares, each cut into two triangles along the bottom-left to
/// top-right diagonal; all boundary edges Dirichlet.
pub fn build_square_mesh(n: usize, domain: SquareDomain) -> Mesh {
    build_square_mesh_with(n, domain, DiagonalPattern::Fixed)
}

/// [`build_square_mesh`] with a choice of diagonal pattern.
pub fn build_square_mesh_with(n: usize, domain: SquareDomain, pattern: DiagonalPattern) -> Mesh {
    assert!(n >= 1, "N must be positive");
    let (lo, side) = match domain {
        SquareDomain::Unit => (0.0, 1.0),
        SquareDomain::BiUnit => (-1.0, 2.0),
    };
    let h = side / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // Pin the far side exactly to avoid accumulated rounding.
            let x = if i == n { lo + side } else { lo + i as f64 * h };
            let y = if j == n { lo + side } else { lo + j as f64 * h };
            vertices.push([x, y]);
        }
    }
    let cells = (0..n).flat_map(|j| (0..n).map(move |i| (i, j)));
    let tris = grid_triangles(n, cells, |i, j| j * (n + 1) + i, |i, j| match pattern {
        DiagonalPattern::Fixed => true,
        DiagonalPattern::Alternating => (i + j) % 2 == 0,
    });
    finish(vertices, tris)
}

/// `(-1,1)² \ (-1,0]²` built from three `N × N` blocks of split squares.
pub fn build_lshape_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "N must be positive");
    let m = 2 * n;
    let h = 1.0 / n as f64;
    let inside_cell = |i: usize, j: usize| i >= n || j >= n;
    let mut index = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            let used = [(i, j), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i.wrapping_sub(1), j.wrapping_sub(1))]
                .iter()
                .any(|&(ci, cj)| ci < m && cj < m && inside_cell(ci, cj));
            if used {
                index[j * (m + 1) + i] = vertices.len();
                let coord = |k: usize| if k == m { 1.0 } else { -1.0 + k as f64 * h };
                vertices.push([coord(i), coord(j)]);
            }
        }
    }
    let cells = (0..m)
        .flat_map(|j| (0..m).map(move |i| (i, j)))
        .filter(|&(i, j)| inside_cell(i, j));
    let tris = grid_triangles(n, cells, |i, j| index[j * (m + 1) + i], |_, _| true);
    finish(vertices, tris)
}

/// Polygonal unit disk from `N` concentric rings; ring `i` carries `6i`
/// equally spaced vertices at radius `i/N`. Consecutive rings are stitched by
/// walking both rings by angle, which yields exactly `6N²` triangles.
pub fn build_circle_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "N must be positive");
    let mut vertices: Vec<Point> = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for i in 1..=n {
        ring_start.push(vertices.len());
        let r = if i == n { 1.0 } else { i as f64 / n as f64 };
        let count = 6 * i;
        for j in 0..count {
            let a = 2.0 * PI * j as f64 / count as f64;
            vertices.push([r * a.cos(), r * a.sin()]);
        }
    }
    let mut tris = Vec::with_capacity(6 * n * n);
    for q in 0..6 {
        tris.push(([0, ring_start[1] + q, ring_start[1] + (q + 1) % 6], None));
    }
    for i in 2..=n {
        let (n_in, n_out) = (6 * (i - 1), 6 * i);
        let inner = |p: usize| ring_start[i - 1] + p % n_in;
        let outer = |q: usize| ring_start[i] + q % n_out;
        let (mut p, mut q) = (0, 0);
        while p < n_in || q < n_out {
            // Advance on the outer ring when its next angle does not pass the
            // inner ring's next angle: (q+1)/n_out <= (p+1)/n_in.
            if q < n_out && (p == n_in || (q + 1) * n_in <= (p + 1) * n_out) {
                tris.push(([inner(p), outer(q), outer(q + 1)], None));
                q += 1;
            } else {
                tris.push(([outer(q), inner(p + 1), inner(p)], None));
                p += 1;
            }
        }
    }
    finish(vertices, tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_counts() {
        let m = build_square_mesh(1, SquareDomain::Unit);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_triangles()), (4, 5, 2));
        let m = build_square_mesh(3, SquareDomain::Unit);
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_triangles()), (16, 33, 18));
        assert_eq!(build_square_mesh(20, SquareDomain::BiUnit).n_triangles(), 800);
    }

    #[test]
    fn circle_counts() {
        for n in 1..6 {
            let m = build_circle_mesh(n);
            assert_eq!(m.n_triangles(), 6 * n * n);
            m.validate().unwrap();
        }
    }

    #[test]
    fn lshape_counts() {
        assert_eq!(build_lshape_mesh(1).n_triangles(), 6);
        let m = build_lshape_mesh(2);
        assert_eq!(m.n_triangles(), 24);
        m.validate().unwrap();
    }

    #[test]
    fn refinement_edge_is_longest() {
        let m = build_square_mesh(2, SquareDomain::Unit);
        for t in 0..m.n_triangles() {
            let e = m.triangles()[t].edges[0];
            assert!((m.edge_length(e) - m.h_triangle(t)).abs() < 1e-15);
        }
    }
}
