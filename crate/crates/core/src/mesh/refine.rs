//! Newest-vertex bisection.

use std::collections::HashMap;

use super::{BoundaryTag, Mesh, Point};

/// Bisects every marked triangle at least once and closes the marking so the
/// result is conforming. Children record their parent; boundary tags of cut
/// edges pass to both halves.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Mesh {
    if marked.is_empty() {
        return mesh.clone();
    }
    let tris = mesh.triangles();
    let edges = mesh.edges();

    // An edge is cut if it is the refinement edge of a marked triangle, or if
    // it is the refinement edge of a triangle with any other cut edge.
    let mut cut = vec![false; mesh.n_edges()];
    let mut work = Vec::new();
    for &t in marked {
        let e = tris[t].edges[0];
        if !cut[e] {
            cut[e] = true;
            work.push(e);
        }
    }
    while let Some(e) = work.pop() {
        for t in edges[e].adjacent() {
            let r = tris[t].edges[0];
            if !cut[r] {
                cut[r] = true;
                work.push(r);
            }
        }
    }

    let mut vertices: Vec<Point> = mesh.vertices().to_vec();
    let mut midpoint = vec![usize::MAX; mesh.n_edges()];
    let mut parent_edge: HashMap<usize, usize> = HashMap::new();
    for (e, edge) in edges.iter().enumerate() {
        if cut[e] {
            let [a, b] = mesh.edge_points(e);
            midpoint[e] = vertices.len();
            parent_edge.insert(vertices.len(), e);
            vertices.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
            debug_assert!(edge.vertices[0] < edge.vertices[1]);
        }
    }

    // Triangle (a, b, c) with refinement edge (b, c) and midpoint p splits
    // into (p, a, b) and (p, c, a); each child's refinement edge is an old edge.
    let mut out: Vec<([usize; 3], Option<usize>)> = Vec::with_capacity(mesh.n_triangles() + 3 * marked.len());
    for (t, tri) in tris.iter().enumerate() {
        let [v0, v1, v2] = tri.vertices;
        let [e0, e1, e2] = tri.edges;
        if !cut[e0] {
            out.push(([v0, v1, v2], Some(t)));
            continue;
        }
        let m = midpoint[e0];
        let halves = [([m, v0, v1], e2), ([m, v2, v0], e1)];
        for (child, ref_edge) in halves {
            if cut[ref_edge] {
                let p = midpoint[ref_edge];
                let [a, b, c] = child;
                out.push(([p, a, b], Some(t)));
                out.push(([p, c, a], Some(t)));
            } else {
                out.push((child, Some(t)));
            }
        }
    }

    let old_edge: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(e, edge)| (edge.vertices, e)).collect();
    let lookup = |a: usize, b: usize| old_edge.get(&[a.min(b), a.max(b)]).copied();
    let tag_of = |[a, b]: [usize; 2]| -> BoundaryTag {
        if let Some(e) = lookup(a, b) {
            return edges[e].tag;
        }
        for (mid, other) in [(a, b), (b, a)] {
            if let Some(&e) = parent_edge.get(&mid) {
                if edges[e].vertices.contains(&other) {
                    return edges[e].tag;
                }
            }
        }
        BoundaryTag::Interior
    };
    Mesh::from_triangles(vertices, out, tag_of).expect("bisection preserves mesh consistency")
}
