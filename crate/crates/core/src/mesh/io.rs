//! Plain-text mesh format.
//!
//! ```text
//! V E T
//! x y                      (V lines)
//! v0 v1 tag                (E lines, tag 0 interior, 1 Dirichlet, 2 Neumann)
//! v0 v1 v2 e0 e1 e2 [parent]   (T lines)
//! ```
//!
//! Coordinates carry 17 significant digits, so a write/read cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryTag, Edge, Mesh, Triangle};
use crate::error::{Error, Result};

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {} {}", mesh.n_vertices(), mesh.n_edges(), mesh.n_triangles());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    for e in mesh.edges() {
        let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.code());
    }
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        let [x, y, z] = t.edges;
        match t.parent {
            Some(p) => writeln!(s, "{a} {b} {c} {x} {y} {z} {p}"),
            None => writeln!(s, "{a} {b} {c} {x} {y} {z}"),
        }
        .unwrap();
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text).map_err(|(line, msg)| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

fn parse_mesh(text: &str) -> std::result::Result<Mesh, (usize, String)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |what: &str| -> std::result::Result<(usize, Vec<&str>), (usize, String)> {
        lines
            .next()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
            .ok_or((0, format!("unexpected end of file while reading {what}")))
    };
    fn num<T: std::str::FromStr>(line: usize, tok: &str) -> std::result::Result<T, (usize, String)> {
        tok.parse().map_err(|_| (line, format!("cannot parse `{tok}`")))
    }
    let (ln, head) = next("header")?;
    if head.len() != 3 {
        return Err((ln, "header must be `V E T`".into()));
    }
    let (nv, ne, nt): (usize, usize, usize) = (num(ln, head[0])?, num(ln, head[1])?, num(ln, head[2])?);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, tok) = next("vertices")?;
        if tok.len() != 2 {
            return Err((ln, "vertex line must be `x y`".into()));
        }
        vertices.push([num(ln, tok[0])?, num(ln, tok[1])?]);
    }
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, tok) = next("edges")?;
        if tok.len() != 3 {
            return Err((ln, "edge line must be `v0 v1 tag`".into()));
        }
        let tag = BoundaryTag::from_code(num(ln, tok[2])?).ok_or((ln, "unknown boundary tag".to_string()))?;
        edges.push(Edge {
            vertices: [num(ln, tok[0])?, num(ln, tok[1])?],
            triangles: [None, None],
            tag,
        });
    }
    let mut triangles = Vec::with_capacity(nt);
    for t in 0..nt {
        let (ln, tok) = next("triangles")?;
        if tok.len() != 6 && tok.len() != 7 {
            return Err((ln, "triangle line must be `v0 v1 v2 e0 e1 e2 [parent]`".into()));
        }
        let mut ids = [0usize; 6];
        for (slot, tk) in ids.iter_mut().zip(&tok) {
            *slot = num(ln, tk)?;
        }
        let parent = if tok.len() == 7 { Some(num(ln, tok[6])?) } else { None };
        for &e in &ids[3..] {
            let edge = edges.get_mut(e).ok_or((ln, format!("edge {e} out of range")))?;
            if edge.triangles[0].is_none() {
                edge.triangles[0] = Some(t);
            } else if edge.triangles[1].is_none() {
                edge.triangles[1] = Some(t);
            } else {
                return Err((ln, format!("edge {e} has more than two triangles")));
            }
        }
        triangles.push(Triangle {
            vertices: [ids[0], ids[1], ids[2]],
            edges: [ids[3], ids[4], ids[5]],
            parent,
        });
    }
    Mesh::from_parts(vertices, edges, triangles).map_err(|e| (0, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_circle_mesh, refine};

    #[test]
    fn round_trip_is_exact() {
        let m = build_circle_mesh(3);
        let m = refine(&m, &[0, 5, 17]);
        let back = parse_mesh(&mesh_to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bad_tag_is_rejected() {
        assert!(parse_mesh("3 3 1\n0 0\n1 0\n0 1\n1 2 9\n0 2 1\n0 1 1\n0 1 2 0 1 2\n").is_err());
    }
}
