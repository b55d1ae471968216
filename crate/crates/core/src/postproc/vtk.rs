//! Legacy ASCII VTK unstructured grids (triangles only).

use std::fmt::Write as _;
use std::path::Path;

use super::{DgField, NodalField};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Cell,
    Point,
}

/// One data array. `components` is 1 (scalar), 2 (planar vector) or 4
/// (2×2 tensor, row-major); values are stored entity by entity.
#[derive(Clone, Debug, PartialEq)]
pub struct VtkField {
    pub name: String,
    pub location: Location,
    pub components: usize,
    pub data: Vec<f64>,
}

impl VtkField {
    /// Samples a discontinuous field at triangle centroids.
    pub fn cells(name: &str, field: &DgField) -> Self {
        let data = (0..field.n_triangles())
            .flat_map(|t| field.eval(t, [1.0 / 3.0, 1.0 / 3.0]))
            .collect();
        VtkField {
            name: name.into(),
            location: Location::Cell,
            components: field.components,
            data,
        }
    }

    pub fn points(name: &str, field: &NodalField) -> Self {
        VtkField {
            name: name.into(),
            location: Location::Point,
            components: 2,
            data: field.values.iter().flat_map(|v| [v[0], v[1]]).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct VtkData {
    pub points: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
    pub fields: Vec<VtkField>,
}

fn write_block(out: &mut String, f: &VtkField) {
    match f.components {
        1 => {
            let _ = writeln!(out, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
            for v in &f.data {
                let _ = writeln!(out, "{v:e}");
            }
        }
        2 => {
            let _ = writeln!(out, "VECTORS {} double", f.name);
            for v in f.data.chunks(2) {
                let _ = writeln!(out, "{:e} {:e} 0", v[0], v[1]);
            }
        }
        _ => {
            let _ = writeln!(out, "TENSORS {} double", f.name);
            for v in f.data.chunks(4) {
                let _ = writeln!(out, "{:e} {:e} 0\n{:e} {:e} 0\n0 0 0", v[0], v[1], v[2], v[3]);
            }
        }
    }
}

pub fn export_vtk(mesh: &Mesh, fields: &[VtkField], path: &Path) -> Result<()> {
    if fields.is_empty() {
        return Err(Error::InvalidInput("no fields to export".into()));
    }
    for f in fields {
        if f.name.is_empty() || f.name.contains(char::is_whitespace) {
            return Err(Error::InvalidInput(format!("invalid field name {:?}", f.name)));
        }
        if ![1, 2, 4].contains(&f.components) {
            return Err(Error::InvalidInput(format!("field {} has {} components", f.name, f.components)));
        }
        let count = match f.location {
            Location::Cell => mesh.n_triangles(),
            Location::Point => mesh.n_vertices(),
        };
        if f.data.len() != count * f.components {
            return Err(Error::InvalidInput(format!(
                "field {} has {} values, expected {}",
                f.name,
                f.data.len(),
                count * f.components
            )));
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0\nnedstokes\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:e} {:e} 0", p[0], p[1]);
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    for (loc, header) in [(Location::Cell, format!("CELL_DATA {nt}")), (Location::Point, format!("POINT_DATA {}", mesh.n_vertices()))] {
        let mut first = true;
        for f in fields.iter().filter(|f| f.location == loc) {
            if first {
                let _ = writeln!(out, "{header}");
                first = false;
            }
            write_block(&mut out, f);
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads files in the subset written by [`export_vtk`].
pub fn read_vtk(path: &Path) -> Result<VtkData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tokens = text
        .lines()
        .enumerate()
        .skip(3)
        .flat_map(|(i, l)| l.split_whitespace().map(move |w| (i + 1, w)))
        .peekable();
    let fail = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut next = |what: &str| tokens.next().ok_or_else(|| fail(0, format!("unexpected end of file, expected {what}")));
    macro_rules! num {
        ($t:ty, $what:expr) => {{
            let (line, w) = next($what)?;
            w.parse::<$t>().map_err(|_| fail(line, format!("expected {}, found {w:?}", $what)))?
        }};
    }
    macro_rules! keyword {
        ($k:expr) => {{
            let (line, w) = next($k)?;
            if w != $k {
                return Err(fail(line, format!("expected {}, found {w:?}", $k)));
            }
        }};
    }
    keyword!("DATASET");
    keyword!("UNSTRUCTURED_GRID");
    keyword!("POINTS");
    let np = num!(usize, "point count");
    keyword!("double");
    let mut points = Vec::with_capacity(np);
    for _ in 0..np {
        let x = num!(f64, "coordinate");
        let y = num!(f64, "coordinate");
        let _z = num!(f64, "coordinate");
        points.push([x, y]);
    }
    keyword!("CELLS");
    let nc = num!(usize, "cell count");
    let _size = num!(usize, "cell list size");
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let k = num!(usize, "vertex count");
        if k != 3 {
            return Err(fail(0, format!("only triangles are supported, found a cell with {k} vertices")));
        }
        cells.push([num!(usize, "vertex"), num!(usize, "vertex"), num!(usize, "vertex")]);
    }
    keyword!("CELL_TYPES");
    let _ = num!(usize, "cell count");
    for _ in 0..nc {
        let _ = num!(u32, "cell type");
    }
    let mut fields = Vec::new();
    let mut location = Location::Cell;
    let mut count = nc;
    while let Ok((line, w)) = next("section") {
        match w {
            "CELL_DATA" => {
                location = Location::Cell;
                count = num!(usize, "cell count");
            }
            "POINT_DATA" => {
                location = Location::Point;
                count = num!(usize, "point count");
            }
            "SCALARS" | "VECTORS" | "TENSORS" => {
                let (_, name) = next("field name")?;
                let name = name.to_string();
                keyword!("double");
                let (per, keep): (usize, &[usize]) = match w {
                    "SCALARS" => {
                        let _ = num!(usize, "component count");
                        keyword!("LOOKUP_TABLE");
                        keyword!("default");
                        (1, &[0])
                    }
                    "VECTORS" => (3, &[0, 1]),
                    _ => (9, &[0, 1, 3, 4]),
                };
                let mut data = Vec::with_capacity(count * keep.len());
                let mut buf = vec![0.0; per];
                for _ in 0..count {
                    for b in buf.iter_mut() {
                        *b = num!(f64, "value");
                    }
                    data.extend(keep.iter().map(|&i| buf[i]));
                }
                fields.push(VtkField {
                    name,
                    location,
                    components: keep.len(),
                    data,
                });
            }
            other => return Err(fail(line, format!("unknown section {other:?}"))),
        }
    }
    Ok(VtkData { points, cells, fields })
}
