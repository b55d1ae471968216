use super::Mesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchCenter {
    Vertex(usize),
    Edge(usize),
    Triangle(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub center: PatchCenter,
    /// Ascending triangle ids.
    pub triangles: Vec<usize>,
    /// Total area of the member triangles.
    pub measure: f64,
}

#[derive(Clone, Debug)]
pub struct Patches {
    pub vertex: Vec<Patch>,
    pub edge: Vec<Patch>,
    /// `T` together with the triangles sharing an edge with it.
    pub triangle: Vec<Patch>,
}

fn make(mesh: &Mesh, center: PatchCenter, mut triangles: Vec<usize>) -> Patch {
    triangles.sort_unstable();
    triangles.dedup();
    let measure = triangles.iter().map(|&t| mesh.triangle_area(t)).sum();
    Patch {
        center,
        triangles,
        measure,
    }
}

pub fn patches(mesh: &Mesh) -> Patches {
    let vertex = mesh
        .vertex_triangles()
        .into_iter()
        .enumerate()
        .map(|(v, ts)| make(mesh, PatchCenter::Vertex(v), ts))
        .collect();
    let edge = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| make(mesh, PatchCenter::Edge(e), edge.adjacent().collect()))
        .collect();
    let triangle = mesh
        .triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let members = tri
                .edges
                .iter()
                .flat_map(|&e| mesh.edges()[e].adjacent())
                .collect();
            make(mesh, PatchCenter::Triangle(t), members)
        })
        .collect();
    Patches {
        vertex,
        edge,
        triangle,
    }
}
