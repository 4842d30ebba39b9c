//! Triangle mesh topology and lumped mass.
//!
//! Topology is immutable once built. Positions live outside the mesh so that
//! the solver can own and mutate them while sharing the topology.

use std::collections::HashMap;
use std::ops::Range;

use thiserror::Error;

use crate::Vec3;

/// Faces with area at or below this value (m²) have no usable normal.
pub const AREA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {face} repeats a vertex index: {indices:?}")]
    DegenerateFace { face: usize, indices: [usize; 3] },
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },
    #[error("face {face} has area {area:e} m², below tolerance")]
    ZeroAreaFace { face: usize, area: f64 },
    #[error("garment pieces do not partition the mesh: {0}")]
    BadPieces(String),
}

/// A labelled sub-range of a combined outfit mesh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GarmentPiece {
    pub label: String,
    pub vertices: Range<usize>,
    pub faces: Range<usize>,
}

/// Two faces sharing an interior edge, used by the bending model.
///
/// `edge` holds the shared vertices, `opposite` the vertex of each face not on
/// the edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hinge {
    pub edge: [usize; 2],
    pub opposite: [usize; 2],
    pub faces: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<Vec<usize>>,
    face_edges: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<usize>>,
    vertex_edges: Vec<Vec<usize>>,
    edge_lookup: HashMap<[usize; 2], usize>,
    vertex_mass: Vec<f64>,
    rest_positions: Vec<Vec3>,
    hinges: Vec<Hinge>,
    pieces: Vec<GarmentPiece>,
    density: f64,
}

#[inline]
fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl TriMesh {
    /// Builds topology and lumped masses. `positions` double as rest positions.
    ///
    /// Each face distributes `density * area / 3` to each of its vertices.
    pub fn build(positions: &[Vec3], faces: Vec<[usize; 3]>, density: f64) -> Result<Self, MeshError> {
        let vertex_count = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= vertex_count {
                    return Err(MeshError::IndexOutOfRange {
                        face: fi,
                        index: v,
                        vertex_count,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::DegenerateFace {
                    face: fi,
                    indices: *f,
                });
            }
        }

        let mut edges = Vec::new();
        let mut edge_faces: Vec<Vec<usize>> = Vec::new();
        let mut edge_lookup = HashMap::with_capacity(faces.len() * 2);
        let mut face_edges = Vec::with_capacity(faces.len());
        let mut vertex_faces = vec![Vec::new(); vertex_count];
        let mut vertex_mass = vec![0.0; vertex_count];

        for (fi, f) in faces.iter().enumerate() {
            let mut fe = [0usize; 3];
            for k in 0..3 {
                let key = edge_key(f[k], f[(k + 1) % 3]);
                let id = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_faces.push(Vec::new());
                    edges.len() - 1
                });
                edge_faces[id].push(fi);
                fe[k] = id;
                vertex_faces[f[k]].push(fi);
            }
            face_edges.push(fe);
            let area = triangle_area(positions[f[0]], positions[f[1]], positions[f[2]]);
            for &v in f {
                vertex_mass[v] += density * area / 3.0;
            }
        }

        let mut vertex_edges = vec![Vec::new(); vertex_count];
        for (ei, e) in edges.iter().enumerate() {
            vertex_edges[e[0]].push(ei);
            vertex_edges[e[1]].push(ei);
        }

        let non_manifold = edge_faces.iter().filter(|f| f.len() > 2).count();
        if non_manifold > 0 {
            log::warn!("mesh has {non_manifold} non-manifold edges (more than two incident faces)");
        }

        let mut hinges = Vec::new();
        for (ei, e) in edges.iter().enumerate() {
            if edge_faces[ei].len() != 2 {
                continue;
            }
            let [fa, fb] = [edge_faces[ei][0], edge_faces[ei][1]];
            let opp = |f: &[usize; 3]| *f.iter().find(|&&v| v != e[0] && v != e[1]).unwrap();
            hinges.push(Hinge {
                edge: *e,
                opposite: [opp(&faces[fa]), opp(&faces[fb])],
                faces: [fa, fb],
            });
        }

        Ok(Self {
            vertex_count,
            pieces: vec![GarmentPiece {
                label: "garment".into(),
                vertices: 0..vertex_count,
                faces: 0..faces.len(),
            }],
            faces,
            edges,
            edge_faces,
            face_edges,
            vertex_faces,
            vertex_edges,
            edge_lookup,
            vertex_mass,
            rest_positions: positions.to_vec(),
            hinges,
            density,
        })
    }

    /// Replaces the piece table. Pieces must be disjoint, contiguous and cover
    /// every vertex and face.
    pub fn with_pieces(mut self, mut pieces: Vec<GarmentPiece>) -> Result<Self, MeshError> {
        if pieces.is_empty() {
            return Err(MeshError::BadPieces("no pieces".into()));
        }
        pieces.sort_by_key(|p| p.vertices.start);
        let mut next_v = 0;
        let mut next_f = 0;
        for p in &pieces {
            if p.vertices.start != next_v || p.faces.start != next_f {
                return Err(MeshError::BadPieces(format!(
                    "piece '{}' does not start where the previous one ends",
                    p.label
                )));
            }
            next_v = p.vertices.end;
            next_f = p.faces.end;
        }
        if next_v != self.vertex_count || next_f != self.faces.len() {
            return Err(MeshError::BadPieces("pieces do not cover the mesh".into()));
        }
        self.pieces = pieces;
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    /// Unique undirected edges, each stored with the smaller index first.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_faces(&self, e: usize) -> &[usize] {
        &self.edge_faces[e]
    }

    /// Edge ids of a face, in the order (v0,v1), (v1,v2), (v2,v0).
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    pub fn vertex_mass(&self) -> &[f64] {
        &self.vertex_mass
    }

    pub fn rest_positions(&self) -> &[Vec3] {
        &self.rest_positions
    }

    pub fn hinges(&self) -> &[Hinge] {
        &self.hinges
    }

    pub fn pieces(&self) -> &[GarmentPiece] {
        &self.pieces
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn is_non_manifold_edge(&self, e: usize) -> bool {
        self.edge_faces[e].len() > 2
    }

    pub fn non_manifold_edge_count(&self) -> usize {
        self.edge_faces.iter().filter(|f| f.len() > 2).count()
    }

    pub fn shares_vertex(&self, fa: usize, fb: usize) -> bool {
        let a = self.faces[fa];
        let b = self.faces[fb];
        a.iter().any(|v| b.contains(v))
    }

    pub fn face_area(&self, f: usize, positions: &[Vec3]) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(positions[a], positions[b], positions[c])
    }

    pub fn total_rest_area(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| self.face_area(f, &self.rest_positions))
            .sum()
    }

    /// Index of the piece owning vertex `v`.
    pub fn piece_of_vertex(&self, v: usize) -> usize {
        self.pieces
            .iter()
            .position(|p| p.vertices.contains(&v))
            .unwrap_or(0)
    }
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unit normal of face `f` with right-handed orientation from vertex order.
pub fn face_normal(mesh: &TriMesh, f: usize, positions: &[Vec3]) -> Result<Vec3, MeshError> {
    let [a, b, c] = mesh.face(f);
    let cross = (positions[b] - positions[a]).cross(&(positions[c] - positions[a]));
    let area = 0.5 * cross.norm();
    if area <= AREA_TOLERANCE {
        return Err(MeshError::ZeroAreaFace { face: f, area });
    }
    Ok(cross / (2.0 * area))
}
