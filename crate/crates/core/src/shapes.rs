//! Procedural meshes used by the scene recipes and the tests.

use crate::Vec3;

/// Raw positions and faces, before topology is built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshData {
    pub positions: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

impl MeshData {
    /// Appends `other`, offsetting its indices.
    pub fn append(&mut self, other: &MeshData) {
        let offset = self.positions.len();
        self.positions.extend_from_slice(&other.positions);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
    }

    pub fn map_positions(mut self, f: impl Fn(Vec3) -> Vec3) -> Self {
        for p in &mut self.positions {
            *p = f(*p);
        }
        self
    }
}

/// Regular grid in the XY plane with `nx * ny` quads, centred on `center`.
/// Quad diagonals alternate to avoid a directional bias.
pub fn grid_sheet(nx: usize, ny: usize, width: f64, height: f64, center: Vec3) -> MeshData {
    assert!(nx > 0 && ny > 0);
    let mut positions = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Vec3::new(
                center.x - width / 2.0 + width * i as f64 / nx as f64,
                center.y - height / 2.0 + height * j as f64 / ny as f64,
                center.z,
            ));
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if (i + j) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    MeshData { positions, faces }
}

/// Latitude-longitude sphere with outward-facing triangles.
pub fn uv_sphere(center: Vec3, radius: f64, stacks: usize, slices: usize) -> MeshData {
    assert!(stacks >= 2 && slices >= 3);
    let mut positions = vec![center + Vec3::new(0.0, 0.0, radius)];
    for s in 1..stacks {
        let phi = std::f64::consts::PI * s as f64 / stacks as f64;
        for k in 0..slices {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / slices as f64;
            positions.push(center + radius * Vec3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos()));
        }
    }
    positions.push(center - Vec3::new(0.0, 0.0, radius));
    let south = positions.len() - 1;
    let ring = |s: usize, k: usize| 1 + (s - 1) * slices + (k % slices);
    let mut faces = Vec::new();
    for k in 0..slices {
        faces.push([0, ring(1, k), ring(1, k + 1)]);
    }
    for s in 1..stacks - 1 {
        for k in 0..slices {
            let (a, b, c, d) = (ring(s, k), ring(s + 1, k), ring(s + 1, k + 1), ring(s, k + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for k in 0..slices {
        faces.push([south, ring(stacks - 1, k + 1), ring(stacks - 1, k)]);
    }
    MeshData { positions, faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{face_normal, TriMesh};

    #[test]
    fn grid_counts() {
        let g = grid_sheet(4, 3, 1.0, 1.0, Vec3::zeros());
        assert_eq!(g.positions.len(), 20);
        assert_eq!(g.faces.len(), 24);
    }

    #[test]
    fn sphere_faces_point_outward() {
        let s = uv_sphere(Vec3::new(1.0, 2.0, 3.0), 0.5, 8, 12);
        let m = TriMesh::build(&s.positions, s.faces.clone(), 1.0).unwrap();
        for f in 0..m.face_count() {
            let n = face_normal(&m, f, &s.positions).unwrap();
            let c: Vec3 = m.face(f).iter().map(|&v| s.positions[v]).sum::<Vec3>() / 3.0;
            assert!(n.dot(&(c - Vec3::new(1.0, 2.0, 3.0))) > 0.0);
        }
    }
}
