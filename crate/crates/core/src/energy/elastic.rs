use crate::mesh::TriMesh;
use crate::Vec3;

use super::{accumulate, par_elements, MaterialParams};

/// Rest edge lengths and hinge angles taken from the mesh rest positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticRest {
    pub edge_lengths: Vec<f64>,
    pub hinge_angles: Vec<f64>,
}

impl ElasticRest {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let rest = mesh.rest_positions();
        let edge_lengths = mesh.edges().iter().map(|e| (rest[e[1]] - rest[e[0]]).norm()).collect();
        let hinge_angles = mesh
            .hinges()
            .iter()
            .map(|h| {
                dihedral_angle(rest[h.opposite[0]], rest[h.opposite[1]], rest[h.edge[0]], rest[h.edge[1]])
                    .unwrap_or(0.0)
            })
            .collect();
        Self {
            edge_lengths,
            hinge_angles,
        }
    }
}

/// Σ ½ k (|xᵢ − xⱼ| − L)² over edges.
pub fn stretching_energy(mesh: &TriMesh, rest: &ElasticRest, positions: &[Vec3], params: &MaterialParams) -> (f64, Vec<Vec3>) {
    let k = params.stretch_stiffness;
    let items = par_elements(mesh.edges().len(), |e| {
        let [i, j] = mesh.edges()[e];
        let d = positions[j] - positions[i];
        let len = d.norm();
        let strain = len - rest.edge_lengths[e];
        let energy = 0.5 * k * strain * strain;
        // Zero-length edges get a zero gradient direction.
        let dir = if len > 0.0 { d / len } else { Vec3::zeros() };
        let g = dir * (k * strain);
        Some((energy, [i, j], [-g, g]))
    });
    accumulate(positions.len(), items)
}

fn hinge_normals(x1: Vec3, x2: Vec3, x3: Vec3, x4: Vec3) -> (Vec3, Vec3) {
    ((x1 - x3).cross(&(x1 - x4)), (x2 - x4).cross(&(x2 - x3)))
}

/// Signed dihedral angle of the hinge with opposite vertices `x1`, `x2` and
/// shared edge `x3 → x4`; zero when flat.
pub fn dihedral_angle(x1: Vec3, x2: Vec3, x3: Vec3, x4: Vec3) -> Option<f64> {
    let (n1, n2) = hinge_normals(x1, x2, x3, x4);
    let e = x4 - x3;
    let (l1, l2, le) = (n1.norm(), n2.norm(), e.norm());
    if l1 <= f64::MIN_POSITIVE || l2 <= f64::MIN_POSITIVE || le <= f64::MIN_POSITIVE {
        return None;
    }
    let (n1, n2) = (n1 / l1, n2 / l2);
    Some(n1.cross(&n2).dot(&(e / le)).atan2(n1.dot(&n2)))
}

/// Hinges whose faces have area below this fraction of the squared edge
/// length are skipped.
const HINGE_DEGENERACY: f64 = 1e-12;

/// Σ k_b (θ − θ_rest)² over interior edges.
pub fn bending_energy(mesh: &TriMesh, rest: &ElasticRest, positions: &[Vec3], params: &MaterialParams) -> (f64, Vec<Vec3>) {
    let kb = params.bend_stiffness;
    let items = par_elements(mesh.hinges().len(), |h| {
        let hinge = mesh.hinges()[h];
        let [i1, i2] = hinge.opposite;
        let [i3, i4] = hinge.edge;
        let (x1, x2, x3, x4) = (positions[i1], positions[i2], positions[i3], positions[i4]);
        let (n1, n2) = hinge_normals(x1, x2, x3, x4);
        let e = x4 - x3;
        let le = e.norm();
        let (a1, a2) = (n1.norm_squared(), n2.norm_squared());
        let tiny = HINGE_DEGENERACY * le.powi(4);
        if le == 0.0 || a1 <= tiny || a2 <= tiny {
            return None;
        }
        let theta = dihedral_angle(x1, x2, x3, x4)?;
        let delta = theta - rest.hinge_angles[h];
        let energy = kb * delta * delta;
        let eh = e / le;
        // dθ/dx for the four hinge vertices.
        let u1 = n1 * (-le / a1);
        let u2 = n2 * (-le / a2);
        let u3 = n1 * (-(x1 - x4).dot(&eh) / a1) + n2 * (-(x2 - x4).dot(&eh) / a2);
        let u4 = n1 * ((x1 - x3).dot(&eh) / a1) + n2 * ((x2 - x3).dot(&eh) / a2);
        let c = 2.0 * kb * delta;
        Some((energy, [i1, i2, i3, i4], [u1 * c, u2 * c, u3 * c, u4 * c]))
    });
    accumulate(positions.len(), items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn hinge_mesh() -> (TriMesh, Vec<Vec3>) {
        // Edge 0-1 along x, wings at ±y.
        let p = vec![
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(0.5, 1., 0.),
            Vec3::new(0.5, -1., 0.),
        ];
        let m = TriMesh::build(&p, vec![[0, 1, 2], [1, 0, 3]], 1.0).unwrap();
        (m, p)
    }

    #[test]
    fn rest_edge_has_no_stretch() {
        let (m, p) = hinge_mesh();
        let rest = ElasticRest::from_mesh(&m);
        let (e, g) = stretching_energy(&m, &rest, &p, &MaterialParams::default());
        assert_eq!(e, 0.0);
        assert!(g.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn stretched_unit_edge() {
        let p = vec![Vec3::zeros(), Vec3::new(1., 0., 0.), Vec3::new(0., 1., 0.)];
        let m = TriMesh::build(&p, vec![[0, 1, 2]], 1.0).unwrap();
        let rest = ElasticRest::from_mesh(&m);
        let mut q = p.clone();
        q[1].x = 1.1;
        let params = MaterialParams {
            stretch_stiffness: 100.0,
            ..Default::default()
        };
        // Edge 0-1 contributes 0.5 J, edge 0-2 nothing, edge 1-2 the remainder.
        let diag = (1.1f64 * 1.1 + 1.0).sqrt() - 2f64.sqrt();
        let (total, _) = stretching_energy(&m, &rest, &q, &params);
        assert!((total - (0.5 + 50.0 * diag * diag)).abs() < 1e-12);
    }

    #[test]
    fn flat_hinge_has_no_bending() {
        let (m, p) = hinge_mesh();
        let rest = ElasticRest::from_mesh(&m);
        assert_eq!(rest.hinge_angles, vec![0.0]);
        let (e, _) = bending_energy(&m, &rest, &p, &MaterialParams::default());
        assert_eq!(e, 0.0);
    }

    #[test]
    fn right_angle_fold() {
        let (m, p) = hinge_mesh();
        let rest = ElasticRest::from_mesh(&m);
        let mut q = p.clone();
        q[3] = Vec3::new(0.5, 0., 1.);
        let params = MaterialParams {
            bend_stiffness: 1.0,
            ..Default::default()
        };
        let (e, _) = bending_energy(&m, &rest, &q, &params);
        assert!((e - FRAC_PI_2 * FRAC_PI_2).abs() < 1e-12);
    }
}
