use crate::collision::{BodyContact, Correspondence};
use crate::mesh::TriMesh;
use crate::Vec3;

use super::{accumulate, par_elements, MaterialParams};

/// max(ξ − d·sign(d_prev), 0)³ for a single pair.
pub fn repulsion_penalty(d_curr: f64, d_prev: f64, xi: f64) -> f64 {
    let side = if d_prev < 0.0 { -1.0 } else { 1.0 };
    (xi - d_curr * side).max(0.0).powi(3)
}

/// Cubic repulsion over the given correspondences.
///
/// The distance is recomputed from `positions` as `(v − Σ wₖ xₖ)·n` with the
/// correspondence's frozen weights and normal.
pub fn repulsion_energy(mesh: &TriMesh, correspondences: &[Correspondence], positions: &[Vec3], xi: f64) -> (f64, Vec<Vec3>) {
    assert!(xi > 0.0, "repulsion threshold must be positive");
    let items = par_elements(correspondences.len(), |i| {
        let c = &correspondences[i];
        let f = mesh.face(c.face);
        let foot: Vec3 = (0..3).map(|k| positions[f[k]] * c.weights[k]).sum();
        let d = (positions[c.node] - foot).dot(&c.normal);
        let side = if c.d_prev < 0.0 { -1.0 } else { 1.0 };
        let gap = xi - d * side;
        if gap <= 0.0 {
            return None;
        }
        // dE/dd = −3 gap² · side
        let g = c.normal * (-3.0 * gap * gap * side);
        Some((
            gap * gap * gap,
            [c.node, f[0], f[1], f[2]],
            [g, -g * c.weights[0], -g * c.weights[1], -g * c.weights[2]],
        ))
    });
    accumulate(positions.len(), items)
}

/// k · max(margin − d, 0)³ per garment node against its body contact face.
pub fn body_collision_energy(
    positions: &[Vec3],
    contacts: &[BodyContact],
    body: &TriMesh,
    body_positions: &[Vec3],
    params: &MaterialParams,
) -> (f64, Vec<Vec3>) {
    let k = params.body_collision_stiffness;
    let margin = params.body_margin;
    let items = par_elements(contacts.len(), |i| {
        let c = &contacts[i];
        let f = body.face(c.face);
        let q: Vec3 = (0..3).map(|j| body_positions[f[j]] * c.weights[j]).sum();
        let d = (positions[c.node] - q).dot(&c.normal);
        let gap = margin - d;
        if gap <= 0.0 {
            return None;
        }
        Some((k * gap * gap * gap, [c.node], [c.normal * (-3.0 * k * gap * gap)]))
    });
    accumulate(positions.len(), items)
}

/// Tangential slip penalty for one contact.
///
/// Slip is the node's displacement over the step minus the motion of the
/// contacted surface point; only its component orthogonal to `normal` is
/// penalised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionContact {
    pub node: usize,
    /// Garment face vertices and weights of the surface point, for cloth
    /// contacts.
    pub surface: Option<([usize; 3], [f64; 3])>,
    /// Prescribed surface displacement over the step, for body contacts.
    pub surface_motion: Vec3,
    pub normal: Vec3,
    /// μ · m / dt² for the contacting node.
    pub scale: f64,
}

/// Σ ½ scale |(I − nnᵀ) slip|².
pub fn friction_energy(contacts: &[FrictionContact], positions: &[Vec3], prev_positions: &[Vec3]) -> (f64, Vec<Vec3>) {
    let items = par_elements(contacts.len(), |i| {
        let c = &contacts[i];
        let mut slip = positions[c.node] - prev_positions[c.node] - c.surface_motion;
        let mut idx = [c.node; 4];
        let mut w = [0.0; 3];
        if let Some((verts, weights)) = c.surface {
            for k in 0..3 {
                slip -= (positions[verts[k]] - prev_positions[verts[k]]) * weights[k];
                idx[k + 1] = verts[k];
            }
            w = weights;
        }
        let tangential = slip - c.normal * c.normal.dot(&slip);
        let g = tangential * c.scale;
        Some((
            0.5 * c.scale * tangential.norm_squared(),
            idx,
            [g, -g * w[0], -g * w[1], -g * w[2]],
        ))
    });
    accumulate(positions.len(), items)
}
