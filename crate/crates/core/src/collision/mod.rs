//! Discrete collision detection and proximity queries.
//!
//! Every query runs in parallel over faces or nodes and merges its results in
//! ascending index order, so outputs do not depend on the thread count.

mod bvh;

pub use bvh::{face_boxes, Aabb, Bvh, BvhNode, BvhNodeKind, DEFAULT_LEAF_SIZE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{barycentric, closest_point_on_triangle};
use crate::mesh::{face_normal, TriMesh};
use crate::Vec3;

/// Relative tolerance below which an edge counts as parallel to a plane.
pub const PARALLEL_TOLERANCE: f64 = 1e-10;

/// Default cloth proximity threshold (m).
pub const DEFAULT_CLOTH_EPSILON: f64 = 0.01;

/// Default garment-to-body edge threshold (m).
pub const DEFAULT_BODY_EPSILON: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("cannot build a hierarchy over an empty mesh")]
    EmptyMesh,
}

/// One mesh edge passing through a face.
///
/// `edge` is stored smaller index first and `s` is measured from `edge[0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFaceCrossing {
    pub edge: [usize; 2],
    pub host_face: usize,
    pub s: f64,
    pub point: Vec3,
}

impl EdgeFaceCrossing {
    /// Identity of the crossing independent of which face pair reported it.
    pub fn key(&self) -> (usize, usize, usize) {
        (self.edge[0], self.edge[1], self.host_face)
    }
}

/// An intersecting face pair and the two endpoints of its intersection segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriPairIntersection {
    pub face_a: usize,
    pub face_b: usize,
    pub crossings: [EdgeFaceCrossing; 2],
}

impl TriPairIntersection {
    pub fn segment_length(&self) -> f64 {
        (self.crossings[0].point - self.crossings[1].point).norm()
    }
}

/// A node close to a face of the same outfit.
///
/// `weights` are the barycentric coordinates of the node's foot point on the
/// face and `normal` the face normal when the pair was found; both are frozen
/// for energy evaluation until the pair is refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub node: usize,
    pub face: usize,
    pub d_curr: f64,
    pub d_prev: f64,
    pub weights: [f64; 3],
    pub normal: Vec3,
    pub repulsive: bool,
}

/// Signed distance of `x0 + s (x1 - x0)` crossing the plane through `plane_point`.
///
/// Returns `(s, point)` when the edge strictly straddles the plane and is not
/// near-parallel to it.
pub fn edge_plane_crossing(x0: Vec3, x1: Vec3, plane_point: Vec3, normal: Vec3) -> Option<(f64, Vec3)> {
    let d0 = (x0 - plane_point).dot(&normal);
    let d1 = (x1 - plane_point).dot(&normal);
    if !(d0 * d1 < 0.0) {
        return None;
    }
    let dir = x1 - x0;
    let denom = dir.dot(&normal);
    if denom.abs() < PARALLEL_TOLERANCE * dir.norm() {
        return None;
    }
    let s = (plane_point.dot(&normal) - x0.dot(&normal)) / denom;
    if !(0.0..=1.0).contains(&s) {
        return None;
    }
    Some((s, x0 + dir * s))
}

fn crossing_through(
    mesh: &TriMesh,
    positions: &[Vec3],
    edge: [usize; 2],
    host: usize,
    host_normal: Vec3,
) -> Option<EdgeFaceCrossing> {
    let [a, b, c] = mesh.face(host);
    let (pa, pb, pc) = (positions[a], positions[b], positions[c]);
    let centroid = (pa + pb + pc) / 3.0;
    let (s, point) = edge_plane_crossing(positions[edge[0]], positions[edge[1]], centroid, host_normal)?;
    let w = barycentric(point, pa, pb, pc)?;
    if w.iter().all(|&x| x >= 0.0) {
        Some(EdgeFaceCrossing {
            edge,
            host_face: host,
            s,
            point,
        })
    } else {
        None
    }
}

fn canonical(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Intersection of two faces that share no vertex.
///
/// Collects edges of each face that cross the other face. Pairs with anything
/// other than exactly two crossings (disjoint, coplanar, grazing) yield `None`.
/// Crossings of `fa`'s edges come first, in face-edge order.
pub fn tri_tri_intersect(mesh: &TriMesh, positions: &[Vec3], fa: usize, fb: usize) -> Option<TriPairIntersection> {
    let na = face_normal(mesh, fa, positions).ok()?;
    let nb = face_normal(mesh, fb, positions).ok()?;
    let mut found: [Option<EdgeFaceCrossing>; 2] = [None, None];
    let mut count = 0;
    for (edge_face, host, host_n) in [(fa, fb, nb), (fb, fa, na)] {
        let f = mesh.face(edge_face);
        for k in 0..3 {
            let edge = canonical(f[k], f[(k + 1) % 3]);
            if let Some(c) = crossing_through(mesh, positions, edge, host, host_n) {
                if count < 2 {
                    found[count] = Some(c);
                }
                count += 1;
            }
        }
    }
    if count != 2 {
        return None;
    }
    Some(TriPairIntersection {
        face_a: fa,
        face_b: fb,
        crossings: [found[0]?, found[1]?],
    })
}

/// All intersecting non-adjacent face pairs, each once with `face_a < face_b`.
///
/// `bvh` must be built over the faces at `positions` with zero margin.
pub fn detect_intersections(mesh: &TriMesh, positions: &[Vec3], bvh: &Bvh) -> Vec<TriPairIntersection> {
    let boxes = face_boxes(mesh, positions, 0.0);
    (0..mesh.face_count())
        .into_par_iter()
        .flat_map_iter(|f| {
            let mut candidates = Vec::new();
            bvh.query(&boxes[f], &mut candidates);
            candidates.retain(|&g| g > f && !mesh.shares_vertex(f, g));
            candidates.sort_unstable();
            candidates
                .into_iter()
                .filter_map(move |g| tri_tri_intersect(mesh, positions, f, g))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Node-face pair test used by the proximity search.
///
/// Returns `(d, weights, normal)` when the node is within `eps` of the face
/// plane and its normal projection falls strictly inside the face.
pub fn node_face_proximity(
    mesh: &TriMesh,
    positions: &[Vec3],
    node: usize,
    face: usize,
    eps: f64,
) -> Option<(f64, [f64; 3], Vec3)> {
    let [a, b, c] = mesh.face(face);
    if node == a || node == b || node == c {
        return None;
    }
    let n = face_normal(mesh, face, positions).ok()?;
    let v = positions[node];
    let d = (v - positions[a]).dot(&n);
    if d.abs() > eps {
        return None;
    }
    let foot = v - n * d;
    let w = barycentric(foot, positions[a], positions[b], positions[c])?;
    if w.iter().all(|&x| x > 0.0) {
        Some((d, w, n))
    } else {
        None
    }
}

/// Signed plane distance of `node` to `face` at `prev`, or the fallback
/// `sign(d_curr) * eps` when the previous state gives no usable side.
fn previous_distance(mesh: &TriMesh, prev: Option<&[Vec3]>, node: usize, face: usize, d_curr: f64, eps: f64) -> f64 {
    let fallback = if d_curr < 0.0 { -eps } else { eps };
    let Some(prev) = prev else {
        return fallback;
    };
    match face_normal(mesh, face, prev) {
        Ok(n) => {
            let d = (prev[node] - prev[mesh.face(face)[0]]).dot(&n);
            if d == 0.0 || !d.is_finite() {
                fallback
            } else {
                d
            }
        }
        Err(_) => fallback,
    }
}

/// Face-node correspondences within `eps`, sorted by (node, face).
///
/// `bvh` must be built over the faces with margin `eps`.
pub fn find_cloth_correspondences(
    mesh: &TriMesh,
    positions: &[Vec3],
    prev_positions: Option<&[Vec3]>,
    bvh: &Bvh,
    eps: f64,
) -> Vec<Correspondence> {
    assert!(eps > 0.0, "proximity threshold must be positive");
    (0..mesh.vertex_count())
        .into_par_iter()
        .flat_map_iter(|node| {
            let mut candidates = Vec::new();
            bvh.query(&Aabb::from_point(positions[node]), &mut candidates);
            candidates.sort_unstable();
            candidates
                .into_iter()
                .filter_map(move |face| {
                    let (d, weights, normal) = node_face_proximity(mesh, positions, node, face, eps)?;
                    Some(Correspondence {
                        node,
                        face,
                        d_curr: d,
                        d_prev: previous_distance(mesh, prev_positions, node, face, d, eps),
                        weights,
                        normal,
                        repulsive: true,
                    })
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Nearest body node for each garment node strictly closer than `eps_body`.
///
/// `body_bvh` is a point hierarchy over `body_positions` (any margin). Ties go
/// to the lower body index.
pub fn find_body_edges(
    garment_positions: &[Vec3],
    body_positions: &[Vec3],
    body_bvh: &Bvh,
    eps_body: f64,
) -> Vec<(usize, usize)> {
    assert!(eps_body > 0.0, "body threshold must be positive");
    garment_positions
        .par_iter()
        .enumerate()
        .filter_map(|(g, &x)| {
            let mut best: Option<(f64, usize)> = None;
            body_bvh.nearest(x, eps_body, |b| {
                let d = (body_positions[b] - x).norm();
                let better = match best {
                    None => d < eps_body,
                    Some((bd, bi)) => d < bd || (d == bd && b < bi),
                };
                if better {
                    best = Some((d, b));
                }
                best.map_or(eps_body, |(bd, _)| bd)
            });
            best.map(|(_, b)| (g, b))
        })
        .collect()
}

/// Garment node in contact range of a body face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyContact {
    pub node: usize,
    pub face: usize,
    /// Barycentric weights of the closest point on the body face.
    pub weights: [f64; 3],
    pub normal: Vec3,
    /// Signed distance to the face plane along `normal`.
    pub distance: f64,
}

/// Closest body face within `radius` of each garment node.
///
/// `body_bvh` is a face hierarchy over the body (any margin).
pub fn find_body_contacts(
    garment_positions: &[Vec3],
    body: &TriMesh,
    body_positions: &[Vec3],
    body_bvh: &Bvh,
    radius: f64,
) -> Vec<BodyContact> {
    garment_positions
        .par_iter()
        .enumerate()
        .filter_map(|(node, &x)| {
            let mut best: Option<(f64, usize, [f64; 3])> = None;
            body_bvh.nearest(x, radius, |f| {
                let [a, b, c] = body.face(f);
                let (q, w) = closest_point_on_triangle(x, body_positions[a], body_positions[b], body_positions[c]);
                let d = (x - q).norm();
                let better = match best {
                    None => d <= radius,
                    Some((bd, bf, _)) => d < bd || (d == bd && f < bf),
                };
                if better {
                    best = Some((d, f, w));
                }
                best.map_or(radius, |(bd, _, _)| bd)
            });
            let (_, face, weights) = best?;
            let normal = face_normal(body, face, body_positions).ok()?;
            let distance = (x - body_positions[body.face(face)[0]]).dot(&normal);
            Some(BodyContact {
                node,
                face,
                weights,
                normal,
                distance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    /// Vertical triangle through a horizontal one.
    fn crossing_pair() -> (TriMesh, Vec<Vec3>) {
        let p = vec![
            v(0., -1., -1.),
            v(0., 1., -1.),
            v(0., 0., 1.),
            v(-2., -2., 0.),
            v(2., -2., 0.),
            v(0., 3., 0.),
        ];
        let m = TriMesh::build(&p, vec![[0, 1, 2], [3, 4, 5]], 1.0).unwrap();
        (m, p)
    }

    #[test]
    fn symmetric_plane_crossing() {
        let (m, p) = crossing_pair();
        let hit = tri_tri_intersect(&m, &p, 0, 1).unwrap();
        let mut pts: Vec<Vec3> = hit.crossings.iter().map(|c| c.point).collect();
        pts.sort_by(|a, b| a.y.total_cmp(&b.y));
        assert!((pts[0] - v(0., -0.5, 0.)).norm() < 1e-15);
        assert!((pts[1] - v(0., 0.5, 0.)).norm() < 1e-15);
        for c in &hit.crossings {
            assert_eq!(c.host_face, 1);
            assert!((c.s - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn parallel_triangles_do_not_intersect() {
        let p = vec![
            v(0., 0., 0.),
            v(1., 0., 0.),
            v(0., 1., 0.),
            v(0., 0., 0.01),
            v(1., 0., 0.01),
            v(0., 1., 0.01),
        ];
        let m = TriMesh::build(&p, vec![[0, 1, 2], [3, 4, 5]], 1.0).unwrap();
        assert!(tri_tri_intersect(&m, &p, 0, 1).is_none());
    }

    #[test]
    fn coplanar_overlap_is_not_reported() {
        let p = vec![
            v(0., 0., 0.),
            v(1., 0., 0.),
            v(0., 1., 0.),
            v(0.1, 0.1, 0.),
            v(1.1, 0.1, 0.),
            v(0.1, 1.1, 0.),
        ];
        let m = TriMesh::build(&p, vec![[0, 1, 2], [3, 4, 5]], 1.0).unwrap();
        assert!(tri_tri_intersect(&m, &p, 0, 1).is_none());
    }

    #[test]
    fn s_is_translation_invariant() {
        let (m, p) = crossing_pair();
        let shift = v(3.25, -1.5, 7.0);
        let q: Vec<Vec3> = p.iter().map(|x| x + shift).collect();
        let a = tri_tri_intersect(&m, &p, 0, 1).unwrap();
        let b = tri_tri_intersect(&m, &q, 0, 1).unwrap();
        for k in 0..2 {
            assert!((a.crossings[k].s - b.crossings[k].s).abs() < 1e-12);
        }
    }

    #[test]
    fn node_above_centroid_is_a_correspondence() {
        let p = vec![v(0., 0., 0.), v(0.1, 0., 0.), v(0., 0.1, 0.), v(0.1 / 3., 0.1 / 3., 0.005)];
        let m = TriMesh::build(&p, vec![[0, 1, 2]], 1.0).unwrap();
        let bvh = Bvh::over_faces(&m, &p, 0.01).unwrap();
        let c = find_cloth_correspondences(&m, &p, None, &bvh, 0.01);
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].node, c[0].face), (3, 0));
        assert!((c[0].d_curr - 0.005).abs() < 1e-15);
        assert!((c[0].d_prev - 0.01).abs() < 1e-15);
    }

    #[test]
    fn projection_outside_face_is_ignored() {
        let p = vec![v(0., 0., 0.), v(0.1, 0., 0.), v(0., 0.1, 0.), v(0.2, 0.2, 0.005)];
        let m = TriMesh::build(&p, vec![[0, 1, 2]], 1.0).unwrap();
        let bvh = Bvh::over_faces(&m, &p, 0.01).unwrap();
        assert!(find_cloth_correspondences(&m, &p, None, &bvh, 0.01).is_empty());
    }

    #[test]
    fn body_edge_picks_nearest_within_threshold() {
        let body = vec![v(0., 0., 0.), v(0.06, 0., 0.), v(0., 0.06, 0.)];
        let garment = vec![v(0.01, 0., 0.), v(0.5, 0.5, 0.5)];
        let bvh = Bvh::over_points(&body, 0.0).unwrap();
        assert_eq!(find_body_edges(&garment, &body, &bvh, DEFAULT_BODY_EPSILON), vec![(0, 0)]);
        let far = vec![v(0.03, 0.03, 0.03)];
        assert!(find_body_edges(&far, &[v(0., 0., 0.)], &Bvh::over_points(&[v(0., 0., 0.)], 0.0).unwrap(), 0.03).is_empty());
    }
}
