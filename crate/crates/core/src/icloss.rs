//! Intersection-contour loss: the summed squared length of all intersection
//! segments, and its gradient split into distortional and translational parts.
//!
//! For a crossing of edge `(a, b)` through a host face with centroid `x_Δ` and
//! normal `n`, the crossing point is `p = xₐ + s (x_b − xₐ)` with
//! `s = (n·x_Δ − n·xₐ) / (n·(x_b − xₐ))`. With `n` held fixed, the gradient of
//! `|p₀ − p₁|²` splits into:
//!
//! * distortional: the explicit dependence of `p` on the edge vertices,
//!   `(1 − s)·g` at `a` and `s·g` at `b`, where `g = ∂L/∂p`. It lies along the
//!   segment, inside the intersecting plane, and shortens the contour by
//!   squeezing the triangle.
//! * translational: the path through `s`, `(g·(x_b − xₐ)) ∂s/∂x`, with
//!   `∂s/∂xₐ = −(1 − s) n / (n·(x_b − xₐ))`, `∂s/∂x_b = −s n / (n·(x_b − xₐ))`
//!   and `∂s/∂x_Δ = n / (n·(x_b − xₐ))` shared equally by the host vertices.
//!   It is parallel to the host normal and moves the cloth through the
//!   surface; edge and host receive opposite pushes, so a rigid translation of
//!   the whole scene sees a zero total.

use serde::{Deserialize, Serialize};

use crate::collision::{TriPairIntersection, PARALLEL_TOLERANCE};
use crate::graph::WorldGraph;
use crate::mesh::{face_normal, TriMesh};
use crate::Vec3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcGradientMode {
    #[default]
    TranslationalOnly,
    Full,
    DistortionalOnly,
}

impl IcGradientMode {
    fn weights(self) -> (f64, f64) {
        match self {
            IcGradientMode::TranslationalOnly => (0.0, 1.0),
            IcGradientMode::Full => (1.0, 1.0),
            IcGradientMode::DistortionalOnly => (1.0, 0.0),
        }
    }
}

/// Σ |p₀ − p₁|² over the recorded crossing points (m²).
pub fn ic_loss_value(intersections: &[TriPairIntersection]) -> f64 {
    intersections
        .iter()
        .map(|hit| (hit.crossings[0].point - hit.crossings[1].point).norm_squared())
        .fold(0.0, |a, b| a + b)
}

/// A crossing whose host normal is frozen; the host plane passes through the
/// live centroid of the host face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenCrossing {
    pub edge: [usize; 2],
    pub host: [usize; 3],
    pub normal: Vec3,
}

impl FrozenCrossing {
    pub fn plane_point(&self, positions: &[Vec3]) -> Vec3 {
        (positions[self.host[0]] + positions[self.host[1]] + positions[self.host[2]]) / 3.0
    }

    /// `(s, p, denominator)` at `positions`, or `None` when the edge is
    /// parallel to the frozen plane.
    pub fn evaluate(&self, positions: &[Vec3]) -> Option<(f64, Vec3, f64)> {
        let xa = positions[self.edge[0]];
        let xb = positions[self.edge[1]];
        let dir = xb - xa;
        let denom = self.normal.dot(&dir);
        if denom.abs() < PARALLEL_TOLERANCE * dir.norm() || denom == 0.0 {
            return None;
        }
        let s = (self.normal.dot(&self.plane_point(positions)) - self.normal.dot(&xa)) / denom;
        Some((s, xa + dir * s, denom))
    }
}

/// Gradient parts of one crossing: at `edge[0]`, `edge[1]`, and the value
/// shared by each of the three host vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingGradient {
    pub edge: [usize; 2],
    pub host: [usize; 3],
    pub normal: Vec3,
    pub distortional: [Vec3; 2],
    pub translational: [Vec3; 2],
    pub translational_host: Vec3,
}

/// The contour loss with every host normal frozen at the positions it was
/// built from; used for gradients and for line-search evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IcObjective {
    pairs: Vec<[FrozenCrossing; 2]>,
    /// Intersections dropped because a crossing was parallel to its host.
    pub skipped: usize,
}

impl IcObjective {
    pub fn freeze(intersections: &[TriPairIntersection], mesh: &TriMesh, positions: &[Vec3]) -> Self {
        let mut pairs = Vec::with_capacity(intersections.len());
        let mut skipped = 0;
        for hit in intersections {
            let frozen = hit.crossings.map(|c| {
                let normal = face_normal(mesh, c.host_face, positions).ok()?;
                let f = FrozenCrossing {
                    edge: c.edge,
                    host: mesh.face(c.host_face),
                    normal,
                };
                f.evaluate(positions).map(|_| f)
            });
            match frozen {
                [Some(c0), Some(c1)] => pairs.push([c0, c1]),
                _ => skipped += 1,
            }
        }
        Self { pairs, skipped }
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Vertices touched by every frozen crossing: both edge ends and the host
    /// face.
    pub fn crossing_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs
            .iter()
            .flat_map(|p| p.iter().flat_map(|c| c.edge.into_iter().chain(c.host)))
    }

    /// Loss value with crossing points recomputed from `positions`.
    pub fn value(&self, positions: &[Vec3]) -> f64 {
        self.pairs
            .iter()
            .map(|[c0, c1]| match (c0.evaluate(positions), c1.evaluate(positions)) {
                (Some((_, p0, _)), Some((_, p1, _))) => (p0 - p1).norm_squared(),
                _ => 0.0,
            })
            .sum()
    }

    /// Per-crossing gradient parts, two entries per intersection.
    pub fn crossing_gradients(&self, positions: &[Vec3]) -> Vec<CrossingGradient> {
        self.oriented_crossing_gradients(positions, |_| None)
    }

    /// Like [`Self::crossing_gradients`], but where `side(edge)` names the
    /// endpoint lying on the enclosed side of the contour (`Some(true)` for
    /// `edge[0]`), the translational part is signed so that descent slides
    /// the crossing towards that endpoint. Its magnitude and direction line
    /// are unchanged.
    pub fn oriented_crossing_gradients(
        &self,
        positions: &[Vec3],
        side: impl Fn([usize; 2]) -> Option<bool>,
    ) -> Vec<CrossingGradient> {
        let mut out = Vec::with_capacity(2 * self.pairs.len());
        for [c0, c1] in &self.pairs {
            let (Some((s0, p0, den0)), Some((s1, p1, den1))) = (c0.evaluate(positions), c1.evaluate(positions)) else {
                continue;
            };
            let seg = p0 - p1;
            for (c, s, den, g) in [(c0, s0, den0, seg * 2.0), (c1, s1, den1, seg * -2.0)] {
                let dir = positions[c.edge[1]] - positions[c.edge[0]];
                let raw = g.dot(&dir);
                // Descent changes s by −raw·(positive)/den², so a positive
                // `raw` moves the crossing towards edge[0].
                let raw = match side(c.edge) {
                    Some(true) => raw.abs(),
                    Some(false) => -raw.abs(),
                    None => raw,
                };
                let along = raw / den;
                out.push(CrossingGradient {
                    edge: c.edge,
                    host: c.host,
                    normal: c.normal,
                    distortional: [g * (1.0 - s), g * s],
                    translational: [c.normal * (-along * (1.0 - s)), c.normal * (-along * s)],
                    translational_host: c.normal * (along / 3.0),
                });
            }
        }
        out
    }

    /// Per-vertex gradient of the selected parts, accumulated in crossing order.
    pub fn gradient(&self, positions: &[Vec3], mode: IcGradientMode) -> Vec<Vec3> {
        self.oriented_gradient(positions, mode, |_| None)
    }

    /// Per-vertex accumulation of [`Self::oriented_crossing_gradients`].
    pub fn oriented_gradient(
        &self,
        positions: &[Vec3],
        mode: IcGradientMode,
        side: impl Fn([usize; 2]) -> Option<bool>,
    ) -> Vec<Vec3> {
        let (wd, wt) = mode.weights();
        let mut grad = vec![Vec3::zeros(); positions.len()];
        for cg in self.oriented_crossing_gradients(positions, side) {
            for k in 0..2 {
                grad[cg.edge[k]] += cg.distortional[k] * wd + cg.translational[k] * wt;
            }
            for v in cg.host {
                grad[v] += cg.translational_host * wt;
            }
        }
        grad
    }
}

/// Contour-loss gradient for intersections detected at `positions`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcGradient {
    pub gradient: Vec<Vec3>,
    pub skipped: usize,
}

pub fn ic_gradient(
    intersections: &[TriPairIntersection],
    positions: &[Vec3],
    mesh: &TriMesh,
    mode: IcGradientMode,
) -> IcGradient {
    let objective = IcObjective::freeze(intersections, mesh, positions);
    IcGradient {
        gradient: objective.gradient(positions, mode),
        skipped: objective.skipped,
    }
}

/// Displacement field `−λ₂ ∇L_IC` for the intersections stored in `graph`.
pub fn ic_descent_direction(
    graph: &WorldGraph,
    positions: &[Vec3],
    mesh: &TriMesh,
    lambda_ic: f64,
    mode: IcGradientMode,
) -> Vec<Vec3> {
    ic_gradient(&graph.intersections, positions, mesh, mode)
        .gradient
        .into_iter()
        .map(|g| g * -lambda_ic)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::tri_tri_intersect;

    /// Triangle (A=0, B=1, C=2) piercing the plane z = 0 spanned by face 1.
    fn piercing() -> (TriMesh, Vec<Vec3>) {
        let p = vec![
            Vec3::new(0., -1., -1.),
            Vec3::new(0., 1., -1.),
            Vec3::new(0., 0., 1.),
            Vec3::new(-2., -2., 0.),
            Vec3::new(2., -2., 0.),
            Vec3::new(0., 3., 0.),
        ];
        let m = TriMesh::build(&p, vec![[0, 1, 2], [3, 4, 5]], 1.0).unwrap();
        (m, p)
    }

    #[test]
    fn symmetric_crossing_contributes_unit_length() {
        let (m, p) = piercing();
        let hit = tri_tri_intersect(&m, &p, 0, 1).unwrap();
        assert!((ic_loss_value(&[hit]) - 1.0).abs() < 1e-15);
        assert_eq!(ic_loss_value(&[]), 0.0);
    }

    #[test]
    fn parts_are_parallel_and_orthogonal_to_the_plane() {
        let (m, p) = piercing();
        let hit = tri_tri_intersect(&m, &p, 0, 1).unwrap();
        let obj = IcObjective::freeze(&[hit], &m, &p);
        for cg in obj.crossing_gradients(&p) {
            for k in 0..2 {
                assert!(cg.distortional[k].dot(&cg.normal).abs() < 1e-12);
                assert!(cg.translational[k].cross(&cg.normal).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn half_way_crossing_distortional_coefficient() {
        let (m, p) = piercing();
        let hit = tri_tri_intersect(&m, &p, 0, 1).unwrap();
        let obj = IcObjective::freeze(&[hit], &m, &p);
        let seg = hit.crossings[0].point - hit.crossings[1].point;
        let cg = obj.crossing_gradients(&p)[0];
        // 2(1 − s₀)(p₀ − p₁) with s₀ = 0.5
        assert!((cg.distortional[0] - seg).norm() < 1e-15);
    }

    #[test]
    fn no_intersections_no_direction() {
        let (m, p) = piercing();
        let g = ic_gradient(&[], &p, &m, IcGradientMode::TranslationalOnly);
        assert!(g.gradient.iter().all(|v| *v == Vec3::zeros()));
        assert_eq!(g.skipped, 0);
    }
}
