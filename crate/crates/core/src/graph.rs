//! Per-frame interaction graph: garment edges, body edges, and world edges
//! split into repulsive and non-repulsive sets.

use serde::{Deserialize, Serialize};

use crate::collision::{
    detect_intersections, find_body_edges, find_cloth_correspondences, Bvh, Correspondence, TriPairIntersection,
    DEFAULT_BODY_EPSILON, DEFAULT_CLOTH_EPSILON,
};
use crate::contours::{
    assign_insides, classify_correspondences, classify_nodes, make_contours, remove_nested, IntersectionContour,
    NodeClassification,
};
use crate::mesh::TriMesh;
use crate::Vec3;

/// A kinematic obstacle at one instant.
#[derive(Debug, Clone, Copy)]
pub struct BodyFrame<'a> {
    pub mesh: &'a TriMesh,
    pub positions: &'a [Vec3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub eps_cloth: f64,
    pub eps_body: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            eps_cloth: DEFAULT_CLOTH_EPSILON,
            eps_body: DEFAULT_BODY_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldGraph {
    pub garment_edges: Vec<[usize; 2]>,
    pub body_edges: Vec<(usize, usize)>,
    pub repulsive_world: Vec<Correspondence>,
    pub non_repulsive_world: Vec<Correspondence>,
    pub intersections: Vec<TriPairIntersection>,
    pub contours: Vec<IntersectionContour>,
    pub node_class: NodeClassification,
}

impl WorldGraph {
    pub fn empty(vertex_count: usize) -> Self {
        Self {
            garment_edges: Vec::new(),
            body_edges: Vec::new(),
            repulsive_world: Vec::new(),
            non_repulsive_world: Vec::new(),
            intersections: Vec::new(),
            contours: Vec::new(),
            node_class: NodeClassification::all_repelled(vertex_count),
        }
    }

    pub fn closed_contour_count(&self) -> usize {
        self.contours.iter().filter(|c| c.closed).count()
    }

    pub fn open_contour_count(&self) -> usize {
        self.contours.len() - self.closed_contour_count()
    }
}

/// Builds the graph in the fixed order: mesh edges, body edges, intersection
/// detection, contour assembly (with inside/outside split), nested-contour
/// removal, cloth correspondences, classification.
pub fn build_input_graph(
    garment: &TriMesh,
    positions: &[Vec3],
    prev_positions: Option<&[Vec3]>,
    body: Option<BodyFrame<'_>>,
    config: &GraphConfig,
) -> WorldGraph {
    if garment.face_count() == 0 {
        return WorldGraph {
            garment_edges: garment.edges().to_vec(),
            ..WorldGraph::empty(garment.vertex_count())
        };
    }
    let garment_edges = garment.edges().to_vec();

    let body_edges = match body {
        Some(b) if !b.positions.is_empty() => {
            let bvh = Bvh::over_points(b.positions, 0.0).expect("non-empty body");
            find_body_edges(positions, b.positions, &bvh, config.eps_body)
        }
        _ => Vec::new(),
    };

    let dcd_bvh = Bvh::over_faces(garment, positions, 0.0).expect("non-empty garment");
    let intersections = detect_intersections(garment, positions, &dcd_bvh);
    let mut contours = make_contours(&intersections, garment);
    assign_insides(&mut contours, &intersections, garment);
    let contours = remove_nested(contours);

    let prox_bvh = Bvh::over_faces(garment, positions, config.eps_cloth).expect("non-empty garment");
    let correspondences = find_cloth_correspondences(garment, positions, prev_positions, &prox_bvh, config.eps_cloth);
    let node_class = classify_nodes(&contours, garment.vertex_count());
    let (repulsive_world, non_repulsive_world) = classify_correspondences(correspondences, &node_class, garment);

    WorldGraph {
        garment_edges,
        body_edges,
        repulsive_world,
        non_repulsive_world,
        intersections,
        contours,
        node_class,
    }
}
