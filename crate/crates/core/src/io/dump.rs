use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::collision::Correspondence;
use crate::contours::{contour_polyline, NodeClass};
use crate::graph::WorldGraph;

use super::IoError;

/// JSON view of a world graph.
#[derive(Debug, Serialize)]
pub struct GraphDump<'a> {
    pub garment_edge_count: usize,
    pub body_edges: &'a [(usize, usize)],
    pub repulsive_world: &'a [Correspondence],
    pub non_repulsive_world: &'a [Correspondence],
    pub intersecting_pairs: Vec<[usize; 2]>,
    pub open_contours: usize,
    pub closed_contours: usize,
    pub non_repelled_nodes: Vec<usize>,
}

impl<'a> GraphDump<'a> {
    pub fn new(graph: &'a WorldGraph) -> Self {
        Self {
            garment_edge_count: graph.garment_edges.len(),
            body_edges: &graph.body_edges,
            repulsive_world: &graph.repulsive_world,
            non_repulsive_world: &graph.non_repulsive_world,
            intersecting_pairs: graph.intersections.iter().map(|h| [h.face_a, h.face_b]).collect(),
            open_contours: graph.open_contour_count(),
            closed_contours: graph.closed_contour_count(),
            non_repelled_nodes: graph
                .node_class
                .per_node
                .iter()
                .enumerate()
                .filter(|(_, c)| **c == NodeClass::NonRepelled)
                .map(|(i, _)| i)
                .collect(),
        }
    }
}

pub fn write_graph_json(path: &Path, graph: &WorldGraph) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(&GraphDump::new(graph)).expect("graph serialises");
    fs::write(path, text).map_err(IoError::at(path))
}

/// Every contour as an OBJ polyline (`l` record), one `o` per contour.
/// Closed contours repeat their first point at the end.
pub fn write_contours_obj(path: &Path, graph: &WorldGraph) -> Result<(), IoError> {
    let mut out = String::new();
    let mut base = 1;
    for (k, c) in graph.contours.iter().enumerate() {
        let pts = contour_polyline(c, &graph.intersections);
        if pts.is_empty() {
            continue;
        }
        let _ = writeln!(out, "o contour{k}_{}", if c.closed { "closed" } else { "open" });
        for p in &pts {
            let _ = writeln!(out, "v {:?} {:?} {:?}", p.x, p.y, p.z);
        }
        let _ = write!(out, "l");
        for i in 0..pts.len() {
            let _ = write!(out, " {}", base + i);
        }
        out.push('\n');
        base += pts.len();
    }
    fs::write(path, out).map_err(IoError::at(path))
}
