//! Intersection contours and the repelled / non-repelled node taxonomy.
//!
//! Intersecting face pairs are chained into contours through the crossings
//! they share. A closed contour cuts the surfaces it lies on; the smaller part
//! of each cut component is its inside. Nodes touched by open contours or
//! inside closed ones are not repelled, and only correspondences made purely
//! of repelled nodes receive the repulsion penalty.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{Correspondence, TriPairIntersection};
use crate::mesh::TriMesh;
use crate::Vec3;

/// Crossing points closer than this (m) are the same contour vertex.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContourError {
    #[error("removing the cut edges leaves every touched component connected")]
    SplitFailed,
    #[error("contour is open")]
    NotClosed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionContour {
    /// Indices into the intersection list, in chain order.
    pub segments: Vec<usize>,
    pub closed: bool,
    pub inside_nodes: BTreeSet<usize>,
    pub outside_nodes: BTreeSet<usize>,
    pub touched_nodes: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeClass {
    Repelled,
    NonRepelled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeClassification {
    pub per_node: Vec<NodeClass>,
}

impl NodeClassification {
    pub fn all_repelled(vertex_count: usize) -> Self {
        Self {
            per_node: vec![NodeClass::Repelled; vertex_count],
        }
    }

    pub fn is_repelled(&self, v: usize) -> bool {
        self.per_node[v] == NodeClass::Repelled
    }

    pub fn non_repelled_count(&self) -> usize {
        self.per_node.iter().filter(|c| **c == NodeClass::NonRepelled).count()
    }
}

type CrossingKey = (usize, usize, usize);

/// Links between intersections that share a crossing.
struct ChainLinks {
    /// For each intersection and each of its two crossings, the partners
    /// sharing that crossing.
    partners: Vec<[Vec<usize>; 2]>,
}

impl ChainLinks {
    fn new(intersections: &[TriPairIntersection]) -> Self {
        let mut by_key: HashMap<CrossingKey, Vec<(usize, usize)>> = HashMap::new();
        for (i, hit) in intersections.iter().enumerate() {
            for (j, c) in hit.crossings.iter().enumerate() {
                by_key.entry(c.key()).or_default().push((i, j));
            }
        }
        let mut partners: Vec<[Vec<usize>; 2]> = vec![[Vec::new(), Vec::new()]; intersections.len()];
        for group in by_key.values() {
            for &(i, j) in group {
                for &(k, l) in group {
                    if k == i {
                        continue;
                    }
                    let a = intersections[i].crossings[j].point;
                    let b = intersections[k].crossings[l].point;
                    if (a - b).norm() <= CHAIN_TOLERANCE {
                        partners[i][j].push(k);
                    }
                }
            }
        }
        for p in &mut partners {
            p[0].sort_unstable();
            p[1].sort_unstable();
        }
        Self { partners }
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.partners[i][0].iter().chain(self.partners[i][1].iter()).copied()
    }
}

fn touched_nodes(segments: &[usize], intersections: &[TriPairIntersection], mesh: &TriMesh) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &s in segments {
        let hit = &intersections[s];
        out.extend(mesh.face(hit.face_a));
        out.extend(mesh.face(hit.face_b));
    }
    out
}

/// Chains intersections into contours. Every intersection lands in exactly
/// one contour; contours are ordered by their lowest segment index.
///
/// A chain is closed when every segment links to exactly one neighbour through
/// each of its two crossings. Branching at non-manifold edges makes the chain
/// open.
pub fn make_contours(intersections: &[TriPairIntersection], mesh: &TriMesh) -> Vec<IntersectionContour> {
    let links = ChainLinks::new(intersections);
    let mut assigned = vec![false; intersections.len()];
    let mut contours = Vec::new();

    for seed in 0..intersections.len() {
        if assigned[seed] {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = VecDeque::from([seed]);
        assigned[seed] = true;
        while let Some(i) = queue.pop_front() {
            component.push(i);
            for k in links.neighbours(i) {
                if !assigned[k] {
                    assigned[k] = true;
                    queue.push_back(k);
                }
            }
        }
        component.sort_unstable();

        let closed = component.len() >= 3
            && component
                .iter()
                .all(|&i| links.partners[i][0].len() == 1 && links.partners[i][1].len() == 1);
        let segments = order_chain(&component, &links, closed);
        contours.push(IntersectionContour {
            touched_nodes: touched_nodes(&segments, intersections, mesh),
            segments,
            closed,
            inside_nodes: BTreeSet::new(),
            outside_nodes: BTreeSet::new(),
        });
    }
    contours
}

fn order_chain(component: &[usize], links: &ChainLinks, closed: bool) -> Vec<usize> {
    let start = if closed {
        component[0]
    } else {
        // Prefer a chain end: a segment with a crossing nobody else shares.
        component
            .iter()
            .copied()
            .find(|&i| links.partners[i][0].is_empty() || links.partners[i][1].is_empty())
            .unwrap_or(component[0])
    };
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut order = Vec::with_capacity(component.len());
    let mut current = Some(start);
    while let Some(i) = current {
        visited.insert(i);
        order.push(i);
        current = links.neighbours(i).find(|k| !visited.contains(k));
    }
    // Branches of a non-manifold chain follow in index order.
    for &i in component {
        if !visited.contains(&i) {
            order.push(i);
        }
    }
    order
}

/// Inside and outside node sets of a closed contour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub inside: BTreeSet<usize>,
    pub outside: BTreeSet<usize>,
}

/// Cuts the surface along a closed contour and flood-fills the pieces.
///
/// Mesh edges crossed an odd number of times by the contour are removed from
/// the vertex graph. Each originally connected component touched by the
/// contour that falls apart contributes its largest part to the outside and
/// every other part to the inside. Between equally large parts, the one with
/// the lowest vertex index is inside.
pub fn split_by_closed_contour(
    contour: &IntersectionContour,
    intersections: &[TriPairIntersection],
    mesh: &TriMesh,
) -> Result<Split, ContourError> {
    if !contour.closed {
        return Err(ContourError::NotClosed);
    }
    split_along(contour, intersections, mesh)
}

/// The same cut and flood fill for any contour. An open contour that runs
/// from boundary to boundary also separates its surfaces.
pub fn split_along(
    contour: &IntersectionContour,
    intersections: &[TriPairIntersection],
    mesh: &TriMesh,
) -> Result<Split, ContourError> {
    let mut crossed: HashMap<[usize; 2], usize> = HashMap::new();
    let mut seen_keys = BTreeSet::new();
    for &s in &contour.segments {
        for c in &intersections[s].crossings {
            if seen_keys.insert(c.key()) {
                *crossed.entry(c.edge).or_default() += 1;
            }
        }
    }
    let mut is_cut = vec![false; mesh.edges().len()];
    for (edge, count) in crossed {
        if count % 2 == 1 {
            if let Some(e) = mesh.edge_id(edge[0], edge[1]) {
                is_cut[e] = true;
            }
        }
    }

    let original = vertex_components(mesh, None);
    let cut = vertex_components(mesh, Some(&is_cut));

    // Parts of the cut graph grouped by the original component they came from.
    let mut groups: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    for &v in &contour.touched_nodes {
        groups.entry(original[v]).or_default().insert(cut[v]);
    }
    let mut part_nodes: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in 0..mesh.vertex_count() {
        if groups.get(&original[v]).is_some_and(|parts| parts.contains(&cut[v])) {
            part_nodes.entry(cut[v]).or_default().push(v);
        }
    }

    let mut inside = BTreeSet::new();
    let mut outside = BTreeSet::new();
    let mut keys: Vec<usize> = groups.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let parts = &groups[&key];
        if parts.len() < 2 {
            continue;
        }
        // Vertices are pushed in increasing order, so nodes[0] is the minimum.
        let outer = parts
            .iter()
            .max_by_key(|p| (part_nodes[p].len(), part_nodes[p][0]))
            .copied()
            .expect("non-empty");
        for p in parts {
            let target = if *p == outer { &mut outside } else { &mut inside };
            target.extend(part_nodes[p].iter().copied());
        }
    }
    if inside.is_empty() {
        return Err(ContourError::SplitFailed);
    }
    Ok(Split { inside, outside })
}

/// Connected-component label per vertex over mesh edges, skipping edges
/// flagged in `removed`.
pub fn vertex_components(mesh: &TriMesh, removed: Option<&[bool]>) -> Vec<usize> {
    const UNSET: usize = usize::MAX;
    let mut label = vec![UNSET; mesh.vertex_count()];
    let mut next = 0;
    let mut stack = Vec::new();
    for seed in 0..mesh.vertex_count() {
        if label[seed] != UNSET {
            continue;
        }
        label[seed] = next;
        stack.push(seed);
        while let Some(v) = stack.pop() {
            for &e in mesh.vertex_edges(v) {
                if removed.is_some_and(|r| r[e]) {
                    continue;
                }
                let [a, b] = mesh.edges()[e];
                let w = if a == v { b } else { a };
                if label[w] == UNSET {
                    label[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    label
}

/// Runs the split for every closed contour, demoting failures to open.
pub fn assign_insides(contours: &mut [IntersectionContour], intersections: &[TriPairIntersection], mesh: &TriMesh) {
    for c in contours.iter_mut().filter(|c| c.closed) {
        match split_by_closed_contour(c, intersections, mesh) {
            Ok(split) => {
                c.inside_nodes = split.inside;
                c.outside_nodes = split.outside;
            }
            Err(_) => {
                log::debug!("closed contour with {} segments did not split; treating as open", c.segments.len());
                c.closed = false;
                c.inside_nodes.clear();
                c.outside_nodes.clear();
            }
        }
    }
}

/// Drops closed contours whose touched nodes all lie inside another closed
/// contour. Open contours are kept.
pub fn remove_nested(contours: Vec<IntersectionContour>) -> Vec<IntersectionContour> {
    let contained = |c: &IntersectionContour, d: &IntersectionContour| {
        !d.inside_nodes.is_empty() && c.touched_nodes.is_subset(&d.inside_nodes)
    };
    let keep: Vec<bool> = contours
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if !c.closed {
                return true;
            }
            !contours.iter().enumerate().any(|(j, d)| {
                // Mutually nested contours: the lower index survives.
                j != i && d.closed && contained(c, d) && !(contained(d, c) && i < j)
            })
        })
        .collect();
    contours
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

/// Non-repelled nodes are those touched by an open contour or inside a closed
/// one.
pub fn classify_nodes(contours: &[IntersectionContour], vertex_count: usize) -> NodeClassification {
    let mut out = NodeClassification::all_repelled(vertex_count);
    for c in contours {
        let nodes = if c.closed { &c.inside_nodes } else { &c.touched_nodes };
        for &v in nodes {
            out.per_node[v] = NodeClass::NonRepelled;
        }
    }
    out
}

/// Splits correspondences into (repulsive, non-repulsive) and sets their flag.
/// A correspondence repels only when its node and all face vertices do.
pub fn classify_correspondences(
    correspondences: Vec<Correspondence>,
    classes: &NodeClassification,
    mesh: &TriMesh,
) -> (Vec<Correspondence>, Vec<Correspondence>) {
    let mut repulsive = Vec::new();
    let mut non_repulsive = Vec::new();
    for mut c in correspondences {
        c.repulsive = classes.is_repelled(c.node) && mesh.face(c.face).iter().all(|&v| classes.is_repelled(v));
        if c.repulsive {
            repulsive.push(c);
        } else {
            non_repulsive.push(c);
        }
    }
    (repulsive, non_repulsive)
}

/// Ordered crossing points along a contour, for visualisation.
///
/// Closed contours repeat their first point at the end.
pub fn contour_polyline(contour: &IntersectionContour, intersections: &[TriPairIntersection]) -> Vec<Vec3> {
    let segs = &contour.segments;
    if segs.is_empty() {
        return Vec::new();
    }
    if segs.len() == 1 {
        let c = &intersections[segs[0]].crossings;
        return vec![c[0].point, c[1].point];
    }
    let shared = |a: usize, b: usize| -> Option<usize> {
        let ka = intersections[a].crossings.map(|c| c.key());
        let kb = intersections[b].crossings.map(|c| c.key());
        (0..2).find(|&j| kb.contains(&ka[j]))
    };
    let mut points = Vec::with_capacity(segs.len() + 1);
    // Leading point: the first segment's crossing not shared with the second.
    let first_link = shared(segs[0], segs[1]).unwrap_or(1);
    points.push(intersections[segs[0]].crossings[1 - first_link].point);
    for w in segs.windows(2) {
        match shared(w[0], w[1]) {
            Some(j) => points.push(intersections[w[0]].crossings[j].point),
            None => {
                // Branch jump in a non-manifold chain.
                points.push(intersections[w[1]].crossings[0].point);
            }
        }
    }
    let last = *segs.last().unwrap();
    let prev = segs[segs.len() - 2];
    let back_link = shared(last, prev).unwrap_or(0);
    points.push(intersections[last].crossings[1 - back_link].point);
    points
}
