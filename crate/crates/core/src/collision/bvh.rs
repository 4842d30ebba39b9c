use crate::mesh::TriMesh;
use crate::Vec3;

use super::CollisionError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_point(p: Vec3) -> Self {
        Self { min: p, max: p }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(*p);
        }
        b
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.inf(&p);
        self.max = self.max.sup(&p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflated(&self, margin: f64) -> Aabb {
        debug_assert!(margin >= 0.0);
        Aabb {
            min: self.min - Vec3::repeat(margin),
            max: self.max + Vec3::repeat(margin),
        }
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvhNodeKind {
    Inner { left: usize, right: usize },
    Leaf { start: usize, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub kind: BvhNodeKind,
}

/// Bounding volume hierarchy over an indexed set of boxes.
///
/// Nodes are stored in pre-order, so children always follow their parent and a
/// reverse sweep refits bottom-up.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<usize>,
    leaf_size: usize,
}

pub const DEFAULT_LEAF_SIZE: usize = 4;

impl Bvh {
    /// Median-split build over the centroid extent's longest axis.
    pub fn build(boxes: &[Aabb], leaf_size: usize) -> Result<Self, CollisionError> {
        if boxes.is_empty() {
            return Err(CollisionError::EmptyMesh);
        }
        let leaf_size = leaf_size.max(1);
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / leaf_size + 1);
        build_recursive(boxes, &mut order, 0, boxes.len(), leaf_size, &mut nodes);
        Ok(Self {
            nodes,
            order,
            leaf_size,
        })
    }

    /// Hierarchy over the faces of `mesh`, each box inflated by `margin`.
    pub fn over_faces(mesh: &TriMesh, positions: &[Vec3], margin: f64) -> Result<Self, CollisionError> {
        Self::build(&face_boxes(mesh, positions, margin), DEFAULT_LEAF_SIZE)
    }

    /// Hierarchy over points, each box inflated by `margin`.
    pub fn over_points(points: &[Vec3], margin: f64) -> Result<Self, CollisionError> {
        let boxes: Vec<Aabb> = points.iter().map(|p| Aabb::from_point(*p).inflated(margin)).collect();
        Self::build(&boxes, DEFAULT_LEAF_SIZE)
    }

    /// Recomputes node bounds for new primitive boxes without changing the tree.
    pub fn refit(&mut self, boxes: &[Aabb]) {
        assert_eq!(boxes.len(), self.order.len(), "refit with a different primitive count");
        for i in (0..self.nodes.len()).rev() {
            let bounds = match self.nodes[i].kind {
                BvhNodeKind::Leaf { start, count } => {
                    let mut b = Aabb::empty();
                    for &p in &self.order[start..start + count] {
                        b = b.union(&boxes[p]);
                    }
                    b
                }
                BvhNodeKind::Inner { left, right } => self.nodes[left].bounds.union(&self.nodes[right].bounds),
            };
            self.nodes[i].bounds = bounds;
        }
    }

    pub fn refit_faces(&mut self, mesh: &TriMesh, positions: &[Vec3], margin: f64) {
        self.refit(&face_boxes(mesh, positions, margin));
    }

    pub fn refit_points(&mut self, points: &[Vec3], margin: f64) {
        let boxes: Vec<Aabb> = points.iter().map(|p| Aabb::from_point(*p).inflated(margin)).collect();
        self.refit(&boxes);
    }

    /// Appends the indices of every primitive whose box overlaps `query`.
    /// Output order follows the tree layout; callers sort when they need to.
    pub fn query(&self, query: &Aabb, out: &mut Vec<usize>) {
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !node.bounds.overlaps(query) {
                continue;
            }
            match node.kind {
                BvhNodeKind::Leaf { start, count } => out.extend_from_slice(&self.order[start..start + count]),
                BvhNodeKind::Inner { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }

    /// Visits nodes in order of increasing box distance, pruning with `bound`.
    ///
    /// `visit` receives a primitive index and returns the updated pruning
    /// distance. Used for nearest-neighbour queries.
    pub fn nearest(&self, point: Vec3, mut bound: f64, mut visit: impl FnMut(usize) -> f64) {
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if box_distance(&node.bounds, point) > bound {
                continue;
            }
            match node.kind {
                BvhNodeKind::Leaf { start, count } => {
                    for &p in &self.order[start..start + count] {
                        bound = bound.min(visit(p));
                    }
                }
                BvhNodeKind::Inner { left, right } => {
                    let dl = box_distance(&self.nodes[left].bounds, point);
                    let dr = box_distance(&self.nodes[right].bounds, point);
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn primitive_count(&self) -> usize {
        self.order.len()
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    /// Primitive indices stored in each leaf, in node order.
    pub fn leaves(&self) -> impl Iterator<Item = &[usize]> {
        self.nodes.iter().filter_map(|n| match n.kind {
            BvhNodeKind::Leaf { start, count } => Some(&self.order[start..start + count]),
            BvhNodeKind::Inner { .. } => None,
        })
    }
}

fn box_distance(b: &Aabb, p: Vec3) -> f64 {
    let mut d2 = 0.0;
    for k in 0..3 {
        let excess = (b.min[k] - p[k]).max(p[k] - b.max[k]).max(0.0);
        d2 += excess * excess;
    }
    d2.sqrt()
}

pub fn face_boxes(mesh: &TriMesh, positions: &[Vec3], margin: f64) -> Vec<Aabb> {
    mesh.faces()
        .iter()
        .map(|f| Aabb::from_points(f.iter().map(|&v| &positions[v])).inflated(margin))
        .collect()
}

fn build_recursive(
    boxes: &[Aabb],
    order: &mut [usize],
    start: usize,
    end: usize,
    leaf_size: usize,
    nodes: &mut Vec<BvhNode>,
) -> usize {
    let slice = &mut order[start..end];
    let mut bounds = Aabb::empty();
    let mut centroids = Aabb::empty();
    for &p in slice.iter() {
        bounds = bounds.union(&boxes[p]);
        centroids.grow(boxes[p].center());
    }
    let index = nodes.len();
    let count = end - start;
    if count <= leaf_size {
        nodes.push(BvhNode {
            bounds,
            kind: BvhNodeKind::Leaf { start, count },
        });
        return index;
    }
    let extent = centroids.max - centroids.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    // Ties broken by primitive index so the tree is a pure function of input.
    slice.sort_by(|&a, &b| {
        boxes[a].center()[axis]
            .total_cmp(&boxes[b].center()[axis])
            .then(a.cmp(&b))
    });
    nodes.push(BvhNode {
        bounds,
        kind: BvhNodeKind::Leaf { start, count },
    });
    let mid = start + count / 2;
    let left = build_recursive(boxes, order, start, mid, leaf_size, nodes);
    let right = build_recursive(boxes, order, mid, end, leaf_size, nodes);
    nodes[index].kind = BvhNodeKind::Inner { left, right };
    index
}
