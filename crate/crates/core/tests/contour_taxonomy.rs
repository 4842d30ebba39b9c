mod common;

use std::collections::BTreeSet;

use cloth_untangle::collision::{detect_intersections, Bvh};
use cloth_untangle::contours::{assign_insides, classify_nodes, make_contours, remove_nested, NodeClass};
use cloth_untangle::graph::{build_input_graph, GraphConfig};
use cloth_untangle::mesh::TriMesh;
use cloth_untangle::scenes::{generate, SceneKind, SceneRecipe};
use cloth_untangle::Vec3;
use common::*;

fn non_repelled(mesh: &TriMesh, positions: &[Vec3]) -> (BTreeSet<usize>, usize, usize) {
    let g = build_input_graph(mesh, positions, None, None, &GraphConfig::default());
    let set = g
        .node_class
        .per_node
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == NodeClass::NonRepelled)
        .map(|(i, _)| i)
        .collect();
    (set, g.open_contour_count(), g.closed_contour_count())
}

fn scene(kind: SceneKind, seed: u64, resolution: usize) -> (TriMesh, Vec<Vec3>) {
    let mut recipe = SceneRecipe::new(kind, seed);
    recipe.resolution = resolution;
    let s = generate(&recipe).unwrap();
    let (m, p) = s.garment.into_trimesh(1.0).unwrap();
    (m, p)
}

#[test]
fn open_contours_mark_touched_nodes() {
    let mut r = rng(20);
    for case in 0..10 {
        let s = crossing_sheets(&mut r, 6);
        let m = TriMesh::build(&s.positions, s.faces, 1.0).unwrap();
        let (set, open, closed) = non_repelled(&m, &s.positions);
        assert!(open >= 1, "case {case}");
        assert_eq!(closed, 0, "case {case}");
        assert_eq!(set, touched_oracle(&m, &s.positions), "case {case}");
    }
}

#[test]
fn closed_contour_marks_the_smaller_side() {
    for seed in 0..5 {
        let (m, p) = scene(SceneKind::PiercedSheet, seed, 20);
        let (set, open, closed) = non_repelled(&m, &p);
        assert_eq!((open, closed), (0, 1), "seed {seed}");
        let expected = closed_contour_oracle(&m, &p);
        assert!(!expected.is_empty());
        assert_eq!(set, expected, "seed {seed}");
    }
}

#[test]
fn nested_inner_contour_is_removed() {
    for seed in 0..3 {
        let (m, p) = scene(SceneKind::NestedPierce, seed, 40);
        let bvh = Bvh::over_faces(&m, &p, 0.0).unwrap();
        let hits = detect_intersections(&m, &p, &bvh);
        let mut contours = make_contours(&hits, &m);
        assign_insides(&mut contours, &hits, &m);
        assert_eq!(contours.iter().filter(|c| c.closed).count(), 2, "seed {seed}");
        let outer = contours
            .iter()
            .max_by_key(|c| c.inside_nodes.len())
            .unwrap()
            .clone();
        let kept = remove_nested(contours);
        assert_eq!(kept.len(), 1, "seed {seed}");
        assert_eq!(kept[0], outer);
        let classes = classify_nodes(&kept, m.vertex_count());
        let set: BTreeSet<usize> = (0..m.vertex_count())
            .filter(|&v| classes.per_node[v] == NodeClass::NonRepelled)
            .collect();
        assert_eq!(set, closed_contour_oracle(&m, &p), "seed {seed}");
        assert_eq!(non_repelled(&m, &p).0, set);
    }
}

#[test]
fn separated_sheets_are_all_repelled() {
    let (m, p) = scene(SceneKind::StackedSheets, 0, 10);
    let (set, open, closed) = non_repelled(&m, &p);
    assert!(set.is_empty());
    assert_eq!((open, closed), (0, 0));
}
