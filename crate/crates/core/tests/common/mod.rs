//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the accelerated code paths it is compared against.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cloth_untangle::collision::tri_tri_intersect;
use cloth_untangle::geometry::barycentric;
use cloth_untangle::mesh::TriMesh;
use cloth_untangle::shapes::{grid_sheet, MeshData};
use cloth_untangle::Vec3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(x: &[Vec3], h: f64, f: impl Fn(&[Vec3]) -> f64) -> Vec<Vec3> {
    let mut work = x.to_vec();
    let mut out = vec![Vec3::zeros(); x.len()];
    for i in 0..x.len() {
        for k in 0..3 {
            let orig = work[i][k];
            work[i][k] = orig + h;
            let fp = f(&work);
            work[i][k] = orig - h;
            let fm = f(&work);
            work[i][k] = orig;
            out[i][k] = (fp - fm) / (2.0 * h);
        }
    }
    out
}

/// ‖a − b‖ / max(‖b‖, floor) over the stacked vectors.
pub fn relative_error(a: &[Vec3], b: &[Vec3], floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y.norm_squared()).sum::<f64>().sqrt();
    diff / norm.max(floor)
}

/// Segment where two triangles intersect, found by clipping each triangle
/// against the other's plane and overlapping the two intervals on the shared
/// line. `None` for disjoint or coplanar triangles.
pub fn tri_tri_segment(a: [Vec3; 3], b: [Vec3; 3]) -> Option<(Vec3, Vec3)> {
    let na = (a[1] - a[0]).cross(&(a[2] - a[0]));
    let nb = (b[1] - b[0]).cross(&(b[2] - b[0]));
    let dir = na.cross(&nb);
    if dir.norm() < 1e-12 * na.norm() * nb.norm() {
        return None;
    }
    let clip = |t: [Vec3; 3], n: Vec3, p0: Vec3| -> Option<(Vec3, Vec3)> {
        let d: Vec<f64> = t.iter().map(|x| (x - p0).dot(&n)).collect();
        let mut pts = Vec::new();
        for k in 0..3 {
            let (i, j) = (k, (k + 1) % 3);
            if d[i] * d[j] < 0.0 {
                let u = d[i] / (d[i] - d[j]);
                pts.push(t[i] + (t[j] - t[i]) * u);
            }
        }
        if pts.len() == 2 {
            Some((pts[0], pts[1]))
        } else {
            None
        }
    };
    let (a0, a1) = clip(a, nb, b[0])?;
    let (b0, b1) = clip(b, na, a[0])?;
    let t = |p: Vec3| p.dot(&dir);
    let (a_lo, a_hi) = if t(a0) <= t(a1) { (a0, a1) } else { (a1, a0) };
    let (b_lo, b_hi) = if t(b0) <= t(b1) { (b0, b1) } else { (b1, b0) };
    let lo = if t(a_lo) >= t(b_lo) { a_lo } else { b_lo };
    let hi = if t(a_hi) <= t(b_hi) { a_hi } else { b_hi };
    if t(hi) - t(lo) <= 0.0 {
        return None;
    }
    Some((lo, hi))
}

/// Every intersecting non-adjacent face pair by exhaustive scan.
pub fn brute_force_pairs(mesh: &TriMesh, positions: &[Vec3]) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    let tri = |f: usize| mesh.face(f).map(|v| positions[v]);
    for f in 0..mesh.face_count() {
        for g in f + 1..mesh.face_count() {
            if mesh.face(f).iter().any(|v| mesh.face(g).contains(v)) {
                continue;
            }
            if tri_tri_segment(tri(f), tri(g)).is_some() {
                out.insert((f, g));
            }
        }
    }
    out
}

/// Node-face pairs within `eps` whose projection is strictly inside the face.
pub fn brute_force_correspondences(mesh: &TriMesh, positions: &[Vec3], eps: f64) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for v in 0..mesh.vertex_count() {
        for f in 0..mesh.face_count() {
            let [a, b, c] = mesh.face(f);
            if v == a || v == b || v == c {
                continue;
            }
            let n = (positions[b] - positions[a]).cross(&(positions[c] - positions[a]));
            if n.norm() < 2e-12 {
                continue;
            }
            let n = n.normalize();
            let d = (positions[v] - positions[a]).dot(&n);
            if d.abs() > eps {
                continue;
            }
            let foot = positions[v] - n * d;
            if let Some(w) = barycentric(foot, positions[a], positions[b], positions[c]) {
                if w.iter().all(|&x| x > 0.0) {
                    out.insert((v, f));
                }
            }
        }
    }
    out
}

/// Nearest body node strictly within `eps` for each garment node.
pub fn brute_force_body_edges(garment: &[Vec3], body: &[Vec3], eps: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (g, x) in garment.iter().enumerate() {
        let mut best: Option<(f64, usize)> = None;
        for (b, y) in body.iter().enumerate() {
            let d = (x - y).norm();
            if d < eps && best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, b));
            }
        }
        if let Some((_, b)) = best {
            out.push((g, b));
        }
    }
    out
}

/// Connected components of the vertex graph after deleting `cut` edges.
pub fn flood_fill_components(mesh: &TriMesh, cut: &BTreeSet<[usize; 2]>) -> Vec<BTreeSet<usize>> {
    let n = mesh.vertex_count();
    let mut adjacency = vec![Vec::new(); n];
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            let key = if a < b { [a, b] } else { [b, a] };
            if !cut.contains(&key) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            comp.insert(v);
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Two overlapping jittered sheets, randomly tilted, so that they cut through
/// each other along a line.
pub fn crossing_sheets(rng: &mut impl Rng, n: usize) -> MeshData {
    let mut out = grid_sheet(n, n, 1.0, 1.0, Vec3::zeros());
    let tilt: f64 = rng.gen_range(0.3..1.2);
    let other = grid_sheet(n, n, 1.0, 1.0, Vec3::zeros()).map_positions(|p| {
        Vec3::new(p.x, p.y * tilt.cos(), p.y * tilt.sin())
    });
    out.append(&other);
    for p in &mut out.positions {
        *p += random_vec(rng, 0.2 / n as f64);
    }
    out
}

/// Whether segment `p`–`q` passes through the interior of triangle `t`,
/// from signed tetrahedron volumes.
pub fn segment_crosses_triangle(p: Vec3, q: Vec3, t: [Vec3; 3]) -> bool {
    let vol = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (b - a).cross(&(c - a)).dot(&(d - a));
    let sp = vol(t[0], t[1], t[2], p);
    let sq = vol(t[0], t[1], t[2], q);
    if sp * sq >= 0.0 {
        return false;
    }
    let e = [vol(p, q, t[0], t[1]), vol(p, q, t[1], t[2]), vol(p, q, t[2], t[0])];
    e.iter().all(|&x| x > 0.0) || e.iter().all(|&x| x < 0.0)
}

/// Mesh edges that pierce some face they are not part of.
pub fn brute_force_pierced_edges(mesh: &TriMesh, positions: &[Vec3]) -> BTreeSet<[usize; 2]> {
    let mut out = BTreeSet::new();
    for &[a, b] in mesh.edges() {
        for f in mesh.faces() {
            if f.contains(&a) || f.contains(&b) {
                continue;
            }
            if segment_crosses_triangle(positions[a], positions[b], f.map(|v| positions[v])) {
                out.insert(if a < b { [a, b] } else { [b, a] });
                break;
            }
        }
    }
    out
}

/// Two triangles that cut through each other, drawn at random until they do.
pub fn piercing_pair(rng: &mut impl Rng) -> (TriMesh, Vec<Vec3>) {
    loop {
        let p: Vec<Vec3> = (0..6).map(|_| random_vec(rng, 1.0)).collect();
        let Ok(m) = TriMesh::build(&p, vec![[0, 1, 2], [3, 4, 5]], 1.0) else {
            continue;
        };
        if tri_tri_intersect(&m, &p, 0, 1).is_some() {
            return (m, p);
        }
    }
}

/// A crumpled sheet folded over itself: random smooth bumps plus noise.
pub fn crumpled_sheet(rng: &mut impl Rng, n: usize) -> MeshData {
    let bumps: Vec<(Vec3, f64, f64)> = (0..6)
        .map(|_| (random_vec(rng, 0.5), rng.gen_range(0.05..0.2), rng.gen_range(-0.3..0.3)))
        .collect();
    let noise = 0.3 / n as f64;
    let mut m = grid_sheet(n, n, 1.0, 1.0, Vec3::zeros()).map_positions(|p| {
        let z: f64 = bumps
            .iter()
            .map(|(c, w, a)| a * (-((p.x - c.x).powi(2) + (p.y - c.y).powi(2)) / (w * w)).exp())
            .sum();
        Vec3::new(p.x, p.y, z)
    });
    for p in &mut m.positions {
        *p += random_vec(rng, noise);
    }
    m
}

/// Random self-intersecting scene number `k` of 50, growing to just under
/// 2000 faces.
pub fn oracle_scene(rng: &mut impl Rng, k: usize) -> MeshData {
    let n = 3 + (k * 19) / 49;
    match k % 3 {
        0 => crossing_sheets(rng, n),
        1 => {
            let mut a = crumpled_sheet(rng, n);
            let b = crumpled_sheet(rng, n);
            a.append(&b);
            a
        }
        _ => {
            let mut a = crumpled_sheet(rng, (n as f64 * 1.4) as usize);
            let shift = random_vec(rng, 0.05);
            a.positions.iter_mut().for_each(|p| *p += shift);
            a
        }
    }
}

/// Flood-fill classification of closed contours: every surface is cut along
/// all pierced edges; if it falls apart, all parts but the largest are
/// non-repelled.
pub fn closed_contour_oracle(mesh: &TriMesh, positions: &[Vec3]) -> BTreeSet<usize> {
    let whole = flood_fill_components(mesh, &BTreeSet::new());
    let parts = flood_fill_components(mesh, &brute_force_pierced_edges(mesh, positions));
    let mut out = BTreeSet::new();
    for surface in whole {
        let mut pieces: Vec<&BTreeSet<usize>> = parts.iter().filter(|p| p.is_subset(&surface)).collect();
        if pieces.len() < 2 {
            continue;
        }
        pieces.sort_by_key(|p| (std::cmp::Reverse(p.len()), *p.iter().next().unwrap()));
        for p in &pieces[1..] {
            out.extend(p.iter().copied());
        }
    }
    out
}

/// Vertices of every face taking part in an intersection.
pub fn touched_oracle(mesh: &TriMesh, positions: &[Vec3]) -> BTreeSet<usize> {
    brute_force_pairs(mesh, positions)
        .into_iter()
        .flat_map(|(f, g)| mesh.face(f).into_iter().chain(mesh.face(g)))
        .collect()
}
