//! Search-direction preconditioner: the stretching graph Laplacian plus a
//! diagonal for the remaining terms, inverted approximately by conjugate
//! gradients. Low-frequency motions such as the translation of a whole piece
//! pass through almost unscaled, which a purely diagonal scaling cannot do.

use crate::Vec3;

use super::dot;

/// Relative residual at which the inner solve stops.
const TOLERANCE: f64 = 1e-3;
const MAX_ITERS: usize = 60;

pub(crate) struct Preconditioner {
    /// Diagonal of the operator, Laplacian degree included.
    diag: Vec<f64>,
    edges: Vec<[usize; 2]>,
    edge_weight: f64,
    pinned: Vec<bool>,
}

impl Preconditioner {
    /// `extra` holds the non-stretching diagonal per vertex.
    pub fn new(extra: Vec<f64>, edges: &[[usize; 2]], edge_weight: f64, pinned: &[bool]) -> Self {
        let mut diag = extra;
        for e in edges {
            diag[e[0]] += edge_weight;
            diag[e[1]] += edge_weight;
        }
        let pinned = (0..diag.len()).map(|i| pinned.get(i).copied().unwrap_or(false)).collect();
        Self {
            diag,
            edges: edges.to_vec(),
            edge_weight,
            pinned,
        }
    }

    fn multiply(&self, v: &[Vec3]) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = v.iter().zip(&self.diag).map(|(x, d)| x * *d).collect();
        for &[i, j] in &self.edges {
            out[i] -= v[j] * self.edge_weight;
            out[j] -= v[i] * self.edge_weight;
        }
        for (o, p) in out.iter_mut().zip(&self.pinned) {
            if *p {
                *o = Vec3::zeros();
            }
        }
        out
    }

    fn jacobi(&self, r: &[Vec3]) -> Vec<Vec3> {
        r.iter()
            .zip(&self.diag)
            .zip(&self.pinned)
            .map(|((v, d), p)| if *p { Vec3::zeros() } else { v / *d })
            .collect()
    }

    /// Approximate `M⁻¹ g`; pinned vertices get zero.
    pub fn apply(&self, g: &[Vec3]) -> Vec<Vec3> {
        let mut r: Vec<Vec3> = g
            .iter()
            .zip(&self.pinned)
            .map(|(v, p)| if *p { Vec3::zeros() } else { *v })
            .collect();
        let mut x = vec![Vec3::zeros(); g.len()];
        let target = TOLERANCE * TOLERANCE * dot(&r, &r);
        if target == 0.0 {
            return x;
        }
        let mut z = self.jacobi(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..MAX_ITERS {
            let q = self.multiply(&p);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                break;
            }
            let a = rz / pq;
            for i in 0..x.len() {
                x[i] += p[i] * a;
                r[i] -= q[i] * a;
            }
            if dot(&r, &r) <= target {
                break;
            }
            z = self.jacobi(&r);
            let rz_next = dot(&r, &z);
            let b = rz_next / rz;
            rz = rz_next;
            for i in 0..p.len() {
                p[i] = z[i] + p[i] * b;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_a_small_chain() {
        let edges = [[0, 1], [1, 2]];
        let pc = Preconditioner::new(vec![1.0, 2.0, 3.0], &edges, 4.0, &[]);
        let g = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 2.0, 0.0), Vec3::new(0.5, 0.0, -1.0)];
        let x = pc.apply(&g);
        let back = pc.multiply(&x);
        for (a, b) in back.iter().zip(&g) {
            assert!((a - b).norm() < 1e-3 * 2.5);
        }
    }

    #[test]
    fn pinned_vertices_do_not_move() {
        let edges = [[0, 1]];
        let pc = Preconditioner::new(vec![1.0, 1.0], &edges, 1.0, &[true, false]);
        let x = pc.apply(&[Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0, 0.0, 0.0)]);
        assert_eq!(x[0], Vec3::zeros());
        assert!((x[1] - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-9);
    }
}
