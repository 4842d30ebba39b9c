//! Limited-memory quasi-Newton directions over per-vertex vectors, seeded
//! with the window preconditioner.

use std::collections::VecDeque;

use crate::Vec3;

use super::dot;
use super::precond::Preconditioner;

pub(crate) struct Lbfgs {
    capacity: usize,
    pairs: VecDeque<(Vec<Vec3>, Vec<Vec3>, f64)>,
}

impl Lbfgs {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Stores a step and gradient change; pairs without positive curvature
    /// are dropped.
    pub fn push(&mut self, s: Vec<Vec3>, y: Vec<Vec3>) {
        if self.capacity == 0 {
            return;
        }
        let sy = dot(&s, &y);
        let scale = (dot(&s, &s) * dot(&y, &y)).sqrt();
        if !(sy > 1e-10 * scale) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// −H g by the two-loop recursion with H₀ = M⁻¹.
    pub fn direction(&self, g: &[Vec3], h0: &Preconditioner) -> Vec<Vec3> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= yi * a;
            }
            alphas.push(a);
        }
        let mut r = h0.apply(&q);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += si * (a - b);
            }
        }
        r.iter_mut().for_each(|v| *v = -*v);
        r
    }
}
