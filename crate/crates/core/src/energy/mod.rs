//! Energy terms of the incremental potential.
//!
//! Every term returns its value and the gradient with respect to garment
//! positions. Per-element work runs in parallel; contributions are then
//! accumulated in element order, so gradients are bitwise reproducible for any
//! thread count.

mod contact;
mod elastic;
mod inertia;

pub use contact::{
    body_collision_energy, friction_energy, repulsion_energy, repulsion_penalty, FrictionContact,
};
pub use elastic::{bending_energy, dihedral_angle, stretching_energy, ElasticRest};
pub use inertia::{gravity_energy, inertia_energy};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    /// Edge spring stiffness (N/m).
    pub stretch_stiffness: f64,
    /// Hinge stiffness (N·m per rad²).
    pub bend_stiffness: f64,
    /// Area density (kg/m²).
    pub density: f64,
    /// Cubic body penalty stiffness (J/m³).
    pub body_collision_stiffness: f64,
    /// Body contact margin (m).
    pub body_margin: f64,
    pub friction_coeff: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: [f64; 3],
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self {
            stretch_stiffness: 50.0,
            bend_stiffness: 5e-6,
            density: 0.2,
            body_collision_stiffness: 1e6,
            body_margin: 0.002,
            friction_coeff: 0.5,
            gravity: [0.0, 0.0, -9.81],
        }
    }
}

impl MaterialParams {
    pub fn gravity_vector(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.stretch_stiffness < 0.0 || self.bend_stiffness < 0.0 || self.body_collision_stiffness < 0.0 {
            return Err("stiffnesses must be non-negative".into());
        }
        if !(self.density > 0.0) {
            return Err("density must be positive".into());
        }
        if self.body_margin < 0.0 {
            return Err("body margin must be non-negative".into());
        }
        if self.friction_coeff < 0.0 {
            return Err("friction coefficient must be non-negative".into());
        }
        Ok(())
    }
}

/// Named terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Inertia,
    Gravity,
    Stretching,
    Bending,
    BodyCollision,
    Friction,
    Repulsion,
    IntersectionContour,
}

impl Term {
    pub const ALL: [Term; 8] = [
        Term::Inertia,
        Term::Gravity,
        Term::Stretching,
        Term::Bending,
        Term::BodyCollision,
        Term::Friction,
        Term::Repulsion,
        Term::IntersectionContour,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::Inertia => "inertia",
            Term::Gravity => "gravity",
            Term::Stretching => "stretching",
            Term::Bending => "bending",
            Term::BodyCollision => "body_collision",
            Term::Friction => "friction",
            Term::Repulsion => "repulsion",
            Term::IntersectionContour => "ic",
        }
    }
}

/// Per-term values; weighted terms are stored after weighting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TermValues(pub [f64; 8]);

impl TermValues {
    pub fn get(&self, t: Term) -> f64 {
        self.0[t as usize]
    }

    pub fn set(&mut self, t: Term, v: f64) {
        self.0[t as usize] = v;
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub total: f64,
    pub per_term: TermValues,
    pub gradient: Vec<Vec3>,
}

/// Accumulates per-element `(energy, vertices, gradients)` in element order.
pub(crate) fn accumulate<const N: usize>(
    vertex_count: usize,
    items: Vec<(f64, [usize; N], [Vec3; N])>,
) -> (f64, Vec<Vec3>) {
    let mut grad = vec![Vec3::zeros(); vertex_count];
    let mut energy = 0.0;
    for (e, idx, g) in items {
        energy += e;
        for k in 0..N {
            grad[idx[k]] += g[k];
        }
    }
    (energy, grad)
}

/// Maps `f` over `0..count` in parallel, keeping element order.
pub(crate) fn par_elements<T: Send, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    (0..count).into_par_iter().filter_map(f).collect()
}
