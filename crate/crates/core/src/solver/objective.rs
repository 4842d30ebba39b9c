//! The frame objective with every contact quantity frozen for one graph
//! window.
//!
//! The contour term enters as a constant force: its gradient is taken once per
//! window and the window minimizes `f·(x − x_w)` in its place. Minimizing the
//! squared segment lengths directly rewards pinching the contour into many
//! short segments, which stalls with the count unchanged; a frozen push
//! instead keeps moving the surfaces through each other until the next
//! refresh re-measures the contour. In translational mode each crossing's
//! push is signed towards the enclosed side of its contour.

use crate::collision::{find_body_contacts, BodyContact, Bvh, Correspondence};
use crate::energy::{
    bending_energy, body_collision_energy, friction_energy, inertia_energy, repulsion_energy, stretching_energy,
    ElasticRest, FrictionContact, MaterialParams, Term, TermValues,
};
use crate::contours::split_along;
use crate::graph::{build_input_graph, BodyFrame, GraphConfig, WorldGraph};
use crate::icloss::{IcGradientMode, IcObjective};
use crate::mesh::TriMesh;
use crate::Vec3;

use super::config::{Ablation, SolverConfig};
use super::precond::Preconditioner;

/// Kinematic body for one step: positions at the start and end of the step.
#[derive(Debug, Clone, Copy)]
pub struct BodyStep<'a> {
    pub mesh: &'a TriMesh,
    pub prev_positions: &'a [Vec3],
    pub positions: &'a [Vec3],
}

pub(crate) struct Inertial<'a> {
    pub prev: &'a [Vec3],
    pub velocities: &'a [Vec3],
    pub dt: f64,
}

pub(crate) struct Problem<'a> {
    pub mesh: &'a TriMesh,
    pub rest: &'a ElasticRest,
    pub params: &'a MaterialParams,
    pub config: &'a SolverConfig,
    pub inertial: Option<Inertial<'a>>,
    /// Reference positions for the gravity term; `None` disables gravity.
    pub gravity_ref: Option<&'a [Vec3]>,
    pub body: Option<BodyStep<'a>>,
    pub pinned: &'a [bool],
}

/// Everything frozen at a graph refresh.
pub(crate) struct Window {
    pub repulsive: Vec<Correspondence>,
    /// Contour force `λ₂ ∇L` per vertex, empty when the term is off or there
    /// are no intersections.
    pub ic_force: Vec<Vec3>,
    /// Positions the window was built at.
    pub anchor: Vec<Vec3>,
    pub contacts: Vec<BodyContact>,
    pub friction: Vec<FrictionContact>,
    pub preconditioner: Preconditioner,
}

pub(crate) struct Evaluation {
    pub terms: TermValues,
    pub total: f64,
    pub gradient: Vec<Vec3>,
}

impl<'a> Problem<'a> {
    pub fn graph_config(&self) -> GraphConfig {
        GraphConfig {
            eps_cloth: self.config.eps_cloth,
            eps_body: self.config.eps_body,
        }
    }

    /// Rebuilds the world graph at `positions`; `distance_ref` supplies the
    /// previous positions for the correspondences' `d_prev`.
    pub fn refresh(&self, positions: &[Vec3], distance_ref: &[Vec3]) -> Window {
        let body = self.body.map(|b| BodyFrame {
            mesh: b.mesh,
            positions: b.positions,
        });
        let graph = build_input_graph(self.mesh, positions, Some(distance_ref), body, &self.graph_config());
        let (lambda_ic, mode) = self.config.effective_ic();
        let repulsive = match self.config.ablation {
            Ablation::OnlyRepulsive => {
                let mut all: Vec<Correspondence> = graph
                    .repulsive_world
                    .iter()
                    .chain(&graph.non_repulsive_world)
                    .map(|c| Correspondence { repulsive: true, ..*c })
                    .collect();
                all.sort_by_key(|c| (c.node, c.face));
                all
            }
            _ => graph.repulsive_world.clone(),
        };
        let ic = if lambda_ic > 0.0 {
            IcObjective::freeze(&graph.intersections, self.mesh, positions)
        } else {
            IcObjective::default()
        };
        let ic_force = if ic.is_empty() {
            Vec::new()
        } else {
            let enclosed = enclosed_sides(self.mesh, &graph);
            let gradient = if mode == IcGradientMode::TranslationalOnly {
                ic.oriented_gradient(positions, mode, |[a, b]| (enclosed[a] != enclosed[b]).then_some(enclosed[a]))
            } else {
                ic.gradient(positions, mode)
            };
            gradient.into_iter().map(|g| g * lambda_ic).collect()
        };
        let contacts = match self.body {
            Some(b) if b.mesh.face_count() > 0 => {
                let bvh = Bvh::over_faces(b.mesh, b.positions, 0.0).expect("non-empty body");
                let radius = self.config.eps_body.max(self.params.body_margin);
                find_body_contacts(positions, b.mesh, b.positions, &bvh, radius)
            }
            _ => Vec::new(),
        };
        let friction = self.friction_contacts(positions, &repulsive, &contacts);
        let preconditioner = self.preconditioner(&repulsive, &ic, lambda_ic, &contacts);
        Window {
            repulsive,
            ic_force,
            anchor: positions.to_vec(),
            contacts,
            friction,
            preconditioner,
        }
    }

    fn friction_contacts(
        &self,
        positions: &[Vec3],
        repulsive: &[Correspondence],
        contacts: &[BodyContact],
    ) -> Vec<FrictionContact> {
        let Some(inertial) = &self.inertial else {
            return Vec::new();
        };
        if !self.config.friction || self.params.friction_coeff == 0.0 {
            return Vec::new();
        }
        let mu_scale = |node: usize| self.params.friction_coeff * self.mesh.vertex_mass()[node] / (inertial.dt * inertial.dt);
        let mut out = Vec::new();
        if let Some(b) = self.body {
            let reach = 2.0 * self.params.body_margin;
            for c in contacts {
                let q = positions[c.node];
                let f = b.mesh.face(c.face);
                let foot = |p: &[Vec3]| -> Vec3 { (0..3).map(|k| p[f[k]] * c.weights[k]).sum() };
                if (q - foot(b.positions)).dot(&c.normal) > reach {
                    continue;
                }
                out.push(FrictionContact {
                    node: c.node,
                    surface: None,
                    surface_motion: foot(b.positions) - foot(b.prev_positions),
                    normal: c.normal,
                    scale: mu_scale(c.node),
                });
            }
        }
        for c in repulsive {
            if c.d_curr.abs() > 2.0 * self.config.xi {
                continue;
            }
            out.push(FrictionContact {
                node: c.node,
                surface: Some((self.mesh.face(c.face), c.weights)),
                surface_motion: Vec3::zeros(),
                normal: c.normal,
                scale: mu_scale(c.node),
            });
        }
        out
    }

    /// Curvature estimate: stretching Laplacian plus a diagonal for the
    /// other terms.
    fn preconditioner(
        &self,
        repulsive: &[Correspondence],
        ic: &IcObjective,
        lambda_ic: f64,
        contacts: &[BodyContact],
    ) -> Preconditioner {
        let n = self.mesh.vertex_count();
        let k = self.params.stretch_stiffness;
        // Keeps the operator definite for pieces with nothing but stretching.
        let floor = 1e-3 * k.max(1e-6);
        let mut diag = vec![floor; n];
        if let Some(inertial) = &self.inertial {
            let inv = 1.0 / (inertial.dt * inertial.dt);
            for (d, m) in diag.iter_mut().zip(self.mesh.vertex_mass()) {
                *d += m * inv;
            }
        }
        let rep = 6.0 * self.config.lambda_repulsion * self.config.xi;
        for c in repulsive {
            diag[c.node] += rep;
            for v in self.mesh.face(c.face) {
                diag[v] += rep;
            }
        }
        let body = 6.0 * self.params.body_collision_stiffness * self.params.body_margin;
        for c in contacts {
            diag[c.node] += body;
        }
        if lambda_ic > 0.0 {
            for v in ic.crossing_vertices() {
                diag[v] += 2.0 * lambda_ic;
            }
        }
        Preconditioner::new(diag, self.mesh.edges(), k, self.pinned)
    }

    fn gravity(&self, positions: &[Vec3]) -> (f64, Vec<Vec3>) {
        let Some(reference) = self.gravity_ref else {
            return (0.0, Vec::new());
        };
        let g = self.params.gravity_vector();
        let masses = self.mesh.vertex_mass();
        let mut energy = 0.0;
        let mut grad = Vec::with_capacity(positions.len());
        for i in 0..positions.len() {
            energy -= masses[i] * g.dot(&(positions[i] - reference[i]));
            grad.push(-g * masses[i]);
        }
        (energy, grad)
    }

    fn terms(&self, window: &Window, positions: &[Vec3], with_gradient: bool) -> (TermValues, Vec<(Term, Vec<Vec3>)>) {
        let mut values = TermValues::default();
        let mut grads = Vec::new();
        let mut push = |t: Term, (e, g): (f64, Vec<Vec3>), weight: f64| {
            values.set(t, e * weight);
            if with_gradient && weight != 0.0 && !g.is_empty() {
                grads.push((t, if weight == 1.0 { g } else { g.into_iter().map(|v| v * weight).collect() }));
            }
        };
        if let Some(i) = &self.inertial {
            push(Term::Inertia, inertia_energy(self.mesh.vertex_mass(), positions, i.prev, i.velocities, i.dt), 1.0);
        }
        push(Term::Gravity, self.gravity(positions), 1.0);
        push(Term::Stretching, stretching_energy(self.mesh, self.rest, positions, self.params), 1.0);
        push(Term::Bending, bending_energy(self.mesh, self.rest, positions, self.params), 1.0);
        if let Some(b) = self.body {
            push(
                Term::BodyCollision,
                body_collision_energy(positions, &window.contacts, b.mesh, b.positions, self.params),
                1.0,
            );
        }
        if let Some(i) = &self.inertial {
            push(Term::Friction, friction_energy(&window.friction, positions, i.prev), 1.0);
        }
        push(
            Term::Repulsion,
            repulsion_energy(self.mesh, &window.repulsive, positions, self.config.xi),
            self.config.lambda_repulsion,
        );
        (values, grads)
    }

    pub fn value(&self, window: &Window, positions: &[Vec3]) -> f64 {
        let (mut values, _) = self.terms(window, positions, false);
        if !window.ic_force.is_empty() {
            values.set(Term::IntersectionContour, linear(&window.ic_force, &window.anchor, positions));
        }
        values.total()
    }

    pub fn evaluate(&self, window: &Window, positions: &[Vec3]) -> Evaluation {
        let (mut terms, grads) = self.terms(window, positions, true);
        let mut gradient = vec![Vec3::zeros(); positions.len()];
        for (_, g) in &grads {
            for (acc, v) in gradient.iter_mut().zip(g) {
                *acc += v;
            }
        }
        if !window.ic_force.is_empty() {
            terms.set(Term::IntersectionContour, linear(&window.ic_force, &window.anchor, positions));
            for (acc, f) in gradient.iter_mut().zip(&window.ic_force) {
                *acc += f;
            }
        }
        for (g, pinned) in gradient.iter_mut().zip(self.pinned) {
            if *pinned {
                *g = Vec3::zeros();
            }
        }
        Evaluation {
            total: terms.total(),
            terms,
            gradient,
        }
    }
}

/// Per vertex, whether it lies on the enclosed side of some contour: inside a
/// closed contour, or in the smaller part cut off by an open one. Open
/// contours that do not cut their surface mark nothing.
fn enclosed_sides(mesh: &TriMesh, graph: &WorldGraph) -> Vec<bool> {
    let mut enclosed = vec![false; mesh.vertex_count()];
    for c in &graph.contours {
        let inside = if c.closed {
            c.inside_nodes.clone()
        } else {
            match split_along(c, &graph.intersections, mesh) {
                Ok(split) => split.inside,
                Err(_) => continue,
            }
        };
        for v in inside {
            enclosed[v] = true;
        }
    }
    enclosed
}

/// `Σ f·(x − anchor)`, the potential whose gradient is the constant `f`.
fn linear(force: &[Vec3], reference: &[Vec3], positions: &[Vec3]) -> f64 {
    force.iter().zip(reference.iter().zip(positions)).map(|(f, (r, x))| f.dot(&(x - r))).sum()
}
