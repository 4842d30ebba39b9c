//! Optimisation-based implicit Euler stepping and static untangling.
//!
//! Each frame minimises inertia + gravity + elastic + body + friction terms
//! plus λ₁·repulsion and λ₂·contour loss over garment positions. The world
//! graph, and with it every contact quantity, is frozen for a window of inner
//! iterations; inside a window the objective is a fixed smooth function and a
//! backtracking line search keeps it non-increasing.

mod config;
mod lbfgs;
mod objective;
mod precond;

pub use config::{Ablation, Backtracking, SolverConfig};
pub use objective::BodyStep;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collision::{detect_intersections, find_body_contacts, find_cloth_correspondences, Bvh};
use crate::contours::vertex_components;
use crate::energy::{gravity_energy, ElasticRest, MaterialParams, Term, TermValues};
use crate::graph::BodyFrame;
use crate::icloss::ic_loss_value;
use crate::mesh::TriMesh;
use crate::Vec3;

use lbfgs::Lbfgs;
use objective::{Inertial, Problem, Window};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("non-finite state at frame {frame}, iteration {iteration}, vertex {vertex}: {position:?}")]
    NonFiniteState {
        frame: usize,
        iteration: usize,
        vertex: usize,
        position: [f64; 3],
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input mismatch: {0}")]
    Mismatch(String),
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<SolverError>,
    },
}

/// Per-frame (or per-run, for the static mode) statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame: usize,
    pub intersecting_pairs: usize,
    /// Contour loss at the final positions (m²).
    pub ic_loss: f64,
    /// Weighted energies at the final positions; gravity is measured
    /// relative to the frame start.
    pub energies: TermValues,
    pub inner_iters: usize,
    pub graph_refreshes: usize,
    /// Iterations where the line search found no Armijo step.
    pub line_search_stalls: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub positions: Vec<Vec3>,
    pub prev_positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub frame_index: usize,
    /// Vertices held at their current position.
    pub pinned: Vec<bool>,
    pub stats: Vec<FrameStats>,
}

impl SimState {
    /// At rest at `positions`.
    pub fn at_rest(positions: Vec<Vec3>) -> Self {
        let n = positions.len();
        Self {
            prev_positions: positions.clone(),
            positions,
            velocities: vec![Vec3::zeros(); n],
            frame_index: 0,
            pinned: vec![false; n],
            stats: Vec::new(),
        }
    }

    pub fn with_pinned(mut self, vertices: &[usize]) -> Self {
        for &v in vertices {
            self.pinned[v] = true;
        }
        self
    }

    pub fn with_velocities(mut self, velocities: Vec<Vec3>) -> Self {
        assert_eq!(velocities.len(), self.positions.len());
        self.velocities = velocities;
        self
    }

    fn check(&self, mesh: &TriMesh) -> Result<(), SolverError> {
        let n = mesh.vertex_count();
        if self.positions.len() != n || self.velocities.len() != n || self.pinned.len() != n {
            return Err(SolverError::Mismatch(format!(
                "state has {} positions for a mesh with {n} vertices",
                self.positions.len()
            )));
        }
        check_finite(&self.positions, self.frame_index, 0)
    }
}

fn check_finite(positions: &[Vec3], frame: usize, iteration: usize) -> Result<(), SolverError> {
    match positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        None => Ok(()),
        Some(vertex) => Err(SolverError::NonFiniteState {
            frame,
            iteration,
            vertex,
            position: positions[vertex].into(),
        }),
    }
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn negated(mut v: Vec<Vec3>) -> Vec<Vec3> {
    v.iter_mut().for_each(|x| *x = -*x);
    v
}

fn max_norm(v: &[Vec3]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Intersecting pair count and contour loss at `positions`.
pub fn intersection_summary(mesh: &TriMesh, positions: &[Vec3]) -> (usize, f64) {
    if mesh.face_count() == 0 {
        return (0, 0.0);
    }
    let bvh = Bvh::over_faces(mesh, positions, 0.0).expect("non-empty mesh");
    let hits = detect_intersections(mesh, positions, &bvh);
    (hits.len(), ic_loss_value(&hits))
}

struct Outcome {
    iterations: usize,
    refreshes: usize,
    stalls: usize,
    terms: TermValues,
}

/// Inner iterations over frozen graph windows.
///
/// `after_iteration` sees the positions after every accepted iteration and
/// returns `true` to stop early. Convergence is judged on the search
/// gradient right after a refresh or once it drops below tolerance.
fn minimize(
    problem: &Problem<'_>,
    x: &mut Vec<Vec3>,
    frame: usize,
    max_iters: usize,
    distance_ref: Option<&[Vec3]>,
    mut after_iteration: impl FnMut(&[Vec3]) -> bool,
) -> Result<Outcome, SolverError> {
    let cfg = problem.config;
    let ls = cfg.backtracking;
    let mut refresh_ref = distance_ref.map(|d| d.to_vec()).unwrap_or_else(|| x.clone());
    let mut window: Window = problem.refresh(x, &refresh_ref);
    let mut refresh_pos = x.clone();
    let mut refreshes = 1;
    let mut since_refresh = 0;
    let mut stalls = 0;
    let mut eval = problem.evaluate(&window, x);
    let mut history = Lbfgs::new(cfg.history);
    let mut iterations = 0;

    while iterations < max_iters {
        let drifted = x
            .iter()
            .zip(&refresh_pos)
            .any(|(a, b)| (a - b).norm() > 0.5 * cfg.eps_cloth);
        if since_refresh >= cfg.graph_refresh_every || drifted {
            if distance_ref.is_none() {
                refresh_ref = refresh_pos.clone();
            }
            window = problem.refresh(x, &refresh_ref);
            refresh_pos.clone_from(x);
            refreshes += 1;
            since_refresh = 0;
            eval = problem.evaluate(&window, x);
            history.clear();
        }
        if max_norm(&eval.gradient) < cfg.grad_tolerance {
            break;
        }

        let p = &window.preconditioner;
        let mut d = history.direction(&eval.gradient, p);
        let mut slope = dot(&eval.gradient, &d);
        if !(slope < 0.0) {
            history.clear();
            d = negated(p.apply(&eval.gradient));
            slope = dot(&eval.gradient, &d);
        }
        if !(slope < 0.0) {
            // Stationary for the frozen objective.
            if since_refresh == 0 {
                break;
            }
            since_refresh = cfg.graph_refresh_every;
            continue;
        }
        let longest = max_norm(&d);
        if longest > cfg.max_step {
            let s = cfg.max_step / longest;
            d.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        let mut best: Option<(f64, Vec<Vec3>)> = None;
        for _ in 0..=ls.max_halvings {
            let trial: Vec<Vec3> = x.iter().zip(&d).map(|(a, b)| a + b * alpha).collect();
            let value = problem.value(&window, &trial);
            if value.is_finite() {
                if value <= eval.total + ls.armijo * alpha * slope {
                    accepted = Some(trial);
                    break;
                }
                if best.as_ref().map_or(true, |(bv, _)| value < *bv) {
                    best = Some((value, trial));
                }
            }
            alpha *= ls.shrink;
        }
        let next = match accepted {
            Some(t) => Some(t),
            None => {
                stalls += 1;
                match best {
                    Some((v, t)) if v < eval.total => Some(t),
                    _ => None,
                }
            }
        };
        let Some(next) = next else {
            if since_refresh == 0 {
                break;
            }
            since_refresh = cfg.graph_refresh_every;
            continue;
        };
        check_finite(&next, frame, iterations)?;
        let next_eval = problem.evaluate(&window, &next);
        let s: Vec<Vec3> = next.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<Vec3> = next_eval
            .gradient
            .iter()
            .zip(&eval.gradient)
            .map(|(a, b)| a - b)
            .collect();
        history.push(s, y);
        *x = next;
        eval = next_eval;
        iterations += 1;
        since_refresh += 1;
        if after_iteration(x) {
            break;
        }
    }
    Ok(Outcome {
        iterations,
        refreshes,
        stalls,
        terms: eval.terms,
    })
}

/// Initial guess for a frame: the free-flight prediction `x + dt·v + dt²·g`
/// for connected pieces with no pinned vertex and no cloth or body within
/// reach of any vertex, the current positions elsewhere. The cloth reach is at
/// least twice the largest predicted move. Falls back to the current positions
/// if the guess adds intersections.
fn warm_start(
    state: &SimState,
    garment: &TriMesh,
    body: Option<BodyStep<'_>>,
    params: &MaterialParams,
    config: &SolverConfig,
) -> Vec<Vec3> {
    let x = &state.positions;
    let fall = params.gravity_vector() * (config.dt * config.dt);
    let steps: Vec<Vec3> = state.velocities.iter().map(|v| v * config.dt + fall).collect();
    let reach = config.eps_cloth.max(2.0 * max_norm(&steps));
    let mut busy = state.pinned.clone();
    if garment.face_count() > 0 {
        let bvh = Bvh::over_faces(garment, x, reach).expect("non-empty garment");
        for c in find_cloth_correspondences(garment, x, None, &bvh, reach) {
            busy[c.node] = true;
            garment.face(c.face).iter().for_each(|&v| busy[v] = true);
        }
    }
    if let Some(b) = body.filter(|b| b.mesh.face_count() > 0) {
        let bvh = Bvh::over_faces(b.mesh, b.positions, 0.0).expect("non-empty body");
        let radius = config.eps_body.max(params.body_margin).max(reach);
        for c in find_body_contacts(x, b.mesh, b.positions, &bvh, radius) {
            busy[c.node] = true;
        }
    }
    let piece = vertex_components(garment, None);
    let mut busy_piece = vec![false; piece.iter().max().map_or(0, |m| m + 1)];
    for (v, &b) in busy.iter().enumerate() {
        busy_piece[piece[v]] |= b;
    }
    let guess: Vec<Vec3> = x
        .iter()
        .zip(&steps)
        .zip(&piece)
        .map(|((p, step), &k)| if busy_piece[k] { *p } else { p + step })
        .collect();
    if guess == *x || intersection_summary(garment, &guess).0 > intersection_summary(garment, x).0 {
        return x.clone();
    }
    guess
}

/// Advances one frame. `body` carries the body positions at the start and end
/// of the step.
pub fn step_frame(
    state: &SimState,
    garment: &TriMesh,
    rest: &ElasticRest,
    body: Option<BodyStep<'_>>,
    params: &MaterialParams,
    config: &SolverConfig,
) -> Result<SimState, SolverError> {
    config.validate().map_err(SolverError::InvalidConfig)?;
    params.validate().map_err(SolverError::InvalidConfig)?;
    state.check(garment)?;
    if let Some(b) = body {
        if b.positions.len() != b.mesh.vertex_count() || b.prev_positions.len() != b.mesh.vertex_count() {
            return Err(SolverError::Mismatch("body positions do not match body topology".into()));
        }
    }
    let start = Instant::now();
    let frame = state.frame_index;
    let problem = Problem {
        mesh: garment,
        rest,
        params,
        config,
        inertial: Some(Inertial {
            prev: &state.positions,
            velocities: &state.velocities,
            dt: config.dt,
        }),
        gravity_ref: Some(&state.positions),
        body,
        pinned: &state.pinned,
    };
    let mut x = warm_start(state, garment, body, params, config);
    let outcome = minimize(&problem, &mut x, frame, config.max_inner_iters, Some(&state.positions), |_| false)?;
    let velocities: Vec<Vec3> = x
        .iter()
        .zip(&state.positions)
        .zip(&state.pinned)
        .map(|((a, b), &pin)| if pin { Vec3::zeros() } else { (a - b) / config.dt })
        .collect();
    let (pairs, ic_loss) = intersection_summary(garment, &x);
    let mut energies = outcome.terms;
    energies.set(Term::IntersectionContour, config.effective_ic().0 * ic_loss);
    let stats = FrameStats {
        frame,
        intersecting_pairs: pairs,
        ic_loss,
        energies,
        inner_iters: outcome.iterations,
        graph_refreshes: outcome.refreshes,
        line_search_stalls: outcome.stalls,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let mut all_stats = state.stats.clone();
    all_stats.push(stats);
    Ok(SimState {
        prev_positions: state.positions.clone(),
        positions: x,
        velocities,
        frame_index: frame + 1,
        pinned: state.pinned.clone(),
        stats: all_stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolveStatus {
    Resolved,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolveOutcome {
    pub state: SimState,
    pub status: ResolveStatus,
    /// Intersecting pair count before the first and after every iteration.
    pub trajectory: Vec<usize>,
    pub stats: FrameStats,
}

/// Untangles a static configuration.
///
/// Minimises stretching + bending + λ₁·repulsion + λ₂·contour loss (and body
/// contact if a body is given; inertia and gravity when enabled in the
/// config) until no triangle pair intersects or the iteration cap is hit.
pub fn resolve_static(
    state: &SimState,
    garment: &TriMesh,
    rest: &ElasticRest,
    body: Option<BodyFrame<'_>>,
    params: &MaterialParams,
    config: &SolverConfig,
) -> Result<ResolveOutcome, SolverError> {
    config.validate().map_err(SolverError::InvalidConfig)?;
    params.validate().map_err(SolverError::InvalidConfig)?;
    state.check(garment)?;
    let start = Instant::now();
    let (initial, _) = intersection_summary(garment, &state.positions);
    let mut trajectory = vec![initial];
    let zeros = vec![Vec3::zeros(); state.positions.len()];
    let mut x = state.positions.clone();
    let mut outcome = None;
    if initial > 0 {
        let problem = Problem {
            mesh: garment,
            rest,
            params,
            config,
            inertial: config.resolve_with_inertia.then(|| Inertial {
                prev: &state.positions,
                velocities: &zeros,
                dt: config.dt,
            }),
            gravity_ref: config.resolve_with_inertia.then_some(&state.positions[..]),
            body: body.map(|b| BodyStep {
                mesh: b.mesh,
                prev_positions: b.positions,
                positions: b.positions,
            }),
            pinned: &state.pinned,
        };
        let mut bvh = Bvh::over_faces(garment, &state.positions, 0.0).expect("mesh with intersections has faces");
        outcome = Some(minimize(&problem, &mut x, state.frame_index, config.resolve_max_iters, None, |pos| {
            bvh.refit_faces(garment, pos, 0.0);
            let count = detect_intersections(garment, pos, &bvh).len();
            trajectory.push(count);
            count == 0
        })?);
    }
    let (pairs, ic_loss) = intersection_summary(garment, &x);
    let status = if pairs == 0 {
        ResolveStatus::Resolved
    } else {
        ResolveStatus::Unresolved
    };
    let mut energies = outcome.as_ref().map(|o| o.terms).unwrap_or_default();
    energies.set(Term::IntersectionContour, config.effective_ic().0 * ic_loss);
    let stats = FrameStats {
        frame: state.frame_index,
        intersecting_pairs: pairs,
        ic_loss,
        energies,
        inner_iters: outcome.as_ref().map_or(0, |o| o.iterations),
        graph_refreshes: outcome.as_ref().map_or(0, |o| o.refreshes),
        line_search_stalls: outcome.as_ref().map_or(0, |o| o.stalls),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let mut new_state = state.clone();
    new_state.positions = x;
    new_state.stats.push(stats.clone());
    Ok(ResolveOutcome {
        state: new_state,
        status,
        trajectory,
        stats,
    })
}

/// A body mesh with one position array per frame.
#[derive(Debug, Clone, Copy)]
pub struct BodySequence<'a> {
    pub mesh: &'a TriMesh,
    pub frames: &'a [Vec<Vec3>],
}

/// Steps once per body frame, starting from `initial` at rest. The body's
/// first frame is also its pose before the first step. `on_frame` receives
/// each completed state and may abort the run with an error.
pub fn simulate_sequence<E>(
    garment: &TriMesh,
    initial: SimState,
    body: BodySequence<'_>,
    params: &MaterialParams,
    config: &SolverConfig,
    mut on_frame: impl FnMut(&SimState) -> Result<(), E>,
) -> Result<Vec<FrameStats>, E>
where
    E: From<SolverError>,
{
    let rest = ElasticRest::from_mesh(garment);
    let mut state = initial;
    for (k, frame) in body.frames.iter().enumerate() {
        let prev = if k == 0 { frame } else { &body.frames[k - 1] };
        let step = BodyStep {
            mesh: body.mesh,
            prev_positions: prev,
            positions: frame,
        };
        state = step_frame(&state, garment, &rest, Some(step), params, config).map_err(|e| SolverError::Frame {
            frame: k,
            source: Box::new(e),
        })?;
        on_frame(&state)?;
    }
    Ok(state.stats)
}

/// Absolute gravitational energy −Σ m g·x, for reporting.
pub fn absolute_gravity(garment: &TriMesh, positions: &[Vec3], params: &MaterialParams) -> f64 {
    gravity_energy(garment.vertex_mass(), positions, params.gravity_vector()).0
}
