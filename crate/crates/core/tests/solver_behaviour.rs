mod common;

use cloth_untangle::energy::{ElasticRest, MaterialParams};
use cloth_untangle::mesh::TriMesh;
use cloth_untangle::scenes::{generate, SceneKind, SceneRecipe};
use cloth_untangle::shapes::grid_sheet;
use cloth_untangle::solver::*;
use cloth_untangle::Vec3;

fn patch() -> (TriMesh, Vec<Vec3>) {
    let s = grid_sheet(6, 6, 0.3, 0.3, Vec3::new(0.0, 0.0, 1.0));
    (TriMesh::build(&s.positions, s.faces.clone(), 0.2).unwrap(), s.positions)
}

/// Position after `n` backward-Euler steps of a free particle:
/// vₖ₊₁ = vₖ + g·dt, xₖ₊₁ = xₖ + vₖ₊₁·dt.
fn ballistic(x0: Vec3, v0: Vec3, g: Vec3, dt: f64, n: usize) -> Vec3 {
    let k = n as f64;
    x0 + v0 * (k * dt) + g * (dt * dt * k * (k + 1.0) / 2.0)
}

#[test]
fn free_fall_follows_the_discrete_ballistic_path() {
    let (m, p) = patch();
    let rest = ElasticRest::from_mesh(&m);
    let params = MaterialParams::default();
    let cfg = SolverConfig::default();
    let v0 = Vec3::new(0.3, -0.1, 0.5);
    let mut state = SimState::at_rest(p.clone()).with_velocities(vec![v0; p.len()]);
    for n in 1..=30 {
        state = step_frame(&state, &m, &rest, None, &params, &cfg).unwrap();
        for (x, x0) in state.positions.iter().zip(&p) {
            let expected = ballistic(*x0, v0, params.gravity_vector(), cfg.dt, n);
            assert!((x - expected).norm() < 1e-9, "frame {n}: {:e}", (x - expected).norm());
        }
    }
}

#[test]
fn pinned_vertices_stay_put() {
    let (m, p) = patch();
    let rest = ElasticRest::from_mesh(&m);
    let mut state = SimState::at_rest(p.clone()).with_pinned(&[0, 6]);
    let cfg = SolverConfig::default();
    for _ in 0..5 {
        state = step_frame(&state, &m, &rest, None, &MaterialParams::default(), &cfg).unwrap();
    }
    assert_eq!(state.positions[0], p[0]);
    assert_eq!(state.positions[6], p[6]);
    assert!(state.positions[48].z < p[48].z);
    assert_eq!(state.stats.len(), 5);
}

#[test]
fn stepping_is_bitwise_reproducible() {
    let mut recipe = SceneRecipe::new(SceneKind::PiercedSheet, 3);
    recipe.resolution = 16;
    let scene = generate(&recipe).unwrap();
    let (m, p) = scene.garment.into_trimesh(scene.config.material.density).unwrap();
    let rest = ElasticRest::from_mesh(&m);
    let run = || {
        let mut s = SimState::at_rest(p.clone());
        for _ in 0..3 {
            s = step_frame(&s, &m, &rest, None, &scene.config.material, &scene.config.solver).unwrap();
        }
        s
    };
    let (a, b) = (run(), run());
    assert_eq!(a.positions, b.positions);
    let strip = |s: &SimState| s.stats.iter().map(|f| (f.intersecting_pairs, f.ic_loss.to_bits(), f.inner_iters)).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn small_pierced_sheet_resolves() {
    let mut recipe = SceneRecipe::new(SceneKind::PiercedSheet, 1);
    recipe.resolution = 30;
    let scene = generate(&recipe).unwrap();
    let (m, p) = scene.garment.into_trimesh(scene.config.material.density).unwrap();
    let rest = ElasticRest::from_mesh(&m);
    let out = resolve_static(&SimState::at_rest(p), &m, &rest, None, &scene.config.material, &scene.config.solver).unwrap();
    assert!(out.trajectory[0] > 100);
    assert_eq!(out.status, ResolveStatus::Resolved);
    assert_eq!(*out.trajectory.last().unwrap(), 0);
    assert_eq!(out.stats.intersecting_pairs, 0);
    assert_eq!(intersection_summary(&m, &out.state.positions).0, 0);
}

#[test]
fn clean_input_resolves_immediately() {
    let scene = generate(&SceneRecipe::new(SceneKind::StackedSheets, 0)).unwrap();
    let (m, p) = scene.garment.into_trimesh(scene.config.material.density).unwrap();
    let rest = ElasticRest::from_mesh(&m);
    let out = resolve_static(&SimState::at_rest(p.clone()), &m, &rest, None, &scene.config.material, &scene.config.solver).unwrap();
    assert_eq!(out.status, ResolveStatus::Resolved);
    assert_eq!(out.trajectory, vec![0]);
    assert_eq!(out.state.positions, p);
}

#[test]
fn bad_inputs_are_reported() {
    let (m, p) = patch();
    let rest = ElasticRest::from_mesh(&m);
    let params = MaterialParams::default();
    let bad = SolverConfig {
        dt: 0.0,
        ..Default::default()
    };
    assert!(matches!(
        step_frame(&SimState::at_rest(p.clone()), &m, &rest, None, &params, &bad),
        Err(SolverError::InvalidConfig(_))
    ));
    let short = SimState::at_rest(p[..5].to_vec());
    assert!(matches!(
        step_frame(&short, &m, &rest, None, &params, &SolverConfig::default()),
        Err(SolverError::Mismatch(_))
    ));
    let mut nan = p.clone();
    nan[3].x = f64::NAN;
    assert!(matches!(
        step_frame(&SimState::at_rest(nan), &m, &rest, None, &params, &SolverConfig::default()),
        Err(SolverError::NonFiniteState { vertex: 3, .. })
    ));
}

#[test]
fn ablation_weights() {
    let mut cfg = SolverConfig {
        lambda_ic: 5.0,
        ..Default::default()
    };
    assert_eq!(cfg.effective_ic().0, 5.0);
    cfg.ablation = Ablation::FullGradient;
    assert_eq!(cfg.effective_ic(), (5.0, cloth_untangle::icloss::IcGradientMode::Full));
    for a in [Ablation::NoIcLoss, Ablation::OnlyRepulsive] {
        cfg.ablation = a;
        assert_eq!(cfg.effective_ic().0, 0.0);
    }
    for a in Ablation::ALL {
        assert_eq!(Ablation::parse(a.name()), Some(a));
    }
}
