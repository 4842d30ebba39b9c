use serde::{Deserialize, Serialize};

use crate::collision::{DEFAULT_BODY_EPSILON, DEFAULT_CLOTH_EPSILON};
use crate::icloss::IcGradientMode;

/// Which interactions the solver uses; the non-default variants exist for
/// comparison runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// Classified repulsion plus the contour loss with `ic_mode`.
    #[default]
    Ours,
    /// As `Ours` but always with the full contour gradient.
    FullGradient,
    /// Non-repulsive correspondences dropped, no contour loss.
    NoIcLoss,
    /// Every correspondence repels, no classification, no contour loss.
    OnlyRepulsive,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Ours,
        Ablation::FullGradient,
        Ablation::NoIcLoss,
        Ablation::OnlyRepulsive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Ours => "ours",
            Ablation::FullGradient => "full-gradient",
            Ablation::NoIcLoss => "no-ic-loss",
            Ablation::OnlyRepulsive => "only-repulsive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Backtracking {
    pub shrink: f64,
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            armijo: 1e-4,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Time step (s).
    pub dt: f64,
    pub lambda_repulsion: f64,
    pub lambda_ic: f64,
    pub max_inner_iters: usize,
    /// Rebuild the world graph every this many inner iterations.
    pub graph_refresh_every: usize,
    /// Largest per-vertex gradient norm accepted as converged (N).
    pub grad_tolerance: f64,
    pub backtracking: Backtracking,
    pub ic_mode: IcGradientMode,
    /// Repulsion threshold ξ (m).
    pub xi: f64,
    pub eps_cloth: f64,
    pub eps_body: f64,
    pub ablation: Ablation,
    /// Curvature pairs kept by the quasi-Newton update; 0 gives plain
    /// preconditioned gradient descent.
    pub history: usize,
    /// Largest vertex displacement per inner iteration (m).
    pub max_step: f64,
    /// Iteration cap of the static untangling mode.
    pub resolve_max_iters: usize,
    /// Add inertia (zero velocity) and gravity to the static mode.
    pub resolve_with_inertia: bool,
    pub friction: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 30.0,
            lambda_repulsion: 1.0,
            lambda_ic: 1.0,
            max_inner_iters: 60,
            graph_refresh_every: 8,
            grad_tolerance: 1e-7,
            backtracking: Backtracking::default(),
            ic_mode: IcGradientMode::TranslationalOnly,
            xi: 0.001,
            eps_cloth: DEFAULT_CLOTH_EPSILON,
            eps_body: DEFAULT_BODY_EPSILON,
            ablation: Ablation::Ours,
            history: 8,
            max_step: 0.0025,
            resolve_max_iters: 2000,
            resolve_with_inertia: false,
            friction: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("dt", self.dt),
            ("grad_tolerance", self.grad_tolerance),
            ("xi", self.xi),
            ("eps_cloth", self.eps_cloth),
            ("eps_body", self.eps_body),
            ("max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(self.backtracking.shrink > 0.0 && self.backtracking.shrink < 1.0) {
            return Err("backtracking shrink must lie in (0, 1)".into());
        }
        if !(self.backtracking.armijo > 0.0 && self.backtracking.armijo < 1.0) {
            return Err("Armijo constant must lie in (0, 1)".into());
        }
        if self.lambda_repulsion < 0.0 || self.lambda_ic < 0.0 {
            return Err("weights must be non-negative".into());
        }
        if self.graph_refresh_every == 0 {
            return Err("graph_refresh_every must be at least 1".into());
        }
        Ok(())
    }

    /// Contour weight and gradient mode after applying the ablation.
    pub fn effective_ic(&self) -> (f64, IcGradientMode) {
        match self.ablation {
            Ablation::Ours => (self.lambda_ic, self.ic_mode),
            Ablation::FullGradient => (self.lambda_ic, IcGradientMode::Full),
            Ablation::NoIcLoss | Ablation::OnlyRepulsive => (0.0, self.ic_mode),
        }
    }
}
