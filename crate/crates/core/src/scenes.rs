//! Synthetic benchmark scenes. Generation is deterministic in the recipe,
//! including the seeded jitter that keeps vertices off exact coincidences.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{MotionSequence, ObjMesh, RunConfig};
use crate::mesh::GarmentPiece;
use crate::shapes::{grid_sheet, uv_sphere, MeshData};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SceneKind {
    /// Parallel sheets a few centimetres apart, free of intersections.
    StackedSheets,
    /// Two sheets above a sphere body, free of intersections.
    SphereBody,
    /// A spherical-cap patch pushed up through a flat sheet: one closed
    /// contour on each piece. Comes with a sphere body underneath.
    PiercedSheet,
    /// A sheet cut twice by a rippled sheet: two concentric closed contours.
    NestedPierce,
    /// A strip stitched to a sheet at both ends and woven through it.
    PoppedPocket,
}

impl SceneKind {
    pub const ALL: [SceneKind; 5] = [
        SceneKind::StackedSheets,
        SceneKind::SphereBody,
        SceneKind::PiercedSheet,
        SceneKind::NestedPierce,
        SceneKind::PoppedPocket,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::StackedSheets => "stackedSheets",
            SceneKind::SphereBody => "sphereBody",
            SceneKind::PiercedSheet => "piercedSheet",
            SceneKind::NestedPierce => "nestedPierce",
            SceneKind::PoppedPocket => "poppedPocket",
        }
    }

    fn default_resolution(self) -> usize {
        match self {
            SceneKind::StackedSheets => 20,
            SceneKind::SphereBody => 20,
            SceneKind::PiercedSheet => 60,
            SceneKind::NestedPierce => 40,
            SceneKind::PoppedPocket => 24,
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = SceneError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SceneError::InvalidRecipe(format!("unknown scene kind '{s}'")))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecipe {
    pub kind: SceneKind,
    pub seed: u64,
    /// Grid cells along each sheet side.
    pub resolution: usize,
    /// Body frames, for scenes with a body.
    pub frames: usize,
    /// Uniform size factor.
    pub scale: f64,
}

pub const RESOLUTION_RANGE: std::ops::RangeInclusive<usize> = 4..=200;

impl SceneRecipe {
    pub fn new(kind: SceneKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            resolution: kind.default_resolution(),
            frames: 100,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !RESOLUTION_RANGE.contains(&self.resolution) {
            return Err(SceneError::InvalidRecipe(format!(
                "resolution {} outside {RESOLUTION_RANGE:?}",
                self.resolution
            )));
        }
        if self.frames > 100_000 {
            return Err(SceneError::InvalidRecipe("at most 100000 frames".into()));
        }
        if !(self.scale >= 0.1 && self.scale <= 10.0) {
            return Err(SceneError::InvalidRecipe("scale must lie in [0.1, 10]".into()));
        }
        Ok(())
    }
}

/// Generated garment, optional body motion and a matching configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub garment: ObjMesh,
    pub body: Option<MotionSequence>,
    pub config: RunConfig,
}

pub fn generate(recipe: &SceneRecipe) -> Result<Scene, SceneError> {
    recipe.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let n = recipe.resolution;
    let mut scene = match recipe.kind {
        SceneKind::StackedSheets => stacked_sheets(n, &mut rng),
        SceneKind::SphereBody => sphere_body(n, recipe.frames, &mut rng),
        SceneKind::PiercedSheet => pierced_sheet(n, recipe.frames, &mut rng),
        SceneKind::NestedPierce => nested_pierce(n, &mut rng),
        SceneKind::PoppedPocket => popped_pocket(n, &mut rng),
    };
    if recipe.scale != 1.0 {
        let s = recipe.scale;
        scene.garment.positions.iter_mut().for_each(|p| *p *= s);
        if let Some(body) = &mut scene.body {
            body.frames.iter_mut().flatten().for_each(|p| *p *= s);
        }
    }
    Ok(scene)
}

fn jitter(rng: &mut ChaCha8Rng, amount: f64) -> f64 {
    rng.gen_range(-amount..amount)
}

/// Concatenates sheets into one garment with a piece per sheet.
fn assemble(parts: Vec<(&str, MeshData)>) -> ObjMesh {
    let mut all = MeshData::default();
    let mut pieces = Vec::new();
    for (label, part) in parts {
        let (v0, f0) = (all.positions.len(), all.faces.len());
        all.append(&part);
        pieces.push(GarmentPiece {
            label: label.to_string(),
            vertices: v0..all.positions.len(),
            faces: f0..all.faces.len(),
        });
    }
    ObjMesh {
        positions: all.positions,
        faces: all.faces,
        pieces,
    }
}

/// Flat sheet at height `z`, shifted by `shift` cells and jittered in plane.
fn sheet(n: usize, width: f64, z: f64, shift: f64, rng: &mut ChaCha8Rng) -> MeshData {
    let h = width / n as f64;
    let mut mesh = grid_sheet(n, n, width, width, Vec3::new(shift * h, shift * h, z));
    for p in &mut mesh.positions {
        p.x += jitter(rng, 0.05 * h);
        p.y += jitter(rng, 0.05 * h);
    }
    mesh
}

fn static_body(mesh: MeshData, frames: usize) -> MotionSequence {
    MotionSequence {
        vertex_count: mesh.positions.len(),
        faces: mesh.faces,
        frames: vec![mesh.positions; frames],
        fps: 30.0,
    }
}

fn base_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.solver.lambda_repulsion = 1e5;
    cfg.solver.lambda_ic = 1e3;
    // Two-millimetre fabric: at 1 mm, coarse layers draped over a curved body
    // let edges slip through between repelled vertices.
    cfg.solver.xi = 0.002;
    cfg
}

fn stacked_sheets(n: usize, rng: &mut ChaCha8Rng) -> Scene {
    let layers = (0..2)
        .map(|k| (if k == 0 { "layer0" } else { "layer1" }, sheet(n, 0.5, 0.02 * k as f64, 0.5 * k as f64, rng)))
        .collect();
    Scene {
        garment: assemble(layers),
        body: None,
        config: base_config(),
    }
}

fn sphere_body(n: usize, frames: usize, rng: &mut ChaCha8Rng) -> Scene {
    let radius = 0.2;
    let garment = assemble(vec![
        ("layer0", sheet(n, 0.6, radius + 0.02, 0.0, rng)),
        ("layer1", sheet(n, 0.6, radius + 0.04, 0.5, rng)),
    ]);
    Scene {
        garment,
        body: Some(static_body(uv_sphere(Vec3::zeros(), radius, 16, 24), frames)),
        config: base_config(),
    }
}

fn pierced_sheet(n: usize, frames: usize, rng: &mut ChaCha8Rng) -> Scene {
    let (width, cap_width, cap_radius, depth) = (1.0, 0.5, 0.5, 0.03);
    let flat = sheet(n, width, 0.0, 0.0, rng);
    let cap_cells = (n / 2).max(2);
    let cap = sheet(cap_cells, cap_width, 0.0, 0.5, rng).map_positions(|p| {
        let r2 = p.x * p.x + p.y * p.y;
        Vec3::new(p.x, p.y, (cap_radius * cap_radius - r2).sqrt() - cap_radius + depth)
    });
    let body_radius = 0.3;
    let body = uv_sphere(Vec3::new(0.0, 0.0, -0.2 - body_radius), body_radius, 16, 24);
    Scene {
        garment: assemble(vec![("sheet", flat), ("patch", cap)]),
        body: Some(static_body(body, frames)),
        config: base_config(),
    }
}

fn nested_pierce(n: usize, rng: &mut ChaCha8Rng) -> Scene {
    let (width, wavelength, amplitude) = (1.0, 0.4, 0.02);
    let flat = sheet(n, width, 0.0, 0.0, rng);
    let rippled = sheet(n, width, 0.0, 0.5, rng).map_positions(|p| {
        let r = (p.x * p.x + p.y * p.y).sqrt();
        let z = if r <= wavelength {
            amplitude * (2.0 * std::f64::consts::PI * r / wavelength).cos()
        } else {
            amplitude
        };
        Vec3::new(p.x, p.y, z)
    });
    Scene {
        garment: assemble(vec![("sheet", flat), ("rippled", rippled)]),
        body: None,
        config: base_config(),
    }
}

fn popped_pocket(n: usize, rng: &mut ChaCha8Rng) -> Scene {
    let width = 0.6;
    let h = width / n as f64;
    let base = grid_sheet(n, n, width, width, Vec3::zeros());
    let mut positions = base.positions;
    let faces_sheet = base.faces;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let (i0, i1) = (3 * n / 8, 5 * n / 8);
    let (j0, j1) = (n / 4, 3 * n / 4);
    let span = (j1 - j0) as f64 * h;
    let rows = 2 * (j1 - j0) + 1;
    let lift = 0.02;

    let first_strip = positions.len();
    for r in 1..=rows {
        let t = r as f64 / (rows + 1) as f64;
        for i in i0..=i1 {
            let q = positions[idx(i, j0)];
            positions.push(Vec3::new(
                q.x + jitter(rng, 0.15 * h),
                q.y + t * span + jitter(rng, 0.15 * h),
                lift * (3.0 * std::f64::consts::PI * t).sin(),
            ));
        }
    }
    let cols = i1 - i0 + 1;
    let strip = |r: usize, c: usize| -> usize {
        if r == 0 {
            idx(i0 + c, j0)
        } else if r == rows + 1 {
            idx(i0 + c, j1)
        } else {
            first_strip + (r - 1) * cols + c
        }
    };
    let mut pocket_faces = Vec::new();
    for r in 0..=rows {
        for c in 0..cols - 1 {
            let (a, b, cc, d) = (strip(r, c), strip(r, c + 1), strip(r + 1, c + 1), strip(r + 1, c));
            if (r + c) % 2 == 0 {
                pocket_faces.push([a, b, cc]);
                pocket_faces.push([a, cc, d]);
            } else {
                pocket_faces.push([a, b, d]);
                pocket_faces.push([b, cc, d]);
            }
        }
    }
    let sheet_faces = faces_sheet.len();
    let mut faces = faces_sheet;
    faces.extend(pocket_faces);
    let pieces = vec![
        GarmentPiece {
            label: "sheet".into(),
            vertices: 0..first_strip,
            faces: 0..sheet_faces,
        },
        GarmentPiece {
            label: "pocket".into(),
            vertices: first_strip..positions.len(),
            faces: sheet_faces..faces.len(),
        },
    ];
    Scene {
        garment: ObjMesh {
            positions,
            faces,
            pieces,
        },
        body: None,
        config: base_config(),
    }
}

/// A garment whose starting shape differs from its rest shape, with a body.
#[derive(Debug, Clone, PartialEq)]
pub struct TangledScene {
    /// Topology, pieces and rest positions.
    pub garment: ObjMesh,
    pub initial: Vec<Vec3>,
    pub body: MotionSequence,
    pub config: RunConfig,
}

/// Two spherical-cap layers around a static sphere, the outer one pressed
/// inward through the inner one over a round patch. The untangled rest shape
/// has no intersections, so every crossing at the start is an error the
/// solver has to undo while the layers rest on the body.
pub fn tangled_layers(n: usize, frames: usize) -> Result<TangledScene, SceneError> {
    if !RESOLUTION_RANGE.contains(&n) {
        return Err(SceneError::InvalidRecipe(format!("resolution {n} outside {RESOLUTION_RANGE:?}")));
    }
    let (radius, width, half_angle, depth) = (0.2, 0.6, 0.45, 0.022);
    let cap = |shift: f64, lift: &dyn Fn(f64) -> f64| {
        let h = width / n as f64;
        grid_sheet(n, n, width, width, Vec3::new(shift * h, shift * h, 0.0)).map_positions(|p| {
            let dir = Vec3::new(p.x, p.y, 0.25).normalize();
            dir * lift(dir.z.clamp(-1.0, 1.0).acos())
        })
    };
    let bump = |theta: f64| {
        let u = theta / half_angle;
        if u < 1.0 {
            (1.0 - u * u).powi(2)
        } else {
            0.0
        }
    };
    let inner = cap(0.0, &|_| radius + 0.01);
    let outer_rest = cap(0.5, &|_| radius + 0.025);
    let outer_start = cap(0.5, &|t| radius + 0.025 - depth * bump(t));
    let garment = assemble(vec![("inner", inner.clone()), ("outer", outer_rest)]);
    let mut initial = inner.positions;
    initial.extend(outer_start.positions);
    let mut config = base_config();
    config.material.stretch_stiffness = 500.0;
    Ok(TangledScene {
        garment,
        initial,
        body: static_body(uv_sphere(Vec3::zeros(), radius, 16, 24), frames),
        config,
    })
}
