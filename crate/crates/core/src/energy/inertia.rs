use crate::Vec3;

use super::{accumulate, par_elements};

/// Σ mᵢ/(2dt²) |xᵢ − (x̄ᵢ + dt vᵢ)|².
///
/// Together with the potential terms this is the implicit-Euler incremental
/// potential; its minimiser for a free node is `x̄ + dt v + dt² g`.
pub fn inertia_energy(
    masses: &[f64],
    positions: &[Vec3],
    prev_positions: &[Vec3],
    velocities: &[Vec3],
    dt: f64,
) -> (f64, Vec<Vec3>) {
    assert!(dt > 0.0, "time step must be positive");
    let inv = 1.0 / (dt * dt);
    let items = par_elements(positions.len(), |i| {
        let predicted = prev_positions[i] + velocities[i] * dt;
        let d = positions[i] - predicted;
        let m = masses[i] * inv;
        Some((0.5 * m * d.norm_squared(), [i], [d * m]))
    });
    accumulate(positions.len(), items)
}

/// −Σ mᵢ g·xᵢ.
pub fn gravity_energy(masses: &[f64], positions: &[Vec3], gravity: Vec3) -> (f64, Vec<Vec3>) {
    let items = par_elements(positions.len(), |i| {
        Some((-masses[i] * gravity.dot(&positions[i]), [i], [-gravity * masses[i]]))
    });
    accumulate(positions.len(), items)
}
