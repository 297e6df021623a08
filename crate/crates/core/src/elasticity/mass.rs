//! Lumped nodal masses for every codimension.

use std::f64::consts::PI;

/// Shell triangle volume `A t`.
pub fn shell_volume(area: f64, thickness: f64) -> f64 {
    area * thickness
}

/// Rod segment volume `l pi r^2`.
pub fn rod_volume(rest_length: f64, radius: f64) -> f64 {
    rest_length * PI * radius * radius
}

/// Particle volume `4/3 pi r^3`.
pub fn particle_volume(radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius.powi(3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub node_mass: Vec<f64>,
    /// Sum of element masses `rho V`.
    pub total: f64,
}

/// Split each element's mass `rho V` evenly over its nodes.
pub fn lump_masses<'a>(
    n_nodes: usize,
    elements: impl IntoIterator<Item = (&'a [usize], f64, f64)>,
) -> MassReport {
    let mut node_mass = vec![0.0; n_nodes];
    let mut total = 0.0;
    for (nodes, density, volume) in elements {
        let m = density * volume;
        total += m;
        let share = m / nodes.len() as f64;
        for &n in nodes {
            node_mass[n] += share;
        }
    }
    MassReport { node_mass, total }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cotton_triangle_mass() {
        let v = shell_volume(1.0, 0.318e-3);
        let r = lump_masses(3, [(&[0usize, 1, 2][..], 472.6, v)]);
        assert!((r.total - 0.150_286_8).abs() < 1e-15);
        assert!((r.node_mass[0] - 0.150_286_8 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grain_mass() {
        let r = lump_masses(1, [(&[0usize][..], 1600.0, 4.2e-9)]);
        assert!((r.total - 6.72e-6).abs() < 1e-18);
        assert!((1600.0 * particle_volume(1e-3) - 6.702e-6).abs() < 1e-9);
    }
}
