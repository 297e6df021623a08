//! Membrane energies on Green strain.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::{lame_plane_stress, pull_back_triangle, Local, TriangleRest};
use crate::error::{Error, Result};
use crate::math::{project_psd, Vec3};
use crate::strain_limit::{aniso_psi, AnisoParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembraneModel {
    StVK {
        lambda: f64,
        mu: f64,
    },
    NeoHookean {
        lambda: f64,
        mu: f64,
    },
    /// Orthotropic model; with linear bases this is orthotropic StVK.
    Orthotropic(AnisoParams),
}

impl MembraneModel {
    pub fn stvk(young: f64, poisson: f64) -> Self {
        let (lambda, mu) = lame_plane_stress(young, poisson);
        MembraneModel::StVK { lambda, mu }
    }

    pub fn neo_hookean(young: f64, poisson: f64) -> Self {
        let (lambda, mu) = lame_plane_stress(young, poisson);
        MembraneModel::NeoHookean { lambda, mu }
    }

    /// Density and its derivatives in `(E11, E12, E22)`.
    pub fn density(&self, e: [f64; 3]) -> Result<(f64, SVector<f64, 3>, Matrix3<f64>)> {
        match *self {
            MembraneModel::StVK { lambda, mu } => {
                let [e11, e12, e22] = e;
                let tr = e11 + e22;
                let psi = mu * (e11 * e11 + 2.0 * e12 * e12 + e22 * e22) + 0.5 * lambda * tr * tr;
                let g = SVector::<f64, 3>::new(
                    2.0 * mu * e11 + lambda * tr,
                    4.0 * mu * e12,
                    2.0 * mu * e22 + lambda * tr,
                );
                let h = Matrix3::new(
                    2.0 * mu + lambda,
                    0.0,
                    lambda,
                    0.0,
                    4.0 * mu,
                    0.0,
                    lambda,
                    0.0,
                    2.0 * mu + lambda,
                );
                Ok((psi, g, h))
            }
            MembraneModel::NeoHookean { lambda, mu } => {
                // Right Cauchy-Green C = I + 2E in (c11, c12, c22).
                let c11 = 1.0 + 2.0 * e[0];
                let c12 = 2.0 * e[1];
                let c22 = 1.0 + 2.0 * e[2];
                let det = c11 * c22 - c12 * c12;
                if !(det > 0.0) {
                    return Err(Error::DegenerateElement {
                        kind: "membrane",
                        index: usize::MAX,
                    });
                }
                let l = det.ln();
                let psi = 0.5 * mu * (c11 + c22 - 2.0 - l) + 0.125 * lambda * l * l;
                let q = SVector::<f64, 3>::new(c22, -2.0 * c12, c11) / det;
                let k = -0.5 * mu + 0.25 * lambda * l;
                let g_c = SVector::<f64, 3>::new(0.5 * mu, 0.0, 0.5 * mu) + q * k;
                let d2 = Matrix3::new(0.0, 0.0, 1.0, 0.0, -2.0, 0.0, 1.0, 0.0, 0.0) / det;
                let h_c = (d2 - q * q.transpose()) * k + q * q.transpose() * (0.25 * lambda);
                Ok((psi, g_c * 2.0, h_c * 4.0))
            }
            MembraneModel::Orthotropic(ref p) => aniso_psi(e, p),
        }
    }
}

/// Green strain `(E11, E12, E22)` of a triangle.
pub fn green_strain(tri: &TriangleRest, x: &[Vec3]) -> [f64; 3] {
    let f = tri.deformation_gradient(x);
    let f1 = f.column(0);
    let f2 = f.column(1);
    [
        0.5 * (f1.dot(&f1) - 1.0),
        0.5 * f1.dot(&f2),
        0.5 * (f2.dot(&f2) - 1.0),
    ]
}

/// Membrane energy `V psi(E)` with gradient and Hessian in the triangle's
/// nine coordinates. The Hessian is projected to PSD when `project` is set.
pub fn membrane_energy(
    tri: &TriangleRest,
    x: &[Vec3],
    model: &MembraneModel,
    project: bool,
) -> Result<Local<9>> {
    let f = tri.deformation_gradient(x);
    let f1: Vec3 = f.column(0).into_owned();
    let f2: Vec3 = f.column(1).into_owned();
    let e = [
        0.5 * (f1.dot(&f1) - 1.0),
        0.5 * f1.dot(&f2),
        0.5 * (f2.dot(&f2) - 1.0),
    ];
    let (psi, g_e, h_e) = model.density(e)?;
    let vol = tri.volume();

    // Jacobian of (E11, E12, E22) with respect to vec(F) = (f1, f2).
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    for k in 0..3 {
        j[(0, k)] = f1[k];
        j[(1, k)] = 0.5 * f2[k];
        j[(1, 3 + k)] = 0.5 * f1[k];
        j[(2, 3 + k)] = f2[k];
    }
    let grad_f = j.transpose() * g_e * vol;
    let mut hess_f = j.transpose() * h_e * j;
    for k in 0..3 {
        hess_f[(k, k)] += g_e[0];
        hess_f[(3 + k, 3 + k)] += g_e[2];
        hess_f[(k, 3 + k)] += 0.5 * g_e[1];
        hess_f[(3 + k, k)] += 0.5 * g_e[1];
    }
    hess_f *= vol;
    let (grad, mut hess) = pull_back_triangle(tri, &grad_f, &hess_f);
    if project {
        hess = project_psd(&hess);
    }
    Ok(Local {
        energy: vol * psi,
        grad,
        hess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> (TriangleRest, Vec<Vec3>) {
        let rest = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        (TriangleRest::new([0, 1, 2], &rest, 0.01, 0).unwrap(), rest)
    }

    #[test]
    fn rest_is_stress_free() {
        let (t, rest) = tri();
        for m in [
            MembraneModel::stvk(1e5, 0.3),
            MembraneModel::neo_hookean(1e5, 0.3),
        ] {
            let l = membrane_energy(&t, &rest, &m, true).unwrap();
            assert_eq!(l.energy, 0.0);
            assert!(l.grad.norm() < 1e-12);
        }
    }

    #[test]
    fn uniform_stretch_stvk() {
        let (t, rest) = tri();
        let s = 1.2;
        let x: Vec<Vec3> = rest.iter().map(|p| p * s).collect();
        let (lambda, mu) = lame_plane_stress(1e5, 0.3);
        let e = 0.5 * (s * s - 1.0);
        let expected = 0.5 * 0.01 * (2.0 * mu * e * e + 2.0 * lambda * e * e);
        let l = membrane_energy(&t, &x, &MembraneModel::stvk(1e5, 0.3), false).unwrap();
        assert!((l.energy - expected).abs() < 1e-9 * expected);
    }
}
