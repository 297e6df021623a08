//! Hyperelastic energies for shells, hinges, rods and tets, plus mass lumping.

pub mod bending;
pub mod mass;
pub mod membrane;
pub mod rod;
pub mod tet;

use nalgebra::{Matrix3x2, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::math::{Mat2, Vec3};

pub use bending::{bending_energy, Hinge};
pub use mass::{lump_masses, MassReport};
pub use membrane::{membrane_energy, MembraneModel};
pub use rod::{rod_stretch_energy, RodSegment};
pub use tet::{fixed_corotated_tet_energy, TetRest};

/// Energy with gradient and Hessian over an element's stacked nodes.
#[derive(Debug, Clone)]
pub struct Local<const N: usize> {
    pub energy: f64,
    pub grad: SVector<f64, N>,
    pub hess: SMatrix<f64, N, N>,
}

impl<const N: usize> Local<N> {
    pub fn zero() -> Self {
        Self {
            energy: 0.0,
            grad: SVector::zeros(),
            hess: SMatrix::zeros(),
        }
    }
}

/// Lamé parameters `(lambda, mu)` from Young's modulus and Poisson ratio.
pub fn lame(young: f64, poisson: f64) -> (f64, f64) {
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    (lambda, mu)
}

/// Plane-stress Lamé parameters for membranes.
pub fn lame_plane_stress(young: f64, poisson: f64) -> (f64, f64) {
    let mu = young / (2.0 * (1.0 + poisson));
    let lambda = young * poisson / (1.0 - poisson * poisson);
    (lambda, mu)
}

/// Rest data of a shell triangle.
///
/// The rest frame has its first axis along the rest edge `x1 - x0`, which
/// is also the material (warp) direction of anisotropic models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleRest {
    pub nodes: [usize; 3],
    /// Inverse of the 2x2 rest edge matrix in the rest frame.
    pub dm_inv: Mat2,
    /// Rest edge Gram matrix `[e1, e2]^T [e1, e2]`.
    pub rest_gram: Mat2,
    pub area: f64,
    pub thickness: f64,
}

impl TriangleRest {
    pub fn new(nodes: [usize; 3], rest: &[Vec3], thickness: f64, index: usize) -> Result<Self> {
        let [a, b, c] = nodes.map(|n| rest[n]);
        let e1 = b - a;
        let e2 = c - a;
        let n = e1.cross(&e2);
        let area = 0.5 * n.norm();
        let l1 = e1.norm();
        if !(area > 0.0)
            || !(l1 > 0.0)
            || !(area > 1e-14 * e1.norm_squared().max(e2.norm_squared()))
        {
            return Err(Error::DegenerateElement {
                kind: "triangle",
                index,
            });
        }
        let t1 = e1 / l1;
        let t2 = n.normalize().cross(&t1);
        let dm = Mat2::new(l1, e2.dot(&t1), 0.0, e2.dot(&t2));
        let dm_inv = dm.try_inverse().ok_or(Error::DegenerateElement {
            kind: "triangle",
            index,
        })?;
        Ok(Self {
            nodes,
            dm_inv,
            rest_gram: gram(&e1, &e2),
            area,
            thickness,
        })
    }

    pub fn volume(&self) -> f64 {
        self.area * self.thickness
    }

    pub fn positions(&self, x: &[Vec3]) -> [Vec3; 3] {
        self.nodes.map(|n| x[n])
    }

    pub fn deformation_gradient(&self, x: &[Vec3]) -> Matrix3x2<f64> {
        let [a, b, c] = self.positions(x);
        Matrix3x2::from_columns(&[b - a, c - a]) * self.dm_inv
    }

    /// Current edge Gram matrix.
    pub fn current_gram(&self, x: &[Vec3]) -> Mat2 {
        let [a, b, c] = self.positions(x);
        gram(&(b - a), &(c - a))
    }

    /// `dF/dx` as a 6x9 matrix, with `vec(F)` stacking the columns of `F`.
    pub fn df_dx(&self) -> SMatrix<f64, 6, 9> {
        let b = &self.dm_inv;
        let mut g = SMatrix::<f64, 6, 9>::zeros();
        for j in 0..2 {
            let coef = [-(b[(0, j)] + b[(1, j)]), b[(0, j)], b[(1, j)]];
            for (node, c) in coef.iter().enumerate() {
                for k in 0..3 {
                    g[(3 * j + k, 3 * node + k)] = *c;
                }
            }
        }
        g
    }
}

fn gram(e1: &Vec3, e2: &Vec3) -> Mat2 {
    let off = e1.dot(e2);
    Mat2::new(e1.dot(e1), off, off, e2.dot(e2))
}

/// Pull a gradient/Hessian in `vec(F)` back to the triangle's nodes.
pub(crate) fn pull_back_triangle(
    tri: &TriangleRest,
    grad_f: &SVector<f64, 6>,
    hess_f: &SMatrix<f64, 6, 6>,
) -> (SVector<f64, 9>, SMatrix<f64, 9, 9>) {
    let g = tri.df_dx();
    (g.transpose() * grad_f, g.transpose() * hess_f * g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_deformation_gradient_is_isometry() {
        let rest = [
            Vec3::new(0.1, 0.2, 0.3),
            Vec3::new(1.0, 0.4, -0.2),
            Vec3::new(0.2, 1.1, 0.5),
        ];
        let tri = TriangleRest::new([0, 1, 2], &rest, 1e-3, 0).unwrap();
        let f = tri.deformation_gradient(&rest);
        let c = f.transpose() * f;
        assert!((c - Mat2::identity()).norm() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let rest = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
        ];
        assert!(TriangleRest::new([0, 1, 2], &rest, 1e-3, 7).is_err());
    }
}
