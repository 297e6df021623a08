//! Lagged smoothed Coulomb friction.
//!
//! Normal force magnitudes, closest-point weights and tangent frames are
//! frozen at a lagged configuration; the dissipative potential is then a
//! smooth function of the relative tangential displacement since `x^n`.

use nalgebra::{Matrix2, Matrix3x2, SMatrix, SVector, Vector2};

use crate::barrier::{mollifier, offset_barrier_derivs, BarrierParams};
use crate::distance::{edge_cross_sq_derivatives, stencil_derivatives, PairKind, PrimitivePair};
use crate::error::Result;
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub mu: f64,
    /// Static/kinetic transition speed (m/s); the displacement threshold
    /// is `epsv * h`.
    pub epsv: f64,
    /// Number of lagged updates per time step.
    pub lagged_iterations: usize,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            epsv: 1e-3,
            lagged_iterations: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaggedContact {
    pub pair: PrimitivePair,
    /// Normal force magnitude in incremental-potential units.
    pub lambda: f64,
    pub coeffs: [f64; 4],
    /// Orthonormal tangent frame, 3x2.
    pub basis: Matrix3x2<f64>,
    pub mu: f64,
}

impl LaggedContact {
    /// Relative tangential displacement `T^T sum_i c_i (x_i - x^n_i)`.
    pub fn tangent_displacement(&self, x: &[Vec3], x_prev: &[Vec3]) -> Vector2<f64> {
        let mut r = Vec3::zeros();
        for (k, &n) in self.pair.active_nodes().iter().enumerate() {
            r += (x[n] - x_prev[n]) * self.coeffs[k];
        }
        self.basis.transpose() * r
    }
}

fn tangent_basis(n: &Vec3) -> Matrix3x2<f64> {
    let a = n.map(f64::abs);
    let axis = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = n.cross(&axis).normalize();
    let t2 = n.cross(&t1);
    Matrix3x2::from_columns(&[t1, t2])
}

/// Freeze normal forces and frames of `pairs` at configuration `x`.
/// Pairs outside the barrier support are dropped.
pub fn build_lagged_contacts(
    pairs: &[PrimitivePair],
    x: &[Vec3],
    barrier: &BarrierParams,
    mu: f64,
) -> Result<Vec<LaggedContact>> {
    let mut out = Vec::new();
    if mu <= 0.0 {
        return Ok(out);
    }
    for pair in pairs {
        let p = pair.positions(x);
        let dd = stencil_derivatives(pair.kind, &p);
        let (b1, _) = offset_barrier_derivs(dd.d_sq, pair.xi, barrier.dhat)?;
        if b1 == 0.0 {
            continue;
        }
        let mut m = 1.0;
        if pair.kind == PairKind::EdgeEdge && pair.mollifier_eps > 0.0 {
            m = mollifier(edge_cross_sq_derivatives(&p).0, pair.mollifier_eps).0;
        }
        let d = dd.d_sq.sqrt();
        let lambda = -barrier.kappa * m * 2.0 * d * b1;
        if !(lambda > 0.0) {
            continue;
        }
        let n = dd.residual / dd.residual.norm();
        out.push(LaggedContact {
            pair: *pair,
            lambda,
            coeffs: dd.coeffs,
            basis: tangent_basis(&n),
            mu,
        });
    }
    Ok(out)
}

/// `f0(y)`, `f1(y) = f0'(y)` and `f1(y)/y` of the smoothed magnitude.
pub fn smooth_magnitude(y: f64, eps: f64) -> (f64, f64, f64) {
    if y >= eps {
        (y, 1.0, 1.0 / y)
    } else {
        let r = y / eps;
        (
            -y * r * r / 3.0 + y * r + eps / 3.0,
            r * (2.0 - r),
            (2.0 - r) / eps,
        )
    }
}

/// Friction energy, gradient and Hessian of one lagged contact. The
/// Hessian is positive semi-definite by construction.
pub fn friction_local(
    c: &LaggedContact,
    x: &[Vec3],
    x_prev: &[Vec3],
    eps: f64,
) -> (f64, SVector<f64, 12>, SMatrix<f64, 12, 12>) {
    let u = c.tangent_displacement(x, x_prev);
    let y = u.norm();
    let (f0, _, f1_over_y) = smooth_magnitude(y, eps);
    let scale = c.mu * c.lambda;
    let gu = u * (scale * f1_over_y);
    let hu: Matrix2<f64> = if y >= eps {
        let uh = u / y;
        (Matrix2::identity() - uh * uh.transpose()) * (scale / y)
    } else if y > 0.0 {
        let uh = u / y;
        Matrix2::identity() * (scale * f1_over_y) - uh * uh.transpose() * (scale * y / (eps * eps))
    } else {
        Matrix2::identity() * (scale * 2.0 / eps)
    };
    let tg = c.basis * gu;
    let thtt = c.basis * hu * c.basis.transpose();
    let mut grad = SVector::<f64, 12>::zeros();
    let mut hess = SMatrix::<f64, 12, 12>::zeros();
    let n = c.pair.kind.node_count();
    for i in 0..n {
        grad.fixed_rows_mut::<3>(3 * i)
            .copy_from(&(tg * c.coeffs[i]));
        for j in 0..n {
            hess.fixed_view_mut::<3, 3>(3 * i, 3 * j)
                .copy_from(&(thtt * (c.coeffs[i] * c.coeffs[j])));
        }
    }
    (scale * f0, grad, hess)
}

/// Total dissipative potential.
pub fn friction_energy(contacts: &[LaggedContact], x: &[Vec3], x_prev: &[Vec3], eps: f64) -> f64 {
    contacts
        .iter()
        .map(|c| {
            let y = c.tangent_displacement(x, x_prev).norm();
            c.mu * c.lambda * smooth_magnitude(y, eps).0
        })
        .sum()
}

/// Tangential force magnitude `mu lambda f1(|u|)` of one contact.
pub fn tangential_force(c: &LaggedContact, x: &[Vec3], x_prev: &[Vec3], eps: f64) -> f64 {
    let y = c.tangent_displacement(x, x_prev).norm();
    c.mu * c.lambda * smooth_magnitude(y, eps).1
}
