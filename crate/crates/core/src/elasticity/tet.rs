//! Fixed-corotated elasticity on linear tetrahedra.

use nalgebra::{Matrix3, SMatrix, SVector};

use super::Local;
use crate::error::{Error, Result};
use crate::math::{project_psd, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetRest {
    pub nodes: [usize; 4],
    pub dm_inv: Mat3,
    pub volume: f64,
}

impl TetRest {
    pub fn new(nodes: [usize; 4], rest: &[Vec3], index: usize) -> Result<Self> {
        let [a, b, c, d] = nodes.map(|n| rest[n]);
        let dm = Mat3::from_columns(&[b - a, c - a, d - a]);
        let vol = dm.determinant() / 6.0;
        if !(vol > 0.0) {
            return Err(Error::DegenerateElement { kind: "tet", index });
        }
        Ok(Self {
            nodes,
            dm_inv: dm
                .try_inverse()
                .ok_or(Error::DegenerateElement { kind: "tet", index })?,
            volume: vol,
        })
    }

    pub fn deformation_gradient(&self, x: &[Vec3]) -> Mat3 {
        let [a, b, c, d] = self.nodes.map(|n| x[n]);
        Mat3::from_columns(&[b - a, c - a, d - a]) * self.dm_inv
    }

    /// `d vec(F) / dx`, 9x12.
    pub fn df_dx(&self) -> SMatrix<f64, 9, 12> {
        let b = &self.dm_inv;
        let mut g = SMatrix::<f64, 9, 12>::zeros();
        for j in 0..3 {
            let coef = [
                -(b[(0, j)] + b[(1, j)] + b[(2, j)]),
                b[(0, j)],
                b[(1, j)],
                b[(2, j)],
            ];
            for (node, c) in coef.iter().enumerate() {
                for k in 0..3 {
                    g[(3 * j + k, 3 * node + k)] = *c;
                }
            }
        }
        g
    }
}

/// SVD with `U`, `V` proper rotations; the smallest singular value carries
/// the sign of `det F`.
pub fn signed_svd(f: &Mat3) -> (Mat3, Vec3, Mat3) {
    let svd = f.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut vt = svd.v_t.expect("v requested");
    let mut s = svd.singular_values;
    // Sort descending.
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let u0 = u;
    let vt0 = vt;
    let s0 = s;
    for (k, &i) in idx.iter().enumerate() {
        u.set_column(k, &u0.column(i));
        vt.set_row(k, &vt0.row(i));
        s[k] = s0[i];
    }
    let mut v = vt.transpose();
    if u.determinant() < 0.0 {
        let c = -u.column(2);
        u.set_column(2, &c);
        s[2] = -s[2];
    }
    if v.determinant() < 0.0 {
        let c = -v.column(2);
        v.set_column(2, &c);
        s[2] = -s[2];
    }
    (u, s, v)
}

/// `V (mu sum (sigma_i - 1)^2 + lambda/2 (J - 1)^2)` with gradient and
/// Hessian over the four nodes.
pub fn fixed_corotated_tet_energy(
    tet: &TetRest,
    x: &[Vec3],
    lambda: f64,
    mu: f64,
    project: bool,
) -> Local<12> {
    let f = tet.deformation_gradient(x);
    let (u, s, v) = signed_svd(&f);
    let j = s[0] * s[1] * s[2];
    let vol = tet.volume;

    let psi = mu * s.iter().map(|si| (si - 1.0) * (si - 1.0)).sum::<f64>()
        + 0.5 * lambda * (j - 1.0) * (j - 1.0);
    let mut d1 = [0.0; 3];
    let mut d2 = Matrix3::zeros();
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        d1[i] = 2.0 * mu * (s[i] - 1.0) + lambda * (j - 1.0) * s[a] * s[b];
        d2[(i, i)] = 2.0 * mu + lambda * (s[a] * s[b]).powi(2);
        for k in 0..3 {
            if k != i {
                let o = 3 - i - k;
                let jk = s[(k + 1) % 3] * s[(k + 2) % 3];
                d2[(i, k)] = lambda * (s[a] * s[b]) * jk + lambda * (j - 1.0) * s[o];
            }
        }
    }

    let outer = |i: usize, k: usize| -> SVector<f64, 9> {
        let m: Mat3 = u.column(i) * v.column(k).transpose();
        SVector::<f64, 9>::from_iterator(m.iter().copied())
    };

    let mut p = Mat3::zeros();
    for i in 0..3 {
        p += u.column(i) * v.column(i).transpose() * d1[i];
    }
    let grad_f = SVector::<f64, 9>::from_iterator(p.iter().copied()) * vol;

    let mut hess_f = SMatrix::<f64, 9, 9>::zeros();
    let diag = if project { project_psd(&d2) } else { d2 };
    for i in 0..3 {
        for k in 0..3 {
            let c = diag[(i, k)];
            if c != 0.0 {
                hess_f += outer(i, i) * outer(k, k).transpose() * c;
            }
        }
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for (i, k) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let o = 3 - i - k;
        let sym = 2.0 * mu - lambda * (j - 1.0) * s[o];
        let sum = s[i] + s[k];
        let sum = if sum.abs() < 1e-12 {
            1e-12f64.copysign(sum)
        } else {
            sum
        };
        let anti = 2.0 * mu * (1.0 - 2.0 / sum) + lambda * (j - 1.0) * s[o];
        for (lam, sign) in [(sym, 1.0), (anti, -1.0)] {
            let lam = if project { lam.max(0.0) } else { lam };
            if lam != 0.0 {
                let m = (outer(i, k) + outer(k, i) * sign) * inv_sqrt2;
                hess_f += m * m.transpose() * lam;
            }
        }
    }
    hess_f *= vol;

    let g = tet.df_dx();
    Local {
        energy: vol * psi,
        grad: g.transpose() * grad_f,
        hess: g.transpose() * hess_f * g,
    }
}
