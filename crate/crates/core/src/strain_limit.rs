//! Constitutive strain limiting.
//!
//! The isotropic limiter is a clamped log barrier on each singular value of
//! a shell triangle's deformation gradient, integrated over the triangle
//! volume. The anisotropic variant swaps the basis functions of an
//! orthotropic membrane model for barriers that diverge at per-direction
//! Green-strain bounds.

use nalgebra::{Matrix3, Matrix3x2, SMatrix, SVector, Vector2};

use crate::elasticity::{pull_back_triangle, Local, TriangleRest};
use crate::error::{Error, Result};
use crate::math::{Mat2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainLimitParams {
    /// Stretch limit, `> 1`.
    pub s: f64,
    /// Activation threshold, `< s`.
    pub shat: f64,
    pub kappa_s_init: f64,
    pub kappa_s_max: f64,
}

impl StrainLimitParams {
    pub fn new(s: f64) -> Self {
        Self {
            s,
            shat: 1.0,
            kappa_s_init: 1e3,
            kappa_s_max: 1e5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shat < self.s) || !(self.s > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "strain limit needs 1 < s and shat < s (s = {}, shat = {})",
                self.s, self.shat
            )));
        }
        if !(self.kappa_s_init > 0.0 && self.kappa_s_init <= self.kappa_s_max) {
            return Err(Error::InvalidParameter(
                "strain-limit stiffness bounds".into(),
            ));
        }
        Ok(())
    }
}

/// `b(y) = -y^2 ln(1 + y)` for `y < 0`, else 0, with first and second
/// derivatives in `y`.
pub fn sl_barrier_normalized(y: f64) -> (f64, f64, f64) {
    if y >= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let l = y.ln_1p();
    let q = 1.0 + y;
    let b = -y * y * l;
    let b1 = -2.0 * y * l - y * y / q;
    let b2 = -2.0 * l - 2.0 * y / q - (2.0 * y + y * y) / (q * q);
    (b, b1, b2)
}

/// Strain-limit barrier on one singular value.
pub fn sl_barrier(sigma: f64, s: f64, shat: f64) -> Result<f64> {
    Ok(sl_barrier_derivs(sigma, s, shat)?.0)
}

/// Value and derivatives with respect to `sigma`.
pub fn sl_barrier_derivs(sigma: f64, s: f64, shat: f64) -> Result<(f64, f64, f64)> {
    if !(sigma < s) {
        return Err(Error::StrainLimitBreach { sigma, limit: s });
    }
    if sigma <= shat {
        return Ok((0.0, 0.0, 0.0));
    }
    let w = s - shat;
    let (b, b1, b2) = sl_barrier_normalized((shat - sigma) / w);
    Ok((b, -b1 / w, b2 / (w * w)))
}

/// Thin SVD of a 3x2 deformation gradient.
///
/// `u` holds `u1, u2` and `u3 = u1 x u2` as columns; singular values are
/// sorted descending.
#[derive(Debug, Clone, Copy)]
pub struct Svd32 {
    pub u: Matrix3<f64>,
    pub sigma: [f64; 2],
    pub v: Mat2,
}

pub fn svd32(f: &Matrix3x2<f64>) -> Svd32 {
    let f1 = f.column(0).into_owned();
    let f2 = f.column(1).into_owned();
    let c11 = f1.norm_squared();
    let c22 = f2.norm_squared();
    let c12 = f1.dot(&f2);
    let det = f1.cross(&f2).norm_squared();
    let tr = c11 + c22;
    let r = ((c11 - c22) * (c11 - c22) + 4.0 * c12 * c12).sqrt();
    let l1 = 0.5 * (tr + r);
    let l2 = if l1 > 0.0 { det / l1 } else { 0.0 };
    let s1 = l1.sqrt();
    let s2 = l2.sqrt();

    let v1 = if c12 == 0.0 {
        if c11 >= c22 {
            Vector2::new(1.0, 0.0)
        } else {
            Vector2::new(0.0, 1.0)
        }
    } else {
        let a = Vector2::new(c12, l1 - c11);
        let b = Vector2::new(l1 - c22, c12);
        if a.norm_squared() >= b.norm_squared() {
            a.normalize()
        } else {
            b.normalize()
        }
    };
    let v2 = Vector2::new(-v1.y, v1.x);
    let v = Mat2::from_columns(&[v1, v2]);

    let u1 = if s1 > 0.0 { (f * v1) / s1 } else { Vec3::x() };
    let u2 = if s2 > 1e-300 {
        let w = (f * v2) / s2;
        // Re-orthogonalize against u1 to absorb cancellation in tiny s2.
        (w - u1 * u1.dot(&w)).normalize()
    } else {
        any_perpendicular(&u1)
    };
    let u3 = u1.cross(&u2);
    Svd32 {
        u: Matrix3::from_columns(&[u1, u2, u3]),
        sigma: [s1, s2],
        v,
    }
}

fn any_perpendicular(a: &Vec3) -> Vec3 {
    let t = if a.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    a.cross(&t).normalize()
}

/// Singular values of a triangle's deformation gradient.
pub fn singular_values(tri: &TriangleRest, x: &[Vec3]) -> [f64; 2] {
    svd32(&tri.deformation_gradient(x)).sigma
}

/// True when every principal stretch of the triangle is at most `shat`,
/// decided exactly from edge Gram matrices: `shat^2 G_rest - G` is PSD.
pub fn below_threshold(tri: &TriangleRest, x: &[Vec3], shat: f64) -> bool {
    let m = tri.rest_gram * (shat * shat) - tri.current_gram(x);
    m[(0, 0)] >= 0.0 && m[(1, 1)] >= 0.0 && m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] >= 0.0
}

/// Hessian in `vec(F)` of `sum_i f(sigma_i)` from the per-value derivatives,
/// assembled from its closed-form eigen-decomposition. Negative modes are
/// clamped when `project` is set.
pub(crate) fn singular_value_hessian(
    svd: &Svd32,
    d1: [f64; 2],
    d2: [f64; 2],
    project: bool,
) -> SMatrix<f64, 6, 6> {
    let [s1, s2] = svd.sigma;
    let u1 = svd.u.column(0).into_owned();
    let u2 = svd.u.column(1).into_owned();
    let u3 = svd.u.column(2).into_owned();
    let v1 = svd.v.column(0).into_owned();
    let v2 = svd.v.column(1).into_owned();

    let outer = |u: &Vec3, v: &Vector2<f64>| -> SVector<f64, 6> {
        let m: Matrix3x2<f64> = u * v.transpose();
        SVector::<f64, 6>::from_iterator(m.iter().copied())
    };
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    let flip = if (s1 - s2).abs() <= 1e-8 * s1.max(1e-300) {
        0.5 * (d2[0] + d2[1])
    } else {
        (d1[0] - d1[1]) / (s1 - s2)
    };
    let twist = if s1 + s2 > 0.0 {
        (d1[0] + d1[1]) / (s1 + s2)
    } else {
        0.0
    };
    let normal = |d: f64, s: f64| if s > 0.0 { d / s } else { 0.0 };

    let modes: [(f64, SVector<f64, 6>); 6] = [
        (d2[0], outer(&u1, &v1)),
        (d2[1], outer(&u2, &v2)),
        (flip, (outer(&u1, &v2) + outer(&u2, &v1)) * inv_sqrt2),
        (twist, (outer(&u1, &v2) - outer(&u2, &v1)) * inv_sqrt2),
        (normal(d1[0], s1), outer(&u3, &v1)),
        (normal(d1[1], s2), outer(&u3, &v2)),
    ];
    let mut h = SMatrix::<f64, 6, 6>::zeros();
    for (lam, m) in modes.iter() {
        let lam = if project { lam.max(0.0) } else { *lam };
        if lam != 0.0 {
            h += m * m.transpose() * lam;
        }
    }
    h
}

/// Strain-limit energy of one triangle, `kappa_s V sum_i b(sigma_i)`.
///
/// Returns `None` when the triangle is below the activation threshold, in
/// which case value, gradient and Hessian are exactly zero.
pub fn sl_triangle(
    tri: &TriangleRest,
    x: &[Vec3],
    params: &StrainLimitParams,
    kappa_s: f64,
    project: bool,
) -> Result<Option<Local<9>>> {
    if below_threshold(tri, x, params.shat) {
        return Ok(None);
    }
    let f = tri.deformation_gradient(x);
    let svd = svd32(&f);
    let scale = kappa_s * tri.volume();
    let mut energy = 0.0;
    let mut d1 = [0.0; 2];
    let mut d2 = [0.0; 2];
    for i in 0..2 {
        let (b, b1, b2) = sl_barrier_derivs(svd.sigma[i], params.s, params.shat)?;
        energy += scale * b;
        d1[i] = scale * b1;
        d2[i] = scale * b2;
    }
    if energy == 0.0 && d1 == [0.0; 2] {
        return Ok(None);
    }
    let mut p = Matrix3x2::<f64>::zeros();
    for i in 0..2 {
        p += svd.u.column(i) * svd.v.column(i).transpose() * d1[i];
    }
    let grad_f = SVector::<f64, 6>::from_iterator(p.iter().copied());
    let hess_f = singular_value_hessian(&svd, d1, d2, project);
    let (grad, hess) = pull_back_triangle(tri, &grad_f, &hess_f);
    Ok(Some(Local { energy, grad, hess }))
}

/// Total strain-limit potential over `tris` (value only).
pub fn sl_potential(
    tris: &[TriangleRest],
    x: &[Vec3],
    params: &StrainLimitParams,
    kappa_s: f64,
) -> Result<f64> {
    let mut e = 0.0;
    for t in tris {
        if below_threshold(t, x, params.shat) {
            continue;
        }
        let sv = singular_values(t, x);
        let mut sum = 0.0;
        for s in sv {
            sum += sl_barrier(s, params.s, params.shat)?;
        }
        e += kappa_s * t.volume() * sum;
    }
    Ok(e)
}

/// Largest principal stretch over `tris`.
pub fn max_stretch(tris: &[TriangleRest], x: &[Vec3]) -> f64 {
    tris.iter()
        .map(|t| singular_values(t, x)[0])
        .fold(0.0, f64::max)
}

/// True when every triangle satisfies `sigma < s` strictly.
pub fn strain_feasible(tris: &[TriangleRest], x: &[Vec3], s: f64) -> bool {
    tris.iter().all(|t| singular_values(t, x)[0] < s)
}

/// Per-step schedule for the strain-limit stiffness.
///
/// Doubles (up to the cap) whenever some triangle's gap `s - sigma_max` has
/// been below `1e-4 (s - shat)` in two consecutive iterations.
#[derive(Debug, Clone)]
pub struct KappaSAdapter {
    pub kappa_s: f64,
    init: f64,
    max: f64,
    threshold: f64,
    prev_below: Vec<bool>,
}

impl KappaSAdapter {
    pub fn new(params: &StrainLimitParams) -> Self {
        Self {
            kappa_s: params.kappa_s_init,
            init: params.kappa_s_init,
            max: params.kappa_s_max,
            threshold: 1e-4 * (params.s - params.shat),
            prev_below: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.kappa_s = self.init;
        self.prev_below.clear();
    }

    /// Feed the per-triangle gaps `s - sigma_max` of the latest iterate.
    pub fn update(&mut self, gaps: &[f64]) -> f64 {
        if self.prev_below.len() != gaps.len() {
            self.prev_below = vec![false; gaps.len()];
        }
        let mut trigger = false;
        for (g, prev) in gaps.iter().zip(self.prev_below.iter_mut()) {
            let below = *g < self.threshold;
            trigger |= below && *prev;
            *prev = below;
        }
        if trigger {
            self.kappa_s = (2.0 * self.kappa_s).min(self.max);
        }
        self.kappa_s
    }
}

/// Barrier basis `eta(E) = -E_max ln((E_max - E) / E_max)` with its first
/// and second derivatives. `eta(0) = 0` and `eta'(0) = 1`.
pub fn aniso_eta(e: f64, e_max: f64) -> Result<(f64, f64, f64)> {
    if !(e < e_max) {
        return Err(Error::EtaLimitBreach {
            value: e,
            limit: e_max,
        });
    }
    let q = e_max - e;
    Ok((-e_max * (-e / e_max).ln_1p(), e_max / q, e_max / (q * q)))
}

/// Basis choice for one term of the anisotropic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta {
    /// `eta(x) = x`: plain orthotropic StVK.
    Linear,
    /// Barrier diverging at the given argument bound.
    Barrier(f64),
}

impl Eta {
    fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        match *self {
            Eta::Linear => Ok((x, 1.0, 0.0)),
            Eta::Barrier(m) => aniso_eta(x, m),
        }
    }
}

/// Orthotropic membrane `psi = a11/2 eta1(E11^2) + a22/2 eta3(E22^2)
/// + a12 eta2(E11 E22) + G12 eta4(E12^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisoParams {
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub g12: f64,
    /// Bases for the `E11^2`, `E11 E22`, `E22^2` and `E12^2` terms.
    pub eta: [Eta; 4],
}

impl AnisoParams {
    /// Match the rest Hessian in `(E11, E12, E22)` order. Since every basis
    /// has unit slope at zero, the map is one-to-one.
    pub fn from_rest_hessian(c: &Matrix3<f64>, eta: [Eta; 4]) -> Self {
        Self {
            a11: c[(0, 0)],
            a22: c[(2, 2)],
            a12: c[(0, 2)],
            g12: 0.5 * c[(1, 1)],
            eta,
        }
    }

    /// Barrier bases from Green-strain bounds on the diagonal and
    /// off-diagonal entries.
    pub fn barrier_bases(diag_max: f64, shear_max: f64) -> [Eta; 4] {
        let d = diag_max * diag_max;
        [
            Eta::Barrier(d),
            Eta::Barrier(d),
            Eta::Barrier(d),
            Eta::Barrier(shear_max * shear_max),
        ]
    }

    pub fn rest_hessian(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.a11,
            0.0,
            self.a12,
            0.0,
            2.0 * self.g12,
            0.0,
            self.a12,
            0.0,
            self.a22,
        )
    }
}

/// Anisotropic energy density in `(E11, E12, E22)` with gradient and Hessian.
pub fn aniso_psi(e: [f64; 3], p: &AnisoParams) -> Result<(f64, SVector<f64, 3>, Matrix3<f64>)> {
    let [e11, e12, e22] = e;
    let (h1, h1d, h1dd) = p.eta[0].eval(e11 * e11)?;
    let (h2, h2d, h2dd) = p.eta[1].eval(e11 * e22)?;
    let (h3, h3d, h3dd) = p.eta[2].eval(e22 * e22)?;
    let (h4, h4d, h4dd) = p.eta[3].eval(e12 * e12)?;

    let psi = 0.5 * p.a11 * h1 + 0.5 * p.a22 * h3 + p.a12 * h2 + p.g12 * h4;
    let g = SVector::<f64, 3>::new(
        p.a11 * h1d * e11 + p.a12 * h2d * e22,
        2.0 * p.g12 * h4d * e12,
        p.a22 * h3d * e22 + p.a12 * h2d * e11,
    );
    let mut h = Matrix3::zeros();
    h[(0, 0)] = p.a11 * (h1d + 2.0 * e11 * e11 * h1dd) + p.a12 * h2dd * e22 * e22;
    h[(2, 2)] = p.a22 * (h3d + 2.0 * e22 * e22 * h3dd) + p.a12 * h2dd * e11 * e11;
    h[(0, 2)] = p.a12 * (h2d + e11 * e22 * h2dd);
    h[(2, 0)] = h[(0, 2)];
    h[(1, 1)] = 2.0 * p.g12 * (h4d + 2.0 * e12 * e12 * h4dd);
    Ok((psi, g, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_examples() {
        assert_eq!(sl_barrier(1.0, 1.1, 1.0).unwrap(), 0.0);
        assert_eq!(sl_barrier(0.9, 1.1, 1.0).unwrap(), 0.0);
        let v = sl_barrier(1.05, 1.1, 1.0).unwrap();
        assert!((v - 0.173_286_795_139_986_32).abs() < 1e-12);
        assert!((sl_barrier_normalized(-0.5).0 - 0.173_286_795_139_986_32).abs() < 1e-15);
        assert!(sl_barrier(1.1, 1.1, 1.0).is_err());
    }

    #[test]
    fn svd_of_scaled_rotation() {
        let rest = [
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.3, 0.8, 0.0),
        ];
        let tri = TriangleRest::new([0, 1, 2], &rest, 1e-3, 0).unwrap();
        let x: Vec<Vec3> = rest
            .iter()
            .map(|p| Vec3::new(-2.0 * p.y, 2.0 * p.x, 0.0))
            .collect();
        let s = singular_values(&tri, &x);
        assert!((s[0] - 2.0).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_s_doubles_then_saturates() {
        let p = StrainLimitParams::new(1.1);
        let mut k = KappaSAdapter::new(&p);
        let g = 1e-5 * 0.1;
        k.update(&[g]);
        assert_eq!(k.update(&[g]), 2e3);
        k.kappa_s = 1e5;
        assert_eq!(k.update(&[g]), 1e5);
        k.reset();
        assert_eq!(k.update(&[1.0]), 1e3);
    }

    #[test]
    fn eta_basis() {
        assert_eq!(aniso_eta(0.0, 0.14).unwrap(), (0.0, 1.0, 1.0 / 0.14));
        let v = aniso_eta(0.07, 0.14).unwrap().0;
        assert!((v - 0.097_040_605_278_392_35).abs() < 1e-15);
        assert!(aniso_eta(0.14, 0.14).is_err());
    }

    #[test]
    fn aniso_rest_hessian() {
        let c = Matrix3::new(3.0, 0.0, 0.7, 0.0, 1.2, 0.0, 0.7, 0.0, 2.0);
        let p = AnisoParams::from_rest_hessian(&c, AnisoParams::barrier_bases(0.14, 0.063));
        let (psi, g, h) = aniso_psi([0.0; 3], &p).unwrap();
        assert_eq!(psi, 0.0);
        assert_eq!(g, SVector::<f64, 3>::zeros());
        assert_eq!(h, c);
    }
}
