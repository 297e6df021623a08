//! Smoothly clamped log barrier on squared distances, its thickness-offset
//! form, per-pair contact energy and the adaptive contact stiffness.

use crate::distance::{
    edge_cross_sq_derivatives, stencil_derivatives, Grad12, Hess12, PairKind, PrimitivePair,
};
use crate::error::{Error, Result};
use crate::math::{project_psd, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    /// Activation distance beyond the offset (m).
    pub dhat: f64,
    pub kappa: f64,
    /// Conservative CCD factor in (0, 1).
    pub s_conservative: f64,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            dhat: 1e-3,
            kappa: 1.0,
            s_conservative: 0.1,
        }
    }
}

impl BarrierParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dhat > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dhat must be positive, got {}",
                self.dhat
            )));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.s_conservative > 0.0 && self.s_conservative < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "conservative factor must lie in (0, 1), got {}",
                self.s_conservative
            )));
        }
        Ok(())
    }
}

/// `b(d2, D) = -(d2 - D)^2 ln(d2 / D)` for `d2 < D`, else 0.
pub fn barrier(d_sq: f64, dhat_sq: f64) -> Result<f64> {
    if !(d_sq > 0.0) {
        return Err(Error::InfeasibleDistance { d_sq, xi: 0.0 });
    }
    if d_sq >= dhat_sq {
        return Ok(0.0);
    }
    let diff = d_sq - dhat_sq;
    Ok(-diff * diff * (d_sq / dhat_sq).ln())
}

/// First and second derivative of [`barrier`] with respect to `d_sq`.
pub fn barrier_derivs(d_sq: f64, dhat_sq: f64) -> Result<(f64, f64)> {
    if !(d_sq > 0.0) {
        return Err(Error::InfeasibleDistance { d_sq, xi: 0.0 });
    }
    if d_sq >= dhat_sq {
        return Ok((0.0, 0.0));
    }
    let diff = d_sq - dhat_sq;
    let l = (d_sq / dhat_sq).ln();
    let g = -2.0 * diff * l - diff * diff / d_sq;
    let h = -2.0 * l - 4.0 * diff / d_sq + diff * diff / (d_sq * d_sq);
    Ok((g, h))
}

/// Barrier shifted so it diverges at `d = xi` and vanishes for `d >= xi + dhat`.
pub fn offset_barrier(d_sq: f64, xi: f64, dhat: f64) -> Result<f64> {
    let (x, big_d) = offset_args(d_sq, xi, dhat)?;
    match x {
        Some(x) => barrier(x, big_d),
        None => Ok(0.0),
    }
}

/// Derivatives of [`offset_barrier`] with respect to `d_sq`.
pub fn offset_barrier_derivs(d_sq: f64, xi: f64, dhat: f64) -> Result<(f64, f64)> {
    let (x, big_d) = offset_args(d_sq, xi, dhat)?;
    match x {
        Some(x) => barrier_derivs(x, big_d),
        None => Ok((0.0, 0.0)),
    }
}

/// Shifted arguments `(d2 - xi^2, 2 xi dhat + dhat^2)`; `None` outside the
/// support. The support test is done on `d2` itself so `d = xi + dhat` lands
/// exactly on zero.
fn offset_args(d_sq: f64, xi: f64, dhat: f64) -> Result<(Option<f64>, f64)> {
    if !(d_sq > xi * xi) {
        return Err(Error::InfeasibleDistance { d_sq, xi });
    }
    let big_d = 2.0 * xi * dhat + dhat * dhat;
    let reach = xi + dhat;
    if d_sq >= reach * reach {
        return Ok((None, big_d));
    }
    Ok((Some(d_sq - xi * xi), big_d))
}

/// Edge-edge mollifier `e(c) = -c^2/eps^2 + 2c/eps` for `c < eps`, else 1.
pub fn mollifier(c: f64, eps: f64) -> (f64, f64, f64) {
    if eps <= 0.0 || c >= eps {
        return (1.0, 0.0, 0.0);
    }
    let r = c / eps;
    (r * (2.0 - r), (2.0 - 2.0 * r) / eps, -2.0 / (eps * eps))
}

/// Local energy, gradient and Hessian of one contact pair, stacked over its
/// (up to four) nodes.
#[derive(Debug, Clone)]
pub struct ContactLocal {
    pub energy: f64,
    pub grad: Grad12,
    pub hess: Hess12,
    pub d_sq: f64,
}

fn mollifier_value(pair: &PrimitivePair, p: &[Vec3; 4]) -> f64 {
    if pair.kind != PairKind::EdgeEdge || pair.mollifier_eps <= 0.0 {
        return 1.0;
    }
    let c = (p[1] - p[0]).cross(&(p[3] - p[2])).norm_squared();
    mollifier(c, pair.mollifier_eps).0
}

/// `kappa * m(x) * b_xi(d^2(x))` for one pair.
pub fn contact_energy(pair: &PrimitivePair, x: &[Vec3], params: &BarrierParams) -> Result<f64> {
    let p = pair.positions(x);
    let d = crate::distance::stencil_distance(pair.kind, &p);
    let b = offset_barrier(d.d_sq, pair.xi, params.dhat)?;
    if b == 0.0 {
        return Ok(0.0);
    }
    Ok(params.kappa * mollifier_value(pair, &p) * b)
}

/// Energy, gradient and PSD-projected Hessian of one pair. Returns `None`
/// when the pair is outside the barrier support.
pub fn contact_grad_hess(
    pair: &PrimitivePair,
    x: &[Vec3],
    params: &BarrierParams,
    project: bool,
) -> Result<Option<ContactLocal>> {
    let p = pair.positions(x);
    let dd = stencil_derivatives(pair.kind, &p);
    let b = offset_barrier(dd.d_sq, pair.xi, params.dhat)?;
    if b == 0.0 {
        return Ok(None);
    }
    let (b1, b2) = offset_barrier_derivs(dd.d_sq, pair.xi, params.dhat)?;
    let k = params.kappa;

    let mut grad = dd.grad * (k * b1);
    let mut hess = (dd.grad * dd.grad.transpose()) * (k * b2) + dd.hess * (k * b1);
    let mut energy = k * b;

    if pair.kind == PairKind::EdgeEdge && pair.mollifier_eps > 0.0 {
        let (c, gc, hc) = edge_cross_sq_derivatives(&p);
        let (m, m1, m2) = mollifier(c, pair.mollifier_eps);
        if m < 1.0 {
            let cross = gc * dd.grad.transpose();
            hess = hess * m
                + (gc * gc.transpose()) * (k * b * m2)
                + hc * (k * b * m1)
                + (cross + cross.transpose()) * (k * b1 * m1);
            grad = grad * m + gc * (k * b * m1);
            energy *= m;
        }
    }
    if project {
        hess = project_psd(&hess);
    }
    Ok(Some(ContactLocal {
        energy,
        grad,
        hess,
        d_sq: dd.d_sq,
    }))
}

/// Initial contact stiffness: the barrier's normal stiffness at
/// `d = xi + dhat/2` matches the mean nodal mass.
pub fn initial_kappa(mean_mass: f64, xi: f64, dhat: f64) -> f64 {
    let d = xi + 0.5 * dhat;
    let d_sq = d * d;
    let (b1, b2) = offset_barrier_derivs(d_sq, xi, dhat).expect("midpoint is inside the support");
    let stiffness = 4.0 * d_sq * b2 + 2.0 * b1;
    if stiffness > 0.0 && mean_mass > 0.0 {
        mean_mass / stiffness
    } else {
        1.0
    }
}

/// Per-step contact stiffness schedule.
///
/// Doubles when the minimal gap `d - xi` stays below `gap_threshold` and
/// changes by at most `rel_change` over two consecutive iterates, up to
/// `1e4` times the initial value.
#[derive(Debug, Clone)]
pub struct KappaAdapter {
    pub kappa: f64,
    pub kappa_init: f64,
    pub kappa_max: f64,
    pub gap_threshold: f64,
    pub rel_change: f64,
    prev_gap: Option<f64>,
}

impl KappaAdapter {
    pub fn new(kappa_init: f64) -> Self {
        Self {
            kappa: kappa_init,
            kappa_init,
            kappa_max: 1e4 * kappa_init,
            gap_threshold: 1e-9,
            rel_change: 0.01,
            prev_gap: None,
        }
    }

    /// Restart the schedule at the beginning of a time step.
    pub fn reset(&mut self) {
        self.kappa = self.kappa_init;
        self.prev_gap = None;
    }

    /// Feed the minimal gap of the latest iterate (`None` without contacts).
    pub fn update(&mut self, min_gap: Option<f64>) -> f64 {
        let Some(gap) = min_gap else {
            self.prev_gap = None;
            return self.kappa;
        };
        if let Some(prev) = self.prev_gap {
            let stagnant = gap < self.gap_threshold
                && prev < self.gap_threshold
                && (gap - prev).abs() <= self.rel_change * prev;
            if stagnant {
                self.kappa = (2.0 * self.kappa).min(self.kappa_max);
            }
        }
        self.prev_gap = Some(gap);
        self.kappa
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrier_examples() {
        assert_eq!(barrier(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(barrier(2.0, 1.0).unwrap(), 0.0);
        // -(0.25 - 1)^2 ln(0.25), evaluated separately
        assert!((barrier(0.25, 1.0).unwrap() - 0.779_790_578_129_938_5).abs() < 1e-15);
        assert!(barrier(0.0, 1.0).is_err());
    }

    #[test]
    fn offset_barrier_examples() {
        assert!((offset_barrier(1.44, 1.0, 0.5).unwrap() - 0.685_049_824_230_268_8).abs() < 1e-12);
        assert_eq!(offset_barrier(1.5 * 1.5, 1.0, 0.5).unwrap(), 0.0);
        let (a, b) = (
            offset_barrier(0.3, 0.0, 0.7).unwrap(),
            barrier(0.3, 0.49).unwrap(),
        );
        assert!((a - b).abs() < 1e-14 * b);
        assert!(offset_barrier(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn derivatives_vanish_at_dhat() {
        assert_eq!(barrier_derivs(1.0, 1.0).unwrap(), (0.0, 0.0));
        let (g, _) = barrier_derivs(0.01, 1.0).unwrap();
        assert!(g < 0.0);
    }

    #[test]
    fn kappa_doubles_on_stagnation() {
        let mut k = KappaAdapter::new(2.0);
        assert_eq!(k.update(None), 2.0);
        k.update(Some(5e-10));
        assert_eq!(k.update(Some(5.02e-10)), 4.0);
        let mut k = KappaAdapter::new(2.0);
        k.update(Some(5e-10));
        assert_eq!(k.update(Some(1e-3)), 2.0);
    }

    #[test]
    fn kappa_saturates() {
        let mut k = KappaAdapter::new(1.0);
        k.kappa = k.kappa_max;
        k.update(Some(1e-10));
        assert_eq!(k.update(Some(1e-10)), k.kappa_max);
    }
}
