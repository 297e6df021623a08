//! Additive continuous collision detection.
//!
//! Conservative advancement along linear trajectories: each iteration
//! advances by a lower bound on the time needed to close the current gap to
//! the offset surface, and stops once the gap falls below a fraction `s` of
//! the starting gap.

use crate::distance::{stencil_distance, PairKind, PrimitivePair};
use crate::error::{Error, Result};
use crate::math::Vec3;

pub const MAX_ITERATIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdQuery {
    pub kind: PairKind,
    pub x: [Vec3; 4],
    pub p: [Vec3; 4],
    pub xi: f64,
    pub s: f64,
    pub t_c: f64,
}

impl CcdQuery {
    pub fn new(kind: PairKind, x: &[Vec3], p: &[Vec3], xi: f64, s: f64) -> Self {
        let n = kind.node_count();
        assert!(x.len() == n && p.len() == n);
        let mut q = Self {
            kind,
            x: [Vec3::zeros(); 4],
            p: [Vec3::zeros(); 4],
            xi,
            s,
            t_c: 1.0,
        };
        q.x[..n].copy_from_slice(x);
        q.p[..n].copy_from_slice(p);
        q
    }

    pub fn from_pair(pair: &PrimitivePair, x: &[Vec3], dx: &[Vec3], s: f64, t_c: f64) -> Self {
        Self {
            kind: pair.kind,
            x: pair.positions(x),
            p: pair.positions(dx),
            xi: pair.xi,
            s,
            t_c,
        }
    }

    /// Displacements with their mean removed.
    pub fn centered_displacements(&self) -> [Vec3; 4] {
        let n = self.kind.node_count();
        let mean: Vec3 = self.p[..n].iter().sum::<Vec3>() / n as f64;
        let mut p = self.p;
        for pi in p[..n].iter_mut() {
            *pi -= mean;
        }
        p
    }

    /// Sum over the two primitives of their largest displacement norm.
    pub fn motion_bound(&self, p: &[Vec3; 4]) -> f64 {
        let n = self.kind.node_count();
        let k = self.kind.first_len();
        let m = |s: &[Vec3]| s.iter().map(|v| v.norm()).fold(0.0, f64::max);
        m(&p[..k]) + m(&p[k..n])
    }

    /// Squared distance of the stencil at time `t`.
    pub fn d_sq_at(&self, t: f64) -> f64 {
        let mut y = self.x;
        for i in 0..self.kind.node_count() {
            y[i] += self.p[i] * t;
        }
        stencil_distance(self.kind, &y).d_sq
    }
}

/// Gap to the offset surface, `(d^2 - xi^2) / (d + xi) = d - xi`.
#[inline]
pub fn gap_measure(d_sq: f64, xi: f64) -> f64 {
    (d_sq - xi * xi) / (d_sq.sqrt() + xi)
}

/// Closed-form lower bound on the time at which the gap can close, or
/// `None` when there is no relative motion.
pub fn toi_lower_bound(q: &CcdQuery) -> Option<f64> {
    let p = q.centered_displacements();
    let lp = q.motion_bound(&p);
    if lp == 0.0 {
        return None;
    }
    Some(gap_measure(stencil_distance(q.kind, &q.x).d_sq, q.xi) / lp)
}

/// Lower bound on the time at which the gap can shrink to `s` times its
/// start value: `(1 - s)` times [`toi_lower_bound`]. The first ACCD step
/// is exactly this bound, so a returned time never falls below it.
pub fn target_lower_bound(q: &CcdQuery) -> Option<f64> {
    let p = q.centered_displacements();
    let lp = q.motion_bound(&p);
    if lp == 0.0 {
        return None;
    }
    let d_sq = stencil_distance(q.kind, &q.x).d_sq;
    Some((1.0 - q.s) * (d_sq - q.xi * q.xi) / ((d_sq.sqrt() + q.xi) * lp))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccdOutcome {
    pub toi: Option<f64>,
    pub iterations: u64,
    pub cap_hit: bool,
}

pub fn accd_query(q: &CcdQuery) -> Result<Option<f64>> {
    Ok(accd_query_stats(q)?.toi)
}

/// Run one query and report the iteration count.
pub fn accd_query_stats(q: &CcdQuery) -> Result<AccdOutcome> {
    let n = q.kind.node_count();
    let p = q.centered_displacements();
    let lp = q.motion_bound(&p);
    let mut x = q.x;
    let mut d_sqr = stencil_distance(q.kind, &x).d_sq;
    let xi = q.xi;
    if !(d_sqr > xi * xi) {
        return Err(Error::CcdStartGap {
            gap: d_sqr.sqrt() - xi,
        });
    }
    if lp == 0.0 {
        return Ok(AccdOutcome {
            toi: None,
            iterations: 0,
            cap_hit: false,
        });
    }
    let g = q.s * (d_sqr - xi * xi) / (d_sqr.sqrt() + xi);

    let mut t = 0.0;
    let mut t_l = (1.0 - q.s) * (d_sqr - xi * xi) / ((d_sqr.sqrt() + xi) * lp);
    let mut iterations = 0;
    loop {
        iterations += 1;
        for i in 0..n {
            x[i] += p[i] * t_l;
        }
        d_sqr = stencil_distance(q.kind, &x).d_sq;
        if t > 0.0 && (d_sqr - xi * xi) / (d_sqr.sqrt() + xi) < g {
            break;
        }
        t += t_l;
        if t > q.t_c {
            return Ok(AccdOutcome {
                toi: None,
                iterations,
                cap_hit: false,
            });
        }
        if iterations >= MAX_ITERATIONS {
            // Every accumulated step is itself safe, so `t` is still valid.
            return Ok(AccdOutcome {
                toi: Some(t),
                iterations,
                cap_hit: true,
            });
        }
        t_l = 0.9 * (d_sqr - xi * xi) / ((d_sqr.sqrt() + xi) * lp);
    }
    Ok(AccdOutcome {
        toi: Some(t),
        iterations,
        cap_hit: false,
    })
}

/// Largest safe fraction of the step `dx` over all `pairs`: the minimum
/// ACCD time, or 1 when nothing collides.
pub fn max_step(pairs: &[PrimitivePair], x: &[Vec3], dx: &[Vec3], s: f64) -> Result<f64> {
    let mut alpha = 1.0;
    for pair in pairs {
        let q = CcdQuery::from_pair(pair, x, dx, s, alpha);
        if let Some(t) = accd_query(&q)? {
            alpha = f64::min(alpha, t);
        }
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64) -> Vec3 {
        Vec3::new(x, 0.0, 0.0)
    }

    #[test]
    fn head_on_points() {
        let q = CcdQuery::new(
            PairKind::PointPoint,
            &[v(0.0), v(2.0)],
            &[v(1.0), v(-1.0)],
            0.0,
            0.1,
        );
        assert_eq!(toi_lower_bound(&q), Some(1.0));
        let t = accd_query(&q).unwrap().unwrap();
        assert_eq!(t, 0.9);
        assert!((q.d_sq_at(t).sqrt() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn offset_point_approach() {
        let q = CcdQuery::new(
            PairKind::PointPoint,
            &[v(0.0), v(2.0)],
            &[v(1.0), v(0.0)],
            1.0,
            0.1,
        );
        let out = accd_query_stats(&q).unwrap();
        assert_eq!(out.toi, Some(0.9));
        assert_eq!(out.iterations, 2);
        assert!((q.d_sq_at(0.9).sqrt() - 1.0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn receding_and_common_motion() {
        let q = CcdQuery::new(
            PairKind::PointPoint,
            &[v(0.0), v(2.0)],
            &[v(-1.0), v(1.0)],
            0.0,
            0.1,
        );
        assert_eq!(accd_query(&q).unwrap(), None);
        let q = CcdQuery::new(
            PairKind::PointPoint,
            &[v(0.0), v(2.0)],
            &[v(3.0), v(3.0)],
            0.0,
            0.1,
        );
        assert_eq!(toi_lower_bound(&q), None);
        assert_eq!(accd_query(&q).unwrap(), None);
    }

    #[test]
    fn start_inside_offset_is_fatal() {
        let q = CcdQuery::new(
            PairKind::PointPoint,
            &[v(0.0), v(0.5)],
            &[v(1.0), v(0.0)],
            1.0,
            0.1,
        );
        assert!(accd_query(&q).is_err());
    }

    #[test]
    fn max_step_without_pairs() {
        assert_eq!(max_step(&[], &[], &[], 0.1).unwrap(), 1.0);
    }
}
