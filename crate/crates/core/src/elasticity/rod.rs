use std::f64::consts::PI;

use super::Local;
use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

/// Stretching segment of a rod.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodSegment {
    pub nodes: [usize; 2],
    pub rest_length: f64,
    /// Axial stiffness `E pi r^2` (N).
    pub ks: f64,
}

impl RodSegment {
    pub fn new(
        nodes: [usize; 2],
        rest: &[Vec3],
        young: f64,
        radius: f64,
        index: usize,
    ) -> Result<Self> {
        let l = (rest[nodes[1]] - rest[nodes[0]]).norm();
        if !(l > 0.0) {
            return Err(Error::DegenerateElement { kind: "rod", index });
        }
        Ok(Self {
            nodes,
            rest_length: l,
            ks: young * PI * radius * radius,
        })
    }
}

/// `ks/2 (|e|/l - 1)^2 l`. With `project` the transverse stiffness is
/// clamped at zero under compression.
pub fn rod_stretch_energy(seg: &RodSegment, x: &[Vec3], project: bool) -> Local<6> {
    let e = x[seg.nodes[1]] - x[seg.nodes[0]];
    let len = e.norm();
    let lr = seg.rest_length;
    let strain = len / lr - 1.0;
    let mut out = Local::<6>::zero();
    out.energy = 0.5 * seg.ks * strain * strain * lr;
    if len == 0.0 {
        return out;
    }
    let n = e / len;
    let f = n * (seg.ks * strain);
    let mut trans = seg.ks * strain / len;
    if project {
        trans = trans.max(0.0);
    }
    let nn = n * n.transpose();
    let k: Mat3 = nn * (seg.ks / lr) + (Mat3::identity() - nn) * trans;
    out.grad.fixed_rows_mut::<3>(0).copy_from(&(-f));
    out.grad.fixed_rows_mut::<3>(3).copy_from(&f);
    out.hess.fixed_view_mut::<3, 3>(0, 0).copy_from(&k);
    out.hess.fixed_view_mut::<3, 3>(3, 3).copy_from(&k);
    out.hess.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-k));
    out.hess.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-k));
    out
}
