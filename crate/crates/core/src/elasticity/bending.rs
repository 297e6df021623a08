//! Discrete hinge bending on pairs of triangles sharing an edge.
//!
//! Node order `[x0, x1, x2, x3]`: `x0 x1` is the shared edge, `x2` and `x3`
//! are the opposite vertices of the two wings.

use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};

use super::Local;
use crate::error::{Error, Result};
use crate::math::{cross_matrix, project_psd, Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hinge {
    pub nodes: [usize; 4],
    pub rest_angle: f64,
    /// `|e|^2 / (A1 + A2)` at rest.
    pub weight: f64,
    pub stiffness: f64,
}

impl Hinge {
    pub fn new(nodes: [usize; 4], rest: &[Vec3], stiffness: f64, index: usize) -> Result<Self> {
        let p = nodes.map(|n| rest[n]);
        let e = p[1] - p[0];
        let a1 = 0.5 * e.cross(&(p[2] - p[0])).norm();
        let a2 = 0.5 * e.cross(&(p[3] - p[0])).norm();
        if !(a1 > 0.0 && a2 > 0.0) {
            return Err(Error::DegenerateElement {
                kind: "hinge",
                index,
            });
        }
        Ok(Self {
            nodes,
            rest_angle: dihedral_angle(&p),
            weight: e.norm_squared() / (a1 + a2),
            stiffness,
        })
    }
}

/// Plate bending constant `E t^3 / (24 (1 - nu^2))`.
pub fn bending_stiffness(young: f64, poisson: f64, thickness: f64) -> f64 {
    young * thickness.powi(3) / (24.0 * (1.0 - poisson * poisson))
}

/// Signed angle between the wing normals about the shared edge; 0 when flat.
pub fn dihedral_angle(p: &[Vec3; 4]) -> f64 {
    let e = p[1] - p[0];
    let a = p[2] - p[0];
    let b = p[3] - p[0];
    let y = -e.norm() * e.dot(&a.cross(&b));
    let x = e.dot(&b) * a.dot(&e) - e.dot(&e) * a.dot(&b);
    y.atan2(x)
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI
    } else if d <= -PI {
        d += 2.0 * PI
    }
    d
}

type V9 = SVector<f64, 9>;
type M9 = SMatrix<f64, 9, 9>;

fn put(v: &mut V9, blk: usize, x: &Vec3) {
    let mut r = v.fixed_rows_mut::<3>(3 * blk);
    r += x;
}

fn put_blk(m: &mut M9, i: usize, j: usize, b: &Mat3) {
    let mut v = m.fixed_view_mut::<3, 3>(3 * i, 3 * j);
    v += b;
}

/// Angle with gradient and Hessian in `(e, a, b) = (x1-x0, x2-x0, x3-x0)`.
fn angle_derivatives(p: &[Vec3; 4]) -> (f64, V9, M9) {
    let e = p[1] - p[0];
    let a = p[2] - p[0];
    let b = p[3] - p[0];
    let id = Mat3::identity();

    // D = e . (a x b)
    let d = e.dot(&a.cross(&b));
    let mut gd = V9::zeros();
    put(&mut gd, 0, &a.cross(&b));
    put(&mut gd, 1, &b.cross(&e));
    put(&mut gd, 2, &e.cross(&a));
    let mut hd = M9::zeros();
    let (ea, eb, ab) = (-cross_matrix(&b), cross_matrix(&a), -cross_matrix(&e));
    put_blk(&mut hd, 0, 1, &ea);
    put_blk(&mut hd, 1, 0, &ea.transpose());
    put_blk(&mut hd, 0, 2, &eb);
    put_blk(&mut hd, 2, 0, &eb.transpose());
    put_blk(&mut hd, 1, 2, &ab);
    put_blk(&mut hd, 2, 1, &ab.transpose());

    // |e|
    let le = e.norm();
    let eh = e / le;
    let mut gl = V9::zeros();
    put(&mut gl, 0, &eh);
    let mut hl = M9::zeros();
    put_blk(&mut hl, 0, 0, &((id - eh * eh.transpose()) / le));

    // Y = -|e| D
    let y = -le * d;
    let gy = -(gl * d + gd * le);
    let hy = -(hl * d + gl * gd.transpose() + gd * gl.transpose() + hd * le);

    // X = (e.b)(a.e) - (e.e)(a.b)
    let (pp, qq, rr, ww) = (e.dot(&b), a.dot(&e), e.dot(&e), a.dot(&b));
    let mut gp = V9::zeros();
    put(&mut gp, 0, &b);
    put(&mut gp, 2, &e);
    let mut gq = V9::zeros();
    put(&mut gq, 0, &a);
    put(&mut gq, 1, &e);
    let mut gr = V9::zeros();
    put(&mut gr, 0, &(e * 2.0));
    let mut gw = V9::zeros();
    put(&mut gw, 1, &b);
    put(&mut gw, 2, &a);
    let mut hp = M9::zeros();
    put_blk(&mut hp, 0, 2, &id);
    put_blk(&mut hp, 2, 0, &id);
    let mut hq = M9::zeros();
    put_blk(&mut hq, 0, 1, &id);
    put_blk(&mut hq, 1, 0, &id);
    let mut hr = M9::zeros();
    put_blk(&mut hr, 0, 0, &(id * 2.0));
    let mut hw = M9::zeros();
    put_blk(&mut hw, 1, 2, &id);
    put_blk(&mut hw, 2, 1, &id);

    let x = pp * qq - rr * ww;
    let gx = gp * qq + gq * pp - gr * ww - gw * rr;
    let hx = gp * gq.transpose() + gq * gp.transpose() + hp * qq + hq * pp
        - gw * gr.transpose()
        - gr * gw.transpose()
        - hr * ww
        - hw * rr;

    let r2 = x * x + y * y;
    let theta = y.atan2(x);
    let n = gy * x - gx * y;
    let g = n / r2;
    let dn = gy * gx.transpose() + hy * x - gx * gy.transpose() - hx * y;
    let h = dn / r2 - n * (gx * (2.0 * x) + gy * (2.0 * y)).transpose() / (r2 * r2);
    (theta, g, (h + h.transpose()) * 0.5)
}

/// `k w (theta - theta_rest)^2` with gradient and Hessian over the four hinge
/// nodes. The angle difference is wrapped into `(-pi, pi]`.
pub fn bending_energy(hinge: &Hinge, x: &[Vec3], project: bool) -> Result<Local<12>> {
    let p = hinge.nodes.map(|n| x[n]);
    let (theta, g9, h9) = angle_derivatives(&p);
    let k = hinge.stiffness * hinge.weight;
    let dt = wrap(theta - hinge.rest_angle);

    // (e, a, b) -> nodes: x0 gets minus the sum of the three blocks.
    let mut t = SMatrix::<f64, 9, 12>::zeros();
    for blk in 0..3 {
        for c in 0..3 {
            t[(3 * blk + c, c)] = -1.0;
            t[(3 * blk + c, 3 * (blk + 1) + c)] = 1.0;
        }
    }
    let g = t.transpose() * g9;
    let h = t.transpose() * h9 * t;
    let mut hess = (g * g.transpose() + h * dt) * (2.0 * k);
    if project {
        hess = project_psd(&hess);
    }
    Ok(Local {
        energy: k * dt * dt,
        grad: g * (2.0 * k * dt),
        hess,
    })
}
