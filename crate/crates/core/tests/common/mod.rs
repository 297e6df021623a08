//! Random element states and finite-difference checks shared by the
//! derivative tests and the acceptance suite.
#![allow(dead_code)]

use codim::barrier::{contact_energy, contact_grad_hess, BarrierParams};
use codim::broadphase::EE_MOLLIFIER_FACTOR;
use codim::distance::{stencil_distance, PairKind, PrimitivePair};
use codim::elasticity::{
    bending::bending_stiffness, bending_energy, fixed_corotated_tet_energy, lame, membrane_energy,
    rod_stretch_energy, Hinge, MembraneModel, RodSegment, TetRest, TriangleRest,
};
use codim::friction::{build_lagged_contacts, friction_local};
use codim::strain_limit::{singular_values, sl_triangle, StrainLimitParams};
use codim::Vec3;
use nalgebra::{DMatrix, DVector, Rotation3, Unit};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Eval = Box<dyn Fn(&[Vec3]) -> (f64, DVector<f64>, DMatrix<f64>)>;

pub struct Case {
    pub x: Vec<Vec3>,
    pub eval: Eval,
    /// Finite-difference step.
    pub h: f64,
}

pub const ENERGIES: [&str; 8] = [
    "membrane_stvk",
    "membrane_neo_hookean",
    "bending",
    "rod",
    "tet",
    "contact",
    "strain_limit",
    "friction",
];

pub fn rand_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-r..r),
        rng.random_range(-r..r),
        rng.random_range(-r..r),
    )
}

pub fn rand_rotation(rng: &mut ChaCha8Rng) -> Rotation3<f64> {
    loop {
        let a = rand_vec(rng, 1.0);
        if a.norm() > 0.1 {
            return Rotation3::from_axis_angle(
                &Unit::new_normalize(a),
                rng.random_range(-3.0..3.0),
            );
        }
    }
}

fn dyn_local<const N: usize>(
    e: f64,
    g: &nalgebra::SVector<f64, N>,
    h: &nalgebra::SMatrix<f64, N, N>,
) -> (f64, DVector<f64>, DMatrix<f64>) {
    (
        e,
        DVector::from_column_slice(g.as_slice()),
        DMatrix::from_column_slice(N, N, h.as_slice()),
    )
}

pub fn rest_triangle(rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    loop {
        let v = vec![rand_vec(rng, 0.1), rand_vec(rng, 0.1), rand_vec(rng, 0.1)];
        let n = (v[1] - v[0]).cross(&(v[2] - v[0])).norm();
        let l = (v[1] - v[0]).norm_squared()
            + (v[2] - v[1]).norm_squared()
            + (v[0] - v[2]).norm_squared();
        if n > 0.2 * l {
            return v;
        }
    }
}

fn deform(rng: &mut ChaCha8Rng, rest: &[Vec3], amount: f64) -> Vec<Vec3> {
    let r = rand_rotation(rng);
    let t = rand_vec(rng, 1.0);
    let scale = rest
        .iter()
        .map(|p| (p - rest[0]).norm())
        .fold(0.0, f64::max);
    rest.iter()
        .map(|p| r * p + t + rand_vec(rng, amount * scale))
        .collect()
}

pub fn make_case(name: &str, rng: &mut ChaCha8Rng) -> Case {
    match name {
        "membrane_stvk" | "membrane_neo_hookean" => {
            let rest = rest_triangle(rng);
            let tri = TriangleRest::new([0, 1, 2], &rest, 1e-3, 0).unwrap();
            let model = if name == "membrane_stvk" {
                MembraneModel::stvk(1e6, 0.3)
            } else {
                MembraneModel::neo_hookean(1e6, 0.3)
            };
            let x = deform(rng, &rest, 0.2);
            let h = 1e-7 * (rest[1] - rest[0]).norm();
            Case {
                x,
                h,
                eval: Box::new(move |x| {
                    let l = membrane_energy(&tri, x, &model, false).unwrap();
                    dyn_local(l.energy, &l.grad, &l.hess)
                }),
            }
        }
        "bending" => {
            let x = loop {
                let a = rest_triangle(rng);
                let n = (a[1] - a[0]).cross(&(a[2] - a[0])).normalize();
                let mid = (a[0] + a[1]) * 0.5;
                let far = mid
                    + (mid - a[2]) * rng.random_range(0.5..1.5)
                    + n * rng.random_range(-0.05..0.05);
                let v = vec![a[0], a[1], a[2], far];
                let n2 = (v[1] - v[0]).cross(&(v[3] - v[0])).norm();
                if n2 > 0.1 * (v[1] - v[0]).norm_squared() {
                    break v;
                }
            };
            let hinge = Hinge::new([0, 1, 2, 3], &x, bending_stiffness(1e6, 0.3, 1e-3), 0).unwrap();
            let x = deform(rng, &x, 0.15);
            let h = 1e-7 * (x[1] - x[0]).norm();
            Case {
                x,
                h,
                eval: Box::new(move |x| {
                    let l = bending_energy(&hinge, x, false).unwrap();
                    dyn_local(l.energy, &l.grad, &l.hess)
                }),
            }
        }
        "rod" => {
            let rest = vec![rand_vec(rng, 0.1), rand_vec(rng, 0.1)];
            let seg = RodSegment::new([0, 1], &rest, 1e8, 1e-3, 0).unwrap();
            let x = deform(rng, &rest, 0.3);
            let h = 1e-7 * seg.rest_length;
            Case {
                x,
                h,
                eval: Box::new(move |x| {
                    let l = rod_stretch_energy(&seg, x, false);
                    dyn_local(l.energy, &l.grad, &l.hess)
                }),
            }
        }
        "tet" => {
            let rest = loop {
                let v: Vec<Vec3> = (0..4).map(|_| rand_vec(rng, 0.1)).collect();
                let vol = (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0]));
                let l: f64 = (1..4).map(|k| (v[k] - v[0]).norm()).fold(0.0, f64::max);
                if vol > 0.1 * l * l * l {
                    break v;
                }
            };
            let tet = TetRest::new([0, 1, 2, 3], &rest, 0).unwrap();
            let (lambda, mu) = lame(1e6, 0.4);
            let x = deform(rng, &rest, 0.15);
            let h = 1e-7 * (rest[1] - rest[0]).norm();
            Case {
                x,
                h,
                eval: Box::new(move |x| {
                    let l = fixed_corotated_tet_energy(&tet, x, lambda, mu, false);
                    dyn_local(l.energy, &l.grad, &l.hess)
                }),
            }
        }
        "contact" => {
            let kinds = [
                PairKind::PointPoint,
                PairKind::PointEdge,
                PairKind::PointTriangle,
                PairKind::EdgeEdge,
            ];
            let kind = kinds[rng.random_range(0..4)];
            let n = kind.node_count();
            let x: Vec<Vec3> = (0..n).map(|_| rand_vec(rng, 0.01)).collect();
            let mut p = [Vec3::zeros(); 4];
            p[..n].copy_from_slice(&x);
            let d = stencil_distance(kind, &p).d_sq.sqrt();
            let xi = d * rng.random_range(0.0..0.6);
            let dhat = (d - xi) * rng.random_range(1.2..3.0);
            let nodes: Vec<usize> = (0..n).collect();
            let mut pair = PrimitivePair::new(kind, &nodes, xi);
            if kind == PairKind::EdgeEdge {
                let la = (x[1] - x[0]).norm_squared();
                let lb = (x[3] - x[2]).norm_squared();
                // Sometimes large enough to put the pair inside the mollified band.
                let f = if rng.random_bool(0.5) {
                    EE_MOLLIFIER_FACTOR
                } else {
                    1.0
                };
                pair = pair.with_mollifier(f * la * lb);
            }
            let params = BarrierParams {
                dhat,
                kappa: 1.0,
                s_conservative: 0.1,
            };
            let h = 1e-6 * (d - xi);
            Case {
                x,
                h,
                eval: Box::new(move |x| {
                    let e = contact_energy(&pair, x, &params).unwrap();
                    match contact_grad_hess(&pair, x, &params, false).unwrap() {
                        Some(l) => {
                            let m = 3 * n;
                            let g = DVector::from_iterator(m, l.grad.iter().take(m).copied());
                            let hs = l.hess.view((0, 0), (m, m)).into_owned();
                            (e, g, DMatrix::from_column_slice(m, m, hs.as_slice()))
                        }
                        None => (e, DVector::zeros(3 * n), DMatrix::zeros(3 * n, 3 * n)),
                    }
                }),
            }
        }
        "strain_limit" => {
            let params = StrainLimitParams::new(1.1);
            let (rest, x, tri) = loop {
                let rest = rest_triangle(rng);
                let tri = TriangleRest::new([0, 1, 2], &rest, 1e-3, 0).unwrap();
                let x = deform(rng, &rest, 0.1);
                let s = singular_values(&tri, &x);
                if s[0] > 1.0 + 1e-3 && s[0] < 1.09 && s[0] - s[1] > 1e-3 {
                    break (rest, x, tri);
                }
            };
            let h = 1e-7 * (rest[1] - rest[0]).norm();
            Case {
                x,
                h,
                eval: Box::new(
                    move |x| match sl_triangle(&tri, x, &params, 1e3, false).unwrap() {
                        Some(l) => dyn_local(l.energy, &l.grad, &l.hess),
                        None => (0.0, DVector::zeros(9), DMatrix::zeros(9, 9)),
                    },
                ),
            }
        }
        "friction" => {
            let kinds = [
                PairKind::PointPoint,
                PairKind::PointEdge,
                PairKind::PointTriangle,
                PairKind::EdgeEdge,
            ];
            let kind = kinds[rng.random_range(0..4)];
            let n = kind.node_count();
            let prev: Vec<Vec3> = (0..n).map(|_| rand_vec(rng, 0.01)).collect();
            let mut p = [Vec3::zeros(); 4];
            p[..n].copy_from_slice(&prev);
            let d = stencil_distance(kind, &p).d_sq.sqrt();
            let nodes: Vec<usize> = (0..n).collect();
            let pair = PrimitivePair::new(kind, &nodes, 0.0);
            let params = BarrierParams {
                dhat: 2.0 * d,
                kappa: 1.0,
                s_conservative: 0.1,
            };
            let c = build_lagged_contacts(&[pair], &prev, &params, 0.4).unwrap()[0];
            let eps = 1e-4;
            // Displacements both inside and beyond the static band.
            let amp = eps * 10f64.powf(rng.random_range(-1.5..1.0));
            let x: Vec<Vec3> = prev.iter().map(|q| q + rand_vec(rng, amp)).collect();
            let h = 1e-4 * amp;
            Case {
                x,
                h,
                eval: Box::new(move |x| {
                    let (e, g, hs) = friction_local(&c, x, &prev, eps);
                    let m = 3 * n;
                    let g = DVector::from_iterator(m, g.iter().take(m).copied());
                    let hs = hs.view((0, 0), (m, m)).into_owned();
                    (e, g, DMatrix::from_column_slice(m, m, hs.as_slice()))
                }),
            }
        }
        other => panic!("unknown energy {other}"),
    }
}

fn flat(x: &[Vec3]) -> Vec<f64> {
    x.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

fn unflat(f: &[f64]) -> Vec<Vec3> {
    f.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

/// Relative errors of the analytic gradient against central differences of
/// the energy, and of a Hessian-vector product against central differences
/// of the gradient along a random direction.
pub fn fd_errors(case: &Case, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let x0 = flat(&case.x);
    let (_, g, hess) = (case.eval)(&case.x);
    let h = case.h;
    let mut g_fd = DVector::zeros(x0.len());
    for i in 0..x0.len() {
        let mut xp = x0.clone();
        xp[i] += h;
        let mut xm = x0.clone();
        xm[i] -= h;
        g_fd[i] = ((case.eval)(&unflat(&xp)).0 - (case.eval)(&unflat(&xm)).0) / (2.0 * h);
    }
    let v = DVector::from_iterator(x0.len(), (0..x0.len()).map(|_| rng.random_range(-1.0..1.0)))
        .normalize();
    let xp: Vec<f64> = x0.iter().zip(v.iter()).map(|(a, b)| a + h * b).collect();
    let xm: Vec<f64> = x0.iter().zip(v.iter()).map(|(a, b)| a - h * b).collect();
    let hv_fd = ((case.eval)(&unflat(&xp)).1 - (case.eval)(&unflat(&xm)).1) / (2.0 * h);
    let hv = &hess * &v;
    let rel = |a: &DVector<f64>, b: &DVector<f64>| {
        let s = a.norm().max(b.norm());
        if s == 0.0 {
            0.0
        } else {
            (a - b).norm() / s
        }
    };
    (rel(&g, &g_fd), rel(&hv, &hv_fd))
}

/// Random CCD query: offset zero or log-uniform in `[1e-4, 1e-2]`, and in
/// most queries the first primitive is thrown through the second.
pub fn random_query(rng: &mut ChaCha8Rng, s: f64) -> codim::accd::CcdQuery {
    use codim::accd::CcdQuery;
    let kinds = [
        PairKind::PointPoint,
        PairKind::PointEdge,
        PairKind::PointTriangle,
        PairKind::EdgeEdge,
    ];
    let kind = kinds[rng.random_range(0..4)];
    let n = kind.node_count();
    let k = kind.first_len();
    let xi = if rng.random_bool(0.2) {
        0.0
    } else {
        10f64.powf(rng.random_range(-4.0..-2.0))
    };
    loop {
        let x: Vec<Vec3> = (0..n).map(|_| rand_vec(rng, 0.05)).collect();
        let mut pos = [Vec3::zeros(); 4];
        pos[..n].copy_from_slice(&x);
        if !(stencil_distance(kind, &pos).d_sq > xi * xi) {
            continue;
        }
        let ca: Vec3 = x[..k].iter().sum::<Vec3>() / k as f64;
        let cb: Vec3 = x[k..].iter().sum::<Vec3>() / (n - k) as f64;
        let aim = if rng.random_bool(0.8) {
            (cb - ca) * rng.random_range(0.5..2.5)
        } else {
            Vec3::zeros()
        };
        let jitter = rng.random_range(0.0..0.05);
        let mut p: Vec<Vec3> = (0..n).map(|_| rand_vec(rng, jitter)).collect();
        for pi in p[..k].iter_mut() {
            *pi += aim;
        }
        return CcdQuery::new(kind, &x, &p, xi, s);
    }
}

/// Nearly parallel edge pairs sliding past each other while closing in.
pub fn near_parallel_ee(rng: &mut ChaCha8Rng, s: f64) -> codim::accd::CcdQuery {
    use codim::accd::CcdQuery;
    let xi = if rng.random_bool(0.5) {
        0.0
    } else {
        10f64.powf(rng.random_range(-4.0..-2.0))
    };
    let len = rng.random_range(0.01..0.2);
    let r = rand_rotation(rng);
    let gap = xi + 10f64.powf(rng.random_range(-5.0..-2.0));
    let tilt = 10f64.powf(rng.random_range(-9.0..-3.0));
    let a0 = Vec3::new(0.0, 0.0, 0.0);
    let a1 = Vec3::new(len, 0.0, 0.0);
    let b0 = Vec3::new(rng.random_range(-0.5..0.5) * len, gap, 0.0);
    let b1 = b0 + Vec3::new(len, tilt * len, tilt * len * rng.random_range(-1.0..1.0));
    let close = Vec3::new(
        rng.random_range(-1.0..1.0) * len,
        -gap * rng.random_range(0.5..3.0),
        0.0,
    );
    let x = [a0, a1, b0, b1].map(|v| r * v);
    let p = [
        Vec3::zeros(),
        Vec3::zeros(),
        close,
        close + rand_vec(rng, tilt * len),
    ]
    .map(|v| r * v);
    CcdQuery::new(PairKind::EdgeEdge, &x, &p, xi, s)
}
