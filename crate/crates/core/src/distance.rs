//! Unsigned squared distances between mesh primitives.
//!
//! Every query classifies which sub-case realizes the minimum (a vertex, an
//! edge interior or a face interior of each primitive). Derivatives are then
//! taken of that sub-case's closed-form expression: point-point, point-line,
//! point-plane or line-line.
//!
//! Ties between sub-cases are broken toward the lower-dimensional feature.

use nalgebra::{SMatrix, SVector};

use crate::math::{Mat3, Vec3};

/// Stacked gradient over (up to) four nodes.
pub type Grad12 = SVector<f64, 12>;
/// Stacked Hessian over (up to) four nodes.
pub type Hess12 = SMatrix<f64, 12, 12>;

/// Parallel-edge switch: `|ea x eb|^2 <= PARALLEL_EPS * |ea|^2 |eb|^2`.
pub const PARALLEL_EPS: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairKind {
    PointPoint,
    PointEdge,
    PointTriangle,
    EdgeEdge,
}

impl PairKind {
    pub fn node_count(self) -> usize {
        match self {
            PairKind::PointPoint => 2,
            PairKind::PointEdge => 3,
            PairKind::PointTriangle | PairKind::EdgeEdge => 4,
        }
    }

    /// Number of nodes belonging to the first primitive of the pair.
    pub fn first_len(self) -> usize {
        match self {
            PairKind::EdgeEdge => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PairKind::PointPoint => "PP",
            PairKind::PointEdge => "PE",
            PairKind::PointTriangle => "PT",
            PairKind::EdgeEdge => "EE",
        }
    }
}

/// A candidate contact stencil.
///
/// Node order: PP `[p, q]`, PE `[p, e0, e1]`, PT `[p, t0, t1, t2]`,
/// EE `[a0, a1, b0, b1]`. Unused slots hold `usize::MAX`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitivePair {
    pub kind: PairKind,
    pub nodes: [usize; 4],
    /// Combined offset `(xi_i + xi_j) / 2`.
    pub xi: f64,
    /// Edge-edge mollifier threshold on `|ea x eb|^2`; zero disables it.
    pub mollifier_eps: f64,
}

impl PrimitivePair {
    pub fn new(kind: PairKind, nodes: &[usize], xi: f64) -> Self {
        assert_eq!(nodes.len(), kind.node_count());
        let mut n = [usize::MAX; 4];
        n[..nodes.len()].copy_from_slice(nodes);
        Self {
            kind,
            nodes: n,
            xi,
            mollifier_eps: 0.0,
        }
    }

    pub fn with_mollifier(mut self, eps: f64) -> Self {
        self.mollifier_eps = eps;
        self
    }

    pub fn active_nodes(&self) -> &[usize] {
        &self.nodes[..self.kind.node_count()]
    }

    /// Positions of the stencil nodes; unused slots are zero.
    pub fn positions(&self, x: &[Vec3]) -> [Vec3; 4] {
        let mut p = [Vec3::zeros(); 4];
        for (k, &n) in self.active_nodes().iter().enumerate() {
            p[k] = x[n];
        }
        p
    }
}

/// Where on a segment the closest point lies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeRegion {
    Start,
    End,
    Interior,
}

impl EdgeRegion {
    fn dim(self) -> u8 {
        match self {
            EdgeRegion::Interior => 1,
            _ => 0,
        }
    }
}

/// Where on a triangle the closest point lies. `Edge(i)` runs from vertex
/// `i` to vertex `(i + 1) % 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TriRegion {
    Vertex(u8),
    Edge(u8),
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    PointPoint,
    PointEdge(EdgeRegion),
    PointTriangle(TriRegion),
    /// Closest-point location on edge A and on edge B.
    EdgeEdge {
        a: EdgeRegion,
        b: EdgeRegion,
    },
}

impl Region {
    /// Total dimension of the closest features; used for tie-breaking.
    pub fn dim(&self) -> u8 {
        match *self {
            Region::PointPoint => 0,
            Region::PointEdge(e) => e.dim(),
            Region::PointTriangle(TriRegion::Vertex(_)) => 0,
            Region::PointTriangle(TriRegion::Edge(_)) => 1,
            Region::PointTriangle(TriRegion::Interior) => 2,
            Region::EdgeEdge { a, b } => a.dim() + b.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceResult {
    pub d_sq: f64,
    pub region: Region,
    /// PE: `[gamma, 0]` along the edge; PT: `[beta, gamma]` weights of
    /// `t1, t2`; EE: `[gamma, beta]` along edge A and edge B.
    pub params: [f64; 2],
}

pub fn point_point(a: &Vec3, b: &Vec3) -> DistanceResult {
    DistanceResult {
        d_sq: (a - b).norm_squared(),
        region: Region::PointPoint,
        params: [0.0; 2],
    }
}

/// Squared distance from `p` to segment `[e0, e1]`. A zero-length edge
/// degrades to the point-point case at `e0`.
pub fn point_edge(p: &Vec3, e0: &Vec3, e1: &Vec3) -> DistanceResult {
    let e = e1 - e0;
    let len_sq = e.norm_squared();
    let w = p - e0;
    let gamma = if len_sq > 0.0 {
        w.dot(&e) / len_sq
    } else {
        0.0
    };
    if gamma <= 0.0 {
        return DistanceResult {
            d_sq: w.norm_squared(),
            region: Region::PointEdge(EdgeRegion::Start),
            params: [0.0, 0.0],
        };
    }
    if gamma >= 1.0 {
        return DistanceResult {
            d_sq: (p - e1).norm_squared(),
            region: Region::PointEdge(EdgeRegion::End),
            params: [1.0, 0.0],
        };
    }
    DistanceResult {
        d_sq: e.cross(&w).norm_squared() / len_sq,
        region: Region::PointEdge(EdgeRegion::Interior),
        params: [gamma, 0.0],
    }
}

fn better(a: &DistanceResult, b: &DistanceResult) -> bool {
    a.d_sq < b.d_sq || (a.d_sq == b.d_sq && a.region.dim() < b.region.dim())
}

/// Squared distance from `p` to the closed triangle `(t0, t1, t2)`.
pub fn point_triangle(p: &Vec3, t0: &Vec3, t1: &Vec3, t2: &Vec3) -> DistanceResult {
    let e1 = t1 - t0;
    let e2 = t2 - t0;
    let n = e1.cross(&e2);
    let n_sq = n.norm_squared();
    if n_sq > PARALLEL_EPS * e1.norm_squared() * e2.norm_squared() {
        let w = p - t0;
        let a11 = e1.dot(&e1);
        let a12 = e1.dot(&e2);
        let a22 = e2.dot(&e2);
        let b1 = e1.dot(&w);
        let b2 = e2.dot(&w);
        let det = a11 * a22 - a12 * a12;
        let beta = (a22 * b1 - a12 * b2) / det;
        let gamma = (a11 * b2 - a12 * b1) / det;
        if beta > 0.0 && gamma > 0.0 && beta + gamma < 1.0 {
            let h = w.dot(&n);
            return DistanceResult {
                d_sq: h * h / n_sq,
                region: Region::PointTriangle(TriRegion::Interior),
                params: [beta, gamma],
            };
        }
    }

    // Outside (or degenerate): the minimum is attained on the boundary.
    let verts = [t0, t1, t2];
    let mut best: Option<DistanceResult> = None;
    for i in 0..3u8 {
        let a = verts[i as usize];
        let b = verts[((i + 1) % 3) as usize];
        let r = point_edge(p, a, b);
        let gamma = r.params[0];
        let (region, weights) = match r.region {
            Region::PointEdge(EdgeRegion::Start) => (TriRegion::Vertex(i), vertex_weights(i)),
            Region::PointEdge(EdgeRegion::End) => {
                let j = (i + 1) % 3;
                (TriRegion::Vertex(j), vertex_weights(j))
            }
            _ => (TriRegion::Edge(i), edge_weights(i, gamma)),
        };
        let cand = DistanceResult {
            d_sq: r.d_sq,
            region: Region::PointTriangle(region),
            params: weights,
        };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best.expect("three edges evaluated")
}

/// `[beta, gamma]` of a triangle vertex.
fn vertex_weights(i: u8) -> [f64; 2] {
    match i {
        0 => [0.0, 0.0],
        1 => [1.0, 0.0],
        _ => [0.0, 1.0],
    }
}

/// `[beta, gamma]` of a point at parameter `g` along triangle edge `i`.
fn edge_weights(i: u8, g: f64) -> [f64; 2] {
    match i {
        0 => [g, 0.0],
        1 => [1.0 - g, g],
        _ => [0.0, 1.0 - g],
    }
}

/// Squared distance between segments `[a0, a1]` and `[b0, b1]`.
pub fn edge_edge(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> DistanceResult {
    let ea = a1 - a0;
    let eb = b1 - b0;
    let c = ea.cross(&eb);
    let c_sq = c.norm_squared();
    let la = ea.norm_squared();
    let lb = eb.norm_squared();
    if c_sq > PARALLEL_EPS * la * lb {
        let w0 = a0 - b0;
        let ab = ea.dot(&eb);
        let d = -ea.dot(&w0);
        let e = eb.dot(&w0);
        let det = la * lb - ab * ab;
        let gamma = (d * lb + ab * e) / det;
        let beta = (la * e + ab * d) / det;
        if gamma > 0.0 && gamma < 1.0 && beta > 0.0 && beta < 1.0 {
            let h = w0.dot(&c);
            return DistanceResult {
                d_sq: h * h / c_sq,
                region: Region::EdgeEdge {
                    a: EdgeRegion::Interior,
                    b: EdgeRegion::Interior,
                },
                params: [gamma, beta],
            };
        }
    }

    // Boundary of the parameter square: four point-segment sub-cases.
    let cands = [
        {
            let r = point_edge(a0, b0, b1);
            ee_from_pe(EdgeRegion::Start, 0.0, r, false)
        },
        {
            let r = point_edge(a1, b0, b1);
            ee_from_pe(EdgeRegion::End, 1.0, r, false)
        },
        {
            let r = point_edge(b0, a0, a1);
            ee_from_pe(EdgeRegion::Start, 0.0, r, true)
        },
        {
            let r = point_edge(b1, a0, a1);
            ee_from_pe(EdgeRegion::End, 1.0, r, true)
        },
    ];
    let mut best = cands[0];
    for c in &cands[1..] {
        if better(c, &best) {
            best = *c;
        }
    }
    best
}

/// Lift a point-edge result into the edge-edge classification. `swapped`
/// means the point is an endpoint of edge B.
fn ee_from_pe(end: EdgeRegion, end_param: f64, r: DistanceResult, swapped: bool) -> DistanceResult {
    let on_edge = match r.region {
        Region::PointEdge(e) => e,
        _ => unreachable!(),
    };
    let g = r.params[0];
    let (a, b, params) = if swapped {
        (on_edge, end, [g, end_param])
    } else {
        (end, on_edge, [end_param, g])
    };
    DistanceResult {
        d_sq: r.d_sq,
        region: Region::EdgeEdge { a, b },
        params,
    }
}

/// Squared distance for a stencil at positions `x`.
pub fn pair_distance(pair: &PrimitivePair, x: &[Vec3]) -> DistanceResult {
    let p = pair.positions(x);
    stencil_distance(pair.kind, &p)
}

pub fn stencil_distance(kind: PairKind, p: &[Vec3; 4]) -> DistanceResult {
    match kind {
        PairKind::PointPoint => point_point(&p[0], &p[1]),
        PairKind::PointEdge => point_edge(&p[0], &p[1], &p[2]),
        PairKind::PointTriangle => point_triangle(&p[0], &p[1], &p[2], &p[3]),
        PairKind::EdgeEdge => edge_edge(&p[0], &p[1], &p[2], &p[3]),
    }
}

/// Affine residual `r(lambda) = sum_i (c0_i + sum_a dirs[a]_i lambda_a) x_i`
/// whose unconstrained minimum over `lambda` is a sub-case's squared distance.
#[derive(Debug, Clone, Copy)]
pub struct SubCase {
    pub c0: [f64; 4],
    pub dirs: [[f64; 4]; 2],
    pub nparams: usize,
}

impl SubCase {
    fn point_point(i: usize, j: usize) -> Self {
        let mut c0 = [0.0; 4];
        c0[i] = 1.0;
        c0[j] = -1.0;
        Self {
            c0,
            dirs: [[0.0; 4]; 2],
            nparams: 0,
        }
    }

    /// Point `i` against the infinite line through `j`, `k`.
    fn point_line(i: usize, j: usize, k: usize) -> Self {
        let mut s = Self::point_point(i, j);
        s.dirs[0][j] = 1.0;
        s.dirs[0][k] = -1.0;
        s.nparams = 1;
        s
    }

    /// Point 0 against the plane through nodes 1, 2, 3.
    fn point_plane() -> Self {
        Self {
            c0: [1.0, -1.0, 0.0, 0.0],
            dirs: [[0.0, 1.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]],
            nparams: 2,
        }
    }

    /// Line through 0, 1 against line through 2, 3.
    fn line_line() -> Self {
        Self {
            c0: [1.0, 0.0, -1.0, 0.0],
            dirs: [[-1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]],
            nparams: 2,
        }
    }

    /// The sub-case active for `region` in a stencil of kind `kind`.
    pub fn for_region(kind: PairKind, region: Region) -> Self {
        use EdgeRegion::*;
        match (kind, region) {
            (PairKind::PointPoint, _) => Self::point_point(0, 1),
            (PairKind::PointEdge, Region::PointEdge(e)) => match e {
                Start => Self::point_point(0, 1),
                End => Self::point_point(0, 2),
                Interior => Self::point_line(0, 1, 2),
            },
            (PairKind::PointTriangle, Region::PointTriangle(t)) => match t {
                TriRegion::Vertex(i) => Self::point_point(0, 1 + i as usize),
                TriRegion::Edge(i) => {
                    Self::point_line(0, 1 + i as usize, 1 + ((i as usize + 1) % 3))
                }
                TriRegion::Interior => Self::point_plane(),
            },
            (PairKind::EdgeEdge, Region::EdgeEdge { a, b }) => match (a, b) {
                (Interior, Interior) => Self::line_line(),
                (Start, Interior) => Self::point_line(0, 2, 3),
                (End, Interior) => Self::point_line(1, 2, 3),
                (Interior, Start) => Self::point_line(2, 0, 1),
                (Interior, End) => Self::point_line(3, 0, 1),
                (Start, Start) => Self::point_point(0, 2),
                (Start, End) => Self::point_point(0, 3),
                (End, Start) => Self::point_point(1, 2),
                (End, End) => Self::point_point(1, 3),
            },
            _ => panic!("region {region:?} does not belong to a {kind:?} stencil"),
        }
    }
}

/// Squared distance with exact first and second derivatives of the active
/// sub-case expression, stacked over the stencil nodes.
#[derive(Debug, Clone)]
pub struct DistanceDerivatives {
    pub d_sq: f64,
    pub region: Region,
    pub grad: Grad12,
    pub hess: Hess12,
    /// Closest-point residual `r = sum_i coeffs_i x_i`.
    pub residual: Vec3,
    pub coeffs: [f64; 4],
}

pub fn dist_sq_derivatives(pair: &PrimitivePair, x: &[Vec3]) -> DistanceDerivatives {
    let p = pair.positions(x);
    stencil_derivatives(pair.kind, &p)
}

pub fn stencil_derivatives(kind: PairKind, p: &[Vec3; 4]) -> DistanceDerivatives {
    let res = stencil_distance(kind, p);
    let sc = SubCase::for_region(kind, res.region);
    let mut d = sub_case_derivatives(&sc, p);
    d.region = res.region;
    // Keep the value from the classified (cancellation-robust) evaluation.
    d.d_sq = res.d_sq;
    d
}

/// Value, gradient and Hessian of `min_lambda |r(lambda)|^2` for a sub-case.
///
/// Gradient by the envelope theorem; Hessian by the Schur complement
/// `Q_xx - Q_xl Q_ll^-1 Q_lx` of the joint quadratic in `(x, lambda)`.
pub fn sub_case_derivatives(sc: &SubCase, p: &[Vec3; 4]) -> DistanceDerivatives {
    let r0: Vec3 = (0..4).map(|i| p[i] * sc.c0[i]).sum();
    let t: [Vec3; 2] = [
        (0..4).map(|i| p[i] * sc.dirs[0][i]).sum(),
        (0..4).map(|i| p[i] * sc.dirs[1][i]).sum(),
    ];
    let np = sc.nparams;

    let mut lambda = [0.0; 2];
    let mut q_ll_inv = [[0.0; 2]; 2];
    match np {
        1 => {
            let a = t[0].dot(&t[0]);
            lambda[0] = -t[0].dot(&r0) / a;
            q_ll_inv[0][0] = 1.0 / (2.0 * a);
        }
        2 => {
            let a00 = t[0].dot(&t[0]);
            let a01 = t[0].dot(&t[1]);
            let a11 = t[1].dot(&t[1]);
            let b0 = t[0].dot(&r0);
            let b1 = t[1].dot(&r0);
            let det = a00 * a11 - a01 * a01;
            lambda[0] = -(a11 * b0 - a01 * b1) / det;
            lambda[1] = -(a00 * b1 - a01 * b0) / det;
            let s = 1.0 / (2.0 * det);
            q_ll_inv = [[a11 * s, -a01 * s], [-a01 * s, a00 * s]];
        }
        _ => {}
    }

    let mut coeffs = sc.c0;
    for a in 0..np {
        for i in 0..4 {
            coeffs[i] += lambda[a] * sc.dirs[a][i];
        }
    }
    let r: Vec3 = (0..4).map(|i| p[i] * coeffs[i]).sum();

    let mut grad = Grad12::zeros();
    let mut hess = Hess12::zeros();
    for i in 0..4 {
        grad.fixed_rows_mut::<3>(3 * i)
            .copy_from(&(r * (2.0 * coeffs[i])));
        for j in 0..4 {
            let v = 2.0 * coeffs[i] * coeffs[j];
            if v != 0.0 {
                hess.fixed_view_mut::<3, 3>(3 * i, 3 * j)
                    .copy_from(&(Mat3::identity() * v));
            }
        }
    }
    if np > 0 {
        // Q_xl: 12 x np
        let mut q_xl = SMatrix::<f64, 12, 2>::zeros();
        for i in 0..4 {
            for a in 0..np {
                let v = r * (2.0 * sc.dirs[a][i]) + t[a] * (2.0 * coeffs[i]);
                q_xl.fixed_view_mut::<3, 1>(3 * i, a).copy_from(&v);
            }
        }
        let inv = SMatrix::<f64, 2, 2>::new(
            q_ll_inv[0][0],
            q_ll_inv[0][1],
            q_ll_inv[1][0],
            q_ll_inv[1][1],
        );
        hess -= q_xl * inv * q_xl.transpose();
    }

    DistanceDerivatives {
        d_sq: r.norm_squared(),
        region: Region::PointPoint,
        grad,
        hess,
        residual: r,
        coeffs,
    }
}

/// `|ea x eb|^2` for an edge-edge stencil with its gradient and Hessian.
pub fn edge_cross_sq_derivatives(p: &[Vec3; 4]) -> (f64, Grad12, Hess12) {
    let u = p[1] - p[0];
    let v = p[3] - p[2];
    let uu = u.norm_squared();
    let vv = v.norm_squared();
    let uv = u.dot(&v);
    let c = uu * vv - uv * uv;
    let gu = u * (2.0 * vv) - v * (2.0 * uv);
    let gv = v * (2.0 * uu) - u * (2.0 * uv);
    let id = Mat3::identity();
    let huu = id * (2.0 * vv) - v * v.transpose() * 2.0;
    let hvv = id * (2.0 * uu) - u * u.transpose() * 2.0;
    let huv = u * v.transpose() * 4.0 - v * u.transpose() * 2.0 - id * (2.0 * uv);

    // u = x1 - x0, v = x3 - x2
    let su = [-1.0, 1.0, 0.0, 0.0];
    let sv = [0.0, 0.0, -1.0, 1.0];
    let mut g = Grad12::zeros();
    let mut h = Hess12::zeros();
    for i in 0..4 {
        g.fixed_rows_mut::<3>(3 * i)
            .copy_from(&(gu * su[i] + gv * sv[i]));
        for j in 0..4 {
            let blk = huu * (su[i] * su[j])
                + hvv * (sv[i] * sv[j])
                + huv * (su[i] * sv[j])
                + huv.transpose() * (sv[i] * su[j]);
            h.fixed_view_mut::<3, 3>(3 * i, 3 * j).copy_from(&blk);
        }
    }
    (c.max(0.0), g, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn point_point_examples() {
        assert_eq!(point_point(&v(0., 0., 0.), &v(0., 0., 0.)).d_sq, 0.0);
        assert_eq!(point_point(&v(0., 0., 0.), &v(2., 0., 0.)).d_sq, 4.0);
        assert_eq!(point_point(&v(1., 2., 3.), &v(4., 6., 3.)).d_sq, 25.0);
    }

    #[test]
    fn point_edge_examples() {
        let r = point_edge(&v(0., 1., 0.), &v(-1., 0., 0.), &v(1., 0., 0.));
        assert_eq!(r.d_sq, 1.0);
        assert_eq!(r.region, Region::PointEdge(EdgeRegion::Interior));
        assert_eq!(r.params[0], 0.5);

        let r = point_edge(&v(3., 0., 0.), &v(-1., 0., 0.), &v(1., 0., 0.));
        assert_eq!(r.d_sq, 4.0);
        assert_eq!(r.region, Region::PointEdge(EdgeRegion::End));
    }

    #[test]
    fn degenerate_edge_falls_back_to_point() {
        let e = v(1., 1., 1.);
        let r = point_edge(&v(1., 1., 3.), &e, &e);
        assert_eq!(r.region, Region::PointEdge(EdgeRegion::Start));
        assert_eq!(r.d_sq, 4.0);
    }

    #[test]
    fn point_triangle_examples() {
        let (t0, t1, t2) = (v(-0.5, -0.5, 0.), v(1., 0., 0.), v(0., 1., 0.));
        let r = point_triangle(&v(0., 0., 1.), &t0, &t1, &t2);
        assert_eq!(r.region, Region::PointTriangle(TriRegion::Interior));
        assert!((r.d_sq - 1.0).abs() < 1e-15);

        let r = point_triangle(&v(0.1, 0.1, 0.), &t0, &t1, &t2);
        assert_eq!(r.d_sq, 0.0);
    }

    #[test]
    fn point_triangle_vertex_and_edge_regions() {
        let (t0, t1, t2) = (v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.));
        let r = point_triangle(&v(-1., -1., 0.), &t0, &t1, &t2);
        assert_eq!(r.region, Region::PointTriangle(TriRegion::Vertex(0)));
        assert_eq!(r.d_sq, 2.0);
        let r = point_triangle(&v(0.5, -2., 0.), &t0, &t1, &t2);
        assert_eq!(r.region, Region::PointTriangle(TriRegion::Edge(0)));
        assert_eq!(r.d_sq, 4.0);
        let r = point_triangle(&v(1., 1., 0.), &t0, &t1, &t2);
        assert_eq!(r.region, Region::PointTriangle(TriRegion::Edge(1)));
        assert!((r.d_sq - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_uses_edges() {
        let r = point_triangle(
            &v(0.5, 1., 0.),
            &v(0., 0., 0.),
            &v(1., 0., 0.),
            &v(2., 0., 0.),
        );
        assert!((r.d_sq - 1.0).abs() < 1e-15);
        assert!(matches!(
            r.region,
            Region::PointTriangle(TriRegion::Edge(_))
        ));
    }

    #[test]
    fn edge_edge_examples() {
        let r = edge_edge(
            &v(-1., 0., 0.),
            &v(1., 0., 0.),
            &v(0., -1., 1.),
            &v(0., 1., 1.),
        );
        assert_eq!(r.d_sq, 1.0);
        assert_eq!(
            r.region,
            Region::EdgeEdge {
                a: EdgeRegion::Interior,
                b: EdgeRegion::Interior
            }
        );

        let r = edge_edge(
            &v(0., 0., 0.),
            &v(1., 0., 0.),
            &v(0., 1., 0.),
            &v(1., 1., 0.),
        );
        assert_eq!(r.d_sq, 1.0);
    }

    #[test]
    fn point_point_gradient() {
        let pair = PrimitivePair::new(PairKind::PointPoint, &[0, 1], 0.0);
        let x = [v(0., 0., 0.), v(1., 0., 0.)];
        let d = dist_sq_derivatives(&pair, &x);
        assert_eq!(d.grad.fixed_rows::<3>(0).into_owned(), v(-2., 0., 0.));
    }

    #[test]
    fn perpendicular_edges_hessian_symmetric() {
        let p = [v(-1., 0., 0.), v(1., 0., 0.), v(0., -1., 1.), v(0., 1., 1.)];
        let d = stencil_derivatives(PairKind::EdgeEdge, &p);
        assert!((d.hess - d.hess.transpose()).norm() < 1e-12);
    }

    #[test]
    fn cross_sq_gradient_matches_fd() {
        let p = [
            v(0.1, 0.2, 0.),
            v(1., 0.3, 0.1),
            v(0.2, -0.5, 0.7),
            v(0.3, 0.8, 0.4),
        ];
        let (_, g, h) = edge_cross_sq_derivatives(&p);
        let step = 1e-6;
        for k in 0..12 {
            let mut pp = p;
            let mut pm = p;
            pp[k / 3][k % 3] += step;
            pm[k / 3][k % 3] -= step;
            let (cp, gp, _) = edge_cross_sq_derivatives(&pp);
            let (cm, gm, _) = edge_cross_sq_derivatives(&pm);
            assert!(((cp - cm) / (2.0 * step) - g[k]).abs() < 1e-6);
            let col = (gp - gm) / (2.0 * step);
            assert!((col - h.column(k)).norm() < 1e-5);
        }
    }
}
