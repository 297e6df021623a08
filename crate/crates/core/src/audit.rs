//! Brute-force pair enumeration for feasibility audits and broadphase
//! cross-checks. Quadratic in the primitive count.

use crate::broadphase::EE_MOLLIFIER_FACTOR;
use crate::distance::{pair_distance, PairKind, PrimitivePair};
use crate::math::{Aabb, Vec3};
use crate::mesh::{PointKind, SimMesh};

/// Visit every pair allowed by the contact rules, without any culling.
pub fn for_each_pair(mesh: &SimMesh, kinematic: &[bool], mut f: impl FnMut(PrimitivePair)) {
    let skip = |nodes: &[usize]| {
        nodes
            .iter()
            .all(|&n| kinematic.get(n).copied().unwrap_or(false))
    };
    for p in &mesh.points {
        for t in &mesh.faces {
            let nodes = [p.node, t.nodes[0], t.nodes[1], t.nodes[2]];
            if !t.nodes.contains(&p.node) && !skip(&nodes) {
                f(PrimitivePair::new(
                    PairKind::PointTriangle,
                    &nodes,
                    0.5 * (p.xi + t.xi),
                ));
            }
        }
        if p.kind != PointKind::Surface {
            for e in mesh.edges.iter().filter(|e| e.rod) {
                let nodes = [p.node, e.nodes[0], e.nodes[1]];
                if !e.nodes.contains(&p.node) && !skip(&nodes) {
                    f(PrimitivePair::new(
                        PairKind::PointEdge,
                        &nodes,
                        0.5 * (p.xi + e.xi),
                    ));
                }
            }
        }
    }
    for (i, a) in mesh.edges.iter().enumerate() {
        for b in &mesh.edges[i + 1..] {
            let nodes = [a.nodes[0], a.nodes[1], b.nodes[0], b.nodes[1]];
            if a.nodes.iter().any(|n| b.nodes.contains(n)) || skip(&nodes) {
                continue;
            }
            f(
                PrimitivePair::new(PairKind::EdgeEdge, &nodes, 0.5 * (a.xi + b.xi))
                    .with_mollifier(EE_MOLLIFIER_FACTOR * a.rest_len_sq * b.rest_len_sq),
            );
        }
    }
    let particles: Vec<_> = mesh
        .points
        .iter()
        .filter(|p| p.kind == PointKind::Particle)
        .collect();
    for (i, a) in particles.iter().enumerate() {
        for b in &particles[i + 1..] {
            let nodes = [a.node, b.node];
            if !skip(&nodes) {
                f(PrimitivePair::new(
                    PairKind::PointPoint,
                    &nodes,
                    0.5 * (a.xi + b.xi),
                ));
            }
        }
    }
}

/// All pairs with `d < xi_k + dhat`, by exhaustive enumeration.
pub fn active_pairs_exhaustive(
    mesh: &SimMesh,
    x: &[Vec3],
    dhat: f64,
    kinematic: &[bool],
) -> Vec<PrimitivePair> {
    let mut out = Vec::new();
    for_each_pair(mesh, kinematic, |p| {
        let reach = p.xi + dhat;
        if pair_distance(&p, x).d_sq < reach * reach {
            out.push(p);
        }
    });
    out.sort_by(|a, b| (a.kind, a.nodes).cmp(&(b.kind, b.nodes)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditResult {
    /// Pairs examined exactly (after the box test).
    pub checked: usize,
    /// Smallest `d - xi` among examined pairs.
    pub min_gap: Option<f64>,
    pub worst: Option<PrimitivePair>,
    pub violations: usize,
}

/// Exhaustive feasibility audit: every pair with `d - xi_k <= margin` is
/// found (pairs farther apart are rejected by an exact box test) and
/// counted as a violation when `d <= xi_k`.
pub fn audit_separation(
    mesh: &SimMesh,
    x: &[Vec3],
    kinematic: &[bool],
    margin: f64,
) -> AuditResult {
    let bx = |nodes: &[usize], xi: f64| {
        Aabb::from_points(nodes.iter().map(|&n| &x[n])).inflate(0.5 * (xi + margin))
    };
    let pb: Vec<Aabb> = mesh.points.iter().map(|p| bx(&[p.node], p.xi)).collect();
    let eb: Vec<Aabb> = mesh.edges.iter().map(|e| bx(&e.nodes, e.xi)).collect();
    let fb: Vec<Aabb> = mesh.faces.iter().map(|f| bx(&f.nodes, f.xi)).collect();
    let mut res = AuditResult {
        checked: 0,
        min_gap: None,
        worst: None,
        violations: 0,
    };
    let check = |pair: PrimitivePair, res: &mut AuditResult| {
        res.checked += 1;
        let d = pair_distance(&pair, x).d_sq.sqrt();
        let gap = d - pair.xi;
        if !(gap > 0.0) {
            res.violations += 1;
        }
        if res.min_gap.is_none_or(|g| gap < g) {
            res.min_gap = Some(gap);
            res.worst = Some(pair);
        }
    };
    let skip = |nodes: &[usize]| {
        nodes
            .iter()
            .all(|&n| kinematic.get(n).copied().unwrap_or(false))
    };
    for (pi, p) in mesh.points.iter().enumerate() {
        for (fi, t) in mesh.faces.iter().enumerate() {
            if !pb[pi].overlaps(&fb[fi]) || t.nodes.contains(&p.node) {
                continue;
            }
            let nodes = [p.node, t.nodes[0], t.nodes[1], t.nodes[2]];
            if !skip(&nodes) {
                check(
                    PrimitivePair::new(PairKind::PointTriangle, &nodes, 0.5 * (p.xi + t.xi)),
                    &mut res,
                );
            }
        }
        if p.kind != PointKind::Surface {
            for (ei, e) in mesh.edges.iter().enumerate() {
                if !e.rod || !pb[pi].overlaps(&eb[ei]) || e.nodes.contains(&p.node) {
                    continue;
                }
                let nodes = [p.node, e.nodes[0], e.nodes[1]];
                if !skip(&nodes) {
                    check(
                        PrimitivePair::new(PairKind::PointEdge, &nodes, 0.5 * (p.xi + e.xi)),
                        &mut res,
                    );
                }
            }
        }
    }
    for (i, a) in mesh.edges.iter().enumerate() {
        for (j, b) in mesh.edges.iter().enumerate().skip(i + 1) {
            if !eb[i].overlaps(&eb[j]) || a.nodes.iter().any(|n| b.nodes.contains(n)) {
                continue;
            }
            let nodes = [a.nodes[0], a.nodes[1], b.nodes[0], b.nodes[1]];
            if !skip(&nodes) {
                check(
                    PrimitivePair::new(PairKind::EdgeEdge, &nodes, 0.5 * (a.xi + b.xi)),
                    &mut res,
                );
            }
        }
    }
    for (i, a) in mesh.points.iter().enumerate() {
        if a.kind != PointKind::Particle {
            continue;
        }
        for (j, b) in mesh.points.iter().enumerate().skip(i + 1) {
            if b.kind != PointKind::Particle || !pb[i].overlaps(&pb[j]) {
                continue;
            }
            let nodes = [a.node, b.node];
            if !skip(&nodes) {
                check(
                    PrimitivePair::new(PairKind::PointPoint, &nodes, 0.5 * (a.xi + b.xi)),
                    &mut res,
                );
            }
        }
    }
    res
}
