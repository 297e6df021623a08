//! Spatial-hash candidate generation for proximity and swept queries.
//!
//! Every primitive's bounding box is grown by half its own offset plus half
//! the query radius, so two boxes overlap whenever the primitives may come
//! within `xi_k + radius` of each other.

use std::collections::HashMap;

use crate::distance::{pair_distance, PairKind, PrimitivePair};
use crate::math::{Aabb, Vec3};
use crate::mesh::{PointKind, SimMesh};

/// Mollifier threshold factor on `|ea|^2 |eb|^2` at rest.
pub const EE_MOLLIFIER_FACTOR: f64 = 1e-3;

/// Boxes covering more cells than this bypass the grid.
const MAX_CELLS: i64 = 1 << 12;

#[derive(Debug, Clone)]
pub struct SpatialHash {
    pub voxel: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
    pub bounds: Vec<Aabb>,
    large: Vec<usize>,
}

impl SpatialHash {
    pub fn build(bounds: Vec<Aabb>, voxel: f64) -> Self {
        assert!(voxel > 0.0);
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut large = Vec::new();
        for (i, b) in bounds.iter().enumerate() {
            let (lo, hi) = cell_range(b, voxel);
            if cell_count(&lo, &hi) > MAX_CELLS {
                large.push(i);
                continue;
            }
            for cx in lo[0]..=hi[0] {
                for cy in lo[1]..=hi[1] {
                    for cz in lo[2]..=hi[2] {
                        cells.entry([cx, cy, cz]).or_default().push(i);
                    }
                }
            }
        }
        Self {
            voxel,
            cells,
            bounds,
            large,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Ids of all stored boxes overlapping `b`, sorted and unique.
    pub fn query(&self, b: &Aabb, out: &mut Vec<usize>) {
        out.clear();
        if self.bounds.is_empty() {
            return;
        }
        let (lo, hi) = cell_range(b, self.voxel);
        if cell_count(&lo, &hi) > MAX_CELLS {
            out.extend((0..self.bounds.len()).filter(|&i| self.bounds[i].overlaps(b)));
            return;
        }
        for cx in lo[0]..=hi[0] {
            for cy in lo[1]..=hi[1] {
                for cz in lo[2]..=hi[2] {
                    if let Some(ids) = self.cells.get(&[cx, cy, cz]) {
                        out.extend(ids.iter().copied().filter(|&i| self.bounds[i].overlaps(b)));
                    }
                }
            }
        }
        out.extend(
            self.large
                .iter()
                .copied()
                .filter(|&i| self.bounds[i].overlaps(b)),
        );
        out.sort_unstable();
        out.dedup();
    }
}

fn cell_range(b: &Aabb, voxel: f64) -> ([i64; 3], [i64; 3]) {
    let f = |v: f64| (v / voxel).floor().clamp(-1e15, 1e15) as i64;
    (
        [f(b.min.x), f(b.min.y), f(b.min.z)],
        [f(b.max.x), f(b.max.y), f(b.max.z)],
    )
}

fn cell_count(lo: &[i64; 3], hi: &[i64; 3]) -> i64 {
    (0..3)
        .map(|k| (hi[k] - lo[k] + 1).max(0))
        .fold(1i64, |a, n| a.saturating_mul(n))
}

/// Extended bounds of every contact primitive.
#[derive(Debug, Clone)]
pub struct PrimitiveBounds {
    pub points: Vec<Aabb>,
    pub edges: Vec<Aabb>,
    pub faces: Vec<Aabb>,
}

impl PrimitiveBounds {
    /// Boxes of the primitives at `x` (swept to `x + dx` when given), grown
    /// by `xi_i / 2 + radius / 2`.
    pub fn new(mesh: &SimMesh, x: &[Vec3], dx: Option<&[Vec3]>, radius: f64) -> Self {
        let bx = |nodes: &[usize], xi: f64| {
            let mut b = Aabb::empty();
            for &n in nodes {
                b.include(&x[n]);
                if let Some(d) = dx {
                    b.include(&(x[n] + d[n]));
                }
            }
            b.inflate(0.5 * xi + 0.5 * radius)
        };
        Self {
            points: mesh.points.iter().map(|p| bx(&[p.node], p.xi)).collect(),
            edges: mesh.edges.iter().map(|e| bx(&e.nodes, e.xi)).collect(),
            faces: mesh.faces.iter().map(|f| bx(&f.nodes, f.xi)).collect(),
        }
    }

    /// Mean box diagonal, the voxel size of the hash.
    pub fn mean_diagonal(&self) -> f64 {
        let all = self.points.iter().chain(&self.edges).chain(&self.faces);
        let (sum, n) = all.fold((0.0, 0usize), |(s, n), b| (s + b.diagonal(), n + 1));
        if n == 0 || !(sum > 0.0) {
            1.0
        } else {
            sum / n as f64
        }
    }
}

/// Hashes of the primitive sets used for candidate queries.
#[derive(Debug, Clone)]
pub struct ContactHash {
    pub bounds: PrimitiveBounds,
    pub faces: SpatialHash,
    pub edges: SpatialHash,
    pub rod_edges: SpatialHash,
    pub particles: SpatialHash,
    rod_edge_ids: Vec<usize>,
    particle_ids: Vec<usize>,
}

impl ContactHash {
    pub fn build(mesh: &SimMesh, x: &[Vec3], dx: Option<&[Vec3]>, radius: f64) -> Self {
        let bounds = PrimitiveBounds::new(mesh, x, dx, radius);
        let voxel = bounds.mean_diagonal();
        let rod_edge_ids: Vec<usize> = (0..mesh.edges.len())
            .filter(|&i| mesh.edges[i].rod)
            .collect();
        let particle_ids: Vec<usize> = (0..mesh.points.len())
            .filter(|&i| mesh.points[i].kind == PointKind::Particle)
            .collect();
        Self {
            faces: SpatialHash::build(bounds.faces.clone(), voxel),
            edges: SpatialHash::build(bounds.edges.clone(), voxel),
            rod_edges: SpatialHash::build(
                rod_edge_ids.iter().map(|&i| bounds.edges[i]).collect(),
                voxel,
            ),
            particles: SpatialHash::build(
                particle_ids.iter().map(|&i| bounds.points[i]).collect(),
                voxel,
            ),
            bounds,
            rod_edge_ids,
            particle_ids,
        }
    }

    /// Candidate pairs whose boxes overlap; adjacent and all-kinematic
    /// stencils are skipped. Sorted by kind and node ids.
    pub fn candidates(&self, mesh: &SimMesh, kinematic: &[bool]) -> Vec<PrimitivePair> {
        let mut out = Vec::new();
        let mut hits = Vec::new();
        let skip = |nodes: &[usize]| {
            nodes
                .iter()
                .all(|&n| kinematic.get(n).copied().unwrap_or(false))
        };

        for (pi, p) in mesh.points.iter().enumerate() {
            self.faces.query(&self.bounds.points[pi], &mut hits);
            for &fi in &hits {
                let f = &mesh.faces[fi];
                if f.nodes.contains(&p.node) {
                    continue;
                }
                let nodes = [p.node, f.nodes[0], f.nodes[1], f.nodes[2]];
                if skip(&nodes) {
                    continue;
                }
                out.push(PrimitivePair::new(
                    PairKind::PointTriangle,
                    &nodes,
                    0.5 * (p.xi + f.xi),
                ));
            }
            if p.kind != PointKind::Surface {
                self.rod_edges.query(&self.bounds.points[pi], &mut hits);
                for &k in &hits {
                    let e = &mesh.edges[self.rod_edge_ids[k]];
                    if e.nodes.contains(&p.node) {
                        continue;
                    }
                    let nodes = [p.node, e.nodes[0], e.nodes[1]];
                    if skip(&nodes) {
                        continue;
                    }
                    out.push(PrimitivePair::new(
                        PairKind::PointEdge,
                        &nodes,
                        0.5 * (p.xi + e.xi),
                    ));
                }
            }
        }

        for (ai, a) in mesh.edges.iter().enumerate() {
            self.edges.query(&self.bounds.edges[ai], &mut hits);
            for &bi in &hits {
                if bi <= ai {
                    continue;
                }
                let b = &mesh.edges[bi];
                if a.nodes.iter().any(|n| b.nodes.contains(n)) {
                    continue;
                }
                let nodes = [a.nodes[0], a.nodes[1], b.nodes[0], b.nodes[1]];
                if skip(&nodes) {
                    continue;
                }
                out.push(
                    PrimitivePair::new(PairKind::EdgeEdge, &nodes, 0.5 * (a.xi + b.xi))
                        .with_mollifier(EE_MOLLIFIER_FACTOR * a.rest_len_sq * b.rest_len_sq),
                );
            }
        }

        for (k, &pi) in self.particle_ids.iter().enumerate() {
            self.particles.query(&self.bounds.points[pi], &mut hits);
            for &l in &hits {
                if l <= k {
                    continue;
                }
                let (a, b) = (&mesh.points[pi], &mesh.points[self.particle_ids[l]]);
                let nodes = [a.node, b.node];
                if skip(&nodes) {
                    continue;
                }
                out.push(PrimitivePair::new(
                    PairKind::PointPoint,
                    &nodes,
                    0.5 * (a.xi + b.xi),
                ));
            }
        }

        sort_pairs(&mut out);
        out
    }
}

pub fn sort_pairs(pairs: &mut Vec<PrimitivePair>) {
    pairs.sort_by(|a, b| (a.kind, a.nodes).cmp(&(b.kind, b.nodes)));
    pairs.dedup_by(|a, b| a.kind == b.kind && a.nodes == b.nodes);
}

/// Proximity hash at query radius `dhat`.
pub fn build_proximity_hash(x: &[Vec3], mesh: &SimMesh, dhat: f64) -> ContactHash {
    ContactHash::build(mesh, x, None, dhat)
}

/// Candidates for the barrier: a superset of pairs with `d < dhat + xi_k`.
pub fn proximity_candidates(
    mesh: &SimMesh,
    x: &[Vec3],
    dhat: f64,
    kinematic: &[bool],
) -> Vec<PrimitivePair> {
    build_proximity_hash(x, mesh, dhat).candidates(mesh, kinematic)
}

/// Candidates for CCD along `x + t dx`, `t` in `[0, 1]`.
pub fn candidate_pairs_ccd(
    x: &[Vec3],
    dx: &[Vec3],
    mesh: &SimMesh,
    kinematic: &[bool],
) -> Vec<PrimitivePair> {
    ContactHash::build(mesh, x, Some(dx), 0.0).candidates(mesh, kinematic)
}

/// Keep the pairs with `d < xi_k + dhat`.
pub fn narrow_phase_filter(
    candidates: &[PrimitivePair],
    x: &[Vec3],
    dhat: f64,
) -> Vec<PrimitivePair> {
    candidates
        .iter()
        .filter(|p| {
            let reach = p.xi + dhat;
            pair_distance(p, x).d_sq < reach * reach
        })
        .copied()
        .collect()
}

/// Active barrier pairs at `x`.
pub fn active_pairs(
    mesh: &SimMesh,
    x: &[Vec3],
    dhat: f64,
    kinematic: &[bool],
) -> Vec<PrimitivePair> {
    narrow_phase_filter(&proximity_candidates(mesh, x, dhat, kinematic), x, dhat)
}
