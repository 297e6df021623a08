//! Procedural meshes used by scenes and tests.

use std::collections::HashMap;

use crate::math::Vec3;

/// Square grid in the `xz` plane at height `y`, centred on the origin,
/// `n x n` vertices over side `size`, alternating diagonals.
pub fn grid(n: usize, size: f64, y: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    assert!(n >= 2);
    let step = size / (n - 1) as f64;
    let half = 0.5 * size;
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(Vec3::new(j as f64 * step - half, y, i as f64 * step - half));
        }
    }
    let mut f = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let a = i * n + j;
            let (b, c, d) = (a + 1, a + n, a + n + 1);
            // Counter-clockwise seen from +y.
            if (i + j) % 2 == 0 {
                f.push([a, c, d]);
                f.push([a, d, b]);
            } else {
                f.push([a, c, b]);
                f.push([b, c, d]);
            }
        }
    }
    (v, f)
}

/// Icosphere with `level` midpoint subdivisions, outward faces.
pub fn icosphere(center: Vec3, radius: f64, level: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(a, b, c)| Vec3::new(a, b, c).normalize())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut get = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalize());
                v.len() - 1
            })
        };
        let mut nf = Vec::with_capacity(4 * f.len());
        for &[a, b, c] in &f {
            let ab = get(a, b, &mut v);
            let bc = get(b, c, &mut v);
            let ca = get(c, a, &mut v);
            nf.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    let v = v.into_iter().map(|p| center + p * radius).collect();
    (v, f)
}

/// Axis-aligned box `[lo, hi]` split into `nx x ny x nz` cells of five
/// tets each, positively oriented.
pub fn box_tets(lo: Vec3, hi: Vec3, n: [usize; 3]) -> (Vec<Vec3>, Vec<[usize; 4]>) {
    let [nx, ny, nz] = n;
    let id = |i: usize, j: usize, k: usize| (i * (ny + 1) + j) * (nz + 1) + k;
    let mut v = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            for k in 0..=nz {
                v.push(Vec3::new(
                    lo.x + (hi.x - lo.x) * i as f64 / nx as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / ny as f64,
                    lo.z + (hi.z - lo.z) * k as f64 / nz as f64,
                ));
            }
        }
    }
    let mut t = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let c = [
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ];
                let cells = if (i + j + k) % 2 == 0 {
                    [
                        [c[0], c[1], c[3], c[4]],
                        [c[1], c[2], c[3], c[6]],
                        [c[1], c[4], c[5], c[6]],
                        [c[3], c[4], c[6], c[7]],
                        [c[1], c[3], c[4], c[6]],
                    ]
                } else {
                    [
                        [c[0], c[1], c[2], c[5]],
                        [c[0], c[2], c[3], c[7]],
                        [c[0], c[4], c[5], c[7]],
                        [c[2], c[5], c[6], c[7]],
                        [c[0], c[2], c[5], c[7]],
                    ]
                };
                for mut tet in cells {
                    let vol = (v[tet[1]] - v[tet[0]])
                        .cross(&(v[tet[2]] - v[tet[0]]))
                        .dot(&(v[tet[3]] - v[tet[0]]));
                    if vol < 0.0 {
                        tet.swap(2, 3);
                    }
                    t.push(tet);
                }
            }
        }
    }
    (v, t)
}

/// Two triangles covering the square `[-half, half]^2` in the `xz` plane
/// at height `y`, facing `+y`.
pub fn plane(half: f64, y: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let v = vec![
        Vec3::new(-half, y, -half),
        Vec3::new(half, y, -half),
        Vec3::new(half, y, half),
        Vec3::new(-half, y, half),
    ];
    (v, vec![[0, 2, 1], [0, 3, 2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::tet_volume;
    use crate::mesh::boundary_faces;

    #[test]
    fn grid_counts() {
        let (v, f) = grid(33, 1.0, 0.0);
        assert_eq!(v.len(), 1089);
        assert_eq!(f.len(), 2048);
        for t in &f {
            let n = (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]]));
            assert!(n.y > 0.0);
        }
    }

    #[test]
    fn icosphere_is_closed() {
        let (v, f) = icosphere(Vec3::zeros(), 0.5, 2);
        assert_eq!(f.len(), 320);
        assert_eq!(v.len(), 162);
        assert!(v.iter().all(|p| (p.norm() - 0.5).abs() < 1e-12));
        for t in &f {
            let n = (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]]));
            assert!(n.dot(&v[t[0]]) > 0.0);
        }
    }

    #[test]
    fn box_volume_adds_up() {
        let (v, t) = box_tets(Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), [2, 2, 2]);
        let vol: f64 = t
            .iter()
            .map(|t| tet_volume(&v[t[0]], &v[t[1]], &v[t[2]], &v[t[3]]))
            .sum();
        assert!((vol - 6.0).abs() < 1e-12);
        assert!(t
            .iter()
            .all(|t| tet_volume(&v[t[0]], &v[t[1]], &v[t[2]], &v[t[3]]) > 0.0));
        // Boundary of a conforming mesh: 6 sides x 4 squares x 2 triangles.
        assert_eq!(boundary_faces(&t).len(), 48);
    }
}
