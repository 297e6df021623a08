mod common;

use codim::accd::CcdQuery;
use codim::audit::{active_pairs_exhaustive, for_each_pair};
use codim::broadphase::{active_pairs, candidate_pairs_ccd, sort_pairs};
use codim::ccd_bench::sampled_min_gap;
use codim::distance::PrimitivePair;
use codim::mesh::{ParticleMaterial, RodMaterial, ShellMaterial, SimMesh};
use codim::shapes::{grid, icosphere};
use codim::Vec3;
use common::rand_vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Crumpled sheet over a sphere, with a rod and a particle cloud mixed in.
fn cluttered(rng: &mut ChaCha8Rng) -> (SimMesh, Vec<Vec3>, Vec<bool>) {
    let mut m = SimMesh::new();
    let (v, f) = grid(12, 0.2, 0.0);
    m.add_shell("sheet", &v, &f, &ShellMaterial::cotton())
        .unwrap();
    let (v, f) = icosphere(Vec3::new(0.0, -0.03, 0.0), 0.05, 2);
    let sphere = m.add_obstacle("sphere", &v, &f, 1e-3).unwrap();
    let rod: Vec<Vec3> = (0..20)
        .map(|i| Vec3::new(-0.1 + 0.01 * i as f64, 0.004, 0.0))
        .collect();
    let lines: Vec<[usize; 2]> = (1..20).map(|i| [i - 1, i]).collect();
    m.add_rod(
        "rod",
        &rod,
        &lines,
        &RodMaterial {
            density: 1000.0,
            young: 1e8,
            radius: 5e-4,
        },
    )
    .unwrap();
    let grains: Vec<Vec3> = (0..30)
        .map(|_| rand_vec(rng, 0.05) + Vec3::new(0.0, 0.01, 0.0))
        .collect();
    m.add_particles(
        "grains",
        &grains,
        &ParticleMaterial {
            density: 1600.0,
            radius: 5e-4,
        },
    );
    let x: Vec<Vec3> = m.rest.iter().map(|p| p + rand_vec(rng, 0.01)).collect();
    let mut kin = vec![false; x.len()];
    for i in sphere {
        kin[i] = true;
    }
    (m, x, kin)
}

fn keys(p: &[PrimitivePair]) -> Vec<(codim::distance::PairKind, [usize; 4])> {
    p.iter().map(|p| (p.kind, p.nodes)).collect()
}

#[test]
fn hash_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (m, x, kin) = cluttered(&mut rng);
        for dhat in [1e-4, 1e-3, 5e-3] {
            let mut fast = active_pairs(&m, &x, dhat, &kin);
            sort_pairs(&mut fast);
            let slow = active_pairs_exhaustive(&m, &x, dhat, &kin);
            assert!(!slow.is_empty());
            assert_eq!(keys(&fast), keys(&slow), "dhat {dhat}");
        }
    }
}

#[test]
fn ccd_candidates_cover_every_contact() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..3 {
        let (m, x, kin) = cluttered(&mut rng);
        let dx: Vec<Vec3> = (0..x.len())
            .map(|i| {
                if kin[i] {
                    Vec3::zeros()
                } else {
                    rand_vec(&mut rng, 0.02) - Vec3::y() * rng.random_range(0.0..0.02)
                }
            })
            .collect();
        let cand = keys(&candidate_pairs_ccd(&x, &dx, &m, &kin));
        let mut impacts = 0;
        for_each_pair(&m, &kin, |p| {
            let q = CcdQuery::from_pair(&p, &x, &dx, 0.1, 1.0);
            if q.d_sq_at(0.0) <= p.xi * p.xi {
                return;
            }
            // Distance can shrink by at most the summed displacement bound.
            if q.d_sq_at(0.0).sqrt() - q.motion_bound(&q.p) > p.xi {
                return;
            }
            if sampled_min_gap(&q, 1.0, 200) <= 0.0 {
                impacts += 1;
                assert!(
                    cand.binary_search(&(p.kind, p.nodes)).is_ok(),
                    "missed {p:?}"
                );
            }
        });
        assert!(impacts > 0);
    }
}

#[test]
fn all_kinematic_and_incident_pairs_are_skipped() {
    let mut m = SimMesh::new();
    let (v, f) = grid(3, 0.1, 0.0);
    m.add_shell("a", &v, &f, &ShellMaterial::cotton()).unwrap();
    let x = m.rest.clone();
    // A flat sheet only has incident pairs and pairs farther than dhat.
    assert!(active_pairs(&m, &x, 1e-3, &vec![false; x.len()]).is_empty());
    let (v, f) = grid(3, 0.1, 1e-3);
    m.add_obstacle("b", &v, &f, 0.0).unwrap();
    let mut kin = vec![true; m.n_nodes()];
    let x = m.rest.clone();
    assert!(active_pairs(&m, &x, 1e-3, &kin).is_empty());
    kin[0] = false;
    assert!(active_pairs(&m, &x, 1e-3, &kin)
        .iter()
        .all(|p| p.active_nodes().contains(&0)));
}
