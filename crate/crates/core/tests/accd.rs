mod common;

use codim::accd::{
    accd_query, accd_query_stats, gap_measure, max_step, target_lower_bound, toi_lower_bound,
    CcdQuery,
};
use codim::ccd_bench::{format_query, parse_corpus, run_bench, sampled_min_gap};
use codim::distance::{PairKind, PrimitivePair};
use codim::Vec3;
use common::{near_parallel_ee, random_query};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn check(q: &CcdQuery, samples: usize) -> Result<u64, String> {
    let out = accd_query_stats(q).map_err(|e| e.to_string())?;
    let t_end = out.toi.unwrap_or(q.t_c);
    let gap = sampled_min_gap(q, t_end, samples);
    if !(gap > 0.0) {
        return Err(format!(
            "gap {gap:e} at or before t = {t_end} for {}",
            format_query(q)
        ));
    }
    if let (Some(t), Some(lb)) = (out.toi, target_lower_bound(q)) {
        if t < lb {
            return Err(format!("t = {t} below bound {lb} for {}", format_query(q)));
        }
    }
    Ok(out.iterations)
}

// Until it stops, every step advances by at least `0.9 s g0 / lp`.
fn iteration_bound(q: &CcdQuery) -> u64 {
    let lp = q.motion_bound(&q.centered_displacements());
    let g0 = gap_measure(q.d_sq_at(0.0), q.xi);
    2 + (q.t_c * lp / (0.9 * q.s * g0)).ceil() as u64
}

#[test]
fn random_queries_stay_separated() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    for _ in 0..3000 {
        let q = random_query(&mut rng, 0.1);
        let it = check(&q, 2000).unwrap();
        assert!(it <= iteration_bound(&q));
        hits += usize::from(accd_query(&q).unwrap().is_some());
    }
    // The generator should actually produce impacts.
    assert!(hits > 1000, "only {hits} impacts");
}

#[test]
fn near_parallel_edges_are_safe_and_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..2000 {
        let q = near_parallel_ee(&mut rng, 0.1);
        let it = check(&q, 2000).unwrap();
        assert!(
            it <= iteration_bound(&q),
            "{it} iterations, bound {}",
            iteration_bound(&q)
        );
    }
}

#[test]
fn worked_traces_stop_at_nine_tenths() {
    let v = |x: f64| Vec3::new(x, 0.0, 0.0);
    let q = CcdQuery::new(
        PairKind::PointPoint,
        &[v(0.0), v(2.0)],
        &[v(1.0), v(-1.0)],
        0.0,
        0.1,
    );
    assert_eq!(toi_lower_bound(&q), Some(1.0));
    assert_eq!(accd_query(&q).unwrap(), Some(0.9));
    let q = CcdQuery::new(
        PairKind::PointPoint,
        &[v(0.0), v(2.0)],
        &[v(1.0), v(0.0)],
        1.0,
        0.1,
    );
    assert_eq!(accd_query(&q).unwrap(), Some(0.9));
}

#[test]
fn smaller_s_advances_further() {
    let v = |x: f64| Vec3::new(x, 0.0, 0.0);
    let q = |s| {
        CcdQuery::new(
            PairKind::PointPoint,
            &[v(0.0), v(2.0)],
            &[v(1.0), v(-1.0)],
            0.0,
            s,
        )
    };
    let t1 = accd_query(&q(0.5)).unwrap().unwrap();
    let t2 = accd_query(&q(0.1)).unwrap().unwrap();
    let t3 = accd_query(&q(0.01)).unwrap().unwrap();
    assert!(t1 < t2 && t2 < t3 && t3 < 1.0);
}

#[test]
fn max_step_is_minimum_over_pairs() {
    let x = vec![
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.5, 0.0),
        Vec3::new(-1.0, 0.0, -1.0),
        Vec3::new(1.0, 0.0, -1.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let dx = vec![
        Vec3::new(0.0, -2.0, 0.0),
        Vec3::new(0.0, -2.0, 0.0),
        Vec3::zeros(),
        Vec3::zeros(),
        Vec3::zeros(),
    ];
    let pairs = [
        PrimitivePair::new(PairKind::PointTriangle, &[0, 2, 3, 4], 0.0),
        PrimitivePair::new(PairKind::PointTriangle, &[1, 2, 3, 4], 0.0),
    ];
    let a = max_step(&pairs, &x, &dx, 0.1).unwrap();
    let solo = accd_query(&CcdQuery::from_pair(&pairs[1], &x, &dx, 0.1, 1.0))
        .unwrap()
        .unwrap();
    assert_eq!(a, solo);
    assert!(a < 0.25);
}

#[test]
fn corpus_replay_reports_no_mismatches() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let text: String = (0..200)
        .map(|k| {
            let q = if k % 2 == 0 {
                random_query(&mut rng, 0.1)
            } else {
                near_parallel_ee(&mut rng, 0.1)
            };
            format_query(&q) + "\n"
        })
        .collect();
    let queries = parse_corpus(&text, Path::new("corpus")).unwrap();
    assert_eq!(queries.len(), 200);
    let report = run_bench(&queries, 1000).unwrap();
    assert_eq!(report.mismatches(), 0);
    assert_eq!(report.cap_hits(), 0);
    assert!(report.render().contains("mismatches"));
}
