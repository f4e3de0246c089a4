//! Downward-closed convex hulls of rate triples. The region generated by a
//! point set is the convex hull of the points' axis-aligned boxes down to
//! the origin; it is fully described by the origin plus its Pareto-extreme
//! generators, so that is what the vertex list stores. Membership and
//! extremeness are decided by a convex-domination feasibility LP.

use crate::bounds::RateTriple;

use super::lp::convex_dominates;

/// Vertex deduplication tolerance.
const DEDUP_TOL: f64 = 1e-9;

/// LP feasibility tolerance for membership tests.
const MEMBER_TOL: f64 = 1e-9;

fn as_array(p: &RateTriple) -> [f64; 3] {
    [p.r1, p.r2, p.re2]
}

/// `a` dominates `b` when it is at least as large in every coordinate and
/// not identical.
pub(crate) fn dominates(a: &RateTriple, b: &RateTriple) -> bool {
    a.r1 >= b.r1 && a.r2 >= b.r2 && a.re2 >= b.re2 && (a.r1, a.r2, a.re2) != (b.r1, b.r2, b.re2)
}

fn close(a: &RateTriple, b: &RateTriple) -> bool {
    (a.r1 - b.r1).abs() <= DEDUP_TOL
        && (a.r2 - b.r2).abs() <= DEDUP_TOL
        && (a.re2 - b.re2).abs() <= DEDUP_TOL
}

fn canonical_sort(points: &mut [RateTriple]) {
    points.sort_by(|a, b| {
        a.r1.total_cmp(&b.r1)
            .then(a.r2.total_cmp(&b.r2))
            .then(a.re2.total_cmp(&b.re2))
    });
}

/// Vertex list of the downward-closed convex hull of `points`: the origin
/// plus every Pareto-extreme generator, deduplicated within 1e-9 and sorted
/// canonically. The downward facets are implied.
pub fn downward_hull(points: &[RateTriple]) -> Vec<RateTriple> {
    let mut maximal: Vec<RateTriple> = Vec::new();
    'outer: for p in points {
        let mut i = 0;
        while i < maximal.len() {
            if dominates(&maximal[i], p) || maximal[i] == *p {
                continue 'outer;
            }
            if dominates(p, &maximal[i]) {
                maximal.swap_remove(i);
            } else {
                i += 1;
            }
        }
        maximal.push(*p);
    }
    canonical_sort(&mut maximal);
    let mut deduped: Vec<RateTriple> = Vec::new();
    for p in &maximal {
        if !deduped.iter().any(|q| close(p, q)) {
            deduped.push(*p);
        }
    }
    // Keep only extreme generators: p stays unless it is convex-dominated
    // by the other generators together with the origin.
    let mut vertices: Vec<RateTriple> = Vec::new();
    for (i, p) in deduped.iter().enumerate() {
        let mut others: Vec<[f64; 3]> = Vec::with_capacity(deduped.len());
        others.push([0.0; 3]);
        for (j, q) in deduped.iter().enumerate() {
            if j != i {
                others.push(as_array(q));
            }
        }
        if !convex_dominates(&others, as_array(p), MEMBER_TOL) {
            vertices.push(*p);
        }
    }
    let mut out = vec![RateTriple::ORIGIN];
    out.extend(vertices.into_iter().filter(|p| !close(p, &RateTriple::ORIGIN)));
    canonical_sort(&mut out);
    out
}

/// Membership of `q` in the downward-closed convex hull described by
/// `vertices` (as returned by [`downward_hull`]).
pub fn hull_contains(vertices: &[RateTriple], q: &RateTriple) -> bool {
    let mut gens: Vec<[f64; 3]> = vertices.iter().map(as_array).collect();
    gens.push([0.0; 3]);
    convex_dominates(&gens, as_array(q), MEMBER_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rt(r1: f64, r2: f64, re2: f64) -> RateTriple {
        RateTriple::new(r1, r2, re2)
    }

    #[test]
    fn empty_input_yields_origin() {
        assert_eq!(downward_hull(&[]), vec![RateTriple::ORIGIN]);
    }

    #[test]
    fn single_point_hull_accepts_dominated_point() {
        let hull = downward_hull(&[rt(1.0, 1.0, 1.0)]);
        assert_eq!(hull.len(), 2); // origin + the corner
        assert!(hull_contains(&hull, &rt(0.5, 0.7, 0.2)));
        assert!(hull_contains(&hull, &rt(1.0, 1.0, 1.0)));
        assert!(!hull_contains(&hull, &rt(1.0001, 0.0, 0.0)));
    }

    #[test]
    fn time_sharing_midpoint_is_member() {
        let hull = downward_hull(&[rt(1.0, 0.0, 0.0), rt(0.0, 1.0, 1.0)]);
        assert!(hull_contains(&hull, &rt(0.5, 0.5, 0.5)));
        assert!(!hull_contains(&hull, &rt(0.75, 0.5, 0.5)));
    }

    #[test]
    fn dominated_and_interior_points_are_not_vertices() {
        let hull = downward_hull(&[
            rt(1.0, 0.0, 0.0),
            rt(0.0, 1.0, 0.5),
            rt(0.5, 0.5, 0.25), // exact midpoint: interior of a facet
            rt(0.2, 0.2, 0.1),  // dominated
        ]);
        assert_eq!(hull.len(), 3); // origin + the two extreme generators
        assert!(hull_contains(&hull, &rt(0.5, 0.5, 0.25)));
    }

    #[test]
    fn duplicates_within_tolerance_collapse() {
        let hull = downward_hull(&[rt(1.0, 1.0, 0.5), rt(1.0 + 1e-12, 1.0, 0.5)]);
        assert_eq!(hull.len(), 2);
    }

    #[test]
    fn random_points_members_and_outliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let points: Vec<RateTriple> = (0..100)
            .map(|_| {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let re2 = r2 * rng.random::<f64>();
                rt(r1, r2, re2)
            })
            .collect();
        let hull = downward_hull(&points);
        let max_r1 = points.iter().map(|p| p.r1).fold(0.0, f64::max);
        for p in &points {
            assert!(hull_contains(&hull, p), "input point {p:?} rejected");
        }
        assert!(!hull_contains(&hull, &rt(max_r1 + 0.01, 0.0, 0.0)));
    }

    #[test]
    fn membership_is_downward_transitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let points: Vec<RateTriple> = (0..20)
            .map(|_| {
                let r2: f64 = rng.random();
                rt(rng.random(), r2, r2 * rng.random::<f64>())
            })
            .collect();
        let hull = downward_hull(&points);
        for p in &points {
            let q = rt(p.r1 * 0.5, p.r2 * 0.9, p.re2 * 0.1);
            assert!(hull_contains(&hull, &q));
        }
    }

    #[test]
    fn hull_grows_monotonically_with_more_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(79);
        let points: Vec<RateTriple> = (0..60)
            .map(|_| {
                let r2: f64 = rng.random();
                rt(rng.random(), r2, r2 * rng.random::<f64>())
            })
            .collect();
        let small = downward_hull(&points[..30]);
        let large = downward_hull(&points);
        for v in &small {
            assert!(hull_contains(&large, v));
        }
    }
}
