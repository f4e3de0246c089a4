//! Rational-coordinate simplex grids: counting, ranking-free enumeration via
//! unranking, so any grid policy can be reconstructed from its index alone.

/// Binomial coefficient in u128, saturating on overflow.
fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of compositions of `total` into `parts` nonnegative integers.
pub(crate) fn composition_count(total: usize, parts: usize) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    binomial((total + parts - 1) as u128, (parts - 1) as u128)
}

/// The `rank`-th composition of `total` into `parts` parts, ordered
/// lexicographically by leading coordinate.
pub(crate) fn unrank_composition(total: usize, parts: usize, mut rank: u128) -> Vec<usize> {
    debug_assert!(parts >= 1);
    debug_assert!(rank < composition_count(total, parts));
    let mut out = Vec::with_capacity(parts);
    let mut remaining = total;
    for tail in (1..parts).rev() {
        let mut head = 0usize;
        loop {
            let block = composition_count(remaining - head, tail);
            if rank < block {
                break;
            }
            rank -= block;
            head += 1;
        }
        out.push(head);
        remaining -= head;
    }
    out.push(remaining);
    out
}

/// Number of grid pmfs over `outcomes` outcomes at the given resolution
/// (points per simplex coordinate, >= 2).
pub(crate) fn simplex_grid_count(outcomes: usize, resolution: usize) -> u128 {
    composition_count(resolution - 1, outcomes)
}

/// The `rank`-th grid pmf: coordinates are multiples of 1/(resolution-1).
pub(crate) fn simplex_grid_point(outcomes: usize, resolution: usize, rank: u128) -> Vec<f64> {
    let denom = (resolution - 1) as f64;
    unrank_composition(resolution - 1, outcomes, rank)
        .into_iter()
        .map(|k| k as f64 / denom)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolution_two_enumerates_corners() {
        let count = simplex_grid_count(3, 2);
        assert_eq!(count, 3);
        let corners: Vec<Vec<f64>> = (0..count).map(|r| simplex_grid_point(3, 2, r)).collect();
        for corner in &corners {
            assert_eq!(corner.iter().filter(|&&c| c == 1.0).count(), 1);
            assert_eq!(corner.iter().filter(|&&c| c == 0.0).count(), 2);
        }
        // All three distinct.
        assert_ne!(corners[0], corners[1]);
        assert_ne!(corners[1], corners[2]);
    }

    #[test]
    fn counts_match_enumeration() {
        for outcomes in 1..=4 {
            for resolution in 2..=5 {
                let count = simplex_grid_count(outcomes, resolution) as usize;
                let mut seen = std::collections::HashSet::new();
                for r in 0..count {
                    let point = unrank_composition(resolution - 1, outcomes, r as u128);
                    assert_eq!(point.iter().sum::<usize>(), resolution - 1);
                    assert!(seen.insert(point));
                }
                assert_eq!(seen.len(), count);
            }
        }
    }

    #[test]
    fn grid_points_are_normalized() {
        for r in 0..simplex_grid_count(4, 5) {
            let p = simplex_grid_point(4, 5, r);
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}
