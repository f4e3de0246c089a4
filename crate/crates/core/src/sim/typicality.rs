//! Strong (letter-frequency) typicality over tuples of sequences: integer
//! count windows per joint cell, emptiness detection, and rejection sampling
//! of typical sequences from i.i.d. draws.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A pmf over a small tuple alphabet, row-major over `dims`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct TuplePmf {
    pub dims: Vec<usize>,
    pub mass: Vec<f64>,
}

impl TuplePmf {
    pub fn new(dims: Vec<usize>, mass: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), mass.len());
        Self { dims, mass }
    }
}

/// Precomputed integer count windows for one (pmf, n, eps): a tuple of
/// sequences is typical iff every joint-cell count lies in its window.
/// Cells with zero probability must not occur at all.
#[derive(Clone, Debug)]
pub(crate) struct TypicalityChecker {
    pub pmf: TuplePmf,
    n: usize,
    lo: Vec<u32>,
    hi: Vec<u32>,
    counts: Vec<u32>,
}

impl TypicalityChecker {
    pub fn new(pmf: TuplePmf, n: usize, eps: f64) -> Self {
        let nf = n as f64;
        let mut lo = Vec::with_capacity(pmf.mass.len());
        let mut hi = Vec::with_capacity(pmf.mass.len());
        for &p in &pmf.mass {
            if p <= 1e-15 {
                lo.push(0);
                hi.push(0);
            } else {
                let l = (nf * (p - eps) - 1e-9).ceil().max(0.0) as u32;
                let h = (nf * (p + eps) + 1e-9).floor().min(nf) as u32;
                lo.push(l);
                hi.push(h);
            }
        }
        let counts = vec![0u32; pmf.mass.len()];
        Self { pmf, n, lo, hi, counts }
    }

    /// Whether the typical set is nonempty: some integer type fits every
    /// window and sums to n.
    pub fn feasible(&self) -> bool {
        let lo_sum: u64 = self.lo.iter().map(|&x| u64::from(x)).sum();
        let hi_sum: u64 = self.hi.iter().map(|&x| u64::from(x)).sum();
        lo_sum <= self.n as u64 && self.n as u64 <= hi_sum
    }

    /// Conditional feasibility given fixed counts along the leading axis:
    /// for each leading symbol, the remaining cells' windows must be able to
    /// absorb exactly that symbol's count.
    pub fn feasible_given_leading(&self, leading_counts: &[u32]) -> bool {
        let tail: usize = self.pmf.dims[1..].iter().product();
        for (a, &cnt) in leading_counts.iter().enumerate() {
            let lo: u64 = self.lo[a * tail..(a + 1) * tail]
                .iter()
                .map(|&x| u64::from(x))
                .sum();
            let hi: u64 = self.hi[a * tail..(a + 1) * tail]
                .iter()
                .map(|&x| u64::from(x))
                .sum();
            if u64::from(cnt) < lo || u64::from(cnt) > hi {
                return false;
            }
        }
        true
    }

    /// Checks a tuple of aligned sequences (one per pmf axis).
    pub fn check(&mut self, seqs: &[&[usize]]) -> bool {
        debug_assert_eq!(seqs.len(), self.pmf.dims.len());
        debug_assert!(seqs.iter().all(|s| s.len() == self.n));
        self.counts.iter_mut().for_each(|c| *c = 0);
        for t in 0..self.n {
            let mut idx = 0;
            for (seq, &d) in seqs.iter().zip(&self.pmf.dims) {
                idx = idx * d + seq[t];
            }
            self.counts[idx] += 1;
        }
        self.counts
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&l, &h))| c >= l && c <= h)
    }
}

/// Inverse-CDF draw from a pmf slice.
#[inline]
pub(crate) fn sample_pmf(rng: &mut ChaCha8Rng, pmf: &[f64]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    pmf.len() - 1
}

/// Per-symbol counts of a sequence.
pub(crate) fn symbol_counts(seq: &[usize], alphabet: usize) -> Vec<u32> {
    let mut counts = vec![0u32; alphabet];
    for &s in seq {
        counts[s] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn uniform_binary_windows() {
        let pmf = TuplePmf::new(vec![2], vec![0.5, 0.5]);
        let mut checker = TypicalityChecker::new(pmf, 12, 0.05);
        assert!(checker.feasible());
        // |N/12 - 0.5| <= 0.05 forces exactly six of each.
        let balanced: Vec<usize> = (0..12).map(|t| t % 2).collect();
        assert!(checker.check(&[&balanced]));
        let skewed: Vec<usize> = (0..12).map(|t| usize::from(t < 5)).collect();
        assert!(!checker.check(&[&skewed]));
    }

    #[test]
    fn zero_probability_symbols_are_forbidden() {
        let pmf = TuplePmf::new(vec![2], vec![1.0, 0.0]);
        let mut checker = TypicalityChecker::new(pmf, 4, 0.1);
        assert!(checker.check(&[&[0, 0, 0, 0][..]]));
        assert!(!checker.check(&[&[0, 0, 1, 0][..]]));
    }

    #[test]
    fn infeasible_window_detected() {
        // n = 3 with a near-half pmf and tiny eps: no integer count fits.
        let pmf = TuplePmf::new(vec![2], vec![0.5, 0.5]);
        let checker = TypicalityChecker::new(pmf, 3, 0.01);
        assert!(!checker.feasible());
    }

    #[test]
    fn pair_typicality_uses_joint_counts() {
        // Perfectly correlated pair.
        let pmf = TuplePmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]);
        let mut checker = TypicalityChecker::new(pmf, 8, 0.05);
        let a = vec![0, 1, 0, 1, 0, 1, 0, 1];
        assert!(checker.check(&[&a, &a]));
        let b = vec![1, 1, 0, 1, 0, 1, 0, 1];
        assert!(!checker.check(&[&a, &b]));
    }

    #[test]
    fn conditional_feasibility_rejects_incompatible_leading_type() {
        // Joint (u,v) with v = u: leading counts must match windows row-wise.
        let pmf = TuplePmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]);
        let checker = TypicalityChecker::new(pmf, 8, 0.05);
        assert!(checker.feasible_given_leading(&[4, 4]));
        assert!(!checker.feasible_given_leading(&[8, 0]));
    }

    #[test]
    fn sample_pmf_is_supported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = sample_pmf(&mut rng, &[0.0, 0.3, 0.7]);
            assert!(s == 1 || s == 2);
        }
    }
}
