//! Achievable-region and outer-bound evaluation at a single joint
//! distribution, plus the special-case reductions (no secrecy, no state,
//! state-vs-output dominance) used as oracle-checkable corner cases.

use thiserror::Error;

use crate::channel::{build_joint, AuxiliaryPolicy, ChannelError, ChannelSpec, JOINT_VARS};
use crate::prob::{JointDistribution, ProbError};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("joint is missing variable `{0}`")]
    MissingVariable(String),
    #[error("reduction requires a degenerate state alphabet, got |S| = {0}")]
    StateNotDegenerate(usize),
    #[error("cross-check failed: {term} differs between routes by {delta:e}")]
    CrossCheck { term: String, delta: f64 },
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// A nonnegative (R1, R2, Re2) point in bits per channel use, with
/// Re2 <= R2 enforced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateTriple {
    pub r1: f64,
    pub r2: f64,
    pub re2: f64,
}

impl RateTriple {
    /// Panics if the invariants are violated; bound evaluators clamp before
    /// constructing, so a panic here means an internal bug.
    pub fn new(r1: f64, r2: f64, re2: f64) -> Self {
        assert!(r1 >= 0.0 && r2 >= 0.0 && re2 >= 0.0, "negative rate component");
        assert!(re2 <= r2, "equivocation rate exceeds message rate");
        Self { r1, r2, re2 }
    }

    pub const ORIGIN: RateTriple = RateTriple { r1: 0.0, r2: 0.0, re2: 0.0 };
}

fn require_vars(joint: &JointDistribution) -> Result<(), BoundsError> {
    for name in JOINT_VARS {
        if joint.axis_of(name).is_none() {
            return Err(BoundsError::MissingVariable(name.to_string()));
        }
    }
    Ok(())
}

/// The mutual-information terms shared by the two bounds.
struct InnerTerms {
    i_ux1_y1: f64,
    i_ux1_s: f64,
    i_v_y2: f64,
    i_v_ux1s: f64,
    i_v_ux1y1: f64,
}

fn inner_terms(joint: &JointDistribution) -> Result<InnerTerms, BoundsError> {
    Ok(InnerTerms {
        i_ux1_y1: joint.mutual_information(&["u", "x1"], &["y1"])?,
        i_ux1_s: joint.mutual_information(&["u", "x1"], &["s"])?,
        i_v_y2: joint.mutual_information(&["v"], &["y2"])?,
        i_v_ux1s: joint.mutual_information(&["v"], &["u", "x1", "s"])?,
        i_v_ux1y1: joint.mutual_information(&["v"], &["u", "x1", "y1"])?,
    })
}

/// Achievable rate triple at one joint: the two rate expressions and the
/// equivocation expression, clamped to the nonnegative orthant and to
/// re2 <= r2.
pub fn inner_bound_point(joint: &JointDistribution) -> Result<RateTriple, BoundsError> {
    require_vars(joint)?;
    let t = inner_terms(joint)?;
    let r1 = (t.i_ux1_y1 - t.i_ux1_s).max(0.0);
    let r2 = (t.i_v_y2 - t.i_v_ux1s).max(0.0);
    let re2 = (t.i_v_y2 - t.i_v_ux1s.max(t.i_v_ux1y1)).max(0.0).min(r2);
    Ok(RateTriple::new(r1, r2, re2))
}

/// Outer-bound triple at one joint, over the same factorization family.
pub fn outer_bound_point(joint: &JointDistribution) -> Result<RateTriple, BoundsError> {
    require_vars(joint)?;
    let i_ux1_y1 = joint.mutual_information(&["u", "x1"], &["y1"])?;
    let i_ux1_s = joint.mutual_information(&["u", "x1"], &["s"])?;
    let i_x2_y2 = joint.conditional_mi(&["x2"], &["y2"], &["x1", "s"])?;
    let i_x2_y1 = joint.conditional_mi(&["x2"], &["y1"], &["x1", "s"])?;
    let i_x2_y2_u = joint.conditional_mi(&["x2"], &["y2"], &["u", "x1", "s"])?;
    let i_x2_y1_u = joint.conditional_mi(&["x2"], &["y1"], &["u", "x1", "s"])?;
    let r1 = (i_ux1_y1 - i_ux1_s).max(0.0);
    let r2 = i_x2_y2.max(0.0);
    let re2 = (i_x2_y2 - i_x2_y1)
        .min(i_x2_y2_u - i_x2_y1_u)
        .max(0.0)
        .min(r2);
    Ok(RateTriple::new(r1, r2, re2))
}

/// Corollary reduction without the secrecy constraint: the (R1, R2) pair of
/// the inner bound, dropping the equivocation expression.
pub fn reduce_no_secrecy(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
) -> Result<(f64, f64), BoundsError> {
    let joint = build_joint(spec, policy)?;
    let point = inner_bound_point(&joint)?;
    Ok((point.r1, point.r2))
}

/// Corollary reduction for a stateless channel (|S| = 1): identical to the
/// inner bound, with every state term vanishing.
pub fn reduce_no_state(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
) -> Result<RateTriple, BoundsError> {
    if spec.ns != 1 {
        return Err(BoundsError::StateNotDegenerate(spec.ns));
    }
    let joint = build_joint(spec, policy)?;
    inner_bound_point(&joint)
}

/// Which of the two equivocation subtrahends dominates at this joint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CaseSplit {
    /// I(V; U,X1,S) > I(V; U,X1,Y1): the equivocation expression collapses
    /// into the no-secrecy rate bound.
    StateDominant,
    /// Otherwise (ties included): the region reduces to the (R1, R2) pair
    /// with the output-side subtrahend.
    OutputDominant { r1: f64, r2: f64 },
}

pub fn case_split(joint: &JointDistribution) -> Result<CaseSplit, BoundsError> {
    require_vars(joint)?;
    let t = inner_terms(joint)?;
    if t.i_v_ux1s > t.i_v_ux1y1 + 1e-12 {
        Ok(CaseSplit::StateDominant)
    } else {
        let r1 = (t.i_ux1_y1 - t.i_ux1_s).max(0.0);
        let r2 = (t.i_v_y2 - t.i_v_ux1y1).max(0.0);
        Ok(CaseSplit::OutputDominant { r1, r2 })
    }
}

/// Internal cross-check mode: recomputes every mutual-information term of
/// both bounds through the direct KL route and demands agreement with the
/// entropy-combination route within 1e-12.
pub fn cross_check(joint: &JointDistribution) -> Result<(), BoundsError> {
    require_vars(joint)?;
    let pairs: [(&str, &[&str], &[&str], &[&str]); 7] = [
        ("I(U,X1;Y1)", &["u", "x1"], &["y1"], &[]),
        ("I(U,X1;S)", &["u", "x1"], &["s"], &[]),
        ("I(V;Y2)", &["v"], &["y2"], &[]),
        ("I(V;U,X1,S)", &["v"], &["u", "x1", "s"], &[]),
        ("I(V;U,X1,Y1)", &["v"], &["u", "x1", "y1"], &[]),
        ("I(X2;Y2|X1,S)", &["x2"], &["y2"], &["x1", "s"]),
        ("I(X2;Y1|X1,S)", &["x2"], &["y1"], &["x1", "s"]),
    ];
    for (term, a, b, c) in pairs {
        let via_entropy = joint.conditional_mi(a, b, c)?;
        let via_kl = joint.conditional_mi_kl(a, b, c)?;
        let delta = (via_entropy - via_kl).abs();
        if delta > 1e-12 {
            return Err(BoundsError::CrossCheck { term: term.to_string(), delta });
        }
    }
    for c in [&["u", "x1", "s"][..]] {
        for (term, b) in [("I(X2;Y2|U,X1,S)", "y2"), ("I(X2;Y1|U,X1,S)", "y1")] {
            let via_entropy = joint.conditional_mi(&["x2"], &[b], c)?;
            let via_kl = joint.conditional_mi_kl(&["x2"], &[b], c)?;
            let delta = (via_entropy - via_kl).abs();
            if delta > 1e-12 {
                return Err(BoundsError::CrossCheck { term: term.to_string(), delta });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Batch evaluation
// ---------------------------------------------------------------------------

/// Identifiers of the marginal buffers used by [`BatchEvaluator`]. The first
/// four are filled directly from the mass sweep; the rest fold down from
/// them. Axis order is (s, u, v, x1, x2, y1, y2).
mod marg {
    pub const SUX1X2Y1: usize = 0;
    pub const SUX1X2Y2: usize = 1;
    pub const SUVX1Y1: usize = 2;
    pub const VY2: usize = 3;
    pub const SUX1X2: usize = 4;
    pub const SUX1Y1: usize = 5;
    pub const SUX1: usize = 6;
    pub const SX1X2Y1: usize = 7;
    pub const SX1Y1: usize = 8;
    pub const SX1X2: usize = 9;
    pub const SX1: usize = 10;
    pub const UX1Y1: usize = 11;
    pub const UX1: usize = 12;
    pub const Y1: usize = 13;
    pub const S: usize = 14;
    pub const SUX1Y2: usize = 15;
    pub const SX1X2Y2: usize = 16;
    pub const SX1Y2: usize = 17;
    pub const SUVX1: usize = 18;
    pub const UVX1Y1: usize = 19;
    pub const V: usize = 20;
    pub const Y2: usize = 21;
    pub const COUNT: usize = 22;

    /// Axis sets, sorted ascending, indexed by the constants above.
    pub const AXES: [&[usize]; COUNT] = [
        &[0, 1, 3, 4, 5],
        &[0, 1, 3, 4, 6],
        &[0, 1, 2, 3, 5],
        &[2, 6],
        &[0, 1, 3, 4],
        &[0, 1, 3, 5],
        &[0, 1, 3],
        &[0, 3, 4, 5],
        &[0, 3, 5],
        &[0, 3, 4],
        &[0, 3],
        &[1, 3, 5],
        &[1, 3],
        &[5],
        &[0],
        &[0, 1, 3, 6],
        &[0, 3, 4, 6],
        &[0, 3, 6],
        &[0, 1, 2, 3],
        &[1, 2, 3, 5],
        &[2],
        &[6],
    ];

    /// Fold schedule: (source buffer, destination buffer). Order matters:
    /// sources must be filled before their dependents.
    pub const FOLDS: [(usize, usize); 18] = [
        (SUX1X2Y1, SUX1X2),
        (SUX1X2Y1, SUX1Y1),
        (SUX1X2, SUX1),
        (SUX1X2Y1, SX1X2Y1),
        (SX1X2Y1, SX1Y1),
        (SUX1X2, SX1X2),
        (SX1X2, SX1),
        (SUX1Y1, UX1Y1),
        (SUX1, UX1),
        (SX1Y1, Y1),
        (SX1, S),
        (SUX1X2Y2, SUX1Y2),
        (SUX1X2Y2, SX1X2Y2),
        (SUX1Y2, SX1Y2),
        (SUVX1Y1, SUVX1),
        (SUVX1Y1, UVX1Y1),
        (VY2, V),
        (VY2, Y2),
    ];
}

/// Repeated bound evaluation over joints sharing one canonical
/// (s,u,v,x1,x2,y1,y2) shape. A single sweep over the mass tensor fills four
/// wide marginals through precomputed index maps; every other marginal folds
/// down from those, so no per-call allocation happens. Produces the same
/// triples as [`inner_bound_point`] and [`outer_bound_point`] up to float
/// re-association.
pub struct BatchEvaluator {
    dims: [usize; 7],
    cells: usize,
    sweep_maps: [Vec<u32>; 4],
    fold_maps: Vec<Vec<u32>>,
    bufs: Vec<Vec<f64>>,
}

impl BatchEvaluator {
    pub fn new(dims: [usize; 7]) -> Self {
        let cells: usize = dims.iter().product();
        let subset_index_map = |src_axes: &[usize], dst_axes: &[usize]| -> Vec<u32> {
            // Destination strides over its own (ascending) axis order.
            let dst_dims: Vec<usize> = dst_axes.iter().map(|&a| dims[a]).collect();
            let mut dst_strides = vec![1usize; dst_dims.len()];
            for i in (0..dst_dims.len().saturating_sub(1)).rev() {
                dst_strides[i] = dst_strides[i + 1] * dst_dims[i + 1];
            }
            let src_cells: usize = src_axes.iter().map(|&a| dims[a]).product();
            let mut table = vec![0u32; src_cells];
            let mut idx = vec![0usize; src_axes.len()];
            for (lin, slot) in table.iter_mut().enumerate() {
                let _ = lin;
                let mut out = 0usize;
                for (k, &axis) in src_axes.iter().enumerate() {
                    if let Some(pos) = dst_axes.iter().position(|&d| d == axis) {
                        out += idx[k] * dst_strides[pos];
                    }
                }
                *slot = out as u32;
                for k in (0..idx.len()).rev() {
                    idx[k] += 1;
                    if idx[k] < dims[src_axes[k]] {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            table
        };
        let all: Vec<usize> = (0..7).collect();
        let sweep_maps = [
            subset_index_map(&all, marg::AXES[marg::SUX1X2Y1]),
            subset_index_map(&all, marg::AXES[marg::SUX1X2Y2]),
            subset_index_map(&all, marg::AXES[marg::SUVX1Y1]),
            subset_index_map(&all, marg::AXES[marg::VY2]),
        ];
        let fold_maps = marg::FOLDS
            .iter()
            .map(|&(src, dst)| subset_index_map(marg::AXES[src], marg::AXES[dst]))
            .collect();
        let bufs = marg::AXES
            .iter()
            .map(|axes| vec![0.0f64; axes.iter().map(|&a| dims[a]).product()])
            .collect();
        Self { dims, cells, sweep_maps, fold_maps, bufs }
    }

    pub fn dims(&self) -> [usize; 7] {
        self.dims
    }

    /// Evaluates both bounds on a mass tensor laid out in canonical order.
    pub fn eval(&mut self, mass: &[f64]) -> Result<(RateTriple, RateTriple), BoundsError> {
        assert_eq!(mass.len(), self.cells, "mass tensor shape mismatch");
        for buf in self.bufs.iter_mut() {
            buf.iter_mut().for_each(|v| *v = 0.0);
        }
        {
            let [b0, b1, b2, b3, rest @ ..] = self.bufs.as_mut_slice() else {
                unreachable!()
            };
            let _ = rest;
            for (i, &p) in mass.iter().enumerate() {
                b0[self.sweep_maps[0][i] as usize] += p;
                b1[self.sweep_maps[1][i] as usize] += p;
                b2[self.sweep_maps[2][i] as usize] += p;
                b3[self.sweep_maps[3][i] as usize] += p;
            }
        }
        for (&(src, dst), table) in marg::FOLDS.iter().zip(&self.fold_maps) {
            debug_assert!(src < dst);
            let (lo, hi) = self.bufs.split_at_mut(dst);
            let dst_buf = &mut hi[0];
            let src_buf = &lo[src];
            for (i, &p) in src_buf.iter().enumerate() {
                dst_buf[table[i] as usize] += p;
            }
        }
        let mut h = [0.0f64; marg::COUNT];
        for (hi, buf) in h.iter_mut().zip(&self.bufs) {
            let mut acc = 0.0;
            for &p in buf {
                if p > 1e-15 {
                    acc -= p * p.log2();
                }
            }
            *hi = acc.max(0.0);
        }
        let mi = |a: f64, b: f64, ab: f64| crate::prob::clamp_information(a + b - ab);
        let cmi = |ac: f64, bc: f64, abc: f64, c: f64| {
            crate::prob::clamp_information(ac + bc - abc - c)
        };
        use marg::*;
        let i_ux1_y1 = mi(h[UX1], h[Y1], h[UX1Y1])?;
        let i_ux1_s = mi(h[UX1], h[S], h[SUX1])?;
        let i_v_y2 = mi(h[V], h[Y2], h[VY2])?;
        let i_v_ux1s = mi(h[V], h[SUX1], h[SUVX1])?;
        let i_v_ux1y1 = mi(h[V], h[UX1Y1], h[UVX1Y1])?;
        let r1 = (i_ux1_y1 - i_ux1_s).max(0.0);
        let r2 = (i_v_y2 - i_v_ux1s).max(0.0);
        let re2 = (i_v_y2 - i_v_ux1s.max(i_v_ux1y1)).max(0.0).min(r2);
        let inner = RateTriple::new(r1, r2, re2);

        let i_x2_y2 = cmi(h[SX1X2], h[SX1Y2], h[SX1X2Y2], h[SX1])?;
        let i_x2_y1 = cmi(h[SX1X2], h[SX1Y1], h[SX1X2Y1], h[SX1])?;
        let i_x2_y2_u = cmi(h[SUX1X2], h[SUX1Y2], h[SUX1X2Y2], h[SUX1])?;
        let i_x2_y1_u = cmi(h[SUX1X2], h[SUX1Y1], h[SUX1X2Y1], h[SUX1])?;
        let o_r2 = i_x2_y2.max(0.0);
        let o_re2 = (i_x2_y2 - i_x2_y1)
            .min(i_x2_y2_u - i_x2_y1_u)
            .max(0.0)
            .min(o_r2);
        let outer = RateTriple::new(r1, o_r2, o_re2);
        Ok((inner, outer))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_joint, AuxiliaryPolicy, ChannelSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn binary_entropy(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    /// Orthogonal noiseless binary channels: y1 = x1, y2 = x2, |S| = 1.
    fn noiseless_spec() -> ChannelSpec {
        let mut kernel = vec![0.0; 16];
        for x1 in 0..2 {
            for x2 in 0..2 {
                kernel[((x1 * 2 + x2) * 2 + x1) * 2 + x2] = 1.0;
            }
        }
        ChannelSpec::new(2, 2, 1, 2, 2, vec![1.0], kernel).unwrap()
    }

    /// Policy with U constant, V = X2 uniform, X1 uniform independent.
    fn corner_policy() -> AuxiliaryPolicy {
        let mut cond = vec![0.0; 8];
        for x1 in 0..2 {
            for v in 0..2 {
                cond[((x1 * 2) + v) * 2 + v] = 0.5;
            }
        }
        AuxiliaryPolicy::new(1, 2, 1, 2, 2, vec![0.5, 0.5], cond).unwrap()
    }

    /// Wiretap reduction: X1, U, S degenerate; Y2 = X2 noiseless; Y1 a
    /// flip-0.25 corruption of X2; V = X2 uniform.
    fn wiretap_spec(flip: f64) -> ChannelSpec {
        let mut kernel = vec![0.0; 1 * 1 * 2 * 2 * 2];
        for x2 in 0..2 {
            for y1 in 0..2 {
                let p = if y1 == x2 { 1.0 - flip } else { flip };
                kernel[(x2 * 2 + y1) * 2 + x2] = p;
            }
        }
        ChannelSpec::new(1, 2, 1, 2, 2, vec![1.0], kernel).unwrap()
    }

    fn wiretap_policy() -> AuxiliaryPolicy {
        // (u, v, x2) with u const: v = x2 uniform.
        let mut cond = vec![0.0; 4];
        cond[0] = 0.5; // v=0, x2=0
        cond[3] = 0.5; // v=1, x2=1
        AuxiliaryPolicy::new(1, 2, 1, 1, 2, vec![1.0], cond).unwrap()
    }

    #[test]
    fn degenerate_state_kills_state_term() {
        let joint = build_joint(&noiseless_spec(), &corner_policy()).unwrap();
        let i_ux1_s = joint.mutual_information(&["u", "x1"], &["s"]).unwrap();
        assert!(i_ux1_s < 1e-12);
        let point = inner_bound_point(&joint).unwrap();
        let i_ux1_y1 = joint.mutual_information(&["u", "x1"], &["y1"]).unwrap();
        assert!((point.r1 - i_ux1_y1).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_noiseless_inner_corner_is_one_one_one() {
        let joint = build_joint(&noiseless_spec(), &corner_policy()).unwrap();
        let p = inner_bound_point(&joint).unwrap();
        assert!((p.r1 - 1.0).abs() < 1e-9);
        assert!((p.r2 - 1.0).abs() < 1e-9);
        assert!((p.re2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_noiseless_outer_corner_is_one_one_one() {
        let joint = build_joint(&noiseless_spec(), &corner_policy()).unwrap();
        let p = outer_bound_point(&joint).unwrap();
        assert!((p.r1 - 1.0).abs() < 1e-9);
        assert!((p.r2 - 1.0).abs() < 1e-9);
        assert!((p.re2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wiretap_equivocation_matches_binary_entropy() {
        let joint = build_joint(&wiretap_spec(0.25), &wiretap_policy()).unwrap();
        let h = binary_entropy(0.25);
        let inner = inner_bound_point(&joint).unwrap();
        assert!((inner.re2 - h).abs() < 1e-6, "inner re2 {} vs h(0.25) {h}", inner.re2);
        assert!((inner.r2 - 1.0).abs() < 1e-9);
        let outer = outer_bound_point(&joint).unwrap();
        assert!((outer.re2 - h).abs() < 1e-6, "outer re2 {} vs h(0.25) {h}", outer.re2);
    }

    #[test]
    fn noise_only_y2_gives_zero_r2_and_re2() {
        // Y2 independent of everything: uniform regardless of inputs.
        let mut kernel = vec![0.0; 16];
        for x1 in 0..2 {
            for x2 in 0..2 {
                for y2 in 0..2 {
                    kernel[((x1 * 2 + x2) * 2 + x1) * 2 + y2] = 0.5;
                }
            }
        }
        let spec = ChannelSpec::new(2, 2, 1, 2, 2, vec![1.0], kernel).unwrap();
        let joint = build_joint(&spec, &corner_policy()).unwrap();
        let p = outer_bound_point(&joint).unwrap();
        assert_eq!(p.r2, 0.0);
        assert_eq!(p.re2, 0.0);
    }

    #[test]
    fn missing_variable_is_domain_error() {
        let joint = build_joint(&noiseless_spec(), &corner_policy()).unwrap();
        let partial = joint.marginalize(&["s", "u", "v", "x1", "x2", "y1"]).unwrap();
        assert!(matches!(
            inner_bound_point(&partial),
            Err(BoundsError::MissingVariable(name)) if name == "y2"
        ));
    }

    #[test]
    fn no_secrecy_reduction_equals_first_two_components() {
        let spec = noiseless_spec();
        let policy = corner_policy();
        let joint = build_joint(&spec, &policy).unwrap();
        let full = inner_bound_point(&joint).unwrap();
        let (r1, r2) = reduce_no_secrecy(&spec, &policy).unwrap();
        assert_eq!(r1, full.r1);
        assert_eq!(r2, full.r2);
    }

    #[test]
    fn no_secrecy_noiseless_y2_attains_log_alphabet() {
        let (_, r2) = reduce_no_secrecy(&noiseless_spec(), &corner_policy()).unwrap();
        assert!((r2 - 1.0).abs() < 1e-9); // log2 |X2| = 1
    }

    #[test]
    fn no_state_reduction_requires_degenerate_state() {
        let spec = ChannelSpec::new(1, 1, 2, 1, 1, vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        let policy = AuxiliaryPolicy::new(1, 1, 2, 1, 1, vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            reduce_no_state(&spec, &policy),
            Err(BoundsError::StateNotDegenerate(2))
        ));
    }

    #[test]
    fn no_state_wiretap_recovers_binary_entropy() {
        let p = reduce_no_state(&wiretap_spec(0.25), &wiretap_policy()).unwrap();
        assert!((p.re2 - binary_entropy(0.25)).abs() < 1e-6);
    }

    #[test]
    fn no_state_independent_v_zeroes_r2() {
        // V independent of all channel variables: x2 uniform regardless of v.
        let mut cond = vec![0.0; 8];
        for x1 in 0..2 {
            for v in 0..2 {
                for x2 in 0..2 {
                    cond[((x1 * 2) + v) * 2 + x2] = 0.25;
                }
            }
        }
        let policy = AuxiliaryPolicy::new(1, 2, 1, 2, 2, vec![0.5, 0.5], cond).unwrap();
        let p = reduce_no_state(&noiseless_spec(), &policy).unwrap();
        assert_eq!(p.r2, 0.0);
        assert_eq!(p.re2, 0.0);
        assert!((p.r1 - 1.0).abs() < 1e-9);
    }

    /// Channel whose y1 is pure noise and whose state couples to v through
    /// the policy: the state side dominates.
    #[test]
    fn state_coupled_v_with_noisy_y1_is_state_dominant() {
        // |S| = 2 uniform; y1 uniform noise; y2 = x2.
        let mut kernel = vec![0.0; 2 * 1 * 2 * 2 * 2];
        for s in 0..2 {
            for x2 in 0..2 {
                for y1 in 0..2 {
                    kernel[((s * 2 + x2) * 2 + y1) * 2 + x2] = 0.5;
                }
            }
        }
        let spec = ChannelSpec::new(1, 2, 2, 2, 2, vec![0.5, 0.5], kernel).unwrap();
        // v = s deterministically, x2 = v.
        let mut cond = vec![0.0; 2 * 1 * 1 * 2 * 2];
        for s in 0..2 {
            cond[(s * 2 + s) * 2 + s] = 1.0;
        }
        let policy = AuxiliaryPolicy::new(1, 2, 2, 1, 2, vec![1.0], cond).unwrap();
        let joint = build_joint(&spec, &policy).unwrap();
        assert_eq!(case_split(&joint).unwrap(), CaseSplit::StateDominant);
    }

    #[test]
    fn stateless_correlated_y1_is_output_dominant_and_matches_eq9() {
        let joint = build_joint(&wiretap_spec(0.25), &wiretap_policy()).unwrap();
        match case_split(&joint).unwrap() {
            CaseSplit::OutputDominant { r2, .. } => {
                // In this case the equivocation expression coincides with the
                // output-side pair bound.
                let inner = inner_bound_point(&joint).unwrap();
                assert!((inner.re2 - r2).abs() < 1e-12);
            }
            CaseSplit::StateDominant => panic!("expected output-dominant case"),
        }
    }

    #[test]
    fn exact_tie_classifies_as_output_dominant() {
        // Degenerate everything: both subtrahends are exactly zero.
        let spec = ChannelSpec::new(1, 1, 1, 1, 1, vec![1.0], vec![1.0]).unwrap();
        let policy = AuxiliaryPolicy::new(1, 1, 1, 1, 1, vec![1.0], vec![1.0]).unwrap();
        let joint = build_joint(&spec, &policy).unwrap();
        assert!(matches!(
            case_split(&joint).unwrap(),
            CaseSplit::OutputDominant { .. }
        ));
    }

    #[test]
    fn eq9_never_exceeds_eq8_before_clamp() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let spec = {
                let mut kernel = Vec::new();
                for _ in 0..2 * 2 * 2 {
                    let mut row: Vec<f64> =
                        (0..4).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= s);
                    kernel.extend(row);
                }
                ChannelSpec::new(2, 2, 2, 2, 2, vec![0.5, 0.5], kernel).unwrap()
            };
            let policy = {
                let mut cond = Vec::new();
                for _ in 0..2 * 2 {
                    let mut row: Vec<f64> =
                        (0..8).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= s);
                    cond.extend(row);
                }
                AuxiliaryPolicy::new(2, 2, 2, 2, 2, vec![0.5, 0.5], cond).unwrap()
            };
            let joint = build_joint(&spec, &policy).unwrap();
            let p = inner_bound_point(&joint).unwrap();
            assert!(p.re2 <= p.r2);
            assert!(p.r1 >= 0.0 && p.r2 >= 0.0 && p.re2 >= 0.0);
            cross_check(&joint).unwrap();
        }
    }

    #[test]
    #[should_panic(expected = "equivocation rate exceeds message rate")]
    fn rate_triple_rejects_re2_above_r2() {
        let _ = RateTriple::new(0.5, 0.2, 0.3);
    }

    #[test]
    fn batch_evaluator_matches_generic_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut simplex = |k: usize| {
            let mut row: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
            row
        };
        for _ in 0..20 {
            let (ns, nu, nv) = (2, 2, 3);
            let state_pmf = simplex(ns);
            let mut kernel = Vec::new();
            for _ in 0..ns * 2 * 2 {
                kernel.extend(simplex(4));
            }
            let spec = ChannelSpec::new(2, 2, ns, 2, 2, state_pmf, kernel).unwrap();
            let mut cond = Vec::new();
            for _ in 0..ns * 2 {
                cond.extend(simplex(nu * nv * 2));
            }
            let px1 = simplex(2);
            let policy = AuxiliaryPolicy::new(nu, nv, ns, 2, 2, px1, cond).unwrap();
            let joint = build_joint(&spec, &policy).unwrap();
            let inner = inner_bound_point(&joint).unwrap();
            let outer = outer_bound_point(&joint).unwrap();
            let mut batch = BatchEvaluator::new([ns, nu, nv, 2, 2, 2, 2]);
            let (fast_inner, fast_outer) = batch.eval(joint.mass()).unwrap();
            for (a, b) in [
                (inner.r1, fast_inner.r1),
                (inner.r2, fast_inner.r2),
                (inner.re2, fast_inner.re2),
                (outer.r1, fast_outer.r1),
                (outer.r2, fast_outer.r2),
                (outer.re2, fast_outer.re2),
            ] {
                assert!((a - b).abs() < 1e-12, "batch path diverged: {a} vs {b}");
            }
        }
    }
}
