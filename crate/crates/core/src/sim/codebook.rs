//! Random-binning codebook for the cognitive encoder: a pool of
//! conditionally typical v-sequences per u-codeword, organized as
//! message-carrying bins, state-fitting subbins, and within-subbin positions
//! partitioned by the near-equal map g into fiber classes. The cognitive
//! message is (bin, fiber); the encoder's remaining freedom (subbin and
//! within-fiber position) adapts to the state and confuses the eavesdropper.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::typicality::{sample_pmf, symbol_counts, TuplePmf, TypicalityChecker};
use super::{CodebookParams, SimError};
use crate::channel::{build_joint, AuxiliaryPolicy, ChannelSpec};

/// Rejection-sampling attempt budget per sequence.
const MAX_DRAW_ATTEMPTS: usize = 200_000;

/// Generating conditionals derived from the target joint, plus the joint
/// marginals the typicality tests run against and the information rates that
/// size the codebook.
#[derive(Clone, Debug)]
pub struct GeneratingPmfs {
    pub ns: usize,
    pub nu: usize,
    pub nv: usize,
    pub nx1: usize,
    pub nx2: usize,
    pub ny1: usize,
    pub ny2: usize,
    pub state_pmf: Vec<f64>,
    pub pu: Vec<f64>,
    /// P(v | u), row-major (u, v).
    pub pv_given_u: Vec<f64>,
    /// P(x1 | u), row-major (u, x1).
    pub px1_given_u: Vec<f64>,
    /// P(x2 | u, v, s), row-major (s, u, v, x2).
    pub px2_given_uvs: Vec<f64>,
    /// Marginal kernel to receiver 1, row-major (s, x1, x2, y1).
    pub ky1: Vec<f64>,
    pub(crate) p_uv: TuplePmf,
    pub(crate) p_ux1: TuplePmf,
    pub(crate) p_suv: TuplePmf,
    pub(crate) p_x1y1: TuplePmf,
    pub(crate) p_uvy2: TuplePmf,
    pub(crate) p_x1x2y1: TuplePmf,
    pub i_v_y1ux1: f64,
    pub i_v_sux1: f64,
    pub i_v_y2: f64,
}

impl GeneratingPmfs {
    pub fn from_policy(spec: &ChannelSpec, policy: &AuxiliaryPolicy) -> Result<Self, SimError> {
        let joint = build_joint(spec, policy)?;
        let tuple = |names: &[&str]| -> Result<TuplePmf, SimError> {
            let m = joint.marginalize(names)?;
            let dims = m.variables().iter().map(|v| v.cardinality).collect();
            Ok(TuplePmf::new(dims, m.mass().to_vec()))
        };
        let p_u = tuple(&["u"])?;
        let p_uv = tuple(&["u", "v"])?;
        let p_ux1 = tuple(&["u", "x1"])?;
        let p_suv = tuple(&["s", "u", "v"])?;
        let p_suvx2 = tuple(&["s", "u", "v", "x2"])?;
        let (ns, nu, nv) = (spec.ns, policy.nu, policy.nv);
        let (nx1, nx2) = (spec.nx1, spec.nx2);
        let conditional = |num: &TuplePmf, den: &[f64], den_stride: usize| -> Vec<f64> {
            num.mass
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    let d = den[i / den_stride];
                    if d > 1e-15 {
                        p / d
                    } else {
                        1.0 / den_stride as f64
                    }
                })
                .collect()
        };
        let pv_given_u = conditional(&p_uv, &p_u.mass, nv);
        let px1_given_u = conditional(&p_ux1, &p_u.mass, nx1);
        // P(x2 | s,u,v): denominator runs over (s,u,v).
        let px2_given_uvs = conditional(&p_suvx2, &p_suv.mass, nx2);
        let mut ky1 = vec![0.0; ns * nx1 * nx2 * spec.ny1];
        for s in 0..ns {
            for x1 in 0..nx1 {
                for x2 in 0..nx2 {
                    for y1 in 0..spec.ny1 {
                        let mut acc = 0.0;
                        for y2 in 0..spec.ny2 {
                            acc += spec.kernel_at(s, x1, x2, y1, y2);
                        }
                        ky1[((s * nx1 + x1) * nx2 + x2) * spec.ny1 + y1] = acc;
                    }
                }
            }
        }
        Ok(Self {
            ns,
            nu,
            nv,
            nx1,
            nx2,
            ny1: spec.ny1,
            ny2: spec.ny2,
            state_pmf: spec.state_pmf.clone(),
            pu: p_u.mass.clone(),
            pv_given_u,
            px1_given_u,
            px2_given_uvs,
            ky1,
            p_uv,
            p_ux1,
            p_suv,
            p_x1y1: tuple(&["x1", "y1"])?,
            p_uvy2: tuple(&["u", "v", "y2"])?,
            p_x1x2y1: tuple(&["x1", "x2", "y1"])?,
            i_v_y1ux1: joint.mutual_information(&["v"], &["u", "x1", "y1"])?,
            i_v_sux1: joint.mutual_information(&["v"], &["s", "u", "x1"])?,
            i_v_y2: joint.mutual_information(&["v"], &["y2"])?,
        })
    }
}

/// Near-equal partition of `b` positions into `c` fibers: sizes floor(b/c)
/// or ceil(b/c), so no fiber is more than twice any other.
pub fn partition_g(b: usize, c: usize) -> Result<Vec<usize>, SimError> {
    if c == 0 || b == 0 || c > b {
        return Err(SimError::PartitionTooFine { b, c });
    }
    let base = b / c;
    let rem = b % c;
    Ok((0..c).map(|i| base + usize::from(i < rem)).collect())
}

/// Rounded bin/subbin/fiber sizing derived from the generating joint and the
/// requested rates. All counts are round-to-nearest of 2^(n * rate), minimum
/// one; the pool size is their exact product.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CodebookStructure {
    pub m1: usize,
    pub num_bins: usize,
    pub fiber_count: usize,
    pub subbins_per_bin: usize,
    pub subbin_size: usize,
    pub v_per_u: usize,
    pub message_count: usize,
    pub fiber_sizes: Vec<usize>,
    /// Fiber class of each within-subbin position.
    pub fiber_of_position: Vec<usize>,
}

impl CodebookStructure {
    pub fn derive(pmfs: &GeneratingPmfs, params: &CodebookParams) -> Result<Self, SimError> {
        let n = params.n as f64;
        let pow = |rate: f64| -> Result<usize, SimError> {
            let x = (n * rate).exp2();
            if !x.is_finite() || x > 1e12 {
                return Err(SimError::CodewordCap {
                    total: u64::MAX,
                    cap: params.codeword_cap,
                });
            }
            Ok((x.round() as usize).max(1))
        };
        let subbin_size = pow(pmfs.i_v_y1ux1)?;
        let mx = pmfs.i_v_y1ux1.max(pmfs.i_v_sux1);
        let subbins_per_bin = pow(mx - pmfs.i_v_y1ux1)?;
        let m2_req = pow(params.r2)?;
        // Secret budget: the equivocation expression, clamped into [0, r2].
        // Bins carry the secret part of the message; any overflow rides on
        // the g-fibers and is the part the eavesdropper may learn.
        let secret = (pmfs.i_v_y2 - mx).clamp(0.0, params.r2).max(0.0);
        let bins0 = pow(secret)?;
        let fiber_count = ((m2_req as f64 / bins0 as f64).round() as usize)
            .clamp(1, subbin_size);
        let num_bins = ((m2_req as f64 / fiber_count as f64).round() as usize).max(1);
        let message_count = num_bins * fiber_count;
        let v_per_u = num_bins * subbins_per_bin * subbin_size;
        let m1 = pow(params.r1)?;
        let total = (m1 as u64).saturating_mul(v_per_u as u64);
        if total > params.codeword_cap {
            return Err(SimError::CodewordCap { total, cap: params.codeword_cap });
        }
        let fiber_sizes = partition_g(subbin_size, fiber_count)?;
        let mut fiber_of_position = Vec::with_capacity(subbin_size);
        for (c, &size) in fiber_sizes.iter().enumerate() {
            fiber_of_position.extend(std::iter::repeat_n(c, size));
        }
        let structure = Self {
            m1,
            num_bins,
            fiber_count,
            subbins_per_bin,
            subbin_size,
            v_per_u,
            message_count,
            fiber_sizes,
            fiber_of_position,
        };
        structure.assert_consistent();
        Ok(structure)
    }

    /// Structural counting identity plus the near-equal-fiber inequality,
    /// checked at generation time.
    pub fn assert_consistent(&self) {
        assert_eq!(
            self.v_per_u,
            self.num_bins * self.subbins_per_bin * self.subbin_size,
            "bin/subbin counting identity violated"
        );
        assert_eq!(self.message_count, self.num_bins * self.fiber_count);
        assert_eq!(self.fiber_sizes.iter().sum::<usize>(), self.subbin_size);
        assert_eq!(self.fiber_of_position.len(), self.subbin_size);
        let max = self.fiber_sizes.iter().max().unwrap();
        let min = self.fiber_sizes.iter().min().unwrap();
        assert!(max <= &(2 * min), "fiber sizes {max} and {min} violate the factor-2 rule");
    }
}

/// The generated codebook: u-codewords with their x1-codewords, and for each
/// u the flat pool of v-sequences indexed k = (bin, subbin, position).
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub structure: CodebookStructure,
    pub u_seqs: Vec<Vec<usize>>,
    pub x1_seqs: Vec<Vec<usize>>,
    /// v_seqs[i * v_per_u + k] is sequence k of u-codeword i.
    pub v_seqs: Vec<Vec<usize>>,
}

impl Codebook {
    #[inline]
    pub fn flat_k(&self, bin: usize, subbin: usize, position: usize) -> usize {
        (bin * self.structure.subbins_per_bin + subbin) * self.structure.subbin_size + position
    }

    /// Splits a flat v-index into (bin, subbin, position).
    #[inline]
    pub fn split_k(&self, k: usize) -> (usize, usize, usize) {
        let position = k % self.structure.subbin_size;
        let rest = k / self.structure.subbin_size;
        let subbin = rest % self.structure.subbins_per_bin;
        (rest / self.structure.subbins_per_bin, subbin, position)
    }

    #[inline]
    pub fn v_seq(&self, i: usize, k: usize) -> &[usize] {
        &self.v_seqs[i * self.structure.v_per_u + k]
    }
}

fn draw_typical(
    rng: &mut ChaCha8Rng,
    n: usize,
    per_letter: impl Fn(&mut ChaCha8Rng, usize) -> usize,
    checker: &mut TypicalityChecker,
    given: Option<&[usize]>,
    what: &str,
) -> Result<Vec<usize>, SimError> {
    let mut seq = vec![0usize; n];
    for _ in 0..MAX_DRAW_ATTEMPTS {
        for (t, slot) in seq.iter_mut().enumerate() {
            *slot = per_letter(rng, t);
        }
        let ok = match given {
            Some(g) => checker.check(&[g, &seq]),
            None => checker.check(&[&seq]),
        };
        if ok {
            return Ok(seq);
        }
    }
    Err(SimError::GenerationFailure(format!(
        "no typical {what} sequence found in {MAX_DRAW_ATTEMPTS} attempts"
    )))
}

/// Generates the codebook: u-codewords by rejection sampling from i.i.d.
/// P_U draws into the typical set, per-u x1 and v sequences conditionally
/// typical, the pool organized per the derived structure. Deterministic
/// given the seed. Empty typical sets fail loudly.
pub fn generate_codebook(
    pmfs: &GeneratingPmfs,
    params: &CodebookParams,
) -> Result<Codebook, SimError> {
    let structure = CodebookStructure::derive(pmfs, params)?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(0);

    let mut u_checker =
        TypicalityChecker::new(TuplePmf::new(vec![pmfs.nu], pmfs.pu.clone()), n, params.eps);
    if !u_checker.feasible() {
        return Err(SimError::GenerationFailure(format!(
            "typical set of P_U is empty at n = {n}, eps = {}",
            params.eps
        )));
    }
    let mut uv_checker = TypicalityChecker::new(pmfs.p_uv.clone(), n, params.eps);
    let mut ux1_checker = TypicalityChecker::new(pmfs.p_ux1.clone(), n, params.eps);

    let mut u_seqs = Vec::with_capacity(structure.m1);
    let mut x1_seqs = Vec::with_capacity(structure.m1);
    let mut v_seqs = Vec::with_capacity(structure.m1 * structure.v_per_u);
    for _ in 0..structure.m1 {
        let u = draw_typical(
            &mut rng,
            n,
            |rng, _| sample_pmf(rng, &pmfs.pu),
            &mut u_checker,
            None,
            "u",
        )?;
        let u_counts = symbol_counts(&u, pmfs.nu);
        if !ux1_checker.feasible_given_leading(&u_counts) {
            return Err(SimError::GenerationFailure(
                "conditional typical set of P(x1|u) is empty for a drawn u".into(),
            ));
        }
        if !uv_checker.feasible_given_leading(&u_counts) {
            return Err(SimError::GenerationFailure(
                "conditional typical set of P(v|u) is empty for a drawn u".into(),
            ));
        }
        let x1 = draw_typical(
            &mut rng,
            n,
            |rng, t| sample_pmf(rng, &pmfs.px1_given_u[u[t] * pmfs.nx1..(u[t] + 1) * pmfs.nx1]),
            &mut ux1_checker,
            Some(&u),
            "x1",
        )?;
        for _ in 0..structure.v_per_u {
            let v = draw_typical(
                &mut rng,
                n,
                |rng, t| sample_pmf(rng, &pmfs.pv_given_u[u[t] * pmfs.nv..(u[t] + 1) * pmfs.nv]),
                &mut uv_checker,
                Some(&u),
                "v",
            )?;
            v_seqs.push(v);
        }
        u_seqs.push(u);
        x1_seqs.push(x1);
    }
    Ok(Codebook {
        n,
        eps: params.eps,
        seed: params.seed,
        structure,
        u_seqs,
        x1_seqs,
        v_seqs,
    })
}

/// The cognitive message: the secrecy-bin index and the g-fiber class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CognitiveMessage {
    pub bin: usize,
    pub fiber: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transmission {
    /// Flat v-index actually selected.
    pub k: usize,
    pub x1: Vec<usize>,
    pub x2: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EncodeResult {
    Sent(Transmission),
    /// No v-sequence in the addressed bin/fiber is jointly typical with the
    /// state; counted as an error event by the trial harness.
    Failure,
}

fn check_symbols(seq: &[usize], size: usize) -> Result<(), SimError> {
    for &s in seq {
        if s >= size {
            return Err(SimError::SymbolOutOfRange { symbol: s, size });
        }
    }
    Ok(())
}

/// Encodes (w1, w2) against a state sequence: searches the addressed bin
/// over all subbins and the fiber's positions for a (u, v, s)-typical
/// v-sequence, picking uniformly among the candidates.
pub fn encode(
    codebook: &Codebook,
    pmfs: &GeneratingPmfs,
    w1: usize,
    w2: CognitiveMessage,
    s_seq: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<EncodeResult, SimError> {
    let st = &codebook.structure;
    if w1 >= st.m1 {
        return Err(SimError::IndexOutOfRange(format!("w1 = {w1} with M1 = {}", st.m1)));
    }
    if w2.bin >= st.num_bins || w2.fiber >= st.fiber_count {
        return Err(SimError::IndexOutOfRange(format!(
            "w2 = ({}, {}) with {} bins and {} fibers",
            w2.bin, w2.fiber, st.num_bins, st.fiber_count
        )));
    }
    if s_seq.len() != codebook.n {
        return Err(SimError::WrongLength { got: s_seq.len(), expected: codebook.n });
    }
    check_symbols(s_seq, pmfs.ns)?;
    let mut suv_checker = TypicalityChecker::new(pmfs.p_suv.clone(), codebook.n, codebook.eps);
    let u = &codebook.u_seqs[w1];
    let mut candidates = Vec::new();
    for a in 0..st.subbins_per_bin {
        for b in 0..st.subbin_size {
            if st.fiber_of_position[b] != w2.fiber {
                continue;
            }
            let k = codebook.flat_k(w2.bin, a, b);
            if suv_checker.check(&[s_seq, u, codebook.v_seq(w1, k)]) {
                candidates.push(k);
            }
        }
    }
    if candidates.is_empty() {
        return Ok(EncodeResult::Failure);
    }
    let k = candidates[rng.random_range(0..candidates.len())];
    let v = codebook.v_seq(w1, k);
    let mut x2 = Vec::with_capacity(codebook.n);
    for t in 0..codebook.n {
        let base = ((s_seq[t] * pmfs.nu + u[t]) * pmfs.nv + v[t]) * pmfs.nx2;
        x2.push(sample_pmf(rng, &pmfs.px2_given_uvs[base..base + pmfs.nx2]));
    }
    Ok(EncodeResult::Sent(Transmission { k, x1: codebook.x1_seqs[w1].clone(), x2 }))
}

/// Declared-error-aware decode outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeOutcome<T> {
    Decoded(T),
    /// No jointly typical candidate.
    NoCandidate,
    /// More than one jointly typical candidate.
    Ambiguous,
}

/// Receiver 1: the unique u-index whose x1-codeword is jointly typical with
/// y1.
pub fn decode_primary(
    codebook: &Codebook,
    pmfs: &GeneratingPmfs,
    y1: &[usize],
) -> Result<DecodeOutcome<usize>, SimError> {
    if y1.len() != codebook.n {
        return Err(SimError::WrongLength { got: y1.len(), expected: codebook.n });
    }
    check_symbols(y1, pmfs.ny1)?;
    let mut checker = TypicalityChecker::new(pmfs.p_x1y1.clone(), codebook.n, codebook.eps);
    let mut found = None;
    for (i, x1) in codebook.x1_seqs.iter().enumerate() {
        if checker.check(&[x1, y1]) {
            if found.is_some() {
                return Ok(DecodeOutcome::Ambiguous);
            }
            found = Some(i);
        }
    }
    Ok(match found {
        Some(i) => DecodeOutcome::Decoded(i),
        None => DecodeOutcome::NoCandidate,
    })
}

/// Receiver 2's decoded index tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SecondaryDecode {
    pub i: usize,
    pub k: usize,
    pub bin: usize,
    pub subbin: usize,
    pub position: usize,
}

impl SecondaryDecode {
    pub fn message(&self, codebook: &Codebook) -> CognitiveMessage {
        CognitiveMessage {
            bin: self.bin,
            fiber: codebook.structure.fiber_of_position[self.position],
        }
    }
}

/// Receiver 2: the unique (i, k) whose (u, v) pair is jointly typical with
/// y2.
pub fn decode_secondary(
    codebook: &Codebook,
    pmfs: &GeneratingPmfs,
    y2: &[usize],
) -> Result<DecodeOutcome<SecondaryDecode>, SimError> {
    if y2.len() != codebook.n {
        return Err(SimError::WrongLength { got: y2.len(), expected: codebook.n });
    }
    check_symbols(y2, pmfs.ny2)?;
    let mut checker = TypicalityChecker::new(pmfs.p_uvy2.clone(), codebook.n, codebook.eps);
    let mut found = None;
    for i in 0..codebook.structure.m1 {
        let u = &codebook.u_seqs[i];
        for k in 0..codebook.structure.v_per_u {
            if checker.check(&[u, codebook.v_seq(i, k), y2]) {
                if found.is_some() {
                    return Ok(DecodeOutcome::Ambiguous);
                }
                let (bin, subbin, position) = codebook.split_k(k);
                found = Some(SecondaryDecode { i, k, bin, subbin, position });
            }
        }
    }
    Ok(match found {
        Some(d) => DecodeOutcome::Decoded(d),
        None => DecodeOutcome::NoCandidate,
    })
}

/// Genie-aided positional decoding at receiver 1 (diagnostics): given the
/// u-index, bin, and subbin, recover the unique position whose induced
/// x2-codeword is jointly typical with (x1, y1). Needs a deterministic
/// P(x2 | u,v,s) so x2-codewords are well defined.
pub fn genie_decode_position(
    codebook: &Codebook,
    pmfs: &GeneratingPmfs,
    i: usize,
    bin: usize,
    subbin: usize,
    s_seq: &[usize],
    y1: &[usize],
) -> Result<DecodeOutcome<usize>, SimError> {
    let st = &codebook.structure;
    if i >= st.m1 || bin >= st.num_bins || subbin >= st.subbins_per_bin {
        return Err(SimError::IndexOutOfRange(format!("genie indices ({i}, {bin}, {subbin})")));
    }
    if y1.len() != codebook.n || s_seq.len() != codebook.n {
        return Err(SimError::WrongLength { got: y1.len(), expected: codebook.n });
    }
    let deterministic_x2 = |u: usize, v: usize, s: usize| -> Result<usize, SimError> {
        let base = ((s * pmfs.nu + u) * pmfs.nv + v) * pmfs.nx2;
        let slice = &pmfs.px2_given_uvs[base..base + pmfs.nx2];
        for (x2, &p) in slice.iter().enumerate() {
            if (p - 1.0).abs() < 1e-9 {
                return Ok(x2);
            }
        }
        Err(SimError::StochasticEncoderUnsupported)
    };
    let mut checker = TypicalityChecker::new(pmfs.p_x1x2y1.clone(), codebook.n, codebook.eps);
    let u = &codebook.u_seqs[i];
    let x1 = &codebook.x1_seqs[i];
    let mut found = None;
    for b in 0..st.subbin_size {
        let k = codebook.flat_k(bin, subbin, b);
        let v = codebook.v_seq(i, k);
        let mut x2 = Vec::with_capacity(codebook.n);
        for t in 0..codebook.n {
            x2.push(deterministic_x2(u[t], v[t], s_seq[t])?);
        }
        if checker.check(&[x1, &x2, y1]) {
            if found.is_some() {
                return Ok(DecodeOutcome::Ambiguous);
            }
            found = Some(b);
        }
    }
    Ok(match found {
        Some(b) => DecodeOutcome::Decoded(b),
        None => DecodeOutcome::NoCandidate,
    })
}
