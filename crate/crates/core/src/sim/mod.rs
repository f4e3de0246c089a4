//! Monte Carlo simulation of the random-binning coding scheme at small
//! blocklengths: seeded codebook generation, joint-typicality encoding and
//! decoding, empirical error rates, and the empirical equivocation rate of
//! the cognitive message at receiver 1 via exact Bayes posteriors over the
//! enumerable message set.

mod codebook;
mod typicality;

pub use codebook::{
    decode_primary, decode_secondary, encode, generate_codebook, genie_decode_position,
    partition_g, Codebook, CodebookStructure, CognitiveMessage, DecodeOutcome, EncodeResult,
    GeneratingPmfs, SecondaryDecode, Transmission,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::channel::{AuxiliaryPolicy, ChannelError, ChannelSpec};
use crate::prob::ProbError;
use typicality::sample_pmf;

/// Default strong-typicality tolerance at desk-scale blocklengths.
pub const DEFAULT_EPS: f64 = 0.05;

/// Default cap on total codewords (u-count times v-pool) so posterior
/// enumeration stays exact and affordable.
pub const DEFAULT_CODEWORD_CAP: u64 = 1 << 16;

/// Default cap on enumerable state sequences for the exact posterior.
pub const DEFAULT_STATE_ENUM_CAP: u64 = 1 << 12;

/// Cap on (u-count) x (state sequences) x (v-pool) posterior work items.
const POSTERIOR_BUDGET: u64 = 1 << 26;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("codebook needs {total} codewords, above the cap of {cap}")]
    CodewordCap { total: u64, cap: u64 },
    #[error("typicality generation failure: {0}")]
    GenerationFailure(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("sequence has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("exact posterior needs {states} state sequences, above the cap of {cap}")]
    StateEnumerationCap { states: u64, cap: u64 },
    #[error("posterior enumeration needs {items} items, above the budget of {budget}")]
    PosteriorBudget { items: u64, budget: u64 },
    #[error("partition of {b} positions into {c} fibers is impossible")]
    PartitionTooFine { b: usize, c: usize },
    #[error("x2 conditional is stochastic; genie decoding needs a deterministic mapping")]
    StochasticEncoderUnsupported,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Blocklength, target message rates, typicality tolerance, seed, and the
/// resource caps keeping exact enumeration feasible.
#[derive(Clone, Debug, Serialize)]
pub struct CodebookParams {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub eps: f64,
    pub seed: u64,
    pub codeword_cap: u64,
    pub state_enum_cap: u64,
}

impl CodebookParams {
    pub fn new(n: usize, r1: f64, r2: f64) -> Self {
        Self {
            n,
            r1,
            r2,
            eps: DEFAULT_EPS,
            seed: 0,
            codeword_cap: DEFAULT_CODEWORD_CAP,
            state_enum_cap: DEFAULT_STATE_ENUM_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: usize,
    pub pe1: f64,
    pub pe2: f64,
    /// Mean of (1/n) H(W2 | y1) over successfully encoded trials.
    pub eq_rate: f64,
    pub encoder_failure_rate: f64,
}

/// Per-trial record for the optional CSV log.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub w1: usize,
    pub bin: usize,
    pub fiber: usize,
    pub encode_failed: bool,
    pub err1: bool,
    pub err2: bool,
    /// Equivocation (bits per channel use) of this trial's y1, or NaN when
    /// encoding failed.
    pub eq_rate: f64,
}

/// Exact posterior machinery shared by all trials: per-letter y1 emission
/// likelihoods and, for every (u-index, state sequence), the typicality mask
/// over the v-pool with per-message candidate counts.
struct PosteriorCtx {
    n: usize,
    ny1: usize,
    nv: usize,
    nx1: usize,
    ns: usize,
    /// emission[(((u*nv+v)*nx1+x1)*ns+s)*ny1+y1]
    emission: Vec<f64>,
    state_seqs: Vec<Vec<usize>>,
    state_probs: Vec<f64>,
    /// typical[(w1 * nstates + si) * v_per_u + k]
    typical: Vec<bool>,
    /// cand_count[(w1 * nstates + si) * message_count + msg]
    cand_count: Vec<u32>,
}

impl PosteriorCtx {
    fn new(
        codebook: &Codebook,
        pmfs: &GeneratingPmfs,
        params: &CodebookParams,
    ) -> Result<Self, SimError> {
        let n = codebook.n;
        let ns = pmfs.ns;
        let nstates = (ns as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
        if nstates > params.state_enum_cap {
            return Err(SimError::StateEnumerationCap {
                states: nstates,
                cap: params.state_enum_cap,
            });
        }
        let st = &codebook.structure;
        let items = (st.m1 as u64) * nstates * (st.v_per_u as u64);
        if items > POSTERIOR_BUDGET {
            return Err(SimError::PosteriorBudget { items, budget: POSTERIOR_BUDGET });
        }
        let nstates = nstates as usize;
        let (nu, nv, nx1, nx2, ny1) = (pmfs.nu, pmfs.nv, pmfs.nx1, pmfs.nx2, pmfs.ny1);
        let mut emission = vec![0.0; nu * nv * nx1 * ns * ny1];
        for u in 0..nu {
            for v in 0..nv {
                for x1 in 0..nx1 {
                    for s in 0..ns {
                        for y1 in 0..ny1 {
                            let mut acc = 0.0;
                            for x2 in 0..nx2 {
                                let px2 =
                                    pmfs.px2_given_uvs[((s * nu + u) * nv + v) * nx2 + x2];
                                let ky1 =
                                    pmfs.ky1[((s * nx1 + x1) * nx2 + x2) * ny1 + y1];
                                acc += px2 * ky1;
                            }
                            emission[(((u * nv + v) * nx1 + x1) * ns + s) * ny1 + y1] = acc;
                        }
                    }
                }
            }
        }
        let mut state_seqs = Vec::with_capacity(nstates);
        let mut state_probs = Vec::with_capacity(nstates);
        let mut seq = vec![0usize; n];
        loop {
            let prob: f64 = seq.iter().map(|&s| pmfs.state_pmf[s]).product();
            state_seqs.push(seq.clone());
            state_probs.push(prob);
            let mut t = n;
            loop {
                if t == 0 {
                    break;
                }
                t -= 1;
                seq[t] += 1;
                if seq[t] < ns {
                    break;
                }
                seq[t] = 0;
            }
            if seq.iter().all(|&s| s == 0) {
                break;
            }
        }
        let mut suv_checker =
            typicality::TypicalityChecker::new(pmfs.p_suv.clone(), n, codebook.eps);
        let mut typical = vec![false; st.m1 * nstates * st.v_per_u];
        let mut cand_count = vec![0u32; st.m1 * nstates * st.message_count];
        for w1 in 0..st.m1 {
            let u = &codebook.u_seqs[w1];
            for (si, s_seq) in state_seqs.iter().enumerate() {
                let base_k = (w1 * nstates + si) * st.v_per_u;
                let base_m = (w1 * nstates + si) * st.message_count;
                for k in 0..st.v_per_u {
                    if suv_checker.check(&[s_seq, u, codebook.v_seq(w1, k)]) {
                        typical[base_k + k] = true;
                        let (bin, _, pos) = codebook.split_k(k);
                        let msg = bin * st.fiber_count + st.fiber_of_position[pos];
                        cand_count[base_m + msg] += 1;
                    }
                }
            }
        }
        Ok(Self {
            n,
            ny1,
            nv,
            nx1,
            ns,
            emission,
            state_seqs,
            state_probs,
            typical,
            cand_count,
        })
    }

    /// (1/n) H(W2 | Y1 = y1), conditioning on successful encoding, by exact
    /// enumeration over (w1, state sequence, candidate v).
    fn equivocation(&self, codebook: &Codebook, y1: &[usize]) -> f64 {
        let st = &codebook.structure;
        let nstates = self.state_seqs.len();
        let mut posterior = vec![0.0f64; st.message_count];
        for w1 in 0..st.m1 {
            let u = &codebook.u_seqs[w1];
            let x1 = &codebook.x1_seqs[w1];
            for (si, s_seq) in self.state_seqs.iter().enumerate() {
                let w0 = self.state_probs[si];
                if w0 == 0.0 {
                    continue;
                }
                let base_k = (w1 * nstates + si) * st.v_per_u;
                let base_m = (w1 * nstates + si) * st.message_count;
                for k in 0..st.v_per_u {
                    if !self.typical[base_k + k] {
                        continue;
                    }
                    let v = codebook.v_seq(w1, k);
                    let mut like = w0;
                    for t in 0..self.n {
                        like *= self.emission[(((u[t] * self.nv + v[t]) * self.nx1 + x1[t])
                            * self.ns
                            + s_seq[t])
                            * self.ny1
                            + y1[t]];
                    }
                    let (bin, _, pos) = codebook.split_k(k);
                    let msg = bin * st.fiber_count + st.fiber_of_position[pos];
                    posterior[msg] += like / f64::from(self.cand_count[base_m + msg]);
                }
            }
        }
        let total: f64 = posterior.iter().sum();
        if total <= 0.0 {
            // The observed y1 has zero likelihood under every candidate
            // (cannot happen for y1 produced by the scheme itself).
            return 0.0;
        }
        let mut h = 0.0;
        for &p in &posterior {
            if p > 0.0 {
                let q = p / total;
                h -= q * q.log2();
            }
        }
        h / self.n as f64
    }
}

struct TrialOutcome {
    failed: bool,
    err1: bool,
    err2: bool,
    eq_rate: f64,
    w1: usize,
    w2: CognitiveMessage,
}

fn run_one_trial(
    spec: &ChannelSpec,
    codebook: &Codebook,
    pmfs: &GeneratingPmfs,
    posterior: &PosteriorCtx,
    seed: u64,
    trial: usize,
) -> Result<TrialOutcome, SimError> {
    let st = &codebook.structure;
    let n = codebook.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    let w1 = rng.random_range(0..st.m1);
    let w2 = CognitiveMessage {
        bin: rng.random_range(0..st.num_bins),
        fiber: rng.random_range(0..st.fiber_count),
    };
    let s_seq: Vec<usize> = (0..n).map(|_| sample_pmf(&mut rng, &spec.state_pmf)).collect();
    let sent = match encode(codebook, pmfs, w1, w2, &s_seq, &mut rng)? {
        EncodeResult::Sent(t) => t,
        EncodeResult::Failure => {
            return Ok(TrialOutcome {
                failed: true,
                err1: true,
                err2: true,
                eq_rate: f64::NAN,
                w1,
                w2,
            });
        }
    };
    let mut y1 = Vec::with_capacity(n);
    let mut y2 = Vec::with_capacity(n);
    for t in 0..n {
        let (s, x1, x2) = (s_seq[t], sent.x1[t], sent.x2[t]);
        let base = (((s * spec.nx1 + x1) * spec.nx2) + x2) * spec.ny1 * spec.ny2;
        let cell = sample_pmf(&mut rng, &spec.kernel[base..base + spec.ny1 * spec.ny2]);
        y1.push(cell / spec.ny2);
        y2.push(cell % spec.ny2);
    }
    let err1 = match decode_primary(codebook, pmfs, &y1)? {
        DecodeOutcome::Decoded(i) => i != w1,
        _ => true,
    };
    let err2 = match decode_secondary(codebook, pmfs, &y2)? {
        DecodeOutcome::Decoded(d) => d.message(codebook) != w2,
        _ => true,
    };
    let eq_rate = posterior.equivocation(codebook, &y1);
    Ok(TrialOutcome { failed: false, err1, err2, eq_rate, w1, w2 })
}

fn aggregate(outcomes: &[TrialOutcome]) -> TrialStats {
    let trials = outcomes.len();
    let mut err1 = 0usize;
    let mut err2 = 0usize;
    let mut failed = 0usize;
    let mut eq_sum = 0.0;
    let mut eq_count = 0usize;
    for o in outcomes {
        err1 += usize::from(o.err1);
        err2 += usize::from(o.err2);
        failed += usize::from(o.failed);
        if !o.failed {
            eq_sum += o.eq_rate;
            eq_count += 1;
        }
    }
    let frac = |k: usize| k as f64 / trials.max(1) as f64;
    TrialStats {
        trials,
        pe1: frac(err1),
        pe2: frac(err2),
        eq_rate: if eq_count > 0 { eq_sum / eq_count as f64 } else { 0.0 },
        encoder_failure_rate: frac(failed),
    }
}

/// Runs seeded Monte Carlo trials of the full scheme, returning empirical
/// error rates, the encoder failure rate, and the mean exact equivocation
/// rate. Trials run in parallel on per-trial derived seeds; aggregation is
/// sequential in trial order, so results are bit-identical for a seed.
pub fn run_trials(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
    params: &CodebookParams,
    trials: usize,
) -> Result<TrialStats, SimError> {
    let (stats, _) = run_trials_logged(spec, policy, params, trials)?;
    Ok(stats)
}

/// As [`run_trials`], also returning the per-trial log.
pub fn run_trials_logged(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
    params: &CodebookParams,
    trials: usize,
) -> Result<(TrialStats, Vec<TrialRecord>), SimError> {
    let pmfs = GeneratingPmfs::from_policy(spec, policy)?;
    let codebook = generate_codebook(&pmfs, params)?;
    let posterior = PosteriorCtx::new(&codebook, &pmfs, params)?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_one_trial(spec, &codebook, &pmfs, &posterior, params.seed, t))
        .collect::<Result<_, _>>()?;
    let stats = aggregate(&outcomes);
    let records = outcomes
        .iter()
        .enumerate()
        .map(|(trial, o)| TrialRecord {
            trial,
            w1: o.w1,
            bin: o.w2.bin,
            fiber: o.w2.fiber,
            encode_failed: o.failed,
            err1: o.err1,
            err2: o.err2,
            eq_rate: o.eq_rate,
        })
        .collect();
    Ok((stats, records))
}
