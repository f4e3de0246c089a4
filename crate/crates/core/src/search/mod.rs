//! Auxiliary-policy search: deterministic policy streams (simplex grids,
//! seeded Dirichlet draws, or both), bound evaluation over the stream,
//! multiplicative local refinement of the best policies, and assembly of the
//! downward-closed convex hull of the evaluated rate triples.

mod grid;
mod hull;
mod lp;

pub use hull::{downward_hull, hull_contains};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{BatchEvaluator, BoundsError, RateTriple};
use crate::channel::{fill_joint_mass, AuxiliaryPolicy, ChannelError, ChannelSpec};
use crate::prob::DEFAULT_CELL_CAP;

use grid::{simplex_grid_count, simplex_grid_point};

/// Hard cap on enumerable grid points; larger grids are a resource error.
const GRID_ENUM_CAP: u128 = 1 << 28;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("grid enumerates {points} policies, above the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },
    #[error("joint tensor needs {cells} cells, above the cap of {cap}")]
    ResourceCap { cells: usize, cap: usize },
    #[error("malformed policy id `{0}`")]
    BadPolicyId(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    Grid,
    DirichletRandom,
    Hybrid,
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::Grid => "grid",
            Sampler::DirichletRandom => "dirichlet-random",
            Sampler::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Sampler {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(Sampler::Grid),
            "dirichlet-random" | "dirichlet" => Ok(Sampler::DirichletRandom),
            "hybrid" => Ok(Sampler::Hybrid),
            other => Err(format!("unknown sampler `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub nu: usize,
    pub nv: usize,
    pub sampler: Sampler,
    pub grid_resolution: usize,
    pub sample_count: usize,
    pub refine_rounds: usize,
    pub refine_top: usize,
    pub seed: u64,
    pub cell_cap: usize,
}

impl SearchConfig {
    /// Default budget: a coarse grid plus seeded random draws and three
    /// refinement rounds.
    pub fn new(nu: usize, nv: usize) -> Self {
        Self {
            nu,
            nv,
            sampler: Sampler::Hybrid,
            grid_resolution: 3,
            sample_count: 4096,
            refine_rounds: 3,
            refine_top: 8,
            seed: 0,
            cell_cap: DEFAULT_CELL_CAP,
        }
    }

    fn validate(&self) -> Result<(), SearchError> {
        if self.nu == 0 || self.nv == 0 {
            return Err(SearchError::InvalidConfig("|U| and |V| must be >= 1".into()));
        }
        if self.grid_resolution < 2 {
            return Err(SearchError::InvalidConfig("grid resolution must be >= 2".into()));
        }
        if self.sample_count == 0 {
            return Err(SearchError::InvalidConfig("sample count must be >= 1".into()));
        }
        Ok(())
    }
}

/// A perturbation step applied during refinement: one policy coordinate
/// scaled up or down by 10% with slice renormalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PerturbStep {
    pub coord: u32,
    pub increase: bool,
}

/// Identifier of a reported policy: its index in the deterministic sampling
/// stream plus any refinement steps, so every policy can be reconstructed
/// from (spec, config, id) alone.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyId {
    pub base: u64,
    pub steps: Vec<PerturbStep>,
}

impl PolicyId {
    fn stream(base: u64) -> Self {
        Self { base, steps: Vec::new() }
    }

    fn refined(&self, step: PerturbStep) -> Self {
        let mut steps = self.steps.clone();
        steps.push(step);
        Self { base: self.base, steps }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for s in &self.steps {
            write!(f, ".c{}{}", s.coord, if s.increase { '+' } else { '-' })?;
        }
        Ok(())
    }
}

impl FromStr for PolicyId {
    type Err = SearchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SearchError::BadPolicyId(s.to_string());
        let mut parts = s.split('.');
        let base: u64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let mut steps = Vec::new();
        for part in parts {
            let rest = part.strip_prefix('c').ok_or_else(bad)?;
            let (coord, increase) = if let Some(c) = rest.strip_suffix('+') {
                (c, true)
            } else if let Some(c) = rest.strip_suffix('-') {
                (c, false)
            } else {
                return Err(bad());
            };
            steps.push(PerturbStep {
                coord: coord.parse().map_err(|_| bad())?,
                increase,
            });
        }
        Ok(PolicyId { base, steps })
    }
}

/// A deterministic, indexable stream of auxiliary policies.
pub struct PolicyStream<'a> {
    spec: &'a ChannelSpec,
    config: &'a SearchConfig,
    slice_outcomes: usize,
    slices: usize,
    slice_grid: u128,
    grid_len: u128,
    total_len: u128,
}

impl<'a> PolicyStream<'a> {
    pub fn len(&self) -> usize {
        self.total_len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.total_len == 0
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len as usize
    }

    /// The policy at a stream index. Indices below the grid length decode a
    /// grid point; the rest are per-index seeded Dirichlet draws.
    pub fn policy(&self, index: usize) -> AuxiliaryPolicy {
        assert!((index as u128) < self.total_len, "policy index out of range");
        let (nu, nv) = (self.config.nu, self.config.nv);
        let (ns, nx1, nx2) = (self.spec.ns, self.spec.nx1, self.spec.nx2);
        if (index as u128) < self.grid_len {
            // Mixed-radix decode: px1 rank is the most significant digit.
            let mut rank = index as u128;
            let mut slice_ranks = vec![0u128; self.slices];
            for r in slice_ranks.iter_mut().rev() {
                *r = rank % self.slice_grid;
                rank /= self.slice_grid;
            }
            let px1 = simplex_grid_point(nx1, self.config.grid_resolution, rank);
            let mut cond = Vec::with_capacity(self.slices * self.slice_outcomes);
            for &r in &slice_ranks {
                cond.extend(simplex_grid_point(
                    self.slice_outcomes,
                    self.config.grid_resolution,
                    r,
                ));
            }
            AuxiliaryPolicy::new(nu, nv, ns, nx1, nx2, px1, cond).expect("grid policy shape")
        } else {
            let draw = (index as u128 - self.grid_len) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(draw + 1);
            let px1 = dirichlet_row(&mut rng, nx1);
            let mut cond = Vec::with_capacity(self.slices * self.slice_outcomes);
            for _ in 0..self.slices {
                cond.extend(dirichlet_row(&mut rng, self.slice_outcomes));
            }
            AuxiliaryPolicy::new(nu, nv, ns, nx1, nx2, px1, cond).expect("sampled policy shape")
        }
    }
}

/// Symmetric Dirichlet(1) draw: normalized unit exponentials.
fn dirichlet_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
    row
}

/// Builds the deterministic policy stream for a channel and search config.
pub fn sample_policies<'a>(
    spec: &'a ChannelSpec,
    config: &'a SearchConfig,
) -> Result<PolicyStream<'a>, SearchError> {
    config.validate()?;
    let cells = spec.ns * config.nu * config.nv * spec.nx1 * spec.nx2 * spec.ny1 * spec.ny2;
    if cells > config.cell_cap {
        return Err(SearchError::ResourceCap { cells, cap: config.cell_cap });
    }
    let slice_outcomes = config.nu * config.nv * spec.nx2;
    let slices = spec.ns * spec.nx1;
    let px1_grid = simplex_grid_count(spec.nx1, config.grid_resolution);
    let slice_grid = simplex_grid_count(slice_outcomes, config.grid_resolution);
    let mut grid_len = px1_grid;
    for _ in 0..slices {
        grid_len = grid_len.saturating_mul(slice_grid);
    }
    let grid_len = match config.sampler {
        Sampler::DirichletRandom => 0,
        Sampler::Grid | Sampler::Hybrid => grid_len,
    };
    if grid_len > GRID_ENUM_CAP {
        return Err(SearchError::GridTooLarge { points: grid_len, cap: GRID_ENUM_CAP });
    }
    let total_len = match config.sampler {
        Sampler::Grid => grid_len,
        Sampler::DirichletRandom => config.sample_count as u128,
        Sampler::Hybrid => grid_len + config.sample_count as u128,
    };
    Ok(PolicyStream {
        spec,
        config,
        slice_outcomes,
        slices,
        slice_grid,
        grid_len,
        total_len,
    })
}

/// One evaluated point of a region sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPoint {
    pub rates: RateTriple,
    pub policy_id: String,
}

/// Evaluated rate triples (Pareto-nondominated subset) and the vertex list
/// of their downward-closed convex hull.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSample {
    pub points: Vec<RegionPoint>,
    pub hull: Vec<RateTriple>,
}

#[derive(Clone)]
struct Entry {
    rates: RateTriple,
    id: PolicyId,
    policy: AuxiliaryPolicy,
}

fn rates_key(r: &RateTriple) -> (u64, u64, u64) {
    (r.r1.to_bits(), r.r2.to_bits(), r.re2.to_bits())
}

/// Inserts into a Pareto set of maximal entries. Exactly equal triples keep
/// the smaller policy id, so the result is independent of insertion order.
fn pareto_insert(set: &mut Vec<Entry>, entry: Entry) {
    let mut i = 0;
    while i < set.len() {
        if hull::dominates(&set[i].rates, &entry.rates) {
            return;
        }
        if rates_key(&set[i].rates) == rates_key(&entry.rates) {
            if entry.id < set[i].id {
                set[i] = entry;
            }
            return;
        }
        if hull::dominates(&entry.rates, &set[i].rates) {
            set.swap_remove(i);
        } else {
            i += 1;
        }
    }
    set.push(entry);
}

fn pareto_merge(mut a: Vec<Entry>, b: Vec<Entry>) -> Vec<Entry> {
    for e in b {
        pareto_insert(&mut a, e);
    }
    a
}

/// Scales one policy coordinate by +/-10% and renormalizes its simplex
/// slice. Returns None when the step is a no-op (zero coordinate).
fn perturb(policy: &AuxiliaryPolicy, coord: usize, increase: bool) -> Option<AuxiliaryPolicy> {
    let factor = if increase { 1.1 } else { 0.9 };
    let mut p = policy.clone();
    let npx1 = p.px1.len();
    let renorm = |slice: &mut [f64]| {
        let sum: f64 = slice.iter().sum();
        for v in slice.iter_mut() {
            *v /= sum;
        }
    };
    if coord < npx1 {
        if p.px1[coord] == 0.0 {
            return None;
        }
        p.px1[coord] *= factor;
        renorm(&mut p.px1);
    } else {
        let c = coord - npx1;
        if c >= p.cond.len() || p.cond[c] == 0.0 {
            return None;
        }
        let slice_len = p.nu * p.nv * p.nx2;
        let start = (c / slice_len) * slice_len;
        p.cond[c] *= factor;
        renorm(&mut p.cond[start..start + slice_len]);
    }
    Some(p)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BoundKind {
    Inner,
    Outer,
}

/// Per-worker evaluation state: the batch evaluator plus a reusable mass
/// buffer.
struct EvalCtx {
    evaluator: BatchEvaluator,
    mass: Vec<f64>,
}

impl EvalCtx {
    fn new(spec: &ChannelSpec, config: &SearchConfig) -> Self {
        let dims = [
            spec.ns, config.nu, config.nv, spec.nx1, spec.nx2, spec.ny1, spec.ny2,
        ];
        Self { evaluator: BatchEvaluator::new(dims), mass: Vec::new() }
    }

    fn eval(
        &mut self,
        spec: &ChannelSpec,
        policy: &AuxiliaryPolicy,
        kind: BoundKind,
    ) -> Result<RateTriple, SearchError> {
        fill_joint_mass(spec, policy, &mut self.mass)?;
        let (inner, outer) = self.evaluator.eval(&self.mass)?;
        Ok(match kind {
            BoundKind::Inner => inner,
            BoundKind::Outer => outer,
        })
    }
}

fn search_with(
    spec: &ChannelSpec,
    config: &SearchConfig,
    kind: BoundKind,
) -> Result<RegionSample, SearchError> {
    let stream = sample_policies(spec, config)?;
    let n = stream.len();
    let pareto = (0..n)
        .into_par_iter()
        .try_fold(
            || (EvalCtx::new(spec, config), Vec::<Entry>::new()),
            |(mut ctx, mut acc), i| {
                let policy = stream.policy(i);
                let rates = ctx.eval(spec, &policy, kind)?;
                pareto_insert(
                    &mut acc,
                    Entry { rates, id: PolicyId::stream(i as u64), policy },
                );
                Ok::<_, SearchError>((ctx, acc))
            },
        )
        .map(|state| state.map(|(_, acc)| acc))
        .try_reduce(Vec::new, |a, b| Ok(pareto_merge(a, b)))?;
    let mut pareto = pareto;

    let mut ctx = EvalCtx::new(spec, config);
    for _round in 0..config.refine_rounds {
        let hull = downward_hull(&pareto.iter().map(|e| e.rates).collect::<Vec<_>>());
        let mut parents: Vec<Entry> = pareto
            .iter()
            .filter(|e| hull.iter().any(|v| rates_key(v) == rates_key(&e.rates)))
            .cloned()
            .collect();
        parents.sort_by(|a, b| a.id.cmp(&b.id));
        parents.truncate(config.refine_top);
        let coords = spec.nx1 + parents.first().map_or(0, |e| e.policy.cond.len());
        for parent in &parents {
            for coord in 0..coords {
                for increase in [true, false] {
                    let Some(policy) = perturb(&parent.policy, coord, increase) else {
                        continue;
                    };
                    let id = parent.id.refined(PerturbStep { coord: coord as u32, increase });
                    let rates = ctx.eval(spec, &policy, kind)?;
                    pareto_insert(&mut pareto, Entry { rates, id, policy });
                }
            }
        }
    }

    let mut entries = pareto;
    entries.sort_by(|a, b| {
        rates_key(&a.rates)
            .cmp(&rates_key(&b.rates))
            .then_with(|| a.id.cmp(&b.id))
    });
    let hull = downward_hull(&entries.iter().map(|e| e.rates).collect::<Vec<_>>());
    let points = entries
        .into_iter()
        .map(|e| RegionPoint { rates: e.rates, policy_id: e.id.to_string() })
        .collect();
    Ok(RegionSample { points, hull })
}

/// Traces the achievable region: evaluates the inner bound over the policy
/// stream and returns the nondominated points plus the downward hull.
pub fn search_region(spec: &ChannelSpec, config: &SearchConfig) -> Result<RegionSample, SearchError> {
    search_with(spec, config, BoundKind::Inner)
}

/// Same sweep for the outer bound.
pub fn search_outer(spec: &ChannelSpec, config: &SearchConfig) -> Result<RegionSample, SearchError> {
    search_with(spec, config, BoundKind::Outer)
}

/// Reconstructs the policy behind a reported identifier from (spec, config)
/// alone: stream policies by index, refined ones by replaying their steps.
pub fn policy_for_id(
    spec: &ChannelSpec,
    config: &SearchConfig,
    id: &str,
) -> Result<AuxiliaryPolicy, SearchError> {
    let parsed: PolicyId = id.parse()?;
    let stream = sample_policies(spec, config)?;
    if parsed.base as u128 >= stream.total_len {
        return Err(SearchError::BadPolicyId(id.to_string()));
    }
    let mut policy = stream.policy(parsed.base as usize);
    for step in &parsed.steps {
        policy = perturb(&policy, step.coord as usize, step.increase)
            .ok_or_else(|| SearchError::BadPolicyId(id.to_string()))?;
    }
    Ok(policy)
}
