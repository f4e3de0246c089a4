//! Channel and auxiliary-policy declarations: validation, JSON parsing and
//! serialization, and assembly of the full seven-variable joint
//! P(s) P(x1) P(u,v,x2 | s,x1) P(y1,y2 | s,x1,x2).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{JointDistribution, ProbError, VariableId, DEFAULT_CELL_CAP};

/// Variable names of the assembled joint, in tensor order.
pub const JOINT_VARS: [&str; 7] = ["s", "u", "v", "x1", "x2", "y1", "y2"];

/// Input tensors may be off normalization by up to this; they are
/// re-normalized with a warning. Beyond it the document is rejected.
pub const INPUT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("dimension mismatch in `{field}`: expected {expected}, got {got}{at}")]
    Dimension {
        field: String,
        expected: usize,
        got: usize,
        at: String,
    },
    #[error("`{field}` sums to {sum} at {at}; normalization is off by more than {tol:e}")]
    Normalization {
        field: String,
        sum: f64,
        at: String,
        tol: f64,
    },
    #[error("`{field}` has negative entry {value} at {at}")]
    Negative {
        field: String,
        value: f64,
        at: String,
    },
    #[error("channel/policy size mismatch: {0}")]
    SizeMismatch(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// A single invariant violation found by validation. Violations are data,
/// not errors: validators return every one they find.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    StatePmfSum { sum: f64 },
    StatePmfNegative { s: usize, value: f64 },
    KernelSliceSum { s: usize, x1: usize, x2: usize, sum: f64 },
    KernelNegative { s: usize, x1: usize, x2: usize, y1: usize, y2: usize, value: f64 },
    Px1Sum { sum: f64 },
    Px1Negative { x1: usize, value: f64 },
    CondSliceSum { s: usize, x1: usize, sum: f64 },
    CondNegative { s: usize, x1: usize, u: usize, v: usize, x2: usize, value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::StatePmfSum { sum } => {
                write!(f, "state_pmf sums to {sum}, expected 1")
            }
            Violation::StatePmfNegative { s, value } => {
                write!(f, "state_pmf[{s}] is negative ({value})")
            }
            Violation::KernelSliceSum { s, x1, x2, sum } => {
                write!(f, "kernel slice (s={s}, x1={x1}, x2={x2}) sums to {sum}, expected 1")
            }
            Violation::KernelNegative { s, x1, x2, y1, y2, value } => {
                write!(f, "kernel[{s}][{x1}][{x2}][{y1}][{y2}] is negative ({value})")
            }
            Violation::Px1Sum { sum } => write!(f, "px1 sums to {sum}, expected 1"),
            Violation::Px1Negative { x1, value } => {
                write!(f, "px1[{x1}] is negative ({value})")
            }
            Violation::CondSliceSum { s, x1, sum } => {
                write!(f, "cond slice (s={s}, x1={x1}) sums to {sum}, expected 1")
            }
            Violation::CondNegative { s, x1, u, v, x2, value } => {
                write!(f, "cond[{s}][{x1}][{u}][{v}][{x2}] is negative ({value})")
            }
        }
    }
}

/// The discrete memoryless state-dependent interference channel: alphabet
/// sizes, the state pmf, and the transition kernel P(y1,y2 | x1,x2,s) stored
/// row-major in index order (s, x1, x2, y1, y2).
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    pub nx1: usize,
    pub nx2: usize,
    pub ns: usize,
    pub ny1: usize,
    pub ny2: usize,
    pub state_pmf: Vec<f64>,
    pub kernel: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(
        nx1: usize,
        nx2: usize,
        ns: usize,
        ny1: usize,
        ny2: usize,
        state_pmf: Vec<f64>,
        kernel: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        if state_pmf.len() != ns {
            return Err(ChannelError::Dimension {
                field: "state_pmf".into(),
                expected: ns,
                got: state_pmf.len(),
                at: String::new(),
            });
        }
        let cells = ns * nx1 * nx2 * ny1 * ny2;
        if kernel.len() != cells {
            return Err(ChannelError::Dimension {
                field: "kernel".into(),
                expected: cells,
                got: kernel.len(),
                at: String::new(),
            });
        }
        Ok(Self { nx1, nx2, ns, ny1, ny2, state_pmf, kernel })
    }

    #[inline]
    pub fn kernel_at(&self, s: usize, x1: usize, x2: usize, y1: usize, y2: usize) -> f64 {
        let idx = (((s * self.nx1 + x1) * self.nx2 + x2) * self.ny1 + y1) * self.ny2 + y2;
        self.kernel[idx]
    }

    /// Reports every normalization/negativity violation; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (s, &p) in self.state_pmf.iter().enumerate() {
            if p < 0.0 {
                out.push(Violation::StatePmfNegative { s, value: p });
            }
        }
        let sum: f64 = self.state_pmf.iter().sum();
        if (sum - 1.0).abs() > crate::prob::NORM_TOL {
            out.push(Violation::StatePmfSum { sum });
        }
        for s in 0..self.ns {
            for x1 in 0..self.nx1 {
                for x2 in 0..self.nx2 {
                    let mut slice_sum = 0.0;
                    for y1 in 0..self.ny1 {
                        for y2 in 0..self.ny2 {
                            let p = self.kernel_at(s, x1, x2, y1, y2);
                            if p < 0.0 {
                                out.push(Violation::KernelNegative { s, x1, x2, y1, y2, value: p });
                            }
                            slice_sum += p;
                        }
                    }
                    if (slice_sum - 1.0).abs() > crate::prob::NORM_TOL {
                        out.push(Violation::KernelSliceSum { s, x1, x2, sum: slice_sum });
                    }
                }
            }
        }
        out
    }
}

/// The auxiliary-distribution choice of Eq.-style factorization: a pmf over
/// X1 and a conditional pmf P(u,v,x2 | s,x1) stored row-major in index order
/// (s, x1, u, v, x2).
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryPolicy {
    pub nu: usize,
    pub nv: usize,
    pub ns: usize,
    pub nx1: usize,
    pub nx2: usize,
    pub px1: Vec<f64>,
    pub cond: Vec<f64>,
}

impl AuxiliaryPolicy {
    pub fn new(
        nu: usize,
        nv: usize,
        ns: usize,
        nx1: usize,
        nx2: usize,
        px1: Vec<f64>,
        cond: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        if px1.len() != nx1 {
            return Err(ChannelError::Dimension {
                field: "px1".into(),
                expected: nx1,
                got: px1.len(),
                at: String::new(),
            });
        }
        let cells = ns * nx1 * nu * nv * nx2;
        if cond.len() != cells {
            return Err(ChannelError::Dimension {
                field: "cond".into(),
                expected: cells,
                got: cond.len(),
                at: String::new(),
            });
        }
        Ok(Self { nu, nv, ns, nx1, nx2, px1, cond })
    }

    #[inline]
    pub fn cond_at(&self, s: usize, x1: usize, u: usize, v: usize, x2: usize) -> f64 {
        let idx = (((s * self.nx1 + x1) * self.nu + u) * self.nv + v) * self.nx2 + x2;
        self.cond[idx]
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (x1, &p) in self.px1.iter().enumerate() {
            if p < 0.0 {
                out.push(Violation::Px1Negative { x1, value: p });
            }
        }
        let sum: f64 = self.px1.iter().sum();
        if (sum - 1.0).abs() > crate::prob::NORM_TOL {
            out.push(Violation::Px1Sum { sum });
        }
        for s in 0..self.ns {
            for x1 in 0..self.nx1 {
                let mut slice_sum = 0.0;
                for u in 0..self.nu {
                    for v in 0..self.nv {
                        for x2 in 0..self.nx2 {
                            let p = self.cond_at(s, x1, u, v, x2);
                            if p < 0.0 {
                                out.push(Violation::CondNegative { s, x1, u, v, x2, value: p });
                            }
                            slice_sum += p;
                        }
                    }
                }
                if (slice_sum - 1.0).abs() > crate::prob::NORM_TOL {
                    out.push(Violation::CondSliceSum { s, x1, sum: slice_sum });
                }
            }
        }
        out
    }
}

/// Default auxiliary alphabet sizes for a channel, Caratheodory-style counts;
/// overridable per run.
pub fn default_aux_sizes(spec: &ChannelSpec) -> (usize, usize) {
    (spec.nx1 * spec.ns + 1, spec.nx2 * spec.ns + 2)
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

#[derive(Deserialize, Serialize)]
struct ChannelAlphabetsDoc {
    x1: usize,
    x2: usize,
    s: usize,
    y1: usize,
    y2: usize,
}

#[derive(Deserialize, Serialize)]
struct ChannelDoc {
    alphabets: ChannelAlphabetsDoc,
    state_pmf: Vec<f64>,
    kernel: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
}

#[derive(Deserialize, Serialize)]
struct PolicyAlphabetsDoc {
    u: usize,
    v: usize,
}

#[derive(Deserialize, Serialize)]
struct PolicyDoc {
    alphabets: PolicyAlphabetsDoc,
    px1: Vec<f64>,
    cond: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
}

fn parse_error(err: serde_json::Error) -> ChannelError {
    let msg = err.to_string();
    if msg.contains("missing field") {
        // serde reports `missing field `name` at line L column C`
        ChannelError::MissingField(msg)
    } else {
        ChannelError::Parse(format!("{msg} (line {}, column {})", err.line(), err.column()))
    }
}

/// Checks a tensor slice: rejects entries < 0 and sums off by more than the
/// input tolerance; re-normalizes small drift, recording a warning.
fn normalize_slice(
    field: &str,
    at: String,
    slice: &mut [f64],
    warnings: &mut Vec<String>,
) -> Result<(), ChannelError> {
    let mut sum = 0.0;
    for &p in slice.iter() {
        if p < 0.0 {
            return Err(ChannelError::Negative { field: field.into(), value: p, at });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > INPUT_NORM_TOL {
        return Err(ChannelError::Normalization {
            field: field.into(),
            sum,
            at,
            tol: INPUT_NORM_TOL,
        });
    }
    if sum != 1.0 {
        for p in slice.iter_mut() {
            *p /= sum;
        }
        if (sum - 1.0).abs() > 1e-15 {
            warnings.push(format!(
                "{field}{at} re-normalized from sum {sum}"
            ));
        }
    }
    Ok(())
}

/// Flattens a 5-deep nested array, checking every level's length.
fn flatten5(
    field: &str,
    nested: &[Vec<Vec<Vec<Vec<f64>>>>],
    dims: [usize; 5],
) -> Result<Vec<f64>, ChannelError> {
    let dim_err = |expected: usize, got: usize, at: String| ChannelError::Dimension {
        field: field.into(),
        expected,
        got,
        at,
    };
    if nested.len() != dims[0] {
        return Err(dim_err(dims[0], nested.len(), String::new()));
    }
    let mut flat = Vec::with_capacity(dims.iter().product());
    for (i0, l1) in nested.iter().enumerate() {
        if l1.len() != dims[1] {
            return Err(dim_err(dims[1], l1.len(), format!(" at [{i0}]")));
        }
        for (i1, l2) in l1.iter().enumerate() {
            if l2.len() != dims[2] {
                return Err(dim_err(dims[2], l2.len(), format!(" at [{i0}][{i1}]")));
            }
            for (i2, l3) in l2.iter().enumerate() {
                if l3.len() != dims[3] {
                    return Err(dim_err(dims[3], l3.len(), format!(" at [{i0}][{i1}][{i2}]")));
                }
                for (i3, l4) in l3.iter().enumerate() {
                    if l4.len() != dims[4] {
                        return Err(dim_err(
                            dims[4],
                            l4.len(),
                            format!(" at [{i0}][{i1}][{i2}][{i3}]"),
                        ));
                    }
                    flat.extend_from_slice(l4);
                }
            }
        }
    }
    Ok(flat)
}

fn nest5(flat: &[f64], dims: [usize; 5]) -> Vec<Vec<Vec<Vec<Vec<f64>>>>> {
    let mut it = flat.iter();
    (0..dims[0])
        .map(|_| {
            (0..dims[1])
                .map(|_| {
                    (0..dims[2])
                        .map(|_| {
                            (0..dims[3])
                                .map(|_| (0..dims[4]).map(|_| *it.next().unwrap()).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Parses the JSON channel-spec format. Returns the spec plus any
/// re-normalization warnings.
pub fn parse_channel_spec(text: &str) -> Result<(ChannelSpec, Vec<String>), ChannelError> {
    let doc: ChannelDoc = serde_json::from_str(text).map_err(parse_error)?;
    let a = &doc.alphabets;
    let mut warnings = Vec::new();
    if doc.state_pmf.len() != a.s {
        return Err(ChannelError::Dimension {
            field: "state_pmf".into(),
            expected: a.s,
            got: doc.state_pmf.len(),
            at: String::new(),
        });
    }
    let mut state_pmf = doc.state_pmf.clone();
    normalize_slice("state_pmf", String::new(), &mut state_pmf, &mut warnings)?;
    let mut kernel = flatten5("kernel", &doc.kernel, [a.s, a.x1, a.x2, a.y1, a.y2])?;
    let slice_len = a.y1 * a.y2;
    for s in 0..a.s {
        for x1 in 0..a.x1 {
            for x2 in 0..a.x2 {
                let start = ((s * a.x1 + x1) * a.x2 + x2) * slice_len;
                normalize_slice(
                    "kernel",
                    format!(" at (s={s}, x1={x1}, x2={x2})"),
                    &mut kernel[start..start + slice_len],
                    &mut warnings,
                )?;
            }
        }
    }
    let spec = ChannelSpec::new(a.x1, a.x2, a.s, a.y1, a.y2, state_pmf, kernel)?;
    Ok((spec, warnings))
}

/// Parses the JSON policy format. Alphabet sizes for s, x1, x2 are inferred
/// from the tensor shape.
pub fn parse_policy(text: &str) -> Result<(AuxiliaryPolicy, Vec<String>), ChannelError> {
    let doc: PolicyDoc = serde_json::from_str(text).map_err(parse_error)?;
    let nu = doc.alphabets.u;
    let nv = doc.alphabets.v;
    let nx1 = doc.px1.len();
    let ns = doc.cond.len();
    if nx1 == 0 {
        return Err(ChannelError::Dimension {
            field: "px1".into(),
            expected: 1,
            got: 0,
            at: String::new(),
        });
    }
    if ns == 0 {
        return Err(ChannelError::Dimension {
            field: "cond".into(),
            expected: 1,
            got: 0,
            at: String::new(),
        });
    }
    let nx2 = doc
        .cond
        .first()
        .and_then(|l| l.first())
        .and_then(|l| l.first())
        .and_then(|l| l.first())
        .map(Vec::len)
        .unwrap_or(0);
    if nx2 == 0 {
        return Err(ChannelError::Dimension {
            field: "cond".into(),
            expected: 1,
            got: 0,
            at: " innermost (x2) level".into(),
        });
    }
    let mut warnings = Vec::new();
    let mut px1 = doc.px1.clone();
    normalize_slice("px1", String::new(), &mut px1, &mut warnings)?;
    let mut cond = flatten5("cond", &doc.cond, [ns, nx1, nu, nv, nx2])?;
    let slice_len = nu * nv * nx2;
    for s in 0..ns {
        for x1 in 0..nx1 {
            let start = (s * nx1 + x1) * slice_len;
            normalize_slice(
                "cond",
                format!(" at (s={s}, x1={x1})"),
                &mut cond[start..start + slice_len],
                &mut warnings,
            )?;
        }
    }
    let policy = AuxiliaryPolicy::new(nu, nv, ns, nx1, nx2, px1, cond)?;
    Ok((policy, warnings))
}

pub fn serialize_channel_spec(spec: &ChannelSpec) -> String {
    let doc = ChannelDoc {
        alphabets: ChannelAlphabetsDoc {
            x1: spec.nx1,
            x2: spec.nx2,
            s: spec.ns,
            y1: spec.ny1,
            y2: spec.ny2,
        },
        state_pmf: spec.state_pmf.clone(),
        kernel: nest5(&spec.kernel, [spec.ns, spec.nx1, spec.nx2, spec.ny1, spec.ny2]),
    };
    serde_json::to_string_pretty(&doc).expect("channel doc serializes")
}

pub fn serialize_policy(policy: &AuxiliaryPolicy) -> String {
    let doc = PolicyDoc {
        alphabets: PolicyAlphabetsDoc { u: policy.nu, v: policy.nv },
        px1: policy.px1.clone(),
        cond: nest5(
            &policy.cond,
            [policy.ns, policy.nx1, policy.nu, policy.nv, policy.nx2],
        ),
    };
    serde_json::to_string_pretty(&doc).expect("policy doc serializes")
}

// ---------------------------------------------------------------------------
// Joint assembly
// ---------------------------------------------------------------------------

/// Assembles the full joint over (s, u, v, x1, x2, y1, y2) from the product
/// factorization, with the default cell cap.
pub fn build_joint(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
) -> Result<JointDistribution, ChannelError> {
    build_joint_with_cap(spec, policy, DEFAULT_CELL_CAP)
}

pub fn build_joint_with_cap(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
    cap: usize,
) -> Result<JointDistribution, ChannelError> {
    let cells = spec.ns * policy.nu * policy.nv * spec.nx1 * spec.nx2 * spec.ny1 * spec.ny2;
    if cells > cap {
        return Err(ChannelError::Prob(ProbError::CellCapExceeded { cells, cap }));
    }
    let mut mass = Vec::new();
    fill_joint_mass(spec, policy, &mut mass)?;
    let vars = vec![
        VariableId::new("s", spec.ns),
        VariableId::new("u", policy.nu),
        VariableId::new("v", policy.nv),
        VariableId::new("x1", spec.nx1),
        VariableId::new("x2", spec.nx2),
        VariableId::new("y1", spec.ny1),
        VariableId::new("y2", spec.ny2),
    ];
    Ok(JointDistribution::with_cap(vars, mass, cap)?)
}

/// Writes the joint mass into `out` in canonical (s,u,v,x1,x2,y1,y2) order,
/// reusing its allocation. Callers are responsible for any cell-cap policy.
pub fn fill_joint_mass(
    spec: &ChannelSpec,
    policy: &AuxiliaryPolicy,
    out: &mut Vec<f64>,
) -> Result<(), ChannelError> {
    if policy.ns != spec.ns || policy.nx1 != spec.nx1 || policy.nx2 != spec.nx2 {
        return Err(ChannelError::SizeMismatch(format!(
            "policy is over (s={}, x1={}, x2={}) but channel has (s={}, x1={}, x2={})",
            policy.ns, policy.nx1, policy.nx2, spec.ns, spec.nx1, spec.nx2
        )));
    }
    let cells = spec.ns * policy.nu * policy.nv * spec.nx1 * spec.nx2 * spec.ny1 * spec.ny2;
    out.clear();
    out.reserve(cells);
    for s in 0..spec.ns {
        let ps = spec.state_pmf[s];
        for u in 0..policy.nu {
            for v in 0..policy.nv {
                for x1 in 0..spec.nx1 {
                    let base = ps * policy.px1[x1];
                    for x2 in 0..spec.nx2 {
                        let w = base * policy.cond_at(s, x1, u, v, x2);
                        for y1 in 0..spec.ny1 {
                            for y2 in 0..spec.ny2 {
                                out.push(w * spec.kernel_at(s, x1, x2, y1, y2));
                            }
                        }
                    }
                }
            }
        }
    }
    let total: f64 = out.iter().sum();
    if (total - 1.0).abs() > crate::prob::NORM_TOL {
        return Err(ChannelError::Normalization {
            field: "joint".into(),
            sum: total,
            at: String::new(),
            tol: crate::prob::NORM_TOL,
        });
    }
    Ok(())
}

/// True iff the joint respects the memoryless factorization: (y1,y2) carry
/// no information about (u,v) beyond (s,x1,x2).
pub fn independence_check(joint: &JointDistribution) -> Result<bool, ChannelError> {
    let cmi = joint.conditional_mi(&["y1", "y2"], &["u", "v"], &["s", "x1", "x2"])?;
    Ok(cmi <= 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Binary noiseless channel: y1 = x1, y2 = x2, |S| = 1.
    pub(crate) fn noiseless_spec() -> ChannelSpec {
        let mut kernel = vec![0.0; 2 * 2 * 2 * 2];
        for x1 in 0..2 {
            for x2 in 0..2 {
                let idx = ((x1 * 2 + x2) * 2 + x1) * 2 + x2;
                kernel[idx] = 1.0;
            }
        }
        ChannelSpec::new(2, 2, 1, 2, 2, vec![1.0], kernel).unwrap()
    }

    fn simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        let mut row: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let sum: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= sum;
        }
        row
    }

    fn random_spec(rng: &mut ChaCha8Rng, ns: usize) -> ChannelSpec {
        let (nx1, nx2, ny1, ny2) = (2, 2, 2, 2);
        let state_pmf = simplex(rng, ns);
        let mut kernel = Vec::new();
        for _ in 0..ns * nx1 * nx2 {
            kernel.extend(simplex(rng, ny1 * ny2));
        }
        ChannelSpec::new(nx1, nx2, ns, ny1, ny2, state_pmf, kernel).unwrap()
    }

    fn random_policy(rng: &mut ChaCha8Rng, ns: usize, nu: usize, nv: usize) -> AuxiliaryPolicy {
        let (nx1, nx2) = (2, 2);
        let px1 = simplex(rng, nx1);
        let mut cond = Vec::new();
        for _ in 0..ns * nx1 {
            cond.extend(simplex(rng, nu * nv * nx2));
        }
        AuxiliaryPolicy::new(nu, nv, ns, nx1, nx2, px1, cond).unwrap()
    }

    #[test]
    fn noiseless_spec_is_valid() {
        assert!(noiseless_spec().validate().is_empty());
    }

    #[test]
    fn bad_kernel_slice_is_reported_with_indices() {
        let mut spec = noiseless_spec();
        // Scale the (s=0, x1=1, x2=0) slice to sum 0.9.
        for y1 in 0..2 {
            for y2 in 0..2 {
                let idx = ((2 + 0) * 2 + y1) * 2 + y2;
                spec.kernel[idx] *= 0.9;
            }
        }
        let violations = spec.validate();
        assert_eq!(violations.len(), 1);
        match &violations[0] {
            Violation::KernelSliceSum { s, x1, x2, sum } => {
                assert_eq!((*s, *x1, *x2), (0, 1, 0));
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected violation {other:?}"),
        }
    }

    #[test]
    fn random_specs_from_simplex_sampler_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let spec = random_spec(&mut rng, 2);
            assert!(spec.validate().is_empty());
            let policy = random_policy(&mut rng, 2, 2, 2);
            assert!(policy.validate().is_empty());
        }
    }

    #[test]
    fn build_joint_single_cell_is_point_mass() {
        let spec = ChannelSpec::new(1, 1, 1, 1, 1, vec![1.0], vec![1.0]).unwrap();
        let policy = AuxiliaryPolicy::new(1, 1, 1, 1, 1, vec![1.0], vec![1.0]).unwrap();
        let joint = build_joint(&spec, &policy).unwrap();
        assert_eq!(joint.mass(), &[1.0]);
        assert!(independence_check(&joint).unwrap());
    }

    #[test]
    fn build_joint_product_form_matches_marginal_products() {
        // Deterministic kernel and fully product-form policy: each joint cell
        // must equal the product of its marginals.
        let spec = noiseless_spec();
        // u const, v uniform independent, x2 = v, x1 uniform.
        let mut cond = vec![0.0; 1 * 2 * 1 * 2 * 2];
        for x1 in 0..2 {
            for v in 0..2 {
                cond[((x1 * 2) + v) * 2 + v] = 0.5;
            }
        }
        let policy = AuxiliaryPolicy::new(1, 2, 1, 2, 2, vec![0.5, 0.5], cond).unwrap();
        let joint = build_joint(&spec, &policy).unwrap();
        let px1 = joint.marginalize(&["x1"]).unwrap();
        let pv = joint.marginalize(&["v"]).unwrap();
        let pair = joint.marginalize(&["v", "x1"]).unwrap();
        for v in 0..2 {
            for x1 in 0..2 {
                let got = pair.mass()[v * 2 + x1];
                let want = pv.mass()[v] * px1.mass()[x1];
                assert!((got - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn build_joint_marginals_match_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let spec = random_spec(&mut rng, 2);
            let policy = random_policy(&mut rng, 2, 2, 3);
            let joint = build_joint(&spec, &policy).unwrap();
            let total: f64 = joint.mass().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            let ps = joint.marginalize(&["s"]).unwrap();
            for s in 0..2 {
                assert!((ps.mass()[s] - spec.state_pmf[s]).abs() < 1e-12);
            }
            let px1 = joint.marginalize(&["x1"]).unwrap();
            for x1 in 0..2 {
                assert!((px1.mass()[x1] - policy.px1[x1]).abs() < 1e-12);
            }
            assert!(independence_check(&joint).unwrap());
        }
    }

    #[test]
    fn build_joint_size_mismatch_errors() {
        let spec = noiseless_spec();
        let policy = AuxiliaryPolicy::new(1, 1, 2, 2, 2, vec![0.5, 0.5], vec![0.5; 8]).unwrap();
        assert!(matches!(
            build_joint(&spec, &policy),
            Err(ChannelError::SizeMismatch(_))
        ));
    }

    #[test]
    fn perturbed_joint_fails_independence_check() {
        let spec = noiseless_spec();
        let mut cond = vec![0.0; 8];
        for x1 in 0..2 {
            for v in 0..2 {
                cond[((x1 * 2) + v) * 2 + v] = 0.5;
            }
        }
        let policy = AuxiliaryPolicy::new(1, 2, 1, 2, 2, vec![0.5, 0.5], cond).unwrap();
        let joint = build_joint(&spec, &policy).unwrap();
        // Move 0.01 between two cells that share (s,x1,x2) but differ in
        // (v, y2), breaking the kernel factorization.
        let mut mass = joint.mass().to_vec();
        // Axis order (s,u,v,x1,x2,y1,y2), all binary except |s|=|u|=1:
        // cell 0 is (v=0,x1=0,x2=0,y1=0,y2=0); cell 17 is the same slice
        // with v=1, y2=1 and carries no mass under the factorization.
        assert!(mass[0] > 0.01 && mass[17] == 0.0);
        mass[0] -= 0.01;
        mass[17] += 0.01;
        let perturbed =
            JointDistribution::new(joint.variables().to_vec(), mass).unwrap();
        // Oracle: the conditional MI of the perturbed tensor is visibly
        // positive.
        let cmi = perturbed
            .conditional_mi(&["y1", "y2"], &["u", "v"], &["s", "x1", "x2"])
            .unwrap();
        assert!(cmi > 1e-10);
        assert!(!independence_check(&perturbed).unwrap());
    }

    #[test]
    fn parse_minimal_binary_spec() {
        let text = r#"{
            "alphabets": {"x1": 2, "x2": 2, "s": 1, "y1": 2, "y2": 2},
            "state_pmf": [1.0],
            "kernel": [[
                [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [0.0, 0.0]]],
                [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]]
            ]]
        }"#;
        let (spec, warnings) = parse_channel_spec(text).unwrap();
        assert!(warnings.is_empty());
        assert_eq!((spec.nx1, spec.nx2, spec.ns, spec.ny1, spec.ny2), (2, 2, 1, 2, 2));
        assert_eq!(spec, noiseless_spec());
    }

    #[test]
    fn parse_missing_field_names_it() {
        let text = r#"{"alphabets": {"x1": 2, "x2": 2, "s": 1, "y1": 2, "y2": 2}, "kernel": []}"#;
        match parse_channel_spec(text) {
            Err(ChannelError::MissingField(msg)) => assert!(msg.contains("state_pmf")),
            other => panic!("expected missing-field error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_bad_normalization() {
        let text = r#"{
            "alphabets": {"x1": 1, "x2": 1, "s": 1, "y1": 2, "y2": 1},
            "state_pmf": [1.0],
            "kernel": [[[[[0.7], [0.2]]]]]
        }"#;
        assert!(matches!(
            parse_channel_spec(text),
            Err(ChannelError::Normalization { .. })
        ));
    }

    #[test]
    fn parse_renormalizes_small_drift_with_warning() {
        let text = r#"{
            "alphabets": {"x1": 1, "x2": 1, "s": 1, "y1": 2, "y2": 1},
            "state_pmf": [1.0],
            "kernel": [[[[[0.5000000001], [0.5]]]]]
        }"#;
        let (spec, warnings) = parse_channel_spec(text).unwrap();
        assert_eq!(warnings.len(), 1);
        let sum: f64 = spec.kernel.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn serialize_parse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let spec = random_spec(&mut rng, 2);
            let (parsed, _) = parse_channel_spec(&serialize_channel_spec(&spec)).unwrap();
            for (a, b) in spec.kernel.iter().zip(&parsed.kernel) {
                assert!((a - b).abs() < 1e-15);
            }
            for (a, b) in spec.state_pmf.iter().zip(&parsed.state_pmf) {
                assert!((a - b).abs() < 1e-15);
            }
            let policy = random_policy(&mut rng, 2, 3, 2);
            let (parsed, _) = parse_policy(&serialize_policy(&policy)).unwrap();
            assert_eq!(policy.nu, parsed.nu);
            assert_eq!(policy.nv, parsed.nv);
            for (a, b) in policy.cond.iter().zip(&parsed.cond) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn default_aux_sizes_follow_alphabets() {
        let spec = noiseless_spec();
        assert_eq!(default_aux_sizes(&spec), (3, 4));
    }
}
