//! Exact arithmetic over finite joint probability mass functions:
//! construction, marginalization, conditioning, entropy, and (conditional)
//! mutual information. All information quantities are in bits (base-2 logs),
//! with the continuity conventions 0·log 0 = 0 and 0·log(0/0) = 0.

use thiserror::Error;

/// Default cap on dense tensor cells. Alphabet products beyond this are
/// rejected with [`ProbError::CellCapExceeded`].
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

/// Absolute tolerance for normalization checks.
pub const NORM_TOL: f64 = 1e-12;

/// Entries below this are treated as exact zero inside log terms.
const ZERO_FLOOR: f64 = 1e-15;

/// Negative information values no larger than this in magnitude are clamped
/// to zero as round-off; anything more negative is an internal inconsistency.
const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ProbError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable set must not be empty")]
    EmptyVariableSet,
    #[error("variable sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("variable `{0}` must have cardinality >= 1")]
    ZeroCardinality(String),
    #[error("mass tensor has {got} entries, expected {expected}")]
    ShapeMismatch { got: usize, expected: usize },
    #[error("negative mass {value:e} at linear cell {cell}")]
    NegativeMass { value: f64, cell: usize },
    #[error("mass sums to {sum} but must be 1 within {tol:e}")]
    NotNormalized { sum: f64, tol: f64 },
    #[error("tensor would need {cells} cells, above the cap of {cap}")]
    CellCapExceeded { cells: usize, cap: usize },
    #[error("information value {value:e} is negative beyond round-off; distribution is inconsistent")]
    NegativeInformation { value: f64 },
    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,
    #[error("value {value} out of range for variable `{name}` (cardinality {cardinality})")]
    ValueOutOfRange {
        name: String,
        value: usize,
        cardinality: usize,
    },
    #[error("malformed sequence labeling: {0}")]
    MalformedSequenceJoint(String),
}

/// A named finite-alphabet variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VariableId {
    pub name: String,
    pub cardinality: usize,
}

impl VariableId {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Self {
        Self {
            name: name.into(),
            cardinality,
        }
    }
}

/// A dense joint pmf over an ordered list of variables.
///
/// The mass tensor is row-major in the declared variable order: the last
/// variable varies fastest. Values are immutable after construction; all
/// operations return new distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    variables: Vec<VariableId>,
    mass: Vec<f64>,
}

fn axis_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

impl JointDistribution {
    /// Builds a distribution with the default cell cap.
    pub fn new(variables: Vec<VariableId>, mass: Vec<f64>) -> Result<Self, ProbError> {
        Self::with_cap(variables, mass, DEFAULT_CELL_CAP)
    }

    /// Builds a distribution with an explicit cell cap.
    pub fn with_cap(
        variables: Vec<VariableId>,
        mass: Vec<f64>,
        cap: usize,
    ) -> Result<Self, ProbError> {
        let mut cells = 1usize;
        for v in &variables {
            if v.cardinality == 0 {
                return Err(ProbError::ZeroCardinality(v.name.clone()));
            }
            for w in &variables {
                if !std::ptr::eq(v, w) && v.name == w.name {
                    return Err(ProbError::DuplicateVariable(v.name.clone()));
                }
            }
            cells = cells
                .checked_mul(v.cardinality)
                .ok_or(ProbError::CellCapExceeded { cells: usize::MAX, cap })?;
        }
        if cells > cap {
            return Err(ProbError::CellCapExceeded { cells, cap });
        }
        if mass.len() != cells {
            return Err(ProbError::ShapeMismatch {
                got: mass.len(),
                expected: cells,
            });
        }
        let mut sum = 0.0;
        for (i, &p) in mass.iter().enumerate() {
            if p < 0.0 {
                return Err(ProbError::NegativeMass { value: p, cell: i });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(ProbError::NotNormalized { sum, tol: NORM_TOL });
        }
        Ok(Self { variables, mass })
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn axis_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    fn dims(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.cardinality).collect()
    }

    /// Resolves names to axis indices in declared-variable order.
    fn resolve(&self, names: &[&str]) -> Result<Vec<usize>, ProbError> {
        let mut axes = Vec::with_capacity(names.len());
        for name in names {
            let axis = self
                .axis_of(name)
                .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))?;
            if axes.contains(&axis) {
                return Err(ProbError::DuplicateVariable(name.to_string()));
            }
            axes.push(axis);
        }
        axes.sort_unstable();
        Ok(axes)
    }

    /// Sums out every variable not listed in `keep`. The retained variables
    /// stay in their original relative order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointDistribution, ProbError> {
        if keep.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        let keep_axes = self.resolve(keep)?;
        if keep_axes.len() == self.variables.len() {
            return Ok(self.clone());
        }
        Ok(self.marginalize_axes(&keep_axes))
    }

    /// Marginalization onto sorted axis indices; callers guarantee validity.
    fn marginalize_axes(&self, keep_axes: &[usize]) -> JointDistribution {
        let dims = self.dims();
        let out_vars: Vec<VariableId> =
            keep_axes.iter().map(|&a| self.variables[a].clone()).collect();
        let out_dims: Vec<usize> = out_vars.iter().map(|v| v.cardinality).collect();
        let out_strides = axis_strides(&out_dims);
        // Per-source-axis contribution to the output linear index.
        let mut contrib = vec![0usize; dims.len()];
        for (k, &a) in keep_axes.iter().enumerate() {
            contrib[a] = out_strides[k];
        }
        let out_cells: usize = out_dims.iter().product();
        let mut out = vec![0.0f64; out_cells];
        let mut idx = vec![0usize; dims.len()];
        let mut out_index = 0usize;
        for &p in &self.mass {
            out[out_index] += p;
            // Increment the multi-index, updating out_index incrementally.
            for axis in (0..dims.len()).rev() {
                idx[axis] += 1;
                out_index += contrib[axis];
                if idx[axis] < dims[axis] {
                    break;
                }
                out_index -= contrib[axis] * dims[axis];
                idx[axis] = 0;
            }
        }
        JointDistribution {
            variables: out_vars,
            mass: out,
        }
    }

    /// Conditions on an assignment of some variables and reweights, returning
    /// the conditional pmf over the remaining variables.
    pub fn condition(&self, given: &[(&str, usize)]) -> Result<JointDistribution, ProbError> {
        if given.is_empty() || given.len() >= self.variables.len() {
            return Err(ProbError::EmptyVariableSet);
        }
        let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(given.len());
        for &(name, value) in given {
            let axis = self
                .axis_of(name)
                .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))?;
            if fixed.iter().any(|&(a, _)| a == axis) {
                return Err(ProbError::DuplicateVariable(name.to_string()));
            }
            let card = self.variables[axis].cardinality;
            if value >= card {
                return Err(ProbError::ValueOutOfRange {
                    name: name.to_string(),
                    value,
                    cardinality: card,
                });
            }
            fixed.push((axis, value));
        }
        let dims = self.dims();
        let strides = axis_strides(&dims);
        let rest_axes: Vec<usize> = (0..dims.len())
            .filter(|a| !fixed.iter().any(|&(f, _)| f == *a))
            .collect();
        let base: usize = fixed.iter().map(|&(a, v)| strides[a] * v).sum();
        let out_vars: Vec<VariableId> =
            rest_axes.iter().map(|&a| self.variables[a].clone()).collect();
        let out_dims: Vec<usize> = out_vars.iter().map(|v| v.cardinality).collect();
        let out_cells: usize = out_dims.iter().product();
        let mut out = vec![0.0f64; out_cells];
        let mut idx = vec![0usize; rest_axes.len()];
        for slot in out.iter_mut() {
            let offset: usize = idx
                .iter()
                .zip(&rest_axes)
                .map(|(&i, &a)| i * strides[a])
                .sum();
            *slot = self.mass[base + offset];
            for k in (0..idx.len()).rev() {
                idx[k] += 1;
                if idx[k] < out_dims[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        let total: f64 = out.iter().sum();
        if total < ZERO_FLOOR {
            return Err(ProbError::ZeroProbabilityEvent);
        }
        for p in out.iter_mut() {
            *p /= total;
        }
        Ok(JointDistribution {
            variables: out_vars,
            mass: out,
        })
    }

    /// Shannon entropy H(vars) in bits.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64, ProbError> {
        if vars.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        let axes = self.resolve(vars)?;
        if axes.len() == self.variables.len() {
            return Ok(entropy_of(&self.mass));
        }
        Ok(entropy_of(&self.marginalize_axes(&axes).mass))
    }

    /// Mutual information I(a; b) in bits via H(a) + H(b) - H(a,b).
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64, ProbError> {
        check_disjoint(&[a, b])?;
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        let ab: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
        let value = self.entropy(a)? + self.entropy(b)? - self.entropy(&ab)?;
        clamp_information(value)
    }

    /// Mutual information computed directly from the KL form
    /// sum p(a,b) log2 [ p(a,b) / (p(a) p(b)) ]; an independent route used
    /// for cross-checking the entropy-combination formula.
    pub fn mutual_information_kl(&self, a: &[&str], b: &[&str]) -> Result<f64, ProbError> {
        check_disjoint(&[a, b])?;
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        let ab: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
        let joint_ab = self.marginalize(&ab)?;
        let pa = joint_ab.marginalize(a)?;
        let pb = joint_ab.marginalize(b)?;
        let a_axes = joint_ab.resolve(a)?;
        let b_axes = joint_ab.resolve(b)?;
        let dims = joint_ab.dims();
        let a_dims: Vec<usize> = a_axes.iter().map(|&x| dims[x]).collect();
        let b_dims: Vec<usize> = b_axes.iter().map(|&x| dims[x]).collect();
        let a_strides = axis_strides(&a_dims);
        let b_strides = axis_strides(&b_dims);
        let mut idx = vec![0usize; dims.len()];
        let mut value = 0.0;
        for &p in &joint_ab.mass {
            if p > ZERO_FLOOR {
                let ia: usize = a_axes
                    .iter()
                    .enumerate()
                    .map(|(k, &ax)| idx[ax] * a_strides[k])
                    .sum();
                let ib: usize = b_axes
                    .iter()
                    .enumerate()
                    .map(|(k, &ax)| idx[ax] * b_strides[k])
                    .sum();
                value += p * (p / (pa.mass[ia] * pb.mass[ib])).log2();
            }
            for axis in (0..dims.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        clamp_information(value)
    }

    /// Conditional mutual information I(a; b | c) in bits. An empty `c`
    /// reduces to plain mutual information.
    pub fn conditional_mi(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64, ProbError> {
        check_disjoint(&[a, b, c])?;
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        if c.is_empty() {
            return self.mutual_information(a, b);
        }
        let ac: Vec<&str> = a.iter().chain(c.iter()).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c.iter()).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b.iter()).chain(c.iter()).copied().collect();
        let value =
            self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?;
        clamp_information(value)
    }

    /// Conditional mutual information from the KL form, for cross-checks.
    pub fn conditional_mi_kl(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64, ProbError> {
        check_disjoint(&[a, b, c])?;
        if a.is_empty() || b.is_empty() {
            return Err(ProbError::EmptyVariableSet);
        }
        if c.is_empty() {
            return self.mutual_information_kl(a, b);
        }
        let ac: Vec<&str> = a.iter().chain(c.iter()).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c.iter()).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b.iter()).chain(c.iter()).copied().collect();
        let joint = self.marginalize(&abc)?;
        let pac = joint.marginalize(&ac)?;
        let pbc = joint.marginalize(&bc)?;
        let pc = joint.marginalize(c)?;
        let dims = joint.dims();
        let proj = |target: &JointDistribution| -> (Vec<usize>, Vec<usize>) {
            let axes: Vec<usize> = target
                .variables
                .iter()
                .map(|v| joint.axis_of(&v.name).expect("subset of joint"))
                .collect();
            let strides = axis_strides(&target.dims());
            (axes, strides)
        };
        let (ac_axes, ac_strides) = proj(&pac);
        let (bc_axes, bc_strides) = proj(&pbc);
        let (c_axes, c_strides) = proj(&pc);
        let mut idx = vec![0usize; dims.len()];
        let mut value = 0.0;
        for &p in &joint.mass {
            if p > ZERO_FLOOR {
                let lookup = |axes: &[usize], strides: &[usize]| -> usize {
                    axes.iter()
                        .enumerate()
                        .map(|(k, &ax)| idx[ax] * strides[k])
                        .sum()
                };
                let p_ac = pac.mass[lookup(&ac_axes, &ac_strides)];
                let p_bc = pbc.mass[lookup(&bc_axes, &bc_strides)];
                let p_c = pc.mass[lookup(&c_axes, &c_strides)];
                value += p * (p * p_c / (p_ac * p_bc)).log2();
            }
            for axis in (0..dims.len()).rev() {
                idx[axis] += 1;
                if idx[axis] < dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        clamp_information(value)
    }
}

fn entropy_of(mass: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in mass {
        if p > ZERO_FLOOR {
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

pub(crate) fn clamp_information(value: f64) -> Result<f64, ProbError> {
    if value >= 0.0 {
        Ok(value)
    } else if value > -ROUNDOFF_FLOOR {
        Ok(0.0)
    } else {
        Err(ProbError::NegativeInformation { value })
    }
}

fn check_disjoint(sets: &[&[&str]]) -> Result<(), ProbError> {
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            for name in *a {
                if b.contains(name) {
                    return Err(ProbError::OverlappingSets(name.to_string()));
                }
            }
        }
    }
    Ok(())
}

/// Absolute residual of the Csiszar sum identity over a joint of two
/// length-n sequences. The joint must carry exactly the variables
/// `y1_1..y1_n` and `y2_1..y2_n`; the residual is zero (up to round-off)
/// for every valid joint.
pub fn csiszar_sum_residual(joint: &JointDistribution) -> Result<f64, ProbError> {
    let vars = joint.variables();
    if vars.len() < 2 || vars.len() % 2 != 0 {
        return Err(ProbError::MalformedSequenceJoint(format!(
            "need an even number of sequence variables, got {}",
            vars.len()
        )));
    }
    let n = vars.len() / 2;
    let y1: Vec<String> = (1..=n).map(|i| format!("y1_{i}")).collect();
    let y2: Vec<String> = (1..=n).map(|i| format!("y2_{i}")).collect();
    for name in y1.iter().chain(y2.iter()) {
        if joint.axis_of(name).is_none() {
            return Err(ProbError::MalformedSequenceJoint(format!(
                "missing variable `{name}` for n = {n}"
            )));
        }
    }
    let mut forward = 0.0; // sum_i I(y2^{i-1}; y1_i | y1_{i+1..n})
    let mut backward = 0.0; // sum_i I(y1_{i+1..n}; y2_i | y2^{i-1})
    for i in 1..=n {
        let past2: Vec<&str> = y2[..i - 1].iter().map(String::as_str).collect();
        let future1: Vec<&str> = y1[i..].iter().map(String::as_str).collect();
        if !past2.is_empty() {
            forward += joint.conditional_mi(&past2, &[y1[i - 1].as_str()], &future1)?;
        }
        if !future1.is_empty() {
            backward += joint.conditional_mi(&future1, &[y2[i - 1].as_str()], &past2)?;
        }
    }
    Ok((forward - backward).abs())
}
