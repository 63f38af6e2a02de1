//! Stochastic operators on the simplex.
//!
//! [`OperatorSpec`] is a tree: quadratic tensors, coordinate permutations and
//! linear doubly stochastic maps are leaves, the two closed-form families are
//! evaluated directly, and convex mixes / permutation compositions stay lazy
//! so the generator decomposition is never lost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::SimplexPoint;

/// Tolerance on row and column sums of stochastic inputs.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;
/// Largest drift of an applied operator's coordinate sum that is renormalized
/// away rather than reported.
pub const OUTPUT_SUM_TOLERANCE: f64 = 1e-10;

fn clamp_nonneg(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite {what} entry")));
    }
    if v < 0.0 {
        if v < -crate::simplex::CLAMP_TOLERANCE {
            return Err(Error::InvalidArgument(format!("negative {what} entry {v:e}")));
        }
        return Ok(0.0);
    }
    Ok(v)
}

/// Symmetric cubic array of heredity coefficients `p[i][j][k]`, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct QsoTensor {
    m: usize,
    p: Vec<f64>,
}

impl QsoTensor {
    pub fn new(p: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let m = p.len();
        let mut flat = Vec::with_capacity(m * m * m);
        for (i, plane) in p.iter().enumerate() {
            if plane.len() != m {
                return Err(Error::InvalidTensor(format!("p[{i}] has {} rows, expected {m}", plane.len())));
            }
            for (j, row) in plane.iter().enumerate() {
                if row.len() != m {
                    return Err(Error::InvalidTensor(format!(
                        "p[{i}][{j}] has {} entries, expected {m}",
                        row.len()
                    )));
                }
                flat.extend_from_slice(row);
            }
        }
        Self::from_flat(m, flat)
    }

    /// Builds from a flat array indexed `(i * m + j) * m + k`. Symmetrizes in
    /// `(i, j)`, clamps tiny negatives and renormalizes each `(i, j)` row.
    pub fn from_flat(m: usize, mut p: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyDimension);
        }
        if p.len() != m * m * m {
            return Err(Error::InvalidTensor(format!("expected {} entries, found {}", m * m * m, p.len())));
        }
        for v in p.iter_mut() {
            *v = clamp_nonneg(*v, "tensor").map_err(|e| Error::InvalidTensor(e.to_string()))?;
        }
        let idx = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
        for i in 0..m {
            for j in (i + 1)..m {
                for k in 0..m {
                    let s = 0.5 * (p[idx(i, j, k)] + p[idx(j, i, k)]);
                    p[idx(i, j, k)] = s;
                    p[idx(j, i, k)] = s;
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                let row = &mut p[idx(i, j, 0)..idx(i, j, 0) + m];
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
                    return Err(Error::InvalidTensor(format!(
                        "coefficients p[{}][{}][·] sum to {sum}",
                        i + 1,
                        j + 1
                    )));
                }
                if sum != 1.0 {
                    row.iter_mut().for_each(|v| *v /= sum);
                }
            }
        }
        Ok(Self { m, p })
    }

    /// `p[i][j][k] = (δ_ik + δ_jk) / 2`, whose operator is the identity.
    pub fn identity(m: usize) -> Result<Self> {
        let mut p = vec![0.0; m * m * m];
        for i in 0..m {
            for j in 0..m {
                p[(i * m + j) * m + i] += 0.5;
                p[(i * m + j) * m + j] += 0.5;
            }
        }
        Self::from_flat(m, p)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.p[(i * self.m + j) * self.m + k]
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let m = self.m;
        (0..m)
            .map(|i| (0..m).map(|j| (0..m).map(|k| self.get(i, j, k)).collect()).collect())
            .collect()
    }

    fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for i in 0..m {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let w = x[i] * x[j];
                if w == 0.0 {
                    continue;
                }
                let row = &self.p[(i * m + j) * m..(i * m + j + 1) * m];
                out.iter_mut().zip(row).for_each(|(o, c)| *o += c * w);
            }
        }
        out
    }

    fn jacobian_raw(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut jac = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    jac[k * m + j] += 2.0 * self.get(i, j, k) * x[i];
                }
            }
        }
        jac
    }
}

/// Coordinate permutation: output coordinate `k` receives input coordinate `perm[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationOperator {
    perm: Vec<usize>,
}

impl PermutationOperator {
    /// From a 0-indexed permutation.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        if perm.is_empty() {
            return Err(Error::EmptyDimension);
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidPermutation(format!("{perm:?} is not a bijection")));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    /// From the 1-indexed wire form, e.g. `[2, 1, 3]`.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return Err(Error::InvalidPermutation("entries are 1-indexed".into()));
        }
        Self::new(perm.iter().map(|p| p - 1).collect())
    }

    pub fn identity(m: usize) -> Self {
        Self { perm: (0..m).collect() }
    }

    /// Swap of coordinates `i` and `j` (0-indexed).
    pub fn transposition(m: usize, i: usize, j: usize) -> Self {
        let mut perm: Vec<usize> = (0..m).collect();
        perm.swap(i, j);
        Self { perm }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|p| p + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| k == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p] = k;
        }
        Self { perm: inv }
    }

    /// The permutation of `self ∘ inner`: `(self ∘ inner)(x)_k = x[inner[self[k]]]`.
    pub fn after(&self, inner: &PermutationOperator) -> Self {
        Self {
            perm: self.perm.iter().map(|&k| inner.perm[k]).collect(),
        }
    }

    fn permute<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| v[i]).collect()
    }

    /// Matrix `a[k][i] = δ(i, perm[k])`.
    pub fn to_matrix(&self) -> DoublyStochasticMatrix {
        let m = self.dim();
        let mut a = vec![0.0; m * m];
        for (k, &i) in self.perm.iter().enumerate() {
            a[k * m + i] = 1.0;
        }
        DoublyStochasticMatrix { m, a }
    }
}

/// Row-major square matrix with nonnegative entries whose rows and columns sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublyStochasticMatrix {
    m: usize,
    a: Vec<f64>,
}

impl DoublyStochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut a = Vec::with_capacity(m * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::NotDoublyStochastic(format!("row {} has {} entries, expected {m}", i + 1, row.len())));
            }
            for &v in row {
                a.push(clamp_nonneg(v, "matrix").map_err(|e| Error::NotDoublyStochastic(e.to_string()))?);
            }
        }
        for i in 0..m {
            let r: f64 = a[i * m..(i + 1) * m].iter().sum();
            if (r - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::NotDoublyStochastic(format!("row {} sums to {r}", i + 1)));
            }
            let c: f64 = (0..m).map(|k| a[k * m + i]).sum();
            if (c - 1.0).abs() > STOCHASTIC_TOLERANCE {
                return Err(Error::NotDoublyStochastic(format!("column {} sums to {c}", i + 1)));
            }
        }
        Ok(Self { m, a })
    }

    pub fn identity(m: usize) -> Self {
        PermutationOperator::identity(m).to_matrix()
    }

    /// All entries `1/m`.
    pub fn uniform(m: usize) -> Self {
        Self {
            m,
            a: vec![1.0 / m as f64; m * m],
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.a[row * self.m + col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .chunks(self.m)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixTerm {
    pub weight: f64,
    pub op: OperatorSpec,
}

/// Convex combination with strictly positive weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    terms: Vec<MixTerm>,
}

impl Mixture {
    pub fn terms(&self) -> &[MixTerm] {
        &self.terms
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorWire", into = "OperatorWire")]
pub enum OperatorSpec {
    Tensor(QsoTensor),
    Permutation(PermutationOperator),
    LinearDs(DoublyStochasticMatrix),
    Mix(Mixture),
    /// `V_A(x)_k = Σ_i a_ki x_i² + x_k (1 - x_k)`.
    FamilyVa(DoublyStochasticMatrix),
    /// `V(x)_k = (1/m) Σ_i x_i² + x_k (1 - x_k)`.
    FamilyUniform(usize),
    /// `x ↦ perm(inner(x))`, kept symbolic where no closed leaf form exists.
    Composed {
        perm: PermutationOperator,
        inner: Box<OperatorSpec>,
    },
}

impl OperatorSpec {
    pub fn identity(m: usize) -> Self {
        Self::Permutation(PermutationOperator::identity(m))
    }

    pub fn family_uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyDimension);
        }
        Ok(Self::FamilyUniform(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Tensor(t) => t.dim(),
            Self::Permutation(p) => p.dim(),
            Self::LinearDs(a) | Self::FamilyVa(a) => a.dim(),
            Self::Mix(mix) => mix.terms[0].op.dim(),
            Self::FamilyUniform(m) => *m,
            Self::Composed { perm, .. } => perm.dim(),
        }
    }

    /// Applies the operator and re-validates the result onto the simplex.
    pub fn apply(&self, x: &SimplexPoint) -> Result<SimplexPoint> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        let raw = self.apply_raw(x.coords());
        SimplexPoint::sanitized(raw, OUTPUT_SUM_TOLERANCE).map_err(|e| Error::OutputDrift(Box::new(e)))
    }

    /// Evaluates the polynomial map on an arbitrary vector of the right length.
    pub(crate) fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Tensor(t) => t.apply_raw(x),
            Self::Permutation(p) => p.permute(x),
            Self::LinearDs(a) => a.mul_vec(x),
            Self::Mix(mix) => {
                let mut out = vec![0.0; x.len()];
                for term in &mix.terms {
                    let y = term.op.apply_raw(x);
                    out.iter_mut().zip(y).for_each(|(o, v)| *o += term.weight * v);
                }
                out
            }
            Self::FamilyVa(a) => {
                let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
                a.mul_vec(&sq)
                    .into_iter()
                    .zip(x)
                    .map(|(s, &xk)| s + xk * (1.0 - xk))
                    .collect()
            }
            Self::FamilyUniform(m) => {
                let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / *m as f64;
                x.iter().map(|&xk| mean_sq + xk * (1.0 - xk)).collect()
            }
            Self::Composed { perm, inner } => perm.permute(&inner.apply_raw(x)),
        }
    }

    /// Row-major Jacobian `J[k][j] = ∂V_k/∂x_j` of the polynomial map at `x`.
    pub(crate) fn jacobian_raw(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        match self {
            Self::Tensor(t) => t.jacobian_raw(x),
            Self::Permutation(p) => p.to_matrix().a,
            Self::LinearDs(a) => a.a.clone(),
            Self::Mix(mix) => {
                let mut out = vec![0.0; m * m];
                for term in &mix.terms {
                    let j = term.op.jacobian_raw(x);
                    out.iter_mut().zip(j).for_each(|(o, v)| *o += term.weight * v);
                }
                out
            }
            Self::FamilyVa(a) => {
                let mut out = vec![0.0; m * m];
                for k in 0..m {
                    for j in 0..m {
                        out[k * m + j] = 2.0 * a.get(k, j) * x[j];
                    }
                    out[k * m + k] += 1.0 - 2.0 * x[k];
                }
                out
            }
            Self::FamilyUniform(dim) => {
                let mut out = vec![0.0; m * m];
                for k in 0..m {
                    for j in 0..m {
                        out[k * m + j] = 2.0 * x[j] / *dim as f64;
                    }
                    out[k * m + k] += 1.0 - 2.0 * x[k];
                }
                out
            }
            Self::Composed { perm, inner } => {
                let j = inner.jacobian_raw(x);
                let mut out = Vec::with_capacity(m * m);
                for &row in perm.as_slice() {
                    out.extend_from_slice(&j[row * m..(row + 1) * m]);
                }
                out
            }
        }
    }

    /// Canonical cubic stochastic tensor with the same action on the simplex.
    ///
    /// Linear maps embed as `p[i][j][k] = (a_ki + a_kj)/2`, the family `V_A`
    /// as `a_ki δ_ij + (δ_ik + δ_jk)(1 - δ_ij)/2`, mixes as weighted sums and
    /// compositions by permuting `k`-slices.
    pub fn to_tensor(&self) -> QsoTensor {
        let m = self.dim();
        let flat = match self {
            Self::Tensor(t) => return t.clone(),
            Self::Permutation(p) => linear_embedding(&p.to_matrix()),
            Self::LinearDs(a) => linear_embedding(a),
            Self::FamilyVa(a) => family_va_embedding(a),
            Self::FamilyUniform(m) => family_va_embedding(&DoublyStochasticMatrix::uniform(*m)),
            Self::Mix(mix) => {
                let mut acc = vec![0.0; m * m * m];
                for term in &mix.terms {
                    let t = term.op.to_tensor();
                    acc.iter_mut().zip(&t.p).for_each(|(a, v)| *a += term.weight * v);
                }
                acc
            }
            Self::Composed { perm, inner } => permute_slices(&inner.to_tensor(), perm),
        };
        QsoTensor::from_flat(m, flat).expect("embedding of a valid operator is stochastic")
    }
}

fn linear_embedding(a: &DoublyStochasticMatrix) -> Vec<f64> {
    let m = a.dim();
    let mut p = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                p[(i * m + j) * m + k] = 0.5 * (a.get(k, i) + a.get(k, j));
            }
        }
    }
    p
}

fn family_va_embedding(a: &DoublyStochasticMatrix) -> Vec<f64> {
    let m = a.dim();
    let mut p = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            let base = (i * m + j) * m;
            if i == j {
                for k in 0..m {
                    p[base + k] = a.get(k, i);
                }
            } else {
                p[base + i] = 0.5;
                p[base + j] = 0.5;
            }
        }
    }
    p
}

fn permute_slices(t: &QsoTensor, perm: &PermutationOperator) -> Vec<f64> {
    let m = t.dim();
    let mut p = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            for (k, &src) in perm.as_slice().iter().enumerate() {
                p[(i * m + j) * m + k] = t.get(i, j, src);
            }
        }
    }
    p
}

/// Convex mix `Σ w_i V_i`. Weights must be strictly positive and sum to one.
pub fn mix(ops: Vec<OperatorSpec>, weights: &[f64]) -> Result<OperatorSpec> {
    if ops.is_empty() {
        return Err(Error::InvalidWeights("a mix needs at least one operator".into()));
    }
    if ops.len() != weights.len() {
        return Err(Error::InvalidWeights(format!("{} operators but {} weights", ops.len(), weights.len())));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!(
            "weight {} is {w}; every weight of a convex mix must be strictly positive",
            i + 1
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOLERANCE {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    let m = ops[0].dim();
    if let Some(bad) = ops.iter().find(|o| o.dim() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: bad.dim(),
        });
    }
    Ok(OperatorSpec::Mix(Mixture {
        terms: ops
            .into_iter()
            .zip(weights)
            .map(|(op, &weight)| MixTerm { weight, op })
            .collect(),
    }))
}

/// `P ∘ V`. Stays within the operator's own kind where that is closed under
/// permutation (tensors, permutations, linear maps, mixes).
pub fn compose_with_permutation(perm: &PermutationOperator, op: &OperatorSpec) -> Result<OperatorSpec> {
    if perm.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: perm.dim(),
        });
    }
    if perm.is_identity() {
        return Ok(op.clone());
    }
    Ok(match op {
        OperatorSpec::Tensor(t) => OperatorSpec::Tensor(
            QsoTensor::from_flat(t.dim(), permute_slices(t, perm)).expect("permuted tensor stays stochastic"),
        ),
        OperatorSpec::Permutation(q) => OperatorSpec::Permutation(perm.after(q)),
        OperatorSpec::LinearDs(a) => {
            let rows = a.rows();
            let permuted = perm.as_slice().iter().map(|&r| rows[r].clone()).collect();
            OperatorSpec::LinearDs(DoublyStochasticMatrix::new(permuted)?)
        }
        OperatorSpec::Mix(mixture) => OperatorSpec::Mix(Mixture {
            terms: mixture
                .terms
                .iter()
                .map(|t| {
                    Ok(MixTerm {
                        weight: t.weight,
                        op: compose_with_permutation(perm, &t.op)?,
                    })
                })
                .collect::<Result<_>>()?,
        }),
        OperatorSpec::Composed { perm: outer, inner } => {
            let combined = perm.after(outer);
            if combined.is_identity() {
                (**inner).clone()
            } else {
                OperatorSpec::Composed {
                    perm: combined,
                    inner: inner.clone(),
                }
            }
        }
        OperatorSpec::FamilyVa(_) | OperatorSpec::FamilyUniform(_) => OperatorSpec::Composed {
            perm: perm.clone(),
            inner: Box::new(op.clone()),
        },
    })
}

/// The two linear bistochastic operators on `S²` whose half-half mix has no
/// 2-periodic points although each of them has many: `P1` swaps coordinates
/// 1 and 2, `P2` swaps 2 and 3.
pub fn fixture_counterexample_pair() -> (OperatorSpec, OperatorSpec) {
    let p1 = DoublyStochasticMatrix::new(vec![
        vec![0.0, 1.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .expect("permutation matrix");
    let p2 = DoublyStochasticMatrix::new(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 1.0, 0.0],
    ])
    .expect("permutation matrix");
    (OperatorSpec::LinearDs(p1), OperatorSpec::LinearDs(p2))
}

/// All `m!` coordinate permutation operators, in lexicographic order.
pub fn all_permutation_operators(m: usize) -> Vec<OperatorSpec> {
    crate::simplex::permutations(m)
        .into_iter()
        .map(|p| OperatorSpec::Permutation(PermutationOperator { perm: p }))
        .collect()
}

// Wire format

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum OperatorWire {
    Tensor { m: usize, p: Vec<Vec<Vec<f64>>> },
    Permutation { perm: Vec<usize> },
    LinearDs { a: Vec<Vec<f64>> },
    Mix { terms: Vec<MixTermWire> },
    FamilyVa { a: Vec<Vec<f64>> },
    FamilyUniform { m: usize },
    Compose { perm: Vec<usize>, op: Box<OperatorWire> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MixTermWire {
    weight: f64,
    op: OperatorWire,
}

impl TryFrom<OperatorWire> for OperatorSpec {
    type Error = Error;

    fn try_from(w: OperatorWire) -> Result<Self> {
        Ok(match w {
            OperatorWire::Tensor { m, p } => {
                let t = QsoTensor::new(p)?;
                if t.dim() != m {
                    return Err(Error::InvalidTensor(format!("declared m = {m} but p has dimension {}", t.dim())));
                }
                Self::Tensor(t)
            }
            OperatorWire::Permutation { perm } => Self::Permutation(PermutationOperator::from_one_based(&perm)?),
            OperatorWire::LinearDs { a } => Self::LinearDs(DoublyStochasticMatrix::new(a)?),
            OperatorWire::Mix { terms } => {
                let (ops, weights): (Vec<_>, Vec<_>) = terms
                    .into_iter()
                    .map(|t| Ok((Self::try_from(t.op)?, t.weight)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                mix(ops, &weights)?
            }
            OperatorWire::FamilyVa { a } => Self::FamilyVa(DoublyStochasticMatrix::new(a)?),
            OperatorWire::FamilyUniform { m } => Self::family_uniform(m)?,
            OperatorWire::Compose { perm, op } => {
                let perm = PermutationOperator::from_one_based(&perm)?;
                let inner = Self::try_from(*op)?;
                if inner.dim() != perm.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: inner.dim(),
                        found: perm.dim(),
                    });
                }
                Self::Composed {
                    perm,
                    inner: Box::new(inner),
                }
            }
        })
    }
}

impl From<OperatorSpec> for OperatorWire {
    fn from(op: OperatorSpec) -> Self {
        match op {
            OperatorSpec::Tensor(t) => OperatorWire::Tensor {
                m: t.dim(),
                p: t.to_nested(),
            },
            OperatorSpec::Permutation(p) => OperatorWire::Permutation { perm: p.to_one_based() },
            OperatorSpec::LinearDs(a) => OperatorWire::LinearDs { a: a.rows() },
            OperatorSpec::Mix(mix) => OperatorWire::Mix {
                terms: mix
                    .terms
                    .into_iter()
                    .map(|t| MixTermWire {
                        weight: t.weight,
                        op: t.op.into(),
                    })
                    .collect(),
            },
            OperatorSpec::FamilyVa(a) => OperatorWire::FamilyVa { a: a.rows() },
            OperatorSpec::FamilyUniform(m) => OperatorWire::FamilyUniform { m },
            OperatorSpec::Composed { perm, inner } => OperatorWire::Compose {
                perm: perm.to_one_based(),
                op: Box::new((*inner).into()),
            },
        }
    }
}
