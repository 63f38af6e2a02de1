//! Points of the standard simplex and the majorization preorder.
//!
//! A [`SimplexPoint`] is a probability vector. Construction clamps small
//! negative coordinates and renormalizes sums that are within tolerance of one;
//! anything further off is rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;

/// Coordinates in `[-CLAMP_TOLERANCE, 0)` are clamped to zero on load.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of the coordinate sum from one on load.
pub const SUM_TOLERANCE: f64 = 1e-12;
/// Slack on prefix-sum comparisons in [`majorizes`].
pub const MAJORIZATION_TOLERANCE: f64 = 1e-10;
/// Default largest `m` for which [`in_permutation_polytope`] enumerates `m!` vectors.
pub const DEFAULT_ENUMERATION_CAP: usize = 8;
/// Feasibility tolerance of the permutation-polytope linear program.
pub const POLYTOPE_FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates `coords` as a probability vector, with load-time sanitization.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::sanitized(coords, SUM_TOLERANCE)
    }

    /// Like [`SimplexPoint::new`] with an explicit tolerance on the coordinate sum.
    pub fn sanitized(mut coords: Vec<f64>, sum_tolerance: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyDimension);
        }
        for (index, c) in coords.iter_mut().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if *c < 0.0 {
                if *c < -CLAMP_TOLERANCE {
                    return Err(Error::NegativeCoordinate { index, value: *c });
                }
                *c = 0.0;
            }
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > sum_tolerance {
            return Err(Error::NotOnSimplex {
                sum,
                tolerance: sum_tolerance,
            });
        }
        if sum != 1.0 {
            coords.iter_mut().for_each(|c| *c /= sum);
        }
        Ok(Self { coords })
    }

    /// The vertex `e_i` (0-indexed) of the `m`-dimensional simplex.
    pub fn vertex(m: usize, i: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::EmptyDimension);
        }
        if i >= m {
            return Err(Error::InvalidArgument(format!("vertex index {i} out of range for m = {m}")));
        }
        let mut coords = vec![0.0; m];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }

    /// Applies a coordinate permutation: output position `k` receives coordinate `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            coords: perm.iter().map(|&i| self.coords[i]).collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.coords
    }
}

/// The non-increasing rearrangement `x_↓` of a point.
#[derive(Clone, Debug, PartialEq)]
pub struct SortedPoint {
    values: Vec<f64>,
    source_permutation: Vec<usize>,
}

impl SortedPoint {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `values[k] == x[source_permutation[k]]`.
    pub fn source_permutation(&self) -> &[usize] {
        &self.source_permutation
    }

    /// Partial sums `Σ_{i<=k} x_[i]` for `k = 1..=m`.
    pub fn prefix_sums(&self) -> Vec<f64> {
        self.values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

pub fn l1_distance(x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
    check_dims(x.dim(), y.dim())?;
    Ok(l1(x.coords(), y.coords()))
}

pub(crate) fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
}

/// Sorts coordinates in non-increasing order; ties keep their original index order.
pub fn sort_descending(x: &SimplexPoint) -> SortedPoint {
    let mut order: Vec<usize> = (0..x.dim()).collect();
    // sort_by is stable, so equal values stay in ascending index order
    order.sort_by(|&a, &b| x.coords[b].total_cmp(&x.coords[a]));
    SortedPoint {
        values: order.iter().map(|&i| x.coords[i]).collect(),
        source_permutation: order,
    }
}

/// First `k` (1-based, `k < m`) where the prefix sum of `x_↓` exceeds that of
/// `y_↓` by more than [`MAJORIZATION_TOLERANCE`], or `None` when `x ≺ y`.
pub fn majorization_violation(y: &SimplexPoint, x: &SimplexPoint) -> Result<Option<usize>> {
    check_dims(y.dim(), x.dim())?;
    let px = sort_descending(x).prefix_sums();
    let py = sort_descending(y).prefix_sums();
    let m = x.dim();
    Ok((0..m.saturating_sub(1))
        .find(|&k| px[k] > py[k] + MAJORIZATION_TOLERANCE)
        .map(|k| k + 1))
}

/// `true` iff `y` majorizes `x`, i.e. `x ≺ y`.
pub fn majorizes(y: &SimplexPoint, x: &SimplexPoint) -> Result<bool> {
    Ok(majorization_violation(y, x)?.is_none())
}

pub fn barycenter(m: usize) -> Result<SimplexPoint> {
    if m == 0 {
        return Err(Error::EmptyDimension);
    }
    Ok(SimplexPoint {
        coords: vec![1.0 / m as f64; m],
    })
}

/// All permutations of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..m).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..m).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let pivot = i - 1;
        let j = (i..m).rev().find(|&j| current[j] > current[pivot]).unwrap();
        current.swap(pivot, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// Decides `x ∈ Π_y = conv{σ(y)}` by linear feasibility over all permutation
/// vectors of `y`. Only meant as a small-`m` oracle.
pub fn in_permutation_polytope(x: &SimplexPoint, y: &SimplexPoint) -> Result<bool> {
    in_permutation_polytope_with_cap(x, y, DEFAULT_ENUMERATION_CAP)
}

pub fn in_permutation_polytope_with_cap(x: &SimplexPoint, y: &SimplexPoint, cap: usize) -> Result<bool> {
    check_dims(x.dim(), y.dim())?;
    let m = x.dim();
    if m > cap {
        return Err(Error::EnumerationTooLarge { m, cap });
    }
    let mut vertices: Vec<Vec<f64>> = permutations(m)
        .iter()
        .map(|p| y.permuted(p).into_vec())
        .collect();
    vertices.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    vertices.dedup();
    Ok(lp::in_convex_hull(&vertices, x.coords(), POLYTOPE_FEASIBILITY_TOLERANCE))
}
