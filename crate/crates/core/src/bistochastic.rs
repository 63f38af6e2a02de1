//! Bistochasticity: `V(x) ≺ x` for every simplex point.
//!
//! There is no known decision procedure for a general quadratic operator, so
//! verdicts are split: [`certify_bistochastic`] is sound but incomplete
//! (structural rules only), and [`falsify_bistochastic`] is a seeded random
//! search that can only ever produce counterexamples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{DoublyStochasticMatrix, OperatorSpec};
use crate::sampling::{face_point, interior_point, rng_for, stream, tied_point};
use crate::simplex::{majorization_violation, SimplexPoint};

/// Steps of each trajectory segment examined by the falsifier.
const TRAJECTORY_SEGMENT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FalsifyVerdict {
    Counterexample,
    NoneFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub x: SimplexPoint,
    pub vx: SimplexPoint,
    /// 1-based prefix length at which `V(x)_↓` exceeds `x_↓`.
    pub violating_prefix: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsifyReport {
    pub verdict: FalsifyVerdict,
    /// Majorization checks performed.
    pub samples: usize,
    pub seed: u64,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
}

impl FalsifyReport {
    pub fn found(&self) -> bool {
        self.verdict == FalsifyVerdict::Counterexample
    }
}

/// Searches for `x` with `V(x) ⊀ x`. See [`falsify_bistochastic_observed`].
pub fn falsify_bistochastic(op: &OperatorSpec, budget: usize, seed: u64) -> Result<FalsifyReport> {
    falsify_bistochastic_observed(op, budget, seed, |_, _| {})
}

/// Budget split: vertices and edge midpoints first (at least a fifth of the
/// budget, topped up with random edge points), then interior Dirichlet
/// samples, random-face samples and short trajectory segments in ratio 2:1:1.
/// `observe` sees every examined pair `(x, V(x))`.
pub fn falsify_bistochastic_observed<F>(op: &OperatorSpec, budget: usize, seed: u64, observe: F) -> Result<FalsifyReport>
where
    F: FnMut(&SimplexPoint, &SimplexPoint),
{
    if budget == 0 {
        return Err(Error::ZeroBudget);
    }
    let m = op.dim();
    let mut checker = Checker {
        op,
        samples: 0,
        observe,
    };

    let deterministic = vertices_and_midpoints(m);
    let det_share = ((budget as f64 * 0.2).round() as usize).max(deterministic.len()).min(budget);
    let rest = budget - det_share;
    let interior_share = rest / 2;
    let face_share = rest / 4;
    let trajectory_share = rest - interior_share - face_share;

    let outcome = (|| -> Result<Option<Counterexample>> {
        let mut rng = rng_for(seed, stream::FALSIFY_DETERMINISTIC);
        for i in 0..det_share {
            let x = match deterministic.get(i) {
                Some(p) => p.clone(),
                None => random_edge_point(&mut rng, m),
            };
            if let Err(c) = checker.check(&x)? {
                return Ok(Some(c));
            }
        }
        let mut rng = rng_for(seed, stream::FALSIFY_INTERIOR);
        for _ in 0..interior_share {
            if let Err(c) = checker.check(&interior_point(&mut rng, m))? {
                return Ok(Some(c));
            }
        }
        let mut rng = rng_for(seed, stream::FALSIFY_FACES);
        for _ in 0..face_share {
            if let Err(c) = checker.check(&face_point(&mut rng, m))? {
                return Ok(Some(c));
            }
        }
        let mut rng = rng_for(seed, stream::FALSIFY_TRAJECTORIES);
        let mut left = trajectory_share;
        while left > 0 {
            let mut x = if rng.random_bool(0.5) {
                interior_point(&mut rng, m)
            } else {
                face_point(&mut rng, m)
            };
            for _ in 0..TRAJECTORY_SEGMENT.min(left) {
                left -= 1;
                match checker.check(&x)? {
                    Ok(vx) => x = vx,
                    Err(c) => return Ok(Some(c)),
                }
            }
        }
        Ok(None)
    })()?;

    Ok(FalsifyReport {
        verdict: if outcome.is_some() {
            FalsifyVerdict::Counterexample
        } else {
            FalsifyVerdict::NoneFound
        },
        samples: checker.samples,
        seed,
        counterexample: outcome,
    })
}

struct Checker<'a, F> {
    op: &'a OperatorSpec,
    samples: usize,
    observe: F,
}

impl<F: FnMut(&SimplexPoint, &SimplexPoint)> Checker<'_, F> {
    /// `Ok(V(x))` when `V(x) ≺ x`, otherwise the counterexample.
    fn check(&mut self, x: &SimplexPoint) -> Result<std::result::Result<SimplexPoint, Counterexample>> {
        let vx = self.op.apply(x)?;
        self.samples += 1;
        (self.observe)(x, &vx);
        Ok(match majorization_violation(x, &vx)? {
            None => Ok(vx),
            Some(k) => Err(Counterexample {
                x: x.clone(),
                vx,
                violating_prefix: k,
            }),
        })
    }
}

fn vertices_and_midpoints(m: usize) -> Vec<SimplexPoint> {
    let mut out: Vec<SimplexPoint> = (0..m).map(|i| SimplexPoint::vertex(m, i).expect("in range")).collect();
    for i in 0..m {
        for j in (i + 1)..m {
            let mut c = vec![0.0; m];
            c[i] = 0.5;
            c[j] = 0.5;
            out.push(SimplexPoint::new(c).expect("midpoint"));
        }
    }
    out
}

fn random_edge_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> SimplexPoint {
    if m == 1 {
        return SimplexPoint::vertex(1, 0).expect("m = 1");
    }
    let i = rng.random_range(0..m);
    let j = (i + rng.random_range(1..m)) % m;
    let t: f64 = rng.random();
    let mut c = vec![0.0; m];
    c[i] = t;
    c[j] = 1.0 - t;
    SimplexPoint::sanitized(c, 1e-9).expect("edge point")
}

/// Structural reason an operator is bistochastic.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", content = "of", rename_all = "kebab-case")]
pub enum Certificate {
    /// Permutation vectors majorize each other.
    Permutation,
    /// Doubly stochastic linear maps (convex hulls of permutations).
    LinearDoublyStochastic,
    FamilyVa,
    FamilyUniform,
    /// Convex mixes of bistochastic operators are bistochastic.
    ConvexMix(Vec<Certificate>),
    /// `P ∘ V` is bistochastic whenever `V` is.
    PermutationComposition(Box<Certificate>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "certificate", rename_all = "kebab-case")]
pub enum CertificateResult {
    Certified(Certificate),
    Unknown,
}

impl CertificateResult {
    pub fn is_certified(&self) -> bool {
        matches!(self, Self::Certified(_))
    }
}

/// Never claims an operator is *not* bistochastic; `Unknown` only means no rule applied.
pub fn certify_bistochastic(op: &OperatorSpec) -> CertificateResult {
    fn certify(op: &OperatorSpec) -> Option<Certificate> {
        Some(match op {
            OperatorSpec::Permutation(_) => Certificate::Permutation,
            OperatorSpec::LinearDs(_) => Certificate::LinearDoublyStochastic,
            OperatorSpec::FamilyVa(_) => Certificate::FamilyVa,
            OperatorSpec::FamilyUniform(_) => Certificate::FamilyUniform,
            OperatorSpec::Mix(mix) => {
                Certificate::ConvexMix(mix.terms().iter().map(|t| certify(&t.op)).collect::<Option<_>>()?)
            }
            OperatorSpec::Composed { inner, .. } => Certificate::PermutationComposition(Box::new(certify(inner)?)),
            OperatorSpec::Tensor(_) => return None,
        })
    }
    match certify(op) {
        Some(c) => CertificateResult::Certified(c),
        None => CertificateResult::Unknown,
    }
}

/// `V_A` for a doubly stochastic `A`, given as rows.
pub fn make_family_va(a: Vec<Vec<f64>>) -> Result<OperatorSpec> {
    Ok(OperatorSpec::FamilyVa(DoublyStochasticMatrix::new(a)?))
}

/// Checks that `V` maps every sampled point into its own sorting cone:
/// whenever `x_i > x_j`, also `V(x)_i >= V(x)_j`.
pub fn sorting_cone_invariance_check(op: &OperatorSpec, samples: usize, seed: u64) -> Result<bool> {
    let m = op.dim();
    let mut rng = rng_for(seed, stream::SORTING_CONE);
    for n in 0..samples {
        let x = match n % 3 {
            0 => interior_point(&mut rng, m),
            1 => face_point(&mut rng, m),
            _ => tied_point(&mut rng, m),
        };
        let y = op.apply(&x)?;
        if !order_preserved(x.coords(), y.coords()) {
            return Ok(false);
        }
    }
    Ok(true)
}

const CONE_SLACK: f64 = 1e-12;

fn order_preserved(x: &[f64], y: &[f64]) -> bool {
    for i in 0..x.len() {
        for j in 0..x.len() {
            if x[i] > x[j] && y[i] < y[j] - CONE_SLACK {
                return false;
            }
        }
    }
    true
}
