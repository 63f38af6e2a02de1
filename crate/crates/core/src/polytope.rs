//! Finitely generated polytopes `Q = conv{f_1, …, f_s}` and their relative interior.
//!
//! For irredundant generators, `ri(Q)` is exactly the set of convex
//! combinations with all weights strictly positive. Strict positivity is
//! decided against a margin: the LP maximizes the smallest weight (the
//! "depth" of `x`), which is zero up to rounding on the relative boundary.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bistochastic::certify_bistochastic;
use crate::error::{Error, Result};
use crate::lp::{self, LpOutcome};
use crate::operator::{mix, OperatorSpec};
use crate::sampling::{dirichlet_uniform, dirichlet_with_floor, rng_for, stream};
use crate::simplex::{l1, permutations, SimplexPoint};

/// Default margin standing in for `λ_j > 0`.
pub const DEFAULT_MARGIN: f64 = 1e-9;
/// Feasibility tolerance of the underlying linear programs.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
/// Minimum extension length in [`segment_extension_test`].
pub const MIN_EXTENSION: f64 = 1e-9;
/// Weight floor of [`ri_sample`].
pub const SAMPLE_WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeWire", into = "PolytopeWire")]
pub struct PolytopeSpec {
    generators: Vec<Vec<f64>>,
    irredundant: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PolytopeWire {
    generators: Vec<Vec<f64>>,
    #[serde(default)]
    irredundant: bool,
}

impl TryFrom<PolytopeWire> for PolytopeSpec {
    type Error = Error;

    fn try_from(w: PolytopeWire) -> Result<Self> {
        Self::with_claim(w.generators, w.irredundant)
    }
}

impl From<PolytopeSpec> for PolytopeWire {
    fn from(q: PolytopeSpec) -> Self {
        Self {
            generators: q.generators,
            irredundant: q.irredundant,
        }
    }
}

fn validate_generators(generators: &[Vec<f64>]) -> Result<()> {
    let Some(first) = generators.first() else {
        return Err(Error::InvalidPolytope("at least one generator is required".into()));
    };
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidPolytope("generators must have positive dimension".into()));
    }
    for (i, g) in generators.iter().enumerate() {
        if g.len() != d {
            return Err(Error::InvalidPolytope(format!("generator {} has dimension {}, expected {d}", i + 1, g.len())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolytope(format!("generator {} has a non-finite coordinate", i + 1)));
        }
    }
    Ok(())
}

impl PolytopeSpec {
    /// Builds the polytope and computes its irredundancy flag.
    pub fn new(generators: Vec<Vec<f64>>) -> Result<Self> {
        validate_generators(&generators)?;
        let irredundant = check_irredundant(&generators)?.iter().all(|&b| b);
        Ok(Self { generators, irredundant })
    }

    /// Builds with a caller-asserted flag; a `true` claim is verified.
    pub fn with_claim(generators: Vec<Vec<f64>>, irredundant: bool) -> Result<Self> {
        let q = Self::new(generators)?;
        if irredundant && !q.irredundant {
            return Err(Error::RedundantGenerators);
        }
        Ok(Self {
            irredundant,
            ..q
        })
    }

    /// `Π_y`: the convex hull of the distinct permutation vectors of `y`.
    pub fn permutation_polytope(y: &SimplexPoint) -> Result<Self> {
        let mut gens: Vec<Vec<f64>> = Vec::new();
        for p in permutations(y.dim()) {
            let v = y.permuted(&p).into_vec();
            if !gens.contains(&v) {
                gens.push(v);
            }
        }
        Self::new(gens)
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators[0].len()
    }

    pub fn is_irredundant(&self) -> bool {
        self.irredundant
    }

    /// Equal-weight average of the generators.
    pub fn centroid(&self) -> Vec<f64> {
        let s = self.generators.len() as f64;
        (0..self.dim())
            .map(|i| self.generators.iter().map(|g| g[i]).sum::<f64>() / s)
            .collect()
    }

    /// Largest l1 distance between two generators.
    pub fn diameter(&self) -> f64 {
        let g = &self.generators;
        let mut best = 0.0f64;
        for i in 0..g.len() {
            for j in (i + 1)..g.len() {
                best = best.max(l1(&g[i], &g[j]));
            }
        }
        best
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_point(x)?;
        Ok(lp::in_convex_hull(&self.generators, x, FEASIBILITY_TOLERANCE))
    }

    /// `max min_j λ_j` over representations `x = Σ λ_j f_j`; `None` if `x ∉ Q`.
    pub fn depth(&self, x: &[f64]) -> Result<Option<f64>> {
        self.check_point(x)?;
        // λ_j = t + μ_j with t, μ >= 0: Σ_j (t + μ_j) f_j = x, s t + Σ μ_j = 1
        let s = self.generators.len();
        let d = self.dim();
        let mut a = vec![vec![0.0; s + 1]; d + 1];
        for (j, g) in self.generators.iter().enumerate() {
            for i in 0..d {
                a[i][j] = g[i];
                a[i][s] += g[i];
            }
            a[d][j] = 1.0;
        }
        a[d][s] = s as f64;
        let mut b = x.to_vec();
        b.push(1.0);
        let mut c = vec![0.0; s + 1];
        c[s] = 1.0;
        Ok(match lp::maximize(&a, &b, &c, FEASIBILITY_TOLERANCE) {
            LpOutcome::Optimal { value, .. } => Some(value),
            LpOutcome::Infeasible => None,
            LpOutcome::Unbounded => unreachable!("depth is bounded by 1/s"),
        })
    }

    /// Largest `t ∈ [0, 1]` with `x + t (x - y) ∈ Q`, or `None` if `x ∉ Q`.
    pub fn extension_length(&self, x: &[f64], y: &[f64]) -> Result<Option<f64>> {
        self.check_point(x)?;
        self.check_point(y)?;
        // variables: λ_1..λ_s, t, slack w with t + w = 1
        let s = self.generators.len();
        let d = self.dim();
        let mut a = vec![vec![0.0; s + 2]; d + 2];
        for (j, g) in self.generators.iter().enumerate() {
            for i in 0..d {
                a[i][j] = g[i];
            }
            a[d][j] = 1.0;
        }
        for i in 0..d {
            a[i][s] = -(x[i] - y[i]);
        }
        a[d + 1][s] = 1.0;
        a[d + 1][s + 1] = 1.0;
        let mut b = x.to_vec();
        b.push(1.0);
        b.push(1.0);
        let mut c = vec![0.0; s + 2];
        c[s] = 1.0;
        Ok(match lp::maximize(&a, &b, &c, FEASIBILITY_TOLERANCE) {
            LpOutcome::Optimal { value, .. } => Some(value),
            LpOutcome::Infeasible => None,
            LpOutcome::Unbounded => unreachable!("t is capped at 1"),
        })
    }

    fn require_irredundant(&self) -> Result<()> {
        if !self.irredundant {
            return Err(Error::RedundantGenerators);
        }
        Ok(())
    }
}

/// `true` for each generator that is not a convex combination of the others.
pub fn check_irredundant(generators: &[Vec<f64>]) -> Result<Vec<bool>> {
    validate_generators(generators)?;
    Ok((0..generators.len())
        .map(|i| {
            let others: Vec<Vec<f64>> = generators
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g.clone())
                .collect();
            !lp::in_convex_hull(&others, &generators[i], FEASIBILITY_TOLERANCE)
        })
        .collect())
}

/// `x ∈ ri(Q)`: some representation has every weight at least `margin`.
pub fn ri_membership(q: &PolytopeSpec, x: &[f64], margin: f64) -> Result<bool> {
    q.require_irredundant()?;
    Ok(q.depth(x)?.is_some_and(|t| t >= margin))
}

fn combine(q: &PolytopeSpec, weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; q.dim()];
    for (w, g) in weights.iter().zip(&q.generators) {
        out.iter_mut().zip(g).for_each(|(o, v)| *o += w * v);
    }
    out
}

/// Points `Σ λ_j f_j` with flat-Dirichlet weights conditioned on `min λ_j >= 1e-6`.
pub fn ri_sample(q: &PolytopeSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    q.require_irredundant()?;
    let mut rng = rng_for(seed, stream::RI_SAMPLE);
    let s = q.generators.len();
    Ok((0..count)
        .map(|_| {
            if s == 1 {
                q.generators[0].clone()
            } else {
                combine(q, &dirichlet_with_floor(&mut rng, s, SAMPLE_WEIGHT_FLOOR))
            }
        })
        .collect())
}

/// A random point of `Q`: sometimes a generator, sometimes a combination of a
/// random subset of generators (often on the relative boundary).
fn random_point_of<R: Rng + ?Sized>(q: &PolytopeSpec, rng: &mut R) -> Vec<f64> {
    let s = q.generators.len();
    match rng.random_range(0..3) {
        0 => q.generators[rng.random_range(0..s)].clone(),
        1 => {
            let size = rng.random_range(1..=s);
            let mut idx: Vec<usize> = (0..s).collect();
            for i in 0..size {
                let j = rng.random_range(i..s);
                idx.swap(i, j);
            }
            let w = dirichlet_uniform(rng, size);
            let mut weights = vec![0.0; s];
            for (&i, v) in idx[..size].iter().zip(w) {
                weights[i] = v;
            }
            combine(q, &weights)
        }
        _ => combine(q, &dirichlet_uniform(rng, s)),
    }
}

/// Two-sided extension characterization of `ri(Q)`: for every probed
/// `y ∈ Q \ {x}`, `x + t (x - y)` stays in `Q` for some `t >= 1e-9`.
/// Probes are ri samples, all generators, and random points of `Q`.
pub fn segment_extension_test(q: &PolytopeSpec, x: &[f64], probes: usize, seed: u64) -> Result<bool> {
    if !q.contains(x)? {
        return Err(Error::OutsidePolytope);
    }
    let mut rng = rng_for(seed, stream::SEGMENT_PROBES);
    let s = q.generators.len();
    let mut ys: Vec<Vec<f64>> = q.generators.clone();
    for k in 0..probes {
        ys.push(if k % 2 == 0 {
            combine(q, &dirichlet_uniform(&mut rng, s))
        } else {
            random_point_of(q, &mut rng)
        });
    }
    for y in ys {
        if l1(&y, x) <= 1e-12 {
            continue;
        }
        match q.extension_length(x, &y)? {
            Some(t) if t >= MIN_EXTENSION => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// `[x; y) ⊂ ri(Q)` for sampled `x ∈ ri(Q)`, `y ∈ Q`, `μ ∈ (0, 1]`.
///
/// `μ` is drawn from `[μ_min, 1]` with `μ_min = 10 · margin / depth(x)`, since
/// points closer to `y` than that cannot be told apart from the boundary at
/// the given margin.
pub fn half_open_segment_property_test(q: &PolytopeSpec, trials: usize, seed: u64) -> Result<bool> {
    q.require_irredundant()?;
    let mut rng = rng_for(seed, stream::HALF_OPEN);
    let xs = ri_sample(q, trials, seed)?;
    for x in xs {
        let depth = q.depth(&x)?.expect("ri samples lie in Q");
        let y = random_point_of(q, &mut rng);
        let mu_min = (10.0 * DEFAULT_MARGIN / depth).min(1.0);
        let mu = 1.0 - rng.random::<f64>() * (1.0 - mu_min);
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| mu * a + (1.0 - mu) * b).collect();
        if !ri_membership(q, &z, DEFAULT_MARGIN)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Q = closure(ri(Q))`: every sampled `y ∈ Q` (all generators included) has a
/// relative-interior point within l1 distance `epsilon`, reached by sliding
/// `y` toward the centroid by `δ = epsilon / (2 · diam)`.
pub fn closure_density_test(q: &PolytopeSpec, trials: usize, seed: u64, epsilon: f64) -> Result<bool> {
    q.require_irredundant()?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let mut rng = rng_for(seed, stream::CLOSURE);
    let centroid = q.centroid();
    let diam = q.diameter().max(f64::MIN_POSITIVE);
    let delta = (epsilon / (2.0 * diam)).min(1.0);
    let mut ys = q.generators.clone();
    ys.extend((0..trials).map(|_| random_point_of(q, &mut rng)));
    for y in ys {
        if ri_membership(q, &y, DEFAULT_MARGIN)? {
            continue;
        }
        let z: Vec<f64> = y.iter().zip(&centroid).map(|(a, c)| (1.0 - delta) * a + delta * c).collect();
        if l1(&z, &y) >= epsilon || !ri_membership(q, &z, DEFAULT_MARGIN)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A mix with strictly positive Dirichlet weights over a pool of certified
/// bistochastic generators containing every coordinate permutation. Positive
/// weight on all permutations forces the mix's only fixed point to be the
/// barycenter and rules out periodic points. What is sampled is the relative
/// interior of the pool's hull, not of the whole operator set.
pub fn qbo_interior_mix_generator(weights_seed: u64, generator_pool: &[OperatorSpec]) -> Result<OperatorSpec> {
    let Some(first) = generator_pool.first() else {
        return Err(Error::InvalidArgument("generator pool is empty".into()));
    };
    let m = first.dim();
    for (index, op) in generator_pool.iter().enumerate() {
        if op.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: op.dim(),
            });
        }
        if !certify_bistochastic(op).is_certified() {
            return Err(Error::UncertifiedGenerator { index });
        }
    }
    for p in permutations(m) {
        let present = generator_pool
            .iter()
            .any(|op| matches!(op, OperatorSpec::Permutation(q) if q.as_slice() == p.as_slice()));
        if !present {
            return Err(Error::MissingPermutation(p.iter().map(|i| i + 1).collect()));
        }
    }
    let mut rng = rng_for(weights_seed, stream::MIX_WEIGHTS);
    let mut weights = dirichlet_with_floor(&mut rng, generator_pool.len(), SAMPLE_WEIGHT_FLOOR.min(0.5 / generator_pool.len() as f64));
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    mix(generator_pool.to_vec(), &weights)
}
