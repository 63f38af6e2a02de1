//! Seeded sampling on the simplex.
//!
//! All randomness comes from ChaCha8 keyed by a 64-bit seed; independent
//! consumers take disjoint streams so results do not depend on call order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::operator::DoublyStochasticMatrix;
use crate::simplex::{barycenter, permutations, SimplexPoint};

pub type SampleRng = ChaCha8Rng;

/// Stream identifiers, kept distinct across modules.
pub(crate) mod stream {
    pub const FALSIFY_DETERMINISTIC: u64 = 1;
    pub const FALSIFY_INTERIOR: u64 = 2;
    pub const FALSIFY_FACES: u64 = 3;
    pub const FALSIFY_TRAJECTORIES: u64 = 4;
    pub const SORTING_CONE: u64 = 5;
    pub const TRIAL_STARTS: u64 = 6;
    pub const PROBE_BASE: u64 = 1 << 16;
    pub const RI_SAMPLE: u64 = 7;
    pub const SEGMENT_PROBES: u64 = 8;
    pub const HALF_OPEN: u64 = 9;
    pub const CLOSURE: u64 = 10;
    pub const MIX_WEIGHTS: u64 = 11;
    pub const CLI_STARTS: u64 = 12;
}

pub fn rng_for(seed: u64, stream: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Flat Dirichlet(1, …, 1) sample of length `n`, via normalized exponentials.
pub fn dirichlet_uniform<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 && total.is_finite() {
            w.iter_mut().for_each(|v| *v /= total);
            return w;
        }
    }
}

/// Dirichlet(1, …, 1) conditioned on every weight being at least `min_weight`.
pub fn dirichlet_with_floor<R: Rng + ?Sized>(rng: &mut R, n: usize, min_weight: f64) -> Vec<f64> {
    assert!(min_weight * (n as f64) < 1.0, "weight floor unattainable");
    loop {
        let w = dirichlet_uniform(rng, n);
        if w.iter().all(|&v| v >= min_weight) {
            return w;
        }
    }
}

fn point(coords: Vec<f64>) -> SimplexPoint {
    SimplexPoint::sanitized(coords, 1e-9).expect("sampler produced an off-simplex point")
}

pub fn interior_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> SimplexPoint {
    point(dirichlet_uniform(rng, m))
}

/// Uniform point on a random face: face dimension uniform in `0..m`, support
/// uniform among subsets of that size.
pub fn face_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> SimplexPoint {
    let size = rng.random_range(1..=m);
    let mut idx: Vec<usize> = (0..m).collect();
    for i in 0..size {
        let j = rng.random_range(i..m);
        idx.swap(i, j);
    }
    let w = dirichlet_uniform(rng, size);
    let mut coords = vec![0.0; m];
    for (&i, v) in idx[..size].iter().zip(w) {
        coords[i] = v;
    }
    point(coords)
}

/// A point within `1e-6` (convex weight) of a random face.
pub fn near_face_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> SimplexPoint {
    let face = face_point(rng, m);
    let inner = dirichlet_uniform(rng, m);
    let eps = 1e-6;
    point(
        face.coords()
            .iter()
            .zip(inner)
            .map(|(f, u)| (1.0 - eps) * f + eps * u)
            .collect(),
    )
}

/// Point with deliberately repeated coordinates.
pub fn tied_point<R: Rng + ?Sized>(rng: &mut R, m: usize) -> SimplexPoint {
    let mut coords = dirichlet_uniform(rng, m);
    if m >= 2 {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        coords[j] = coords[i];
        let total: f64 = coords.iter().sum();
        coords.iter_mut().for_each(|v| *v /= total);
    }
    point(coords)
}

/// Trial starts for dynamics: all vertices, the barycenter, then alternating
/// interior Dirichlet samples and near-face points. Truncated to `count`.
pub fn trial_starts(m: usize, count: usize, seed: u64) -> Vec<SimplexPoint> {
    let mut rng = rng_for(seed, stream::TRIAL_STARTS);
    let mut out: Vec<SimplexPoint> = (0..m)
        .map(|i| SimplexPoint::vertex(m, i).expect("valid vertex"))
        .collect();
    out.push(barycenter(m).expect("m >= 1"));
    out.truncate(count);
    let mut k = 0usize;
    while out.len() < count {
        out.push(if k.is_multiple_of(2) {
            interior_point(&mut rng, m)
        } else {
            near_face_point(&mut rng, m)
        });
        k += 1;
    }
    out
}

/// Random doubly stochastic matrix as a convex combination of random
/// permutation matrices (so every row and column sums to one up to rounding).
pub fn random_doubly_stochastic<R: Rng + ?Sized>(rng: &mut R, m: usize) -> DoublyStochasticMatrix {
    let perms = permutations(m);
    let terms = m + 1;
    let w = dirichlet_uniform(rng, terms);
    let mut a = vec![vec![0.0; m]; m];
    for wt in w {
        let p = &perms[rng.random_range(0..perms.len())];
        for (k, &i) in p.iter().enumerate() {
            a[k][i] += wt;
        }
    }
    DoublyStochasticMatrix::new(a).expect("convex combination of permutation matrices")
}
