//! Trajectories, fixed and periodic points, ω-limit estimates and
//! regularity classification.
//!
//! Every verdict here is empirical. A reported cycle has been re-iterated and
//! Newton-refined before it is returned, so cycle reports are trustworthy;
//! the absence of cycles is only ever "evidence".

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{mix, OperatorSpec};
use crate::refine::{periodic_residual, refine_periodic};
use crate::sampling::{stream, trial_starts};
use crate::simplex::{barycenter, l1, l1_distance, SimplexPoint};

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_MAX_PERIOD: usize = 64;
pub const DEFAULT_MAX_STEPS: usize = 10_000;

/// Steps during which cycle scanning pauses after a rejected candidate.
const REJECTION_COOLDOWN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// l1 distance between successive iterates that counts as converged.
    pub convergence: f64,
    /// l1 residual `|V(p) - p|` accepted for a fixed point.
    pub fixed_point: f64,
    /// l1 residual `|V^p(x) - x|` accepted for a p-cycle revisit.
    pub cycle: f64,
    /// Radius for deduplicating points.
    pub cluster: f64,
    /// l1 distance at which a trajectory limit is identified with the barycenter.
    pub barycenter: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            convergence: 1e-10,
            fixed_point: 1e-9,
            cycle: 1e-9,
            cluster: 1e-8,
            barycenter: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub tolerances: Tolerances,
    pub max_steps: usize,
    pub window: usize,
    /// Largest period probed by [`classify_regularity`].
    pub max_period: usize,
    /// Restarts per period in [`periodic_points_probe`] calls made by the classifier.
    pub probe_restarts: usize,
    pub newton_iterations: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_steps: DEFAULT_MAX_STEPS,
            window: DEFAULT_WINDOW,
            max_period: DEFAULT_MAX_PERIOD,
            probe_restarts: 16,
            newton_iterations: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrajectoryVerdict {
    Converged { limit: SimplexPoint },
    Cycle { orbit: Vec<SimplexPoint>, prime_period: usize },
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub start: SimplexPoint,
    /// Tail window of iterates; `iterates[0]` is the iterate at step `first_step`.
    pub iterates: Vec<SimplexPoint>,
    pub first_step: usize,
    /// For `Converged`, the step index of the limit; otherwise operator applications performed.
    pub steps_taken: usize,
    pub verdict: TrajectoryVerdict,
}

/// JSON companion of a trajectory CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<SimplexPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<Vec<SimplexPoint>>,
}

impl TrajectoryRecord {
    pub fn summary(&self) -> VerdictSummary {
        let (verdict, limit, period, orbit) = match &self.verdict {
            TrajectoryVerdict::Converged { limit } => ("converged", Some(limit.clone()), None, None),
            TrajectoryVerdict::Cycle { orbit, prime_period } => ("cycle", None, Some(*prime_period), Some(orbit.clone())),
            TrajectoryVerdict::BudgetExhausted => ("budget", None, None, None),
        };
        VerdictSummary {
            verdict: verdict.to_string(),
            limit,
            period,
            steps: self.steps_taken,
            orbit,
        }
    }

    /// `step,x_1,…,x_m` rows for every recorded iterate.
    pub fn to_csv(&self) -> String {
        let m = self.start.dim();
        let mut out = String::from("step");
        for i in 1..=m {
            out.push_str(&format!(",x_{i}"));
        }
        out.push('\n');
        let mut buf = ryu::Buffer::new();
        for (n, x) in self.iterates.iter().enumerate() {
            out.push_str(&(self.first_step + n).to_string());
            for v in x.coords() {
                out.push(',');
                out.push_str(buf.format(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn check_dim(op: &OperatorSpec, x: &SimplexPoint) -> Result<()> {
    if op.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

fn proper_divisors(p: usize) -> impl Iterator<Item = usize> {
    (1..p).filter(move |q| p.is_multiple_of(*q))
}

/// `true` iff `x` returns within `tol` after `p` steps but after no proper divisor of `p`.
fn has_prime_period(op: &OperatorSpec, x: &[f64], p: usize, tol: f64) -> bool {
    let mut orbit = vec![x.to_vec()];
    for _ in 0..p {
        let next = op.apply_raw(orbit.last().expect("nonempty"));
        orbit.push(next);
    }
    l1(&orbit[p], x) < tol && proper_divisors(p).all(|q| l1(&orbit[q], x) >= tol)
}

/// Re-verifies a candidate p-cycle through `x0`: direct re-iteration must
/// close the orbit at prime period `p`, and Newton refinement from `x0` must
/// land on a point of the same prime period. The second check rejects slowly
/// spiralling trajectories that merely look periodic at the tolerance scale.
pub fn verify_cycle(op: &OperatorSpec, x0: &SimplexPoint, p: usize, config: &DynamicsConfig) -> Result<Option<Vec<SimplexPoint>>> {
    check_dim(op, x0)?;
    if p == 0 {
        return Ok(None);
    }
    let tol = config.tolerances.cycle;
    if !has_prime_period(op, x0.coords(), p, tol) {
        return Ok(None);
    }
    let (refined, residual) = refine_periodic(op, x0.coords(), p, config.newton_iterations);
    if residual >= tol || !has_prime_period(op, &refined, p, tol) {
        return Ok(None);
    }
    let mut orbit = vec![x0.clone()];
    for _ in 1..p {
        let next = op.apply(orbit.last().expect("nonempty"))?;
        orbit.push(next);
    }
    Ok(Some(orbit))
}

pub fn iterate(op: &OperatorSpec, x0: &SimplexPoint, max_steps: usize, config: &DynamicsConfig) -> Result<TrajectoryRecord> {
    check_dim(op, x0)?;
    if max_steps == 0 {
        return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
    }
    let tol = config.tolerances;
    let window_cap = config.window.max(2);
    let mut window: VecDeque<SimplexPoint> = VecDeque::with_capacity(window_cap + 1);
    window.push_back(x0.clone());
    let mut first_step = 0usize;
    let mut cooldown = 0usize;

    let finish = |window: VecDeque<SimplexPoint>, first_step, steps_taken, verdict| TrajectoryRecord {
        start: x0.clone(),
        iterates: window.into_iter().collect(),
        first_step,
        steps_taken,
        verdict,
    };

    for n in 0..max_steps {
        let current = window.back().expect("nonempty window").clone();
        let next = op.apply(&current)?;
        let step_distance = l1(next.coords(), current.coords());

        // Cycle detection runs before the convergence test.
        if cooldown == 0 && step_distance >= tol.convergence {
            if let Some(lag) = smallest_revisit_lag(&window, &next, tol.cycle) {
                let origin = window[window.len() - lag].clone();
                match verify_cycle(op, &origin, lag, config)? {
                    Some(orbit) => {
                        window.push_back(next);
                        trim(&mut window, &mut first_step, window_cap);
                        return Ok(finish(
                            window,
                            first_step,
                            n + 1,
                            TrajectoryVerdict::Cycle {
                                orbit,
                                prime_period: lag,
                            },
                        ));
                    }
                    None => cooldown = REJECTION_COOLDOWN,
                }
            }
        }
        cooldown = cooldown.saturating_sub(1);

        window.push_back(next);
        trim(&mut window, &mut first_step, window_cap);
        if step_distance < tol.convergence {
            return Ok(finish(window, first_step, n, TrajectoryVerdict::Converged { limit: current }));
        }
    }
    Ok(finish(window, first_step, max_steps, TrajectoryVerdict::BudgetExhausted))
}

fn trim(window: &mut VecDeque<SimplexPoint>, first_step: &mut usize, cap: usize) {
    while window.len() > cap {
        window.pop_front();
        *first_step += 1;
    }
}

/// Smallest lag `q >= 2` with `|next - x_{n+1-q}| < tol`, where the window ends at `x_n`.
fn smallest_revisit_lag(window: &VecDeque<SimplexPoint>, next: &SimplexPoint, tol: f64) -> Option<usize> {
    let len = window.len();
    let head = next.coords()[0];
    (2..=len).find(|&q| {
        let past = window[len - q].coords();
        (past[0] - head).abs() < tol && l1(past, next.coords()) < tol
    })
}

fn dedup_push(points: &mut Vec<SimplexPoint>, p: SimplexPoint, radius: f64) {
    if points.iter().all(|q| l1(q.coords(), p.coords()) >= radius) {
        points.push(p);
    }
}

/// Newton-polishes an approximate fixed point; keeps the input if that does not help.
fn polish_fixed_point(op: &OperatorSpec, x: &SimplexPoint, config: &DynamicsConfig) -> Result<(SimplexPoint, f64)> {
    let start_residual = periodic_residual(op, x.coords(), 1);
    let (refined, residual) = refine_periodic(op, x.coords(), 1, config.newton_iterations);
    if residual < start_residual {
        Ok((SimplexPoint::sanitized(refined, 1e-9)?, residual))
    } else {
        Ok((x.clone(), start_residual))
    }
}

/// Fixed points harvested from trajectory limits, Newton-polished and
/// deduplicated at radius `10 × fixed_point` tolerance. The barycenter comes
/// first whenever it verifies.
pub fn find_fixed_points(op: &OperatorSpec, trials: usize, seed: u64, config: &DynamicsConfig) -> Result<Vec<SimplexPoint>> {
    let m = op.dim();
    let tol = config.tolerances.fixed_point;
    let radius = 10.0 * tol;
    let mut found = Vec::new();
    let b = barycenter(m)?;
    if periodic_residual(op, b.coords(), 1) < tol {
        found.push(b);
    }
    for start in trial_starts(m, trials, seed) {
        let record = iterate(op, &start, config.max_steps, config)?;
        if let TrajectoryVerdict::Converged { limit } = record.verdict {
            let (p, residual) = polish_fixed_point(op, &limit, config)?;
            if residual < tol {
                dedup_push(&mut found, p, radius);
            }
        }
    }
    Ok(found)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit {
    pub points: Vec<SimplexPoint>,
    pub period: usize,
}

impl PeriodicOrbit {
    fn contains_near(&self, x: &SimplexPoint, radius: f64) -> bool {
        self.points.iter().any(|p| l1(p.coords(), x.coords()) < radius)
    }
}

/// Verified cycles of prime period `p`, from trajectory cycle verdicts and
/// from Newton minimization of `|V^p(x) - x|` at each restart.
pub fn periodic_points_probe(
    op: &OperatorSpec,
    p: usize,
    trials: usize,
    seed: u64,
    config: &DynamicsConfig,
) -> Result<Vec<PeriodicOrbit>> {
    if p < 2 {
        return Err(Error::InvalidArgument("probed period must be at least 2".into()));
    }
    let m = op.dim();
    let radius = config.tolerances.cluster;
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut add = |orbit: Vec<SimplexPoint>| {
        if !orbits.iter().any(|o| o.contains_near(&orbit[0], radius)) {
            orbits.push(PeriodicOrbit { points: orbit, period: p });
        }
    };
    let starts = trial_starts(m, trials, seed ^ (stream::PROBE_BASE + p as u64));
    for start in starts {
        let record = iterate(op, &start, config.max_steps, config)?;
        if let TrajectoryVerdict::Cycle { orbit, prime_period } = record.verdict {
            if prime_period == p {
                add(orbit);
                continue;
            }
        }
        let (x, residual) = refine_periodic(op, start.coords(), p, config.newton_iterations);
        if residual < config.tolerances.cycle {
            let candidate = SimplexPoint::sanitized(x, 1e-9)?;
            if let Some(orbit) = verify_cycle(op, &candidate, p, config)? {
                add(orbit);
            }
        }
    }
    Ok(orbits)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    /// Fixed points found for the mix.
    pub mix_fixed: Vec<SimplexPoint>,
    /// Candidate points fixed by every constituent.
    pub common_fixed: Vec<SimplexPoint>,
    /// Mix fixed points not fixed by some constituent.
    pub forward_violations: Vec<SimplexPoint>,
    /// Common fixed points not fixed by the mix.
    pub reverse_violations: Vec<SimplexPoint>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.forward_violations.is_empty() && self.reverse_violations.is_empty()
    }
}

/// Checks `Fix(Σ λ_i V_i) = ∩ Fix(V_i)` in both directions on sampled fixed
/// points. Membership is tested at the cluster radius.
pub fn check_mix_fix_identity(
    ops: &[OperatorSpec],
    weights: &[f64],
    trials: usize,
    seed: u64,
    config: &DynamicsConfig,
) -> Result<IdentityReport> {
    let mixed = mix(ops.to_vec(), weights)?;
    let tol = config.tolerances.cluster;
    let fixed_by = |op: &OperatorSpec, x: &SimplexPoint| periodic_residual(op, x.coords(), 1) < tol;

    let mix_fixed = find_fixed_points(&mixed, trials, seed, config)?;
    let forward_violations = mix_fixed
        .iter()
        .filter(|x| !ops.iter().all(|op| fixed_by(op, x)))
        .cloned()
        .collect();

    let mut candidates = Vec::new();
    for op in ops {
        for x in find_fixed_points(op, trials, seed, config)? {
            dedup_push(&mut candidates, x, tol);
        }
    }
    let common_fixed: Vec<SimplexPoint> = candidates.into_iter().filter(|x| ops.iter().all(|op| fixed_by(op, x))).collect();
    let reverse_violations = common_fixed.iter().filter(|x| !fixed_by(&mixed, x)).cloned().collect();

    Ok(IdentityReport {
        mix_fixed,
        common_fixed,
        forward_violations,
        reverse_violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    StrictlyRegularEvidence,
    RegularEvidence,
    PeriodicOrbitFound(Box<TrajectoryRecord>),
    Inconclusive,
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Self::StrictlyRegularEvidence => "strictly-regular-evidence",
            Self::RegularEvidence => "regular-evidence",
            Self::PeriodicOrbitFound(_) => "periodic-orbit-found",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityVerdict {
    pub classification: Classification,
    pub trials: usize,
    pub converged: usize,
    pub at_barycenter: usize,
    pub budget_exhausted: usize,
    pub max_steps: usize,
    pub max_period: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

#[derive(Serialize)]
struct CycleReport<'a> {
    period: usize,
    orbit: &'a [SimplexPoint],
}

#[derive(Serialize)]
struct RegularityReport<'a> {
    verdict: &'static str,
    trials: usize,
    converged: usize,
    at_barycenter: usize,
    budget_exhausted: usize,
    max_steps: usize,
    max_period: usize,
    seed: u64,
    tolerances: &'a Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycle: Option<CycleReport<'a>>,
}

impl RegularityVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let cycle = match &self.classification {
            Classification::PeriodicOrbitFound(record) => match &record.verdict {
                TrajectoryVerdict::Cycle { orbit, prime_period } => Some(CycleReport {
                    period: *prime_period,
                    orbit,
                }),
                _ => None,
            },
            _ => None,
        };
        serde_json::to_value(RegularityReport {
            verdict: self.classification.name(),
            trials: self.trials,
            converged: self.converged,
            at_barycenter: self.at_barycenter,
            budget_exhausted: self.budget_exhausted,
            max_steps: self.max_steps,
            max_period: self.max_period,
            seed: self.seed,
            tolerances: &self.tolerances,
            cycle,
        })
        .expect("report serializes")
    }
}

/// Empirical regularity classification of a (presumed) bistochastic operator.
///
/// Runs `trials` trajectories; any verified cycle wins. If every trajectory
/// converges, periods `2..=max_period` are probed with
/// `probe_restarts` restarts each. All limits at the barycenter with no cycles
/// gives strict-regularity evidence, other limits give regularity evidence.
pub fn classify_regularity(op: &OperatorSpec, trials: usize, seed: u64, config: &DynamicsConfig) -> Result<RegularityVerdict> {
    let m = op.dim();
    let tol = config.tolerances;
    let b = barycenter(m)?;
    let mut verdict = RegularityVerdict {
        classification: Classification::Inconclusive,
        trials,
        converged: 0,
        at_barycenter: 0,
        budget_exhausted: 0,
        max_steps: config.max_steps,
        max_period: config.max_period,
        seed,
        tolerances: tol,
    };
    for start in trial_starts(m, trials, seed) {
        let record = iterate(op, &start, config.max_steps, config)?;
        match &record.verdict {
            TrajectoryVerdict::Cycle { .. } => {
                verdict.classification = Classification::PeriodicOrbitFound(Box::new(record));
                return Ok(verdict);
            }
            TrajectoryVerdict::Converged { limit } => {
                verdict.converged += 1;
                if l1_distance(limit, &b)? < tol.barycenter {
                    verdict.at_barycenter += 1;
                }
            }
            TrajectoryVerdict::BudgetExhausted => verdict.budget_exhausted += 1,
        }
    }
    if verdict.budget_exhausted > 0 {
        return Ok(verdict);
    }
    for p in 2..=config.max_period {
        if let Some(orbit) = periodic_points_probe(op, p, config.probe_restarts, seed, config)?.into_iter().next() {
            let mut iterates = orbit.points.clone();
            iterates.push(orbit.points[0].clone());
            verdict.classification = Classification::PeriodicOrbitFound(Box::new(TrajectoryRecord {
                start: orbit.points[0].clone(),
                iterates,
                first_step: 0,
                steps_taken: p,
                verdict: TrajectoryVerdict::Cycle {
                    orbit: orbit.points,
                    prime_period: p,
                },
            }));
            return Ok(verdict);
        }
    }
    verdict.classification = if verdict.at_barycenter == trials {
        Classification::StrictlyRegularEvidence
    } else {
        Classification::RegularEvidence
    };
    Ok(verdict)
}

/// Cluster representatives of the iterates after `burn_in` steps, over `window` steps.
pub fn omega_limit_estimate(
    op: &OperatorSpec,
    x0: &SimplexPoint,
    burn_in: usize,
    window: usize,
    tolerances: &Tolerances,
) -> Result<Vec<SimplexPoint>> {
    check_dim(op, x0)?;
    let mut x = x0.clone();
    for _ in 0..burn_in {
        x = op.apply(&x)?;
    }
    let mut reps: Vec<SimplexPoint> = Vec::new();
    for _ in 0..window.max(1) {
        dedup_push(&mut reps, x.clone(), tolerances.cluster);
        x = op.apply(&x)?;
    }
    Ok(reps)
}
