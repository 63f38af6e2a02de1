//! Acceptance gate. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use qbo::dynamics::{periodic_points_probe, DynamicsConfig};
use qbo::operator::DoublyStochasticMatrix;
use qbo::sampling::{dirichlet_uniform, interior_point, random_doubly_stochastic, rng_for, trial_starts, SampleRng};
use qbo::{
    all_permutation_operators, barycenter, certify_bistochastic, check_irredundant, check_mix_fix_identity,
    classify_regularity, closure_density_test, compose_with_permutation, fixture_counterexample_pair,
    half_open_segment_property_test, in_permutation_polytope, iterate, majorizes, mix, qbo_interior_mix_generator,
    ri_membership, ri_sample, segment_extension_test, sorting_cone_invariance_check, Classification, OperatorSpec,
    PermutationOperator, PolytopeSpec, SimplexPoint, TrajectoryVerdict,
};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pt(v: Vec<f64>) -> SimplexPoint {
    SimplexPoint::sanitized(v, 1e-9).expect("simplex point")
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Independent oracle for `x ≺ y`: top-k sums of `x` never exceed those of `y`.
fn top_k_dominated(x: &[f64], y: &[f64], tol: f64) -> bool {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| b.total_cmp(a));
    ys.sort_by(|a, b| b.total_cmp(a));
    let (mut sx, mut sy) = (0.0, 0.0);
    for k in 0..xs.len() {
        sx += xs[k];
        sy += ys[k];
        if sx > sy + tol {
            return false;
        }
    }
    true
}

fn apply_matrix(a: &DoublyStochasticMatrix, y: &[f64]) -> Vec<f64> {
    (0..y.len()).map(|k| (0..y.len()).map(|i| a.get(k, i) * y[i]).sum()).collect()
}

// 1 -----------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_for(1001, 0);
    for m in 2..=5 {
        let (mut yes, mut no) = (0, 0);
        for n in 0..1000 {
            let y = interior_point(&mut rng, m).into_vec();
            let x: Vec<f64> = match n % 4 {
                0 => apply_matrix(&random_doubly_stochastic(&mut rng, m), &y),
                1 => interior_point(&mut rng, m).into_vec(),
                2 => {
                    // a majorized point pushed a little outward
                    let mut x = apply_matrix(&random_doubly_stochastic(&mut rng, m), &y);
                    let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
                    let shift = x[j].min(1e-3);
                    x[j] -= shift;
                    x[i] += shift;
                    x
                }
                _ => {
                    let mut x = y.clone();
                    x.reverse();
                    let d = random_doubly_stochastic(&mut rng, m);
                    if rng.random_bool(0.5) {
                        apply_matrix(&d, &x)
                    } else {
                        x
                    }
                }
            };
            let (x, y) = (pt(x), pt(y));
            let lhs = majorizes(&y, &x).map_err(|e| e.to_string())?;
            let rhs = in_permutation_polytope(&x, &y).map_err(|e| e.to_string())?;
            ensure(lhs == rhs, || format!("m={m}: majorizes={lhs} but hull membership={rhs} for x={x:?}, y={y:?}"))?;
            if lhs {
                yes += 1
            } else {
                no += 1
            }
        }
        ensure(yes > 100 && no > 100, || format!("m={m}: degenerate sample ({yes} majorized, {no} not)"))?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}, limit 30 s"))
}

// 2 -----------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_for(2002, 0);
    for m in 2..=6 {
        for n in 0..20 {
            let a = random_doubly_stochastic(&mut rng, m);
            let op = OperatorSpec::FamilyVa(a);
            let mut bad = 0usize;
            let mut observed = 0usize;
            let report = qbo::bistochastic::falsify_bistochastic_observed(&op, 100_000, 7 + n, |x, vx| {
                observed += 1;
                if !top_k_dominated(vx.coords(), x.coords(), 1e-10) {
                    bad += 1;
                }
            })
            .map_err(|e| e.to_string())?;
            ensure(!report.found(), || format!("m={m}, matrix {n}: counterexample {:?}", report.counterexample))?;
            ensure(observed == 100_000, || format!("m={m}: only {observed} samples examined"))?;
            ensure(bad == 0, || format!("m={m}, matrix {n}: prefix-sum inequality broken on {bad} samples"))?;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}, limit 2 min"))
}

// 3 -----------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let config = DynamicsConfig::default();
    for m in 2..=10 {
        let op = OperatorSpec::FamilyUniform(m);
        let b = barycenter(m).unwrap();
        for start in trial_starts(m, 1000, 3003 + m as u64) {
            let rec = iterate(&op, &start, 10_000, &config).map_err(|e| e.to_string())?;
            let TrajectoryVerdict::Converged { limit } = &rec.verdict else {
                return Err(format!("m={m}: start {start:?} did not converge: {:?}", rec.summary().verdict));
            };
            let err = l1(limit.coords(), b.coords());
            ensure(err < 1e-8, || format!("m={m}: limit error {err:e} from {start:?}"))?;
            ensure(rec.steps_taken <= 10_000, || format!("m={m}: took {} steps", rec.steps_taken))?;
        }
        for p in 2..=16 {
            let orbits = periodic_points_probe(&op, p, 64, 33 + m as u64, &config).map_err(|e| e.to_string())?;
            ensure(orbits.is_empty(), || format!("m={m}: probe found a {p}-cycle {:?}", orbits[0].points))?;
        }
    }
    Ok(())
}

// 4 -----------------------------------------------------------------------

fn criterion_4() -> Outcome {
    for m in 2..=8 {
        let ok = sorting_cone_invariance_check(&OperatorSpec::FamilyUniform(m), 10_000, 4004).map_err(|e| e.to_string())?;
        ensure(ok, || format!("m={m}: a sorting cone is not invariant"))?;
    }
    Ok(())
}

// 5 -----------------------------------------------------------------------

fn random_pool_member(rng: &mut SampleRng, m: usize) -> OperatorSpec {
    match rng.random_range(0..3) {
        0 => {
            let perms = all_permutation_operators(m);
            perms[rng.random_range(0..perms.len())].clone()
        }
        1 => OperatorSpec::FamilyUniform(m),
        _ => OperatorSpec::FamilyVa(random_doubly_stochastic(rng, m)),
    }
}

fn criterion_5() -> Outcome {
    let config = DynamicsConfig::default();
    let mut rng = rng_for(5005, 0);
    for n in 0..50u64 {
        let m = 2 + (n % 3) as usize;
        let count = rng.random_range(2..=4);
        let ops: Vec<OperatorSpec> = (0..count).map(|_| random_pool_member(&mut rng, m)).collect();
        let weights = dirichlet_uniform(&mut rng, count);
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let report = check_mix_fix_identity(&ops, &weights, 24, n, &config).map_err(|e| e.to_string())?;
        ensure(report.holds(), || {
            format!(
                "mix {n} (m={m}): forward violations {:?}, reverse violations {:?}",
                report.forward_violations, report.reverse_violations
            )
        })?;
        ensure(!report.mix_fixed.is_empty(), || format!("mix {n}: no fixed point found at all"))?;
    }
    let (p1, p2) = fixture_counterexample_pair();
    let half = mix(vec![p1, p2], &[0.5, 0.5]).map_err(|e| e.to_string())?;
    let fixed = qbo::find_fixed_points(&half, 200, 55, &config).map_err(|e| e.to_string())?;
    let b = barycenter(3).unwrap();
    ensure(!fixed.is_empty(), || "Fix(mix(P1,P2)) came back empty".into())?;
    for x in &fixed {
        let d = l1(x.coords(), b.coords());
        ensure(d < 1e-9, || format!("Fix(mix(P1,P2)) contains {x:?}, {d:e} from the barycenter"))?;
    }
    Ok(())
}

// 6 -----------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let config = DynamicsConfig::default();
    let (p1, p2) = fixture_counterexample_pair();
    for (name, op) in [("P1", &p1), ("P2", &p2)] {
        let orbits = periodic_points_probe(op, 2, 64, 6006, &config).map_err(|e| e.to_string())?;
        ensure(!orbits.is_empty(), || format!("no 2-cycle found for {name}"))?;
        for o in &orbits {
            ensure(o.period == 2 && o.points.len() == 2, || format!("{name}: malformed orbit {o:?}"))?;
            let back = op.apply(&op.apply(&o.points[0]).unwrap()).unwrap();
            let r = l1(back.coords(), o.points[0].coords());
            let moved = l1(op.apply(&o.points[0]).unwrap().coords(), o.points[0].coords());
            ensure(r < 1e-9 && moved >= 1e-9, || format!("{name}: orbit does not verify (residual {r:e}, displacement {moved:e})"))?;
        }
    }
    let half = mix(vec![p1, p2], &[0.5, 0.5]).map_err(|e| e.to_string())?;
    let orbits = periodic_points_probe(&half, 2, 1000, 6006, &config).map_err(|e| e.to_string())?;
    ensure(orbits.is_empty(), || format!("mix(P1,P2) has a 2-cycle {:?}", orbits[0].points))
}

// 7 -----------------------------------------------------------------------

fn random_irredundant_polytope(rng: &mut SampleRng) -> PolytopeSpec {
    loop {
        let d = rng.random_range(1..=4);
        let s = rng.random_range(1..=8);
        let mut gens: Vec<Vec<f64>> = (0..s).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let keep = check_irredundant(&gens).unwrap();
        let mut it = keep.iter();
        gens.retain(|_| *it.next().unwrap());
        if let Ok(q) = PolytopeSpec::new(gens) {
            if q.is_irredundant() {
                return q;
            }
        }
    }
}

fn probe_points(q: &PolytopeSpec, rng: &mut SampleRng, seed: u64) -> Vec<Vec<f64>> {
    let gens = q.generators();
    let s = gens.len();
    let mut pts = ri_sample(q, 20, seed).unwrap();
    pts.extend(gens.iter().cloned());
    while pts.len() < 50 {
        // combination over a random nonempty subset: on a face or inside
        let mut w = vec![0.0; s];
        let size = rng.random_range(1..=s);
        let sub = dirichlet_uniform(rng, size);
        let mut idx: Vec<usize> = (0..s).collect();
        for i in 0..size {
            let j = rng.random_range(i..s);
            idx.swap(i, j);
            w[idx[i]] = sub[i];
        }
        let d = gens[0].len();
        pts.push((0..d).map(|c| (0..s).map(|j| w[j] * gens[j][c]).sum()).collect());
    }
    pts.truncate(50);
    pts
}

fn criterion_7() -> Outcome {
    let mut rng = rng_for(7007, 0);
    let mut interior = 0usize;
    let mut boundary = 0usize;
    for n in 0..100u64 {
        let q = random_irredundant_polytope(&mut rng);
        for (i, x) in probe_points(&q, &mut rng, n).iter().enumerate() {
            let a = ri_membership(&q, x, 1e-9).map_err(|e| e.to_string())?;
            let b = segment_extension_test(&q, x, 30, n * 100 + i as u64).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("polytope {n}, point {x:?}: ri_membership={a}, extension={b}, generators {:?}", q.generators()))?;
            if a {
                interior += 1
            } else {
                boundary += 1
            }
        }
        ensure(half_open_segment_property_test(&q, 50, n).map_err(|e| e.to_string())?, || {
            format!("polytope {n}: half-open segment property fails")
        })?;
        ensure(closure_density_test(&q, 50, n, 1e-6).map_err(|e| e.to_string())?, || {
            format!("polytope {n}: closure density fails")
        })?;
    }
    ensure(interior > 500 && boundary > 500, || format!("degenerate probes ({interior} interior, {boundary} boundary)"))
}

// 8 -----------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let config = DynamicsConfig::default();
    let mut rng = rng_for(8008, 0);
    for n in 0..100u64 {
        let m = 2 + (n % 2) as usize;
        let mut pool = all_permutation_operators(m);
        for _ in 0..rng.random_range(0..=2) {
            pool.push(random_pool_member(&mut rng, m));
        }
        let op = qbo_interior_mix_generator(n, &pool).map_err(|e| e.to_string())?;
        let v = classify_regularity(&op, 16, n, &config).map_err(|e| e.to_string())?;
        ensure(v.classification == Classification::StrictlyRegularEvidence, || {
            format!("interior mix {n} (m={m}) classified {}", v.classification.name())
        })?;
    }
    let (p1, _) = fixture_counterexample_pair();
    for lambda in [0.1, 0.5, 0.9] {
        let op = mix(vec![OperatorSpec::FamilyUniform(3), p1.clone()], &[lambda, 1.0 - lambda]).map_err(|e| e.to_string())?;
        let v = classify_regularity(&op, 64, 88, &config).map_err(|e| e.to_string())?;
        ensure(v.classification == Classification::StrictlyRegularEvidence, || {
            format!("lambda={lambda}: classified {}", v.classification.name())
        })?;
    }
    Ok(())
}

// 9 -----------------------------------------------------------------------

fn certified_suite() -> Vec<OperatorSpec> {
    let mut rng = rng_for(9009, 0);
    let (p1, p2) = fixture_counterexample_pair();
    let mut suite = vec![p1.clone(), p2.clone(), mix(vec![p1.clone(), p2], &[0.5, 0.5]).unwrap()];
    for m in 2..=6 {
        suite.push(OperatorSpec::FamilyUniform(m));
        suite.push(OperatorSpec::FamilyVa(random_doubly_stochastic(&mut rng, m)));
        suite.push(OperatorSpec::LinearDs(random_doubly_stochastic(&mut rng, m)));
    }
    for m in 2..=3 {
        suite.extend(all_permutation_operators(m));
        suite.push(qbo_interior_mix_generator(m as u64, &all_permutation_operators(m)).unwrap());
    }
    for lambda in [0.1, 0.5, 0.9] {
        suite.push(mix(vec![OperatorSpec::FamilyUniform(3), p1.clone()], &[lambda, 1.0 - lambda]).unwrap());
    }
    let rot = PermutationOperator::new(vec![1, 2, 0]).unwrap();
    suite.push(compose_with_permutation(&rot, &OperatorSpec::FamilyUniform(3)).unwrap());
    suite.push(compose_with_permutation(&rot, &OperatorSpec::FamilyVa(random_doubly_stochastic(&mut rng, 3))).unwrap());
    suite
}

fn criterion_9() -> Outcome {
    let max_steps = 2_000;
    let config = DynamicsConfig {
        window: max_steps + 2,
        max_steps,
        ..DynamicsConfig::default()
    };
    let mut steps_checked = 0usize;
    for (n, op) in certified_suite().iter().enumerate() {
        ensure(certify_bistochastic(op).is_certified(), || format!("suite operator {n} is not certified"))?;
        for start in trial_starts(op.dim(), 24, n as u64) {
            let rec = iterate(op, &start, max_steps, &config).map_err(|e| e.to_string())?;
            ensure(rec.first_step == 0, || "trajectory window was trimmed".into())?;
            for w in rec.iterates.windows(2) {
                let ok = majorizes(&w[0], &w[1]).map_err(|e| e.to_string())?;
                ensure(ok && top_k_dominated(w[1].coords(), w[0].coords(), 1e-10), || {
                    format!("suite operator {n}: {:?} does not majorize its image {:?}", w[0], w[1])
                })?;
                steps_checked += 1;
            }
        }
    }
    ensure(steps_checked > 1000, || format!("only {steps_checked} steps checked"))
}

// 10 ----------------------------------------------------------------------

fn run_classify(op_file: &Path, seed: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qbo"))
        .args(["classify", op_file.to_str().unwrap(), "--seed", seed, "--trials", "32"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("classify exited with {:?}", out.status))?;
    Ok(out.stdout)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (p1, _) = fixture_counterexample_pair();
    let ops = [
        OperatorSpec::FamilyUniform(4),
        mix(vec![OperatorSpec::FamilyUniform(3), p1.clone()], &[0.5, 0.5]).unwrap(),
        p1,
    ];
    for (i, op) in ops.iter().enumerate() {
        let path = dir.path().join(format!("op{i}.json"));
        std::fs::write(&path, serde_json::to_string(op).unwrap()).map_err(|e| e.to_string())?;
        let a = run_classify(&path, "12345")?;
        let b = run_classify(&path, "12345")?;
        ensure(!a.is_empty() && a == b, || format!("operator {i}: outputs differ between identical runs"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("majorization test agrees with permutation-hull membership", criterion_1),
        ("FamilyVA operators survive falsification", criterion_2),
        ("FamilyUniform trajectories converge to the barycenter", criterion_3),
        ("FamilyUniform keeps sorting cones invariant", criterion_4),
        ("fixed points of mixes are the common fixed points", criterion_5),
        ("periodic points of P1, P2 and their mix", criterion_6),
        ("relative interior characterizations agree", criterion_7),
        ("interior mixes classify as strictly regular", criterion_8),
        ("trajectories of certified operators descend in majorization", criterion_9),
        ("classify output is deterministic", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
