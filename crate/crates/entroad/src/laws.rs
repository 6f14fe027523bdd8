//! Randomized law suites: the structural identities the engine is built on,
//! checked numerically on seeded random instances.
//!
//! Five suites: the convex-combination axioms (on entropy values and on
//! state spaces), functoriality of pushforwards under relation composition,
//! naturality of the entropy-sum laxator, equivariance of the operad action
//! under input permutations, and agreement between the solver and the
//! brute-force grid oracle on the catalog reconstructions.
//!
//! Instances are generated from a single seed and evaluated in a fixed
//! order, so two runs with the same seed render byte-identical reports.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::catalog;
use crate::convex::{BoundingBox, ConvexSpace, State};
use crate::operad::{act_with, permute_op, Operation, Permutation};
use crate::optimize::{brute_force_report, pushforward_with, SolverConfig, Status};
use crate::relation::{AffineMap, ConvexRelation, RelEq};
use crate::system::{sum_all, ThermostaticSystem};
use crate::xreal::{ExtReal, Finite, NegInf, PosInf};
use crate::Error;

/// Gap threshold shared by the identity suites.
pub const LAW_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: usize,
    pub worst_gap: f64,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            checks: 0,
            failures: 0,
            worst_gap: 0.0,
        }
    }

    fn record(&mut self, gap: f64, tol: f64) {
        self.checks += 1;
        if !(gap <= tol) {
            self.failures += 1;
        }
        if gap > self.worst_gap {
            self.worst_gap = gap;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone)]
pub struct LawsReport {
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteReport>,
}

impl LawsReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn render(&self) -> String {
        let mut out = format!("laws seed={} trials={}\n", self.seed, self.trials);
        for s in &self.suites {
            out.push_str(&format!(
                "suite {}: checks={} failures={} worst_gap={:.6e}\n",
                s.name, s.checks, s.failures, s.worst_gap
            ));
        }
        out.push_str(if self.all_passed() {
            "result: PASS\n"
        } else {
            "result: FAIL\n"
        });
        out
    }
}

/// Runs every suite on `trials` seeded instances each.
pub fn run_all(seed: u64, trials: usize, cfg: &SolverConfig) -> Result<LawsReport, Error> {
    if trials == 0 {
        return Err(Error::Domain("laws need at least one trial".into()));
    }
    let suites = vec![
        convex_axiom_suite(seed, trials),
        functoriality_suite(seed, trials, cfg)?,
        laxator_suite(seed, trials, cfg)?,
        equivariance_suite(seed, trials, cfg)?,
        oracle_suite(seed, trials, cfg)?,
    ];
    Ok(LawsReport {
        seed,
        trials,
        suites,
    })
}

/// Gap between two entropy values: 0 for equal infinite tags, |a − b| for
/// finite pairs, ∞ for a tag mismatch.
pub fn value_gap(a: ExtReal, b: ExtReal) -> f64 {
    match (a, b) {
        (Finite(x), Finite(y)) => (x - y).abs(),
        (x, y) if x == y => 0.0,
        _ => f64::INFINITY,
    }
}

// ---------------------------------------------------------------------------
// Convex axioms
// ---------------------------------------------------------------------------

/// The convex-combination axioms on entropy values and sampled states.
pub fn convex_axiom_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut report = SuiteReport::new("convex_axioms");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA1);
    let pool = [
        NegInf,
        Finite(-2.0),
        Finite(0.0),
        Finite(0.7),
        Finite(5.0),
        PosInf,
    ];
    let draw = |rng: &mut ChaCha8Rng| pool[rng.random_range(0..pool.len())];

    for _ in 0..trials {
        let lambda = rng.random::<f64>();
        let mu = rng.random::<f64>();
        let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));

        // Symmetry and idempotence.
        let s1 = ExtReal::combine(lambda, x, y).unwrap();
        let s2 = ExtReal::combine(1.0 - lambda, y, x).unwrap();
        report.record(value_gap(s1, s2), 1e-12);
        report.record(value_gap(ExtReal::combine(lambda, x, x).unwrap(), x), 1e-12);

        // The associativity-like exchange law.
        let lambda_p = lambda * mu;
        if (1.0 - lambda_p).abs() > 1e-12 {
            let mu_p = 1.0 - (1.0 - lambda) / (1.0 - lambda_p);
            if (0.0..=1.0).contains(&mu_p) {
                let lhs = ExtReal::combine(lambda, ExtReal::combine(mu, x, y).unwrap(), z).unwrap();
                let rhs =
                    ExtReal::combine(lambda_p, x, ExtReal::combine(mu_p, y, z).unwrap()).unwrap();
                report.record(value_gap(lhs, rhs), 1e-12);
            }
        }

        // Addition is a commutative monoid with -∞ dominant.
        report.record(value_gap(x + y, y + x), 0.0);
        report.record(value_gap((x + y) + z, x + (y + z)), 1e-12);
        report.record(value_gap(x + Finite(0.0), x), 0.0);
    }

    // The same exchange law for states of a sampled space.
    let space = ConvexSpace::product(ConvexSpace::Orthant { n: 1 }, ConvexSpace::Simplex { n: 1 });
    let region = BoundingBox::cube(3, 0.05, 1.0);
    if let Ok(points) = space.sample(&region, seed ^ 0xA2, 3 * trials.min(50)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA3);
        for triple in points.chunks(3) {
            let [x, y, z] = triple else { continue };
            let lambda = rng.random::<f64>();
            let mu = rng.random::<f64>();
            let lambda_p = lambda * mu;
            if (1.0 - lambda_p).abs() < 1e-12 {
                continue;
            }
            let mu_p = 1.0 - (1.0 - lambda) / (1.0 - lambda_p);
            if !(0.0..=1.0).contains(&mu_p) {
                continue;
            }
            let lhs = space
                .combine(lambda, &space.combine(mu, x, y).unwrap(), z)
                .unwrap();
            let rhs = space
                .combine(lambda_p, x, &space.combine(mu_p, y, z).unwrap())
                .unwrap();
            let gap = lhs
                .coords()
                .iter()
                .zip(rhs.coords())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            report.record(gap, 1e-9);
            report.record(
                space.contains(&lhs).map(|b| !b as u8 as f64).unwrap_or(1.0),
                0.5,
            );
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Random instances
// ---------------------------------------------------------------------------

/// A system, two composable relations, and target points with known-good
/// provenance (pushed samples).
struct ChainInstance {
    system: ThermostaticSystem,
    first: ConvexRelation,
    second: ConvexRelation,
    targets: Vec<State>,
}

fn positive_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| 0.3 + 1.2 * rng.random::<f64>()).collect())
        .collect()
}

fn signed_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
        .collect()
}

fn tank_stack(rng: &mut ChaCha8Rng, k: usize) -> ThermostaticSystem {
    let tanks: Vec<ThermostaticSystem> = (0..k)
        .map(|i| ThermostaticSystem::tank(format!("tank{i}"), 0.5 + 2.5 * rng.random::<f64>()))
        .collect();
    sum_all(&tanks)
}

fn graph_rel(source: ConvexSpace, target: ConvexSpace, matrix: Vec<Vec<f64>>) -> ConvexRelation {
    let offset = vec![0.0; matrix.len()];
    ConvexRelation::graph(source, target, AffineMap::new(matrix, offset).unwrap())
        .expect("generator dimensions line up")
}

fn apply_rows(matrix: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    matrix
        .iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn chain_instance(rng: &mut ChaCha8Rng, trial: usize, n_targets: usize) -> ChainInstance {
    match trial % 4 {
        // Positive weighted sums of tanks: bounded fibers, finite values.
        0 => {
            let k = 1 + rng.random_range(0..3);
            let m = 1 + rng.random_range(0..k);
            let p = 1 + rng.random_range(0..m);
            let system = tank_stack(rng, k);
            let a = positive_matrix(rng, m, k);
            let b = positive_matrix(rng, p, m);
            let y_space = ConvexSpace::Orthant { n: m };
            let z_space = ConvexSpace::Orthant { n: p };
            let first = graph_rel(system.space().clone(), y_space.clone(), a.clone());
            let second = graph_rel(y_space, z_space, b.clone());
            let region = BoundingBox::cube(k, 0.2, 2.0);
            let targets = system
                .space()
                .sample(&region, rng.random(), n_targets)
                .unwrap()
                .into_iter()
                .map(|x| State::new(apply_rows(&b, &apply_rows(&a, x.coords()))))
                .collect();
            ChainInstance {
                system,
                first,
                second,
                targets,
            }
        }
        // Affine entropies on full lines: exercises ±∞ agreement.
        1 => {
            let k = 1 + rng.random_range(0..3);
            let m = 1 + rng.random_range(0..k);
            let p = 1 + rng.random_range(0..m);
            let coeffs: Vec<f64> = (0..k).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
            let system = ThermostaticSystem::new(
                "affine",
                ConvexSpace::RealLine { n: k },
                crate::system::EntropyFn::Affine {
                    coeffs,
                    offset: 2.0 * rng.random::<f64>() - 1.0,
                },
            )
            .unwrap();
            let a = signed_matrix(rng, m, k);
            let b = signed_matrix(rng, p, m);
            let first = graph_rel(
                system.space().clone(),
                ConvexSpace::RealLine { n: m },
                a.clone(),
            );
            let second = graph_rel(
                ConvexSpace::RealLine { n: m },
                ConvexSpace::RealLine { n: p },
                b.clone(),
            );
            let region = BoundingBox::cube(k, -1.5, 1.5);
            let targets = system
                .space()
                .sample(&region, rng.random(), n_targets)
                .unwrap()
                .into_iter()
                .map(|x| State::new(apply_rows(&b, &apply_rows(&a, x.coords()))))
                .collect();
            ChainInstance {
                system,
                first,
                second,
                targets,
            }
        }
        // Shannon through expectation maps.
        2 => {
            let n = 1 + rng.random_range(0..2);
            let system = ThermostaticSystem::shannon("p", n);
            let a = positive_matrix(rng, 1, n + 1);
            let b = positive_matrix(rng, 1, 1);
            let first = graph_rel(
                system.space().clone(),
                ConvexSpace::RealLine { n: 1 },
                a.clone(),
            );
            let second = graph_rel(
                ConvexSpace::RealLine { n: 1 },
                ConvexSpace::RealLine { n: 1 },
                b.clone(),
            );
            let region = BoundingBox::cube(n + 1, 0.0, 1.0);
            let targets = system
                .space()
                .sample(&region, rng.random(), n_targets)
                .unwrap()
                .into_iter()
                .map(|x| State::new(apply_rows(&b, &apply_rows(&a, x.coords()))))
                .collect();
            ChainInstance {
                system,
                first,
                second,
                targets,
            }
        }
        // Deterministic ±∞ shapes: unbounded through Full, impossible
        // through a shifted graph.
        _ => {
            if trial % 8 == 3 {
                let k = 1 + rng.random_range(0..2);
                let system = tank_stack(rng, k);
                let first =
                    ConvexRelation::full(system.space().clone(), ConvexSpace::Orthant { n: 1 });
                let second = ConvexRelation::identity(ConvexSpace::Orthant { n: 1 });
                let targets = (0..n_targets)
                    .map(|i| State::new(vec![0.5 + i as f64]))
                    .collect();
                ChainInstance {
                    system,
                    first,
                    second,
                    targets,
                }
            } else {
                let system = ThermostaticSystem::tank("tank", 1.0 + rng.random::<f64>());
                let first = graph_rel(
                    system.space().clone(),
                    ConvexSpace::RealLine { n: 1 },
                    vec![vec![1.0]],
                );
                let second = ConvexRelation::graph(
                    ConvexSpace::RealLine { n: 1 },
                    ConvexSpace::RealLine { n: 1 },
                    AffineMap::new(vec![vec![1.0]], vec![-5.0]).unwrap(),
                )
                .unwrap();
                // Half the targets land below the reachable band: -∞ rows.
                let targets = (0..n_targets)
                    .map(|i| State::new(vec![i as f64 * 2.0 - 8.0]))
                    .collect();
                ChainInstance {
                    system,
                    first,
                    second,
                    targets,
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Functoriality
// ---------------------------------------------------------------------------

/// `(R'∘R)_* S = R'_*(R_* S)` on seeded random instances, 5 targets each.
pub fn functoriality_suite(
    seed: u64,
    trials: usize,
    cfg: &SolverConfig,
) -> Result<SuiteReport, Error> {
    let mut report = SuiteReport::new("functoriality");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF1);
    for trial in 0..trials {
        let inst = chain_instance(&mut rng, trial, 5);
        let composite = inst.first.compose(&inst.second)?;
        let one_step = pushforward_with(&inst.system, &composite, cfg.clone())?;
        let first_step = pushforward_with(&inst.system, &inst.first, cfg.clone())?;
        let two_step = pushforward_with(&first_step, &inst.second, cfg.clone())?;
        for z in &inst.targets {
            let lhs = one_step.evaluate(z)?;
            let rhs = two_step.evaluate(z)?;
            report.record(value_gap(lhs, rhs), LAW_TOL);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Laxator naturality
// ---------------------------------------------------------------------------

/// The commuting-square check `(Q×R)*(S+T) = Q*S + R*T`, with the addition
/// on the right injectable so a corrupted table is caught by the suite.
pub fn laxator_suite_with(
    seed: u64,
    trials: usize,
    cfg: &SolverConfig,
    add: &dyn Fn(ExtReal, ExtReal) -> ExtReal,
) -> Result<SuiteReport, Error> {
    let mut report = SuiteReport::new("laxator");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1A);
    for trial in 0..trials {
        let (left, right) = if trial % 4 == 3 {
            // A ±∞ mix: an unbounded side against an impossible side, where
            // the addition convention itself is what's under test.
            let unbounded = chain_instance(&mut rng, 3, 1);
            let mut impossible = chain_instance(&mut rng, 7, 1);
            impossible.targets = vec![State::new(vec![-8.0])];
            (unbounded, impossible)
        } else {
            (
                chain_instance(&mut rng, trial % 3, 3),
                chain_instance(&mut rng, (trial + 1) % 3, 3),
            )
        };
        let q = left.first.compose(&left.second)?;
        let r = right.first.compose(&right.second)?;
        let s = &left.system;
        let t = &right.system;
        let joint = sum_all(&[s.clone(), t.clone()]);
        let product = q.product(&r);
        let pushed_joint = pushforward_with(&joint, &product, cfg.clone())?;
        let pushed_s = pushforward_with(s, &q, cfg.clone())?;
        let pushed_t = pushforward_with(t, &r, cfg.clone())?;
        for (x_p, y_p) in left.targets.iter().zip(&right.targets) {
            let mut coords = x_p.coords().to_vec();
            coords.extend_from_slice(y_p.coords());
            let lhs = pushed_joint.evaluate(&State::new(coords))?;
            let rhs = add(pushed_s.evaluate(x_p)?, pushed_t.evaluate(y_p)?);
            report.record(value_gap(lhs, rhs), LAW_TOL);
        }
    }
    Ok(report)
}

/// [`laxator_suite_with`] under the engine's own addition.
pub fn laxator_suite(seed: u64, trials: usize, cfg: &SolverConfig) -> Result<SuiteReport, Error> {
    laxator_suite_with(seed, trials, cfg, &ExtReal::add)
}

// ---------------------------------------------------------------------------
// Equivariance
// ---------------------------------------------------------------------------

/// `act(permute_op(op, σ), σ·systems) = act(op, systems)` on seeded merges.
pub fn equivariance_suite(
    seed: u64,
    trials: usize,
    cfg: &SolverConfig,
) -> Result<SuiteReport, Error> {
    let mut report = SuiteReport::new("equivariance");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE9);
    for _ in 0..trials {
        let arity = 2 + rng.random_range(0..2);
        let weights: Vec<f64> = (0..arity).map(|_| 0.5 + rng.random::<f64>()).collect();
        let inputs = vec![ConvexSpace::Orthant { n: 1 }; arity];
        let rel = ConvexRelation::affine(
            ConvexSpace::product_all(inputs.iter().cloned()),
            ConvexSpace::Orthant { n: 1 },
            vec![RelEq {
                a: weights.clone(),
                b: vec![-1.0],
                c: 0.0,
            }],
            vec![],
        )?;
        let op = Operation::new(inputs, ConvexSpace::Orthant { n: 1 }, rel)?;
        let systems: Vec<ThermostaticSystem> = (0..arity)
            .map(|i| ThermostaticSystem::tank(format!("t{i}"), 0.5 + 2.0 * rng.random::<f64>()))
            .collect();
        let mut sigma: Vec<usize> = (0..arity).collect();
        // Fisher-Yates with the suite's rng.
        for i in (1..arity).rev() {
            sigma.swap(i, rng.random_range(0..=i));
        }
        let sigma = Permutation::new(sigma)?;
        let permuted = permute_op(&op, &sigma)?;
        let lhs_sys = act_with(&permuted, &sigma.apply(&systems), cfg.clone())?;
        let rhs_sys = act_with(&op, &systems, cfg.clone())?;
        for _ in 0..3 {
            let u: Vec<f64> = (0..arity)
                .map(|_| 0.2 + 1.8 * rng.random::<f64>())
                .collect();
            let y: f64 = weights.iter().zip(&u).map(|(w, ui)| w * ui).sum();
            let y = State::new(vec![y]);
            report.record(
                value_gap(lhs_sys.evaluate(&y)?, rhs_sys.evaluate(&y)?),
                LAW_TOL,
            );
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Oracle agreement
// ---------------------------------------------------------------------------

/// Compares the solver against the grid oracle on every catalog entry whose
/// lifted program has dimension at most 4, at `2 · spacing · Lipschitz`
/// tolerance with matching ±∞ statuses.
pub fn oracle_suite(seed: u64, trials: usize, cfg: &SolverConfig) -> Result<SuiteReport, Error> {
    let _ = seed;
    let mut report = SuiteReport::new("oracle_agreement");
    let entries: Vec<catalog::CatalogEntry> = vec![
        catalog::two_tanks(1.0, 2.0)?,
        catalog::bath_coupling(1.0)?,
        catalog::canonical(&[0.0, 1.0, 2.0], 1.0)?,
        catalog::grand_canonical(&[0.0, 1.0], &[0.0, 1.0], 1.0, 1.0)?,
        catalog::microcanonical_entry(&[1.0, 2.0, 2.0, 3.0])?,
    ];
    let mut oracle_cfg = cfg.clone();
    oracle_cfg.grid_resolution = 2001;
    for entry in &entries {
        for query in entry.queries.iter().take(trials.max(1).min(3)) {
            let engine = entry.solve(query, cfg)?;
            let oracle = oracle_for_entry(entry, query, &oracle_cfg)?;
            match (engine.value, oracle.value) {
                (Finite(a), Finite(b)) => {
                    let bound = 2.0 * oracle.spacing * oracle.local_lipschitz.max(1.0);
                    // A grid max can only undershoot the supremum.
                    let gap = (a - b).abs();
                    report.record(if gap <= bound { 0.0 } else { gap }, LAW_TOL);
                }
                (a, b) => report.record(value_gap(a, b), 0.0),
            }
            if matches!(engine.status, Status::Unbounded) {
                report.record(value_gap(oracle.value, PosInf), 0.0);
            }
            if matches!(engine.status, Status::Infeasible) {
                report.record(value_gap(oracle.value, NegInf), 0.0);
            }
        }
    }
    Ok(report)
}

/// Runs the grid oracle on a catalog entry's underlying program.
pub fn oracle_for_entry(
    entry: &catalog::CatalogEntry,
    query: &State,
    cfg: &SolverConfig,
) -> Result<crate::optimize::OracleReport, Error> {
    match entry.operation() {
        Some(op) => {
            let joint = sum_all(entry.systems());
            let fiber = op.relation().fiber(query)?;
            brute_force_report(joint.entropy(), &fiber, cfg, None)
        }
        None => {
            // The microcanonical entry: Shannon over the per-energy
            // sub-simplex.
            let h = [1.0, 2.0, 2.0, 3.0];
            let cs = catalog::microcanonical_feasible_set(&h, query.coords()[0]);
            brute_force_report(
                &crate::system::EntropyFn::Shannon { n: h.len() - 1 },
                &cs,
                cfg,
                None,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_run_passes_and_is_deterministic() {
        let cfg = SolverConfig::default();
        let a = run_all(11, 6, &cfg).unwrap();
        assert!(a.all_passed(), "{}", a.render());
        let b = run_all(11, 6, &cfg).unwrap();
        assert_eq!(a.render(), b.render());
    }

    #[test]
    fn single_trial_runs_every_suite() {
        let cfg = SolverConfig::default();
        let report = run_all(3, 1, &cfg).unwrap();
        assert_eq!(report.suites.len(), 5);
        for s in &report.suites {
            assert!(s.checks >= 1, "suite {} ran nothing", s.name);
        }
        assert!(run_all(3, 0, &cfg).is_err());
    }

    #[test]
    fn corrupted_addition_table_fails_the_laxator_suite() {
        // The rejected convention ∞ + (-∞) = ∞.
        let corrupted = |a: ExtReal, b: ExtReal| match (a, b) {
            (PosInf, _) | (_, PosInf) => PosInf,
            (NegInf, _) | (_, NegInf) => NegInf,
            (Finite(x), Finite(y)) => Finite(x + y),
        };
        let cfg = SolverConfig::default();
        let good = laxator_suite_with(5, 8, &cfg, &ExtReal::add).unwrap();
        assert!(good.passed(), "baseline must pass");
        let bad = laxator_suite_with(5, 8, &cfg, &corrupted).unwrap();
        assert!(
            bad.failures > 0,
            "the ±∞ mix instances must expose the corrupted table"
        );
    }
}
