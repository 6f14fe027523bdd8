//! Constrained concave maximization: the computational core behind
//! pushforward entropies.
//!
//! `maximize` computes `sup f(x)` over a polyhedral constraint set with the
//! extended-real conventions of the rest of the crate: an empty feasible set
//! is `-∞`, unbounded ascent is `+∞` (with a recession-ray certificate), and
//! suprema over open boundaries are reported as approached rather than
//! attained.
//!
//! The solve pipeline:
//!
//! 1. flatten the objective, hoisting nested pushforwards into fresh lifted
//!    coordinates tied down by their relations' constraints;
//! 2. a phase-one linear program decides feasibility and produces a
//!    max-slack interior starting point;
//! 3. recession-ray probes decide unboundedness: candidate rays come from
//!    small LPs over the recession cone (one for the affine growth
//!    direction, one per logarithmic coordinate), and each candidate is
//!    probed at geometrically spaced step lengths — crossing
//!    `unbounded_threshold` or still climbing at astronomic steps means
//!    `+∞`, and concavity rules out any later comeback;
//! 4. projected-gradient ascent with backtracking line search over the
//!    equality null space, with an active-set working set for the
//!    inequalities and a Newton polish step whenever the reduced Hessian is
//!    negative definite.

use serde::{Deserialize, Serialize};

use crate::convex::{dot, BoundingBox, ConstraintSet, State};
use crate::linalg;
use crate::lp::{LpOutcome, LpProblem};
use crate::relation::ConvexRelation;
use crate::system::{EntropyFn, ThermostaticSystem};
use crate::xreal::{ExtReal, Finite, NegInf, PosInf};
use crate::Error;

/// Solver knobs. Everything downstream of a config is deterministic, so two
/// runs with equal configs produce bit-identical results.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Absolute tolerance on the returned supremum.
    pub tol_value: f64,
    /// Absolute tolerance per membership constraint.
    pub tol_membership: f64,
    pub max_iters: usize,
    /// Objective level that certifies unbounded ascent along a feasible ray.
    pub unbounded_threshold: f64,
    /// Grid points per reduced axis in the brute-force oracle.
    pub grid_resolution: usize,
    /// Seed for the sampling helpers; the solver itself draws nothing.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_value: 1e-8,
            tol_membership: 1e-9,
            max_iters: 10_000,
            unbounded_threshold: 1e12,
            grid_resolution: 101,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Finite supremum attained at `argmax`.
    Attained,
    /// Finite supremum on an open boundary: the value is the limit, no
    /// maximizer exists.
    Approached,
    Unbounded,
    Infeasible,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Attained => "attained",
            Status::Approached => "approached",
            Status::Unbounded => "unbounded",
            Status::Infeasible => "infeasible",
        })
    }
}

/// Outcome of a constrained maximization.
#[derive(Debug, Clone)]
pub struct MaxResult {
    pub value: ExtReal,
    /// Present exactly when the supremum is finite and attained; covers the
    /// first `primary_dim` coordinates of the lifted program.
    pub argmax: Option<State>,
    pub status: Status,
    pub iterations: usize,
    /// Recession direction witnessing `+∞`, over the lifted coordinates.
    pub certificate: Option<Vec<f64>>,
}

impl MaxResult {
    fn infeasible() -> Self {
        MaxResult {
            value: NegInf,
            argmax: None,
            status: Status::Infeasible,
            iterations: 0,
            certificate: None,
        }
    }

    fn unbounded(certificate: Option<Vec<f64>>, iterations: usize) -> Self {
        MaxResult {
            value: PosInf,
            argmax: None,
            status: Status::Unbounded,
            iterations,
            certificate,
        }
    }
}

// ---------------------------------------------------------------------------
// Objective flattening
// ---------------------------------------------------------------------------

/// One pushforward-free entropy leaf applied to a scattered coordinate block.
struct Term {
    coords: Vec<usize>,
    leaf: EntropyFn,
}

struct FlatObjective {
    terms: Vec<Term>,
    dim: usize,
}

/// Gradient clamp for `log`-type leaves: keeps gradients finite when a
/// coordinate is pinned to zero by an equality (where its null-space
/// component is zero anyway).
const GRAD_CLAMP: f64 = 1e-12;

impl FlatObjective {
    fn eval(&self, z: &[f64]) -> Result<ExtReal, Error> {
        let mut total = Finite(0.0);
        for term in &self.terms {
            let block: Vec<f64> = term.coords.iter().map(|&i| z[i]).collect();
            total = total + term.leaf.eval_unchecked(&block)?;
            if total == NegInf {
                return Ok(NegInf);
            }
        }
        Ok(total)
    }

    /// `Some(-∞)` when a `-∞` constant appears, else `Some(+∞)` for a `+∞`
    /// constant, else `None`.
    fn constant_infinity(&self) -> Option<ExtReal> {
        let mut pos = false;
        for term in &self.terms {
            if let EntropyFn::Constant { value } = &term.leaf {
                match value {
                    NegInf => return Some(NegInf),
                    PosInf => pos = true,
                    Finite(_) => {}
                }
            }
        }
        pos.then_some(PosInf)
    }

    fn all_affine(&self) -> bool {
        self.terms.iter().all(|t| {
            matches!(
                t.leaf,
                EntropyFn::Affine { .. } | EntropyFn::HeatBath { .. } | EntropyFn::Constant { .. }
            )
        })
    }

    /// Total linear form `(a, b)` with `f(z) = a · z + b`, for affine-only
    /// objectives.
    fn linear_form(&self) -> (Vec<f64>, f64) {
        let mut a = vec![0.0; self.dim];
        let mut b = 0.0;
        for term in &self.terms {
            match &term.leaf {
                EntropyFn::Affine { coeffs, offset } => {
                    for (j, &c) in coeffs.iter().enumerate() {
                        a[term.coords[j]] += c;
                    }
                    b += offset;
                }
                EntropyFn::HeatBath { temperature } => {
                    a[term.coords[0]] += 1.0 / temperature;
                }
                EntropyFn::Constant { value } => {
                    if let Finite(v) = value {
                        b += v;
                    }
                }
                _ => {}
            }
        }
        (a, b)
    }

    fn gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; self.dim];
        for term in &self.terms {
            let block: Vec<f64> = term.coords.iter().map(|&i| z[i]).collect();
            let local = leaf_gradient(&term.leaf, &block)?;
            for (j, &gi) in local.iter().enumerate() {
                g[term.coords[j]] += gi;
            }
        }
        Some(g)
    }

    fn hessian(&self, z: &[f64]) -> Option<Vec<Vec<f64>>> {
        let mut h = vec![vec![0.0; self.dim]; self.dim];
        for term in &self.terms {
            let block: Vec<f64> = term.coords.iter().map(|&i| z[i]).collect();
            let local = leaf_hessian(&term.leaf, &block)?;
            for (r, row) in local.iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    h[term.coords[r]][term.coords[c]] += v;
                }
            }
        }
        Some(h)
    }

    /// Affine growth direction plus the coordinates whose leaves grow
    /// logarithmically, for the recession probes.
    fn growth(&self) -> (Vec<f64>, Vec<usize>) {
        let mut linear = vec![0.0; self.dim];
        let mut coords = Vec::new();
        for term in &self.terms {
            match &term.leaf {
                EntropyFn::Affine { coeffs, .. } => {
                    for (j, &c) in coeffs.iter().enumerate() {
                        linear[term.coords[j]] += c;
                    }
                }
                EntropyFn::HeatBath { temperature } => {
                    linear[term.coords[0]] += 1.0 / temperature;
                }
                EntropyFn::LogTank { .. } => coords.push(term.coords[0]),
                EntropyFn::SackurTetrode { .. } => coords.extend_from_slice(&term.coords),
                _ => {}
            }
        }
        coords.sort_unstable();
        coords.dedup();
        (linear, coords)
    }
}

fn leaf_gradient(leaf: &EntropyFn, x: &[f64]) -> Option<Vec<f64>> {
    match leaf {
        EntropyFn::LogTank { heat_capacity } => Some(vec![heat_capacity / x[0].max(GRAD_CLAMP)]),
        EntropyFn::SackurTetrode { .. } => {
            let (u, v, n) = (
                x[0].max(GRAD_CLAMP),
                x[1].max(GRAD_CLAMP),
                x[2].max(GRAD_CLAMP),
            );
            let l = leaf
                .eval_unchecked(&[u, v, n])
                .ok()?
                .as_finite()
                .map(|s| s / n - 2.5)?;
            Some(vec![1.5 * n / u, n / v, l])
        }
        EntropyFn::HeatBath { temperature } => Some(vec![1.0 / temperature]),
        EntropyFn::Shannon { .. } => {
            Some(x.iter().map(|&p| -(p.max(GRAD_CLAMP)).ln() - 1.0).collect())
        }
        EntropyFn::Affine { coeffs, .. } => Some(coeffs.clone()),
        EntropyFn::Measurement { maps } => {
            // Supergradient of the concave min: the gradient of the
            // first map attaining it.
            let clamped: Vec<f64> = x.iter().map(|&p| p.max(0.0)).collect();
            let values: Vec<f64> = maps
                .iter()
                .map(|e| crate::system::shannon_entropy(&e.apply(&clamped)))
                .collect();
            let best = values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())?
                .0;
            let e = &maps[best];
            let q = e.apply(&clamped);
            let dq: Vec<f64> = q
                .iter()
                .map(|&qi| -(qi.max(GRAD_CLAMP)).ln() - 1.0)
                .collect();
            Some(
                (0..x.len())
                    .map(|j| e.rows().iter().zip(&dq).map(|(row, d)| row[j] * d).sum())
                    .collect(),
            )
        }
        EntropyFn::Constant { value } => value.is_finite().then(|| vec![0.0; x.len()]),
        EntropyFn::VonNeumann { .. } | EntropyFn::Sum { .. } | EntropyFn::Pushforward { .. } => {
            None
        }
    }
}

fn leaf_hessian(leaf: &EntropyFn, x: &[f64]) -> Option<Vec<Vec<f64>>> {
    let zero = |n: usize| vec![vec![0.0; n]; n];
    match leaf {
        EntropyFn::LogTank { heat_capacity } => {
            let u = x[0].max(GRAD_CLAMP);
            Some(vec![vec![-heat_capacity / (u * u)]])
        }
        EntropyFn::SackurTetrode { .. } => {
            let (u, v, n) = (
                x[0].max(GRAD_CLAMP),
                x[1].max(GRAD_CLAMP),
                x[2].max(GRAD_CLAMP),
            );
            Some(vec![
                vec![-1.5 * n / (u * u), 0.0, 1.5 / u],
                vec![0.0, -n / (v * v), 1.0 / v],
                vec![1.5 / u, 1.0 / v, -2.5 / n],
            ])
        }
        EntropyFn::HeatBath { .. } | EntropyFn::Affine { .. } => Some(zero(x.len())),
        EntropyFn::Shannon { .. } => {
            let mut h = zero(x.len());
            for (i, &p) in x.iter().enumerate() {
                h[i][i] = -1.0 / p.max(GRAD_CLAMP);
            }
            Some(h)
        }
        EntropyFn::Constant { value } => value.is_finite().then(|| zero(x.len())),
        _ => None,
    }
}

/// Rewrites `f` over the leading block of `cs`, hoisting every `Pushforward`
/// node into fresh trailing coordinates constrained by its relation.
fn flatten(
    f: &EntropyFn,
    block: Vec<usize>,
    cs: &mut ConstraintSet,
    terms: &mut Vec<Term>,
) -> Result<(), Error> {
    match f {
        EntropyFn::Sum {
            left,
            right,
            left_dim,
            ..
        } => {
            let (lb, rb) = block.split_at(*left_dim);
            flatten(left, lb.to_vec(), cs, terms)?;
            flatten(right, rb.to_vec(), cs, terms)
        }
        EntropyFn::Pushforward { inner, rel, .. } => {
            let low = rel.lower();
            debug_assert_eq!(low.y_dim, block.len());
            let off = cs.extend_dim(low.x_dim + low.mid_dim);
            let place = |coeffs: &[f64], dim: usize| {
                let mut row = vec![0.0; dim];
                for (j, &c) in coeffs[..low.x_dim + low.mid_dim].iter().enumerate() {
                    row[off + j] = c;
                }
                for (j, &c) in coeffs[low.x_dim + low.mid_dim..].iter().enumerate() {
                    row[block[j]] = c;
                }
                row
            };
            for (coeffs, rhs) in &low.eq {
                let row = place(coeffs, cs.dim);
                cs.push_eq(row, *rhs);
            }
            for c in &low.ineq {
                let row = place(&c.coeffs, cs.dim);
                cs.push_ineq(row, c.rhs, c.strict);
            }
            let inner_block: Vec<usize> = (off..off + low.x_dim).collect();
            flatten(inner.entropy(), inner_block, cs, terms)
        }
        EntropyFn::VonNeumann { .. } => Err(Error::Domain(
            "von Neumann entropy supports evaluation only, not maximization".into(),
        )),
        leaf => {
            if let Some(d) = leaf.expected_dim() {
                if d != block.len() {
                    return Err(Error::Dimension {
                        expected: d,
                        got: block.len(),
                    });
                }
            }
            terms.push(Term {
                coords: block,
                leaf: leaf.clone(),
            });
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// maximize
// ---------------------------------------------------------------------------

/// `sup f` over `feasible`, with `f` read on the first
/// `feasible.primary_dim` coordinates.
pub fn maximize(
    f: &EntropyFn,
    feasible: &ConstraintSet,
    cfg: &SolverConfig,
) -> Result<MaxResult, Error> {
    if let Some(d) = f.expected_dim() {
        if d != feasible.primary_dim {
            return Err(Error::Dimension {
                expected: feasible.primary_dim,
                got: d,
            });
        }
    }
    let mut cs = feasible.clone();
    let mut terms = Vec::new();
    flatten(f, (0..feasible.primary_dim).collect(), &mut cs, &mut terms)?;
    let obj = FlatObjective { terms, dim: cs.dim };
    let relaxed = cs.relaxed();

    // Feasibility and a max-slack interior start.
    let Some(x0) = phase_one(&relaxed, cfg) else {
        return Ok(MaxResult::infeasible());
    };

    match obj.constant_infinity() {
        Some(NegInf) => {
            // The entropy is -∞ on the whole (nonempty) fiber: the coarse
            // state is impossible to realize, same as an empty fiber.
            return Ok(MaxResult::infeasible());
        }
        Some(PosInf) => return Ok(MaxResult::unbounded(None, 0)),
        _ => {}
    }

    if obj.all_affine() {
        return affine_fast_path(&obj, &cs, &relaxed, cfg);
    }

    if let Some(ray) = recession_escape(&obj, &relaxed, &x0, cfg) {
        return Ok(MaxResult::unbounded(Some(ray), 0));
    }

    ascend(&obj, &cs, &relaxed, x0, cfg)
}

/// Max-slack feasible point of the relaxed set, or `None` when infeasible
/// beyond `tol_membership`.
fn phase_one(relaxed: &ConstraintSet, cfg: &SolverConfig) -> Option<Vec<f64>> {
    let n = relaxed.dim;
    let mut lp = LpProblem::new(n + 1);
    for c in &relaxed.eq {
        let mut row = c.coeffs.clone();
        row.push(0.0);
        lp.eq.push((row, c.rhs));
    }
    for c in &relaxed.ineq {
        let mut row = c.coeffs.clone();
        row.push(1.0);
        lp.ineq.push((row, c.rhs));
    }
    let mut cap = vec![0.0; n + 1];
    cap[n] = 1.0;
    lp.ineq.push((cap, 1.0));
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    match lp.maximize(&objective) {
        LpOutcome::Infeasible => None,
        LpOutcome::Optimal { x, value } => {
            if value < -cfg.tol_membership {
                None
            } else {
                Some(x[..n].to_vec())
            }
        }
        LpOutcome::Unbounded { from, .. } => Some(from[..n].to_vec()),
    }
}

fn affine_fast_path(
    obj: &FlatObjective,
    cs: &ConstraintSet,
    relaxed: &ConstraintSet,
    _cfg: &SolverConfig,
) -> Result<MaxResult, Error> {
    let (a, b) = obj.linear_form();
    let mut lp = LpProblem::new(relaxed.dim);
    for c in &relaxed.eq {
        lp.eq.push((c.coeffs.clone(), c.rhs));
    }
    for c in &relaxed.ineq {
        lp.ineq.push((c.coeffs.clone(), c.rhs));
    }
    match lp.maximize(&a) {
        LpOutcome::Infeasible => Ok(MaxResult::infeasible()),
        LpOutcome::Unbounded { ray, .. } => Ok(MaxResult::unbounded(Some(ray), 0)),
        LpOutcome::Optimal { x, value } => {
            let value = ExtReal::new(value + b)?;
            Ok(finish(cs, x, value, 0))
        }
    }
}

/// Builds the result from a solved point: decides attained vs approached
/// from activity of originally strict rows.
fn finish(cs: &ConstraintSet, x: Vec<f64>, value: ExtReal, iterations: usize) -> MaxResult {
    let approached = cs.ineq.iter().any(|c| {
        c.strict && {
            let v = dot(&c.coeffs, &x);
            (v - c.rhs).abs() <= crate::convex::TOL_STRICT * 4.0 + 1e-12 * c.rhs.abs()
        }
    });
    if approached {
        MaxResult {
            value,
            argmax: None,
            status: Status::Approached,
            iterations,
            certificate: None,
        }
    } else {
        MaxResult {
            value,
            argmax: Some(State::new(x[..cs.primary_dim].to_vec())),
            status: Status::Attained,
            iterations,
            certificate: None,
        }
    }
}

// ---------------------------------------------------------------------------
// Unbounded-ascent detection
// ---------------------------------------------------------------------------

/// Looks for a feasible recession ray along which the objective climbs
/// forever; returns it as a certificate.
fn recession_escape(
    obj: &FlatObjective,
    relaxed: &ConstraintSet,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Option<Vec<f64>> {
    let (linear, growth_coords) = obj.growth();
    let has_linear = linear.iter().any(|&v| v.abs() > 0.0);
    if !has_linear && growth_coords.is_empty() {
        return None;
    }
    let n = relaxed.dim;
    let cone = |extra_nonneg: Option<&[f64]>| {
        let mut lp = LpProblem::new(n);
        for c in &relaxed.eq {
            lp.eq.push((c.coeffs.clone(), 0.0));
        }
        for c in &relaxed.ineq {
            lp.ineq.push((c.coeffs.clone(), 0.0));
        }
        for i in 0..n {
            let mut up = vec![0.0; n];
            up[i] = 1.0;
            lp.ineq.push((up.clone(), 1.0));
            up[i] = -1.0;
            lp.ineq.push((up, 1.0));
        }
        if let Some(a) = extra_nonneg {
            let neg: Vec<f64> = a.iter().map(|v| -v).collect();
            lp.ineq.push((neg, 0.0));
        }
        lp
    };

    let mut candidates = Vec::new();
    if has_linear {
        if let LpOutcome::Optimal { x, value } = cone(None).maximize(&linear) {
            if value > 1e-9 {
                candidates.push(x);
            }
        }
    }
    for &gc in &growth_coords {
        let mut objv = vec![0.0; n];
        objv[gc] = 1.0;
        let lp = if has_linear {
            cone(Some(&linear))
        } else {
            cone(None)
        };
        if let LpOutcome::Optimal { x, value } = lp.maximize(&objv) {
            if value > 1e-9 {
                candidates.push(x);
            }
        }
    }
    candidates
        .into_iter()
        .find(|ray| ray_probe(obj, x0, ray, cfg.unbounded_threshold))
}

enum ProbeOutcome {
    Unbounded,
    /// The restriction turned downward; the best value sat near step
    /// `best_t`.
    Bounded {
        best_t: f64,
    },
}

/// Does the objective climb without bound along `x0 + t·ray`?
fn ray_probe(obj: &FlatObjective, x0: &[f64], ray: &[f64], threshold: f64) -> bool {
    matches!(
        ray_probe_detail(obj, x0, ray, threshold),
        ProbeOutcome::Unbounded
    )
}

/// Probes the objective at geometrically spaced steps along `x0 + t·ray`.
///
/// Crossing the threshold certifies linear growth; for the logarithmic
/// families the objective along a ray is concave, so still climbing at the
/// largest representable steps means the supremum is `+∞` (a bounded concave
/// restriction would have turned downward). Bounded restrictions report
/// where they peaked, which callers use to cap search boxes.
fn ray_probe_detail(obj: &FlatObjective, x0: &[f64], ray: &[f64], threshold: f64) -> ProbeOutcome {
    let Ok(start) = obj.eval(x0) else {
        return ProbeOutcome::Bounded { best_t: 0.0 };
    };
    let mut prev = match start {
        Finite(v) => v,
        PosInf => return ProbeOutcome::Unbounded,
        NegInf => return ProbeOutcome::Bounded { best_t: 0.0 },
    };
    let mut best = prev;
    let mut best_t = 0.0f64;
    let mut t = 1.0f64;
    let mut climbed_last = false;
    for _ in 0..1000 {
        let x: Vec<f64> = x0.iter().zip(ray).map(|(a, d)| a + t * d).collect();
        if x.iter().any(|v| v.abs() > 1e280) {
            break;
        }
        match obj.eval(&x) {
            Ok(Finite(v)) => {
                if v > threshold {
                    return ProbeOutcome::Unbounded;
                }
                if v > best {
                    best = v;
                    best_t = t;
                }
                climbed_last = v > prev + 1e-7 * (1.0 + v.abs());
                prev = v;
            }
            Ok(PosInf) => return ProbeOutcome::Unbounded,
            _ => return ProbeOutcome::Bounded { best_t },
        }
        t *= 2.0;
    }
    if climbed_last {
        ProbeOutcome::Unbounded
    } else {
        ProbeOutcome::Bounded { best_t }
    }
}

// ---------------------------------------------------------------------------
// Active-set projected-gradient ascent
// ---------------------------------------------------------------------------

struct Reduced {
    /// Null-space basis of the equality rows: columns of `x = x0 + Z t`.
    basis: Vec<Vec<f64>>,
    x0: Vec<f64>,
    /// Inequality rows over `t`: `g · t ≤ h`.
    rows: Vec<(Vec<f64>, f64)>,
}

impl Reduced {
    fn build(relaxed: &ConstraintSet, x0: Vec<f64>) -> Reduced {
        let eq_rows: Vec<Vec<f64>> = relaxed.eq.iter().map(|c| c.coeffs.clone()).collect();
        let basis = if eq_rows.is_empty() {
            (0..relaxed.dim)
                .map(|i| {
                    let mut e = vec![0.0; relaxed.dim];
                    e[i] = 1.0;
                    e
                })
                .collect()
        } else {
            linalg::null_space_basis(&eq_rows, relaxed.dim)
        };
        let rows = relaxed
            .ineq
            .iter()
            .map(|c| {
                let g: Vec<f64> = basis.iter().map(|z| dot(&c.coeffs, z)).collect();
                let h = c.rhs - dot(&c.coeffs, &x0);
                (g, h)
            })
            .collect();
        Reduced { basis, x0, rows }
    }

    fn lift(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.x0.clone();
        for (z, &ti) in self.basis.iter().zip(t) {
            for (xi, zi) in x.iter_mut().zip(z) {
                *xi += ti * zi;
            }
        }
        x
    }

    fn reduced_gradient(&self, g_full: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|z| dot(g_full, z)).collect()
    }
}

fn ascend(
    obj: &FlatObjective,
    cs: &ConstraintSet,
    relaxed: &ConstraintSet,
    x0: Vec<f64>,
    cfg: &SolverConfig,
) -> Result<MaxResult, Error> {
    let red = Reduced::build(relaxed, x0);
    let k = red.basis.len();
    let mut t = vec![0.0; k];
    let mut value = match obj.eval(&red.lift(&t))? {
        Finite(v) => v,
        PosInf => return Ok(MaxResult::unbounded(None, 0)),
        NegInf => {
            // The interior start should be finite for every family that
            // reaches here; a -∞ start means the fiber is thinner than the
            // strictness margin, which phase one treats as feasible but the
            // entropy does not. Report it as an impossible state.
            return Ok(MaxResult::infeasible());
        }
    };

    if k == 0 {
        return Ok(finish(cs, red.lift(&t), ExtReal::new(value)?, 0));
    }

    let act_tol = |h: f64| 1e-8 * (1.0 + h.abs());
    let mut step_init = 1.0f64;
    let mut flat_iters = 0usize;
    let mut iterations = 0usize;

    while iterations < cfg.max_iters {
        iterations += 1;
        let x = red.lift(&t);
        let g_full = obj
            .gradient(&x)
            .ok_or_else(|| Error::Domain("objective without a usable gradient".into()))?;
        let g = red.reduced_gradient(&g_full);
        let g_norm = linalg::norm(&g);

        // Working set: rows active at the current iterate.
        let mut working: Vec<usize> = red
            .rows
            .iter()
            .enumerate()
            .filter(|(_, (gr, h))| h - dot(gr, &t) <= act_tol(*h))
            .map(|(j, _)| j)
            .collect();

        // Projected direction, dropping wrongly-signed multipliers.
        let dir;
        loop {
            let normals: Vec<Vec<f64>> = working.iter().map(|&j| red.rows[j].0.clone()).collect();
            let span = linalg::orthonormal_span(&normals);
            let mut d = g.clone();
            linalg::project_out(&span, &mut d);
            if linalg::norm(&d) > 1e-7 * (1.0 + g_norm) {
                dir = d;
                break;
            }
            if working.is_empty() {
                // Stationary in the open face: polish and stop.
                return polish_and_finish(obj, cs, &red, t, value, iterations, cfg);
            }
            let lambda = linalg::least_squares(&normals, &g);
            let (worst, &worst_val) = lambda
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            if worst_val >= -1e-9 * (1.0 + g_norm) {
                return polish_and_finish(obj, cs, &red, t, value, iterations, cfg);
            }
            working.remove(worst);
        }

        // Newton direction within the current face, if the face-reduced
        // Hessian is negative definite and the step is an ascent step.
        let mut newton_dir = None;
        if let Some(h_full) = obj.hessian(&red.lift(&t)) {
            let normals: Vec<Vec<f64>> = working.iter().map(|&j| red.rows[j].0.clone()).collect();
            let face = if normals.is_empty() {
                (0..k)
                    .map(|i| {
                        let mut e = vec![0.0; k];
                        e[i] = 1.0;
                        e
                    })
                    .collect()
            } else {
                linalg::null_space_basis(&normals, k)
            };
            if !face.is_empty() {
                // H in t-space: Zᵀ H Z, then restricted to the face basis W.
                let hw: Vec<Vec<f64>> = face
                    .iter()
                    .map(|w| {
                        let xw: Vec<f64> = (0..relaxed.dim)
                            .map(|i| {
                                red.basis
                                    .iter()
                                    .zip(w)
                                    .map(|(z, &wj)| z[i] * wj)
                                    .sum::<f64>()
                            })
                            .collect();
                        let hx: Vec<f64> = h_full.iter().map(|row| dot(row, &xw)).collect();
                        face.iter()
                            .map(|w2| {
                                let xw2: Vec<f64> = (0..relaxed.dim)
                                    .map(|i| {
                                        red.basis
                                            .iter()
                                            .zip(w2)
                                            .map(|(z, &wj)| z[i] * wj)
                                            .sum::<f64>()
                                    })
                                    .collect();
                                dot(&hx, &xw2)
                            })
                            .collect()
                    })
                    .collect();
                let gw: Vec<f64> = face.iter().map(|w| dot(&g, w)).collect();
                if let Some(p) = linalg::solve_neg_definite(&hw, &gw) {
                    let mut dn = vec![0.0; k];
                    for (w, &pi) in face.iter().zip(&p) {
                        for (di, wi) in dn.iter_mut().zip(w) {
                            *di += pi * wi;
                        }
                    }
                    if dot(&dn, &g) > 0.0 {
                        newton_dir = Some(dn);
                    }
                }
            }
        }

        let mut improved = false;
        for (d, natural_step) in newton_dir
            .iter()
            .map(|d| (d, 1.0))
            .chain(std::iter::once((&dir, step_init)))
        {
            let slope = dot(d, &g);
            if slope <= 0.0 {
                continue;
            }
            // Largest feasible step along d.
            let mut t_max = f64::INFINITY;
            for (j, (gr, h)) in red.rows.iter().enumerate() {
                if working.contains(&j) {
                    continue;
                }
                let gd = dot(gr, d);
                if gd > 1e-12 {
                    t_max = t_max.min((h - dot(gr, &t)) / gd);
                }
            }
            let mut step = natural_step.min(t_max).max(0.0);
            if step == 0.0 {
                continue;
            }
            let mut accepted = None;
            for _ in 0..80 {
                let cand: Vec<f64> = t.iter().zip(d).map(|(ti, di)| ti + step * di).collect();
                match obj.eval(&red.lift(&cand))? {
                    Finite(v) if v >= value + 1e-4 * step * slope => {
                        accepted = Some((cand, v, step));
                        break;
                    }
                    PosInf => return Ok(MaxResult::unbounded(Some(ray_from(&red, d)), iterations)),
                    _ => step *= 0.5,
                }
            }
            if let Some((cand, v, used)) = accepted {
                t = cand;
                improved = v > value + 1e-15 * (1.0 + value.abs());
                value = v;
                step_init = (used * 2.0).clamp(1e-12, 1e15);
                break;
            }
        }

        // Runaway iterates: probe the current direction as a recession ray.
        if linalg::norm(&t) > 1e9 {
            let ray = ray_from(&red, &dir);
            if ray_probe(obj, &red.lift(&t), &ray, cfg.unbounded_threshold) {
                return Ok(MaxResult::unbounded(Some(ray), iterations));
            }
        }

        flat_iters = if improved { 0 } else { flat_iters + 1 };
        if flat_iters >= 8 {
            return polish_and_finish(obj, cs, &red, t, value, iterations, cfg);
        }
    }
    Err(Error::Convergence {
        iterations: cfg.max_iters,
        best: ExtReal::new(value)?,
    })
}

fn ray_from(red: &Reduced, d: &[f64]) -> Vec<f64> {
    let mut ray = vec![0.0; red.x0.len()];
    for (z, &di) in red.basis.iter().zip(d) {
        for (ri, zi) in ray.iter_mut().zip(z) {
            *ri += di * zi;
        }
    }
    ray
}

fn polish_and_finish(
    _obj: &FlatObjective,
    cs: &ConstraintSet,
    red: &Reduced,
    t: Vec<f64>,
    value: f64,
    iterations: usize,
    _cfg: &SolverConfig,
) -> Result<MaxResult, Error> {
    Ok(finish(cs, red.lift(&t), ExtReal::new(value)?, iterations))
}

// ---------------------------------------------------------------------------
// Pushforward
// ---------------------------------------------------------------------------

/// Coarse-grains a system along a relation: the result's entropy at `y` is
/// the supremum of the inner entropy over the fiber of `y`.
pub fn pushforward(
    sys: &ThermostaticSystem,
    rel: &ConvexRelation,
) -> Result<ThermostaticSystem, Error> {
    pushforward_with(sys, rel, SolverConfig::default())
}

/// As [`pushforward`] with explicit solver settings for evaluations.
pub fn pushforward_with(
    sys: &ThermostaticSystem,
    rel: &ConvexRelation,
    cfg: SolverConfig,
) -> Result<ThermostaticSystem, Error> {
    if !sys.space().congruent(rel.source()) {
        return Err(Error::SpaceMismatch(format!(
            "pushforward of a system on {:?} along a relation from {:?}",
            sys.space(),
            rel.source()
        )));
    }
    ThermostaticSystem::new(
        format!("{}*", sys.name()),
        rel.target().clone(),
        EntropyFn::Pushforward {
            inner: Box::new(sys.clone()),
            rel: Box::new(rel.clone()),
            cfg,
        },
    )
}

/// Value of the pushforward entropy at one target point.
pub(crate) fn pushforward_value(
    inner: &ThermostaticSystem,
    rel: &ConvexRelation,
    y: &[f64],
    cfg: &SolverConfig,
) -> Result<ExtReal, Error> {
    let fiber = rel.fiber(&State::new(y.to_vec()))?;
    Ok(maximize(inner.entropy(), &fiber, cfg)?.value)
}

/// Full maximization record for the pushforward entropy at `y`: value,
/// status and (when attained) the maximizing fine state.
pub fn solve_at(
    sys: &ThermostaticSystem,
    y: &State,
    cfg: &SolverConfig,
) -> Result<MaxResult, Error> {
    match sys.entropy() {
        EntropyFn::Pushforward { inner, rel, .. } => {
            if !sys.space().contains(y)? {
                return Err(Error::Domain(format!(
                    "query {y} lies outside the system's space"
                )));
            }
            let fiber = rel.fiber(y)?;
            maximize(inner.entropy(), &fiber, cfg)
        }
        _ => {
            let value = sys.evaluate(y)?;
            Ok(MaxResult {
                value,
                argmax: value.is_finite().then(|| y.clone()),
                status: match value {
                    NegInf => Status::Infeasible,
                    PosInf => Status::Unbounded,
                    Finite(_) => Status::Attained,
                },
                iterations: 0,
                certificate: None,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

/// What the grid oracle found, with enough context to bound its error.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub value: ExtReal,
    /// Largest grid spacing over the reduced axes.
    pub spacing: f64,
    /// Finite-difference slope magnitude around the grid maximum.
    pub local_lipschitz: f64,
}

/// Grid-search supremum over the feasible set: the independent oracle.
pub fn brute_force_sup(
    f: &EntropyFn,
    feasible: &ConstraintSet,
    cfg: &SolverConfig,
    bbox: Option<&BoundingBox>,
) -> Result<ExtReal, Error> {
    brute_force_report(f, feasible, cfg, bbox).map(|r| r.value)
}

/// As [`brute_force_sup`], also reporting grid spacing and a local Lipschitz
/// estimate at the grid maximum so callers can bound the discretization
/// error.
///
/// Equalities are eliminated by Gaussian substitution (a different route
/// from the solver's orthonormal null basis), the remaining free variables
/// are gridded at `cfg.grid_resolution` points per axis inside `bbox` (or
/// bounds derived by coordinate LPs), and inequalities are checked by direct
/// substitution. Refuses lifted dimensions above 4.
pub fn brute_force_report(
    f: &EntropyFn,
    feasible: &ConstraintSet,
    cfg: &SolverConfig,
    bbox: Option<&BoundingBox>,
) -> Result<OracleReport, Error> {
    let mut cs = feasible.clone();
    let mut terms = Vec::new();
    flatten(f, (0..feasible.primary_dim).collect(), &mut cs, &mut terms)?;
    let obj = FlatObjective { terms, dim: cs.dim };
    if cs.dim > 4 {
        return Err(Error::Domain(format!(
            "brute-force oracle refuses dimension {} (> 4)",
            cs.dim
        )));
    }
    let exact = |value: ExtReal| OracleReport {
        value,
        spacing: 0.0,
        local_lipschitz: 0.0,
    };
    let relaxed = cs.relaxed();
    if let Some(inf) = obj.constant_infinity() {
        let feasible_at_all = phase_one(&relaxed, cfg).is_some();
        return Ok(exact(if feasible_at_all { inf } else { NegInf }));
    }

    let eq_rows: Vec<Vec<f64>> = relaxed.eq.iter().map(|c| c.coeffs.clone()).collect();
    let eq_rhs: Vec<f64> = relaxed.eq.iter().map(|c| c.rhs).collect();
    let Some(param) = linalg::eliminate(&eq_rows, &eq_rhs) else {
        return Ok(exact(NegInf));
    };
    let (x_part, dirs, free) = (param.particular, param.directions, param.free);
    let k = free.len();

    // Reduced inequality rows over the free variables.
    let rows: Vec<(Vec<f64>, f64)> = relaxed
        .ineq
        .iter()
        .map(|c| {
            let g: Vec<f64> = dirs.iter().map(|d| dot(&c.coeffs, d)).collect();
            let h = c.rhs - dot(&c.coeffs, &x_part);
            (g, h)
        })
        .collect();

    if k == 0 {
        let ok = rows.iter().all(|(_, h)| *h >= -cfg.tol_membership);
        let value = if ok { obj.eval(&x_part)? } else { NegInf };
        return Ok(exact(value));
    }

    // Per-free-variable bounds: supplied box restricted to the free
    // coordinates, or derived by LPs (with a ray probe escape to +∞).
    let mut lo = vec![0.0; k];
    let mut hi = vec![0.0; k];
    if let Some(bb) = bbox {
        if bb.dim() != cs.dim {
            return Err(Error::Dimension {
                expected: cs.dim,
                got: bb.dim(),
            });
        }
        for (j, &coord) in free.iter().enumerate() {
            lo[j] = bb.lo[coord];
            hi[j] = bb.hi[coord];
        }
    } else {
        let mut lp = LpProblem::new(cs.dim);
        for c in &relaxed.eq {
            lp.eq.push((c.coeffs.clone(), c.rhs));
        }
        for c in &relaxed.ineq {
            lp.ineq.push((c.coeffs.clone(), c.rhs));
        }
        for (j, &coord) in free.iter().enumerate() {
            let mut dir = vec![0.0; cs.dim];
            dir[coord] = 1.0;
            match lp.maximize(&dir) {
                LpOutcome::Optimal { value, .. } => hi[j] = value,
                LpOutcome::Unbounded { from, ray } => {
                    match ray_probe_detail(&obj, &from, &ray, cfg.unbounded_threshold) {
                        ProbeOutcome::Unbounded => return Ok(exact(PosInf)),
                        ProbeOutcome::Bounded { best_t } => {
                            // The objective peaked along the escape ray; cap the
                            // box past the peak instead of at an arbitrary span.
                            hi[j] = from[coord] + ray[coord].abs() * (4.0 * best_t) + 1.0;
                        }
                    }
                }
                LpOutcome::Infeasible => return Ok(exact(NegInf)),
            }
            dir[coord] = -1.0;
            match lp.maximize(&dir) {
                LpOutcome::Optimal { value, .. } => lo[j] = -value,
                LpOutcome::Unbounded { from, ray } => {
                    match ray_probe_detail(&obj, &from, &ray, cfg.unbounded_threshold) {
                        ProbeOutcome::Unbounded => return Ok(exact(PosInf)),
                        ProbeOutcome::Bounded { best_t } => {
                            lo[j] = from[coord] - ray[coord].abs() * (4.0 * best_t) - 1.0;
                        }
                    }
                }
                LpOutcome::Infeasible => return Ok(exact(NegInf)),
            }
        }
    }

    let r = cfg.grid_resolution.max(2);
    let t_of = |idx: &[usize]| -> Vec<f64> {
        (0..k)
            .map(|j| lo[j] + (hi[j] - lo[j]) * idx[j] as f64 / (r - 1) as f64)
            .collect()
    };
    let point_of = |t: &[f64]| -> Vec<f64> {
        let mut x = x_part.clone();
        for (d, &tj) in dirs.iter().zip(t) {
            for (xi, di) in x.iter_mut().zip(d) {
                *xi += tj * di;
            }
        }
        x
    };
    let feasible_t = |t: &[f64]| {
        rows.iter()
            .all(|(g, h)| dot(g, t) <= *h + cfg.tol_membership)
    };

    let mut best = NegInf;
    let mut best_idx: Option<Vec<usize>> = None;
    let mut idx = vec![0usize; k];
    'grid: loop {
        let t = t_of(&idx);
        if feasible_t(&t) {
            let v = obj.eval(&point_of(&t))?;
            if v == PosInf {
                return Ok(exact(PosInf));
            }
            if v > best {
                best = v;
                best_idx = Some(idx.clone());
            }
        }
        // Row-major advance.
        let mut j = k;
        loop {
            if j == 0 {
                break 'grid;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < r {
                break;
            }
            idx[j] = 0;
        }
    }

    let spacing = (0..k)
        .map(|j| (hi[j] - lo[j]) / (r - 1) as f64)
        .fold(0.0, f64::max);
    let mut local_lipschitz = 0.0f64;
    if let (Finite(best_v), Some(bi)) = (best, &best_idx) {
        for j in 0..k {
            for step in [-1isize, 1] {
                let Some(nj) = bi[j].checked_add_signed(step) else {
                    continue;
                };
                if nj >= r {
                    continue;
                }
                let mut ni = bi.clone();
                ni[j] = nj;
                let t = t_of(&ni);
                if !feasible_t(&t) {
                    continue;
                }
                if let Finite(v) = obj.eval(&point_of(&t))? {
                    let h = (hi[j] - lo[j]) / (r - 1) as f64;
                    if h > 0.0 {
                        local_lipschitz = local_lipschitz.max((best_v - v).abs() / h);
                    }
                }
            }
        }
    }
    Ok(OracleReport {
        value: best,
        spacing,
        local_lipschitz,
    })
}

// ---------------------------------------------------------------------------
// Legendre transform
// ---------------------------------------------------------------------------

/// `sup_{U ≥ 0} S(U, fixed…) − β U`: the heat-bath coupling in closed
/// computational form. `fixed` pins the remaining coordinates of the
/// system's orthant.
pub fn legendre_transform(
    sys: &ThermostaticSystem,
    beta: f64,
    fixed: &[f64],
    cfg: &SolverConfig,
) -> Result<ExtReal, Error> {
    let k = sys.space().ambient_dim();
    if fixed.len() + 1 != k {
        return Err(Error::Dimension {
            expected: k - 1,
            got: fixed.len(),
        });
    }
    if !beta.is_finite() {
        return Err(Error::Domain("Legendre transform needs finite beta".into()));
    }
    // Variables [x (k), w] with w = -β x₀, objective S(x) + w.
    let mut cs = sys.space().constraint_set();
    let off = cs.extend_dim(1);
    cs.primary_dim = k + 1;
    let mut coupling = vec![0.0; k + 1];
    coupling[0] = beta;
    coupling[off] = 1.0;
    cs.push_eq(coupling, 0.0);
    for (i, &v) in fixed.iter().enumerate() {
        let mut pin = vec![0.0; k + 1];
        pin[i + 1] = 1.0;
        cs.push_eq(pin, v);
    }
    let objective = EntropyFn::Sum {
        left: Box::new(sys.entropy().clone()),
        right: Box::new(EntropyFn::Affine {
            coeffs: vec![1.0],
            offset: 0.0,
        }),
        left_dim: k,
        right_dim: 1,
    };
    Ok(maximize(&objective, &cs, cfg)?.value)
}
