//! The operad of convex relations and its action on thermostatic systems.
//!
//! An operation takes a list of input spaces to one output space through a
//! convex relation out of their product. Acting on systems means: sum the
//! entropies on the product, then push forward along the relation — entropy
//! maximization subject to the operation's constraints. Products are
//! flattened to concatenated coordinates with left-nested order, so the
//! monoidal coherence maps are literally identities on indices.

use crate::convex::{ConvexSpace, State};
use crate::optimize::{self, MaxResult, SolverConfig};
use crate::relation::{AffineMap, ConvexRelation};
use crate::system::{sum_all, ThermostaticSystem};
use crate::Error;

/// An operad operation: `inputs → output` through `rel`.
#[derive(Debug, Clone)]
pub struct Operation {
    inputs: Vec<ConvexSpace>,
    output: ConvexSpace,
    rel: ConvexRelation,
}

impl Operation {
    /// Requires `rel` to run from the (left-nested) product of `inputs` to
    /// `output`.
    pub fn new(
        inputs: Vec<ConvexSpace>,
        output: ConvexSpace,
        rel: ConvexRelation,
    ) -> Result<Self, Error> {
        let source = ConvexSpace::product_all(inputs.iter().cloned());
        if !rel.source().congruent(&source) {
            return Err(Error::SpaceMismatch(format!(
                "operation relation runs from {:?}, inputs make {:?}",
                rel.source(),
                source
            )));
        }
        if !rel.target().congruent(&output) {
            return Err(Error::SpaceMismatch(format!(
                "operation relation lands in {:?}, output is {:?}",
                rel.target(),
                output
            )));
        }
        Ok(Operation {
            inputs,
            output,
            rel,
        })
    }

    /// The one-input identity operation.
    pub fn identity(space: ConvexSpace) -> Self {
        Operation {
            inputs: vec![space.clone()],
            output: space.clone(),
            rel: ConvexRelation::identity(space),
        }
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[ConvexSpace] {
        &self.inputs
    }

    pub fn output(&self) -> &ConvexSpace {
        &self.output
    }

    pub fn relation(&self) -> &ConvexRelation {
        &self.rel
    }
}

/// Operadic substitution: plugs `fs[i]` into the `i`-th input of `g`.
pub fn op_compose(g: &Operation, fs: &[Operation]) -> Result<Operation, Error> {
    if fs.len() != g.arity() {
        return Err(Error::SpaceMismatch(format!(
            "operation of arity {} composed with {} arguments",
            g.arity(),
            fs.len()
        )));
    }
    for (i, f) in fs.iter().enumerate() {
        if !f.output().congruent(&g.inputs[i]) {
            return Err(Error::SpaceMismatch(format!(
                "slot {i}: argument produces {:?}, operation expects {:?}",
                f.output(),
                g.inputs[i]
            )));
        }
    }
    let inner = match fs {
        [] => ConvexRelation::identity(ConvexSpace::Singleton),
        [only] => only.rel.clone(),
        [first, rest @ ..] => rest
            .iter()
            .fold(first.rel.clone(), |acc, f| acc.product(&f.rel)),
    };
    let rel = inner.compose(&g.rel)?;
    let inputs = fs.iter().flat_map(|f| f.inputs.iter().cloned()).collect();
    Operation::new(inputs, g.output.clone(), rel)
}

/// Interprets the operation on actual systems: sum the entropies, then push
/// forward along the relation. The empty list acts from the unit system.
pub fn act(op: &Operation, systems: &[ThermostaticSystem]) -> Result<ThermostaticSystem, Error> {
    act_with(op, systems, SolverConfig::default())
}

/// As [`act`] with explicit solver settings for evaluations of the result.
pub fn act_with(
    op: &Operation,
    systems: &[ThermostaticSystem],
    cfg: SolverConfig,
) -> Result<ThermostaticSystem, Error> {
    if systems.len() != op.arity() {
        return Err(Error::SpaceMismatch(format!(
            "operation of arity {} applied to {} systems",
            op.arity(),
            systems.len()
        )));
    }
    for (i, (sys, space)) in systems.iter().zip(&op.inputs).enumerate() {
        if !sys.space().congruent(space) {
            return Err(Error::SpaceMismatch(format!(
                "slot {i}: system {:?} lives on {:?}, operation expects {:?}",
                sys.name(),
                sys.space(),
                space
            )));
        }
    }
    optimize::pushforward_with(&sum_all(systems), &op.rel, cfg)
}

/// Full maximization record of the acted system at one target point.
pub fn act_solve(
    op: &Operation,
    systems: &[ThermostaticSystem],
    y: &State,
    cfg: &SolverConfig,
) -> Result<MaxResult, Error> {
    let composed = act_with(op, systems, cfg.clone())?;
    optimize::solve_at(&composed, y, cfg)
}

/// A permutation of `{0, …, n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(sigma: Vec<usize>) -> Result<Self, Error> {
        let n = sigma.len();
        let mut seen = vec![false; n];
        for &i in &sigma {
            if i >= n || seen[i] {
                return Err(Error::Domain(format!("{sigma:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Permutation(sigma))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reorders a list: `out[i] = items[σ(i)]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| items[i].clone()).collect()
    }
}

/// The operation with inputs reordered by `sigma`: input `i` of the result
/// is input `σ(i)` of the original, and the relation is precomposed with the
/// coordinate-block permutation. Acting satisfies
/// `act(permute_op(op, σ), σ·systems) = act(op, systems)`.
pub fn permute_op(op: &Operation, sigma: &Permutation) -> Result<Operation, Error> {
    if sigma.len() != op.arity() {
        return Err(Error::Domain(format!(
            "permutation on {} letters against arity {}",
            sigma.len(),
            op.arity()
        )));
    }
    let new_inputs = sigma.apply(&op.inputs);
    let new_source = ConvexSpace::product_all(new_inputs.iter().cloned());
    let old_dims: Vec<usize> = op.inputs.iter().map(ConvexSpace::ambient_dim).collect();
    let old_offsets: Vec<usize> = old_dims
        .iter()
        .scan(0, |acc, &d| {
            let off = *acc;
            *acc += d;
            Some(off)
        })
        .collect();
    let total: usize = old_dims.iter().sum();
    let mut matrix = vec![vec![0.0; total]; total];
    let mut src_off = 0;
    for &orig in &sigma.0 {
        for k in 0..old_dims[orig] {
            matrix[old_offsets[orig] + k][src_off + k] = 1.0;
        }
        src_off += old_dims[orig];
    }
    let shuffle = ConvexRelation::graph(
        new_source,
        op.rel.source().clone(),
        AffineMap::new(matrix, vec![0.0; total])?,
    )?;
    let rel = shuffle.compose(&op.rel)?;
    Operation::new(new_inputs, op.output.clone(), rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::RelEq;
    use crate::system::ThermostaticSystem;

    fn orthant(n: usize) -> ConvexSpace {
        ConvexSpace::Orthant { n }
    }

    fn merge(n: usize) -> Operation {
        // U₁ + … + Uₙ = U.
        let inputs = vec![orthant(1); n];
        let rel = ConvexRelation::affine(
            ConvexSpace::product_all(inputs.iter().cloned()),
            orthant(1),
            vec![RelEq {
                a: vec![1.0; n],
                b: vec![-1.0],
                c: 0.0,
            }],
            vec![],
        )
        .unwrap();
        Operation::new(inputs, orthant(1), rel).unwrap()
    }

    fn value_at(sys: &ThermostaticSystem, y: f64) -> f64 {
        sys.evaluate(&State::new(vec![y]))
            .unwrap()
            .as_finite()
            .unwrap()
    }

    #[test]
    fn operation_checks_its_relation_interface() {
        let bad = ConvexRelation::full(orthant(2), orthant(1));
        assert!(Operation::new(vec![orthant(1)], orthant(1), bad).is_err());
    }

    #[test]
    fn identity_composition_is_observational_identity() {
        let g = merge(2);
        let ids = vec![
            Operation::identity(orthant(1)),
            Operation::identity(orthant(1)),
        ];
        let composed = op_compose(&g, &ids).unwrap();
        assert_eq!(composed.arity(), 2);
        let systems = [
            ThermostaticSystem::tank("a", 1.0),
            ThermostaticSystem::tank("b", 2.0),
        ];
        let direct = act(&g, &systems).unwrap();
        let via_ids = act(&composed, &systems).unwrap();
        for u in [1.0, 3.0, 7.5] {
            assert!((value_at(&direct, u) - value_at(&via_ids, u)).abs() < 1e-6);
        }
    }

    #[test]
    fn two_binary_merges_make_the_ternary_merge() {
        // merge(merge(U₁,U₂), U₃) against U₁+U₂+U₃ = U on membership.
        let g = merge(2);
        let composed = op_compose(&g, &[merge(2), Operation::identity(orthant(1))]).unwrap();
        assert_eq!(composed.arity(), 3);
        let ternary = merge(3);
        let region = crate::convex::BoundingBox::cube(3, 0.1, 2.0);
        let xs = composed.relation().source().sample(&region, 5, 10).unwrap();
        for x in &xs {
            let total: f64 = x.coords().iter().sum();
            for y in [total, total + 1.0] {
                let y = State::new(vec![y]);
                assert_eq!(
                    composed.relation().member(x, &y).unwrap(),
                    ternary.relation().member(x, &y).unwrap()
                );
            }
        }
    }

    #[test]
    fn nullary_argument_reduces_arity() {
        // A nullary operation pinning U = 2 plugged into a binary merge.
        let pin = Operation::new(
            vec![],
            orthant(1),
            ConvexRelation::affine(
                ConvexSpace::Singleton,
                orthant(1),
                vec![RelEq {
                    a: vec![],
                    b: vec![1.0],
                    c: 2.0,
                }],
                vec![],
            )
            .unwrap(),
        )
        .unwrap();
        let composed = op_compose(&merge(2), &[pin, Operation::identity(orthant(1))]).unwrap();
        assert_eq!(composed.arity(), 1);
        // With U₁ pinned to 2, (U₂) relates to U iff U = 2 + U₂.
        assert!(composed
            .relation()
            .member(&State::new(vec![3.0]), &State::new(vec![5.0]))
            .unwrap());
        assert!(!composed
            .relation()
            .member(&State::new(vec![3.0]), &State::new(vec![4.0]))
            .unwrap());
    }

    #[test]
    fn act_on_empty_list_uses_the_unit_system() {
        let pin = Operation::new(
            vec![],
            orthant(1),
            ConvexRelation::affine(
                ConvexSpace::Singleton,
                orthant(1),
                vec![RelEq {
                    a: vec![],
                    b: vec![1.0],
                    c: 2.0,
                }],
                vec![],
            )
            .unwrap(),
        )
        .unwrap();
        let sys = act(&pin, &[]).unwrap();
        // Entropy 0 where the pin holds, -∞ elsewhere.
        assert_eq!(
            sys.evaluate(&State::new(vec![2.0])).unwrap(),
            crate::xreal::Finite(0.0)
        );
        assert_eq!(
            sys.evaluate(&State::new(vec![1.0])).unwrap(),
            crate::xreal::NegInf
        );
    }

    #[test]
    fn act_type_checks_spaces() {
        let bad = [ThermostaticSystem::heat_bath("bath", 1.0)];
        assert!(act(&Operation::identity(orthant(1)), &bad).is_err());
    }

    #[test]
    fn permutation_validity() {
        assert!(Permutation::new(vec![1, 0, 2]).is_ok());
        assert!(Permutation::new(vec![1, 1]).is_err());
        assert!(Permutation::new(vec![2, 0]).is_err());
    }

    #[test]
    fn identity_permutation_preserves_op() {
        let op = merge(2);
        let p = permute_op(&op, &Permutation::identity(2)).unwrap();
        let x = State::new(vec![1.0, 2.0]);
        let y = State::new(vec![3.0]);
        assert_eq!(
            p.relation().member(&x, &y).unwrap(),
            op.relation().member(&x, &y).unwrap()
        );
    }

    #[test]
    fn swap_on_symmetric_merge_is_observationally_equal() {
        let op = merge(2);
        let swapped = permute_op(&op, &Permutation::new(vec![1, 0]).unwrap()).unwrap();
        for (a, b, u) in [(1.0, 2.0, 3.0), (0.5, 0.25, 0.75), (1.0, 1.0, 3.0)] {
            let x = State::new(vec![a, b]);
            let y = State::new(vec![u]);
            assert_eq!(
                swapped.relation().member(&x, &y).unwrap(),
                op.relation().member(&x, &y).unwrap()
            );
        }
    }

    #[test]
    fn algebra_law_with_nested_actions() {
        // act(g ∘ (f, id), leaves) against act(g, [act(f, leaves₁₂), leaf₃]):
        // assembling in stages matches assembling at once.
        let g = merge(2);
        let f = merge(2);
        let composed = op_compose(&g, &[f.clone(), Operation::identity(orthant(1))]).unwrap();
        let leaves = [
            ThermostaticSystem::tank("a", 0.5),
            ThermostaticSystem::tank("b", 1.5),
            ThermostaticSystem::tank("c", 2.0),
        ];
        let at_once = act(&composed, &leaves).unwrap();
        let staged_inner = act(&f, &leaves[..2]).unwrap();
        let staged = act(&g, &[staged_inner, leaves[2].clone()]).unwrap();
        for u in [1.0, 2.5, 6.0] {
            assert!(
                (value_at(&at_once, u) - value_at(&staged, u)).abs() < 1e-6,
                "u = {u}"
            );
        }
    }

    #[test]
    fn identity_operation_acts_trivially() {
        let tank = ThermostaticSystem::tank("t", 1.3);
        let acted = act(
            &Operation::identity(orthant(1)),
            std::slice::from_ref(&tank),
        )
        .unwrap();
        for u in [0.5, 1.0, 4.0] {
            assert!((value_at(&acted, u) - value_at(&tank, u)).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_system_padding_leaves_act_unchanged() {
        // Pad a merge with a singleton input fed by the constant-zero
        // system; the composite entropy is unchanged.
        let op = merge(2);
        let mut padded_inputs = op.inputs().to_vec();
        padded_inputs.push(ConvexSpace::Singleton);
        let padded = Operation::new(padded_inputs, op.output().clone(), op.relation().clone())
            .expect("singleton factors do not change the flattened source");
        let tanks = [
            ThermostaticSystem::tank("a", 1.0),
            ThermostaticSystem::tank("b", 2.0),
        ];
        let with_unit = [
            tanks[0].clone(),
            tanks[1].clone(),
            ThermostaticSystem::trivial(),
        ];
        let plain = act(&op, &tanks).unwrap();
        let padded_act = act(&padded, &with_unit).unwrap();
        for u in [1.0, 3.0] {
            assert!((value_at(&plain, u) - value_at(&padded_act, u)).abs() < 1e-9);
        }
    }

    #[test]
    fn act_is_equivariant_under_permutation() {
        // An asymmetric relation: U₁ + 2 U₂ = U.
        let inputs = vec![orthant(1), orthant(1)];
        let rel = ConvexRelation::affine(
            ConvexSpace::product_all(inputs.iter().cloned()),
            orthant(1),
            vec![RelEq {
                a: vec![1.0, 2.0],
                b: vec![-1.0],
                c: 0.0,
            }],
            vec![],
        )
        .unwrap();
        let op = Operation::new(inputs, orthant(1), rel).unwrap();
        let sigma = Permutation::new(vec![1, 0]).unwrap();
        let systems = [
            ThermostaticSystem::tank("a", 1.0),
            ThermostaticSystem::tank("b", 2.5),
        ];
        let permuted_op = permute_op(&op, &sigma).unwrap();
        let permuted_systems = sigma.apply(&systems);
        let lhs = act(&permuted_op, &permuted_systems).unwrap();
        let rhs = act(&op, &systems).unwrap();
        for u in [1.0, 2.0, 5.0] {
            assert!(
                (value_at(&lhs, u) - value_at(&rhs, u)).abs() < 1e-6,
                "u = {u}"
            );
        }
    }
}
