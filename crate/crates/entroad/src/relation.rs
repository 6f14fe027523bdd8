//! Convex relations: the parameterized constraints along which systems
//! compose.
//!
//! A relation is a convex subset of `X × Y`, read as assigning to each coarse
//! state `y` a convex fiber in `X`. Composition is kept lazy (a `Chain`
//! node): instead of projecting the middle space away, every relation lowers
//! to a single affine system over `[x, middles, y]`, and existential middle
//! variables are discharged by the optimizer over the lifted program. Eager
//! projection would blow up and buys nothing, because maximizing over the
//! lifted program returns the same value.

use crate::convex::{dot, scatter, ConstraintSet, ConvexSpace, LinearIneq, State, TOL_MEMBERSHIP};
use crate::lp::LpProblem;
use crate::Error;

/// An affine map `x ↦ M x + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    /// `dim_out` rows of `dim_in` coefficients.
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self, Error> {
        if matrix.len() != offset.len() {
            return Err(Error::Dimension {
                expected: matrix.len(),
                got: offset.len(),
            });
        }
        let cols = matrix.first().map_or(0, Vec::len);
        if matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Domain("ragged affine map".into()));
        }
        Ok(AffineMap { matrix, offset })
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            matrix: (0..n)
                .map(|i| {
                    let mut r = vec![0.0; n];
                    r[i] = 1.0;
                    r
                })
                .collect(),
            offset: vec![0.0; n],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.matrix.first().map_or(0, Vec::len)
    }

    pub fn dim_out(&self) -> usize {
        self.matrix.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, c)| dot(row, x) + c)
            .collect()
    }
}

/// One affine equality `a · x + b · y = c` across the two sides.
#[derive(Debug, Clone, PartialEq)]
pub struct RelEq {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

/// One affine inequality `a · x + b · y ≤ c` (or `<` when strict).
#[derive(Debug, Clone, PartialEq)]
pub struct RelIneq {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub enum RelationBody {
    /// `{(x, y) : A_k x + B_k y = c_k, …}` with optional inequalities.
    Affine { eq: Vec<RelEq>, ineq: Vec<RelIneq> },
    /// Lazy composite: `second ∘ first`.
    Chain {
        first: Box<ConvexRelation>,
        second: Box<ConvexRelation>,
    },
    Prod {
        left: Box<ConvexRelation>,
        right: Box<ConvexRelation>,
    },
    /// All of `X × Y`.
    Full,
    /// The graph `{(x, M x + c)}` of an affine map.
    Graph { map: AffineMap },
}

/// A convex relation from `source` to `target`.
#[derive(Debug, Clone)]
pub struct ConvexRelation {
    source: ConvexSpace,
    target: ConvexSpace,
    body: RelationBody,
}

impl ConvexRelation {
    pub fn full(source: ConvexSpace, target: ConvexSpace) -> Self {
        ConvexRelation {
            source,
            target,
            body: RelationBody::Full,
        }
    }

    pub fn affine(
        source: ConvexSpace,
        target: ConvexSpace,
        eq: Vec<RelEq>,
        ineq: Vec<RelIneq>,
    ) -> Result<Self, Error> {
        let (dx, dy) = (source.ambient_dim(), target.ambient_dim());
        for row in &eq {
            if row.a.len() != dx || row.b.len() != dy {
                return Err(Error::Dimension {
                    expected: dx + dy,
                    got: row.a.len() + row.b.len(),
                });
            }
        }
        for row in &ineq {
            if row.a.len() != dx || row.b.len() != dy {
                return Err(Error::Dimension {
                    expected: dx + dy,
                    got: row.a.len() + row.b.len(),
                });
            }
        }
        Ok(ConvexRelation {
            source,
            target,
            body: RelationBody::Affine { eq, ineq },
        })
    }

    pub fn graph(source: ConvexSpace, target: ConvexSpace, map: AffineMap) -> Result<Self, Error> {
        if map.dim_in() != source.ambient_dim() || map.dim_out() != target.ambient_dim() {
            return Err(Error::Dimension {
                expected: source.ambient_dim(),
                got: map.dim_in(),
            });
        }
        Ok(ConvexRelation {
            source,
            target,
            body: RelationBody::Graph { map },
        })
    }

    /// The identity relation on a space: the graph of the identity map.
    pub fn identity(space: ConvexSpace) -> Self {
        let n = space.ambient_dim();
        ConvexRelation {
            source: space.clone(),
            target: space,
            body: RelationBody::Graph {
                map: AffineMap::identity(n),
            },
        }
    }

    pub fn source(&self) -> &ConvexSpace {
        &self.source
    }

    pub fn target(&self) -> &ConvexSpace {
        &self.target
    }

    pub fn body(&self) -> &RelationBody {
        &self.body
    }

    /// Lazy composite `other ∘ self : X ↔ Z`; requires `self.target` to equal
    /// `other.source` structurally.
    pub fn compose(&self, other: &ConvexRelation) -> Result<ConvexRelation, Error> {
        if !self.target.congruent(&other.source) {
            return Err(Error::SpaceMismatch(format!(
                "composition interface: {:?} vs {:?}",
                self.target, other.source
            )));
        }
        Ok(ConvexRelation {
            source: self.source.clone(),
            target: other.target.clone(),
            body: RelationBody::Chain {
                first: Box::new(self.clone()),
                second: Box::new(other.clone()),
            },
        })
    }

    /// The product relation `X × Y ↔ X' × Y'`: membership is the conjunction
    /// of the factors after the coordinate split.
    pub fn product(&self, other: &ConvexRelation) -> ConvexRelation {
        ConvexRelation {
            source: ConvexSpace::product(self.source.clone(), other.source.clone()),
            target: ConvexSpace::product(self.target.clone(), other.target.clone()),
            body: RelationBody::Prod {
                left: Box::new(self.clone()),
                right: Box::new(other.clone()),
            },
        }
    }

    /// Is `(x, y)` in the relation? Both space memberships plus the
    /// relation's constraints; chains decide the existential middle by a
    /// feasibility program.
    pub fn member(&self, x: &State, y: &State) -> Result<bool, Error> {
        if x.dim() != self.source.ambient_dim() {
            return Err(Error::Dimension {
                expected: self.source.ambient_dim(),
                got: x.dim(),
            });
        }
        if y.dim() != self.target.ambient_dim() {
            return Err(Error::Dimension {
                expected: self.target.ambient_dim(),
                got: y.dim(),
            });
        }
        if !self.source.contains(x)? || !self.target.contains(y)? {
            return Ok(false);
        }
        let low = self.lower();
        if low.mid_dim == 0 {
            let z: Vec<f64> = x.coords().iter().chain(y.coords()).copied().collect();
            return Ok(low.satisfied(&z, x.dim()));
        }
        // Feasibility over the middle block with x and y pinned.
        let mut lp = LpProblem::new(low.mid_dim);
        for (coeffs, rhs) in &low.eq {
            let (mid, adj) = split_fixed(coeffs, x.coords(), y.coords(), low.mid_dim);
            lp.eq.push((mid, rhs - adj));
        }
        for row in &low.ineq {
            let (mid, adj) = split_fixed(&row.coeffs, x.coords(), y.coords(), low.mid_dim);
            let slack = if row.strict {
                crate::convex::TOL_STRICT
            } else {
                0.0
            };
            lp.ineq.push((mid, row.rhs - adj - slack));
        }
        Ok(lp.feasible_point().is_some())
    }

    /// The constrained set `{x : (x, y) ∈ R}` over `[x, middles]`, with the
    /// middle variables of lazy composites lifted rather than projected.
    pub fn fiber(&self, y: &State) -> Result<ConstraintSet, Error> {
        if y.dim() != self.target.ambient_dim() {
            return Err(Error::Dimension {
                expected: self.target.ambient_dim(),
                got: y.dim(),
            });
        }
        if !self.target.contains(y)? {
            return Err(Error::Domain(format!(
                "fiber target {y} lies outside the relation's target space"
            )));
        }
        let low = self.lower();
        let dim = low.x_dim + low.mid_dim;
        let mut cs = ConstraintSet::new(dim);
        cs.primary_dim = low.x_dim;
        for (coeffs, rhs) in &low.eq {
            let kept = coeffs[..dim].to_vec();
            let adj = dot(&coeffs[dim..], y.coords());
            cs.push_eq(kept, rhs - adj);
        }
        for row in &low.ineq {
            let kept = row.coeffs[..dim].to_vec();
            let adj = dot(&row.coeffs[dim..], y.coords());
            cs.push_ineq(kept, row.rhs - adj, row.strict);
        }
        Ok(cs)
    }

    /// Flattens the relation to affine rows over `[x, middles, y]`. Source
    /// and middle space constraints are included; the target space's are the
    /// caller's business.
    pub(crate) fn lower(&self) -> Lowered {
        match &self.body {
            RelationBody::Full => {
                let mut low =
                    Lowered::empty(self.source.ambient_dim(), 0, self.target.ambient_dim());
                low.embed_space(&self.source, 0);
                low
            }
            RelationBody::Graph { map } => {
                let (dx, dy) = (map.dim_in(), map.dim_out());
                let mut low = Lowered::empty(dx, 0, dy);
                low.embed_space(&self.source, 0);
                for (r, row) in map.matrix.iter().enumerate() {
                    let mut coeffs = vec![0.0; dx + dy];
                    coeffs[..dx].copy_from_slice(row);
                    coeffs[dx + r] = -1.0;
                    low.eq.push((coeffs, -map.offset[r]));
                }
                low
            }
            RelationBody::Affine { eq, ineq } => {
                let (dx, dy) = (self.source.ambient_dim(), self.target.ambient_dim());
                let mut low = Lowered::empty(dx, 0, dy);
                low.embed_space(&self.source, 0);
                for row in eq {
                    let mut coeffs = row.a.clone();
                    coeffs.extend_from_slice(&row.b);
                    low.eq.push((coeffs, row.c));
                }
                for row in ineq {
                    let mut coeffs = row.a.clone();
                    coeffs.extend_from_slice(&row.b);
                    low.ineq.push(LinearIneq {
                        coeffs,
                        rhs: row.c,
                        strict: row.strict,
                    });
                }
                low
            }
            RelationBody::Prod { left, right } => {
                let (a, b) = (left.lower(), right.lower());
                let x_dim = a.x_dim + b.x_dim;
                let mid_dim = a.mid_dim + b.mid_dim;
                let y_dim = a.y_dim + b.y_dim;
                let mut low = Lowered::empty(x_dim, mid_dim, y_dim);
                let map_a = SectionMap {
                    x: (0, a.x_dim),
                    mid: (x_dim, a.mid_dim),
                    y: (x_dim + mid_dim, a.y_dim),
                };
                let map_b = SectionMap {
                    x: (a.x_dim, b.x_dim),
                    mid: (x_dim + a.mid_dim, b.mid_dim),
                    y: (x_dim + mid_dim + a.y_dim, b.y_dim),
                };
                low.absorb(&a, &map_a);
                low.absorb(&b, &map_b);
                low
            }
            RelationBody::Chain { first, second } => {
                let (a, b) = (first.lower(), second.lower());
                debug_assert_eq!(a.y_dim, b.x_dim);
                let x_dim = a.x_dim;
                // Middle block: first's middles, the shared interface space,
                // then second's middles. The interface space constraints come
                // from second's source embedding.
                let mid_dim = a.mid_dim + a.y_dim + b.mid_dim;
                let y_dim = b.y_dim;
                let mut low = Lowered::empty(x_dim, mid_dim, y_dim);
                let shared = x_dim + a.mid_dim;
                let map_a = SectionMap {
                    x: (0, a.x_dim),
                    mid: (x_dim, a.mid_dim),
                    y: (shared, a.y_dim),
                };
                let map_b = SectionMap {
                    x: (shared, b.x_dim),
                    mid: (shared + a.y_dim, b.mid_dim),
                    y: (x_dim + mid_dim, b.y_dim),
                };
                low.absorb(&a, &map_a);
                low.absorb(&b, &map_b);
                low
            }
        }
    }
}

/// A relation flattened to affine rows over `[x, mid, y]`.
pub(crate) struct Lowered {
    pub x_dim: usize,
    pub mid_dim: usize,
    pub y_dim: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ineq: Vec<LinearIneq>,
}

/// Where a sub-lowering's three sections land in an enclosing layout.
struct SectionMap {
    x: (usize, usize),
    mid: (usize, usize),
    y: (usize, usize),
}

impl Lowered {
    fn empty(x_dim: usize, mid_dim: usize, y_dim: usize) -> Self {
        Lowered {
            x_dim,
            mid_dim,
            y_dim,
            eq: Vec::new(),
            ineq: Vec::new(),
        }
    }

    fn dim(&self) -> usize {
        self.x_dim + self.mid_dim + self.y_dim
    }

    fn embed_space(&mut self, space: &ConvexSpace, offset: usize) {
        let dim = self.dim();
        let (eq, ineq) = space.constraints();
        for c in eq {
            self.eq.push((scatter(&c.coeffs, offset, dim), c.rhs));
        }
        for c in ineq {
            self.ineq.push(LinearIneq {
                coeffs: scatter(&c.coeffs, offset, dim),
                rhs: c.rhs,
                strict: c.strict,
            });
        }
    }

    fn remap(&self, coeffs: &[f64], inner: &Lowered, map: &SectionMap) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let sections = [
            (0, inner.x_dim, map.x.0),
            (inner.x_dim, inner.mid_dim, map.mid.0),
            (inner.x_dim + inner.mid_dim, inner.y_dim, map.y.0),
        ];
        for (src, len, dst) in sections {
            out[dst..dst + len].copy_from_slice(&coeffs[src..src + len]);
        }
        out
    }

    fn absorb(&mut self, inner: &Lowered, map: &SectionMap) {
        for (coeffs, rhs) in &inner.eq {
            let row = self.remap(coeffs, inner, map);
            self.eq.push((row, *rhs));
        }
        for c in &inner.ineq {
            let coeffs = self.remap(&c.coeffs, inner, map);
            self.ineq.push(LinearIneq {
                coeffs,
                rhs: c.rhs,
                strict: c.strict,
            });
        }
    }

    /// Direct satisfaction check for middle-free lowerings.
    fn satisfied(&self, z: &[f64], _x_dim: usize) -> bool {
        self.eq
            .iter()
            .all(|(coeffs, rhs)| (dot(coeffs, z) - rhs).abs() <= TOL_MEMBERSHIP)
            && self.ineq.iter().all(|c| {
                let v = dot(&c.coeffs, z);
                if c.strict {
                    v < c.rhs
                } else {
                    v <= c.rhs + TOL_MEMBERSHIP
                }
            })
    }
}

fn split_fixed(coeffs: &[f64], x: &[f64], y: &[f64], mid_dim: usize) -> (Vec<f64>, f64) {
    let dx = x.len();
    let mid = coeffs[dx..dx + mid_dim].to_vec();
    let adj = dot(&coeffs[..dx], x) + dot(&coeffs[dx + mid_dim..], y);
    (mid, adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::BoundingBox;

    fn st(coords: &[f64]) -> State {
        State::new(coords.to_vec())
    }

    fn merge_relation() -> ConvexRelation {
        // U1 + U2 = U from the positive quadrant to the half line.
        ConvexRelation::affine(
            ConvexSpace::product(ConvexSpace::Orthant { n: 1 }, ConvexSpace::Orthant { n: 1 }),
            ConvexSpace::Orthant { n: 1 },
            vec![RelEq {
                a: vec![1.0, 1.0],
                b: vec![-1.0],
                c: 0.0,
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn full_membership_is_space_membership() {
        let full = ConvexRelation::full(ConvexSpace::Orthant { n: 1 }, ConvexSpace::Singleton);
        assert!(full.member(&st(&[2.0]), &st(&[])).unwrap());
        assert!(!full.member(&st(&[-2.0]), &st(&[])).unwrap());
    }

    #[test]
    fn affine_membership() {
        let merge = merge_relation();
        assert!(merge.member(&st(&[1.0, 2.0]), &st(&[3.0])).unwrap());
        assert!(!merge.member(&st(&[1.0, 2.0]), &st(&[4.0])).unwrap());
    }

    #[test]
    fn inclusion_graph_membership() {
        let incl = ConvexRelation::graph(
            ConvexSpace::Orthant { n: 1 },
            ConvexSpace::RealLine { n: 1 },
            AffineMap::identity(1),
        )
        .unwrap();
        assert!(incl.member(&st(&[2.0]), &st(&[2.0])).unwrap());
        assert!(!incl.member(&st(&[2.0]), &st(&[3.0])).unwrap());
        assert!(!incl.member(&st(&[-1.0]), &st(&[-1.0])).unwrap());
    }

    #[test]
    fn identity_relates_exactly_the_diagonal() {
        let id = ConvexRelation::identity(ConvexSpace::RealLine { n: 2 });
        assert!(id.member(&st(&[1.0, 2.0]), &st(&[1.0, 2.0])).unwrap());
        assert!(!id.member(&st(&[1.0, 2.0]), &st(&[2.0, 1.0])).unwrap());
    }

    #[test]
    fn compose_requires_matching_interface() {
        let merge = merge_relation();
        let id_orthant = ConvexRelation::identity(ConvexSpace::Orthant { n: 1 });
        let id_line = ConvexRelation::identity(ConvexSpace::RealLine { n: 1 });
        assert!(merge.compose(&id_orthant).is_ok());
        assert!(merge.compose(&id_line).is_err());
    }

    #[test]
    fn compose_with_identity_preserves_membership() {
        let merge = merge_relation();
        let composed = merge
            .compose(&ConvexRelation::identity(ConvexSpace::Orthant { n: 1 }))
            .unwrap();
        for (x, y, expect) in [
            (st(&[1.0, 2.0]), st(&[3.0]), true),
            (st(&[1.0, 1.0]), st(&[3.0]), false),
            (st(&[0.5, 0.25]), st(&[0.75]), true),
        ] {
            assert_eq!(composed.member(&x, &y).unwrap(), expect, "{x} ~ {y}");
            assert_eq!(merge.member(&x, &y).unwrap(), expect);
        }
    }

    #[test]
    fn graph_composition_behaves_like_composed_maps() {
        let double = AffineMap::new(vec![vec![2.0]], vec![0.0]).unwrap();
        let shift = AffineMap::new(vec![vec![1.0]], vec![1.0]).unwrap();
        let line = ConvexSpace::RealLine { n: 1 };
        let f = ConvexRelation::graph(line.clone(), line.clone(), double).unwrap();
        let g = ConvexRelation::graph(line.clone(), line.clone(), shift).unwrap();
        let fg = f.compose(&g).unwrap();
        for x in [-1.5, 0.0, 2.0] {
            assert!(fg.member(&st(&[x]), &st(&[2.0 * x + 1.0])).unwrap());
            assert!(!fg.member(&st(&[x]), &st(&[2.0 * x + 1.5])).unwrap());
        }
    }

    #[test]
    fn two_stage_merge_equals_one_stage() {
        // (U1, U2, U3) -> (U12, U3) -> U against the direct three-way sum.
        let orth = |n| ConvexSpace::Orthant { n };
        let stage1 = ConvexRelation::affine(
            ConvexSpace::product(orth(1), ConvexSpace::product(orth(1), orth(1))),
            ConvexSpace::product(orth(1), orth(1)),
            vec![
                RelEq {
                    a: vec![1.0, 1.0, 0.0],
                    b: vec![-1.0, 0.0],
                    c: 0.0,
                },
                RelEq {
                    a: vec![0.0, 0.0, 1.0],
                    b: vec![0.0, -1.0],
                    c: 0.0,
                },
            ],
            vec![],
        )
        .unwrap();
        let stage2 = ConvexRelation::affine(
            ConvexSpace::product(orth(1), orth(1)),
            orth(1),
            vec![RelEq {
                a: vec![1.0, 1.0],
                b: vec![-1.0],
                c: 0.0,
            }],
            vec![],
        )
        .unwrap();
        let two_stage = stage1.compose(&stage2).unwrap();
        let direct = ConvexRelation::affine(
            two_stage.source().clone(),
            orth(1),
            vec![RelEq {
                a: vec![1.0, 1.0, 1.0],
                b: vec![-1.0],
                c: 0.0,
            }],
            vec![],
        )
        .unwrap();

        let region = BoundingBox::cube(3, 0.1, 2.0);
        let xs = two_stage.source().sample(&region, 42, 12).unwrap();
        for x in &xs {
            let total: f64 = x.coords().iter().sum();
            for y in [total, total + 0.5] {
                let y = st(&[y]);
                assert_eq!(
                    two_stage.member(x, &y).unwrap(),
                    direct.member(x, &y).unwrap(),
                    "x={x} y={y}"
                );
            }
        }
    }

    #[test]
    fn composition_is_observationally_associative() {
        let line = ConvexSpace::RealLine { n: 1 };
        let f = ConvexRelation::graph(
            line.clone(),
            line.clone(),
            AffineMap::new(vec![vec![2.0]], vec![0.0]).unwrap(),
        )
        .unwrap();
        let g = ConvexRelation::graph(
            line.clone(),
            line.clone(),
            AffineMap::new(vec![vec![1.0]], vec![-1.0]).unwrap(),
        )
        .unwrap();
        let h = ConvexRelation::graph(
            line.clone(),
            line.clone(),
            AffineMap::new(vec![vec![-1.0]], vec![0.5]).unwrap(),
        )
        .unwrap();
        let left = f.compose(&g).unwrap().compose(&h).unwrap();
        let right = f.compose(&g.compose(&h).unwrap()).unwrap();
        for x in [-2.0, 0.0, 1.0, 3.5] {
            let y = 0.5 - (2.0 * x - 1.0);
            assert!(left.member(&st(&[x]), &st(&[y])).unwrap());
            assert!(right.member(&st(&[x]), &st(&[y])).unwrap());
            assert!(!left.member(&st(&[x]), &st(&[y + 0.25])).unwrap());
            assert!(!right.member(&st(&[x]), &st(&[y + 0.25])).unwrap());
        }
    }

    #[test]
    fn product_of_fulls_is_full() {
        let full1 = ConvexRelation::full(
            ConvexSpace::RealLine { n: 1 },
            ConvexSpace::RealLine { n: 1 },
        );
        let p = full1.product(&full1);
        assert!(p.member(&st(&[1.0, 2.0]), &st(&[-1.0, 7.0])).unwrap());
    }

    #[test]
    fn product_of_graphs_is_graph_of_product_map() {
        let line = ConvexSpace::RealLine { n: 1 };
        let f = ConvexRelation::graph(
            line.clone(),
            line.clone(),
            AffineMap::new(vec![vec![3.0]], vec![0.0]).unwrap(),
        )
        .unwrap();
        let g = ConvexRelation::graph(
            line.clone(),
            line.clone(),
            AffineMap::new(vec![vec![1.0]], vec![2.0]).unwrap(),
        )
        .unwrap();
        let p = f.product(&g);
        assert!(p.member(&st(&[1.0, 1.0]), &st(&[3.0, 3.0])).unwrap());
        assert!(!p.member(&st(&[1.0, 1.0]), &st(&[3.0, 4.0])).unwrap());
    }

    #[test]
    fn fiber_of_merge_is_the_segment() {
        let merge = merge_relation();
        let cs = merge.fiber(&st(&[3.0])).unwrap();
        assert_eq!(cs.dim, 2);
        assert_eq!(cs.primary_dim, 2);
        let relaxed = cs.relaxed();
        assert!(relaxed.contains(&[1.0, 2.0], 1e-9));
        assert!(relaxed.contains(&[2.5, 0.5], 1e-9));
        assert!(!relaxed.contains(&[2.0, 2.0], 1e-9));
        assert!(!relaxed.contains(&[-1.0, 4.0], 1e-9));
    }

    #[test]
    fn fiber_matches_member_pointwise() {
        let merge = merge_relation();
        let y = st(&[2.0]);
        let cs = merge.fiber(&y).unwrap();
        let region = BoundingBox::cube(2, 0.05, 2.5);
        let pts = merge.source().sample(&region, 9, 20).unwrap();
        for x in &pts {
            assert_eq!(
                cs.contains(x.coords(), TOL_MEMBERSHIP),
                merge.member(x, &y).unwrap(),
                "{x}"
            );
        }
    }

    #[test]
    fn fiber_outside_target_errors() {
        let merge = merge_relation();
        assert!(merge.fiber(&st(&[-1.0])).is_err());
    }

    #[test]
    fn membership_is_convex_along_combinations() {
        let merge = merge_relation();
        let pairs = [
            (st(&[1.0, 2.0]), st(&[3.0])),
            (st(&[2.0, 1.0]), st(&[3.0])),
            (st(&[0.5, 0.5]), st(&[1.0])),
        ];
        for (x1, y1) in &pairs {
            for (x2, y2) in &pairs {
                for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    let x = merge.source().combine(lambda, x1, x2).unwrap();
                    let y = merge.target().combine(lambda, y1, y2).unwrap();
                    assert!(merge.member(&x, &y).unwrap());
                }
            }
        }
    }

    #[test]
    fn chain_fiber_lifts_middle_variables() {
        let merge = merge_relation();
        let chained = merge
            .compose(&ConvexRelation::identity(ConvexSpace::Orthant { n: 1 }))
            .unwrap();
        let cs = chained.fiber(&st(&[3.0])).unwrap();
        assert_eq!(cs.primary_dim, 2);
        assert_eq!(cs.dim, 3);
        // (U1, U2, mid) with U1 + U2 = mid and mid = 3.
        assert!(cs.relaxed().contains(&[1.0, 2.0, 3.0], 1e-9));
        assert!(!cs.relaxed().contains(&[1.0, 2.0, 2.0], 1e-9));
    }
}
