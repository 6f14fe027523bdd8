//! Finite-dimensional convex state spaces and the polyhedral constraint sets
//! the maximizer consumes.
//!
//! Every space here is a subset of some `ℝ^n` described by affine equalities
//! and (possibly strict) inequalities. The simplex keeps its own variant so
//! ensemble code can recognize it, and products flatten to concatenated
//! coordinates, which turns all the monoidal bookkeeping downstream into
//! index arithmetic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Error;

/// Absolute tolerance for a single membership constraint.
pub const TOL_MEMBERSHIP: f64 = 1e-9;

/// Margin by which strict inequalities are closed off inside the optimizer.
///
/// Suprema over open sets are approached rather than attained; shrinking by
/// this margin keeps every query point strictly inside the open set while
/// moving the optimal value by at most a gradient-scaled 1e-9.
pub const TOL_STRICT: f64 = 1e-9;

/// A point of a state space; coordinate meaning is carried by the space.
#[derive(Debug, Clone, PartialEq)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn new(coords: Vec<f64>) -> Self {
        State(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<Vec<f64>> for State {
    fn from(coords: Vec<f64>) -> Self {
        State(coords)
    }
}

impl std::fmt::Display for State {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// One affine equality `a · x = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEq {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// One affine inequality `a · x ≤ c`, or `a · x < c` when `strict`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearIneq {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub strict: bool,
}

pub(crate) fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(ai, xi)| ai * xi).sum()
}

/// A convex state space.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSpace {
    /// `{x ∈ ℝ^dim : eq, ineq}`.
    Polyhedron {
        dim: usize,
        eq: Vec<LinearEq>,
        ineq: Vec<LinearIneq>,
    },
    /// Probability distributions on `{0, …, n}`; ambient dimension `n + 1`.
    Simplex {
        n: usize,
    },
    /// `ℝ^n` with all coordinates strictly positive.
    Orthant {
        n: usize,
    },
    /// All of `ℝ^n`.
    RealLine {
        n: usize,
    },
    /// The one-point space; ambient dimension zero.
    Singleton,
    Product(Box<ConvexSpace>, Box<ConvexSpace>),
}

impl ConvexSpace {
    pub fn polyhedron(dim: usize, eq: Vec<LinearEq>, ineq: Vec<LinearIneq>) -> Result<Self, Error> {
        for c in &eq {
            if c.coeffs.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: c.coeffs.len(),
                });
            }
        }
        for c in &ineq {
            if c.coeffs.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: c.coeffs.len(),
                });
            }
        }
        Ok(ConvexSpace::Polyhedron { dim, eq, ineq })
    }

    pub fn product(a: ConvexSpace, b: ConvexSpace) -> ConvexSpace {
        ConvexSpace::Product(Box::new(a), Box::new(b))
    }

    /// Left-nested product of a list; the empty product is the singleton.
    pub fn product_all<I: IntoIterator<Item = ConvexSpace>>(spaces: I) -> ConvexSpace {
        let mut it = spaces.into_iter();
        match it.next() {
            None => ConvexSpace::Singleton,
            Some(first) => it.fold(first, ConvexSpace::product),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            ConvexSpace::Polyhedron { dim, .. } => *dim,
            ConvexSpace::Simplex { n } => n + 1,
            ConvexSpace::Orthant { n } | ConvexSpace::RealLine { n } => *n,
            ConvexSpace::Singleton => 0,
            ConvexSpace::Product(a, b) => a.ambient_dim() + b.ambient_dim(),
        }
    }

    fn push_factors<'a>(&'a self, out: &mut Vec<&'a ConvexSpace>) {
        match self {
            ConvexSpace::Singleton => {}
            ConvexSpace::Product(a, b) => {
                a.push_factors(out);
                b.push_factors(out);
            }
            atom => out.push(atom),
        }
    }

    /// Equality up to product reassociation and unit (singleton) factors.
    ///
    /// Coordinates flatten products left to right, which turns the monoidal
    /// coherence maps into identities on indices; interface checks between
    /// relations and systems use this congruence rather than tree equality.
    pub fn congruent(&self, other: &ConvexSpace) -> bool {
        let mut a = Vec::new();
        let mut b = Vec::new();
        self.push_factors(&mut a);
        other.push_factors(&mut b);
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x == y)
    }

    /// Membership within [`TOL_MEMBERSHIP`] per constraint. Strict
    /// inequalities are tested strictly.
    pub fn contains(&self, x: &State) -> Result<bool, Error> {
        if x.dim() != self.ambient_dim() {
            return Err(Error::Dimension {
                expected: self.ambient_dim(),
                got: x.dim(),
            });
        }
        Ok(self.contains_unchecked(x.coords()))
    }

    fn contains_unchecked(&self, x: &[f64]) -> bool {
        match self {
            ConvexSpace::Polyhedron { eq, ineq, .. } => {
                eq.iter()
                    .all(|c| (dot(&c.coeffs, x) - c.rhs).abs() <= TOL_MEMBERSHIP)
                    && ineq.iter().all(|c| {
                        let v = dot(&c.coeffs, x);
                        if c.strict {
                            v < c.rhs
                        } else {
                            v <= c.rhs + TOL_MEMBERSHIP
                        }
                    })
            }
            ConvexSpace::Simplex { .. } => {
                x.iter().all(|&p| p >= -TOL_MEMBERSHIP)
                    && (x.iter().sum::<f64>() - 1.0).abs() <= TOL_MEMBERSHIP
            }
            ConvexSpace::Orthant { .. } => x.iter().all(|&v| v > 0.0),
            ConvexSpace::RealLine { .. } => true,
            ConvexSpace::Singleton => true,
            ConvexSpace::Product(a, b) => {
                let k = a.ambient_dim();
                a.contains_unchecked(&x[..k]) && b.contains_unchecked(&x[k..])
            }
        }
    }

    /// Coordinatewise convex combination `λx + (1-λ)y` of two members.
    pub fn combine(&self, lambda: f64, x: &State, y: &State) -> Result<State, Error> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!(
                "convex weight {lambda} outside [0, 1]"
            )));
        }
        if !self.contains(x)? {
            return Err(Error::Domain(format!("{x} is not a member of the space")));
        }
        if !self.contains(y)? {
            return Err(Error::Domain(format!("{y} is not a member of the space")));
        }
        if lambda == 1.0 {
            return Ok(x.clone());
        }
        if lambda == 0.0 {
            return Ok(y.clone());
        }
        Ok(State(
            x.coords()
                .iter()
                .zip(y.coords())
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        ))
    }

    /// The space's defining constraints over its own coordinates.
    pub fn constraints(&self) -> (Vec<LinearEq>, Vec<LinearIneq>) {
        let dim = self.ambient_dim();
        let unit = |i: usize, sign: f64| {
            let mut c = vec![0.0; dim];
            c[i] = sign;
            c
        };
        match self {
            ConvexSpace::Polyhedron { eq, ineq, .. } => (eq.clone(), ineq.clone()),
            ConvexSpace::Simplex { n } => {
                let eq = vec![LinearEq {
                    coeffs: vec![1.0; n + 1],
                    rhs: 1.0,
                }];
                let ineq = (0..=*n)
                    .map(|i| LinearIneq {
                        coeffs: unit(i, -1.0),
                        rhs: 0.0,
                        strict: false,
                    })
                    .collect();
                (eq, ineq)
            }
            ConvexSpace::Orthant { n } => {
                let ineq = (0..*n)
                    .map(|i| LinearIneq {
                        coeffs: unit(i, -1.0),
                        rhs: 0.0,
                        strict: true,
                    })
                    .collect();
                (Vec::new(), ineq)
            }
            ConvexSpace::RealLine { .. } | ConvexSpace::Singleton => (Vec::new(), Vec::new()),
            ConvexSpace::Product(a, b) => {
                let (ea, ia) = a.constraints();
                let (eb, ib) = b.constraints();
                let ka = a.ambient_dim();
                let kb = b.ambient_dim();
                let mut eq: Vec<LinearEq> = ea
                    .into_iter()
                    .map(|c| LinearEq {
                        coeffs: pad(&c.coeffs, 0, kb),
                        rhs: c.rhs,
                    })
                    .collect();
                eq.extend(eb.into_iter().map(|c| LinearEq {
                    coeffs: pad(&c.coeffs, ka, 0),
                    rhs: c.rhs,
                }));
                let mut ineq: Vec<LinearIneq> = ia
                    .into_iter()
                    .map(|c| LinearIneq {
                        coeffs: pad(&c.coeffs, 0, kb),
                        rhs: c.rhs,
                        strict: c.strict,
                    })
                    .collect();
                ineq.extend(ib.into_iter().map(|c| LinearIneq {
                    coeffs: pad(&c.coeffs, ka, 0),
                    rhs: c.rhs,
                    strict: c.strict,
                }));
                (eq, ineq)
            }
        }
    }

    /// The space as a [`ConstraintSet`] over its own coordinates.
    pub fn constraint_set(&self) -> ConstraintSet {
        let (eq, ineq) = self.constraints();
        ConstraintSet {
            dim: self.ambient_dim(),
            primary_dim: self.ambient_dim(),
            eq,
            ineq,
        }
    }

    /// Deterministic pseudo-random members of `space ∩ region`.
    ///
    /// Equality structure (simplex normalization, polyhedron equalities) is
    /// respected by construction; inequalities and the region are enforced by
    /// rejection with a cap of `SAMPLE_RETRY_FACTOR` attempts per point.
    pub fn sample(
        &self,
        region: &BoundingBox,
        seed: u64,
        count: usize,
    ) -> Result<Vec<State>, Error> {
        if region.lo.len() != self.ambient_dim() || region.hi.len() != self.ambient_dim() {
            return Err(Error::Dimension {
                expected: self.ambient_dim(),
                got: region.lo.len(),
            });
        }
        if !region.is_finite() {
            return Err(Error::Domain("sampling region must be a finite box".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        let budget = SAMPLE_RETRY_FACTOR * count.max(1);
        while out.len() < count {
            if attempts >= budget {
                return Err(Error::Sampling {
                    space: format!("{self:?}"),
                    reason: format!(
                        "retry cap of {budget} attempts exhausted after {} accepted points",
                        out.len()
                    ),
                });
            }
            attempts += 1;
            let candidate = self.propose(region, &mut rng);
            if self.contains_unchecked(&candidate) && region.contains(&candidate) {
                out.push(State(candidate));
            }
        }
        Ok(out)
    }

    /// One proposal honoring the space's equality structure.
    fn propose(&self, region: &BoundingBox, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            ConvexSpace::Simplex { n } => {
                // Normalized exponentials: uniform on the simplex.
                let mut v: Vec<f64> = (0..=*n)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln())
                    .collect();
                let total: f64 = v.iter().sum();
                if total > 0.0 {
                    for x in &mut v {
                        *x /= total;
                    }
                }
                v
            }
            ConvexSpace::Product(a, b) => {
                let k = a.ambient_dim();
                let (ra, rb) = region.split(k);
                let mut v = a.propose(&ra, rng);
                v.extend(b.propose(&rb, rng));
                v
            }
            ConvexSpace::Polyhedron { dim, eq, .. } if !eq.is_empty() => {
                // Sample in the equality null space through a particular
                // solution, then let rejection handle the inequalities.
                let a: Vec<Vec<f64>> = eq.iter().map(|c| c.coeffs.clone()).collect();
                let b: Vec<f64> = eq.iter().map(|c| c.rhs).collect();
                match crate::linalg::affine_solution_set(&a, &b) {
                    Some((x0, basis)) => {
                        let span = region.max_extent().max(1.0);
                        let mut v = x0;
                        for dir in &basis {
                            let t = (rng.random::<f64>() * 2.0 - 1.0) * span;
                            for (vi, di) in v.iter_mut().zip(dir) {
                                *vi += t * di;
                            }
                        }
                        v
                    }
                    None => region.uniform(*dim, rng),
                }
            }
            _ => region.uniform(self.ambient_dim(), rng),
        }
    }
}

/// Rejection-sampling budget per requested point.
pub const SAMPLE_RETRY_FACTOR: usize = 1000;

fn pad(coeffs: &[f64], before: usize, after: usize) -> Vec<f64> {
    let mut v = vec![0.0; before];
    v.extend_from_slice(coeffs);
    v.extend(std::iter::repeat_n(0.0, after));
    v
}

/// A finite axis-aligned box, used to bound sampling and grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, Error> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Domain("bounding box with lo > hi".into()));
        }
        Ok(BoundingBox { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        BoundingBox {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_finite(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - TOL_MEMBERSHIP && *v <= h + TOL_MEMBERSHIP)
    }

    fn split(&self, k: usize) -> (BoundingBox, BoundingBox) {
        (
            BoundingBox {
                lo: self.lo[..k].to_vec(),
                hi: self.hi[..k].to_vec(),
            },
            BoundingBox {
                lo: self.lo[k..].to_vec(),
                hi: self.hi[k..].to_vec(),
            },
        )
    }

    fn max_extent(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }

    fn uniform(&self, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..dim)
            .map(|i| self.lo[i] + rng.random::<f64>() * (self.hi[i] - self.lo[i]))
            .collect()
    }
}

/// A polyhedral feasible set over a lifted coordinate vector.
///
/// The objective only reads the first `primary_dim` coordinates; the rest are
/// existential variables introduced by relation composition, constrained but
/// not scored.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub dim: usize,
    pub primary_dim: usize,
    pub eq: Vec<LinearEq>,
    pub ineq: Vec<LinearIneq>,
}

impl ConstraintSet {
    pub fn new(dim: usize) -> Self {
        ConstraintSet {
            dim,
            primary_dim: dim,
            eq: Vec::new(),
            ineq: Vec::new(),
        }
    }

    pub fn push_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.dim);
        self.eq.push(LinearEq { coeffs, rhs });
    }

    pub fn push_ineq(&mut self, coeffs: Vec<f64>, rhs: f64, strict: bool) {
        debug_assert_eq!(coeffs.len(), self.dim);
        self.ineq.push(LinearIneq {
            coeffs,
            rhs,
            strict,
        });
    }

    /// Appends `fresh` new trailing coordinates, returning their offset.
    pub fn extend_dim(&mut self, fresh: usize) -> usize {
        let offset = self.dim;
        self.dim += fresh;
        for c in &mut self.eq {
            c.coeffs.resize(self.dim, 0.0);
        }
        for c in &mut self.ineq {
            c.coeffs.resize(self.dim, 0.0);
        }
        offset
    }

    /// Embeds a space's constraints over the coordinate block at `offset`.
    pub fn embed_space(&mut self, space: &ConvexSpace, offset: usize) {
        let (eq, ineq) = space.constraints();
        for c in eq {
            self.push_eq(scatter(&c.coeffs, offset, self.dim), c.rhs);
        }
        for c in ineq {
            self.push_ineq(scatter(&c.coeffs, offset, self.dim), c.rhs, c.strict);
        }
    }

    /// Point membership within `tol` per constraint (strict rows tested
    /// strictly).
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim
            && self
                .eq
                .iter()
                .all(|c| (dot(&c.coeffs, x) - c.rhs).abs() <= tol)
            && self.ineq.iter().all(|c| {
                let v = dot(&c.coeffs, x);
                if c.strict {
                    v < c.rhs
                } else {
                    v <= c.rhs + tol
                }
            })
    }

    /// The same set with strict rows shrunk by [`TOL_STRICT`], which is what
    /// the solver actually works on.
    pub fn relaxed(&self) -> ConstraintSet {
        let mut out = self.clone();
        for c in &mut out.ineq {
            if c.strict {
                c.rhs -= TOL_STRICT;
                c.strict = false;
            }
        }
        out
    }
}

/// Places `coeffs` into a zero vector of length `dim` starting at `offset`.
pub(crate) fn scatter(coeffs: &[f64], offset: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[offset..offset + coeffs.len()].copy_from_slice(coeffs);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(coords: &[f64]) -> State {
        State(coords.to_vec())
    }

    #[test]
    fn simplex_membership() {
        let s = ConvexSpace::Simplex { n: 1 };
        assert!(s.contains(&st(&[0.5, 0.5])).unwrap());
        assert!(!s.contains(&st(&[0.7, 0.7])).unwrap());
        assert!(!s.contains(&st(&[1.2, -0.2])).unwrap());
    }

    #[test]
    fn orthant_is_open() {
        let s = ConvexSpace::Orthant { n: 1 };
        assert!(!s.contains(&st(&[0.0])).unwrap());
        assert!(s.contains(&st(&[1e-12])).unwrap());
    }

    #[test]
    fn polyhedron_violation() {
        let s = ConvexSpace::polyhedron(
            1,
            vec![],
            vec![LinearIneq {
                coeffs: vec![1.0],
                rhs: 1.0,
                strict: false,
            }],
        )
        .unwrap();
        assert!(!s.contains(&st(&[2.0])).unwrap());
        assert!(s.contains(&st(&[0.5])).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = ConvexSpace::Simplex { n: 2 };
        assert!(s.contains(&st(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn combine_endpoints_and_midpoint() {
        let s = ConvexSpace::RealLine { n: 2 };
        let x = st(&[0.0, 2.0]);
        let y = st(&[2.0, 0.0]);
        assert_eq!(s.combine(1.0, &x, &y).unwrap(), x);
        assert_eq!(s.combine(0.5, &x, &y).unwrap(), st(&[1.0, 1.0]));
    }

    #[test]
    fn combine_on_products_is_componentwise() {
        let p = ConvexSpace::product(
            ConvexSpace::Orthant { n: 1 },
            ConvexSpace::RealLine { n: 1 },
        );
        let x = st(&[1.0, -1.0]);
        let y = st(&[3.0, 5.0]);
        let m = p.combine(0.25, &x, &y).unwrap();
        assert_eq!(m, st(&[0.25 + 2.25, -0.25 + 3.75]));
    }

    #[test]
    fn combine_rejects_non_members() {
        let s = ConvexSpace::Orthant { n: 1 };
        assert!(s.combine(0.5, &st(&[-1.0]), &st(&[1.0])).is_err());
    }

    #[test]
    fn product_dims_add_and_singleton_is_unit() {
        let x = ConvexSpace::Orthant { n: 3 };
        let y = ConvexSpace::RealLine { n: 1 };
        assert_eq!(
            ConvexSpace::product(x.clone(), y).ambient_dim(),
            4,
            "heat-bath coupling joint space"
        );
        let with_unit = ConvexSpace::product(x.clone(), ConvexSpace::Singleton);
        assert_eq!(with_unit.ambient_dim(), x.ambient_dim());
        let member = st(&[1.0, 2.0, 3.0]);
        assert!(with_unit.contains(&member).unwrap());
    }

    #[test]
    fn product_membership_is_conjunction() {
        let p = ConvexSpace::product(ConvexSpace::Orthant { n: 1 }, ConvexSpace::Simplex { n: 1 });
        assert!(p.contains(&st(&[1.0, 0.3, 0.7])).unwrap());
        assert!(!p.contains(&st(&[-1.0, 0.3, 0.7])).unwrap());
        assert!(!p.contains(&st(&[1.0, 0.9, 0.7])).unwrap());
    }

    #[test]
    fn sampling_simplex_normalizes_and_is_deterministic() {
        let s = ConvexSpace::Simplex { n: 2 };
        let region = BoundingBox::cube(3, 0.0, 1.0);
        let a = s.sample(&region, 7, 10).unwrap();
        let b = s.sample(&region, 7, 10).unwrap();
        assert_eq!(a, b);
        for p in &a {
            let total: f64 = p.coords().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(s.contains(p).unwrap());
        }
        let c = s.sample(&region, 8, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_empty_intersection_errors() {
        let empty = ConvexSpace::polyhedron(
            1,
            vec![],
            vec![
                LinearIneq {
                    coeffs: vec![1.0],
                    rhs: 0.0,
                    strict: false,
                },
                LinearIneq {
                    coeffs: vec![-1.0],
                    rhs: -1.0,
                    strict: false,
                },
            ],
        )
        .unwrap();
        let region = BoundingBox::cube(1, -2.0, 2.0);
        match empty.sample(&region, 1, 4) {
            Err(Error::Sampling { .. }) => {}
            other => panic!("expected sampling error, got {other:?}"),
        }
    }

    #[test]
    fn sampling_polyhedron_with_equalities() {
        let diag = ConvexSpace::polyhedron(
            2,
            vec![LinearEq {
                coeffs: vec![1.0, 1.0],
                rhs: 3.0,
            }],
            vec![LinearIneq {
                coeffs: vec![-1.0],
                rhs: 0.0,
                strict: false,
            }
            .clone()]
            .into_iter()
            .map(|mut c| {
                c.coeffs = vec![-1.0, 0.0];
                c
            })
            .collect(),
        )
        .unwrap();
        let region = BoundingBox::cube(2, -5.0, 5.0);
        let pts = diag.sample(&region, 3, 12).unwrap();
        for p in &pts {
            assert!((p.coords()[0] + p.coords()[1] - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn convexity_of_membership_under_combine() {
        let spaces = vec![
            ConvexSpace::Simplex { n: 2 },
            ConvexSpace::Orthant { n: 2 },
            ConvexSpace::product(ConvexSpace::Orthant { n: 1 }, ConvexSpace::Simplex { n: 1 }),
        ];
        for space in spaces {
            let dim = space.ambient_dim();
            let region = BoundingBox::cube(dim, 1e-3, 1.0);
            let pts = space.sample(&region, 11, 8).unwrap();
            for pair in pts.chunks(2) {
                if pair.len() < 2 {
                    continue;
                }
                for lambda in [0.0, 0.25, 0.5, 0.9, 1.0] {
                    let m = space.combine(lambda, &pair[0], &pair[1]).unwrap();
                    assert!(space.contains(&m).unwrap(), "{space:?} λ={lambda}");
                }
            }
        }
    }

    #[test]
    fn constraint_embedding_tracks_offsets() {
        let mut cs = ConstraintSet::new(2);
        let simplex = ConvexSpace::Simplex { n: 1 };
        let off = cs.extend_dim(2);
        cs.embed_space(&simplex, off);
        assert_eq!(cs.dim, 4);
        assert!(cs.contains(&[9.0, -9.0, 0.25, 0.75], 1e-9));
        assert!(!cs.contains(&[9.0, -9.0, 0.75, 0.75], 1e-9));
    }

    #[test]
    fn relaxed_shrinks_strict_rows() {
        let orthant = ConvexSpace::Orthant { n: 1 };
        let cs = orthant.constraint_set().relaxed();
        assert!(!cs.contains(&[TOL_STRICT / 2.0], 0.0));
        assert!(cs.contains(&[2.0 * TOL_STRICT], 0.0));
    }
}
