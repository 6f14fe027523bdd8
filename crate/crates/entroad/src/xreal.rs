//! Extended reals `[-∞, ∞]` with the convex structure and addition used for
//! entropy values.
//!
//! Two conventions matter and both make negative infinity dominant:
//!
//! * a nontrivial convex combination of `-∞` and `+∞` is `-∞`, and
//! * `-∞ + ∞ = -∞` (while `x + ∞ = ∞` for finite `x`).
//!
//! With the opposite choice, pushforward entropies would stop being concave,
//! so the asymmetry is load-bearing rather than a tie-break.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::Error;

/// An entropy value: a finite real (never NaN), `+∞`, or `-∞`.
///
/// The total order puts `-∞` below every finite value and `+∞` above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

pub use ExtReal::{Finite, NegInf, PosInf};

impl ExtReal {
    /// Wraps a finite value, rejecting NaN and mapping IEEE infinities to the
    /// corresponding tag.
    pub fn new(v: f64) -> Result<Self, Error> {
        if v.is_nan() {
            return Err(Error::Domain("NaN is not an extended real".into()));
        }
        Ok(Self::from_f64_unchecked(v))
    }

    /// As [`ExtReal::new`] but panics on NaN. Intended for literals.
    pub fn finite(v: f64) -> Self {
        Self::new(v).expect("finite ExtReal from NaN")
    }

    pub(crate) fn from_f64_unchecked(v: f64) -> Self {
        if v == f64::INFINITY {
            PosInf
        } else if v == f64::NEG_INFINITY {
            NegInf
        } else {
            Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    /// The finite payload, if any.
    pub fn as_finite(self) -> Option<f64> {
        match self {
            Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Lossy view as `f64`, mapping the infinite tags to IEEE infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            NegInf => f64::NEG_INFINITY,
            Finite(v) => v,
            PosInf => f64::INFINITY,
        }
    }

    /// Convex combination `λ·a + (1-λ)·b`.
    ///
    /// `λ = 1` projects onto `a` and `λ = 0` onto `b` before any arithmetic,
    /// so `0·∞` never arises. For `λ` strictly between 0 and 1 any `-∞`
    /// operand wins, then any `+∞` operand.
    pub fn combine(lambda: f64, a: ExtReal, b: ExtReal) -> Result<ExtReal, Error> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Domain(format!(
                "convex weight {lambda} outside [0, 1]"
            )));
        }
        if lambda == 1.0 {
            return Ok(a);
        }
        if lambda == 0.0 {
            return Ok(b);
        }
        if a == b {
            // The idempotence axiom, kept exact under rounding.
            return Ok(a);
        }
        Ok(match (a, b) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (Finite(x), Finite(y)) => Finite(lambda * x + (1.0 - lambda) * y),
        })
    }

    /// Entropy addition: `-∞` absorbs everything, then `+∞`.
    pub fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (Finite(x), Finite(y)) => Finite(x + y),
        }
    }

    /// Least upper bound of a collection; the empty supremum is `-∞`.
    pub fn sup<I: IntoIterator<Item = ExtReal>>(values: I) -> ExtReal {
        let mut best = NegInf;
        for v in values {
            if v == PosInf {
                return PosInf;
            }
            if v > best {
                best = v;
            }
        }
        best
    }

    fn rank(self) -> u8 {
        match self {
            NegInf => 0,
            Finite(_) => 1,
            PosInf => 2,
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        ExtReal::add(self, rhs)
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            // Finite payloads exclude NaN by construction.
            (Finite(a), Finite(b)) => a.partial_cmp(b).expect("NaN in ExtReal"),
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl From<ExtReal> for f64 {
    fn from(v: ExtReal) -> f64 {
        v.to_f64()
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => f.write_str("-inf"),
            PosInf => f.write_str("+inf"),
            Finite(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "+inf" => Ok(PosInf),
            "-inf" => Ok(NegInf),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::Domain(format!("unreadable extended real {other:?}")))?;
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "finite extended reals must be decimal literals, got {other:?}"
                    )));
                }
                ExtReal::new(v)
            }
        }
    }
}

impl serde::Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Finite(v) => ser.serialize_f64(*v),
            PosInf => ser.serialize_str("+inf"),
            NegInf => ser.serialize_str("-inf"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let raw = serde_json::Value::deserialize(de)?;
        match raw {
            serde_json::Value::Number(n) => {
                let v = n.as_f64().ok_or_else(|| DeError::custom("bad number"))?;
                ExtReal::new(v).map_err(DeError::custom)
            }
            serde_json::Value::String(s) => s.parse().map_err(DeError::custom),
            other => Err(DeError::custom(format!(
                "expected number, \"+inf\" or \"-inf\", got {other}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xr(v: f64) -> ExtReal {
        ExtReal::finite(v)
    }

    const SAMPLES: [ExtReal; 7] = [
        NegInf,
        Finite(-3.5),
        Finite(0.0),
        Finite(1.0),
        Finite(4.0),
        Finite(8.0),
        PosInf,
    ];

    #[test]
    fn combine_mixes_infinities_toward_neg() {
        assert_eq!(ExtReal::combine(0.5, NegInf, PosInf).unwrap(), NegInf);
        assert_eq!(ExtReal::combine(0.5, PosInf, NegInf).unwrap(), NegInf);
        assert_eq!(ExtReal::combine(0.25, xr(1.0), PosInf).unwrap(), PosInf);
        assert_eq!(ExtReal::combine(0.75, NegInf, xr(2.0)).unwrap(), NegInf);
    }

    #[test]
    fn combine_projects_at_endpoints() {
        assert_eq!(ExtReal::combine(1.0, xr(3.0), NegInf).unwrap(), xr(3.0));
        assert_eq!(ExtReal::combine(0.0, PosInf, xr(-2.0)).unwrap(), xr(-2.0));
        // 0·∞ is never formed: endpoint weights project first.
        assert_eq!(ExtReal::combine(1.0, PosInf, NegInf).unwrap(), PosInf);
    }

    #[test]
    fn combine_finite_affine() {
        assert_eq!(ExtReal::combine(0.25, xr(4.0), xr(8.0)).unwrap(), xr(7.0));
    }

    #[test]
    fn combine_rejects_bad_weight() {
        assert!(ExtReal::combine(1.5, xr(0.0), xr(1.0)).is_err());
        assert!(ExtReal::combine(-0.1, xr(0.0), xr(1.0)).is_err());
    }

    #[test]
    fn add_table() {
        assert_eq!(PosInf + NegInf, NegInf);
        assert_eq!(NegInf + PosInf, NegInf);
        assert_eq!(xr(2.5) + PosInf, PosInf);
        assert_eq!(PosInf + PosInf, PosInf);
        assert_eq!(NegInf + NegInf, NegInf);
        assert_eq!(xr(2.0) + xr(-0.5), xr(1.5));
        for v in SAMPLES {
            assert_eq!(xr(0.0) + v, v);
            assert_eq!(v + xr(0.0), v);
        }
    }

    #[test]
    fn add_is_commutative_monoid_on_all_tag_pairs() {
        for a in SAMPLES {
            for b in SAMPLES {
                assert_eq!(a + b, b + a);
                for c in SAMPLES {
                    assert_eq!((a + b) + c, a + (b + c));
                }
            }
        }
    }

    #[test]
    fn sup_of_empty_is_neg_inf() {
        assert_eq!(ExtReal::sup(std::iter::empty()), NegInf);
    }

    #[test]
    fn sup_finite_and_absorbing() {
        assert_eq!(ExtReal::sup([xr(1.0), xr(2.0), NegInf]), xr(2.0));
        // +∞ short-circuits even in an unbounded stream.
        let stream = (0..).map(|n| if n == 5 { PosInf } else { xr(n as f64) });
        assert_eq!(ExtReal::sup(stream), PosInf);
    }

    #[test]
    fn sup_distributes_over_union() {
        let a = [xr(1.0), NegInf, xr(-2.0)];
        let b = [xr(0.5), xr(3.0)];
        let union = a.iter().chain(b.iter()).copied();
        assert_eq!(
            ExtReal::sup(union),
            ExtReal::sup([ExtReal::sup(a), ExtReal::sup(b)])
        );
    }

    #[test]
    fn order_is_total() {
        let mut v = vec![PosInf, xr(0.0), NegInf, xr(-1.0), xr(10.0)];
        v.sort();
        assert_eq!(v, vec![NegInf, xr(-1.0), xr(0.0), xr(10.0), PosInf]);
    }

    #[test]
    fn nan_rejected() {
        assert!(ExtReal::new(f64::NAN).is_err());
    }

    #[test]
    fn text_round_trip() {
        assert_eq!(PosInf.to_string(), "+inf");
        assert_eq!(NegInf.to_string(), "-inf");
        assert_eq!(xr(2.5).to_string(), "2.5");
        assert_eq!("+inf".parse::<ExtReal>().unwrap(), PosInf);
        assert_eq!("-inf".parse::<ExtReal>().unwrap(), NegInf);
        assert_eq!("3.25".parse::<ExtReal>().unwrap(), xr(3.25));
        assert!("inf".parse::<ExtReal>().is_err());
        assert!("Infinity".parse::<ExtReal>().is_err());
    }

    // The associativity-like law: c_λ(c_μ(x,y), z) = c_λ'(x, c_μ'(y,z))
    // whenever λμ = λ' and 1-λ = (1-λ')(1-μ').
    #[test]
    fn combine_associativity_law_on_grid() {
        let grid: [f64; 7] = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
        for &lambda in &grid {
            for &mu in &grid {
                let lambda_p = lambda * mu;
                if (1.0 - lambda_p).abs() < 1e-15 {
                    continue;
                }
                let mu_p = 1.0 - (1.0 - lambda) / (1.0 - lambda_p);
                if !(0.0..=1.0).contains(&mu_p) {
                    continue;
                }
                for x in SAMPLES {
                    for y in SAMPLES {
                        for z in SAMPLES {
                            let lhs =
                                ExtReal::combine(lambda, ExtReal::combine(mu, x, y).unwrap(), z)
                                    .unwrap();
                            let rhs = ExtReal::combine(
                                lambda_p,
                                x,
                                ExtReal::combine(mu_p, y, z).unwrap(),
                            )
                            .unwrap();
                            match (lhs, rhs) {
                                (Finite(a), Finite(b)) => {
                                    assert!((a - b).abs() <= 1e-12, "λ={lambda} μ={mu}: {a} vs {b}")
                                }
                                _ => assert_eq!(
                                    lhs, rhs,
                                    "λ={lambda} μ={mu} x={x:?} y={y:?} z={z:?}"
                                ),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn combine_symmetry_and_idempotence() {
        let grid = [0.0, 0.3, 0.5, 0.8, 1.0];
        for &l in &grid {
            for a in SAMPLES {
                assert_eq!(ExtReal::combine(l, a, a).unwrap(), a);
                for b in SAMPLES {
                    let lhs = ExtReal::combine(l, a, b).unwrap();
                    let rhs = ExtReal::combine(1.0 - l, b, a).unwrap();
                    match (lhs, rhs) {
                        (Finite(x), Finite(y)) => assert!((x - y).abs() <= 1e-12),
                        _ => assert_eq!(lhs, rhs),
                    }
                }
            }
        }
    }
}
