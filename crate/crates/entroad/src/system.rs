//! Thermostatic systems: a convex state space paired with a concave entropy
//! function into the extended reals.
//!
//! The entropy families here cover a closed tank of incompressible fluid, the
//! ideal gas, the heat bath, Shannon and von Neumann entropy, measurement
//! entropies on general convex state spaces, plus affine and constant
//! functions and the two structural forms (sums on product spaces and lazy
//! pushforwards along relations).

use crate::convex::{dot, ConvexSpace, State};
use crate::optimize::SolverConfig;
use crate::relation::ConvexRelation;
use crate::xreal::{ExtReal, Finite, NegInf};
use crate::Error;

/// A column-stochastic matrix: a convex-linear map `Δⁿ → Δᵐ`.
///
/// Stored row-major as `m + 1` rows of `n + 1` entries; each column must be
/// nonnegative and sum to one within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMap {
    rows: Vec<Vec<f64>>,
}

impl StochasticMap {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, Error> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::Domain("stochastic map with no rows".into()));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("ragged stochastic map".into()));
        }
        for col in 0..n {
            let mut total = 0.0;
            for row in &rows {
                if row[col] < 0.0 {
                    return Err(Error::Domain("negative entry in stochastic map".into()));
                }
                total += row[col];
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "column {col} of stochastic map sums to {total}, not 1"
                )));
            }
        }
        Ok(StochasticMap { rows })
    }

    /// Identity measurement on `Δⁿ`.
    pub fn identity(n: usize) -> Self {
        let rows = (0..=n)
            .map(|i| {
                let mut r = vec![0.0; n + 1];
                r[i] = 1.0;
                r
            })
            .collect();
        StochasticMap { rows }
    }

    /// Number of input outcomes (columns).
    pub fn input_outcomes(&self) -> usize {
        self.rows[0].len()
    }

    /// Number of output outcomes (rows).
    pub fn output_outcomes(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| dot(r, p)).collect()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Merges outcomes of `e` along `m`, which must map every outcome of `e`
/// (its output index set) into `{0, …, max(m)}`.
pub fn coarse_grain(e: &StochasticMap, m: &[usize]) -> Result<StochasticMap, Error> {
    if m.len() != e.output_outcomes() {
        return Err(Error::Domain(format!(
            "coarse-graining map covers {} outcomes, measurement has {}",
            m.len(),
            e.output_outcomes()
        )));
    }
    let out = m.iter().copied().max().unwrap_or(0) + 1;
    let mut rows = vec![vec![0.0; e.input_outcomes()]; out];
    for (src, &dst) in m.iter().enumerate() {
        for col in 0..e.input_outcomes() {
            rows[dst][col] += e.rows[src][col];
        }
    }
    StochasticMap::new(rows)
}

/// Shannon entropy of a probability vector with the `0·log 0 = 0` convention.
///
/// Entries within membership noise below zero are treated as zero.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .map(|&pi| if pi > 0.0 { -pi * pi.ln() } else { 0.0 })
        .sum()
}

/// A concave entropy function. Each variant reads a fixed number of
/// coordinates; `Sum` concatenates two blocks on a product space.
#[derive(Debug, Clone)]
pub enum EntropyFn {
    /// `S(U) = C · log U` on the positive half-line.
    LogTank {
        heat_capacity: f64,
    },
    /// Sackur-Tetrode ideal-gas entropy on `(U, V, N)`, Boltzmann constant 1:
    /// `S = N [ log( (V/N) (4π m U / (3 N h²))^{3/2} ) + 5/2 ]`.
    SackurTetrode {
        mass: f64,
        planck: f64,
    },
    /// `S(U) = U / T0`: the net energy moved in or out of a bath at fixed
    /// temperature, so `U` ranges over the whole real line.
    HeatBath {
        temperature: f64,
    },
    /// Shannon entropy on `Δⁿ`.
    Shannon {
        n: usize,
    },
    /// von Neumann entropy on `d×d` density matrices, encoded as the `d²`
    /// real coordinates: diagonal first, then (re, im) pairs of the strict
    /// upper triangle in row-major order.
    VonNeumann {
        d: usize,
    },
    /// `S(x) = a · x + b`.
    Affine {
        coeffs: Vec<f64>,
        offset: f64,
    },
    /// `S_E(x) = min_{e ∈ E} Shannon(e · x)` over a nonempty measurement set.
    Measurement {
        maps: Vec<StochasticMap>,
    },
    /// `(S + T)(x, y) = S(x) + T(y)` with `-∞`-dominant addition.
    Sum {
        left: Box<EntropyFn>,
        right: Box<EntropyFn>,
        left_dim: usize,
        right_dim: usize,
    },
    /// The lazily evaluated pushforward of `inner` along `rel`: the value at
    /// `y` is the supremum of the inner entropy over the fiber of `y`.
    Pushforward {
        inner: Box<ThermostaticSystem>,
        rel: Box<ConvexRelation>,
        cfg: SolverConfig,
    },
    Constant {
        value: ExtReal,
    },
}

impl EntropyFn {
    /// The coordinate count this entropy reads, or `None` when any block
    /// length fits (constants).
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            EntropyFn::LogTank { .. } | EntropyFn::HeatBath { .. } => Some(1),
            EntropyFn::SackurTetrode { .. } => Some(3),
            EntropyFn::Shannon { n } => Some(n + 1),
            EntropyFn::VonNeumann { d } => Some(d * d),
            EntropyFn::Affine { coeffs, .. } => Some(coeffs.len()),
            EntropyFn::Measurement { maps } => maps.first().map(StochasticMap::input_outcomes),
            EntropyFn::Sum {
                left_dim,
                right_dim,
                ..
            } => Some(left_dim + right_dim),
            EntropyFn::Pushforward { rel, .. } => Some(rel.target().ambient_dim()),
            EntropyFn::Constant { .. } => None,
        }
    }

    /// Raw evaluation with no membership check. Out-of-domain arguments of
    /// logarithmic families extend continuously to `-∞`; the result is never
    /// NaN.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Result<ExtReal, Error> {
        Ok(match self {
            EntropyFn::LogTank { heat_capacity } => {
                if x[0] > 0.0 {
                    guard(heat_capacity * x[0].ln())
                } else {
                    NegInf
                }
            }
            EntropyFn::SackurTetrode { mass, planck } => {
                let (u, v, n) = (x[0], x[1], x[2]);
                if u > 0.0 && v > 0.0 && n > 0.0 {
                    let scale = (4.0 * std::f64::consts::PI * mass / (3.0 * planck * planck)).ln();
                    guard(n * (v.ln() - n.ln() + 1.5 * (scale + u.ln() - n.ln()) + 2.5))
                } else {
                    NegInf
                }
            }
            EntropyFn::HeatBath { temperature } => guard(x[0] / temperature),
            EntropyFn::Shannon { .. } => Finite(shannon_entropy(x)),
            EntropyFn::VonNeumann { d } => return von_neumann_checked(*d, x),
            EntropyFn::Affine { coeffs, offset } => guard(dot(coeffs, x) + offset),
            EntropyFn::Measurement { maps } => {
                if maps.is_empty() {
                    return Err(Error::Domain("measurement entropy over empty set".into()));
                }
                let clamped: Vec<f64> = x.iter().map(|&p| p.max(0.0)).collect();
                let min = maps
                    .iter()
                    .map(|e| shannon_entropy(&e.apply(&clamped)))
                    .fold(f64::INFINITY, f64::min);
                Finite(min)
            }
            EntropyFn::Sum {
                left,
                right,
                left_dim,
                ..
            } => {
                let a = left.eval_unchecked(&x[..*left_dim])?;
                let b = right.eval_unchecked(&x[*left_dim..])?;
                a + b
            }
            EntropyFn::Pushforward { inner, rel, cfg } => {
                crate::optimize::pushforward_value(inner, rel, x, cfg)?
            }
            EntropyFn::Constant { value } => *value,
        })
    }
}

/// Maps IEEE overflow to the `+∞` tag so callers never see NaN-producing
/// arithmetic downstream.
fn guard(v: f64) -> ExtReal {
    if v.is_nan() {
        NegInf
    } else {
        ExtReal::from_f64_unchecked(v)
    }
}

/// A named state space with a concave entropy function.
#[derive(Debug, Clone)]
pub struct ThermostaticSystem {
    name: String,
    space: ConvexSpace,
    entropy: EntropyFn,
}

impl ThermostaticSystem {
    pub fn new(
        name: impl Into<String>,
        space: ConvexSpace,
        entropy: EntropyFn,
    ) -> Result<Self, Error> {
        if let Some(d) = entropy.expected_dim() {
            if d != space.ambient_dim() {
                return Err(Error::Dimension {
                    expected: space.ambient_dim(),
                    got: d,
                });
            }
        }
        Ok(ThermostaticSystem {
            name: name.into(),
            space,
            entropy,
        })
    }

    /// Closed tank of incompressible fluid: `S(U) = C log U` on `U > 0`.
    pub fn tank(name: impl Into<String>, heat_capacity: f64) -> Self {
        ThermostaticSystem {
            name: name.into(),
            space: ConvexSpace::Orthant { n: 1 },
            entropy: EntropyFn::LogTank { heat_capacity },
        }
    }

    /// Ideal gas with Sackur-Tetrode entropy on `(U, V, N)`, all positive.
    pub fn ideal_gas(name: impl Into<String>, mass: f64, planck: f64) -> Self {
        ThermostaticSystem {
            name: name.into(),
            space: ConvexSpace::Orthant { n: 3 },
            entropy: EntropyFn::SackurTetrode { mass, planck },
        }
    }

    /// Heat bath at temperature `t0 ≠ 0`; the state is net energy moved.
    pub fn heat_bath(name: impl Into<String>, t0: f64) -> Self {
        ThermostaticSystem {
            name: name.into(),
            space: ConvexSpace::RealLine { n: 1 },
            entropy: EntropyFn::HeatBath { temperature: t0 },
        }
    }

    /// Probability distributions on `{0, …, n}` with Shannon entropy.
    pub fn shannon(name: impl Into<String>, n: usize) -> Self {
        ThermostaticSystem {
            name: name.into(),
            space: ConvexSpace::Simplex { n },
            entropy: EntropyFn::Shannon { n },
        }
    }

    /// The one-point system with constant entropy zero: the monoidal unit.
    pub fn trivial() -> Self {
        ThermostaticSystem {
            name: "unit".into(),
            space: ConvexSpace::Singleton,
            entropy: EntropyFn::Constant { value: Finite(0.0) },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &ConvexSpace {
        &self.space
    }

    pub fn entropy(&self) -> &EntropyFn {
        &self.entropy
    }

    /// Entropy of the state `x`, which must belong to the system's space.
    ///
    /// A `-∞` return is a value (an impossible coarse state reached through a
    /// relation); a state outside the space is a domain error instead.
    pub fn evaluate(&self, x: &State) -> Result<ExtReal, Error> {
        if x.dim() != self.space.ambient_dim() {
            return Err(Error::Dimension {
                expected: self.space.ambient_dim(),
                got: x.dim(),
            });
        }
        if !self.space.contains(x)? {
            return Err(Error::Domain(format!(
                "state {x} lies outside the space of {:?}",
                self.name
            )));
        }
        self.entropy.eval_unchecked(x.coords())
    }
}

/// The entropy of two independent systems is the sum of their entropies:
/// builds `(S + T)(x, y) = S(x) + T(y)` on the product space.
pub fn sum_systems(a: &ThermostaticSystem, b: &ThermostaticSystem) -> ThermostaticSystem {
    let left_dim = a.space.ambient_dim();
    let right_dim = b.space.ambient_dim();
    ThermostaticSystem {
        name: format!("{}+{}", a.name, b.name),
        space: ConvexSpace::product(a.space.clone(), b.space.clone()),
        entropy: EntropyFn::Sum {
            left: Box::new(a.entropy.clone()),
            right: Box::new(b.entropy.clone()),
            left_dim,
            right_dim,
        },
    }
}

/// Left-nested sum of a list of systems; the empty sum is the unit system.
pub fn sum_all(systems: &[ThermostaticSystem]) -> ThermostaticSystem {
    match systems {
        [] => ThermostaticSystem::trivial(),
        [only] => only.clone(),
        [first, rest @ ..] => rest
            .iter()
            .fold(first.clone(), |acc, s| sum_systems(&acc, s)),
    }
}

/// `min_{e ∈ E} Shannon(e · p)` for a nonempty measurement set on `Δⁿ`.
pub fn measurement_entropy(maps: &[StochasticMap], p: &State) -> Result<ExtReal, Error> {
    if maps.is_empty() {
        return Err(Error::Domain("measurement entropy over empty set".into()));
    }
    let n = maps[0].input_outcomes();
    for e in maps {
        if e.input_outcomes() != n {
            return Err(Error::Dimension {
                expected: n,
                got: e.input_outcomes(),
            });
        }
    }
    let sys = ThermostaticSystem::new(
        "measurement",
        ConvexSpace::Simplex { n: n - 1 },
        EntropyFn::Measurement {
            maps: maps.to_vec(),
        },
    )?;
    sys.evaluate(p)
}

/// How far the rescaled tank entropy `C log(CT + dU) − C log(CT)` sits from
/// the heat-bath entropy `dU / T`, at a single fluctuation `dU > −CT`.
///
/// Tanks of growing heat capacity converge pointwise to the bath, so this gap
/// shrinks as `C` grows.
pub fn tank_bath_limit_gap(heat_capacity: f64, temperature: f64, du: f64) -> Result<f64, Error> {
    if heat_capacity <= 0.0 || temperature <= 0.0 {
        return Err(Error::Domain(
            "tank-bath gap needs positive heat capacity and temperature".into(),
        ));
    }
    let base = heat_capacity * temperature;
    if du <= -base {
        return Err(Error::Domain(format!(
            "fluctuation {du} empties the tank (needs dU > {})",
            -base
        )));
    }
    Ok((heat_capacity * (du / base).ln_1p() - du / temperature).abs())
}

/// von Neumann entropy `-Tr(ρ log ρ)` of a density matrix given in the real
/// coordinate encoding of [`EntropyFn::VonNeumann`].
pub fn von_neumann(rho_coords: &State) -> Result<ExtReal, Error> {
    let len = rho_coords.dim();
    let d = (len as f64).sqrt().round() as usize;
    if d * d != len {
        return Err(Error::Dimension {
            expected: d * d,
            got: len,
        });
    }
    von_neumann_checked(d, rho_coords.coords())
}

fn von_neumann_checked(d: usize, coords: &[f64]) -> Result<ExtReal, Error> {
    if coords.len() != d * d {
        return Err(Error::Dimension {
            expected: d * d,
            got: coords.len(),
        });
    }
    let trace: f64 = coords[..d].iter().sum();
    if (trace - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "density matrix trace {trace} is not 1"
        )));
    }
    let spectrum = hermitian_eigenvalues(d, coords);
    if spectrum.iter().any(|&l| l < -1e-9) {
        return Err(Error::Domain(format!(
            "density matrix is not positive semidefinite (min eigenvalue {})",
            spectrum.iter().cloned().fold(f64::INFINITY, f64::min)
        )));
    }
    let clamped: Vec<f64> = spectrum.iter().map(|&l| l.max(0.0)).collect();
    Ok(Finite(shannon_entropy(&clamped)))
}

/// Eigenvalues of the Hermitian matrix `A + iB` through the real symmetric
/// embedding `[[A, -B], [B, A]]`, whose spectrum doubles the original one.
fn hermitian_eigenvalues(d: usize, coords: &[f64]) -> Vec<f64> {
    let mut m = vec![vec![0.0; 2 * d]; 2 * d];
    for i in 0..d {
        m[i][i] = coords[i];
        m[d + i][d + i] = coords[i];
    }
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let re = coords[k];
            let im = coords[k + 1];
            k += 2;
            m[i][j] = re;
            m[j][i] = re;
            m[d + i][d + j] = re;
            m[d + j][d + i] = re;
            // -B in the upper right block, B in the lower left.
            m[i][d + j] = -im;
            m[j][d + i] = im;
            m[d + i][j] = im;
            m[d + j][i] = -im;
        }
    }
    let mut eigen = jacobi_eigenvalues(&mut m);
    eigen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Every eigenvalue appears twice in the embedding.
    eigen.into_iter().step_by(2).collect()
}

/// Cyclic Jacobi sweeps until the off-diagonal Frobenius norm falls below
/// 1e-12.
fn jacobi_eigenvalues(m: &mut [Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum::<f64>()
            .sqrt();
        if off < 1e-12 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}
