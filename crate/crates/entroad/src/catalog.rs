//! Executable reconstructions of the worked ensembles, each carrying its own
//! closed-form reference so the generic engine can be cross-checked.
//!
//! Every entry builds an operation plus the systems it acts on; the reference
//! side is computed from the closed form at full double precision at call
//! time, never hard-coded.

use std::collections::BTreeMap;

use crate::convex::{ConstraintSet, ConvexSpace, State};
use crate::operad::{act_solve, Operation};
use crate::optimize::{maximize, MaxResult, SolverConfig, Status};
use crate::relation::{ConvexRelation, RelEq};
use crate::system::{EntropyFn, ThermostaticSystem};
use crate::xreal::{ExtReal, Finite, NegInf, PosInf};
use crate::Error;

/// Tolerance on |engine value − reference value| at every query point.
pub const VALUE_TOL: f64 = 1e-6;
/// Max-norm tolerance on attained argmax against the reference argmax.
pub const ARGMAX_TOL: f64 = 1e-4;

type RefFn = Box<dyn Fn(&State) -> Result<(ExtReal, Option<State>), Error> + Send + Sync>;

enum Engine {
    /// Sum the systems' entropies and maximize subject to the operation.
    Composed {
        operation: Operation,
        systems: Vec<ThermostaticSystem>,
    },
    /// A dedicated solve, for the one ensemble whose defining relation is
    /// not jointly convex.
    Direct(Box<dyn Fn(&State, &SolverConfig) -> Result<MaxResult, Error> + Send + Sync>),
}

/// A named reconstruction: engine route plus closed-form reference.
pub struct CatalogEntry {
    pub name: String,
    engine: Engine,
    reference: RefFn,
    /// Default query points in the entry's target space.
    pub queries: Vec<State>,
}

impl CatalogEntry {
    /// The engine-side answer at one target point.
    pub fn solve(&self, y: &State, cfg: &SolverConfig) -> Result<MaxResult, Error> {
        match &self.engine {
            Engine::Composed { operation, systems } => act_solve(operation, systems, y, cfg),
            Engine::Direct(f) => f(y, cfg),
        }
    }

    /// The closed-form answer at one target point.
    pub fn reference(&self, y: &State) -> Result<(ExtReal, Option<State>), Error> {
        (self.reference)(y)
    }

    pub fn operation(&self) -> Option<&Operation> {
        match &self.engine {
            Engine::Composed { operation, .. } => Some(operation),
            Engine::Direct(_) => None,
        }
    }

    pub fn systems(&self) -> &[ThermostaticSystem] {
        match &self.engine {
            Engine::Composed { systems, .. } => systems,
            Engine::Direct(_) => &[],
        }
    }
}

/// One engine-vs-reference comparison row.
#[derive(Debug, Clone)]
pub struct CatalogRow {
    pub query: State,
    pub reference: ExtReal,
    pub engine: ExtReal,
    pub status: Status,
    /// Absolute value gap; 0 for matching infinite tags, ∞ for a tag
    /// mismatch.
    pub gap: f64,
    /// Max-norm argmax gap when both sides have one.
    pub argmax_gap: Option<f64>,
    pub pass: bool,
}

/// Runs every default query of an entry against its reference.
pub fn run(entry: &CatalogEntry, cfg: &SolverConfig) -> Result<Vec<CatalogRow>, Error> {
    entry
        .queries
        .iter()
        .map(|q| {
            let res = entry.solve(q, cfg)?;
            let (ref_value, ref_argmax) = entry.reference(q)?;
            let gap = match (res.value, ref_value) {
                (Finite(a), Finite(b)) => (a - b).abs(),
                (a, b) if a == b => 0.0,
                _ => f64::INFINITY,
            };
            let argmax_gap = match (&res.argmax, &ref_argmax) {
                (Some(a), Some(b)) => Some(
                    a.coords()
                        .iter()
                        .zip(b.coords())
                        .map(|(x, y)| (x - y).abs())
                        .fold(0.0, f64::max),
                ),
                _ => None,
            };
            let argmax_ok = match (&res.argmax, &ref_argmax) {
                (Some(_), Some(_)) => argmax_gap.unwrap() <= ARGMAX_TOL,
                (None, None) => true,
                _ => false,
            };
            let pass = gap <= VALUE_TOL && argmax_ok;
            Ok(CatalogRow {
                query: q.clone(),
                reference: ref_value,
                engine: res.value,
                status: res.status,
                gap,
                argmax_gap,
                pass,
            })
        })
        .collect()
}

fn orthant(n: usize) -> ConvexSpace {
    ConvexSpace::Orthant { n }
}

fn line() -> ConvexSpace {
    ConvexSpace::RealLine { n: 1 }
}

/// Two closed tanks exchanging energy at fixed total: the composite behaves
/// like one tank of heat capacity `C₁ + C₂`, and the equilibrium split is
/// proportional to the capacities.
pub fn two_tanks(c1: f64, c2: f64) -> Result<CatalogEntry, Error> {
    if c1 <= 0.0 || c2 <= 0.0 {
        return Err(Error::Domain(
            "tank heat capacities must be positive".into(),
        ));
    }
    let inputs = vec![orthant(1), orthant(1)];
    let rel = ConvexRelation::affine(
        ConvexSpace::product_all(inputs.iter().cloned()),
        orthant(1),
        vec![RelEq {
            a: vec![1.0, 1.0],
            b: vec![-1.0],
            c: 0.0,
        }],
        vec![],
    )?;
    let operation = Operation::new(inputs, orthant(1), rel)?;
    let systems = vec![
        ThermostaticSystem::tank("tank1", c1),
        ThermostaticSystem::tank("tank2", c2),
    ];
    let total = c1 + c2;
    let reference: RefFn = Box::new(move |y: &State| {
        let u = y.coords()[0];
        if u <= 0.0 {
            return Ok((NegInf, None));
        }
        let constant = c1 * (c1 / total).ln() + c2 * (c2 / total).ln();
        let value = total * u.ln() + constant;
        let argmax = State::new(vec![c1 / total * u, c2 / total * u]);
        Ok((ExtReal::new(value)?, Some(argmax)))
    });
    Ok(CatalogEntry {
        name: "two_tanks".into(),
        engine: Engine::Composed { operation, systems },
        reference,
        queries: (1..=10).map(|u| State::new(vec![u as f64])).collect(),
    })
}

/// Two ideal gases exchanging energy and volume at fixed totals, each
/// keeping its particles: temperatures and pressures equalize, which for
/// Sackur-Tetrode entropies splits `U` and `V` proportionally to particle
/// number.
pub fn gas_equalization() -> Result<CatalogEntry, Error> {
    let mass = 1.0;
    let planck = 1.0;
    let inputs = vec![orthant(3), orthant(3)];
    // Source coordinates (U₁, V₁, N₁, U₂, V₂, N₂), target (U, V, N₁ᵉ, N₂ᵉ).
    let rel = ConvexRelation::affine(
        ConvexSpace::product_all(inputs.iter().cloned()),
        orthant(4),
        vec![
            RelEq {
                a: vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                b: vec![-1.0, 0.0, 0.0, 0.0],
                c: 0.0,
            },
            RelEq {
                a: vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
                b: vec![0.0, -1.0, 0.0, 0.0],
                c: 0.0,
            },
            RelEq {
                a: vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
                b: vec![0.0, 0.0, -1.0, 0.0],
                c: 0.0,
            },
            RelEq {
                a: vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
                b: vec![0.0, 0.0, 0.0, -1.0],
                c: 0.0,
            },
        ],
        vec![],
    )?;
    let operation = Operation::new(inputs, orthant(4), rel)?;
    let systems = vec![
        ThermostaticSystem::ideal_gas("gas1", mass, planck),
        ThermostaticSystem::ideal_gas("gas2", mass, planck),
    ];
    let gas = EntropyFn::SackurTetrode { mass, planck };
    let reference: RefFn = Box::new(move |y: &State| {
        let [u, v, n1, n2] = y.coords() else {
            return Err(Error::Dimension {
                expected: 4,
                got: y.dim(),
            });
        };
        let share = n1 / (n1 + n2);
        let split = [
            u * share,
            v * share,
            *n1,
            u * (1.0 - share),
            v * (1.0 - share),
            *n2,
        ];
        let value = gas.eval_unchecked(&split[..3])? + gas.eval_unchecked(&split[3..])?;
        Ok((value, Some(State::new(split.to_vec()))))
    });
    Ok(CatalogEntry {
        name: "gas_equalization".into(),
        engine: Engine::Composed { operation, systems },
        reference,
        queries: vec![State::new(vec![2.0, 2.0, 1.0, 1.0])],
    })
}

/// An ideal gas thermally coupled to a heat bath at temperature `t`: the
/// composite entropy on `(V, N)` is the Legendre transform of the gas
/// entropy in `U` at `β = 1/t`.
pub fn bath_coupling(t: f64) -> Result<CatalogEntry, Error> {
    if t == 0.0 {
        return Err(Error::Domain("bath temperature must be nonzero".into()));
    }
    let mass = 1.0;
    let planck = 1.0;
    let inputs = vec![orthant(3), line()];
    // Source (U_g, V_g, N_g, U_b), target (V, N).
    let rel = ConvexRelation::affine(
        ConvexSpace::product_all(inputs.iter().cloned()),
        orthant(2),
        vec![
            RelEq {
                a: vec![1.0, 0.0, 0.0, 1.0],
                b: vec![0.0, 0.0],
                c: 0.0,
            },
            RelEq {
                a: vec![0.0, 1.0, 0.0, 0.0],
                b: vec![-1.0, 0.0],
                c: 0.0,
            },
            RelEq {
                a: vec![0.0, 0.0, 1.0, 0.0],
                b: vec![0.0, -1.0],
                c: 0.0,
            },
        ],
        vec![],
    )?;
    let operation = Operation::new(inputs, orthant(2), rel)?;
    let systems = vec![
        ThermostaticSystem::ideal_gas("gas", mass, planck),
        ThermostaticSystem::heat_bath("bath", t),
    ];
    let reference: RefFn = Box::new(move |y: &State| {
        let [v, n] = y.coords() else {
            return Err(Error::Dimension {
                expected: 2,
                got: y.dim(),
            });
        };
        if t < 0.0 {
            // Negative temperature rewards pumping energy out of the bath
            // without limit.
            return Ok((PosInf, None));
        }
        // Stationarity of S_gas(U) − U/t in U: U* = (3/2) N t, giving
        // S(V, N) = N [ log( (V/N) (2π m t / h²)^{3/2} ) + 1 ].
        let u_star = 1.5 * n * t;
        let scale = 2.0 * std::f64::consts::PI * mass * t / (planck * planck);
        let value = n * ((v / n * scale.powf(1.5)).ln() + 1.0);
        let argmax = State::new(vec![u_star, *v, *n, -u_star]);
        Ok((ExtReal::new(value)?, Some(argmax)))
    });
    let mut queries = Vec::new();
    for v in [1.0, 2.0, 3.0] {
        for n in [0.5, 1.0, 1.5] {
            queries.push(State::new(vec![v, n]));
        }
    }
    Ok(CatalogEntry {
        name: "bath_coupling".into(),
        engine: Engine::Composed { operation, systems },
        reference,
        queries,
    })
}

/// Boltzmann weights for the Hamiltonian `h` at inverse temperature `beta`,
/// with the log partition function, computed by shifted exponentials.
pub fn boltzmann(h: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let shift = h
        .iter()
        .map(|hi| -beta * hi)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = h.iter().map(|hi| (-beta * hi - shift).exp()).collect();
    let z: f64 = weights.iter().sum();
    let p = weights.iter().map(|w| w / z).collect();
    (p, shift + z.ln())
}

/// A statistical system on `{0, …, n}` coupled to a heat bath: the expected
/// energy balances the energy drawn from the bath, and the equilibrium
/// distribution is the Boltzmann distribution with value `log Z`.
///
/// `t` is the bath temperature; pass `f64::INFINITY` for `β = 0`.
pub fn canonical(h: &[f64], t: f64) -> Result<CatalogEntry, Error> {
    if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("canonical needs finite energy levels".into()));
    }
    if t == 0.0 {
        return Err(Error::Domain("bath temperature must be nonzero".into()));
    }
    let n = h.len() - 1;
    let beta = 1.0 / t;
    let inputs = vec![ConvexSpace::Simplex { n }, line()];
    let mut a = h.to_vec();
    a.push(1.0);
    let rel = ConvexRelation::affine(
        ConvexSpace::product_all(inputs.iter().cloned()),
        ConvexSpace::Singleton,
        vec![RelEq {
            a,
            b: vec![],
            c: 0.0,
        }],
        vec![],
    )?;
    let operation = Operation::new(inputs, ConvexSpace::Singleton, rel)?;
    let systems = vec![
        ThermostaticSystem::shannon("levels", n),
        ThermostaticSystem::heat_bath("bath", t),
    ];
    let h_ref = h.to_vec();
    let reference: RefFn = Box::new(move |_y: &State| {
        let (p, log_z) = boltzmann(&h_ref, beta);
        let energy: f64 = h_ref.iter().zip(&p).map(|(hi, pi)| hi * pi).sum();
        let mut argmax = p;
        argmax.push(-energy);
        Ok((ExtReal::new(log_z)?, Some(State::new(argmax))))
    });
    Ok(CatalogEntry {
        name: "canonical".into(),
        engine: Engine::Composed { operation, systems },
        reference,
        queries: vec![State::new(vec![])],
    })
}

/// Coupling to a heat bath and a particle bath: the grand canonical
/// ensemble, Boltzmann in the tilted Hamiltonian `H + μM`.
///
/// At `mu = 0` the particle bath contributes constant zero entropy and its
/// constraint only pins the bath variable, so the build reduces structurally
/// to [`canonical`] and reproduces it bit for bit.
pub fn grand_canonical(h: &[f64], m: &[f64], t: f64, mu: f64) -> Result<CatalogEntry, Error> {
    if h.len() != m.len() {
        return Err(Error::Dimension {
            expected: h.len(),
            got: m.len(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "grand canonical needs finite particle numbers".into(),
        ));
    }
    if mu == 0.0 {
        let mut entry = canonical(h, t)?;
        entry.name = "grand_canonical".into();
        return Ok(entry);
    }
    if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "grand canonical needs finite energy levels".into(),
        ));
    }
    if t == 0.0 {
        return Err(Error::Domain("bath temperature must be nonzero".into()));
    }
    let n = h.len() - 1;
    let beta = 1.0 / t;
    let inputs = vec![ConvexSpace::Simplex { n }, line(), line()];
    let mut energy_row = h.to_vec();
    energy_row.push(1.0);
    energy_row.push(0.0);
    let mut particle_row = m.to_vec();
    particle_row.push(0.0);
    particle_row.push(1.0);
    let rel = ConvexRelation::affine(
        ConvexSpace::product_all(inputs.iter().cloned()),
        ConvexSpace::Singleton,
        vec![
            RelEq {
                a: energy_row,
                b: vec![],
                c: 0.0,
            },
            RelEq {
                a: particle_row,
                b: vec![],
                c: 0.0,
            },
        ],
        vec![],
    )?;
    let operation = Operation::new(inputs, ConvexSpace::Singleton, rel)?;
    let particle_bath = ThermostaticSystem::new(
        "particle_bath",
        line(),
        EntropyFn::Affine {
            coeffs: vec![beta * mu],
            offset: 0.0,
        },
    )?;
    let systems = vec![
        ThermostaticSystem::shannon("levels", n),
        ThermostaticSystem::heat_bath("bath", t),
        particle_bath,
    ];
    let (h_ref, m_ref) = (h.to_vec(), m.to_vec());
    let reference: RefFn = Box::new(move |_y: &State| {
        let tilted: Vec<f64> = h_ref
            .iter()
            .zip(&m_ref)
            .map(|(hi, mi)| hi + mu * mi)
            .collect();
        let (p, log_z) = boltzmann(&tilted, beta);
        let energy: f64 = h_ref.iter().zip(&p).map(|(hi, pi)| hi * pi).sum();
        let particles: f64 = m_ref.iter().zip(&p).map(|(mi, pi)| mi * pi).sum();
        let mut argmax = p;
        argmax.push(-energy);
        argmax.push(-particles);
        Ok((ExtReal::new(log_z)?, Some(State::new(argmax))))
    });
    Ok(CatalogEntry {
        name: "grand_canonical".into(),
        engine: Engine::Composed { operation, systems },
        reference,
        queries: vec![State::new(vec![])],
    })
}

/// Entropy at exact energy `u`: `log` of the number of levels equal to `u`,
/// `-∞` when there are none, maximized by the uniform distribution on the
/// level set. Level matching is exact; see [`microcanonical_with_tol`] for a
/// tolerance knob.
pub fn microcanonical(h: &[f64], u: f64) -> (ExtReal, Option<State>) {
    microcanonical_with_tol(h, u, 0.0)
}

/// As [`microcanonical`] with `|hᵢ − u| ≤ tol_level` counting as a match.
pub fn microcanonical_with_tol(h: &[f64], u: f64, tol_level: f64) -> (ExtReal, Option<State>) {
    let level_set: Vec<usize> = h
        .iter()
        .enumerate()
        .filter(|(_, &hi)| {
            if tol_level == 0.0 {
                hi == u
            } else {
                (hi - u).abs() <= tol_level
            }
        })
        .map(|(i, _)| i)
        .collect();
    if level_set.is_empty() {
        return (NegInf, None);
    }
    let count = level_set.len();
    let mut p = vec![0.0; h.len()];
    for i in level_set {
        p[i] = 1.0 / count as f64;
    }
    (Finite((count as f64).ln()), Some(State::new(p)))
}

/// The per-`u` convex sub-simplex `{p ∈ Δⁿ : pᵢ = 0 whenever hᵢ ≠ u}`.
///
/// The microcanonical support condition is not jointly convex across
/// distinct energies, so it is not a [`ConvexRelation`]; each energy's fiber
/// is still a convex set and this is it.
pub fn microcanonical_feasible_set(h: &[f64], u: f64) -> ConstraintSet {
    let n = h.len() - 1;
    let mut cs = ConvexSpace::Simplex { n }.constraint_set();
    for (i, &hi) in h.iter().enumerate() {
        if hi != u {
            let mut pin = vec![0.0; h.len()];
            pin[i] = 1.0;
            cs.push_eq(pin, 0.0);
        }
    }
    cs
}

/// A microcanonical entry: the engine route maximizes Shannon entropy over
/// the per-`u` sub-simplex, the reference is the log-count closed form.
pub fn microcanonical_entry(h: &[f64]) -> Result<CatalogEntry, Error> {
    if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(
            "microcanonical needs finite energy levels".into(),
        ));
    }
    let n = h.len() - 1;
    let h_engine = h.to_vec();
    let engine = Engine::Direct(Box::new(move |y: &State, cfg: &SolverConfig| {
        let u = y.coords()[0];
        let cs = microcanonical_feasible_set(&h_engine, u);
        maximize(&EntropyFn::Shannon { n }, &cs, cfg)
    }));
    let h_ref = h.to_vec();
    let reference: RefFn = Box::new(move |y: &State| {
        let (value, argmax) = microcanonical(&h_ref, y.coords()[0]);
        Ok((value, argmax))
    });
    let mut levels: Vec<f64> = h.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    levels.push(levels.last().unwrap() + 1.0); // one guaranteed miss
    Ok(CatalogEntry {
        name: "microcanonical".into(),
        engine,
        reference,
        queries: levels.into_iter().map(|u| State::new(vec![u])).collect(),
    })
}

/// Builds a catalog entry by name with `--param`-style overrides.
///
/// Vector parameters are passed indexed: `H0=…, H1=…, M0=…`.
pub fn build(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry, Error> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let vector = |prefix: &str, default: &[f64]| -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0.. {
            match params.get(&format!("{prefix}{i}")) {
                Some(&v) => out.push(v),
                None => break,
            }
        }
        if out.is_empty() {
            default.to_vec()
        } else {
            out
        }
    };
    let temperature = |params: &BTreeMap<String, f64>, default_t: f64| -> f64 {
        match params.get("beta") {
            Some(&b) if b == 0.0 => f64::INFINITY,
            Some(&b) => 1.0 / b,
            None => get("T", default_t),
        }
    };
    match name {
        "two_tanks" => two_tanks(get("C1", 1.0), get("C2", 2.0)),
        "gas_equalization" => gas_equalization(),
        "bath_coupling" => bath_coupling(temperature(params, 1.0)),
        "canonical" => canonical(&vector("H", &[0.0, 1.0, 2.0]), temperature(params, 1.0)),
        "grand_canonical" => grand_canonical(
            &vector("H", &[0.0, 1.0]),
            &vector("M", &[0.0, 1.0]),
            temperature(params, 1.0),
            get("mu", 1.0),
        ),
        "microcanonical" => {
            let mut entry = microcanonical_entry(&vector("H", &[1.0, 2.0, 2.0, 3.0]))?;
            if let Some(&u) = params.get("U") {
                entry.queries = vec![State::new(vec![u])];
            }
            Ok(entry)
        }
        other => Err(Error::Document(format!("unknown catalog entry {other:?}"))),
    }
}

/// The names [`build`] understands.
pub fn names() -> &'static [&'static str] {
    &[
        "two_tanks",
        "gas_equalization",
        "bath_coupling",
        "canonical",
        "grand_canonical",
        "microcanonical",
    ]
}
