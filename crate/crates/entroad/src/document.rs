//! The batch document format: named spaces, systems and relations, one
//! composition tree, solver settings and queries, all in a single JSON
//! document.
//!
//! References are names declared earlier in the same document. Everything a
//! run needs is resolved and type-checked before the first solve, so a bad
//! reference or a mismatched composition fails with the declaration's name
//! rather than mid-sweep.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexSpace, LinearEq, LinearIneq, State};
use crate::operad::{act_with, Operation};
use crate::optimize::{solve_at, SolverConfig, Status};
use crate::relation::{AffineMap, ConvexRelation, RelEq, RelIneq};
use crate::system::{EntropyFn, StochasticMap, ThermostaticSystem};
use crate::xreal::ExtReal;
use crate::Error;

// ---------------------------------------------------------------------------
// Raw document model (serde)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spaces: Vec<SpaceDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub systems: Vec<SystemDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<RelationDecl>,
    pub compose: ComposeNode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<Query>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceDecl {
    pub name: String,
    #[serde(flatten)]
    pub spec: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Simplex {
        n: usize,
    },
    Orthant {
        n: usize,
    },
    /// All of `ℝ^n`; needed for heat baths.
    Real {
        n: usize,
    },
    Polyhedron {
        dim: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        eq: Vec<EqRow>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        ineq: Vec<IneqRow>,
    },
    Product {
        factors: Vec<SpaceRef>,
    },
    Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EqRow {
    pub a: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IneqRow {
    pub a: Vec<f64>,
    pub c: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
}

/// A space either named earlier or written inline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceRef {
    Name(String),
    Inline(Box<SpaceSpec>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemDecl {
    pub name: String,
    pub space: SpaceRef,
    pub entropy: EntropySpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropySpec {
    LogTank {
        #[serde(rename = "C")]
        c: f64,
    },
    SackurTetrode {
        #[serde(default = "one")]
        mass: f64,
        #[serde(default = "one")]
        planck: f64,
    },
    HeatBath {
        #[serde(rename = "T0")]
        t0: f64,
    },
    Shannon {
        n: usize,
    },
    VonNeumann {
        d: usize,
    },
    Affine {
        a: Vec<f64>,
        b: f64,
    },
    /// Stochastic maps column-major: each map is a list of columns.
    Measurement {
        maps: Vec<Vec<Vec<f64>>>,
    },
    Constant {
        value: ExtReal,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationDecl {
    pub name: String,
    /// `affine` (default), `full`, `identity` or `graph`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SpaceRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<SpaceRef>,
    /// For `identity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eq: Vec<RelEqRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ineq: Vec<RelIneqRow>,
    /// For `graph`: `y = matrix · x + offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelEqRow {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelIneqRow {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub strict: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComposeNode {
    /// A system declared earlier.
    Ref(String),
    Node {
        compose: Box<ComposeBody>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComposeBody {
    pub op: String,
    pub children: Vec<ComposeNode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Query {
    pub point: Vec<f64>,
}

impl Document {
    pub fn from_json(text: &str) -> Result<Document, Error> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    /// The document re-emitted with defaults made explicit; reloading it
    /// gives the same evaluation results.
    pub fn normalized_json(&self) -> String {
        let mut doc = self.clone();
        for rel in &mut doc.relations {
            if rel.kind.is_none() {
                rel.kind = Some("affine".into());
            }
        }
        serde_json::to_string_pretty(&doc).expect("document serialization")
    }
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

/// A document with every reference resolved and the composition tree already
/// type-checked and built.
pub struct ResolvedDocument {
    pub solver: SolverConfig,
    pub composed: ThermostaticSystem,
    /// Column names for the target coordinates.
    pub target_labels: Vec<String>,
    /// Column names for the argmax coordinates (the flattened input states).
    pub arg_labels: Vec<String>,
    pub queries: Vec<State>,
}

struct Scope {
    spaces: BTreeMap<String, (ConvexSpace, Option<Vec<String>>)>,
    systems: BTreeMap<String, ThermostaticSystem>,
    relations: BTreeMap<String, ConvexRelation>,
}

impl Scope {
    fn space(&self, r: &SpaceRef, at: &str) -> Result<ConvexSpace, Error> {
        match r {
            SpaceRef::Name(name) => self
                .spaces
                .get(name)
                .map(|(s, _)| s.clone())
                .ok_or_else(|| Error::Document(format!("{at}: unknown space {name:?}"))),
            SpaceRef::Inline(spec) => build_space(spec, self, at),
        }
    }

    fn labels(&self, r: &SpaceRef) -> Option<Vec<String>> {
        match r {
            SpaceRef::Name(name) => self.spaces.get(name).and_then(|(_, l)| l.clone()),
            SpaceRef::Inline(_) => None,
        }
    }
}

fn build_space(spec: &SpaceSpec, scope: &Scope, at: &str) -> Result<ConvexSpace, Error> {
    Ok(match spec {
        SpaceSpec::Simplex { n } => ConvexSpace::Simplex { n: *n },
        SpaceSpec::Orthant { n } => ConvexSpace::Orthant { n: *n },
        SpaceSpec::Real { n } => ConvexSpace::RealLine { n: *n },
        SpaceSpec::Point => ConvexSpace::Singleton,
        SpaceSpec::Polyhedron { dim, eq, ineq } => ConvexSpace::polyhedron(
            *dim,
            eq.iter()
                .map(|r| LinearEq {
                    coeffs: r.a.clone(),
                    rhs: r.c,
                })
                .collect(),
            ineq.iter()
                .map(|r| LinearIneq {
                    coeffs: r.a.clone(),
                    rhs: r.c,
                    strict: r.strict,
                })
                .collect(),
        )?,
        SpaceSpec::Product { factors } => {
            let mut built = Vec::new();
            for f in factors {
                built.push(scope.space(f, at)?);
            }
            ConvexSpace::product_all(built)
        }
    })
}

fn build_entropy(spec: &EntropySpec) -> Result<EntropyFn, Error> {
    Ok(match spec {
        EntropySpec::LogTank { c } => EntropyFn::LogTank { heat_capacity: *c },
        EntropySpec::SackurTetrode { mass, planck } => EntropyFn::SackurTetrode {
            mass: *mass,
            planck: *planck,
        },
        EntropySpec::HeatBath { t0 } => EntropyFn::HeatBath { temperature: *t0 },
        EntropySpec::Shannon { n } => EntropyFn::Shannon { n: *n },
        EntropySpec::VonNeumann { d } => EntropyFn::VonNeumann { d: *d },
        EntropySpec::Affine { a, b } => EntropyFn::Affine {
            coeffs: a.clone(),
            offset: *b,
        },
        EntropySpec::Measurement { maps } => {
            let mut built = Vec::new();
            for cols in maps {
                // Column-major input: transpose into rows.
                let n_cols = cols.len();
                let n_rows = cols.first().map_or(0, Vec::len);
                let mut rows = vec![vec![0.0; n_cols]; n_rows];
                for (j, col) in cols.iter().enumerate() {
                    if col.len() != n_rows {
                        return Err(Error::Document("ragged stochastic map".into()));
                    }
                    for (i, &v) in col.iter().enumerate() {
                        rows[i][j] = v;
                    }
                }
                built.push(StochasticMap::new(rows)?);
            }
            EntropyFn::Measurement { maps: built }
        }
        EntropySpec::Constant { value } => EntropyFn::Constant { value: *value },
    })
}

fn build_relation(decl: &RelationDecl, scope: &Scope) -> Result<ConvexRelation, Error> {
    let at = format!("relation {:?}", decl.name);
    let kind = decl.kind.as_deref().unwrap_or("affine");
    let need = |opt: &Option<SpaceRef>, what: &str| -> Result<ConvexSpace, Error> {
        let r = opt
            .as_ref()
            .ok_or_else(|| Error::Document(format!("{at}: missing {what}")))?;
        scope.space(r, &at)
    };
    match kind {
        "full" => Ok(ConvexRelation::full(
            need(&decl.source, "source")?,
            need(&decl.target, "target")?,
        )),
        "identity" => {
            let r = decl
                .space
                .as_ref()
                .or(decl.source.as_ref())
                .ok_or_else(|| Error::Document(format!("{at}: missing space")))?;
            Ok(ConvexRelation::identity(scope.space(r, &at)?))
        }
        "graph" => {
            let matrix = decl
                .matrix
                .clone()
                .ok_or_else(|| Error::Document(format!("{at}: graph needs a matrix")))?;
            let offset = decl
                .offset
                .clone()
                .unwrap_or_else(|| vec![0.0; matrix.len()]);
            ConvexRelation::graph(
                need(&decl.source, "source")?,
                need(&decl.target, "target")?,
                AffineMap::new(matrix, offset)?,
            )
        }
        "affine" => ConvexRelation::affine(
            need(&decl.source, "source")?,
            need(&decl.target, "target")?,
            decl.eq
                .iter()
                .map(|r| RelEq {
                    a: r.a.clone(),
                    b: r.b.clone(),
                    c: r.c,
                })
                .collect(),
            decl.ineq
                .iter()
                .map(|r| RelIneq {
                    a: r.a.clone(),
                    b: r.b.clone(),
                    c: r.c,
                    strict: r.strict,
                })
                .collect(),
        ),
        other => Err(Error::Document(format!("{at}: unknown kind {other:?}"))),
    }
}

/// Resolves a compose node into the acted system plus flattened input
/// labels.
fn build_compose(
    node: &ComposeNode,
    scope: &Scope,
    doc: &Document,
    solver: &SolverConfig,
) -> Result<(ThermostaticSystem, Vec<String>, Vec<String>), Error> {
    match node {
        ComposeNode::Ref(name) => {
            let sys = scope
                .systems
                .get(name)
                .ok_or_else(|| Error::Document(format!("compose: unknown system {name:?}")))?;
            let labels = doc
                .systems
                .iter()
                .find(|d| &d.name == name)
                .and_then(|d| scope.labels(&d.space))
                .unwrap_or_else(|| default_labels(sys.space().ambient_dim(), "x"));
            Ok((sys.clone(), labels.clone(), labels))
        }
        ComposeNode::Node { compose } => {
            let rel = scope.relations.get(&compose.op).ok_or_else(|| {
                Error::Document(format!("compose: unknown relation {:?}", compose.op))
            })?;
            let mut children = Vec::new();
            let mut arg_labels = Vec::new();
            for (i, child) in compose.children.iter().enumerate() {
                let (sys, _out_labels, child_args) = build_compose(child, scope, doc, solver)?;
                // The argmax of an inner compose is not part of this level's
                // joint state; what enters here are the child's own target
                // coordinates.
                let child_target = match child {
                    ComposeNode::Ref(_) => child_args,
                    ComposeNode::Node { .. } => {
                        default_labels(sys.space().ambient_dim(), &format!("c{i}_"))
                    }
                };
                arg_labels.extend(child_target);
                children.push(sys);
            }
            let inputs: Vec<ConvexSpace> = children.iter().map(|s| s.space().clone()).collect();
            let op = Operation::new(inputs, rel.target().clone(), rel.clone())
                .map_err(|e| Error::Document(format!("compose node {:?}: {e}", compose.op)))?;
            let composed = act_with(&op, &children, solver.clone())
                .map_err(|e| Error::Document(format!("compose node {:?}: {e}", compose.op)))?;
            let target_labels = doc
                .relations
                .iter()
                .find(|d| d.name == compose.op)
                .and_then(|d| d.target.as_ref())
                .and_then(|r| scope.labels(r))
                .unwrap_or_else(|| default_labels(composed.space().ambient_dim(), "y"));
            Ok((composed, target_labels, arg_labels))
        }
    }
}

fn default_labels(n: usize, prefix: &str) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Resolves every declaration, builds the composition, and type-checks the
/// queries.
pub fn resolve(doc: &Document) -> Result<ResolvedDocument, Error> {
    let mut scope = Scope {
        spaces: BTreeMap::new(),
        systems: BTreeMap::new(),
        relations: BTreeMap::new(),
    };
    for decl in &doc.spaces {
        let at = format!("space {:?}", decl.name);
        let space = build_space(&decl.spec, &scope, &at)?;
        if let Some(labels) = &decl.labels {
            if labels.len() != space.ambient_dim() {
                return Err(Error::Document(format!(
                    "{at}: {} labels for {} coordinates",
                    labels.len(),
                    space.ambient_dim()
                )));
            }
        }
        scope
            .spaces
            .insert(decl.name.clone(), (space, decl.labels.clone()));
    }
    for decl in &doc.systems {
        let at = format!("system {:?}", decl.name);
        let space = scope.space(&decl.space, &at)?;
        let entropy = build_entropy(&decl.entropy)?;
        let sys = ThermostaticSystem::new(decl.name.clone(), space, entropy)
            .map_err(|e| Error::Document(format!("{at}: {e}")))?;
        scope.systems.insert(decl.name.clone(), sys);
    }
    for decl in &doc.relations {
        let rel = build_relation(decl, &scope).map_err(|e| match e {
            Error::Document(_) => e,
            other => Error::Document(format!("relation {:?}: {other}", decl.name)),
        })?;
        scope.relations.insert(decl.name.clone(), rel);
    }
    let (composed, target_labels, arg_labels) =
        build_compose(&doc.compose, &scope, doc, &doc.solver)?;
    let target_dim = composed.space().ambient_dim();
    let queries = doc
        .queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            if q.point.len() != target_dim {
                return Err(Error::Document(format!(
                    "query {i}: {} coordinates for a {target_dim}-dimensional target",
                    q.point.len()
                )));
            }
            Ok(State::new(q.point.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ResolvedDocument {
        solver: doc.solver.clone(),
        composed,
        target_labels,
        arg_labels,
        queries,
    })
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

/// One evaluated target point.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub target: State,
    pub value: ExtReal,
    pub status: String,
    pub argmax: Option<State>,
}

fn solve_row(rdoc: &ResolvedDocument, point: &State) -> Result<EvalRow, Error> {
    if !rdoc.composed.space().contains(point)? {
        // An impossible coarse state, reported as a row rather than an
        // error so sweeps over mixed regions keep going.
        return Ok(EvalRow {
            target: point.clone(),
            value: crate::xreal::NegInf,
            status: Status::Infeasible.to_string(),
            argmax: None,
        });
    }
    let res = solve_at(&rdoc.composed, point, &rdoc.solver)?;
    Ok(EvalRow {
        target: point.clone(),
        value: res.value,
        status: res.status.to_string(),
        argmax: res.argmax,
    })
}

/// Evaluates every point query. Solver failures abort with the error.
pub fn run_eval(rdoc: &ResolvedDocument) -> Result<Vec<EvalRow>, Error> {
    rdoc.queries.iter().map(|q| solve_row(rdoc, q)).collect()
}

/// One sweep axis `name=lo:hi:steps` over a target coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl AxisSpec {
    /// Parses `name=lo:hi:steps`.
    pub fn parse(text: &str) -> Result<AxisSpec, Error> {
        let (name, rest) = text
            .split_once('=')
            .ok_or_else(|| Error::Document(format!("axis {text:?}: expected name=lo:hi:steps")))?;
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(Error::Document(format!(
                "axis {text:?}: expected name=lo:hi:steps"
            )));
        };
        let bad = |what: &str| Error::Document(format!("axis {text:?}: unreadable {what}"));
        Ok(AxisSpec {
            name: name.to_string(),
            lo: lo.parse().map_err(|_| bad("lo"))?,
            hi: hi.parse().map_err(|_| bad("hi"))?,
            steps: steps.parse().map_err(|_| bad("steps"))?,
        })
    }

    fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n)
                .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Sweeps a grid in row-major order over the declared axes. Coordinates not
/// covered by an axis come from the document's first point query. Row-level
/// solver failures land in the status column and the sweep continues.
pub fn run_sweep(rdoc: &ResolvedDocument, axes: &[AxisSpec]) -> Result<Vec<EvalRow>, Error> {
    let dim = rdoc.composed.space().ambient_dim();
    let mut axis_coord = Vec::new();
    for axis in axes {
        let idx = rdoc
            .target_labels
            .iter()
            .position(|l| l == &axis.name)
            .or_else(|| axis.name.parse::<usize>().ok().filter(|&i| i < dim))
            .ok_or_else(|| {
                Error::Document(format!(
                    "axis {:?} names no target coordinate (have {:?})",
                    axis.name, rdoc.target_labels
                ))
            })?;
        axis_coord.push(idx);
    }
    let base = match rdoc.queries.first() {
        Some(q) => q.coords().to_vec(),
        None if axes.len() == dim => vec![0.0; dim],
        None => {
            return Err(Error::Document(
                "sweep needs a base point query for coordinates not swept".into(),
            ))
        }
    };

    let grids: Vec<Vec<f64>> = axes.iter().map(AxisSpec::values).collect();
    let total: usize = grids.iter().map(Vec::len).product();
    if grids.iter().any(Vec::is_empty) {
        return Ok(Vec::new());
    }
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    'outer: loop {
        let mut p = base.clone();
        for (j, &coord) in axis_coord.iter().enumerate() {
            p[coord] = grids[j][idx[j]];
        }
        points.push(State::new(p));
        let mut j = axes.len();
        loop {
            if j == 0 {
                break 'outer;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < grids[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }

    let rows = parallel_rows(rdoc, &points);
    Ok(rows)
}

/// Worker cap from `ENTROAD_THREADS`; 0 or 1 means sequential.
fn thread_cap() -> usize {
    std::env::var("ENTROAD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
}

/// Evaluates rows (possibly in parallel) and returns them in input order;
/// per-row failures become rows with the error in the status column.
fn parallel_rows(rdoc: &ResolvedDocument, points: &[State]) -> Vec<EvalRow> {
    let row_of = |point: &State| match solve_row(rdoc, point) {
        Ok(row) => row,
        Err(e) => EvalRow {
            target: point.clone(),
            value: crate::xreal::NegInf,
            status: format!("error: {e}"),
            argmax: None,
        },
    };
    let workers = thread_cap().max(1).min(points.len().max(1));
    if workers <= 1 {
        return points.iter().map(row_of).collect();
    }
    let mut rows: Vec<Option<EvalRow>> = vec![None; points.len()];
    let chunk = points.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (points_chunk, rows_chunk) in points.chunks(chunk).zip(rows.chunks_mut(chunk)) {
            scope.spawn(move || {
                for (p, slot) in points_chunk.iter().zip(rows_chunk.iter_mut()) {
                    *slot = Some(row_of(p));
                }
            });
        }
    });
    rows.into_iter().map(Option::unwrap).collect()
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn header_and_cells(rdoc: &ResolvedDocument, rows: &[EvalRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let with_argmax = rows.iter().any(|r| r.argmax.is_some());
    let mut header = rdoc.target_labels.clone();
    header.push("entropy".into());
    header.push("status".into());
    if with_argmax {
        header.extend(rdoc.arg_labels.iter().cloned());
    }
    let cells = rows
        .iter()
        .map(|row| {
            let mut line: Vec<String> = row.target.coords().iter().map(f64::to_string).collect();
            line.push(row.value.to_string());
            line.push(row.status.clone());
            if with_argmax {
                match &row.argmax {
                    Some(x) => line.extend(x.coords().iter().map(f64::to_string)),
                    None => {
                        line.extend(std::iter::repeat_n(String::new(), rdoc.arg_labels.len()))
                    }
                }
            }
            line
        })
        .collect();
    (header, cells)
}

/// CSV with a header row; infinities spelled `+inf` / `-inf`.
pub fn render_csv(rdoc: &ResolvedDocument, rows: &[EvalRow]) -> String {
    let (header, cells) = header_and_cells(rdoc, rows);
    let mut out = header.join(",");
    out.push('\n');
    for line in cells {
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// A padded plain-text table.
pub fn render_table(rdoc: &ResolvedDocument, rows: &[EvalRow]) -> String {
    let (header, cells) = header_and_cells(rdoc, rows);
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for line in &cells {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.len());
        }
    }
    let fmt_line = |line: &[String]| {
        line.iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = fmt_line(&header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for line in &cells {
        out.push_str(&fmt_line(line));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_tank_doc() -> &'static str {
        r#"{
            "solver": {"seed": 7},
            "spaces": [
                {"name": "half", "kind": "orthant", "n": 1, "labels": ["U"]},
                {"name": "pair", "kind": "product", "factors": ["half", "half"]}
            ],
            "systems": [
                {"name": "tank1", "space": "half", "entropy": {"kind": "log_tank", "C": 1.0}},
                {"name": "tank2", "space": "half", "entropy": {"kind": "log_tank", "C": 2.0}}
            ],
            "relations": [
                {"name": "merge", "source": "pair", "target": "half",
                 "eq": [{"a": [1.0, 1.0], "b": [-1.0], "c": 0.0}]}
            ],
            "compose": {"compose": {"op": "merge", "children": ["tank1", "tank2"]}},
            "queries": [{"point": [3.0]}, {"point": [-1.0]}]
        }"#
    }

    #[test]
    fn resolve_and_eval_two_tanks() {
        let doc = Document::from_json(two_tank_doc()).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let rows = run_eval(&rdoc).unwrap();
        assert_eq!(rows.len(), 2);
        let expected = 3.0 * 3.0f64.ln() + (1.0f64 / 3.0).ln() + 2.0 * (2.0f64 / 3.0).ln();
        assert!((rows[0].value.as_finite().unwrap() - expected).abs() < 1e-6);
        assert_eq!(rows[0].status, "attained");
        // Out-of-space query becomes an infeasible row, not an error.
        assert_eq!(rows[1].value.to_string(), "-inf");
        assert_eq!(rows[1].status, "infeasible");
    }

    #[test]
    fn unresolved_reference_names_the_declaration() {
        let text = two_tank_doc().replace(
            "\"tank2\", \"space\": \"half\"",
            "\"tank2\", \"space\": \"nope\"",
        );
        let doc = Document::from_json(&text).unwrap();
        let Err(err) = resolve(&doc) else {
            panic!("expected a resolution error")
        };
        let msg = err.to_string();
        assert!(msg.contains("tank2") && msg.contains("nope"), "{msg}");
    }

    #[test]
    fn type_check_fails_before_solving() {
        // Swap the merge relation's source to a 1-dimensional space.
        let text = two_tank_doc().replace("\"source\": \"pair\"", "\"source\": \"half\"");
        let doc = Document::from_json(&text).unwrap();
        let Err(err) = resolve(&doc) else {
            panic!("expected a type-check error")
        };
        assert!(err.to_string().contains("merge"), "{err}");
    }

    #[test]
    fn csv_headers_and_infinities() {
        let doc = Document::from_json(two_tank_doc()).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let rows = run_eval(&rdoc).unwrap();
        let csv = render_csv(&rdoc, &rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "U,entropy,status,U,U");
        assert!(csv.contains("-inf,infeasible"));
    }

    #[test]
    fn empty_queries_render_header_only() {
        let doc_text = two_tank_doc().replace(
            r#""queries": [{"point": [3.0]}, {"point": [-1.0]}]"#,
            r#""queries": []"#,
        );
        let doc = Document::from_json(&doc_text).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let rows = run_eval(&rdoc).unwrap();
        let csv = render_csv(&rdoc, &rows);
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn sweep_is_row_major_and_monotone_for_two_tanks() {
        let doc = Document::from_json(two_tank_doc()).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let axes = [AxisSpec::parse("U=1:10:10").unwrap()];
        let rows = run_sweep(&rdoc, &axes).unwrap();
        assert_eq!(rows.len(), 10);
        let values: Vec<f64> = rows.iter().map(|r| r.value.as_finite().unwrap()).collect();
        for w in values.windows(2) {
            assert!(w[1] > w[0], "entropy should increase with total energy");
        }
        assert_eq!(rows[0].target.coords()[0], 1.0);
        assert_eq!(rows[9].target.coords()[0], 10.0);
    }

    #[test]
    fn sweep_zero_steps_is_empty() {
        let doc = Document::from_json(two_tank_doc()).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let rows = run_sweep(&rdoc, &[AxisSpec::parse("U=1:10:0").unwrap()]).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn axis_parsing() {
        let a = AxisSpec::parse("V=1:3:5").unwrap();
        assert_eq!(
            a,
            AxisSpec {
                name: "V".into(),
                lo: 1.0,
                hi: 3.0,
                steps: 5
            }
        );
        assert!(AxisSpec::parse("V=1:3").is_err());
        assert!(AxisSpec::parse("V").is_err());
    }

    #[test]
    fn nested_compose_trees_stage_correctly() {
        // merge(merge(tank1, tank2), tank3): the staged assembly matches the
        // closed form for a (C₁+C₂+C₃)-tank up to the usual constant.
        let text = r#"{
            "spaces": [
                {"name": "half", "kind": "orthant", "n": 1, "labels": ["U"]},
                {"name": "pair", "kind": "product", "factors": ["half", "half"]}
            ],
            "systems": [
                {"name": "tank1", "space": "half", "entropy": {"kind": "log_tank", "C": 1.0}},
                {"name": "tank2", "space": "half", "entropy": {"kind": "log_tank", "C": 2.0}},
                {"name": "tank3", "space": "half", "entropy": {"kind": "log_tank", "C": 0.5}}
            ],
            "relations": [
                {"name": "merge", "source": "pair", "target": "half",
                 "eq": [{"a": [1.0, 1.0], "b": [-1.0], "c": 0.0}]}
            ],
            "compose": {"compose": {"op": "merge", "children": [
                {"compose": {"op": "merge", "children": ["tank1", "tank2"]}},
                "tank3"
            ]}},
            "queries": [{"point": [2.0]}, {"point": [6.0]}]
        }"#;
        let doc = Document::from_json(text).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let rows = run_eval(&rdoc).unwrap();
        let total_c = 3.5;
        let offset: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.value.as_finite().unwrap() - total_c * r.target.coords()[0].ln()
            })
            .collect();
        assert!((offset[0] - offset[1]).abs() < 1e-6, "{offset:?}");
        assert_eq!(rows[0].status, "attained");
    }

    #[test]
    fn normalized_round_trip_evaluates_identically() {
        let doc = Document::from_json(two_tank_doc()).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let rows = run_eval(&rdoc).unwrap();
        let normalized = doc.normalized_json();
        let doc2 = Document::from_json(&normalized).unwrap();
        let rdoc2 = resolve(&doc2).unwrap();
        let rows2 = run_eval(&rdoc2).unwrap();
        assert_eq!(render_csv(&rdoc, &rows), render_csv(&rdoc2, &rows2));
        // And normalization is idempotent.
        assert_eq!(normalized, doc2.normalized_json());
    }

    #[test]
    fn sweep_reruns_are_byte_identical() {
        let doc = Document::from_json(two_tank_doc()).unwrap();
        let rdoc = resolve(&doc).unwrap();
        let axes = [AxisSpec::parse("U=1:5:9").unwrap()];
        let a = render_csv(&rdoc, &run_sweep(&rdoc, &axes).unwrap());
        let b = render_csv(&rdoc, &run_sweep(&rdoc, &axes).unwrap());
        assert_eq!(a, b);
    }
}
