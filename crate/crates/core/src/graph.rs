//! Chiral, edge-weighted graphs and the Hermitian Hamiltonians they generate.
//!
//! An edge is stored once per unordered vertex pair. Its orientation
//! `from -> to` fixes the sign of the phase: the assembled Hamiltonian has
//! `H[from][to] = modulus * exp(-i * phase)` and the conjugate entry at
//! `H[to][from]`. Unweighted edges therefore contribute `+1` couplings.

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used when checking Hermiticity of assembled matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Position of a vertex in the Hamiltonian basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayerTag {
    Input1,
    Input2,
    Chiral,
    Routing,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub modulus: f64,
    /// Radians, kept in `[0, 2pi)` once the edge is part of a graph.
    pub phase: f64,
}

impl ChiralEdge {
    pub fn new(from: usize, to: usize, modulus: f64, phase: f64) -> Self {
        ChiralEdge {
            from: VertexId(from),
            to: VertexId(to),
            modulus,
            phase,
        }
    }

    /// Matrix element `H[from][to]`.
    pub fn weight(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, -self.phase)
    }

    fn key(&self) -> (usize, usize) {
        let (a, b) = (self.from.0, self.to.0);
        (a.min(b), a.max(b))
    }
}

/// Reduce an angle into `[0, 2pi)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly TAU
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfLoop(VertexId),
    DuplicatePair(VertexId, VertexId),
    VertexOutOfRange { edge: usize, vertex: VertexId },
    BadModulus { edge: usize, modulus: f64 },
    BadPhase { edge: usize, phase: f64 },
    Isolated(VertexId),
    TagCount { expected: usize, found: usize },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop(v) => write!(f, "self-loop at {v}"),
            Violation::DuplicatePair(a, b) => write!(f, "duplicate pair ({a}, {b})"),
            Violation::VertexOutOfRange { edge, vertex } => {
                write!(f, "edge {edge} references vertex {vertex} out of range")
            }
            Violation::BadModulus { edge, modulus } => {
                write!(f, "edge {edge} has non-positive or non-finite modulus {modulus}")
            }
            Violation::BadPhase { edge, phase } => {
                write!(f, "edge {edge} has non-finite phase {phase}")
            }
            Violation::Isolated(v) => write!(f, "vertex {v} has no incident edge"),
            Violation::TagCount { expected, found } => {
                write!(f, "expected {expected} layer tags, found {found}")
            }
            Violation::Empty => write!(f, "graph has no vertices"),
        }
    }
}

/// Check raw graph parts against every structural invariant.
///
/// Returns all violations found; an empty list means the parts describe a
/// valid [`ChiralGraph`].
pub fn validate(n_vertices: usize, edges: &[ChiralEdge], tags: Option<&[LayerTag]>) -> Vec<Violation> {
    let mut out = Vec::new();
    if n_vertices == 0 {
        out.push(Violation::Empty);
    }
    let mut seen = HashSet::new();
    let mut degree = vec![0usize; n_vertices];
    for (i, e) in edges.iter().enumerate() {
        let mut in_range = true;
        for v in [e.from, e.to] {
            if v.0 >= n_vertices {
                out.push(Violation::VertexOutOfRange { edge: i, vertex: v });
                in_range = false;
            }
        }
        if !(e.modulus.is_finite() && e.modulus > 0.0) {
            out.push(Violation::BadModulus {
                edge: i,
                modulus: e.modulus,
            });
        }
        if !e.phase.is_finite() {
            out.push(Violation::BadPhase {
                edge: i,
                phase: e.phase,
            });
        }
        if e.from == e.to {
            out.push(Violation::SelfLoop(e.from));
            continue;
        }
        let key = e.key();
        if !seen.insert(key) {
            out.push(Violation::DuplicatePair(VertexId(key.0), VertexId(key.1)));
        }
        if in_range {
            degree[e.from.0] += 1;
            degree[e.to.0] += 1;
        }
    }
    for (v, &deg) in degree.iter().enumerate() {
        if deg == 0 {
            out.push(Violation::Isolated(VertexId(v)));
        }
    }
    if let Some(tags) = tags {
        if tags.len() != n_vertices {
            out.push(Violation::TagCount {
                expected: n_vertices,
                found: tags.len(),
            });
        }
    }
    out
}

/// A validated chiral graph. Immutable once built.
///
/// Edges are kept sorted by `(from, to)` and phases are wrapped into
/// `[0, 2pi)`, so two graphs describing the same Hamiltonian with the same
/// orientations compare equal.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralGraph {
    n_vertices: usize,
    edges: Vec<ChiralEdge>,
    tags: Option<Vec<LayerTag>>,
}

impl ChiralGraph {
    pub fn new(
        n_vertices: usize,
        mut edges: Vec<ChiralEdge>,
        tags: Option<Vec<LayerTag>>,
    ) -> Result<Self, GraphError> {
        let violations = validate(n_vertices, &edges, tags.as_deref());
        if !violations.is_empty() {
            return Err(GraphError::Invalid(violations));
        }
        for e in &mut edges {
            e.phase = wrap_phase(e.phase);
        }
        edges.sort_by_key(|e| (e.from, e.to));
        Ok(ChiralGraph {
            n_vertices,
            edges,
            tags,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[ChiralEdge] {
        &self.edges
    }

    pub fn tags(&self) -> Option<&[LayerTag]> {
        self.tags.as_deref()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.edges.iter().filter(|e| e.from == v || e.to == v).count()
    }

    /// The stored edge joining `a` and `b`, in either orientation.
    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<&ChiralEdge> {
        self.edges
            .iter()
            .find(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }

    /// Rebuild with a new edge list, keeping vertex count and tags.
    pub(crate) fn with_edges(&self, edges: Vec<ChiralEdge>) -> Result<Self, GraphError> {
        ChiralGraph::new(self.n_vertices, edges, self.tags.clone())
    }

    pub fn hamiltonian(&self) -> Hamiltonian {
        assemble_hamiltonian(self)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            n_vertices: self.n_vertices,
            edges: self
                .edges
                .iter()
                .map(|e| (e.from.0, e.to.0, e.modulus, e.phase))
                .collect(),
            tags: self.tags.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: GraphDocument = serde_path_to_error::deserialize(de).map_err(|e| GraphError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        doc.into_graph()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        ChiralGraph::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDocument {
    n_vertices: usize,
    edges: Vec<(usize, usize, f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tags: Option<Vec<LayerTag>>,
}

impl GraphDocument {
    fn into_graph(self) -> Result<ChiralGraph, GraphError> {
        let edges: Vec<ChiralEdge> = self
            .edges
            .iter()
            .map(|&(a, b, m, p)| ChiralEdge::new(a, b, m, p))
            .collect();
        let violations = validate(self.n_vertices, &edges, self.tags.as_deref());
        if let Some(v) = violations.first() {
            let path = match v {
                Violation::VertexOutOfRange { edge, vertex } => {
                    let slot = if edges[*edge].from == *vertex { 0 } else { 1 };
                    format!("edges[{edge}][{slot}]")
                }
                Violation::BadModulus { edge, .. } => format!("edges[{edge}][2]"),
                Violation::BadPhase { edge, .. } => format!("edges[{edge}][3]"),
                Violation::TagCount { .. } => "tags".to_string(),
                Violation::Empty => "n_vertices".to_string(),
                _ => "edges".to_string(),
            };
            return Err(GraphError::Parse {
                path,
                message: join_violations(&violations),
            });
        }
        ChiralGraph::new(self.n_vertices, edges, self.tags)
    }
}

/// Dense Hermitian Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<Complex64>,
}

impl Hamiltonian {
    /// Wrap a matrix, rejecting anything not Hermitian to within
    /// [`HERMITIAN_TOL`] relative to its largest entry.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self, GraphError> {
        if !matrix.is_square() {
            return Err(GraphError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let res = hermiticity_residual(&matrix);
        let scale = max_abs(&matrix).max(1.0);
        if res > HERMITIAN_TOL * scale {
            return Err(GraphError::NotHermitian(res));
        }
        Ok(Hamiltonian { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }
}

pub(crate) fn hermiticity_residual(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn assemble_hamiltonian(graph: &ChiralGraph) -> Hamiltonian {
    let n = graph.n_vertices;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for e in &graph.edges {
        let w = e.weight();
        m[(e.from.0, e.to.0)] = w;
        m[(e.to.0, e.from.0)] = w.conj();
    }
    Hamiltonian { matrix: m }
}
