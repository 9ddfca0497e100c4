//! Construction of the Lily routing graph.
//!
//! Vertex layout for `(n, d)`, with `N = 2 + d + 2n`:
//!
//! | layer   | vertices              |
//! |---------|-----------------------|
//! | Input1  | `0`                   |
//! | Input2  | `1`                   |
//! | Chiral  | `2 ..= 1 + d`         |
//! | Routing | `2 + d ..= 1 + d + n` |
//! | Output  | `2 + d + n ..= 1 + d + 2n` |
//!
//! Routing vertex `i` is paired with output vertex `i`. The input link and the
//! output links have unit weight; chiral and routing links carry `beta`.
//! The chiral links and the links from the target routing vertex carry the
//! roots-of-unity phases, so `<2|H|k> = <r|H|k> = beta * exp(-i phi_k)`,
//! while every other routing vertex couples with the real weight `beta`.

use std::f64::consts::TAU;
use std::ops::Range;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ChiralEdge, ChiralGraph, LayerTag, VertexId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("chiral layer size d must be at least 2, got {0}")]
    ChiralTooSmall(usize),
    #[error("number of outputs n must be at least 1")]
    NoOutputs,
    #[error("target {target} out of range for n = {n}")]
    TargetOutOfRange { target: usize, n: usize },
    #[error("edge weight beta must be positive and finite, got {0}")]
    BadBeta(f64),
    #[error("q must be at least 1")]
    BadQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilyParams {
    pub n: usize,
    pub d: usize,
    pub target: usize,
    pub beta: f64,
}

impl LilyParams {
    pub fn new(n: usize, d: usize, target: usize, beta: f64) -> Result<Self, ParamError> {
        let p = LilyParams { n, d, target, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.d < 2 {
            return Err(ParamError::ChiralTooSmall(self.d));
        }
        if self.n == 0 {
            return Err(ParamError::NoOutputs);
        }
        if self.target >= self.n {
            return Err(ParamError::TargetOutOfRange {
                target: self.target,
                n: self.n,
            });
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(ParamError::BadBeta(self.beta));
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        2 + self.d + 2 * self.n
    }
}

/// Index map of a Lily graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LilyLayout {
    pub n: usize,
    pub d: usize,
    pub target: usize,
}

impl LilyLayout {
    pub fn n_vertices(&self) -> usize {
        2 + self.d + 2 * self.n
    }

    pub fn input1(&self) -> VertexId {
        VertexId(0)
    }

    pub fn input2(&self) -> VertexId {
        VertexId(1)
    }

    pub fn chiral_range(&self) -> Range<usize> {
        2..2 + self.d
    }

    pub fn routing_range(&self) -> Range<usize> {
        2 + self.d..2 + self.d + self.n
    }

    pub fn output_range(&self) -> Range<usize> {
        2 + self.d + self.n..self.n_vertices()
    }

    /// Chiral vertex `k` for `k in 0..d`.
    pub fn chiral(&self, k: usize) -> VertexId {
        assert!(k < self.d);
        VertexId(2 + k)
    }

    pub fn routing(&self, i: usize) -> VertexId {
        assert!(i < self.n);
        VertexId(2 + self.d + i)
    }

    pub fn output(&self, i: usize) -> VertexId {
        assert!(i < self.n);
        VertexId(2 + self.d + self.n + i)
    }

    /// The routing vertex `r` currently selected.
    pub fn target_routing(&self) -> VertexId {
        self.routing(self.target)
    }

    /// The output vertex `f` paired with the target.
    pub fn target_output(&self) -> VertexId {
        self.output(self.target)
    }

    pub fn tag(&self, v: VertexId) -> LayerTag {
        let i = v.0;
        match i {
            0 => LayerTag::Input1,
            1 => LayerTag::Input2,
            _ if self.chiral_range().contains(&i) => LayerTag::Chiral,
            _ if self.routing_range().contains(&i) => LayerTag::Routing,
            _ if self.output_range().contains(&i) => LayerTag::Output,
            _ => panic!("vertex {i} outside layout"),
        }
    }

    pub fn tags(&self) -> Vec<LayerTag> {
        (0..self.n_vertices()).map(|i| self.tag(VertexId(i))).collect()
    }

    /// Routing and output vertices that must stay unpopulated: everything in
    /// those layers except `r` and `f`.
    pub fn silent_vertices(&self) -> Vec<VertexId> {
        (0..self.n)
            .filter(|&i| i != self.target)
            .flat_map(|i| [self.routing(i), self.output(i)])
            .collect()
    }

    pub fn with_target(&self, target: usize) -> Result<Self, ParamError> {
        if target >= self.n {
            return Err(ParamError::TargetOutOfRange { target, n: self.n });
        }
        Ok(LilyLayout { target, ..*self })
    }
}

/// The `d` roots-of-unity phases `2 pi k / d` for `k = 1..=d`.
pub fn phases(d: usize) -> Result<Vec<f64>, ParamError> {
    if d < 2 {
        return Err(ParamError::ChiralTooSmall(d));
    }
    Ok((1..=d).map(|k| TAU * k as f64 / d as f64).collect())
}

pub fn build_lily(params: &LilyParams) -> Result<(ChiralGraph, LilyLayout), ParamError> {
    params.validate()?;
    let layout = LilyLayout {
        n: params.n,
        d: params.d,
        target: params.target,
    };
    let phi = phases(params.d)?;
    let beta = params.beta;

    let mut edges = Vec::with_capacity(1 + params.d * (1 + params.n) + params.n);
    edges.push(ChiralEdge::new(0, 1, 1.0, 0.0));
    for (k, &p) in phi.iter().enumerate() {
        edges.push(ChiralEdge::new(1, layout.chiral(k).0, beta, p));
    }
    for i in 0..params.n {
        let l = layout.routing(i).0;
        for (k, &p) in phi.iter().enumerate() {
            let phase = if i == params.target { p } else { 0.0 };
            edges.push(ChiralEdge::new(l, layout.chiral(k).0, beta, phase));
        }
        edges.push(ChiralEdge::new(l, layout.output(i).0, 1.0, 0.0));
    }

    let graph = ChiralGraph::new(layout.n_vertices(), edges, Some(layout.tags()))
        .expect("Lily construction yields a valid graph");
    Ok((graph, layout))
}

/// Move the chiral phase pattern from the layout's current target onto the
/// links of routing vertex `new_target`.
///
/// The phases on the `k -> r` and `k -> r'` links are exchanged, so the old
/// target's links become real and applying the inverse retarget restores the
/// original graph exactly.
pub fn retarget(
    graph: &ChiralGraph,
    layout: &LilyLayout,
    new_target: usize,
) -> Result<ChiralGraph, ParamError> {
    let new_layout = layout.with_target(new_target)?;
    if new_target == layout.target {
        return Ok(graph.clone());
    }
    let old_r = layout.target_routing();
    let new_r = new_layout.target_routing();
    let chiral = layout.chiral_range();

    let phase_to = |r: VertexId, k: usize| -> f64 {
        graph
            .edge_between(r, VertexId(k))
            .map(|e| signed_phase(e, r, e.phase))
            .expect("routing vertex is linked to every chiral vertex")
    };

    let edges = graph
        .edges()
        .iter()
        .map(|e| {
            let mut e = *e;
            let k = if chiral.contains(&e.to.0) { e.to.0 } else { e.from.0 };
            let other = if k == e.to.0 { e.from } else { e.to };
            if chiral.contains(&k) && other == old_r {
                e.phase = signed_phase(&e, old_r, phase_to(new_r, k));
            } else if chiral.contains(&k) && other == new_r {
                e.phase = signed_phase(&e, new_r, phase_to(old_r, k));
            }
            e
        })
        .collect();
    Ok(graph
        .with_edges(edges)
        .expect("retarget preserves graph validity"))
}

// `phase` is expressed in the routing-vertex-first orientation; flip the sign
// when the edge is stored the other way round.
fn signed_phase(edge: &ChiralEdge, routing: VertexId, phase: f64) -> f64 {
    if edge.from == routing {
        phase
    } else {
        -phase
    }
}

/// Edge weight for which the routing probabilities reach one at `t = pi`:
/// the positive root of `sqrt(1 + 2 d beta^2) = 2 q`.
pub fn beta_star(d: usize, q: usize) -> Result<f64, ParamError> {
    if d < 2 {
        return Err(ParamError::ChiralTooSmall(d));
    }
    if q == 0 {
        return Err(ParamError::BadQ);
    }
    let q = q as f64;
    Ok(((4.0 * q * q - 1.0) / (2.0 * d as f64)).sqrt())
}

/// `sum_k exp(i phi_k) <l|H|k> / beta` for a routing vertex `l`.
///
/// Vanishes for every non-target routing vertex; equals `d` at the target.
pub fn interference_sum(graph: &ChiralGraph, layout: &LilyLayout, l: VertexId, beta: f64) -> Complex64 {
    let h = graph.hamiltonian();
    let phi = phases(layout.d).expect("layout has d >= 2");
    phi.iter()
        .enumerate()
        .map(|(k, &p)| Complex64::from_polar(1.0, p) * h.matrix()[(l.0, layout.chiral(k).0)] / beta)
        .sum()
}
