//! Continuous-time chiral quantum walks on the Lily routing graph.
//!
//! * [`graph`]: chiral edge-weighted graphs, their Hamiltonians and the JSON
//!   graph file format.
//! * [`lily`]: the Lily graph builder, output retargeting and the tuned edge
//!   weight `beta_star`.
//! * [`krylov`]: Krylov-subspace reduction to the five-site effective chain.
//! * [`dynamics`]: exact spectral evolution, with an RK4 oracle for
//!   cross-checks.
//! * [`routing`]: closed-form routing probabilities, optimal time,
//!   curvature and the mirror-projector check.
//! * [`sweep`]: `(d, beta, n)` grids, evaluated in parallel with the
//!   `parallel` feature.

pub mod dynamics;
pub mod graph;
pub mod krylov;
pub mod lily;
pub mod routing;
pub mod sweep;

pub use dynamics::{coherence_l1, EvolutionEngine, WalkerState};
pub use graph::{assemble_hamiltonian, ChiralEdge, ChiralGraph, Hamiltonian, LayerTag, VertexId};
pub use krylov::{krylov_reduce, KrylovReduction, ReducedState};
pub use lily::{beta_star, build_lily, phases, retarget, LilyLayout, LilyParams};
pub use routing::{RoutingReport, Transfer};
pub use sweep::{BetaMode, SweepSpec, SweepTable};
