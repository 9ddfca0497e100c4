//! Parameter sweeps over `(d, beta, n)` grids.
//!
//! Rows are independent; with the `parallel` feature they are evaluated on
//! the rayon pool. Output order is fixed by sorting, so both paths produce
//! identical tables.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::lily::beta_star;
use crate::routing::{route, RouteOptions, RoutingError, RoutingReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    /// `beta = 1`.
    Unit,
    /// `beta = beta_star(d, 1)`.
    Star,
}

impl BetaMode {
    pub fn beta(self, d: usize) -> Result<f64, RoutingError> {
        match self {
            BetaMode::Unit => Ok(1.0),
            BetaMode::Star => Ok(beta_star(d, 1)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d_list: Vec<usize>,
    pub beta_mode: BetaMode,
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// FNV-1a of the canonical JSON form of the sweep spec.
    pub config_hash: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<RoutingReport>,
    pub provenance: Provenance,
}

pub const CSV_HEADER: &str =
    "d,n,beta,t_star,p1f,p2r,gap,curv1f,curv2r,proj_residual,closed_vs_numeric";

impl SweepTable {
    /// CSV with fixed header, floats at 17 significant digits. Provenance is
    /// left out so identical specs give byte-identical files.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.d, r.n);
            for x in [
                r.beta,
                r.t_star,
                r.p1f_at_tstar,
                r.p2r_at_tstar,
                r.gap,
                r.curvature_1f,
                r.curvature_2r,
                r.projector_residual,
                r.closed_vs_numeric_residual,
            ] {
                out.push(',');
                out.push_str(&format_float(x));
            }
            out.push('\n');
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = &RoutingReport> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sweep(spec: &SweepSpec, options: &RouteOptions) -> SweepTable {
    sweep_with(spec, options, Execution::default())
}

pub fn sweep_with(spec: &SweepSpec, options: &RouteOptions, exec: Execution) -> SweepTable {
    let points: Vec<(usize, usize)> = spec
        .d_list
        .iter()
        .flat_map(|&d| spec.n_list.iter().map(move |&n| (d, n)))
        .collect();
    let eval = |&(d, n): &(usize, usize)| evaluate(d, n, spec.beta_mode, options);

    let mut rows: Vec<RoutingReport> = match exec {
        Execution::Sequential => points.iter().map(eval).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            points.par_iter().map(eval).collect()
        }
    };
    rows.sort_by(|a, b| {
        (a.d, a.beta, a.n)
            .partial_cmp(&(b.d, b.beta, b.n))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    SweepTable {
        rows,
        provenance: Provenance {
            config_hash: spec_hash(spec),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
    }
}

fn evaluate(d: usize, n: usize, mode: BetaMode, options: &RouteOptions) -> RoutingReport {
    let beta = match mode.beta(d) {
        Ok(b) => b,
        Err(e) => return RoutingReport::failed(d, n, f64::NAN, &e),
    };
    route(d, n, beta, options).unwrap_or_else(|e| RoutingReport::failed(d, n, beta, &e))
}

fn spec_hash(spec: &SweepSpec) -> String {
    let text = serde_json::to_string(spec).expect("sweep spec serializes");
    format!("{:016x}", fnv1a(text.as_bytes()))
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}
