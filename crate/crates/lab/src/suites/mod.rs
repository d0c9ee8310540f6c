//! The registered verification suites.

use anyhow::Result;

use crate::config::ExperimentConfig;
use crate::report::{Bound, Measurement};

mod boundary;
mod bvp;
mod interpolation;
mod norms;

pub type Runner = fn(&ExperimentConfig) -> Result<Vec<Measurement>>;

pub struct SuiteInfo {
    pub name: &'static str,
    pub theorems: &'static str,
    pub summary: &'static str,
    pub run: Runner,
}

pub static SUITES: [SuiteInfo; 10] = [
    SuiteInfo {
        name: "norms",
        theorems: "Theorem 4.3",
        summary: "Sobolev reduction on the lattice, chart equivalence on Gamma, modified norm above the traces",
        run: norms::run,
    },
    SuiteInfo {
        name: "interpolation",
        theorems: "Theorem 4.1, Proposition 3.1, Proposition 3.2, Proposition 3.3",
        summary: "per-mode interpolation weights, operator bounds, products and reiteration",
        run: interpolation::run,
    },
    SuiteInfo {
        name: "duality",
        theorems: "Proposition 4.1",
        summary: "double duality, Riesz tightness and the three realizations for |s| < 1/2",
        run: norms::run_duality,
    },
    SuiteInfo {
        name: "traces",
        theorems: "Theorem 4.2, Proposition 4.2",
        summary: "isometry onto K-spaces and truncation-stable trace constants",
        run: norms::run_traces,
    },
    SuiteInfo {
        name: "isomorphism",
        theorems: "Theorem 5.1, Theorem 5.2, Theorem 1.1",
        summary: "isomorphism ratios, manufactured solutions, range condition and index",
        run: bvp::run_isomorphism,
    },
    SuiteInfo {
        name: "apriori",
        theorems: "Theorem 5.3",
        summary: "a priori constant with and without the lower-order term",
        run: bvp::run_apriori,
    },
    SuiteInfo {
        name: "local",
        theorems: "Theorem 6.1, Theorem 6.2",
        summary: "localized norms and the commutator under refinement",
        run: boundary::run_local,
    },
    SuiteInfo {
        name: "classical",
        theorems: "Theorem 6.3",
        summary: "integral condition verdicts and the lacunary boundary datum",
        run: boundary::run_classical,
    },
    SuiteInfo {
        name: "epsilon-independence",
        theorems: "Theorem 7.1",
        summary: "interpolated norms at s in E_r for two values of eps",
        run: norms::run_epsilon,
    },
    SuiteInfo {
        name: "fredholm",
        theorems: "Proposition 3.4, Lemma 5.1",
        summary: "kernel, cokernel and index under interpolation; projectors onto N and the range",
        run: bvp::run_fredholm,
    },
];

pub fn find(name: &str) -> Option<&'static SuiteInfo> {
    SUITES.iter().find(|s| s.name == name)
}

/// max / min - 1 over positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max / min - 1.0
}

pub fn extremes(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Row asserting that a per-truncation constant varies by at most `tol` (relative).
pub fn stability(params: impl Into<String>, quantity: &str, values: &[f64], tol: f64) -> Measurement {
    Measurement::new(params, format!("{quantity} spread over truncations"), spread(values), Bound::AtMost(tol))
}
