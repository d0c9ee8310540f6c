//! Norms of the refined scale on a frequency lattice, the cylinder
//! Omega = S^1 x (0,1) and its boundary Gamma (two circles).

mod cylinder;
mod embedding;
mod gamma;
mod gram;
mod lattice;
pub mod normal;
pub mod sample;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;

pub(crate) use cylinder::normal_phase;
pub use cylinder::{trace, BoundaryElement, CylinderElement};
pub use embedding::{embedding_constants, hoermander_condition, EmbeddingReport, HoermanderReport, Verdict};
pub use gamma::{norm_gamma, norm_gamma_atlas, partition_of_unity};
pub use gram::{
    clear_cache, dual_gram, interp_modified, interp_modified_gram, modified_gram, norm_dual, norm_modified, norm_omega, norm_omegabar,
    norm_zero, omegabar_gram, quad_form, quotient_gram, trace_row, zero_gram,
};
pub use lattice::{norm_lattice, FrequencyLattice, SpectralElement};

/// Smoothed modulus (1 + x^2)^{1/2}.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Fourier weight <.>^{2s} phi(<.>)^2 at a given bracket value.
pub fn weight(s: f64, phi: &FunctionParameter, bracket: f64) -> f64 {
    let p = phi.evaluate(bracket);
    bracket.powf(2.0 * s) * p * p
}

/// Normal basis size used with tangential truncation K.
pub fn normal_size(k: usize) -> usize {
    k / 4 + 16
}

const CRITICAL_TOL: f64 = 1e-9;

/// Whether s lies in E_r = {k - 1/2 : k = 1..r} (within 1e-9).
pub fn is_critical(s: f64, r: usize) -> bool {
    (1..=r).any(|k| (s - (k as f64 - 0.5)).abs() <= CRITICAL_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Lattice,
    Omega,
    OmegaBar,
    Gamma,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Lattice => "lattice",
            Domain::Omega => "omega",
            Domain::OmegaBar => "omegabar",
            Domain::Gamma => "gamma",
        })
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lattice" => Ok(Domain::Lattice),
            "omega" => Ok(Domain::Omega),
            "omegabar" | "omega-bar" => Ok(Domain::OmegaBar),
            "gamma" => Ok(Domain::Gamma),
            other => Err(Error::Parse(format!("unknown domain '{other}'"))),
        }
    }
}

/// The index (s, phi) of a refined space with its domain and modification order.
#[derive(Debug, Clone)]
pub struct SpaceIndex {
    pub s: f64,
    pub phi: FunctionParameter,
    pub domain: Domain,
    pub r: usize,
    /// s lies in E_r, so the modified norm is defined by interpolation.
    pub critical: bool,
}

impl SpaceIndex {
    pub fn new(s: f64, phi: FunctionParameter, domain: Domain, r: usize) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("s = {s}")));
        }
        if r > 0 && domain != Domain::Omega {
            return Err(Error::InvalidParameter("modification order requires domain omega".into()));
        }
        if phi.order() != 0.0 {
            return Err(Error::InvalidParameter(format!("{phi} is not in class M")));
        }
        Ok(SpaceIndex { s, phi, domain, r, critical: is_critical(s, r) })
    }

    pub fn lattice(s: f64, phi: FunctionParameter) -> Self {
        Self::new(s, phi, Domain::Lattice, 0).expect("valid lattice index")
    }

    /// Parses "s=2.5,phi=log^1.5,domain=omega,r=4". The value of s may be a
    /// fraction p/q.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = None;
        let mut phi = FunctionParameter::one();
        let mut domain = Domain::Lattice;
        let mut r = 0usize;
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            match key.trim() {
                "s" => s = Some(parse_real(value)?),
                "phi" => phi = FunctionParameter::parse(value)?,
                "domain" => domain = value.parse()?,
                "r" => r = value.trim().parse().map_err(|_| Error::Parse(format!("bad r '{value}'")))?,
                other => return Err(Error::Parse(format!("unknown key '{other}'"))),
            }
        }
        let s = s.ok_or_else(|| Error::Parse("missing s".into()))?;
        Self::new(s, phi, domain, r)
    }
}

impl fmt::Display for SpaceIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={},phi={},domain={}", self.s, self.phi, self.domain)?;
        if self.r > 0 {
            write!(f, ",r={}", self.r)?;
        }
        Ok(())
    }
}

impl FromStr for SpaceIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn parse_real(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::Parse(format!("bad number '{text}'"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => text.parse().map_err(|_| bad()),
    }
}
