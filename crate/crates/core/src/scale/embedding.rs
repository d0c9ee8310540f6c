use std::collections::BTreeMap;

use super::lattice::{norm_lattice, SpectralElement};
use super::{weight, Domain, SpaceIndex};
use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converges,
    Diverges,
    Undecided,
}

#[derive(Debug, Clone)]
pub struct HoermanderReport {
    /// Quadrature of int_1^{T_max} dt / (t phi(t)^2).
    pub integral: f64,
    /// Estimate of int_{T_max}^inf; infinite when divergent, NaN when unknown.
    pub tail: f64,
    pub verdict: Verdict,
}

/// Decides convergence of int_1^inf dt / (t phi(t)^2) and estimates it up to `t_max`.
///
/// For the log-power family the verdict is exact: a positive power converges,
/// a negative one diverges, and otherwise the first iterated-log exponent r_j
/// with 2 r_j != 1 decides (convergent iff 2 r_j > 1).
pub fn hoermander_condition(phi: &FunctionParameter, t_max: f64) -> HoermanderReport {
    let u_max = t_max.max(1.0).ln();
    let n = ((u_max * 400.0).ceil() as usize).clamp(2000, 400_000) & !1;
    let h = u_max / n as f64;
    let f = |u: f64| {
        let p = phi.evaluate(u.exp());
        1.0 / (p * p)
    };
    let mut integral = f(0.0) + f(u_max);
    for i in 1..n {
        integral += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    integral *= h / 3.0;

    let (verdict, tail) = match phi.exponents() {
        Some(exps) => {
            let theta = phi.order();
            let verdict = if theta > 0.0 {
                Verdict::Converges
            } else if theta < 0.0 {
                Verdict::Diverges
            } else {
                exps.iter()
                    .find(|r| (2.0 * *r - 1.0).abs() > 1e-12)
                    .map(|r| if 2.0 * r > 1.0 { Verdict::Converges } else { Verdict::Diverges })
                    .unwrap_or(Verdict::Diverges)
            };
            let tail = match verdict {
                Verdict::Diverges => f64::INFINITY,
                _ if theta == 0.0 && exps.len() == 1 && u_max >= 1.0 => {
                    let r = exps[0];
                    u_max.powf(1.0 - 2.0 * r) / (2.0 * r - 1.0)
                }
                _ if theta > 0.0 => {
                    let p = phi.evaluate(t_max);
                    1.0 / (2.0 * theta * p * p)
                }
                _ => f64::NAN,
            };
            (verdict, tail)
        }
        None => (Verdict::Undecided, f64::NAN),
    };
    HoermanderReport { integral, tail, verdict }
}

#[derive(Debug, Clone)]
pub struct EmbeddingReport {
    /// max ||u||_lo / ||u||_hi over the sample.
    pub sample_max: f64,
    /// max over single modes of the same ratio.
    pub mode_max: f64,
    /// (bracket, single-mode ratio) in increasing bracket order.
    pub profile: Vec<(f64, f64)>,
    /// The strict hypothesis holds, so the single-mode ratio should tend to 0.
    pub compact_expected: bool,
}

impl EmbeddingReport {
    /// Single-mode ratio at the largest bracket divided by the overall maximum.
    pub fn tail_fraction(&self) -> f64 {
        self.profile.last().map(|p| p.1).unwrap_or(0.0) / self.mode_max
    }
}

/// Returns (bounded, tends_to_zero) for phi_lo / phi_hi at infinity.
fn ratio_behaviour(lo: &FunctionParameter, hi: &FunctionParameter) -> (bool, bool) {
    if let (Some(a), Some(b)) = (lo.exponents(), hi.exponents()) {
        if lo.order() == 0.0 && hi.order() == 0.0 {
            let len = a.len().max(b.len());
            let get = |v: &[f64], j: usize| v.get(j).copied().unwrap_or(0.0);
            for j in 0..len {
                let d = get(a, j) - get(b, j);
                if d != 0.0 {
                    return (d < 0.0, d < 0.0);
                }
            }
            return (true, false);
        }
    }
    let ratio = |t: f64| lo.evaluate(t) / hi.evaluate(t);
    let (r30, r35, r40) = (ratio(2f64.powi(30)), ratio(2f64.powi(35)), ratio(2f64.powi(40)));
    let bounded = r40 <= 1.05 * r30;
    (bounded, bounded && r40 < r35 && r35 < r30)
}

/// Empirical constant of the embedding H^{hi} into H^{lo} on the lattice.
pub fn embedding_constants(hi: &SpaceIndex, lo: &SpaceIndex, sample: &[SpectralElement]) -> Result<EmbeddingReport> {
    if hi.domain != Domain::Lattice || lo.domain != Domain::Lattice {
        return Err(Error::InvalidParameter("embedding constants are computed on the lattice".into()));
    }
    let compact_expected = if lo.s < hi.s {
        true
    } else if lo.s == hi.s {
        let (bounded, to_zero) = ratio_behaviour(&lo.phi, &hi.phi);
        if !bounded {
            return Err(Error::Hypothesis { t: 2f64.powi(40), what: format!("{} / {} is unbounded", lo.phi, hi.phi) });
        }
        to_zero
    } else {
        return Err(Error::Hypothesis { t: 1.0, what: format!("s_lo = {} exceeds s_hi = {}", lo.s, hi.s) });
    };

    let mut sample_max: f64 = 0.0;
    for u in sample {
        let d = norm_lattice(u, hi)?;
        if d > 0.0 {
            sample_max = sample_max.max(norm_lattice(u, lo)? / d);
        }
    }
    let lattice = sample.first().map(|u| u.lattice);
    let mut by_bracket: BTreeMap<u64, f64> = BTreeMap::new();
    if let Some(lat) = lattice {
        for b in lat.brackets() {
            let r = (weight(lo.s, &lo.phi, b) / weight(hi.s, &hi.phi, b)).sqrt();
            let e = by_bracket.entry(b.to_bits()).or_insert(0.0);
            *e = e.max(r);
        }
    }
    let profile: Vec<(f64, f64)> = by_bracket.into_iter().map(|(b, r)| (f64::from_bits(b), r)).collect();
    let mode_max = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(EmbeddingReport { sample_max, mode_max, profile, compact_expected })
}
