use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;
use crate::scale::{is_critical, norm_gamma, norm_zero, trace, BoundaryElement, CylinderElement};

/// (u_0, u_1, ..., u_r): an element of Omega-bar with r boundary components.
#[derive(Debug, Clone, PartialEq)]
pub struct RoitbergVector {
    pub u0: CylinderElement,
    /// traces[k - 1] = u_k.
    pub traces: Vec<BoundaryElement>,
}

/// (u, u|Gamma, D_nu u|Gamma, ..., D_nu^{r-1} u|Gamma).
pub fn roitberg_vector(u: &CylinderElement, r: usize) -> Result<RoitbergVector> {
    let traces = (1..=r).map(|k| trace(u, k)).collect::<Result<Vec<_>>>()?;
    Ok(RoitbergVector { u0: u.clone(), traces })
}

impl RoitbergVector {
    pub fn order(&self) -> usize {
        self.traces.len()
    }

    /// max over k with s > k - 1/2 of |u_k - trace(u_0, k)| (coefficientwise).
    pub fn compatibility_defect(&self, s: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (i, uk) in self.traces.iter().enumerate() {
            let k = i + 1;
            if s > k as f64 - 0.5 {
                let t = trace(&self.u0, k)?;
                worst = worst.max(t.add(&uk.scaled((-1.0).into())).max_abs());
            }
        }
        Ok(worst)
    }

    /// Errors unless the compatibility conditions of K_{s,phi,(r)} hold to tol.
    pub fn check_compatible(&self, s: f64, tol: f64) -> Result<()> {
        let d = self.compatibility_defect(s)?;
        if d > tol {
            return Err(Error::Hypothesis { t: s, what: format!("trace components differ from traces of u_0 by {d:e}") });
        }
        Ok(())
    }

    /// (||u_0||^2_{s,phi,(0)} + sum_k ||u_k||^2_{s-k+1/2,phi}(Gamma))^{1/2}, s outside E_r.
    pub fn k_norm(&self, s: f64, phi: &FunctionParameter) -> Result<f64> {
        if is_critical(s, self.order()) {
            return Err(Error::CriticalIndex(s));
        }
        let mut total = norm_zero(&self.u0, s, phi)?.powi(2);
        for (i, uk) in self.traces.iter().enumerate() {
            total += norm_gamma(uk, s - i as f64 - 0.5, phi).powi(2);
        }
        Ok(total.sqrt())
    }
}
