//! Per-tangential-mode Gram matrices of the Omega norms on the normal basis,
//! with a read-mostly cache keyed by (kind, s, phi, |xi|, M).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::cylinder::CylinderElement;
use super::{bracket, is_critical, normal, weight};
use crate::error::{Error, Result};
use crate::karamata::{reciprocal, FunctionParameter};
use crate::pairs::{self, HilbertPair};

type Key = (String, u64, String, u64, usize);
type Cache = RwLock<HashMap<Key, Arc<DMatrix<f64>>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drops every cached Gram matrix.
pub fn clear_cache() {
    cache().write().unwrap().clear();
}

fn cached<F>(tag: String, s: f64, phi: &FunctionParameter, xi: i64, m: usize, build: F) -> Result<Arc<DMatrix<f64>>>
where
    F: FnOnce() -> Result<DMatrix<f64>>,
{
    let key = (tag, s.to_bits(), phi.to_string(), xi.unsigned_abs(), m);
    if let Some(g) = cache().read().unwrap().get(&key) {
        return Ok(g.clone());
    }
    let g = Arc::new(build()?);
    Ok(cache().write().unwrap().entry(key).or_insert(g).clone())
}

fn mode_weight(s: f64, phi: &FunctionParameter, xi: i64, k: f64) -> f64 {
    let x = xi as f64;
    weight(s, phi, (1.0 + x * x + PI * PI * k * k).sqrt())
}

/// sum_{k > l} f(k) / k^2, summed to 8l and closed with a power-law integral.
fn tail_sum<F: Fn(f64) -> f64>(l: usize, decay: f64, f: F) -> f64 {
    let upper = 8 * l;
    let mut sum = 0.0;
    for k in (l + 1)..=upper {
        let kf = k as f64;
        sum += f(kf) / (kf * kf);
    }
    let kf = upper as f64;
    sum + f(kf) / (kf * kf) * kf / (decay - 1.0).max(1e-3)
}

/// Average of f over |k| > l against the 1/k^2 profile of smooth moments.
fn tail_factor<F: Fn(f64) -> f64>(l: usize, decay: f64, f: F) -> f64 {
    tail_sum(l, decay, f) / tail_sum(l, 2.0, |_| 1.0)
}

/// sum_{|k| > l} mu(k) mu(k)^* / 2, from Parseval: the full sum is the identity.
fn unweighted_tail(mom: &normal::Moments, l: usize) -> DMatrix<f64> {
    let m = mom.re.ncols();
    let re = mom.re.rows(1, l);
    let im = mom.im.rows(1, l);
    let r0 = mom.re.row(0);
    let head = re.transpose() * re + im.transpose() * im + r0.transpose() * r0 * 0.5;
    pairs::symmetrize(&(DMatrix::identity(m, m) - head))
}

/// Quotient (minimum-extension) Gram of H^{s,phi}(Omega), s > -1/2, on mode xi.
///
/// Omega's normal interval is periodized to circumference 2 with normal
/// frequencies pi k. The restriction map is enforced on 2M Legendre
/// coefficients, the extra ones being required to vanish.
pub fn quotient_gram(s: f64, phi: &FunctionParameter, xi: i64, m: usize) -> Result<Arc<DMatrix<f64>>> {
    if s <= -0.5 {
        return Err(Error::InvalidParameter(format!("quotient realization needs s > -1/2, got {s}")));
    }
    cached("quotient".into(), s, phi, xi, m, || {
        let mc = 2 * m;
        quotient_gram_with(s, phi, xi, m, mc, (8 * mc).max(512))
    })
}

pub(crate) fn quotient_gram_with(s: f64, phi: &FunctionParameter, xi: i64, m: usize, mc: usize, lk: usize) -> Result<DMatrix<f64>> {
    {
        let mom = normal::moments(mc, lk);
        let rows = 2 * lk + 1 + mc;
        let mut b = DMatrix::zeros(rows, mc);
        let w0 = mode_weight(s, phi, xi, 0.0);
        for n in 0..mc {
            b[(0, n)] = mom.re[(0, n)] / (2.0 * w0).sqrt();
        }
        for k in 1..=lk {
            let a = 1.0 / mode_weight(s, phi, xi, k as f64).sqrt();
            for n in 0..mc {
                b[(2 * k - 1, n)] = a * mom.re[(k, n)];
                b[(2 * k, n)] = a * mom.im[(k, n)];
            }
        }
        let factor = tail_factor(lk, 2.0 + 2.0 * s, |k| 1.0 / mode_weight(s, phi, xi, k));
        let eig = unweighted_tail(&mom, lk).symmetric_eigen();
        for i in 0..mc {
            let a = (factor * eig.eigenvalues[i].max(0.0)).sqrt();
            for n in 0..mc {
                b[(2 * lk + 1 + i, n)] = a * eig.eigenvectors[(n, i)];
            }
        }
        let r = b.qr().r();
        let rhs = DMatrix::from_fn(mc, m, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = r
            .transpose()
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| Error::IllConditioned(format!("restriction map singular at s = {s}, xi = {xi}")))?;
        let g = x.transpose() * x;
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::IllConditioned(format!("quotient Gram overflow at s = {s}, xi = {xi}")));
        }
        Ok(pairs::symmetrize(&g))
    }
}

/// Gram of the zero extension in H^{s,phi}(R^2) (Omega-bar-supported realization), s < 1/2.
pub fn omegabar_gram(s: f64, phi: &FunctionParameter, xi: i64, m: usize) -> Result<Arc<DMatrix<f64>>> {
    if s >= 0.5 {
        return Err(Error::InvalidParameter(format!("zero extension needs s < 1/2, got {s}")));
    }
    cached("omegabar".into(), s, phi, xi, m, || {
        let lk = (16 * m).max(1024);
        let mom = normal::moments(m, lk);
        let mut g = DMatrix::zeros(m, m);
        let w0 = mode_weight(s, phi, xi, 0.0);
        let r0 = mom.re.row(0).transpose();
        g += &r0 * r0.transpose() * (0.5 * w0);
        for k in 1..=lk {
            let w = mode_weight(s, phi, xi, k as f64);
            let re = mom.re.row(k);
            let im = mom.im.row(k);
            g.ger(w, &re.transpose(), &re.transpose(), 1.0);
            g.ger(w, &im.transpose(), &im.transpose(), 1.0);
        }
        let factor = tail_factor(lk, 2.0 - 2.0 * s, |k| mode_weight(s, phi, xi, k));
        g += unweighted_tail(&mom, lk) * factor;
        Ok(pairs::symmetrize(&g))
    })
}

fn invert_spd(g: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = g.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite(format!("{what} Gram")))?;
    Ok(pairs::symmetrize(&chol.inverse()))
}

/// Gram of H^{s,phi,(0)}(Omega) for s < 0: the inverse of the quotient Gram of
/// H^{-s,1/phi}(Omega) under the L2(Omega) pairing.
pub fn dual_gram(s: f64, phi: &FunctionParameter, xi: i64, m: usize) -> Result<Arc<DMatrix<f64>>> {
    if s >= 0.0 {
        return Err(Error::InvalidParameter(format!("dual realization needs s < 0, got {s}")));
    }
    cached("dual".into(), s, phi, xi, m, || {
        let inv = reciprocal(phi)?;
        invert_spd(&*quotient_gram(-s, &inv, xi, m)?, "quotient")
    })
}

/// Gram of H^{s,phi,(0)}(Omega): quotient for s >= 0, dual for s < 0.
pub fn zero_gram(s: f64, phi: &FunctionParameter, xi: i64, m: usize) -> Result<Arc<DMatrix<f64>>> {
    if s >= 0.0 {
        quotient_gram(s, phi, xi, m)
    } else {
        dual_gram(s, phi, xi, m)
    }
}

/// Row functional of the k-th trace (without its unit phase) on circle 0 or 1.
pub fn trace_row(m: usize, k: usize, circle: usize) -> DVector<f64> {
    normal::endpoint_derivative(m, k - 1, circle == 1)
}

/// Gram of H^{s,phi,(r)}(Omega) for s outside E_r: the (0)-Gram plus the
/// boundary traces of orders 1..r weighted at index s - k + 1/2.
pub fn modified_gram(s: f64, phi: &FunctionParameter, r: usize, xi: i64, m: usize) -> Result<Arc<DMatrix<f64>>> {
    if is_critical(s, r) {
        return Err(Error::CriticalIndex(s));
    }
    if r == 0 {
        return zero_gram(s, phi, xi, m);
    }
    cached(format!("modified{r}"), s, phi, xi, m, || {
        let mut g = (*zero_gram(s, phi, xi, m)?).clone();
        let b = bracket(xi as f64);
        for k in 1..=r {
            if k > m {
                return Err(Error::InvalidParameter(format!("trace order {k} exceeds basis size {m}")));
            }
            let w = weight(s - k as f64 + 0.5, phi, b);
            for c in 0..2 {
                let row = trace_row(m, k, c);
                g.ger(w, &row, &row, 1.0);
            }
        }
        Ok(g)
    })
}

/// Gram of [H^{s-eps,phi,(r)}, H^{s+eps,phi,(r)}]_{1/2} on mode xi.
pub fn interp_modified_gram(s: f64, phi: &FunctionParameter, r: usize, eps: f64, xi: i64, m: usize) -> Result<Arc<DMatrix<f64>>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0,1)")));
    }
    cached(format!("interp{r}:{}", eps.to_bits()), s, phi, xi, m, || {
        let g0 = modified_gram(s - eps, phi, r, xi, m)?;
        let g1 = modified_gram(s + eps, phi, r, xi, m)?;
        let pair = HilbertPair::new((*g0).clone(), (*g1).clone())?;
        let (mu, v) = pairs::generalized_eigen(pair.gram1(), pair.gram0())?;
        let w = pair.gram0() * v;
        // psi(t) = t^{1/2} on lambda = sqrt(mu): 1 + psi^2 = 1 + sqrt(mu).
        let d = DMatrix::from_diagonal(&mu.map(|x| 1.0 + x.max(0.0).sqrt()));
        Ok(pairs::symmetrize(&(&w * d * w.transpose())))
    })
}

/// Re(c)^T G Re(c) + Im(c)^T G Im(c) for a real symmetric G.
pub fn quad_form(g: &DMatrix<f64>, c: &DVector<Complex64>) -> f64 {
    let re = c.map(|z| z.re);
    let im = c.map(|z| z.im);
    re.dot(&(g * &re)) + im.dot(&(g * &im))
}

fn norm_with<F>(u: &CylinderElement, gram: F) -> Result<f64>
where
    F: Fn(i64, usize) -> Result<Arc<DMatrix<f64>>>,
{
    let mut total = 0.0;
    for xi in u.xis() {
        let c = u.mode(xi);
        if c.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            continue;
        }
        total += quad_form(&*gram(xi, u.m())?, c);
    }
    Ok(total.max(0.0).sqrt())
}

/// Quotient norm of H^{s,phi}(Omega), s >= 0.
pub fn norm_omega(u: &CylinderElement, s: f64, phi: &FunctionParameter) -> Result<f64> {
    norm_with(u, |xi, m| quotient_gram(s, phi, xi, m))
}

/// Norm of the zero extension of u in H^{s,phi}(R^2), s < 1/2.
pub fn norm_omegabar(u: &CylinderElement, s: f64, phi: &FunctionParameter) -> Result<f64> {
    norm_with(u, |xi, m| omegabar_gram(s, phi, xi, m))
}

/// Dual norm sup |(u,v)_Omega| / ||v||_{H^{-s,1/phi}(Omega)}, s < 0.
pub fn norm_dual(u: &CylinderElement, s: f64, phi: &FunctionParameter) -> Result<f64> {
    norm_with(u, |xi, m| dual_gram(s, phi, xi, m))
}

/// Norm of H^{s,phi,(0)}(Omega) for any real s.
pub fn norm_zero(u: &CylinderElement, s: f64, phi: &FunctionParameter) -> Result<f64> {
    norm_with(u, |xi, m| zero_gram(s, phi, xi, m))
}

/// Norm of H^{s,phi,(r)}(Omega) for s outside E_r.
pub fn norm_modified(u: &CylinderElement, s: f64, phi: &FunctionParameter, r: usize) -> Result<f64> {
    if is_critical(s, r) {
        return Err(Error::CriticalIndex(s));
    }
    norm_with(u, |xi, m| modified_gram(s, phi, r, xi, m))
}

/// Norm of H^{s,phi,(r)}(Omega) at s in E_r, by interpolation of the
/// neighbouring modified spaces with eps in (0,1).
pub fn interp_modified(u: &CylinderElement, s: f64, phi: &FunctionParameter, r: usize, eps: f64) -> Result<f64> {
    if !is_critical(s, r) {
        return Err(Error::InvalidParameter(format!("s = {s} is not in E_{r}")));
    }
    norm_with(u, |xi, m| interp_modified_gram(s, phi, r, eps, xi, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_quotient_is_identity() {
        let one = FunctionParameter::one();
        let g = quotient_gram(0.0, &one, 0, 12).unwrap();
        assert!((&*g - DMatrix::<f64>::identity(12, 12)).amax() < 2e-3);
        let gb = omegabar_gram(0.0, &one, 3, 12).unwrap();
        assert!((&*gb - DMatrix::<f64>::identity(12, 12)).amax() < 1e-3);
    }

    #[test]
    fn modified_rejects_critical_index() {
        let one = FunctionParameter::one();
        assert_eq!(modified_gram(1.5, &one, 2, 0, 8).unwrap_err(), Error::CriticalIndex(1.5));
        assert!(modified_gram(1.25, &one, 2, 0, 8).is_ok());
    }
}
