use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use super::local::Cutoff;
use super::solver::{solve_mode, DataTuple};
use super::system::BvpSpec;
use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;
use crate::scale::{bracket, hoermander_condition, normal, quad_form, weight, zero_gram, HoermanderReport, Verdict};

type NormFn = Box<dyn Fn(&ModalData) -> Result<f64>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Data of one tangential mode: normal coefficients of f and the values of
/// each g_j on the two circles.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    pub f: DVector<Complex64>,
    pub g: Vec<[Complex64; 2]>,
}

/// Data supported on a finite, possibly very sparse, set of tangential modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalData {
    pub m: usize,
    pub modes: BTreeMap<i64, ModeData>,
}

impl ModalData {
    pub fn from_dense(data: &DataTuple) -> Self {
        let mut modes = BTreeMap::new();
        for xi in data.f.xis() {
            let f = data.f.mode(xi).clone();
            let g: Vec<[Complex64; 2]> = data.g.iter().map(|g| [g.get(0, xi), g.get(1, xi)]).collect();
            if f.iter().chain(g.iter().flatten()).any(|z| *z != ZERO) {
                modes.insert(xi, ModeData { f, g });
            }
        }
        ModalData { m: data.m(), modes }
    }

    /// Lacunary first boundary datum on circle 1:
    /// g(theta) = sum_{j=1}^{J} a_j cos(2^j theta), a_j = phi(<2^j>)^{-2} / S_J^{1/2},
    /// S_J = sum_j phi(<2^j>)^{-2}, so that sum_j phi(<2^j>)^2 a_j^2 = 1 and
    /// sup |g| = g(0) = S_J^{1/2}.
    pub fn lacunary(spec: &BvpSpec, phi: &FunctionParameter, octaves: u32, m: usize) -> Result<Self> {
        if octaves == 0 || octaves > 60 {
            return Err(Error::InvalidParameter(format!("octave count {octaves} outside 1..=60")));
        }
        let inv: Vec<f64> = (1..=octaves)
            .map(|j| {
                let p = phi.evaluate(bracket(2f64.powi(j as i32)));
                1.0 / (p * p)
            })
            .collect();
        let norm = inv.iter().sum::<f64>().sqrt();
        let mut modes = BTreeMap::new();
        for (j, w) in (1..=octaves).zip(&inv) {
            let xi = 1i64 << j;
            let half = Complex64::new(0.5 * w / norm, 0.0);
            for x in [xi, -xi] {
                let mut g = vec![[ZERO; 2]; spec.q()];
                g[0][1] = half;
                modes.insert(x, ModeData { f: DVector::zeros(m), g });
            }
        }
        Ok(ModalData { m, modes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataNorm {
    pub label: String,
    /// Norm at each refinement.
    pub values: Vec<f64>,
}

impl DataNorm {
    /// Stable under the last refinement (growth at most 10%).
    pub fn finite(&self) -> bool {
        match self.values.as_slice() {
            [.., a, b] => b.is_finite() && *b <= 1.1 * a.max(1e-300),
            [a] => a.is_finite(),
            [] => true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalReport {
    pub hoermander: HoermanderReport,
    pub norms: Vec<DataNorm>,
    /// All norms finite and the integral condition converges.
    pub classical_expected: bool,
    /// Per refinement: sup over an interior grid of |d^alpha u|, |alpha| <= 2q.
    pub sup_interior: Vec<f64>,
    /// Per refinement: sup over a grid of the closure of |d^alpha u|, |alpha| <= max m_j.
    pub sup_closure: Vec<f64>,
}

impl ClassicalReport {
    pub fn norms_finite(&self) -> bool {
        self.norms.iter().all(|n| n.finite())
    }

    /// last / first of the closure sup-norms.
    pub fn closure_growth(&self) -> f64 {
        self.sup_closure.last().unwrap() / self.sup_closure[0]
    }

    pub fn interior_growth(&self) -> f64 {
        self.sup_interior.last().unwrap() / self.sup_interior[0]
    }
}

/// Local interior cutoff for the H^{n/2,phi}_loc part of the data norms.
fn interior_cutoff(t: f64) -> f64 {
    let left = Cutoff { a: 0.1, b: 0.25 };
    let right = Cutoff { a: 0.75, b: 0.9 };
    (1.0 - left.eval(t)) * right.eval(t)
}

fn f_norm(data: &ModalData, s: f64, phi: &FunctionParameter, local: bool) -> Result<f64> {
    let mut total = 0.0;
    let ml = data.m + 32;
    let zeta = normal::multiplication_matrix(data.m, ml, interior_cutoff, ml + 96).map(|v| Complex64::new(v, 0.0));
    for (&xi, md) in &data.modes {
        if md.f.iter().all(|z| *z == ZERO) {
            continue;
        }
        total += if local {
            quad_form(&*zero_gram(s, phi, xi, ml)?, &(&zeta * &md.f))
        } else {
            quad_form(&*zero_gram(s, phi, xi, data.m)?, &md.f)
        };
    }
    Ok(total.sqrt())
}

fn g_norm(data: &ModalData, j: usize, s: f64, phi: &FunctionParameter) -> f64 {
    data.modes
        .iter()
        .map(|(&xi, md)| weight(s, phi, bracket(xi as f64)) * (md.g[j][0].norm_sqr() + md.g[j][1].norm_sqr()))
        .sum::<f64>()
        .sqrt()
}

fn sup_derivatives(solution: &BTreeMap<i64, DVector<Complex64>>, m: usize, max_order: usize, ts: &[f64], thetas: &[f64]) -> f64 {
    let p = normal::eval_matrix(m, ts);
    let mut worst: f64 = 0.0;
    for b in 0..=max_order {
        let db = normal::derivative_power(m, b).map(|v| Complex64::new(v, 0.0));
        let profiles: Vec<(i64, Vec<Complex64>)> = solution
            .iter()
            .map(|(&xi, u)| {
                let c = &db * u;
                (xi, (0..ts.len()).map(|j| (0..m).map(|n| c[n] * p[(n, j)]).sum()).collect())
            })
            .collect();
        for a in 0..=(max_order - b) {
            for &th in thetas {
                for j in 0..ts.len() {
                    let v: Complex64 = profiles
                        .iter()
                        .map(|(xi, prof)| {
                            let x = *xi as f64;
                            let phase = Complex64::from_polar(1.0, (x * th).rem_euclid(2.0 * PI));
                            Complex64::new(0.0, x).powu(a as u32) * phase * prof[j]
                        })
                        .sum();
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    worst
}

/// Checks the data conditions for a classical solution at index sigma with
/// parameter phi over a refinement sequence, decides the integral condition,
/// and records sup-norms of derivatives of the computed solutions.
pub fn classical_criterion(spec: &BvpSpec, refinements: &[ModalData], sigma: f64, phi: &FunctionParameter) -> Result<ClassicalReport> {
    if sigma <= -0.5 {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must exceed -1/2")));
    }
    if refinements.is_empty() {
        return Err(Error::InvalidParameter("no data given".into()));
    }
    let q2 = spec.order();
    let mmax = spec.max_boundary_order();
    let one = FunctionParameter::one();
    let mut labels: Vec<(String, NormFn)> = Vec::new();
    {
        let p = phi.clone();
        labels.push(("f in H^{1,phi}_loc".into(), Box::new(move |d| f_norm(d, 1.0, &p, true))));
        let p = phi.clone();
        let s = mmax as f64 - q2 as f64 + 1.0;
        labels.push((format!("f in H^{{{s},phi,(0)}}"), Box::new(move |d| f_norm(d, s, &p, false))));
        let o = one.clone();
        labels.push((format!("f in H^{{{sigma},(0)}}"), Box::new(move |d| f_norm(d, sigma, &o, false))));
    }
    for (j, &mj) in spec.m_orders().iter().enumerate() {
        let s1 = mmax as f64 - mj as f64 + 0.5;
        let p = phi.clone();
        labels.push((format!("g_{} in H^{{{s1},phi}}", j + 1), Box::new(move |d| Ok(g_norm(d, j, s1, &p)))));
        let s2 = sigma + q2 as f64 - mj as f64 - 0.5;
        let o = one.clone();
        labels.push((format!("g_{} in H^{{{s2}}}", j + 1), Box::new(move |d| Ok(g_norm(d, j, s2, &o)))));
    }
    let mut norms = Vec::new();
    for (label, f) in &labels {
        let values = refinements.iter().map(f).collect::<Result<Vec<_>>>()?;
        norms.push(DataNorm { label: label.clone(), values });
    }
    let hoermander = hoermander_condition(phi, 1e12);
    let classical_expected = norms.iter().all(|n| n.finite()) && hoermander.verdict == Verdict::Converges;

    let thetas: Vec<f64> = (0..128).map(|i| 2.0 * PI * i as f64 / 128.0).collect();
    let closure_t: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
    let interior_t: Vec<f64> = (0..=16).map(|i| 0.25 + 0.5 * i as f64 / 16.0).collect();
    let (mut sup_interior, mut sup_closure) = (Vec::new(), Vec::new());
    for d in refinements {
        let mut sol = BTreeMap::new();
        for (&xi, md) in &d.modes {
            sol.insert(xi, solve_mode(spec, xi, &md.f, &md.g)?);
        }
        sup_interior.push(sup_derivatives(&sol, d.m, q2, &interior_t, &thetas));
        sup_closure.push(sup_derivatives(&sol, d.m, mmax, &closure_t, &thetas));
    }
    Ok(ClassicalReport { hoermander, norms, classical_expected, sup_interior, sup_closure })
}
