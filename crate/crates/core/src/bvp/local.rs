use nalgebra::DMatrix;
use num_complex::Complex64;

use super::estimates::{k_gram, k_norm};
use super::solver::{solve, DataTuple};
use super::system::BvpSpec;
use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;
use crate::pairs::generalized_eigen;
use crate::scale::{bracket, normal, normal_size, weight, zero_gram, BoundaryElement, CylinderElement};

/// Extra normal modes used to represent chi u.
pub const LOCAL_EXTRA: usize = 32;

/// Open set U = Omega_0 union Gamma_0 with Omega_0 = {t < t_max} and Gamma_0 the circle t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub t_max: f64,
}

/// chi(t) = 1 for t <= a, 0 for t >= b, with a C^6 polynomial transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub a: f64,
    pub b: f64,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Polynomial step of class C^p: 0 for x <= 0, 1 for x >= 1.
pub fn smoothstep(p: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let sum: f64 = (0..=p).map(|n| binom(p + n, n) * binom(2 * p + 1, p - n) * (-x).powi(n as i32)).sum();
    x.powi(p as i32 + 1) * sum
}

impl Cutoff {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 < a && a < b && b <= 1.0) {
            return Err(Error::InvalidParameter(format!("cutoff transition [{a}, {b}] must lie in (0, 1]")));
        }
        Ok(Cutoff { a, b })
    }

    pub fn eval(&self, t: f64) -> f64 {
        1.0 - smoothstep(6, (t - self.a) / (self.b - self.a))
    }

    /// Galerkin matrix of multiplication by chi from P_m to P_{m_out}.
    pub fn matrix(&self, m: usize, m_out: usize) -> DMatrix<f64> {
        normal::multiplication_matrix(m, m_out, |t| self.eval(t), m_out + 96)
    }

    pub fn apply(&self, u: &CylinderElement, m_out: usize) -> CylinderElement {
        let x = self.matrix(u.m(), m_out).map(|v| Complex64::new(v, 0.0));
        let mut out = CylinderElement::zeros(u.k(), m_out);
        for xi in u.xis() {
            *out.mode_mut(xi) = &x * u.mode(xi);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalRow {
    pub k: usize,
    /// ||u||_{s+eps,phi,(2q)}.
    pub global: f64,
    /// ||chi u||_{s+eps,phi,(2q)}.
    pub local: f64,
    /// sup_v ||(A,B)(chi v) - chi (A,B) v||_{H_{sigma+1}} / ||v||_{K_{sigma}} with sigma = s+eps-1.
    pub commutator: f64,
    /// Largest boundary commutator coefficient; chi is locally constant near Gamma.
    pub boundary_commutator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalReport {
    pub rows: Vec<LocalRow>,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi / lo - 1.0
}

impl LocalReport {
    /// last / first of the global norms.
    pub fn global_growth(&self) -> f64 {
        self.rows.last().unwrap().global / self.rows[0].global
    }

    /// (max - min) / min of the localized norms.
    pub fn local_spread(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.local))
    }

    pub fn commutator_spread(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.commutator))
    }
}

/// Dirichlet-type datum that is rough on circle 1 only: the first boundary datum
/// has modes <xi>^{-beta} on t = 1 and vanishes on t = 0; f = 0.
pub fn rough_outside_data(spec: &BvpSpec, k: usize, beta: f64) -> DataTuple {
    let mut data = DataTuple::zeros(spec, k, normal_size(k));
    let mut g = BoundaryElement::zeros(k);
    for xi in g.xis().collect::<Vec<_>>() {
        g.set(1, xi, Complex64::new(bracket(xi as f64).powf(-beta), 0.0));
    }
    data.g[0] = g;
    data
}

/// Datum with exponentially decaying modes in f and every g_j on both circles.
pub fn smooth_data(spec: &BvpSpec, k: usize) -> DataTuple {
    let m = normal_size(k);
    let mut data = DataTuple::zeros(spec, k, m);
    for xi in data.f.xis().collect::<Vec<_>>() {
        let a = (-(xi.abs() as f64)).exp();
        let mode = data.f.mode_mut(xi);
        for n in 0..m {
            mode[n] = Complex64::new(a * (-(n as f64)).exp(), 0.0);
        }
        for (j, g) in data.g.iter_mut().enumerate() {
            g.set(0, xi, Complex64::new(a / (j + 1) as f64, 0.0));
            g.set(1, xi, Complex64::new(0.0, a));
        }
    }
    data
}

fn commutator_constant(spec: &BvpSpec, chi: &Cutoff, sigma: f64, k: usize) -> Result<(f64, f64)> {
    let m = normal_size(k);
    let ml = m + LOCAL_EXTRA;
    let q2 = spec.order();
    let one = FunctionParameter::one();
    let x = chi.matrix(m, ml).map(|v| Complex64::new(v, 0.0));
    let system = spec.green_system();
    let ends = [chi.eval(0.0), chi.eval(1.0)];
    let (mut worst, mut bmax) = (0.0f64, 0.0f64);
    for xi in 0..=(k as i64) {
        let c = spec.operator_matrix(xi, ml) * &x - &x * spec.operator_matrix(xi, m);
        let g = zero_gram(sigma + 1.0 - q2 as f64, &one, xi, ml)?.map(|v| Complex64::new(v, 0.0));
        let mut h = c.adjoint() * g * &c;
        let b = bracket(xi as f64);
        for op in &system.b {
            let w = weight(sigma + 1.0 - op.order(spec.q()) as f64 - 0.5, &one, b);
            for (circle, &end) in ends.iter().enumerate() {
                let row =
                    op.row(spec, xi, ml, circle).transpose() * &x - op.row(spec, xi, m, circle).transpose() * Complex64::new(end, 0.0);
                bmax = bmax.max(row.iter().map(|z| z.norm()).fold(0.0, f64::max));
                h += row.adjoint() * &row * Complex64::new(w, 0.0);
            }
        }
        let kg = k_gram(spec, sigma, &one, xi, m)?;
        let h = super::estimates::realify(&h);
        let kg = super::estimates::realify(&kg.map(|v| Complex64::new(v, 0.0)));
        let (mu, _) = generalized_eigen(&h, &kg)?;
        worst = worst.max(mu.max().max(0.0).sqrt());
    }
    Ok((worst, bmax))
}

/// Solves for each truncation, then compares ||u|| and ||chi u|| in
/// H^{s+eps,phi,(2q)} and measures the commutator (A,B)(chi v) - chi (A,B) v
/// from K_{sigma,(2q)} into H_{sigma+1} with sigma = s + eps - 1.
#[allow(clippy::too_many_arguments)]
pub fn local_smoothness_experiment<F>(
    spec: &BvpSpec,
    data: F,
    region: Region,
    cutoff: Cutoff,
    s: f64,
    eps: f64,
    phi: &FunctionParameter,
    truncations: &[usize],
) -> Result<LocalReport>
where
    F: Fn(usize) -> DataTuple,
{
    if cutoff.b > region.t_max {
        return Err(Error::InvalidParameter(format!("cutoff support reaches t = {} outside the region t < {}", cutoff.b, region.t_max)));
    }
    if eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let target = s + eps;
    let mut rows = Vec::new();
    for &k in truncations {
        let d = data(k);
        let u = solve(spec, &d)?.solution;
        let global = k_norm(spec, &u, target, phi)?;
        let chi_u = cutoff.apply(&u, u.m() + LOCAL_EXTRA);
        let local = k_norm(spec, &chi_u, target, phi)?;
        let (commutator, boundary_commutator) = commutator_constant(spec, &cutoff, target - 1.0, k)?;
        rows.push(LocalRow { k, global, local, commutator, boundary_commutator });
    }
    Ok(LocalReport { rows })
}
