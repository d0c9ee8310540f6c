use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;

use super::solver::{apply_operator, KernelData, ModeSystem, Projectors};
use super::system::BvpSpec;
use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;
use crate::pairs::{generalized_eigen, numerical_rank};
use crate::scale::sample::{random_cylinder, Decay};
use crate::scale::{
    bracket, interp_modified, interp_modified_gram, is_critical, modified_gram, norm_modified, normal_size, weight, zero_gram,
    CylinderElement,
};

/// Interpolation parameter used for K-norms at indices in E_{2q}.
pub const CRITICAL_EPS: f64 = 0.5;

/// ||u||_{K_{s,phi,(2q)}}, the norm of the Roitberg vector of u.
pub fn k_norm(spec: &BvpSpec, u: &CylinderElement, s: f64, phi: &FunctionParameter) -> Result<f64> {
    let r = spec.order();
    if is_critical(s, r) {
        interp_modified(u, s, phi, r, CRITICAL_EPS)
    } else {
        norm_modified(u, s, phi, r)
    }
}

pub(crate) fn k_gram(spec: &BvpSpec, s: f64, phi: &FunctionParameter, xi: i64, m: usize) -> Result<DMatrix<f64>> {
    let r = spec.order();
    let g = if is_critical(s, r) { interp_modified_gram(s, phi, r, CRITICAL_EPS, xi, m)? } else { modified_gram(s, phi, r, xi, m)? };
    Ok((*g).clone())
}

/// Hermitian form of ||(A,B)u||^2_{H_{s,phi}} on the normal coefficients of mode xi.
fn data_form(spec: &BvpSpec, s: f64, phi: &FunctionParameter, xi: i64, m: usize) -> Result<DMatrix<Complex64>> {
    let a = spec.operator_matrix(xi, m);
    let gf = zero_gram(s - spec.order() as f64, phi, xi, m)?.map(|x| Complex64::new(x, 0.0));
    let mut h = a.adjoint() * gf * &a;
    let b = bracket(xi as f64);
    for op in &spec.green_system().b {
        let w = weight(s - op.order(spec.q()) as f64 - 0.5, phi, b);
        for c in 0..2 {
            let row = op.row(spec, xi, m, c);
            h += row.conjugate() * row.transpose() * Complex64::new(w, 0.0);
        }
    }
    Ok(h)
}

/// Real symmetric matrix of the quadratic form z -> z^H H z on (Re z, Im z).
pub(crate) fn realify(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub s: f64,
    pub k: usize,
    /// Extremes of ||(A,B)u|| / ||u||_K over the random sample.
    pub min: f64,
    pub max: f64,
    /// Extremes over all of P_M on each mode (zero N-component).
    pub worst_min: f64,
    pub worst_max: f64,
}

/// Random elements with a fixed seed; the envelope makes the K-norm at s finite for all truncations.
pub fn sample_elements(k: usize, s: f64, seed: u64, count: usize) -> Vec<CylinderElement> {
    let m = normal_size(k);
    let decay = Decay::for_smoothness(s);
    (0..count as u64).map(|i| random_cylinder(k, m, seed, i, decay)).collect()
}

/// ||(A,B)u||_{H_{s,phi}} / ||u||_{K_{s,phi,(2q)}} over a sample with zero N-component.
pub fn isomorphism_ratio(spec: &BvpSpec, s: f64, phi: &FunctionParameter, k: usize, sample: usize, seed: u64) -> Result<RatioReport> {
    let m = normal_size(k);
    let kernels = KernelData::compute(spec, k, m)?;
    let proj = Projectors::from_kernels(spec, kernels);
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    for u in sample_elements(k, s, seed, sample) {
        let u = proj.apply_p(&u)?;
        let r = apply_operator(spec, &u)?.norm(spec, s, phi)? / k_norm(spec, &u, s, phi)?;
        min = min.min(r);
        max = max.max(r);
    }
    let (mut worst_min, mut worst_max) = (f64::INFINITY, 0.0f64);
    let symmetric = spec.c().im == 0.0;
    for xi in -(k as i64)..=(k as i64) {
        if symmetric && xi < 0 {
            continue;
        }
        let z = ModeSystem::new(spec, xi, m, false)?.complement();
        let h = z.adjoint() * data_form(spec, s, phi, xi, m)? * &z;
        let g = z.adjoint() * k_gram(spec, s, phi, xi, m)?.map(|x| Complex64::new(x, 0.0)) * &z;
        let (mu, _) = generalized_eigen(&realify(&h), &realify(&g))?;
        worst_min = worst_min.min(mu.min().max(0.0).sqrt());
        worst_max = worst_max.max(mu.max().sqrt());
    }
    Ok(RatioReport { s, k, min, max, worst_min, worst_max })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    pub k: usize,
    /// Smallest c with ||u||_s <= c (||(A,B)u||_s + ||u||_{sigma,1}) over the sample.
    pub constant: f64,
    /// The same without the sigma-term; infinite when the sample meets N.
    pub constant_without_sigma: f64,
    /// Sample elements with a nonzero N-component.
    pub kernel_elements: usize,
}

impl AprioriReport {
    /// Whether the lower-order term is needed for the estimate on this sample.
    pub fn sigma_term_active(&self) -> bool {
        !self.constant_without_sigma.is_finite()
    }
}

/// Empirical constant of ||u||_{s,phi,(2q)} <= c (||(A,B)u||_{H_{s,phi}} + ||u||_{sigma,1,(2q)}).
/// When N is nontrivial the sample also contains the kernel basis and
/// random elements shifted along it.
pub fn apriori_check(
    spec: &BvpSpec,
    s: f64,
    phi: &FunctionParameter,
    sigma: f64,
    k: usize,
    sample: usize,
    seed: u64,
) -> Result<AprioriReport> {
    if sigma >= s {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be below s = {s}")));
    }
    let m = normal_size(k);
    let kernels = KernelData::compute(spec, k, m)?;
    let mut elements = sample_elements(k, s, seed, sample);
    let kernel_elements = kernels.n_basis();
    let shifted: Vec<CylinderElement> =
        elements.iter().zip(kernel_elements.iter().cycle()).map(|(u, n)| u.add(&n.scaled(Complex64::new(4.0, 1.0)))).collect();
    let with_kernel = kernel_elements.len() + if kernel_elements.is_empty() { 0 } else { shifted.len() };
    elements.extend(kernel_elements);
    if with_kernel > 0 {
        elements.extend(shifted);
    }
    let one = FunctionParameter::one();
    let (mut constant, mut without) = (0.0f64, 0.0f64);
    for u in &elements {
        let lhs = k_norm(spec, u, s, phi)?;
        let au = apply_operator(spec, u)?.norm(spec, s, phi)?;
        let low = k_norm(spec, u, sigma, &one)?;
        constant = constant.max(lhs / (au + low));
        without = without.max(if au <= 1e-9 * lhs { f64::INFINITY } else { lhs / au });
    }
    Ok(AprioriReport { k, constant, constant_without_sigma: without, kernel_elements: with_kernel })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexRow {
    pub s: f64,
    pub phi: String,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
}

impl IndexRow {
    pub fn index(&self) -> i64 {
        self.kernel_dim as i64 - self.cokernel_dim as i64
    }
}

fn complex_cholesky_l(g: &DMatrix<f64>, what: &str) -> Result<DMatrix<Complex64>> {
    let c = Cholesky::new(g.map(|x| Complex64::new(x, 0.0))).ok_or_else(|| Error::NotPositiveDefinite(what.into()))?;
    Ok(c.l())
}

/// Rank deficiencies of the discretized operator in orthonormal coordinates of
/// K_{s,phi,(2q)} and of the data space, summed over modes.
pub fn observed_index(spec: &BvpSpec, s: f64, phi: &FunctionParameter, k: usize) -> Result<IndexRow> {
    let m = normal_size(k);
    let q2 = spec.order();
    let system = spec.green_system();
    let (mut kernel_dim, mut cokernel_dim) = (0, 0);
    for xi in -(k as i64)..=(k as i64) {
        let a = spec.operator_matrix(xi, m);
        let mut t = DMatrix::<Complex64>::zeros(m, m);
        t.view_mut((0, 0), (m - q2, m)).copy_from(&a.rows(0, m - q2));
        let mut gy = DMatrix::<f64>::zeros(m, m);
        let gf = zero_gram(s - q2 as f64, phi, xi, m)?;
        gy.view_mut((0, 0), (m - q2, m - q2)).copy_from(&gf.view((0, 0), (m - q2, m - q2)));
        let b = bracket(xi as f64);
        for (j, op) in system.b.iter().enumerate() {
            for c in 0..2 {
                let i = m - q2 + 2 * j + c;
                t.set_row(i, &op.row(spec, xi, m, c).transpose());
                gy[(i, i)] = weight(s - op.order(spec.q()) as f64 - 0.5, phi, b);
            }
        }
        let lx = complex_cholesky_l(&k_gram(spec, s, phi, xi, m)?, "solution space")?;
        let ly = complex_cholesky_l(&gy, "data space")?;
        // Ly^H T Lx^{-H}: solve Lx Z = (Ly^H T)^H, then transpose back.
        let rhs = (ly.adjoint() * &t).adjoint();
        let z = lx.solve_lower_triangular(&rhs).ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
        let sv = z.adjoint().singular_values();
        let rank = numerical_rank(sv.as_slice())?;
        kernel_dim += m - rank;
        cokernel_dim += m - rank;
    }
    Ok(IndexRow { s, phi: phi.to_string(), kernel_dim, cokernel_dim })
}

/// observed_index over several indices.
pub fn index_bookkeeping(spec: &BvpSpec, indices: &[(f64, FunctionParameter)], k: usize) -> Result<Vec<IndexRow>> {
    indices.iter().map(|(s, phi)| observed_index(spec, *s, phi, k)).collect()
}

/// (dim N, dim N^+) and the kernel residuals, for comparison with observed_index.
pub fn kernel_counts(spec: &BvpSpec, k: usize) -> Result<(usize, usize)> {
    let kd = KernelData::compute(spec, k, normal_size(k))?;
    Ok((kd.dim_n(), kd.dim_n_plus()))
}
