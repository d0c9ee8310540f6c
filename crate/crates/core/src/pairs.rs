//! Finite-dimensional Hilbert pairs and interpolation with a function parameter.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::karamata::{self, FunctionParameter};

const SYM_TOL: f64 = 1e-12;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-8;
/// Singular values in [RANK_AMBIGUOUS, RANK_TOL) make the rank decision ambiguous.
pub const RANK_AMBIGUOUS: f64 = 1e-10;

fn check_spd(name: &str, g: &DMatrix<f64>) -> Result<()> {
    if !g.is_square() {
        return Err(Error::Dimension(format!("{name} is {}x{}", g.nrows(), g.ncols())));
    }
    let scale = g.amax().max(f64::MIN_POSITIVE);
    if (g - g.transpose()).amax() > SYM_TOL * scale {
        return Err(Error::NotPositiveDefinite(format!("{name} is not symmetric")));
    }
    if Cholesky::new(g.clone()).is_none() {
        return Err(Error::NotPositiveDefinite(format!("{name} has a non-positive eigenvalue")));
    }
    Ok(())
}

pub(crate) fn symmetrize(g: &DMatrix<f64>) -> DMatrix<f64> {
    (g + g.transpose()) * 0.5
}

/// Two positive-definite forms on a shared basis, X1 dominating X0.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertPair {
    gram0: DMatrix<f64>,
    gram1: DMatrix<f64>,
    scale: f64,
}

impl HilbertPair {
    /// Validates both Gram matrices and rescales gram1 so that every generalized
    /// eigenvalue of (gram1, gram0) is at least 1.
    pub fn new(gram0: DMatrix<f64>, gram1: DMatrix<f64>) -> Result<Self> {
        check_spd("gram0", &gram0)?;
        check_spd("gram1", &gram1)?;
        if gram0.shape() != gram1.shape() {
            return Err(Error::Dimension("gram0 and gram1 differ in size".into()));
        }
        let gram0 = symmetrize(&gram0);
        let gram1 = symmetrize(&gram1);
        let mu = generalized_eigen(&gram1, &gram0)?;
        let min = mu.0.min();
        let scale = if min < 1.0 { 1.0 / min } else { 1.0 };
        Ok(HilbertPair { gram1: gram1 * scale, gram0, scale })
    }

    pub fn diagonal(w0: &[f64], w1: &[f64]) -> Result<Self> {
        if w0.len() != w1.len() {
            return Err(Error::Dimension("weight vectors differ in length".into()));
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(w0)), DMatrix::from_diagonal(&DVector::from_column_slice(w1)))
    }

    pub fn dim(&self) -> usize {
        self.gram0.nrows()
    }

    pub fn gram0(&self) -> &DMatrix<f64> {
        &self.gram0
    }

    pub fn gram1(&self) -> &DMatrix<f64> {
        &self.gram1
    }

    /// Factor applied to the supplied gram1 during normalization.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Dense text format: a `dim n` header, then gram0 and gram1 row-major.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim {}\n", self.dim());
        for g in [&self.gram0, &self.gram1] {
            for i in 0..g.nrows() {
                let row: Vec<String> = (0..g.ncols()).map(|j| format!("{:e}", g[(i, j)])).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut mats = parse_matrices(text, 2)?;
        let g1 = mats.pop().unwrap();
        let g0 = mats.pop().unwrap();
        Self::new(g0, g1)
    }
}

/// Parses `count` square matrices following a `dim n` header.
pub fn parse_matrices(text: &str, count: usize) -> Result<Vec<DMatrix<f64>>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
    let n: usize =
        header.strip_prefix("dim").and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parse(format!("bad header '{header}'")))?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| Error::Parse("truncated matrix".into()))?;
            let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|e| Error::Parse(e.to_string()))?;
            if row.len() != n {
                return Err(Error::Parse(format!("row has {} entries, expected {n}", row.len())));
            }
            data.extend(row);
        }
        out.push(DMatrix::from_row_slice(n, n, &data));
    }
    Ok(out)
}

/// Solves a v = mu b v for symmetric a and SPD b. Returns (mu ascending, V) with V^T b V = I.
pub fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(b.clone()).ok_or_else(|| Error::NotPositiveDefinite("right-hand form".into()))?;
    let l = chol.l();
    let linv_a = l.solve_lower_triangular(a).ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = l.solve_lower_triangular(&linv_a.transpose()).ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let eig = SymmetricEigen::try_new(symmetrize(&c), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mu = DVector::from_iterator(idx.len(), idx.iter().map(|&i| eig.eigenvalues[i]));
    let w = DMatrix::from_fn(c.nrows(), idx.len(), |r, k| eig.eigenvectors[(r, idx[k])]);
    let v = l.transpose().solve_upper_triangular(&w).ok_or_else(|| Error::Eigen("back substitution failed".into()))?;
    Ok((mu, v))
}

/// Extreme generalized eigenvalues of (a, b).
pub fn form_ratio_extremes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (mu, _) = generalized_eigen(a, b)?;
    Ok((mu.min(), mu.max()))
}

/// The positive self-adjoint J with (u,v)_1 = (Ju,Jv)_0.
#[derive(Debug, Clone)]
pub struct GeneratingOperator {
    pub eigenvalues: DVector<f64>,
    /// Columns are gram0-orthonormal eigenvectors.
    pub eigenvectors: DMatrix<f64>,
}

impl GeneratingOperator {
    /// Matrix of J in the original basis.
    pub fn matrix(&self, gram0: &DMatrix<f64>) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        v * DMatrix::from_diagonal(&self.eigenvalues) * v.transpose() * gram0
    }
}

pub fn generating_operator(pair: &HilbertPair) -> Result<GeneratingOperator> {
    let (mu, v) = generalized_eigen(&pair.gram1, &pair.gram0)?;
    if mu.iter().any(|m| *m <= 0.0) {
        return Err(Error::InvalidParameter("non-positive generalized eigenvalue".into()));
    }
    let op = GeneratingOperator { eigenvalues: mu.map(f64::sqrt), eigenvectors: v };
    let w = &pair.gram0 * &op.eigenvectors;
    let rebuilt = &w * DMatrix::from_diagonal(&op.eigenvalues.map(|l| l * l)) * w.transpose();
    let resid = (&rebuilt - &pair.gram1).amax() / pair.gram1.amax();
    if resid > 1e-10 {
        return Err(Error::Eigen(format!("reconstruction residual {resid:e}")));
    }
    Ok(op)
}

fn psi_on_spectrum(psi: &FunctionParameter, spectrum: &DVector<f64>) -> Result<DVector<f64>> {
    let vals = spectrum.map(|l| psi.evaluate(l));
    if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter(format!("{psi} is not positive and finite on the spectrum")));
    }
    Ok(vals)
}

/// Gram matrix of X_psi: gram0 V diag(1 + psi(lambda)^2) V^T gram0.
pub fn interp_form(pair: &HilbertPair, psi: &FunctionParameter) -> Result<DMatrix<f64>> {
    let op = generating_operator(pair)?;
    interp_form_with(pair, &op, psi)
}

pub fn interp_form_with(pair: &HilbertPair, op: &GeneratingOperator, psi: &FunctionParameter) -> Result<DMatrix<f64>> {
    let vals = psi_on_spectrum(psi, &op.eigenvalues)?;
    let w = &pair.gram0 * &op.eigenvectors;
    let d = DMatrix::from_diagonal(&vals.map(|p| 1.0 + p * p));
    Ok(symmetrize(&(&w * d * w.transpose())))
}

/// Per-mode weights of X_psi for a diagonal pair (w0, w1), without normalization.
pub fn interp_weights(w0: &[f64], w1: &[f64], psi: &FunctionParameter) -> Vec<f64> {
    w0.iter()
        .zip(w1)
        .map(|(&a, &b)| {
            let p = psi.evaluate((b / a).sqrt());
            a * (1.0 + p * p)
        })
        .collect()
}

/// Largest generalized singular value of T from (X, gx) to (Y, gy).
pub fn operator_norm(t: &DMatrix<f64>, gx: &DMatrix<f64>, gy: &DMatrix<f64>) -> Result<f64> {
    let a = symmetrize(&(t.transpose() * gy * t));
    let (mu, _) = generalized_eigen(&a, gx)?;
    Ok(mu.max().max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct OperatorBounds {
    pub norm0: f64,
    pub norm1: f64,
    pub norm_psi: f64,
    /// Recorded c in norm_psi <= c * max(norm0, norm1).
    pub c: f64,
    /// norm0^{1-theta} norm1^theta sqrt(2), with theta the order of psi.
    pub power_bound: f64,
}

impl OperatorBounds {
    pub fn general_bound_holds(&self) -> bool {
        self.norm_psi <= self.c * self.norm0.max(self.norm1) * (1.0 + 1e-9)
    }
}

pub fn interp_operator_bound(x: &HilbertPair, y: &HilbertPair, t: &DMatrix<f64>, psi: &FunctionParameter) -> Result<OperatorBounds> {
    if t.ncols() != x.dim() || t.nrows() != y.dim() {
        return Err(Error::Dimension(format!("T is {}x{}, pairs have dims {} and {}", t.nrows(), t.ncols(), y.dim(), x.dim())));
    }
    let theta = psi.order();
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("{psi} must vary regularly with order in (0,1)")));
    }
    let norm0 = operator_norm(t, &x.gram0, &y.gram0)?;
    let norm1 = operator_norm(t, &x.gram1, &y.gram1)?;
    let gx = interp_form(x, psi)?;
    let gy = interp_form(y, psi)?;
    let norm_psi = operator_norm(t, &gx, &gy)?;
    Ok(OperatorBounds {
        norm0,
        norm1,
        norm_psi,
        c: std::f64::consts::SQRT_2,
        power_bound: norm0.powf(1.0 - theta) * norm1.powf(theta) * std::f64::consts::SQRT_2,
    })
}

fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// Product of pairs: block-diagonal Gram matrices.
pub fn product_pair(pairs: &[HilbertPair]) -> Result<HilbertPair> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("empty product".into()));
    }
    let g0: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.gram0).collect();
    let g1: Vec<&DMatrix<f64>> = pairs.iter().map(|p| &p.gram1).collect();
    HilbertPair::new(block_diag(&g0), block_diag(&g1))
}

/// Block-diagonal direct sum of per-factor interpolation forms.
pub fn direct_sum_forms(pairs: &[HilbertPair], psi: &FunctionParameter) -> Result<DMatrix<f64>> {
    let forms = pairs.iter().map(|p| interp_form(p, psi)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DMatrix<f64>> = forms.iter().collect();
    Ok(block_diag(&refs))
}

#[derive(Debug, Clone, Copy)]
pub struct ReiterationReport {
    /// Extreme norm ratios ||u||_{[X_zeta, X_eta]_chi} / ||u||_{X_psi}.
    pub lower: f64,
    pub upper: f64,
}

impl ReiterationReport {
    pub fn constant(&self) -> f64 {
        self.upper.max(1.0 / self.lower)
    }
}

pub fn reiteration_check(
    pair: &HilbertPair,
    zeta: &FunctionParameter,
    eta: &FunctionParameter,
    chi: &FunctionParameter,
) -> Result<ReiterationReport> {
    let psi = karamata::reiterate(zeta, eta, chi)?;
    let op = generating_operator(pair)?;
    let gz = interp_form_with(pair, &op, zeta)?;
    let ge = interp_form_with(pair, &op, eta)?;
    let outer = HilbertPair::new(gz, ge)?;
    let nested = interp_form(&outer, chi)?;
    let direct = interp_form_with(pair, &op, &psi)?;
    let (lo, hi) = form_ratio_extremes(&nested, &direct)?;
    Ok(ReiterationReport { lower: lo.sqrt(), upper: hi.sqrt() })
}

/// Numerical rank with the ambiguity band enforced.
pub fn numerical_rank(singular_values: &[f64]) -> Result<usize> {
    let max = singular_values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0);
    }
    let mut rank = 0;
    for &s in singular_values {
        let ratio = s / max;
        if ratio >= RANK_TOL {
            rank += 1;
        } else if ratio >= RANK_AMBIGUOUS {
            return Err(Error::AmbiguousRank { ratio });
        }
    }
    Ok(rank)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FredholmCounts {
    pub kernel_dim: usize,
    pub range_codim: usize,
}

impl FredholmCounts {
    pub fn index(&self) -> i64 {
        self.kernel_dim as i64 - self.range_codim as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FredholmReport {
    /// Counts under the X0/Y0, X1/Y1 and X_psi/Y_psi forms.
    pub forms: [FredholmCounts; 3],
}

impl FredholmReport {
    pub fn consistent(&self) -> bool {
        self.forms.iter().all(|f| *f == self.forms[0])
    }
}

fn fredholm_counts(t: &DMatrix<f64>, gx: &DMatrix<f64>, gy: &DMatrix<f64>) -> Result<FredholmCounts> {
    let lx = Cholesky::new(gx.clone()).ok_or_else(|| Error::NotPositiveDefinite("X form".into()))?;
    let ly = Cholesky::new(gy.clone()).ok_or_else(|| Error::NotPositiveDefinite("Y form".into()))?;
    // Orthonormal coordinates: Ly^T T Lx^{-T}.
    let lx_l = lx.l();
    let tt = lx_l.solve_lower_triangular(&(t.transpose() * ly.l())).ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let svd = tt.transpose().svd(false, false);
    let rank = numerical_rank(svd.singular_values.as_slice())?;
    Ok(FredholmCounts { kernel_dim: t.ncols() - rank, range_codim: t.nrows() - rank })
}

pub fn fredholm_interp_check(x: &HilbertPair, y: &HilbertPair, t: &DMatrix<f64>, psi: &FunctionParameter) -> Result<FredholmReport> {
    if t.ncols() != x.dim() || t.nrows() != y.dim() {
        return Err(Error::Dimension("operator does not match pair dimensions".into()));
    }
    let gx = interp_form(x, psi)?;
    let gy = interp_form(y, psi)?;
    Ok(FredholmReport {
        forms: [fredholm_counts(t, &x.gram0, &y.gram0)?, fredholm_counts(t, &x.gram1, &y.gram1)?, fredholm_counts(t, &gx, &gy)?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let p = HilbertPair::diagonal(&[1.0, 2.0], &[4.0, 9.0]).unwrap();
        let q = HilbertPair::from_text(&p.to_text()).unwrap();
        assert!((p.gram1() - q.gram1()).amax() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let g0 = DMatrix::identity(2, 2);
        let g1 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(HilbertPair::new(g0, g1).is_err());
    }

    #[test]
    fn normalization_rescales() {
        let p = HilbertPair::diagonal(&[1.0, 1.0], &[0.25, 4.0]).unwrap();
        assert_eq!(p.scale(), 4.0);
        let op = generating_operator(&p).unwrap();
        assert!((op.eigenvalues.min() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ambiguous_rank_is_reported() {
        assert_eq!(numerical_rank(&[1.0, 1e-3, 1e-12]).unwrap(), 2);
        assert!(matches!(numerical_rank(&[1.0, 1e-9]), Err(Error::AmbiguousRank { .. })));
    }
}
