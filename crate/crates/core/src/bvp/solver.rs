use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::system::{BoundaryOp, BvpSpec, GreenSystem, I};
use crate::error::{Error, Result};
use crate::karamata::FunctionParameter;
use crate::pairs::numerical_rank;
use crate::scale::{norm_gamma, norm_zero, normal, trace, BoundaryElement, CylinderElement};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Right-hand side (f, g_1, ..., g_q) of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTuple {
    pub f: CylinderElement,
    pub g: Vec<BoundaryElement>,
}

impl DataTuple {
    pub fn zeros(spec: &BvpSpec, k: usize, m: usize) -> Self {
        DataTuple { f: CylinderElement::zeros(k, m), g: vec![BoundaryElement::zeros(k); spec.q()] }
    }

    pub fn k(&self) -> usize {
        self.f.k()
    }

    pub fn m(&self) -> usize {
        self.f.m()
    }

    pub fn add(&self, other: &Self) -> Self {
        DataTuple { f: self.f.add(&other.f), g: self.g.iter().zip(&other.g).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        DataTuple { f: self.f.scaled(a), g: self.g.iter().map(|g| g.scaled(a)).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let neg = other.scaled(Complex64::new(-1.0, 0.0));
        let d = self.add(&neg);
        let zero = CylinderElement::zeros(d.k(), d.m());
        d.g.iter().map(|g| g.max_abs()).fold(d.f.max_abs_diff(&zero), f64::max)
    }

    /// Norm in H^{s-2q,phi,(0)}(Omega) x prod_j H^{s-m_j-1/2,phi}(Gamma).
    pub fn norm(&self, spec: &BvpSpec, s: f64, phi: &FunctionParameter) -> Result<f64> {
        let mut total = norm_zero(&self.f, s - spec.order() as f64, phi)?.powi(2);
        for (g, &m) in self.g.iter().zip(spec.m_orders()) {
            total += norm_gamma(g, s - m as f64 - 0.5, phi).powi(2);
        }
        Ok(total.sqrt())
    }

    /// The cylinder block followed by one boundary block per g_j.
    pub fn to_text(&self) -> String {
        let mut out = self.f.to_text();
        for g in &self.g {
            out.push_str(&g.to_text());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut blocks: Vec<String> = Vec::new();
        for line in text.lines() {
            if line.starts_with("# ") {
                blocks.push(String::new());
            }
            match blocks.last_mut() {
                Some(b) => {
                    b.push_str(line);
                    b.push('\n');
                }
                None if line.trim().is_empty() => {}
                None => return Err(Error::Parse("data must start with a header line".into())),
            }
        }
        let mut it = blocks.iter();
        let f = CylinderElement::from_text(it.next().ok_or_else(|| Error::Parse("empty input".into()))?)?;
        let g = it.map(|b| BoundaryElement::from_text(b)).collect::<Result<Vec<_>>>()?;
        if g.iter().any(|g| g.k() != f.k()) {
            return Err(Error::Parse("boundary truncation differs from the interior one".into()));
        }
        Ok(DataTuple { f, g })
    }
}

/// (A u, B_1 u, ..., B_q u) with B_j u = D_nu^{m_j} u on both circles.
pub fn apply_operator(spec: &BvpSpec, u: &CylinderElement) -> Result<DataTuple> {
    let mut f = CylinderElement::zeros(u.k(), u.m());
    for xi in u.xis() {
        *f.mode_mut(xi) = spec.operator_matrix(xi, u.m()) * u.mode(xi);
    }
    let g = spec.m_orders().iter().map(|&m| trace(u, m + 1)).collect::<Result<Vec<_>>>()?;
    Ok(DataTuple { f, g })
}

/// The three sides of Green's formula for u, v.
#[derive(Debug, Clone, Copy)]
pub struct GreenTerms {
    /// (Au, v)_Omega.
    pub interior: Complex64,
    /// (u, A^+ v)_Omega.
    pub adjoint: Complex64,
    /// sum_k (D_nu^{k-1} u, A^{(k)} v)_Gamma.
    pub boundary: Complex64,
}

impl GreenTerms {
    pub fn defect(&self) -> f64 {
        (self.interior - self.adjoint + I * self.boundary).norm()
    }

    pub fn scale(&self) -> f64 {
        self.interior.norm().max(self.adjoint.norm()).max(self.boundary.norm())
    }
}

pub fn green_terms(spec: &BvpSpec, u: &CylinderElement, v: &CylinderElement) -> Result<GreenTerms> {
    if (u.k(), u.m()) != (v.k(), v.m()) {
        return Err(Error::Dimension("u and v use different truncations".into()));
    }
    if u.m() < spec.order() {
        return Err(Error::InvalidParameter(format!("basis size {} below the order {}", u.m(), spec.order())));
    }
    let (mut interior, mut adjoint) = (ZERO, ZERO);
    for xi in u.xis() {
        let au = spec.operator_matrix(xi, u.m()) * u.mode(xi);
        let av = spec.adjoint_matrix(xi, u.m()) * v.mode(xi);
        interior += au.dot(&v.mode(xi).conjugate());
        adjoint += u.mode(xi).dot(&av.conjugate());
    }
    let mut boundary = ZERO;
    for k in 1..=spec.order() {
        let du = trace(u, k)?;
        let av = BoundaryOp::Green { k, factor: Complex64::new(1.0, 0.0) }.apply(spec, v);
        boundary += du.inner(&av);
    }
    Ok(GreenTerms { interior, adjoint, boundary })
}

/// |(Au,v)_Omega - (u,A^+v)_Omega + i sum_k (D_nu^{k-1}u, A^{(k)}v)_Gamma|.
pub fn green_defect(spec: &BvpSpec, u: &CylinderElement, v: &CylinderElement) -> Result<f64> {
    Ok(green_terms(spec, u, v)?.defect())
}

/// Square tau system of one tangential mode: the first m - 2q Legendre
/// coefficients of the interior equation followed by the boundary rows
/// (operator-major, circle-minor). The unknown is written as
/// u = J^{2q} w + sum_{i<2q} c_i p_i, which keeps high-order systems well
/// conditioned; rows and columns are scaled to unit max-norm.
pub(crate) struct ModeSystem {
    row_scale: DVector<f64>,
    basis: DMatrix<Complex64>,
    u: DMatrix<Complex64>,
    v_t: DMatrix<Complex64>,
    sigma: DVector<f64>,
    rank: usize,
    null: Vec<DVector<Complex64>>,
}

fn max_norm<'a>(it: impl Iterator<Item = &'a Complex64>) -> f64 {
    let mx = it.map(|z| z.norm()).fold(0.0, f64::max);
    if mx > 0.0 {
        mx
    } else {
        1.0
    }
}

/// Orthonormal basis of the span of the given vectors (modified Gram-Schmidt, twice).
fn orthonormalize(vs: Vec<DVector<Complex64>>) -> Vec<DVector<Complex64>> {
    let mut out: Vec<DVector<Complex64>> = Vec::new();
    for mut v in vs {
        for _ in 0..2 {
            for e in &out {
                let c = e.dotc(&v);
                v -= e * c;
            }
        }
        let n = v.norm();
        out.push(v / Complex64::new(n, 0.0));
    }
    out
}

impl ModeSystem {
    pub(crate) fn new(spec: &BvpSpec, xi: i64, m: usize, adjoint: bool) -> Result<Self> {
        let q2 = spec.order();
        if m < q2 + 2 {
            return Err(Error::InvalidParameter(format!("basis size {m} too small for order {q2}")));
        }
        let system = spec.green_system();
        let (interior, ops) = if adjoint { (spec.adjoint_matrix(xi, m), system.b_plus) } else { (spec.operator_matrix(xi, m), system.b) };
        let mut mat = DMatrix::<Complex64>::zeros(m, m);
        mat.view_mut((0, 0), (m - q2, m)).copy_from(&interior.rows(0, m - q2));
        for (j, op) in ops.iter().enumerate() {
            for c in 0..2 {
                mat.set_row(m - q2 + 2 * j + c, &op.row(spec, xi, m, c).transpose());
            }
        }
        let jm = normal::integration_matrix(m);
        let mut jq = DMatrix::<f64>::identity(m, m);
        for _ in 0..q2 {
            jq = &jm * jq;
        }
        let mut basis = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m - q2 {
            basis.set_column(i, &jq.column(i).map(|x| Complex64::new(x, 0.0)));
        }
        for i in 0..q2 {
            basis[(i, m - q2 + i)] = Complex64::new(1.0, 0.0);
        }
        let mut sys = &mat * &basis;
        let row_scale = DVector::from_fn(m, |i, _| 1.0 / max_norm(sys.row(i).iter()));
        for i in 0..m {
            sys.row_mut(i).scale_mut(row_scale[i]);
        }
        for c in 0..m {
            let s = 1.0 / max_norm(sys.column(c).iter());
            sys.column_mut(c).scale_mut(s);
            basis.column_mut(c).scale_mut(s);
        }
        let svd = sys.svd(true, true);
        let sigma = svd.singular_values.clone();
        let rank = numerical_rank(sigma.as_slice()).map_err(|_| Error::Singular { mode: xi })?;
        let mut out = ModeSystem { row_scale, basis, u: svd.u.unwrap(), v_t: svd.v_t.unwrap(), sigma, rank, null: Vec::new() };
        let raw = out.zero_indices().into_iter().map(|i| &out.basis * out.v_t.row(i).adjoint()).collect();
        out.null = orthonormalize(raw);
        Ok(out)
    }

    fn sorted(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.sigma.len()).collect();
        idx.sort_by(|&a, &b| self.sigma[b].total_cmp(&self.sigma[a]));
        idx
    }

    fn zero_indices(&self) -> Vec<usize> {
        self.sorted().split_off(self.rank)
    }

    fn live_indices(&self) -> Vec<usize> {
        let mut idx = self.sorted();
        idx.truncate(self.rank);
        idx
    }

    pub(crate) fn nullity(&self) -> usize {
        self.sigma.len() - self.rank
    }

    /// Orthonormal null vectors in normal coefficients.
    pub(crate) fn null_vectors(&self) -> Vec<DVector<Complex64>> {
        self.null.clone()
    }

    /// Orthonormal basis of the orthogonal complement of the null space, as columns.
    pub(crate) fn complement(&self) -> DMatrix<Complex64> {
        let m = self.sigma.len();
        let mut p = DMatrix::<Complex64>::identity(m, m);
        for n in &self.null {
            p -= n * n.adjoint();
        }
        let svd = p.svd(true, false);
        let u = svd.u.unwrap();
        let keep: Vec<usize> = (0..m).filter(|&i| svd.singular_values[i] > 0.5).collect();
        DMatrix::from_fn(m, keep.len(), |r, c| u[(r, keep[c])])
    }

    fn left_null(&self) -> Vec<DVector<Complex64>> {
        self.zero_indices().into_iter().map(|i| self.u.column(i).into_owned()).collect()
    }

    /// Scaled right-hand side from the mode coefficients of f and the boundary values.
    pub(crate) fn rhs(&self, f: &DVector<Complex64>, g: &[[Complex64; 2]]) -> DVector<Complex64> {
        let m = self.sigma.len();
        let interior = m - 2 * g.len();
        DVector::from_fn(m, |i, _| {
            let raw = if i < interior { f[i] } else { g[(i - interior) / 2][(i - interior) % 2] };
            raw * self.row_scale[i]
        })
    }

    /// Least-squares solution with zero component along the null space.
    pub(crate) fn solve(&self, rhs: &DVector<Complex64>) -> DVector<Complex64> {
        let mut y = DVector::<Complex64>::zeros(self.sigma.len());
        for i in self.live_indices() {
            let c = self.u.column(i).dotc(rhs) / self.sigma[i];
            y += self.v_t.row(i).adjoint() * c;
        }
        let mut x = &self.basis * y;
        for n in &self.null {
            let c = n.dotc(&x);
            x -= n * c;
        }
        x
    }
}

/// Solves one tangential mode of a problem without kernel on that mode.
pub fn solve_mode(spec: &BvpSpec, xi: i64, f: &DVector<Complex64>, g: &[[Complex64; 2]]) -> Result<DVector<Complex64>> {
    let sys = ModeSystem::new(spec, xi, f.len(), false)?;
    if sys.nullity() > 0 {
        return Err(Error::Singular { mode: xi });
    }
    Ok(sys.solve(&sys.rhs(f, g)))
}

/// A kernel element supported on one tangential mode.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector {
    pub xi: i64,
    pub coeffs: DVector<Complex64>,
}

impl KernelVector {
    pub fn to_element(&self, k: usize) -> CylinderElement {
        let mut u = CylinderElement::zeros(k, self.coeffs.len());
        *u.mode_mut(self.xi) = self.coeffs.clone();
        u
    }
}

/// Bases of N and N^+ (orthonormal in L2(Omega)) and the Green system.
#[derive(Debug, Clone)]
pub struct KernelData {
    pub k: usize,
    pub m: usize,
    pub n: Vec<KernelVector>,
    pub n_plus: Vec<KernelVector>,
    pub green: GreenSystem,
    /// Largest relative residual of (A, B) on the N basis.
    pub n_residual: f64,
    /// Largest relative residual of (A^+, B^+) on the N^+ basis.
    pub n_plus_residual: f64,
}

fn relative_residual(interior: &DMatrix<Complex64>, rows: &[DVector<Complex64>], v: &DVector<Complex64>) -> f64 {
    let a = (interior * v).norm() / interior.norm();
    rows.iter().map(|r| r.dot(v).norm() / r.norm()).fold(a, f64::max)
}

impl KernelData {
    pub fn compute(spec: &BvpSpec, k: usize, m: usize) -> Result<Self> {
        let green = spec.green_system();
        let mut out = KernelData { k, m, n: Vec::new(), n_plus: Vec::new(), green: green.clone(), n_residual: 0.0, n_plus_residual: 0.0 };
        for xi in -(k as i64)..=(k as i64) {
            for adjoint in [false, true] {
                let sys = ModeSystem::new(spec, xi, m, adjoint)?;
                if sys.nullity() == 0 {
                    continue;
                }
                let (interior, ops) =
                    if adjoint { (spec.adjoint_matrix(xi, m), &green.b_plus) } else { (spec.operator_matrix(xi, m), &green.b) };
                let rows: Vec<DVector<Complex64>> = ops.iter().flat_map(|op| (0..2).map(move |c| op.row(spec, xi, m, c))).collect();
                for v in sys.null_vectors() {
                    let res = relative_residual(&interior, &rows, &v);
                    let kv = KernelVector { xi, coeffs: v };
                    if adjoint {
                        out.n_plus_residual = out.n_plus_residual.max(res);
                        out.n_plus.push(kv);
                    } else {
                        out.n_residual = out.n_residual.max(res);
                        out.n.push(kv);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn dim_n(&self) -> usize {
        self.n.len()
    }

    pub fn dim_n_plus(&self) -> usize {
        self.n_plus.len()
    }

    pub fn index(&self) -> i64 {
        self.n.len() as i64 - self.n_plus.len() as i64
    }

    pub fn n_basis(&self) -> Vec<CylinderElement> {
        self.n.iter().map(|v| v.to_element(self.k)).collect()
    }

    pub fn n_plus_basis(&self) -> Vec<CylinderElement> {
        self.n_plus.iter().map(|v| v.to_element(self.k)).collect()
    }

    pub fn descriptors(&self) -> Vec<String> {
        self.green.describe()
    }

    fn check(&self, data_k: usize, data_m: usize) -> Result<()> {
        if (self.k, self.m) != (data_k, data_m) {
            return Err(Error::Dimension(format!("kernels computed for K={} M={}, data has K={data_k} M={data_m}", self.k, self.m)));
        }
        Ok(())
    }
}

/// Functional coefficients w with l_v(F) = w^H (f_xi, g values) on mode v.xi,
/// where l_v(F) = (f, v)_Omega + sum_j (g_j, C+_j v)_Gamma.
fn functional_vector(spec: &BvpSpec, green: &GreenSystem, v: &KernelVector) -> DVector<Complex64> {
    let m = v.coeffs.len();
    let mut w = DVector::<Complex64>::zeros(m + 2 * spec.q());
    w.rows_mut(0, m).copy_from(&v.coeffs);
    for (j, op) in green.c_plus.iter().enumerate() {
        for c in 0..2 {
            w[m + 2 * j + c] = op.row(spec, v.xi, m, c).dot(&v.coeffs);
        }
    }
    w
}

fn stacked(data: &DataTuple, xi: i64) -> DVector<Complex64> {
    let m = data.m();
    let mut out = DVector::<Complex64>::zeros(m + 2 * data.g.len());
    out.rows_mut(0, m).copy_from(data.f.mode(xi));
    for (j, g) in data.g.iter().enumerate() {
        for c in 0..2 {
            out[m + 2 * j + c] = g.get(c, xi);
        }
    }
    out
}

/// l_v(F) = (f, v)_Omega + sum_j (g_j, C+_j v)_Gamma for a kernel vector v of N^+.
pub fn range_functional(spec: &BvpSpec, data: &DataTuple, v: &KernelVector) -> Complex64 {
    let w = functional_vector(spec, &spec.green_system(), v);
    w.dotc(&stacked(data, v.xi))
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Representative with zero N-component.
    pub solution: CylinderElement,
    /// l_v(F) over the N^+ basis: the component removed from f before solving.
    pub defect: Vec<Complex64>,
    /// The same component obtained from the left null vectors of the discrete systems.
    pub discrete_defect: Vec<Complex64>,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
}

impl SolveReport {
    pub fn defect_norm(&self) -> f64 {
        self.defect.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |defect - discrete_defect|.
    pub fn defect_mismatch(&self) -> f64 {
        self.defect.iter().zip(&self.discrete_defect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn solvable(&self, tol: f64) -> bool {
        self.defect_norm() <= tol
    }
}

pub fn solve(spec: &BvpSpec, data: &DataTuple) -> Result<SolveReport> {
    let kernels = KernelData::compute(spec, data.k(), data.m())?;
    solve_with(spec, data, &kernels)
}

pub fn solve_with(spec: &BvpSpec, data: &DataTuple, kernels: &KernelData) -> Result<SolveReport> {
    kernels.check(data.k(), data.m())?;
    if data.g.len() != spec.q() {
        return Err(Error::Dimension(format!("{} boundary data for q = {}", data.g.len(), spec.q())));
    }
    let m = data.m();
    let mut solution = CylinderElement::zeros(data.k(), m);
    let mut defect = Vec::new();
    let mut discrete_defect = Vec::new();
    for xi in data.f.xis() {
        let sys = ModeSystem::new(spec, xi, m, false)?;
        let n_here = kernels.n.iter().filter(|v| v.xi == xi).count();
        let plus: Vec<&KernelVector> = kernels.n_plus.iter().filter(|v| v.xi == xi).collect();
        if sys.nullity() != n_here || sys.nullity() != plus.len() {
            return Err(Error::Singular { mode: xi });
        }
        let g: Vec<[Complex64; 2]> = data.g.iter().map(|g| [g.get(0, xi), g.get(1, xi)]).collect();
        let mut f = data.f.mode(xi).clone();
        if !plus.is_empty() {
            let full = stacked(data, xi);
            let alpha: Vec<Complex64> = plus.iter().map(|v| functional_vector(spec, &kernels.green, v).dotc(&full)).collect();
            // Discrete counterpart: alpha_d = (Y^H R_V)^{-1} Y^H rhs(F).
            let y = sys.left_null();
            let zero_g = vec![[ZERO; 2]; g.len()];
            let d = plus.len();
            let ryv = DMatrix::from_fn(d, d, |a, b| y[a].dotc(&sys.rhs(&plus[b].coeffs, &zero_g)));
            let yb = DVector::from_fn(d, |a, _| y[a].dotc(&sys.rhs(&f, &g)));
            let alpha_d =
                ryv.lu().solve(&yb).ok_or_else(|| Error::IllConditioned(format!("adjoint kernel at mode {xi} is not resolved")))?;
            for (a, v) in alpha.iter().zip(&plus) {
                f -= &v.coeffs * *a;
            }
            defect.extend(alpha);
            discrete_defect.extend(alpha_d.iter().copied());
        }
        *solution.mode_mut(xi) = sys.solve(&sys.rhs(&f, &g));
    }
    Ok(SolveReport { solution, defect, discrete_defect, kernel_dim: kernels.dim_n(), cokernel_dim: kernels.dim_n_plus() })
}

/// The oblique projectors P (onto the (.,N)_Omega-complement of N) and Q^+
/// (removing the defect component along {(v,0,...,0) : v in N^+}).
#[derive(Debug, Clone)]
pub struct Projectors {
    spec: BvpSpec,
    kernels: KernelData,
}

/// The projectors are built from the kernels alone; the index (s, phi) is
/// accepted for symmetry with the spaces they act on and does not enter.
pub fn projectors(spec: &BvpSpec, s: f64, phi: &FunctionParameter, k: usize, m: usize) -> Result<Projectors> {
    if !s.is_finite() || !phi.evaluate(1.0).is_finite() {
        return Err(Error::InvalidParameter("index must be finite".into()));
    }
    Ok(Projectors { spec: spec.clone(), kernels: KernelData::compute(spec, k, m)? })
}

impl Projectors {
    pub fn from_kernels(spec: &BvpSpec, kernels: KernelData) -> Self {
        Projectors { spec: spec.clone(), kernels }
    }

    pub fn kernels(&self) -> &KernelData {
        &self.kernels
    }

    pub fn apply_p(&self, u: &CylinderElement) -> Result<CylinderElement> {
        self.kernels.check(u.k(), u.m())?;
        let mut out = u.clone();
        for v in &self.kernels.n {
            let c = v.coeffs.dotc(u.mode(v.xi));
            *out.mode_mut(v.xi) -= &v.coeffs * c;
        }
        Ok(out)
    }

    pub fn apply_q_plus(&self, data: &DataTuple) -> Result<DataTuple> {
        self.kernels.check(data.k(), data.m())?;
        let mut out = data.clone();
        for v in &self.kernels.n_plus {
            let a = functional_vector(&self.spec, &self.kernels.green, v).dotc(&stacked(data, v.xi));
            *out.f.mode_mut(v.xi) -= &v.coeffs * a;
        }
        Ok(out)
    }

    /// P on the normal coefficients of mode xi.
    pub fn p_matrix(&self, xi: i64) -> DMatrix<Complex64> {
        let m = self.kernels.m;
        let mut p = DMatrix::<Complex64>::identity(m, m);
        for v in self.kernels.n.iter().filter(|v| v.xi == xi) {
            p -= &v.coeffs * v.coeffs.adjoint();
        }
        p
    }

    /// Q^+ on (f_xi, g_1 on both circles, ..., g_q on both circles).
    pub fn q_plus_matrix(&self, xi: i64) -> DMatrix<Complex64> {
        let m = self.kernels.m;
        let n = m + 2 * self.spec.q();
        let mut q = DMatrix::<Complex64>::identity(n, n);
        for v in self.kernels.n_plus.iter().filter(|v| v.xi == xi) {
            let w = functional_vector(&self.spec, &self.kernels.green, v);
            let mut e = DVector::<Complex64>::zeros(n);
            e.rows_mut(0, m).copy_from(&v.coeffs);
            q -= e * w.adjoint();
        }
        q
    }
}
