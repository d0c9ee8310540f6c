use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::{normal, normal_phase, BoundaryElement, CylinderElement};

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// The model problem (c - Laplacian)^q u = f on the cylinder with
/// B_j u = D_nu^{m_j} u = g_j on both circles.
#[derive(Debug, Clone, PartialEq)]
pub struct BvpSpec {
    q: usize,
    c: Complex64,
    m_orders: Vec<usize>,
}

/// Flat config record; c_im defaults to 0 and m_orders to the Dirichlet system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvpRecord {
    pub q: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub c_im: f64,
    #[serde(default)]
    pub m_orders: Option<Vec<usize>>,
}

fn default_c() -> f64 {
    1.0
}

impl BvpSpec {
    pub fn new(q: usize, c: Complex64, m_orders: Vec<usize>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("q must be at least 1".into()));
        }
        if m_orders.len() != q {
            return Err(Error::InvalidParameter(format!("{} boundary orders given, {q} required", m_orders.len())));
        }
        if let Some(m) = m_orders.iter().find(|&&m| m >= 2 * q) {
            return Err(Error::InvalidParameter(format!("boundary order {m} exceeds 2q-1 = {}", 2 * q - 1)));
        }
        let mut sorted = m_orders.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != q {
            return Err(Error::InvalidParameter("boundary orders must be distinct".into()));
        }
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::InvalidParameter("c must be finite".into()));
        }
        Ok(BvpSpec { q, c, m_orders })
    }

    /// Dirichlet system m_j = j - 1.
    pub fn dirichlet(q: usize, c: f64) -> Result<Self> {
        Self::new(q, Complex64::new(c, 0.0), (0..q).collect())
    }

    /// Shift placing the Dirichlet eigenfunction e^{i xi0 theta} sin(pi t) in the kernel of c - Laplacian.
    pub fn kernel_shift(xi0: i64) -> f64 {
        -(PI * PI + (xi0 * xi0) as f64)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> usize {
        2 * self.q
    }

    pub fn c(&self) -> Complex64 {
        self.c
    }

    pub fn m_orders(&self) -> &[usize] {
        &self.m_orders
    }

    pub fn max_boundary_order(&self) -> usize {
        self.m_orders.iter().copied().max().unwrap_or(0)
    }

    /// Whether (A, B) coincides with its formal adjoint problem.
    pub fn is_self_adjoint(&self) -> bool {
        let system = self.green_system();
        let mut adj: Vec<usize> = system.b_plus.iter().map(|b| b.order(self.q)).collect();
        adj.sort_unstable();
        let mut own = self.m_orders.clone();
        own.sort_unstable();
        self.c.im == 0.0 && adj == own
    }

    pub fn from_record(rec: &BvpRecord) -> Result<Self> {
        let m = rec.m_orders.clone().unwrap_or_else(|| (0..rec.q).collect());
        Self::new(rec.q, Complex64::new(rec.c, rec.c_im), m)
    }

    pub fn to_record(&self) -> BvpRecord {
        BvpRecord { q: self.q, c: self.c.re, c_im: self.c.im, m_orders: Some(self.m_orders.clone()) }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let rec: BvpRecord = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_record(&rec)
    }

    /// Tangential symbol c + xi^2 of c - d^2/dtheta^2 on mode xi.
    pub fn symbol(&self, xi: i64) -> Complex64 {
        self.c + (xi as f64) * (xi as f64)
    }

    /// Coefficient A_r(xi) in A = sum_r A_r D_nu^r; on both circles D_nu^2 = -d^2/dt^2.
    pub fn coefficient(&self, r: usize, xi: i64) -> Complex64 {
        if r % 2 == 1 || r > 2 * self.q {
            return Complex64::new(0.0, 0.0);
        }
        let j = r / 2;
        self.symbol(xi).powu((self.q - j) as u32) * binom(self.q, j)
    }

    fn matrix_with(&self, a: Complex64, m: usize) -> DMatrix<Complex64> {
        let d = normal::derivative(m);
        let minus_d2 = -(&d * &d);
        let mut power = DMatrix::<f64>::identity(m, m);
        let mut out = DMatrix::<Complex64>::zeros(m, m);
        for j in 0..=self.q {
            let coef = a.powu((self.q - j) as u32) * binom(self.q, j);
            out += power.map(|x| coef * x);
            power = &minus_d2 * power;
        }
        out
    }

    /// A on mode xi: sum_j binom(q,j) (c + xi^2)^{q-j} (-d^2/dt^2)^j.
    pub fn operator_matrix(&self, xi: i64, m: usize) -> DMatrix<Complex64> {
        self.matrix_with(self.symbol(xi), m)
    }

    /// Formal adjoint A^+ = (conj(c) - Laplacian)^q on mode xi.
    pub fn adjoint_matrix(&self, xi: i64, m: usize) -> DMatrix<Complex64> {
        self.matrix_with(self.symbol(xi).conj(), m)
    }

    /// Green system built from A^{(k)}: with B_j = D_nu^{m_j},
    /// C+_j = -i A^{(m_j+1)}, and for each k - 1 not among the m_j,
    /// C = D_nu^{k-1} and B+ = i A^{(k)}.
    pub fn green_system(&self) -> GreenSystem {
        let b: Vec<BoundaryOp> = self.m_orders.iter().map(|&m| BoundaryOp::Normal(m)).collect();
        let c_plus = self.m_orders.iter().map(|&m| BoundaryOp::Green { k: m + 1, factor: -I }).collect();
        let rest: Vec<usize> = (0..2 * self.q).filter(|p| !self.m_orders.contains(p)).collect();
        let c = rest.iter().map(|&p| BoundaryOp::Normal(p)).collect();
        let b_plus = rest.iter().map(|&p| BoundaryOp::Green { k: p + 1, factor: I }).collect();
        GreenSystem { b, c_plus, c, b_plus }
    }
}

impl fmt::Display for BvpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.m_orders.iter().map(|m| m.to_string()).collect();
        write!(f, "q={} c={}", self.q, self.c.re)?;
        if self.c.im != 0.0 {
            write!(f, "{:+}i", self.c.im)?;
        }
        write!(f, " m=[{}]", m.join(" "))
    }
}

/// A boundary differential expression acting on both circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryOp {
    /// D_nu^p.
    Normal(usize),
    /// factor * A^{(k)}, A^{(k)} = sum_{r=k}^{2q} D_nu^{r-k} A_r^+.
    Green { k: usize, factor: Complex64 },
}

impl BoundaryOp {
    pub fn order(&self, q: usize) -> usize {
        match *self {
            BoundaryOp::Normal(p) => p,
            BoundaryOp::Green { k, .. } => 2 * q - k,
        }
    }

    /// Row functional on the normal coefficients of mode xi, restricted to a circle.
    pub fn row(&self, spec: &BvpSpec, xi: i64, m: usize, circle: usize) -> DVector<Complex64> {
        let at_one = circle == 1;
        match *self {
            BoundaryOp::Normal(p) => {
                let ph = normal_phase(circle, p);
                normal::endpoint_derivative(m, p, at_one).map(|x| ph * x)
            }
            BoundaryOp::Green { k, factor } => {
                let mut out = DVector::<Complex64>::zeros(m);
                for r in k..=2 * spec.q {
                    let a = spec.coefficient(r, xi).conj();
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let coef = factor * a * normal_phase(circle, r - k);
                    out += normal::endpoint_derivative(m, r - k, at_one).map(|x| coef * x);
                }
                out
            }
        }
    }

    pub fn apply(&self, spec: &BvpSpec, u: &CylinderElement) -> BoundaryElement {
        let mut g = BoundaryElement::zeros(u.k());
        for circle in 0..2 {
            for xi in u.xis() {
                let row = self.row(spec, xi, u.m(), circle);
                g.set(circle, xi, row.dot(u.mode(xi)));
            }
        }
        g
    }
}

impl fmt::Display for BoundaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BoundaryOp::Normal(0) => write!(f, "1"),
            BoundaryOp::Normal(p) => write!(f, "D_nu^{p}"),
            BoundaryOp::Green { k, factor } => {
                let s = if factor == I {
                    "i".to_string()
                } else if factor == -I {
                    "-i".to_string()
                } else {
                    format!("({factor})")
                };
                write!(f, "{s} A^({k})")
            }
        }
    }
}

/// Operators of the Green formula
/// (Au,v) + sum (B_j u, C+_j v) = (u,A+v) + sum (C_j u, B+_j v).
#[derive(Debug, Clone, PartialEq)]
pub struct GreenSystem {
    pub b: Vec<BoundaryOp>,
    pub c_plus: Vec<BoundaryOp>,
    pub c: Vec<BoundaryOp>,
    pub b_plus: Vec<BoundaryOp>,
}

impl GreenSystem {
    /// Lines "B_1 = ..., C+_1 = ..." etc.
    pub fn describe(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, ops) in [("B", &self.b), ("C+", &self.c_plus), ("C", &self.c), ("B+", &self.b_plus)] {
            for (j, op) in ops.iter().enumerate() {
                out.push(format!("{name}_{} = {op}", j + 1));
            }
        }
        out
    }
}
