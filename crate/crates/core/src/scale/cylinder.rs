use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DVector;
use num_complex::Complex64;

use super::lattice::{field, header_fields, parse_f64};
use super::normal;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// u(theta, t) = sum_{|xi| <= k} e^{i xi theta} sum_{n < m} c[xi][n] p_n(t).
///
/// The L2(Omega) inner product with measure dtheta/(2 pi) dt is the
/// coefficient dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderElement {
    k: usize,
    m: usize,
    modes: Vec<DVector<Complex64>>,
}

impl CylinderElement {
    pub fn zeros(k: usize, m: usize) -> Self {
        CylinderElement { k, m, modes: vec![DVector::from_element(m, ZERO); 2 * k + 1] }
    }

    pub fn from_modes(k: usize, m: usize, modes: Vec<DVector<Complex64>>) -> Result<Self> {
        if modes.len() != 2 * k + 1 || modes.iter().any(|v| v.len() != m) {
            return Err(Error::Dimension(format!("expected {} modes of length {m}", 2 * k + 1)));
        }
        Ok(CylinderElement { k, m, modes })
    }

    /// Single tangential mode xi with normal profile f, projected onto P_m.
    pub fn mode_profile<F: Fn(f64) -> f64>(k: usize, m: usize, xi: i64, f: F) -> Self {
        let mut u = Self::zeros(k, m);
        let c = normal::project(m, f, m + 32);
        *u.mode_mut(xi) = c.map(|x| Complex64::new(x, 0.0));
        u
    }

    /// L2 projection of a function of (theta, t) onto the truncated basis.
    pub fn project<F: Fn(f64, f64) -> Complex64>(k: usize, m: usize, f: F) -> Self {
        let nt = 4 * k + 8;
        let nq = m + 32;
        let (t, w) = normal::gauss_legendre(nq);
        let p = normal::eval_matrix(m, &t);
        let mut u = Self::zeros(k, m);
        let thetas: Vec<f64> = (0..nt).map(|j| 2.0 * PI * j as f64 / nt as f64).collect();
        for (q, &tq) in t.iter().enumerate() {
            let vals: Vec<Complex64> = thetas.iter().map(|&th| f(th, tq)).collect();
            for xi in -(k as i64)..=(k as i64) {
                let c: Complex64 =
                    thetas.iter().zip(&vals).map(|(&th, v)| v * Complex64::from_polar(1.0, -(xi as f64) * th)).sum::<Complex64>()
                        / nt as f64;
                let target = u.mode_mut(xi);
                for n in 0..m {
                    target[n] += c * p[(n, q)] * w[q];
                }
            }
        }
        u
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn xis(&self) -> impl Iterator<Item = i64> {
        -(self.k as i64)..=(self.k as i64)
    }

    pub fn mode(&self, xi: i64) -> &DVector<Complex64> {
        &self.modes[(xi + self.k as i64) as usize]
    }

    pub fn mode_mut(&mut self, xi: i64) -> &mut DVector<Complex64> {
        &mut self.modes[(xi + self.k as i64) as usize]
    }

    pub fn modes(&self) -> &[DVector<Complex64>] {
        &self.modes
    }

    /// Truncates or zero-pads to (k, m).
    pub fn resized(&self, k: usize, m: usize) -> Self {
        let mut out = Self::zeros(k, m);
        for xi in out.xis().collect::<Vec<_>>() {
            if xi.unsigned_abs() as usize > self.k {
                continue;
            }
            let src = self.mode(xi);
            let dst = out.mode_mut(xi);
            for n in 0..m.min(self.m) {
                dst[n] = src[n];
            }
        }
        out
    }

    /// (u, v)_Omega, linear in u and antilinear in v.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!((self.k, self.m), (other.k, other.m), "truncations differ");
        self.modes.iter().zip(&other.modes).map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum::<Complex64>()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        CylinderElement { k: self.k, m: self.m, modes: self.modes.iter().map(|v| v * a).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.k, self.m), (other.k, other.m), "truncations differ");
        CylinderElement { k: self.k, m: self.m, modes: self.modes.iter().zip(&other.modes).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).modes.iter().flat_map(|v| v.iter().map(|c| c.norm())).fold(0.0, f64::max)
    }

    /// Point value u(theta, t).
    pub fn eval(&self, theta: f64, t: f64) -> Complex64 {
        let p = normal::eval_matrix(self.m, &[t]);
        self.xis()
            .map(|xi| {
                let v = self.mode(xi);
                let prof: Complex64 = (0..self.m).map(|n| v[n] * p[(n, 0)]).sum();
                prof * Complex64::from_polar(1.0, xi as f64 * theta)
            })
            .sum()
    }

    /// Text format: header, then "xi n re im" per coefficient.
    pub fn to_text(&self) -> String {
        let mut out = format!("# cylinder K={} M={} basis=legendre\n", self.k, self.m);
        for xi in self.xis() {
            for (n, c) in self.mode(xi).iter().enumerate() {
                writeln!(out, "{xi} {n} {:e} {:e}", c.re, c.im).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let fields = header_fields(header, "cylinder")?;
        let k: usize = field(&fields, "K")?;
        let m: usize = field(&fields, "M")?;
        if let Ok(basis) = field::<String>(&fields, "basis") {
            if basis != "legendre" {
                return Err(Error::Parse(format!("unknown basis '{basis}'")));
            }
        }
        let mut u = Self::zeros(k, m);
        for line in lines {
            let p: Vec<&str> = line.split_whitespace().collect();
            if p.len() != 4 {
                return Err(Error::Parse(format!("bad coefficient line '{line}'")));
            }
            let xi: i64 = p[0].parse().map_err(|_| Error::Parse(format!("bad mode in '{line}'")))?;
            let n: usize = p[1].parse().map_err(|_| Error::Parse(format!("bad index in '{line}'")))?;
            if xi.unsigned_abs() as usize > k || n >= m {
                return Err(Error::Parse(format!("coefficient ({xi},{n}) outside the truncation")));
            }
            u.mode_mut(xi)[n] = Complex64::new(parse_f64(p[2])?, parse_f64(p[3])?);
        }
        Ok(u)
    }
}

/// Fourier coefficients on the two boundary circles; circle 0 is t = 0, circle 1 is t = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryElement {
    k: usize,
    circles: [Vec<Complex64>; 2],
}

impl BoundaryElement {
    pub fn zeros(k: usize) -> Self {
        BoundaryElement { k, circles: [vec![ZERO; 2 * k + 1], vec![ZERO; 2 * k + 1]] }
    }

    pub fn from_circles(k: usize, circles: [Vec<Complex64>; 2]) -> Result<Self> {
        if circles.iter().any(|c| c.len() != 2 * k + 1) {
            return Err(Error::Dimension(format!("expected {} coefficients per circle", 2 * k + 1)));
        }
        Ok(BoundaryElement { k, circles })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn xis(&self) -> impl Iterator<Item = i64> {
        -(self.k as i64)..=(self.k as i64)
    }

    pub fn get(&self, circle: usize, xi: i64) -> Complex64 {
        self.circles[circle][(xi + self.k as i64) as usize]
    }

    pub fn set(&mut self, circle: usize, xi: i64, value: Complex64) {
        self.circles[circle][(xi + self.k as i64) as usize] = value;
    }

    pub fn circle(&self, circle: usize) -> &[Complex64] {
        &self.circles[circle]
    }

    /// (g, h)_Gamma in L2 with measure dtheta/(2 pi) on each circle.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.k, other.k, "truncations differ");
        (0..2).flat_map(|c| self.circles[c].iter().zip(&other.circles[c]).map(|(a, b)| a * b.conj())).sum()
    }

    pub fn scaled(&self, a: Complex64) -> Self {
        BoundaryElement {
            k: self.k,
            circles: [self.circles[0].iter().map(|x| x * a).collect(), self.circles[1].iter().map(|x| x * a).collect()],
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.k, other.k, "truncations differ");
        let sum = |c: usize| self.circles[c].iter().zip(&other.circles[c]).map(|(a, b)| a + b).collect();
        BoundaryElement { k: self.k, circles: [sum(0), sum(1)] }
    }

    pub fn max_abs(&self) -> f64 {
        self.circles.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, circle: usize, theta: f64) -> Complex64 {
        self.xis().map(|xi| self.get(circle, xi) * Complex64::from_polar(1.0, xi as f64 * theta)).sum()
    }

    /// Text format: header, then "circle xi re im" per coefficient.
    pub fn to_text(&self) -> String {
        let mut out = format!("# boundary K={}\n", self.k);
        for c in 0..2 {
            for xi in self.xis() {
                let v = self.get(c, xi);
                writeln!(out, "{c} {xi} {:e} {:e}", v.re, v.im).unwrap();
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let k: usize = field(&header_fields(header, "boundary")?, "K")?;
        let mut g = Self::zeros(k);
        for line in lines {
            let p: Vec<&str> = line.split_whitespace().collect();
            if p.len() != 4 {
                return Err(Error::Parse(format!("bad coefficient line '{line}'")));
            }
            let c: usize = p[0].parse().map_err(|_| Error::Parse(format!("bad circle in '{line}'")))?;
            let xi: i64 = p[1].parse().map_err(|_| Error::Parse(format!("bad mode in '{line}'")))?;
            if c > 1 || xi.unsigned_abs() as usize > k {
                return Err(Error::Parse(format!("coefficient ({c},{xi}) outside the truncation")));
            }
            g.set(c, xi, Complex64::new(parse_f64(p[2])?, parse_f64(p[3])?));
        }
        Ok(g)
    }
}

/// Unit factor of D_nu^{k-1} on each circle: i^{k-1} at t = 0 and (-i)^{k-1} at t = 1,
/// since the inward normal is +d/dt on circle 0 and -d/dt on circle 1.
pub(crate) fn normal_phase(circle: usize, order: usize) -> Complex64 {
    let base = if circle == 0 { Complex64::new(0.0, 1.0) } else { Complex64::new(0.0, -1.0) };
    base.powu(order as u32)
}

/// (D_nu^{k-1} u) restricted to both circles, with D_nu = i d/dnu.
pub fn trace(u: &CylinderElement, k: usize) -> Result<BoundaryElement> {
    if k == 0 {
        return Err(Error::InvalidParameter("trace order starts at 1".into()));
    }
    if k > u.m() {
        return Err(Error::InvalidParameter(format!("trace order {k} exceeds basis size {}", u.m())));
    }
    let rows = [normal::endpoint_derivative(u.m(), k - 1, false), normal::endpoint_derivative(u.m(), k - 1, true)];
    let mut g = BoundaryElement::zeros(u.k());
    for xi in u.xis() {
        let v = u.mode(xi);
        for (c, row) in rows.iter().enumerate() {
            let val: Complex64 = row.iter().zip(v.iter()).map(|(r, x)| x * *r).sum();
            g.set(c, xi, val * normal_phase(c, k - 1));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn traces_of_linear_profile() {
        let u = CylinderElement::mode_profile(2, 6, 0, |t| t);
        let g1 = trace(&u, 1).unwrap();
        assert!(close(g1.get(0, 0), Complex64::new(0.0, 0.0)));
        assert!(close(g1.get(1, 0), Complex64::new(1.0, 0.0)));
        let g2 = trace(&u, 2).unwrap();
        assert!(close(g2.get(0, 0), Complex64::new(0.0, 1.0)));
        assert!(close(g2.get(1, 0), Complex64::new(0.0, -1.0)));
    }

    #[test]
    fn projection_and_evaluation_agree() {
        let f = |th: f64, t: f64| Complex64::from_polar(1.0, th) * (t * t - 0.5) + Complex64::new(t, 0.0);
        let u = CylinderElement::project(3, 8, f);
        for (th, t) in [(0.3, 0.1), (2.0, 0.77), (5.0, 0.5)] {
            assert!((u.eval(th, t) - f(th, t)).norm() < 1e-12);
        }
    }

    #[test]
    fn text_roundtrips() {
        let u = CylinderElement::project(2, 5, |th, t| Complex64::new(th.cos() * t, t.exp()));
        assert_eq!(CylinderElement::from_text(&u.to_text()).unwrap(), u);
        let g = trace(&u, 2).unwrap();
        assert_eq!(BoundaryElement::from_text(&g.to_text()).unwrap(), g);
    }
}
