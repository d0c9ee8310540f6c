use std::fmt::Write as _;

use num_complex::Complex64;

use super::{weight, Domain, SpaceIndex};
use crate::error::{Error, Result};

/// Modes xi in Z^d with |xi_i| <= k, enumerated lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrequencyLattice {
    pub dim: usize,
    pub k: usize,
}

impl FrequencyLattice {
    pub fn new(dim: usize, k: usize) -> Self {
        assert!(dim >= 1, "lattice dimension must be positive");
        FrequencyLattice { dim, k }
    }

    pub fn len(&self) -> usize {
        (2 * self.k + 1).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mode(&self, index: usize) -> Vec<i64> {
        let side = 2 * self.k + 1;
        let mut rest = index;
        let mut out = vec![0i64; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (rest % side) as i64 - self.k as i64;
            rest /= side;
        }
        out
    }

    pub fn index_of(&self, xi: &[i64]) -> Option<usize> {
        if xi.len() != self.dim {
            return None;
        }
        let side = 2 * self.k as i64 + 1;
        let mut idx = 0i64;
        for &x in xi {
            if x.unsigned_abs() as usize > self.k {
                return None;
            }
            idx = idx * side + x + self.k as i64;
        }
        Some(idx as usize)
    }

    pub fn modes(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(|i| self.mode(i))
    }

    /// Table of <xi> in enumeration order.
    pub fn brackets(&self) -> Vec<f64> {
        let k = self.k as i64;
        let mut xi = vec![-k; self.dim];
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            out.push((1.0 + xi.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt());
            for slot in xi.iter_mut().rev() {
                if *slot < k {
                    *slot += 1;
                    break;
                }
                *slot = -k;
            }
        }
        out
    }
}

/// Fourier coefficients over a truncated lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralElement {
    pub lattice: FrequencyLattice,
    pub coeffs: Vec<Complex64>,
}

impl SpectralElement {
    pub fn zeros(lattice: FrequencyLattice) -> Self {
        SpectralElement { coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()], lattice }
    }

    pub fn single(lattice: FrequencyLattice, xi: &[i64], value: Complex64) -> Result<Self> {
        let mut u = Self::zeros(lattice);
        let i = lattice.index_of(xi).ok_or_else(|| Error::Dimension(format!("mode {xi:?} outside the lattice")))?;
        u.coeffs[i] = value;
        Ok(u)
    }

    /// True when u(-xi) = conj u(xi), i.e. u is real valued.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        self.lattice.modes().enumerate().all(|(i, xi)| {
            let neg: Vec<i64> = xi.iter().map(|x| -x).collect();
            let j = self.lattice.index_of(&neg).expect("lattice is symmetric");
            (self.coeffs[i] - self.coeffs[j].conj()).norm() <= tol
        })
    }

    /// Text format: a header line, then one line per mode "xi_1 .. xi_d re im".
    pub fn to_text(&self) -> String {
        let mut out = format!("# lattice d={} K={}\n", self.lattice.dim, self.lattice.k);
        for (xi, c) in self.lattice.modes().zip(&self.coeffs) {
            let idx: Vec<String> = xi.iter().map(i64::to_string).collect();
            writeln!(out, "{} {:e} {:e}", idx.join(" "), c.re, c.im).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let fields = header_fields(header, "lattice")?;
        let dim = field(&fields, "d")?;
        let k = field(&fields, "K")?;
        let lattice = FrequencyLattice::new(dim, k);
        let mut u = Self::zeros(lattice);
        for line in lines {
            let nums: Vec<&str> = line.split_whitespace().collect();
            if nums.len() != dim + 2 {
                return Err(Error::Parse(format!("bad coefficient line '{line}'")));
            }
            let xi = nums[..dim]
                .iter()
                .map(|x| x.parse::<i64>().map_err(|_| Error::Parse(format!("bad mode in '{line}'"))))
                .collect::<Result<Vec<_>>>()?;
            let re = parse_f64(nums[dim])?;
            let im = parse_f64(nums[dim + 1])?;
            let i = lattice.index_of(&xi).ok_or_else(|| Error::Parse(format!("mode {xi:?} outside the lattice")))?;
            u.coeffs[i] = Complex64::new(re, im);
        }
        Ok(u)
    }
}

pub(crate) fn parse_f64(text: &str) -> Result<f64> {
    text.parse().map_err(|_| Error::Parse(format!("bad number '{text}'")))
}

pub(crate) fn header_fields(header: &str, kind: &str) -> Result<Vec<(String, String)>> {
    let body = header
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|h| h.strip_prefix(kind))
        .ok_or_else(|| Error::Parse(format!("expected '# {kind} ...' header")))?;
    body.split_whitespace()
        .map(|kv| {
            kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| Error::Parse(format!("bad header field '{kv}'")))
        })
        .collect()
}

pub(crate) fn field<T: std::str::FromStr>(fields: &[(String, String)], name: &str) -> Result<T> {
    fields
        .iter()
        .find(|(k, _)| k == name)
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("missing or bad header field '{name}'")))
}

/// (sum_xi <xi>^{2s} phi(<xi>)^2 |u(xi)|^2)^{1/2}.
pub fn norm_lattice(u: &SpectralElement, idx: &SpaceIndex) -> Result<f64> {
    if idx.domain != Domain::Lattice {
        return Err(Error::InvalidParameter(format!("index domain is {}, expected lattice", idx.domain)));
    }
    let total: f64 = u
        .lattice
        .brackets()
        .iter()
        .zip(&u.coeffs)
        .filter(|(_, c)| c.norm_sqr() != 0.0)
        .map(|(&b, c)| weight(idx.s, &idx.phi, b) * c.norm_sqr())
        .sum();
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::karamata::FunctionParameter;

    #[test]
    fn enumeration_roundtrip() {
        let lat = FrequencyLattice::new(3, 2);
        for i in 0..lat.len() {
            assert_eq!(lat.index_of(&lat.mode(i)), Some(i));
        }
        assert_eq!(lat.brackets()[lat.index_of(&[0, 0, 0]).unwrap()], 1.0);
    }

    #[test]
    fn text_roundtrip() {
        let lat = FrequencyLattice::new(2, 1);
        let mut u = SpectralElement::zeros(lat);
        u.coeffs[3] = Complex64::new(0.25, -1.5);
        u.coeffs[8] = Complex64::new(1e-30, 3.0);
        assert_eq!(SpectralElement::from_text(&u.to_text()).unwrap(), u);
    }

    #[test]
    fn single_mode_values() {
        let lat = FrequencyLattice::new(3, 2);
        let u = SpectralElement::single(lat, &[1, 1, 1], Complex64::new(1.0, 0.0)).unwrap();
        let n = norm_lattice(&u, &SpaceIndex::lattice(1.0, FunctionParameter::one())).unwrap();
        assert!((n - 2.0).abs() < 1e-15);
    }
}
