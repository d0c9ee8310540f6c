//! Normal-direction basis on (0,1): orthonormal shifted Legendre polynomials
//! p_m(t) = sqrt(2m+1) P_m(2t-1), with exact differentiation, endpoint
//! functionals, quadrature and Fourier moments.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector};

/// Values p_m(1) = sqrt(2m+1).
pub fn endpoint_one(m: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| ((2 * i + 1) as f64).sqrt())
}

/// Values p_m(0) = (-1)^m sqrt(2m+1).
pub fn endpoint_zero(m: usize) -> DVector<f64> {
    DVector::from_fn(m, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 } * ((2 * i + 1) as f64).sqrt())
}

/// d/dt in coefficient space: (Du)_m = sum_n D[m,n] u_n.
pub fn derivative(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        m,
        m,
        |i, j| {
            if i < j && (j - i) % 2 == 1 {
                2.0 * ((2 * i + 1) as f64).sqrt() * ((2 * j + 1) as f64).sqrt()
            } else {
                0.0
            }
        },
    )
}

/// D^k.
pub fn derivative_power(m: usize, k: usize) -> DMatrix<f64> {
    let d = derivative(m);
    let mut out = DMatrix::identity(m, m);
    for _ in 0..k {
        out = &d * out;
    }
    out
}

/// Antiderivative vanishing at t = 0, truncated to P_m: columns J p_n.
pub fn integration_matrix(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(m, m);
    for n in 0..m {
        let a = ((2 * n + 1) as f64).sqrt();
        if n == 0 {
            j[(0, 0)] = 0.5;
            if m > 1 {
                j[(1, 0)] = 0.5 / 3f64.sqrt();
            }
            continue;
        }
        let c = 0.5 / a;
        if n + 1 < m {
            j[(n + 1, n)] = c / ((2 * n + 3) as f64).sqrt();
        }
        j[(n - 1, n)] = -c / ((2 * n - 1) as f64).sqrt();
    }
    j
}

/// Row functional u -> (d/dt)^k u at t = 0 or t = 1.
pub fn endpoint_derivative(m: usize, k: usize, at_one: bool) -> DVector<f64> {
    let p = if at_one { endpoint_one(m) } else { endpoint_zero(m) };
    derivative_power(m, k).transpose() * p
}

/// Matrix of values p_m(t_j), shape (m, len).
pub fn eval_matrix(m: usize, ts: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, ts.len());
    for (j, &t) in ts.iter().enumerate() {
        let x = 2.0 * t - 1.0;
        let (mut p0, mut p1) = (1.0, x);
        for i in 0..m {
            let val = if i == 0 {
                1.0
            } else if i == 1 {
                x
            } else {
                let n = i as f64;
                let p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                p0 = p1;
                p1 = p2;
                p2
            };
            out[(i, j)] = val * ((2 * i + 1) as f64).sqrt();
        }
    }
    out
}

/// Gauss-Legendre nodes and weights on [0,1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = (1.0 - x) / 2.0;
        nodes[n - 1 - i] = (1.0 + x) / 2.0;
        weights[i] = w / 2.0;
        weights[n - 1 - i] = w / 2.0;
    }
    (nodes, weights)
}

/// Galerkin matrix of multiplication by f from P_m_in to P_m_out:
/// out[i, j] = int_0^1 f p_i p_j dt.
pub fn multiplication_matrix<F: Fn(f64) -> f64>(m_in: usize, m_out: usize, f: F, quad: usize) -> DMatrix<f64> {
    let (t, w) = gauss_legendre(quad);
    let pin = eval_matrix(m_in, &t);
    let pout = eval_matrix(m_out, &t);
    let scaled = DMatrix::from_fn(m_out, t.len(), |i, j| pout[(i, j)] * w[j] * f(t[j]));
    scaled * pin.transpose()
}

/// L2 projection coefficients of f onto P_m.
pub fn project<F: Fn(f64) -> f64>(m: usize, f: F, quad: usize) -> DVector<f64> {
    let (t, w) = gauss_legendre(quad);
    let p = eval_matrix(m, &t);
    DVector::from_fn(m, |i, _| (0..t.len()).map(|j| p[(i, j)] * w[j] * f(t[j])).sum())
}

/// Spherical Bessel functions j_0..j_{n-1} at z >= 0.
pub fn spherical_bessel(n: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let j0 = z.sin() / z;
    if z > n as f64 {
        out[0] = j0;
        if n > 1 {
            out[1] = z.sin() / (z * z) - z.cos() / z;
        }
        for l in 2..n {
            out[l] = (2.0 * l as f64 - 1.0) / z * out[l - 1] - out[l - 2];
        }
        return out;
    }
    // Miller's backward recurrence.
    let start = n + 20 + (40.0 * n as f64).sqrt() as usize + z as usize;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut vals = vec![0.0; start + 1];
    vals[start] = cur;
    for l in (1..=start).rev() {
        let prev = (2.0 * l as f64 + 1.0) / z * cur - next;
        next = cur;
        cur = prev;
        vals[l - 1] = cur;
        if cur.abs() > 1e250 {
            for v in vals.iter_mut().skip(l - 1) {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    let j1 = z.sin() / (z * z) - z.cos() / z;
    let scale = if j0.abs() > j1.abs() { j0 / vals[0] } else { j1 / vals[1] };
    for l in 0..n {
        out[l] = vals[l] * scale;
    }
    out
}

/// Fourier moments mu_m(k) = int_0^1 e^{i pi k t} p_m(t) dt for k = 0..=lk,
/// stored as (re, im), each of shape (lk+1, m).
#[derive(Debug)]
pub struct Moments {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

fn compute_moments(m: usize, lk: usize) -> Moments {
    let mut re = DMatrix::zeros(lk + 1, m);
    let mut im = DMatrix::zeros(lk + 1, m);
    for k in 0..=lk {
        let z = PI * k as f64 / 2.0;
        let j = spherical_bessel(m, z);
        let (s, c) = z.sin_cos();
        for (i, ji) in j.iter().enumerate() {
            let a = ((2 * i + 1) as f64).sqrt() * ji;
            // e^{iz} i^i a
            let (pr, pi) = match i % 4 {
                0 => (c, s),
                1 => (-s, c),
                2 => (-c, -s),
                _ => (s, -c),
            };
            re[(k, i)] = a * pr;
            im[(k, i)] = a * pi;
        }
    }
    Moments { re, im }
}

type MomentCache = RwLock<HashMap<(usize, usize), Arc<Moments>>>;

/// Cached moment table.
pub fn moments(m: usize, lk: usize) -> Arc<Moments> {
    static CACHE: OnceLock<MomentCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.read().unwrap().get(&(m, lk)) {
        return v.clone();
    }
    let table = Arc::new(compute_moments(m, lk));
    cache.write().unwrap().entry((m, lk)).or_insert(table).clone()
}
