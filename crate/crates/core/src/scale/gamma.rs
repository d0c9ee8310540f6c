//! Norms on Gamma: direct Fourier weights per circle, and the two-chart
//! atlas realization with a smooth partition of unity.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::cylinder::BoundaryElement;
use super::{bracket, weight};
use crate::karamata::FunctionParameter;

/// sum over both circles of sum_xi <xi>^{2s} phi(<xi>)^2 |g(xi)|^2, square-rooted.
pub fn norm_gamma(g: &BoundaryElement, s: f64, phi: &FunctionParameter) -> f64 {
    let mut total = 0.0;
    for c in 0..2 {
        for xi in g.xis() {
            total += weight(s, phi, bracket(xi as f64)) * g.get(c, xi).norm_sqr();
        }
    }
    total.sqrt()
}

fn smooth_step(x: f64) -> f64 {
    let f = |y: f64| if y <= 0.0 { 0.0 } else { (-1.0 / y).exp() };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

const MARGIN: f64 = 0.1;

/// The partition (chi_1, chi_2) at angle theta. chi_1 is supported in
/// (-3pi/4, 3pi/4) and chi_2 = 1 - chi_1 in (pi/4, 7pi/4).
pub fn partition_of_unity(theta: f64) -> (f64, f64) {
    let x = (theta + PI).rem_euclid(2.0 * PI) - PI;
    let (lo, hi) = (PI / 4.0 + MARGIN, 3.0 * PI / 4.0 - MARGIN);
    let c1 = 1.0 - smooth_step((x.abs() - lo) / (hi - lo));
    (c1, 1.0 - c1)
}

/// Atlas norm: each chart function (chi_j g)(alpha_j(x)) is compactly supported
/// in (-3pi/4, 3pi/4); it is measured in H^{s,phi}(R) through a periodization
/// of period 4 pi (frequencies k/2) computed by FFT.
pub fn norm_gamma_atlas(g: &BoundaryElement, s: f64, phi: &FunctionParameter) -> f64 {
    let n = (64 * (g.k() + 8)).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut total = 0.0;
    for circle in 0..2 {
        for (chart, offset) in [(0usize, 0.0), (1usize, PI)] {
            let mut buf: Vec<Complex64> = (0..n)
                .map(|l| {
                    let x = -2.0 * PI + 4.0 * PI * l as f64 / n as f64;
                    if x.abs() >= 0.75 * PI {
                        return Complex64::new(0.0, 0.0);
                    }
                    let theta = x + offset;
                    let (c1, c2) = partition_of_unity(theta);
                    let chi = if chart == 0 { c1 } else { c2 };
                    if chi == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        g.eval(circle, theta) * chi
                    }
                })
                .collect();
            fft.process(&mut buf);
            for (k, c) in buf.iter().enumerate() {
                let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                let c = c / n as f64;
                total += 2.0 * weight(s, phi, bracket(kk / 2.0)) * c.norm_sqr();
            }
        }
    }
    total.sqrt()
}
