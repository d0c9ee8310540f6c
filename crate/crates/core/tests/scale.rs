use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use refined_scale::karamata::reciprocal;
use refined_scale::scale::sample::{random_boundary, random_cylinder, random_spectral, Decay};
use refined_scale::scale::{
    bracket, dual_gram, embedding_constants, hoermander_condition, interp_modified, modified_gram, norm_dual, norm_gamma, norm_gamma_atlas,
    norm_lattice, norm_modified, norm_omega, norm_omegabar, norm_zero, normal, quad_form, quotient_gram, trace, weight, BoundaryElement,
    CylinderElement, Domain, FrequencyLattice, SpaceIndex, SpectralElement, Verdict,
};
use refined_scale::{Error, FunctionParameter};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn log() -> FunctionParameter {
    FunctionParameter::log(1.0)
}

#[test]
fn lattice_zero_mode_gives_phi_at_one() {
    let lat = FrequencyLattice::new(2, 3);
    let u = SpectralElement::single(lat, &[0, 0], ONE).unwrap();
    for (s, phi) in [(0.0, FunctionParameter::one()), (3.5, log()), (-2.0, FunctionParameter::log(-2.0))] {
        let n = norm_lattice(&u, &SpaceIndex::lattice(s, phi.clone())).unwrap();
        assert_eq!(n, phi.evaluate(1.0));
    }
}

#[test]
fn lattice_bracket_two() {
    let lat = FrequencyLattice::new(3, 1);
    let u = SpectralElement::single(lat, &[1, -1, 1], ONE).unwrap();
    let n = norm_lattice(&u, &SpaceIndex::lattice(1.0, FunctionParameter::one())).unwrap();
    assert_relative_eq!(n, 2.0, max_relative = 1e-15);
}

#[test]
fn lattice_two_modes_scalar_oracle() {
    let lat = FrequencyLattice::new(2, 8);
    let mut u = SpectralElement::zeros(lat);
    u.coeffs[lat.index_of(&[3, 4]).unwrap()] = Complex64::new(0.5, -1.0);
    u.coeffs[lat.index_of(&[-7, 2]).unwrap()] = Complex64::new(2.0, 0.25);
    let oracle = |b2: f64, c: f64| b2.powi(2) * (0.5 * b2.ln()).max(1.0).powi(2) * c;
    let expect = (oracle(26.0, 1.25) + oracle(54.0, 4.0625)).sqrt();
    let n = norm_lattice(&u, &SpaceIndex::lattice(2.0, log())).unwrap();
    assert_relative_eq!(n, expect, max_relative = 1e-14);
}

#[test]
fn lattice_rejects_other_domains() {
    let u = SpectralElement::zeros(FrequencyLattice::new(1, 2));
    let idx = SpaceIndex::new(1.0, FunctionParameter::one(), Domain::Omega, 0).unwrap();
    assert!(norm_lattice(&u, &idx).is_err());
}

#[test]
fn gamma_constant_and_single_mode() {
    let one = FunctionParameter::one();
    let mut g = BoundaryElement::zeros(4);
    g.set(1, 0, ONE);
    assert_eq!(norm_gamma(&g, 3.7, &one), 1.0);
    let mut g = BoundaryElement::zeros(4);
    g.set(0, 1, ONE);
    assert_relative_eq!(norm_gamma(&g, 0.5, &one), 2f64.powf(0.25), max_relative = 1e-15);
}

#[test]
fn gamma_atlas_equivalence_is_truncation_uniform() {
    let phi = log();
    for s in [-0.5, 0.5, 1.5] {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for k in [16usize, 32, 64] {
            for i in 0..16 {
                let g = random_boundary(k, 5, i, 0.5);
                let r = norm_gamma_atlas(&g, s, &phi) / norm_gamma(&g, s, &phi);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        assert!(lo > 0.2 && hi < 5.0, "s={s}: [{lo}, {hi}]");
    }
}

/// Closed-form H^1 quotient norm on mode xi: the optimal extension to the
/// second half of the period-2 normal circle solves v'' = a^2 v with
/// a^2 = 1 + xi^2, matching u(1) and u(0) at its ends.
fn h1_quotient_oracle(xi: i64, u: impl Fn(f64) -> f64, du: impl Fn(f64) -> f64) -> f64 {
    let a = (1.0 + (xi * xi) as f64).sqrt();
    let (x, w) = normal::gauss_legendre(64);
    let inner: f64 = x.iter().zip(&w).map(|(t, w)| w * (du(*t).powi(2) + a * a * u(*t).powi(2))).sum();
    let (al, be) = (u(1.0), u(0.0));
    let outer = a * ((al * al + be * be) * a.cosh() - 2.0 * al * be) / a.sinh();
    (inner + outer).sqrt()
}

#[test]
fn omega_h1_matches_closed_form_extension() {
    let one = FunctionParameter::one();
    type Profile = fn(f64) -> f64;
    let cases: [(i64, Profile, Profile); 3] = [(0, |_| 1.0, |_| 0.0), (3, |_| 1.0, |_| 0.0), (5, |t| t * t - 0.25, |t| 2.0 * t)];
    for (xi, u, du) in cases {
        let el = CylinderElement::mode_profile(6, 48, xi, u);
        let got = norm_omega(&el, 1.0, &one).unwrap();
        assert_relative_eq!(got, h1_quotient_oracle(xi, u, du), max_relative = 1e-3);
    }
}

#[test]
fn omega_norm_of_constant_between_zero_and_constant_extension() {
    // Extension by zero is optimal in L2; extension by the constant over the
    // whole period-2 normal circle bounds the quotient norm by sqrt(2) phi(1).
    let u = CylinderElement::mode_profile(2, 12, 0, |_| 1.0);
    let one = FunctionParameter::one();
    assert_relative_eq!(norm_omega(&u, 0.0, &one).unwrap(), 1.0, max_relative = 1e-9);
    let phi = log();
    let mut last = 0.0;
    for s in [0.0, 0.25, 1.0, 2.5, 4.0] {
        let n = norm_omega(&u, s, &phi).unwrap();
        assert!(n >= last && n <= 2f64.sqrt() * phi.evaluate(1.0) * (1.0 + 1e-9), "s={s}: {n}");
        last = n;
    }
    assert_relative_eq!(last, 2f64.sqrt(), max_relative = 1e-3);
}

#[test]
fn omega_single_tangential_mode_bounds() {
    let (s, phi) = (2.5, FunctionParameter::one());
    let xi = 3;
    let u = CylinderElement::mode_profile(4, 12, xi, |_| 1.0);
    let w = weight(s, &phi, bracket(xi as f64)).sqrt();
    let n = norm_omega(&u, s, &phi).unwrap();
    assert!(n >= w && n <= 2f64.sqrt() * w * (1.0 + 1e-9), "{n} vs {w}");
}

#[test]
fn omega_l2_is_coefficient_norm() {
    let one = FunctionParameter::one();
    for seed in 0..4 {
        let u = random_cylinder(32, 32, seed, 0, Decay::new(2.0, 2.0));
        let l2 = u.l2_norm();
        let n = norm_omega(&u, 0.0, &one).unwrap();
        assert!((n / l2 - 1.0).abs() < 0.01, "{n} vs {l2}");
    }
}

#[test]
fn dual_single_mode_matches_inverse_gram() {
    let one = FunctionParameter::one();
    let u = CylinderElement::mode_profile(2, 10, 1, |t| t * (1.0 - t));
    let q = quotient_gram(1.0, &one, 1, 10).unwrap();
    let c = u.mode(1).map(|z| z.re);
    let oracle = c.dot(&((*q).clone().cholesky().unwrap().inverse() * &c)).sqrt();
    assert_relative_eq!(norm_dual(&u, -1.0, &one).unwrap(), oracle, max_relative = 1e-12);
}

#[test]
fn double_dual_gram_returns_original() {
    let phi = log();
    for xi in [0, 5, 17] {
        let g = quotient_gram(1.25, &phi, xi, 12).unwrap();
        let d = dual_gram(-1.25, &reciprocal(&phi).unwrap(), xi, 12).unwrap();
        let back = (*d).clone().cholesky().unwrap().inverse();
        assert!((&back - &*g).amax() <= 1e-8 * g.amax());
    }
}

#[test]
fn pairing_is_tight_on_riesz_representatives() {
    let phi = log();
    let inv = reciprocal(&phi).unwrap();
    let (s, m) = (-0.75, 12);
    let u = random_cylinder(8, m, 3, 0, Decay::new(1.0, 1.0));
    let mut v = CylinderElement::zeros(8, m);
    for xi in u.xis() {
        let d = dual_gram(s, &phi, xi, m).unwrap().map(|x| Complex64::new(x, 0.0));
        *v.mode_mut(xi) = d * u.mode(xi);
    }
    let pairing = u.inner(&v).norm();
    let bound = norm_dual(&u, s, &phi).unwrap() * norm_omega(&v, -s, &inv).unwrap();
    assert_relative_eq!(pairing, bound, max_relative = 1e-9);
    let w = random_cylinder(8, m, 4, 0, Decay::new(1.0, 1.0));
    let other = u.inner(&w).norm();
    assert!(other <= norm_dual(&u, s, &phi).unwrap() * norm_omega(&w, -s, &inv).unwrap() * (1.0 + 1e-12));
}

#[test]
fn traces_of_linear_profile() {
    let u = CylinderElement::mode_profile(1, 6, 0, |t| t);
    let g1 = trace(&u, 1).unwrap();
    assert!((g1.get(0, 0)).norm() < 1e-13);
    assert!((g1.get(1, 0) - ONE).norm() < 1e-13);
    let g2 = trace(&u, 2).unwrap();
    assert!((g2.get(0, 0) - Complex64::new(0.0, 1.0)).norm() < 1e-13);
    assert!((g2.get(1, 0) - Complex64::new(0.0, -1.0)).norm() < 1e-13);
    assert!(trace(&u, 0).is_err());
    assert!(trace(&u, 7).is_err());
}

#[test]
fn trace_constants_are_truncation_stable() {
    let phi = log();
    for (s, k) in [(1.0, 1usize), (2.0, 2)] {
        let consts: Vec<f64> = [16usize, 32, 64]
            .iter()
            .map(|&kk| {
                let m = kk / 4 + 16;
                (0..16)
                    .map(|i| {
                        let u = random_cylinder(kk, m, 9, i, Decay::for_smoothness(s));
                        norm_gamma(&trace(&u, k).unwrap(), s - k as f64 + 0.5, &phi) / norm_omega(&u, s, &phi).unwrap()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        let max = consts.iter().copied().fold(0.0, f64::max);
        let min = consts.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min - 1.0 <= 0.2, "s={s}, k={k}: {consts:?}");
    }
}

#[test]
fn modified_of_constant_componentwise() {
    let one = FunctionParameter::one();
    let u = CylinderElement::mode_profile(1, 10, 0, |_| 1.0);
    let zero = norm_zero(&u, 0.0, &one).unwrap();
    let expect = (zero * zero + 2.0 * 1.0).sqrt();
    assert_relative_eq!(norm_modified(&u, 0.0, &one, 1).unwrap(), expect, max_relative = 1e-12);
}

#[test]
fn modified_with_vanishing_traces_is_zero_norm() {
    let phi = log();
    let u = CylinderElement::mode_profile(3, 12, 2, |t| (t * (1.0 - t)).powi(2));
    for s in [-1.0, 0.25] {
        let a = norm_modified(&u, s, &phi, 2).unwrap();
        let b = norm_zero(&u, s, &phi).unwrap();
        assert!((a - b).abs() <= 1e-10 * b, "{a} vs {b}");
    }
}

#[test]
fn modified_above_traces_is_equivalent_to_omega() {
    let phi = log();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in [16usize, 32] {
        for i in 0..12 {
            let u = random_cylinder(k, k / 4 + 16, 21, i, Decay::for_smoothness(2.0));
            let r = norm_modified(&u, 2.0, &phi, 1).unwrap() / norm_omega(&u, 2.0, &phi).unwrap();
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    assert!(lo >= 1.0 - 1e-12 && hi < 3.0, "[{lo}, {hi}]");
}

#[test]
fn modified_rejects_critical_index() {
    let u = CylinderElement::zeros(1, 4);
    assert_eq!(norm_modified(&u, 0.5, &FunctionParameter::one(), 1).unwrap_err(), Error::CriticalIndex(0.5));
}

#[test]
fn interp_modified_lies_between_neighbours() {
    let phi = log();
    let eps = 0.5;
    for i in 0..8 {
        let u = random_cylinder(8, 12, 31, i, Decay::for_smoothness(1.0));
        let mid = interp_modified(&u, 0.5, &phi, 1, eps).unwrap();
        let lo = norm_modified(&u, 0.5 - eps, &phi, 1).unwrap();
        let hi = norm_modified(&u, 0.5 + eps, &phi, 1).unwrap();
        // The graph norm of X_psi is (||u||_0^2 + ||psi(J)u||_0^2)^{1/2}.
        assert!(mid >= lo * (1.0 - 1e-10), "{mid} < {lo}");
        assert!(mid <= (lo * lo + hi * hi).sqrt() * (1.0 + 1e-10));
    }
    assert!(interp_modified(&CylinderElement::zeros(1, 4), 1.0, &phi, 1, 0.5).is_err());
}

#[test]
fn interp_modified_zero_trace_matches_mode_oracle() {
    let phi = FunctionParameter::one();
    let (s, eps, m) = (1.5, 0.25, 12);
    let u = CylinderElement::mode_profile(2, m, 1, |t| (t * (1.0 - t)).powi(3));
    let g0 = modified_gram(s - eps, &phi, 2, 1, m).unwrap();
    let g1 = modified_gram(s + eps, &phi, 2, 1, m).unwrap();
    let c = u.mode(1).map(|z| z.re);
    // psi = t^{1/2}: in the generalized eigenbasis the form is 1 + sqrt(mu).
    let chol = (*g0).clone().cholesky().unwrap();
    let l_inv = chol.l().try_inverse().unwrap();
    let a = &l_inv * &*g1 * l_inv.transpose();
    let e = a.symmetric_eigen();
    let y = e.eigenvectors.transpose() * chol.l().transpose() * &c;
    let scale = e.eigenvalues.min().min(1.0);
    let oracle: f64 = y.iter().zip(e.eigenvalues.iter()).map(|(y, mu)| y * y * (1.0 + (mu / scale).sqrt())).sum();
    let got = interp_modified(&u, s, &phi, 2, eps).unwrap();
    assert_relative_eq!(got * got, oracle, max_relative = 1e-8);
}

#[test]
fn epsilon_independence_band() {
    let phi = log();
    for k in [8usize, 16] {
        let ratios: Vec<f64> = (0..16)
            .map(|i| {
                let u = random_cylinder(k, k / 4 + 16, 41, i, Decay::for_smoothness(1.5));
                interp_modified(&u, 1.5, &phi, 2, 0.25).unwrap() / interp_modified(&u, 1.5, &phi, 2, 0.75).unwrap()
            })
            .collect();
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 2.0, "K={k}: {ratios:?}");
    }
}

#[test]
fn hoermander_verdicts() {
    let cases = [(0.4, Verdict::Diverges), (0.5, Verdict::Diverges), (0.6, Verdict::Converges), (1.0, Verdict::Converges)];
    for (r, v) in cases {
        assert_eq!(hoermander_condition(&FunctionParameter::log(r), 1e12).verdict, v, "log^{r}");
    }
    let one = hoermander_condition(&FunctionParameter::one(), 1e8);
    assert_eq!(one.verdict, Verdict::Diverges);
    assert_relative_eq!(one.integral, 1e8f64.ln(), max_relative = 1e-6);
}

#[test]
fn hoermander_log_tail_is_inverse_log() {
    let t_max: f64 = 1e12;
    let rep = hoermander_condition(&FunctionParameter::log(1.0), t_max);
    // int_1^T dt/(t max(1, log t)^2) = 1 + (1 - 1/log T) for log T >= 1.
    assert_relative_eq!(rep.integral, 2.0 - 1.0 / t_max.ln(), max_relative = 1e-6);
    assert_relative_eq!(rep.tail, 1.0 / t_max.ln(), max_relative = 1e-6);
}

#[test]
fn embedding_examples() {
    let lat = FrequencyLattice::new(1, 256);
    let sample: Vec<SpectralElement> = (0..8).map(|i| random_spectral(lat, 2, i, 1.0)).collect();
    let same = SpaceIndex::lattice(1.0, log());
    let rep = embedding_constants(&same, &same, &sample).unwrap();
    assert_relative_eq!(rep.sample_max, 1.0, max_relative = 1e-14);
    assert_relative_eq!(rep.mode_max, 1.0, max_relative = 1e-14);

    let hi = SpaceIndex::lattice(1.5, FunctionParameter::one());
    let lo = SpaceIndex::lattice(1.0, log());
    let rep = embedding_constants(&hi, &lo, &sample).unwrap();
    assert!(rep.compact_expected);
    for (b, r) in &rep.profile {
        assert_relative_eq!(*r, b.powf(-0.5) * b.ln().max(1.0), max_relative = 1e-12);
    }
    assert!(rep.tail_fraction() < 0.5);

    let rep =
        embedding_constants(&SpaceIndex::lattice(1.0, FunctionParameter::log(2.0)), &SpaceIndex::lattice(1.0, log()), &sample).unwrap();
    assert!(rep.compact_expected);
    let (b, r) = *rep.profile.last().unwrap();
    assert_relative_eq!(r, 1.0 / b.ln(), max_relative = 1e-12);
    assert!(embedding_constants(&lo, &hi, &sample).is_err());
}

#[test]
fn normal_basis_derivative_is_exact_on_polynomials() {
    let m = 10;
    let c = normal::project(m, |t| t.powi(5) - 2.0 * t, 40);
    let d = normal::derivative(m) * &c;
    let expect = normal::project(m, |t| 5.0 * t.powi(4) - 2.0, 40);
    assert!((d - expect).amax() < 1e-11);
}

#[test]
fn quadratic_form_of_complex_vector() {
    let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let c = DVector::from_vec(vec![Complex64::new(1.0, 2.0), Complex64::new(-1.0, 0.5)]);
    let direct = (c.adjoint() * g.map(|x| Complex64::new(x, 0.0)) * &c)[(0, 0)];
    assert_relative_eq!(quad_form(&g, &c), direct.re, max_relative = 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_sobolev_reduction_is_exact(s in -4.0f64..4.0, x in -20i64..=20, y in -20i64..=20) {
        let lat = FrequencyLattice::new(2, 20);
        let u = SpectralElement::single(lat, &[x, y], ONE).unwrap();
        let n = norm_lattice(&u, &SpaceIndex::lattice(s, FunctionParameter::one())).unwrap();
        let b2 = 1.0 + (x * x + y * y) as f64;
        let expect = b2.sqrt().powf(2.0 * s);
        prop_assert!((n - expect.sqrt()).abs() <= 1e-13 * expect.sqrt());
    }

    #[test]
    fn norms_are_homogeneous(seed in 0u64..500, a in 0.1f64..10.0) {
        let u = random_cylinder(4, 8, seed, 0, Decay::new(1.0, 1.0));
        let v = u.scaled(Complex64::new(0.0, a));
        let phi = FunctionParameter::log(1.0);
        let lhs = norm_modified(&v, 1.0, &phi, 2).unwrap();
        let rhs = a * norm_modified(&u, 1.0, &phi, 2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn omegabar_dominates_quotient(seed in 0u64..200) {
        let u = random_cylinder(4, 8, seed, 1, Decay::new(1.0, 1.0));
        let phi = FunctionParameter::log(1.0);
        let q = norm_omega(&u, 0.25, &phi).unwrap();
        let b = norm_omegabar(&u, 0.25, &phi).unwrap();
        prop_assert!(q <= b * (1.0 + 1e-6));
    }
}
