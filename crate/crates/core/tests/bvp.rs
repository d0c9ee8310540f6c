use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use refined_scale::bvp::*;
use refined_scale::scale::sample::{random_cylinder, Decay};
use refined_scale::scale::{norm_modified, normal_size, trace, BoundaryElement, CylinderElement};
use refined_scale::FunctionParameter;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn dirichlet() -> BvpSpec {
    BvpSpec::dirichlet(1, 1.0).unwrap()
}

fn kernel_spec() -> BvpSpec {
    BvpSpec::dirichlet(1, BvpSpec::kernel_shift(0)).unwrap()
}

fn sine_mode(k: usize, m: usize) -> CylinderElement {
    CylinderElement::project(k, m, |th, t| Complex64::from_polar(1.0, th) * (PI * t).sin())
}

fn max_abs(u: &CylinderElement) -> f64 {
    u.max_abs_diff(&CylinderElement::zeros(u.k(), u.m()))
}

#[test]
fn operator_on_constant() {
    let u = CylinderElement::mode_profile(2, 8, 0, |_| 1.0);
    let d = apply_operator(&dirichlet(), &u).unwrap();
    assert!(d.f.max_abs_diff(&u) < 1e-12);
    for c in 0..2 {
        assert!((d.g[0].get(c, 0) - ONE).norm() < 1e-14);
    }
}

#[test]
fn operator_on_sine_mode() {
    let u = sine_mode(2, 24);
    let d = apply_operator(&dirichlet(), &u).unwrap();
    let expect = u.scaled(Complex64::new(2.0 + PI * PI, 0.0));
    assert!(d.f.max_abs_diff(&expect) < 1e-9);
    assert!(d.g[0].max_abs() < 1e-13);
}

#[test]
fn biharmonic_type_operator_on_quadratic() {
    let spec = BvpSpec::dirichlet(2, 1.0).unwrap();
    let u = CylinderElement::mode_profile(1, 10, 0, |t| t * t);
    let d = apply_operator(&spec, &u).unwrap();
    let expect = CylinderElement::mode_profile(1, 10, 0, |t| t * t - 4.0);
    assert!(d.f.max_abs_diff(&expect) < 1e-9);
}

#[test]
fn spec_validation_and_records() {
    assert!(BvpSpec::new(1, ONE, vec![2]).is_err());
    assert!(BvpSpec::new(2, ONE, vec![1, 1]).is_err());
    assert!(BvpSpec::new(0, ONE, vec![]).is_err());
    let spec = BvpSpec::from_toml("q = 2\nc = 3.0\nm_orders = [0, 2]\n").unwrap();
    assert_eq!(spec.m_orders(), &[0, 2]);
    assert_eq!(BvpSpec::from_record(&spec.to_record()).unwrap(), spec);
    let d = BvpSpec::from_toml("q = 1").unwrap();
    assert_eq!(d, dirichlet());
}

#[test]
fn green_system_of_first_order_problems() {
    let dir = dirichlet().green_system().describe();
    assert_eq!(dir, ["B_1 = 1", "C+_1 = -i A^(1)", "C_1 = D_nu^1", "B+_1 = i A^(2)"]);
    let neu = BvpSpec::new(1, ONE, vec![1]).unwrap().green_system();
    assert_eq!(neu.c_plus[0].to_string(), "-i A^(2)");
    assert_eq!(neu.c[0].to_string(), "1");
    for (b, cp) in neu.b.iter().zip(&neu.c_plus) {
        assert_eq!(b.order(1) + cp.order(1), 1);
    }
}

#[test]
fn green_system_orders_sum_to_2q_minus_1() {
    for (q, m) in [(2, vec![0, 1]), (2, vec![0, 2]), (2, vec![1, 3]), (3, vec![0, 3, 5])] {
        let spec = BvpSpec::new(q, Complex64::new(1.0, 0.5), m).unwrap();
        let g = spec.green_system();
        for (b, cp) in g.b.iter().zip(&g.c_plus) {
            assert_eq!(b.order(q) + cp.order(q), 2 * q - 1);
        }
        for (c, bp) in g.c.iter().zip(&g.b_plus) {
            assert_eq!(c.order(q) + bp.order(q), 2 * q - 1);
        }
    }
}

#[test]
fn green_defect_of_constants_vanishes() {
    let u = CylinderElement::mode_profile(1, 8, 0, |_| 1.0);
    assert!(green_defect(&dirichlet(), &u, &u).unwrap() < 1e-13);
}

#[test]
fn green_defect_of_random_polynomials() {
    for (spec, tol) in [
        (dirichlet(), 1e-9),
        (BvpSpec::new(1, Complex64::new(1.0, 2.0), vec![1]).unwrap(), 1e-9),
        (BvpSpec::new(2, Complex64::new(1.0, 0.5), vec![0, 2]).unwrap(), 1e-9),
        (BvpSpec::new(3, Complex64::new(2.0, -1.0), vec![0, 3, 5]).unwrap(), 1e-9),
    ] {
        for i in 0..4 {
            let u = random_cylinder(4, 12, 3, i, Decay::new(1.0, 1.0));
            let v = random_cylinder(4, 12, 4, i, Decay::new(1.0, 1.0));
            let terms = green_terms(&spec, &u, &v).unwrap();
            assert!(terms.defect() <= tol * terms.scale(), "{spec}: {} vs {}", terms.defect(), terms.scale());
        }
    }
}

#[test]
fn green_boundary_sum_vanishes_for_flat_boundary_behaviour() {
    let bump = |t: f64| (t * (1.0 - t)).powi(4);
    let u = CylinderElement::mode_profile(2, 16, 1, bump);
    let v = CylinderElement::mode_profile(2, 16, 1, |t| t.cos());
    let terms = green_terms(&dirichlet(), &u, &v).unwrap();
    assert!(terms.boundary.norm() < 1e-10 * terms.scale(), "{:?}", terms);
}

#[test]
fn manufactured_sine_solution() {
    let u = sine_mode(2, 24);
    let mut data = DataTuple::zeros(&dirichlet(), 2, 24);
    data.f = u.scaled(Complex64::new(2.0 + PI * PI, 0.0));
    let rep = solve(&dirichlet(), &data).unwrap();
    assert!(rep.solution.max_abs_diff(&u) < 1e-9);
    assert_eq!((rep.kernel_dim, rep.cokernel_dim), (0, 0));
}

#[test]
fn cosh_profile_for_constant_dirichlet_data() {
    for c in [1.0, 4.0, 0.25] {
        let spec = BvpSpec::dirichlet(1, c).unwrap();
        let mut data = DataTuple::zeros(&spec, 1, 24);
        data.g[0].set(0, 0, ONE);
        data.g[0].set(1, 0, ONE);
        let u = solve(&spec, &data).unwrap().solution;
        let r = c.sqrt();
        for t in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let exact = (r * (t - 0.5)).cosh() / (r * 0.5).cosh();
            assert!((u.eval(1.3, t).re - exact).abs() < 1e-12, "c={c}, t={t}");
        }
    }
}

#[test]
fn kernel_data_for_shifted_problem() {
    let spec = kernel_spec();
    let kd = KernelData::compute(&spec, 8, normal_size(8)).unwrap();
    assert_eq!((kd.dim_n(), kd.dim_n_plus()), (1, 1));
    assert_eq!(kd.index(), 0);
    assert!(kd.n_residual < 1e-9 && kd.n_plus_residual < 1e-9);
    let n = &kd.n_basis()[0];
    let sine = CylinderElement::mode_profile(8, normal_size(8), 0, |t| (PI * t).sin());
    let overlap = n.inner(&sine).norm() / sine.l2_norm();
    assert_relative_eq!(overlap, 1.0, max_relative = 1e-9);

    let two = BvpSpec::dirichlet(1, BvpSpec::kernel_shift(2)).unwrap();
    let kd = KernelData::compute(&two, 8, normal_size(8)).unwrap();
    assert_eq!((kd.dim_n(), kd.dim_n_plus()), (2, 2));
    assert!(KernelData::compute(&dirichlet(), 8, 18).unwrap().n.is_empty());
}

#[test]
fn solvability_defect_matches_range_condition() {
    let spec = kernel_spec();
    let (k, m) = (4, 20);
    let kd = KernelData::compute(&spec, k, m).unwrap();
    let mut data = DataTuple::zeros(&spec, k, m);
    data.f = CylinderElement::project(k, m, |th, t| Complex64::new(1.0 + t * th.cos(), t * t));
    data.g[0].set(0, 0, Complex64::new(0.5, -1.0));
    data.g[0].set(1, 0, Complex64::new(2.0, 0.0));
    data.g[0].set(1, 3, Complex64::new(0.0, 1.0));
    let rep = solve_with(&spec, &data, &kd).unwrap();
    let direct: Vec<Complex64> = kd.n_plus.iter().map(|v| range_functional(&spec, &data, v)).collect();
    assert!(rep.defect_norm() > 0.1);
    assert!(!rep.solvable(1e-9));
    for (a, b) in rep.defect.iter().zip(&direct) {
        assert!((a - b).norm() < 1e-9);
    }
    assert!(rep.defect_mismatch() < 1e-9);
    // The returned solution solves the projected data and has zero N-component.
    let projected = Projectors::from_kernels(&spec, kd.clone()).apply_q_plus(&data).unwrap();
    let back = apply_operator(&spec, &rep.solution).unwrap();
    assert!(back.max_abs_diff(&projected) < 1e-9);
    for n in kd.n_basis() {
        assert!(rep.solution.inner(&n).norm() < 1e-10);
    }
}

#[test]
fn range_condition_by_hand_for_sine_kernel() {
    // With v = c sin(pi t): (f, v)_Omega + (g, C+ v)_Gamma, C+ = -i A^(1) = -i D_nu.
    let spec = kernel_spec();
    let (k, m) = (1, 24);
    let kd = KernelData::compute(&spec, k, m).unwrap();
    let v = &kd.n_plus[0];
    let mut data = DataTuple::zeros(&spec, k, m);
    data.g[0].set(0, 0, ONE);
    data.g[0].set(1, 0, ONE);
    let got = range_functional(&spec, &data, v);
    let ve = v.to_element(k);
    let cv: Vec<Complex64> = (0..2).map(|c| -I * trace(&ve, 2).unwrap().get(c, 0)).collect();
    let expect = cv[0].conj() + cv[1].conj();
    assert!((got - expect).norm() < 1e-12);
    // For v = sqrt(2) sin(pi t): D_nu v = i v' on t = 0 and -i v' on t = 1, v'(0) = -v'(1) = sqrt(2) pi,
    // so C+ v = sqrt(2) pi on both circles, up to the sign of the basis vector.
    assert_relative_eq!(got.norm(), 2.0 * 2f64.sqrt() * PI, max_relative = 1e-9);
}

#[test]
fn solve_rejects_mismatched_kernels() {
    let kd = KernelData::compute(&dirichlet(), 2, 16).unwrap();
    let data = DataTuple::zeros(&kernel_spec(), 2, 16);
    assert!(solve_with(&kernel_spec(), &data, &kd).is_err());
}

#[test]
fn q2_manufactured_solution() {
    let spec = BvpSpec::new(2, Complex64::new(1.0, 0.5), vec![0, 2]).unwrap();
    let u = random_cylinder(3, 20, 8, 0, Decay::new(1.0, 3.0));
    let back = solve(&spec, &apply_operator(&spec, &u).unwrap()).unwrap().solution;
    assert!(back.max_abs_diff(&u) < 1e-8 * max_abs(&u));
}

#[test]
fn roitberg_vector_of_constant() {
    let u = CylinderElement::mode_profile(1, 8, 0, |_| 1.0);
    let rv = roitberg_vector(&u, 2).unwrap();
    assert_eq!(rv.u0, u);
    for c in 0..2 {
        assert!((rv.traces[0].get(c, 0) - ONE).norm() < 1e-14);
        assert!(rv.traces[1].get(c, 0).norm() < 1e-13);
    }
}

#[test]
fn roitberg_vector_of_linear_profile() {
    let u = CylinderElement::mode_profile(1, 8, 0, |t| t);
    let rv = roitberg_vector(&u, 2).unwrap();
    assert!(rv.traces[0].get(0, 0).norm() < 1e-14);
    assert!((rv.traces[0].get(1, 0) - ONE).norm() < 1e-14);
    assert!((rv.traces[1].get(0, 0) - I).norm() < 1e-13);
    assert!((rv.traces[1].get(1, 0) + I).norm() < 1e-13);
}

#[test]
fn k_norm_equals_modified_norm() {
    let phi = FunctionParameter::log(1.0);
    for s in [-1.0, 0.0, 1.0, 2.0, 3.25] {
        for i in 0..4 {
            let u = random_cylinder(8, 18, 13, i, Decay::for_smoothness(s));
            let a = roitberg_vector(&u, 2).unwrap().k_norm(s, &phi).unwrap();
            let b = norm_modified(&u, s, &phi, 2).unwrap();
            assert!((a - b).abs() <= 1e-10 * b, "s={s}: {a} vs {b}");
        }
    }
    let u = random_cylinder(4, 12, 1, 0, Decay::new(1.0, 1.0));
    assert!(roitberg_vector(&u, 2).unwrap().k_norm(1.5, &phi).is_err());
}

#[test]
fn compatibility_detects_mutated_traces() {
    let u = random_cylinder(4, 12, 2, 0, Decay::new(1.0, 1.0));
    let mut rv = roitberg_vector(&u, 2).unwrap();
    assert!(rv.check_compatible(2.0, 1e-12).is_ok());
    let bumped = rv.traces[1].get(1, 2) + 1e-3;
    rv.traces[1].set(1, 2, bumped);
    assert!(rv.check_compatible(2.0, 1e-12).is_err());
    // Below s = 3/2 the second trace is an independent component.
    assert!(rv.check_compatible(1.0, 1e-12).is_ok());
}

#[test]
fn isomorphism_ratio_band_is_stable() {
    let spec = dirichlet();
    let reps: Vec<RatioReport> =
        [16usize, 32].iter().map(|&k| isomorphism_ratio(&spec, 2.0, &FunctionParameter::one(), k, 16, 7).unwrap()).collect();
    for r in &reps {
        assert!(r.min > 0.1 && r.max < 10.0, "{r:?}");
        assert!(r.worst_min <= r.min * (1.0 + 1e-9) && r.worst_max >= r.max * (1.0 - 1e-9));
    }
    assert!((reps[1].min / reps[0].min - 1.0).abs() < 0.2);
}

#[test]
fn kernel_elements_have_zero_image() {
    let spec = kernel_spec();
    let kd = KernelData::compute(&spec, 4, 20).unwrap();
    let n = &kd.n_basis()[0];
    let image = apply_operator(&spec, n).unwrap();
    assert!(image.norm(&spec, 2.0, &FunctionParameter::one()).unwrap() < 1e-9 * k_norm(&spec, n, 2.0, &FunctionParameter::one()).unwrap());
}

#[test]
fn apriori_without_kernel_needs_no_lower_term() {
    let rep = apriori_check(&dirichlet(), 2.0, &FunctionParameter::one(), 0.0, 16, 16, 7).unwrap();
    assert!(!rep.sigma_term_active());
    assert!(rep.constant.is_finite() && rep.constant <= rep.constant_without_sigma);
    assert_eq!(rep.kernel_elements, 0);
}

#[test]
fn apriori_with_kernel_uses_lower_term() {
    let rep = apriori_check(&kernel_spec(), 2.0, &FunctionParameter::one(), 0.0, 16, 16, 7).unwrap();
    assert!(rep.sigma_term_active());
    assert!(rep.constant.is_finite());
    assert!(rep.kernel_elements > 0);
    assert!(apriori_check(&kernel_spec(), 2.0, &FunctionParameter::one(), 2.0, 16, 4, 7).is_err());
}

#[test]
fn apriori_quotient_is_homogeneous() {
    let spec = kernel_spec();
    let one = FunctionParameter::one();
    let u = random_cylinder(8, 18, 5, 0, Decay::for_smoothness(2.0));
    let ratio = |u: &CylinderElement| {
        let lhs = k_norm(&spec, u, 2.0, &one).unwrap();
        let au = apply_operator(&spec, u).unwrap().norm(&spec, 2.0, &one).unwrap();
        lhs / (au + k_norm(&spec, u, 0.0, &one).unwrap())
    };
    let a = ratio(&u);
    let b = ratio(&u.scaled(Complex64::new(-3.0, 7.0)));
    assert!((a - b).abs() < 1e-12 * a);
}

#[test]
fn projectors_without_kernel_are_identity() {
    let p = projectors(&dirichlet(), 2.0, &FunctionParameter::one(), 4, 16).unwrap();
    let u = random_cylinder(4, 16, 1, 0, Decay::new(1.0, 1.0));
    assert_eq!(p.apply_p(&u).unwrap(), u);
}

#[test]
fn projector_properties_with_kernel() {
    let spec = BvpSpec::dirichlet(1, BvpSpec::kernel_shift(1)).unwrap();
    let (k, m) = (4, 20);
    let p = projectors(&spec, 2.0, &FunctionParameter::one(), k, m).unwrap();
    let q = projectors(&spec, -1.0, &FunctionParameter::log(-1.0), k, m).unwrap();
    let basis = p.kernels().n_basis();
    for n in &basis {
        assert!(max_abs(&p.apply_p(n).unwrap()) < 1e-10);
    }
    for xi in -(k as i64)..=(k as i64) {
        let pm = p.p_matrix(xi);
        assert!((&pm * &pm - &pm).camax() < 1e-10);
        assert_eq!(pm, q.p_matrix(xi));
        let qm = p.q_plus_matrix(xi);
        assert!((&qm * &qm - &qm).camax() < 1e-10);
        assert_eq!(qm, q.q_plus_matrix(xi));
    }
    let u = random_cylinder(k, m, 3, 0, Decay::new(1.0, 1.0));
    let pu = p.apply_p(&u).unwrap();
    for n in &basis {
        assert!(pu.inner(n).norm() < 1e-10);
    }
    // u - Pu lies in span N.
    let residual = basis.iter().fold(u.add(&pu.scaled(-ONE)), |acc, n| {
        let c = acc.inner(n);
        acc.add(&n.scaled(-c))
    });
    assert!(max_abs(&residual) < 1e-10);
}

#[test]
fn observed_index_matches_kernel_counts() {
    for spec in [dirichlet(), kernel_spec()] {
        let (dn, dnp) = kernel_counts(&spec, 8).unwrap();
        let rows = index_bookkeeping(
            &spec,
            &[(2.0, FunctionParameter::one()), (0.0, FunctionParameter::log(1.0)), (-1.0, FunctionParameter::log(-1.0))],
            8,
        )
        .unwrap();
        for r in rows {
            assert_eq!((r.kernel_dim, r.cokernel_dim), (dn, dnp));
            assert_eq!(r.index(), 0);
        }
    }
}

#[test]
fn data_tuple_text_roundtrip() {
    let spec = BvpSpec::dirichlet(2, 1.0).unwrap();
    let u = random_cylinder(2, 8, 6, 0, Decay::new(1.0, 1.0));
    let d = apply_operator(&spec, &u).unwrap();
    assert_eq!(DataTuple::from_text(&d.to_text()).unwrap(), d);
}

#[test]
fn cutoff_is_smooth_step() {
    let chi = Cutoff::new(0.1, 0.6).unwrap();
    assert_eq!(chi.eval(0.05), 1.0);
    assert_eq!(chi.eval(0.7), 0.0);
    assert_relative_eq!(chi.eval(0.35), 0.5, epsilon = 1e-14);
    for p in [1usize, 3, 6] {
        assert_relative_eq!(smoothstep(p, 0.5), 0.5, epsilon = 1e-14);
        let h = 1e-4;
        let d = (smoothstep(p, h) - smoothstep(p, 0.0)) / h;
        assert!(d < 1e-3);
    }
    assert!(Cutoff::new(0.6, 0.1).is_err());
}

#[test]
fn local_experiment_with_unit_cutoff_has_no_commutator() {
    let spec = dirichlet();
    let chi = Cutoff { a: 1.0, b: 2.0 };
    let rep = local_smoothness_experiment(
        &spec,
        |k| smooth_data(&spec, k),
        Region { t_max: 2.0 },
        chi,
        1.0,
        0.5,
        &FunctionParameter::one(),
        &[8],
    )
    .unwrap();
    let row = &rep.rows[0];
    assert!(row.commutator < 1e-8, "{row:?}");
    // The local norm is taken at a larger normal truncation, where the quotient norm is slightly larger.
    assert!(row.local >= row.global && row.local / row.global - 1.0 < 1e-2, "{row:?}");
}

#[test]
fn local_experiment_rejects_cutoff_outside_region() {
    let spec = dirichlet();
    let err = local_smoothness_experiment(
        &spec,
        |k| smooth_data(&spec, k),
        Region { t_max: 0.5 },
        Cutoff::new(0.1, 0.6).unwrap(),
        1.0,
        0.5,
        &FunctionParameter::one(),
        &[8],
    );
    assert!(err.is_err());
}

#[test]
fn smooth_data_gives_bounded_global_norms() {
    let spec = dirichlet();
    let rep = local_smoothness_experiment(
        &spec,
        |k| smooth_data(&spec, k),
        Region { t_max: 0.7 },
        Cutoff::new(0.1, 0.6).unwrap(),
        1.25,
        0.75,
        &FunctionParameter::one(),
        &[8, 16, 32],
    )
    .unwrap();
    assert!(rep.global_growth() < 1.05, "{rep:?}");
}

#[test]
fn rough_outside_data_localizes() {
    let spec = dirichlet();
    let rep = local_smoothness_experiment(
        &spec,
        |k| rough_outside_data(&spec, k, 1.25),
        Region { t_max: 0.7 },
        Cutoff::new(0.1, 0.6).unwrap(),
        1.25,
        0.75,
        &FunctionParameter::one(),
        &[8, 16, 32],
    )
    .unwrap();
    assert!(rep.global_growth() > 1.4, "{rep:?}");
    assert!(rep.local_spread() < 0.05, "{rep:?}");
    assert!(rep.commutator_spread() < 0.2, "{rep:?}");
}

#[test]
fn classical_for_smooth_data() {
    let spec = dirichlet();
    let phi = FunctionParameter::log(1.0);
    let data: Vec<ModalData> = [8usize, 16, 32].iter().map(|&k| ModalData::from_dense(&smooth_data(&spec, k))).collect();
    let rep = classical_criterion(&spec, &data, 0.0, &phi).unwrap();
    assert!(rep.classical_expected, "{:?}", rep.norms);
    assert!((rep.closure_growth() - 1.0).abs() < 0.05);
    assert!((rep.interior_growth() - 1.0).abs() < 0.05);
}

#[test]
fn classical_for_zero_data() {
    let spec = dirichlet();
    let data = vec![ModalData::from_dense(&DataTuple::zeros(&spec, 4, 16)); 2];
    let rep = classical_criterion(&spec, &data, 0.5, &FunctionParameter::log(1.0)).unwrap();
    assert!(rep.classical_expected);
    assert!(rep.sup_closure.iter().all(|s| *s == 0.0));
    assert!(classical_criterion(&spec, &data, -0.5, &FunctionParameter::one()).is_err());
}

#[test]
fn lacunary_datum_sup_grows_like_square_root_of_octaves() {
    let spec = dirichlet();
    let one = FunctionParameter::one();
    let data: Vec<ModalData> = [4u32, 16].iter().map(|&j| ModalData::lacunary(&spec, &one, j, 24).unwrap()).collect();
    let rep = classical_criterion(&spec, &data, 0.0, &one).unwrap();
    assert!(!rep.classical_expected);
    // Under phi = 1 the boundary sup is S_J^{1/2} = J^{1/2}, attained at theta = 0 on t = 1.
    assert_relative_eq!(rep.sup_closure[0], 2.0, max_relative = 1e-6);
    assert_relative_eq!(rep.sup_closure[1], 4.0, max_relative = 1e-6);
}

#[test]
fn lacunary_coefficients_are_normalized() {
    let spec = dirichlet();
    let phi = FunctionParameter::log(0.4);
    let d = ModalData::lacunary(&spec, &phi, 12, 16).unwrap();
    let total: f64 = d
        .modes
        .iter()
        .filter(|(xi, _)| **xi > 0)
        .map(|(xi, md)| {
            let p = phi.evaluate((1.0 + (*xi * *xi) as f64).sqrt());
            p * p * (2.0 * md.g[0][1].re).powi(2)
        })
        .sum();
    assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    assert!(ModalData::lacunary(&spec, &phi, 0, 16).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn manufactured_solutions_are_recovered(seed in 0u64..10_000, c in 0.1f64..20.0, neumann in any::<bool>()) {
        let spec = BvpSpec::new(1, Complex64::new(c, 0.0), vec![usize::from(neumann)]).unwrap();
        let u = random_cylinder(6, 20, seed, 0, Decay::new(1.0, 2.0));
        let back = solve(&spec, &apply_operator(&spec, &u).unwrap()).unwrap().solution;
        prop_assert!(back.max_abs_diff(&u) <= 1e-9 * max_abs(&u));
    }

    #[test]
    fn green_formula_holds(seed in 0u64..10_000, re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let spec = BvpSpec::new(1, Complex64::new(re, im), vec![0]).unwrap();
        let u = random_cylinder(3, 10, seed, 0, Decay::new(1.0, 1.0));
        let v = random_cylinder(3, 10, seed, 1, Decay::new(1.0, 1.0));
        let t = green_terms(&spec, &u, &v).unwrap();
        prop_assert!(t.defect() <= 1e-9 * t.scale().max(1.0));
    }

    #[test]
    fn boundary_values_follow_traces(seed in 0u64..10_000) {
        let u = random_cylinder(3, 10, seed, 2, Decay::new(1.0, 1.0));
        let spec = BvpSpec::new(2, ONE, vec![1, 3]).unwrap();
        let d = apply_operator(&spec, &u).unwrap();
        let t2: BoundaryElement = trace(&u, 2).unwrap();
        let t4: BoundaryElement = trace(&u, 4).unwrap();
        prop_assert_eq!(&d.g[0], &t2);
        prop_assert_eq!(&d.g[1], &t4);
    }
}
