//! Interpolation of Hilbert pairs with function parameters.

use anyhow::{anyhow, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use refined_scale::karamata::make_theta_psi;
use refined_scale::pairs::{direct_sum_forms, interp_form, interp_operator_bound, product_pair, reiteration_check, HilbertPair};
use refined_scale::scale::{bracket, weight};
use refined_scale::FunctionParameter;

use super::stability;
use crate::config::ExperimentConfig;
use crate::report::{Bound, Measurement};

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("{e}")
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random pair with gram1 roughly ten times gram0.
pub fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> Result<HilbertPair> {
    let a = random_matrix(rng, n, n);
    let b = random_matrix(rng, n, n);
    let g0 = &a * a.transpose() + DMatrix::identity(n, n) * 0.5;
    let g1 = (&b * b.transpose() + DMatrix::identity(n, n) * 0.5) * 10.0;
    HilbertPair::new(g0, g1).map_err(err)
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let mut rows = Vec::new();
    let triples = cfg.param_rows("triples", 3, &[&[0.0, 1.0, 1.0], &[2.0, 0.5, 1.5], &[-1.0, 1.0, 2.0]])?;
    let phis = cfg.param_phis("phis", &["1", "log", "log^-1", "log*loglog"])?;
    let max_mode = cfg.param_usize("max_mode", 64)?;
    let n = cfg.param_usize("pair_dim", 8)?;
    let slack = cfg.tolerance("weight_slack", 1e-12);
    let tol_product = cfg.tolerance("product", 1e-12);
    let tol_spread = cfg.tolerance("reiteration_spread", 0.1);

    let brackets: Vec<f64> = (0..=max_mode).map(|x| bracket(x as f64)).collect();
    for t in &triples {
        let (s, eps, delta) = (t[0], t[1], t[2]);
        let w0: Vec<f64> = brackets.iter().map(|b| b.powf(2.0 * (s - eps))).collect();
        let w1: Vec<f64> = brackets.iter().map(|b| b.powf(2.0 * (s + delta))).collect();
        let pair = HilbertPair::diagonal(&w0, &w1).map_err(err)?;
        for phi in &phis {
            let psi = make_theta_psi(phi, eps, delta).map_err(err)?;
            let g = interp_form(&pair, &psi).map_err(err)?;
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for (i, b) in brackets.iter().enumerate() {
                let r = g[(i, i)] / weight(s, phi, *b);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let p = format!("s={s},eps={eps},delta={delta},phi={phi},|xi|<={max_mode}");
            rows.push(Measurement::new(&p, "X_psi / H^{s,phi} weight ratio (lower)", lo, Bound::Within(1.0 - slack, 2.0 + slack)));
            rows.push(Measurement::new(&p, "X_psi / H^{s,phi} weight ratio (upper)", hi, Bound::Within(1.0 - slack, 2.0 + slack)));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for trial in 0..cfg.sample {
        let x = random_pair(&mut rng, n)?;
        let y = random_pair(&mut rng, n)?;
        let t = random_matrix(&mut rng, n, n);
        let b = interp_operator_bound(&x, &y, &t, &FunctionParameter::power(0.5)).map_err(err)?;
        let p = format!("n={n},trial={trial},psi=t^0.5");
        rows.push(Measurement::check(&p, "norm_psi <= sqrt(2) max(norm0, norm1)", b.general_bound_holds()));
        rows.push(Measurement::new(&p, "norm_psi / power bound", b.norm_psi / b.power_bound, Bound::AtMost(1.001)));
    }

    let pairs = (0..3).map(|_| random_pair(&mut rng, n)).collect::<Result<Vec<_>>>()?;
    let psi = FunctionParameter::power(1.0 / 3.0);
    let whole = interp_form(&product_pair(&pairs).map_err(err)?, &psi).map_err(err)?;
    let parts = direct_sum_forms(&pairs, &psi).map_err(err)?;
    rows.push(Measurement::new(
        format!("pairs=3,n={n},psi=t^(1/3)"),
        "product form vs per-factor forms (relative max deviation)",
        (&whole - &parts).amax() / parts.amax(),
        Bound::AtMost(tol_product),
    ));

    let families: [(&str, i32, [FunctionParameter; 3]); 2] = [
        ("power", 4, [FunctionParameter::power(0.25), FunctionParameter::power(0.75), FunctionParameter::power(0.5)]),
        ("log-refined", 2, [FunctionParameter::power(0.5), FunctionParameter::log_power(0.5, vec![1.0]), FunctionParameter::power(0.5)]),
    ];
    for (name, exp, [zeta, eta, chi]) in &families {
        let mut consts = Vec::new();
        for &dim in &cfg.truncations {
            let w1: Vec<f64> = (1..=dim).map(|l| (l as f64).powi(*exp)).collect();
            let pair = HilbertPair::diagonal(&vec![1.0; dim], &w1).map_err(err)?;
            let c = reiteration_check(&pair, zeta, eta, chi).map_err(err)?.constant();
            rows.push(Measurement::new(
                format!("family={name},zeta={zeta},eta={eta},chi={chi},dim={dim}"),
                "reiteration equivalence constant",
                c,
                Bound::AtMost(2.0),
            ));
            consts.push(c);
        }
        rows.push(stability(format!("family={name}"), "reiteration constant", &consts, tol_spread));
    }
    Ok(rows)
}
