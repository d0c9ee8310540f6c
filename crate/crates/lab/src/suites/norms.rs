//! Norm-level suites: the scale itself, duality, traces and eps-independence.

use anyhow::{anyhow, Result};
use num_complex::Complex64;
use refined_scale::bvp::roitberg_vector;
use refined_scale::karamata::reciprocal;
use refined_scale::scale::sample::{random_boundary, random_cylinder, Decay};
use refined_scale::scale::{
    dual_gram, interp_modified, is_critical, norm_dual, norm_gamma, norm_gamma_atlas, norm_lattice, norm_modified, norm_omega,
    norm_omegabar, normal_size, omegabar_gram, quad_form, quotient_gram, trace, CylinderElement, FrequencyLattice, SpaceIndex,
    SpectralElement,
};
use refined_scale::FunctionParameter;

use super::{extremes, stability};
use crate::config::ExperimentConfig;
use crate::report::{Bound, Measurement};

fn label(idx: &SpaceIndex) -> String {
    format!("s={},phi={}", idx.s, idx.phi)
}

fn sample(cfg: &ExperimentConfig, k: usize, decay: Decay) -> Vec<CylinderElement> {
    let m = normal_size(k);
    (0..cfg.sample as u64).map(|i| random_cylinder(k, m, cfg.seed, i, decay)).collect()
}

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("{e}")
}

pub fn run(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let mut rows = Vec::new();
    let dims = cfg.param_f64_list("lattice_dims", &[1.0, 2.0])?;
    let max_modes = cfg.param_usize("max_lattice_modes", 20_000)?;
    let r = cfg.param_usize("modified_r", 1)?;
    let tol_sobolev = cfg.tolerance("sobolev", 4.0 * f64::EPSILON);
    let tol_stab = cfg.tolerance("stability", 0.2);
    for idx in cfg.space_indices()? {
        let name = label(&idx);
        if idx.phi.is_one() {
            for &dim in &dims {
                for &k in &cfg.truncations {
                    let lat = FrequencyLattice::new(dim as usize, k);
                    if lat.len() > max_modes {
                        continue;
                    }
                    let mut u = SpectralElement::zeros(lat);
                    let mut worst: f64 = 0.0;
                    for (i, b) in lat.brackets().into_iter().enumerate() {
                        u.coeffs[i] = Complex64::new(1.0, 0.0);
                        let n = norm_lattice(&u, &idx).map_err(err)?;
                        u.coeffs[i] = Complex64::new(0.0, 0.0);
                        let classical = b.powf(2.0 * idx.s);
                        worst = worst.max((n * n - classical).abs() / classical);
                    }
                    rows.push(Measurement::new(
                        format!("{name},dim={dim},K={k}"),
                        "max relative deviation of the squared single-mode norm from <xi>^{2s}",
                        worst,
                        Bound::AtMost(tol_sobolev),
                    ));
                }
            }
        }

        let (mut lows, mut highs) = (Vec::new(), Vec::new());
        for &k in &cfg.truncations {
            let (lo, hi) = extremes((0..cfg.sample as u64).map(|i| {
                let g = random_boundary(k, cfg.seed, i, idx.s + 1.0);
                norm_gamma_atlas(&g, idx.s, &idx.phi) / norm_gamma(&g, idx.s, &idx.phi)
            }));
            rows.push(Measurement::new(
                format!("{name},K={k}"),
                "chart-norm / Fourier-norm ratio range on Gamma (lower)",
                lo,
                Bound::Within(0.2, 5.0),
            ));
            rows.push(Measurement::new(
                format!("{name},K={k}"),
                "chart-norm / Fourier-norm ratio range on Gamma (upper)",
                hi,
                Bound::Within(0.2, 5.0),
            ));
            lows.push(lo);
            highs.push(hi);
        }
        rows.push(stability(&name, "lower chart constant", &lows, tol_stab));
        rows.push(stability(&name, "upper chart constant", &highs, tol_stab));

        if idx.s > r as f64 - 0.5 {
            let mut highs = Vec::new();
            for &k in &cfg.truncations {
                let mut ratios = Vec::new();
                for u in sample(cfg, k, Decay::for_smoothness(idx.s)) {
                    let a = norm_modified(&u, idx.s, &idx.phi, r).map_err(err)?;
                    ratios.push(a / norm_omega(&u, idx.s, &idx.phi).map_err(err)?);
                }
                let (lo, hi) = extremes(ratios);
                rows.push(Measurement::new(
                    format!("{name},r={r},K={k}"),
                    "modified / quotient norm (lower)",
                    lo,
                    Bound::AtLeast(1.0 - 1e-12),
                ));
                highs.push(hi);
            }
            rows.push(stability(format!("{name},r={r}"), "modified / quotient upper constant", &highs, tol_stab));
        }
    }
    Ok(rows)
}

fn invert(g: &nalgebra::DMatrix<f64>) -> Result<nalgebra::DMatrix<f64>> {
    Ok(g.clone().cholesky().ok_or_else(|| anyhow!("Gram is not positive definite"))?.inverse())
}

/// sup |(u,v)| / ||v|| over v in the realization of index (-s, 1/phi) that is
/// not used for s itself: the quotient for s < 0, the zero extension for s >= 0.
pub fn norm_by_duality(u: &CylinderElement, s: f64, phi: &FunctionParameter) -> Result<f64> {
    if s < 0.0 {
        return norm_dual(u, s, phi).map_err(err);
    }
    let inv = reciprocal(phi).map_err(err)?;
    let mut total = 0.0;
    for xi in u.xis() {
        let g = invert(&*omegabar_gram(-s, &inv, xi, u.m()).map_err(err)?)?;
        total += quad_form(&g, u.mode(xi));
    }
    Ok(total.sqrt())
}

pub fn run_duality(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let mut rows = Vec::new();
    let tol_dd = cfg.tolerance("double_dual", 1e-8);
    let tol_riesz = cfg.tolerance("riesz", 1e-9);
    let tol_stab = cfg.tolerance("stability", 0.2);
    for idx in cfg.space_indices()? {
        let name = label(&idx);
        let (s, phi) = (idx.s, &idx.phi);
        if s < 0.0 {
            let inv = reciprocal(phi).map_err(err)?;
            for &k in &cfg.truncations {
                let m = normal_size(k);
                let mut worst: f64 = 0.0;
                for xi in [0, k as i64 / 2, k as i64] {
                    let d = dual_gram(s, phi, xi, m).map_err(err)?;
                    let q = quotient_gram(-s, &inv, xi, m).map_err(err)?;
                    worst = worst.max((invert(&d)? - &*q).amax() / q.amax());
                }
                rows.push(Measurement::new(format!("{name},K={k}"), "double-dual Gram deviation (relative)", worst, Bound::AtMost(tol_dd)));

                let u = random_cylinder(k, m, cfg.seed, 0, Decay::new(1.0, 1.0));
                let mut v = CylinderElement::zeros(k, m);
                for xi in u.xis() {
                    let d = dual_gram(s, phi, xi, m).map_err(err)?.map(|x| Complex64::new(x, 0.0));
                    *v.mode_mut(xi) = d * u.mode(xi);
                }
                let du = norm_dual(&u, s, phi).map_err(err)?;
                let bound = du * norm_omega(&v, -s, &inv).map_err(err)?;
                rows.push(Measurement::new(
                    format!("{name},K={k}"),
                    "Riesz pairing / norm product deviation",
                    (u.inner(&v).norm() / bound - 1.0).abs(),
                    Bound::AtMost(tol_riesz),
                ));
                let worst = (1..=cfg.sample.min(8) as u64)
                    .map(|i| {
                        let w = random_cylinder(k, m, cfg.seed, i, Decay::new(1.0, 1.0));
                        Ok(u.inner(&w).norm() / (du * norm_omega(&w, -s, &inv).map_err(err)?))
                    })
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                rows.push(Measurement::new(
                    format!("{name},K={k}"),
                    "pairing / norm product on random pairs",
                    worst,
                    Bound::AtMost(1.0 + 1e-12),
                ));
            }
        }
        if s.abs() < 0.5 {
            // Realizations: zero extension (a), quotient (b), duality (c).
            let names = ["omegabar/quotient", "omegabar/duality", "quotient/duality"];
            let mut consts = vec![Vec::new(); 6];
            for &k in &cfg.truncations {
                let mut ratios = vec![Vec::new(); 3];
                for u in sample(cfg, k, Decay::for_smoothness(s)) {
                    let a = norm_omegabar(&u, s, phi).map_err(err)?;
                    let b = norm_omega(&u, s, phi).map_err(err)?;
                    let c = norm_by_duality(&u, s, phi)?;
                    ratios[0].push(a / b);
                    ratios[1].push(a / c);
                    ratios[2].push(b / c);
                }
                for (j, r) in ratios.into_iter().enumerate() {
                    let (lo, hi) = extremes(r);
                    rows.push(Measurement::new(format!("{name},K={k}"), format!("{} lower constant", names[j]), lo, Bound::AtLeast(1e-3)));
                    rows.push(Measurement::new(format!("{name},K={k}"), format!("{} upper constant", names[j]), hi, Bound::AtMost(1e3)));
                    consts[2 * j].push(lo);
                    consts[2 * j + 1].push(hi);
                }
            }
            for (j, c) in consts.iter().enumerate() {
                let q = format!("{} {} constant", names[j / 2], if j % 2 == 0 { "lower" } else { "upper" });
                rows.push(stability(&name, &q, c, tol_stab));
            }
        }
    }
    Ok(rows)
}

pub fn run_traces(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let r = cfg.bvp_spec()?.order();
    let tol_iso = cfg.tolerance("isometry", 1e-10);
    let tol_stab = cfg.tolerance("stability", 0.2);
    let mut rows = Vec::new();
    for idx in cfg.space_indices()? {
        let name = label(&idx);
        let (s, phi) = (idx.s, &idx.phi);
        if is_critical(s, r) {
            continue;
        }
        let orders: Vec<usize> = (1..=r).filter(|&k| s > k as f64 - 0.5).collect();
        let mut consts = vec![Vec::new(); orders.len()];
        for &k in &cfg.truncations {
            let mut worst: f64 = 0.0;
            let mut compatible = true;
            let mut best = vec![0.0f64; orders.len()];
            for u in sample(cfg, k, Decay::for_smoothness(s)) {
                let rv = roitberg_vector(&u, r).map_err(err)?;
                let a = rv.k_norm(s, phi).map_err(err)?;
                let b = norm_modified(&u, s, phi, r).map_err(err)?;
                worst = worst.max((a - b).abs() / b);
                compatible &= rv.check_compatible(s, 1e-9).is_ok();
                if !orders.is_empty() {
                    let n = norm_omega(&u, s, phi).map_err(err)?;
                    for (j, &ord) in orders.iter().enumerate() {
                        let g = trace(&u, ord).map_err(err)?;
                        best[j] = best[j].max(norm_gamma(&g, s - ord as f64 + 0.5, phi) / n);
                    }
                }
            }
            rows.push(Measurement::new(
                format!("{name},r={r},K={k}"),
                "relative gap between K-space norm and modified norm",
                worst,
                Bound::AtMost(tol_iso),
            ));
            rows.push(Measurement::check(format!("{name},r={r},K={k}"), "trace components are compatible", compatible));
            for (j, c) in best.into_iter().enumerate() {
                consts[j].push(c);
            }
        }
        for (j, &ord) in orders.iter().enumerate() {
            rows.push(Measurement::new(
                format!("{name},k={ord}"),
                "trace constant at the finest truncation",
                *consts[j].last().unwrap(),
                Bound::Within(1e-6, 1e6),
            ));
            rows.push(stability(format!("{name},k={ord}"), "trace constant", &consts[j], tol_stab));
        }
    }
    Ok(rows)
}

pub fn run_epsilon(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let r = cfg.bvp_spec()?.order();
    let eps = cfg.param_f64_list("eps", &[0.25, 0.75])?;
    if eps.len() != 2 {
        return Err(anyhow!("eps must hold two values"));
    }
    let band = cfg.tolerance("band", 2.0);
    let mut rows = Vec::new();
    for idx in cfg.space_indices()? {
        let name = format!("{},r={r},eps={}/{}", label(&idx), eps[0], eps[1]);
        if !is_critical(idx.s, r) {
            return Err(anyhow!("index {} is not in E_{r}", label(&idx)));
        }
        let mut all = Vec::new();
        for &k in &cfg.truncations {
            let mut ratios = Vec::new();
            for u in sample(cfg, k, Decay::for_smoothness(idx.s)) {
                let a = interp_modified(&u, idx.s, &idx.phi, r, eps[0]).map_err(err)?;
                let b = interp_modified(&u, idx.s, &idx.phi, r, eps[1]).map_err(err)?;
                ratios.push(a / b);
            }
            let (lo, hi) = extremes(ratios.iter().copied());
            rows.push(Measurement::new(format!("{name},K={k}"), "norm ratio band max/min", hi / lo, Bound::AtMost(band)));
            all.extend(ratios);
        }
        let (lo, hi) = extremes(all);
        rows.push(Measurement::new(name, "norm ratio band max/min over all truncations", hi / lo, Bound::AtMost(band)));
    }
    Ok(rows)
}
