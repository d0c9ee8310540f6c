//! Local smoothness and classical solutions.

use anyhow::{anyhow, Result};
use refined_scale::bvp::{classical_criterion, local_smoothness_experiment, rough_outside_data, smooth_data, Cutoff, ModalData, Region};
use refined_scale::scale::{hoermander_condition, Verdict};

use crate::config::ExperimentConfig;
use crate::report::{Bound, Measurement};

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("{e}")
}

pub fn run_local(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let spec = cfg.bvp_spec()?;
    let beta = cfg.param_f64("beta", 1.25)?;
    let eps = cfg.param_f64("eps", 0.75)?;
    let cut = cfg.param_f64_list("cutoff", &[0.1, 0.6])?;
    if cut.len() != 2 {
        return Err(anyhow!("cutoff must hold two values"));
    }
    let t_max = cfg.param_f64("t_max", 0.7)?;
    let min_growth = cfg.param_f64("min_global_growth", 2.0)?;
    let tol_local = cfg.tolerance("local_spread", 0.1);
    let tol_comm = cfg.tolerance("commutator_spread", 0.2);
    let tol_bdry = cfg.tolerance("boundary_commutator", 1e-3);
    let cutoff = Cutoff::new(cut[0], cut[1]).map_err(err)?;
    let mut rows = Vec::new();
    for idx in cfg.space_indices()? {
        let rep = local_smoothness_experiment(
            &spec,
            |k| rough_outside_data(&spec, k, beta),
            Region { t_max },
            cutoff,
            idx.s,
            eps,
            &idx.phi,
            &cfg.truncations,
        )
        .map_err(err)?;
        let name = format!("{spec},s={},eps={eps},phi={},beta={beta},chi=({},{}),t<{t_max}", idx.s, idx.phi, cut[0], cut[1]);
        for r in &rep.rows {
            let p = format!("{name},K={}", r.k);
            rows.push(Measurement::new(&p, "global norm ||u||", r.global, Bound::AtLeast(0.0)));
            rows.push(Measurement::new(&p, "local norm ||chi u||", r.local, Bound::AtLeast(0.0)));
            rows.push(Measurement::new(&p, "commutator constant", r.commutator, Bound::AtLeast(0.0)));
            rows.push(Measurement::new(&p, "boundary commutator", r.boundary_commutator, Bound::AtMost(tol_bdry)));
        }
        rows.push(Measurement::new(&name, "global norm growth over the sweep", rep.global_growth(), Bound::AtLeast(min_growth)));
        rows.push(Measurement::new(&name, "local norm spread over the sweep", rep.local_spread(), Bound::AtMost(tol_local)));
        rows.push(Measurement::new(&name, "commutator constant spread over the sweep", rep.commutator_spread(), Bound::AtMost(tol_comm)));
    }
    Ok(rows)
}

pub fn run_classical(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let spec = cfg.bvp_spec()?;
    let m = cfg.param_usize("normal_size", 24)?;
    let t_max = cfg.param_f64("t_max", 1e12)?;
    let growth: Vec<String> = cfg.param_phis("lacunary_growth", &["log^0.4"])?.iter().map(|p| p.to_string()).collect();
    let stable: Vec<String> = cfg.param_phis("lacunary_stable", &["log^1"])?.iter().map(|p| p.to_string()).collect();
    let min_growth = cfg.param_f64("min_growth", 1.5)?;
    let tol_stable = cfg.tolerance("stable_band", 0.1);
    let smooth_ks: Vec<usize> = cfg.param_f64_list("smooth_truncations", &[8.0, 16.0, 32.0])?.iter().map(|&k| k as usize).collect();
    let mut rows = Vec::new();
    for idx in cfg.space_indices()? {
        let phi = &idx.phi;
        let name = format!("{spec},sigma={},phi={phi}", idx.s);
        let report = hoermander_condition(phi, t_max);
        // For phi = log^r the integral of dt / (t phi^2) is that of dx / x^{2r}.
        if let Some([r]) = phi.exponents() {
            let expected = if *r > 0.5 { Verdict::Converges } else { Verdict::Diverges };
            rows.push(Measurement::check(&name, format!("integral condition verdict {:?}", report.verdict), report.verdict == expected));
        }

        let smooth: Vec<ModalData> = smooth_ks.iter().map(|&k| ModalData::from_dense(&smooth_data(&spec, k))).collect();
        let rep = classical_criterion(&spec, &smooth, idx.s, phi).map_err(err)?;
        rows.push(Measurement::check(
            format!("{name},smooth datum"),
            "classical solution expected iff the integral converges",
            rep.classical_expected == (report.verdict == Verdict::Converges),
        ));

        let key = phi.to_string();
        let grows = growth.contains(&key);
        if !grows && !stable.contains(&key) {
            continue;
        }
        let data = cfg
            .truncations
            .iter()
            .map(|&j| ModalData::lacunary(&spec, phi, j as u32, m))
            .collect::<refined_scale::Result<Vec<_>>>()
            .map_err(err)?;
        let rep = classical_criterion(&spec, &data, idx.s, phi).map_err(err)?;
        for (j, sup) in cfg.truncations.iter().zip(&rep.sup_closure) {
            rows.push(Measurement::new(format!("{name},octaves={j}"), "closure sup of the solution", *sup, Bound::AtLeast(0.0)));
        }
        let g = rep.closure_growth();
        let p = format!("{name},lacunary datum,octaves={:?}", cfg.truncations);
        if grows {
            rows.push(Measurement::new(p, "closure sup growth", g, Bound::AtLeast(min_growth)));
        } else {
            rows.push(Measurement::new(p, "closure sup growth", g, Bound::Within(1.0 - tol_stable, 1.0 + tol_stable)));
        }
    }
    Ok(rows)
}
