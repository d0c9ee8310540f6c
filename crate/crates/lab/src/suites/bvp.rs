//! Suites on the model boundary-value problem.

use anyhow::{anyhow, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use refined_scale::bvp::{
    apply_operator, apriori_check, isomorphism_ratio, kernel_counts, observed_index, projectors, range_functional, solve, solve_with,
    BvpSpec, DataTuple, KernelData,
};
use refined_scale::pairs::{fredholm_interp_check, parse_matrices, FredholmReport, HilbertPair};
use refined_scale::scale::normal_size;
use refined_scale::scale::sample::{random_boundary, random_cylinder, Decay};
use refined_scale::FunctionParameter;

use super::interpolation::{random_matrix, random_pair};
use super::stability;
use crate::config::ExperimentConfig;
use crate::report::{Bound, Measurement};

fn err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("{e}")
}

/// Second-order Dirichlet problem with e^{i n theta} sin(pi t) in its kernel.
fn kernel_spec(mode: i64) -> Result<BvpSpec> {
    BvpSpec::dirichlet(1, BvpSpec::kernel_shift(mode)).map_err(err)
}

fn random_data(spec: &BvpSpec, k: usize, seed: u64, i: u64) -> DataTuple {
    let m = normal_size(k);
    let f = random_cylinder(k, m, seed, i, Decay::new(1.0, 1.0));
    let g = (0..spec.q() as u64).map(|j| random_boundary(k, seed, 1000 * (i + 1) + j, 1.0)).collect();
    DataTuple { f, g }
}

pub fn run_isomorphism(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let spec = cfg.bvp_spec()?;
    let tol_stab = cfg.tolerance("stability", 0.2);
    let tol_sol = cfg.tolerance("manufactured", 1e-9);
    let tol_defect = cfg.tolerance("defect", 1e-9);
    let mut rows = Vec::new();
    for idx in cfg.space_indices()? {
        let name = format!("{spec},s={},phi={}", idx.s, idx.phi);
        let (mut lows, mut highs) = (Vec::new(), Vec::new());
        for &k in &cfg.truncations {
            let r = isomorphism_ratio(&spec, idx.s, &idx.phi, k, cfg.sample, cfg.seed).map_err(err)?;
            let p = format!("{name},K={k}");
            // The extremes over the whole discrete space gate stability; the random
            // sample changes with K and must stay inside them.
            let band = Bound::Within(r.worst_min * (1.0 - 1e-9), r.worst_max * (1.0 + 1e-9));
            rows.push(Measurement::new(&p, "isomorphism ratio min (sample)", r.min, band));
            rows.push(Measurement::new(&p, "isomorphism ratio max (sample)", r.max, band));
            rows.push(Measurement::new(&p, "isomorphism ratio min", r.worst_min, Bound::Within(1e-6, 1e6)));
            rows.push(Measurement::new(&p, "isomorphism ratio max", r.worst_max, Bound::Within(1e-6, 1e6)));
            lows.push(r.worst_min);
            highs.push(r.worst_max);
        }
        rows.push(stability(&name, "isomorphism ratio min", &lows, tol_stab));
        rows.push(stability(&name, "isomorphism ratio max", &highs, tol_stab));
    }

    let max_k = cfg.param_usize("manufactured_max_k", 32)?;
    for &k in cfg.truncations.iter().filter(|&&k| k <= max_k) {
        let m = normal_size(k);
        let mut worst: f64 = 0.0;
        for i in 0..cfg.sample.min(4) as u64 {
            let u = random_cylinder(k, m, cfg.seed, i, Decay::new(1.0, 2.0));
            let back = solve(&spec, &apply_operator(&spec, &u).map_err(err)?).map_err(err)?.solution;
            let scale = u.max_abs_diff(&u.scaled(Complex64::new(0.0, 0.0)));
            worst = worst.max(back.max_abs_diff(&u) / scale);
        }
        rows.push(Measurement::new(
            format!("{spec},K={k}"),
            "manufactured solution recovery error (relative)",
            worst,
            Bound::AtMost(tol_sol),
        ));
    }

    let mode = cfg.param_usize("kernel_check_mode", 0)? as i64;
    let kspec = kernel_spec(mode)?;
    let k = cfg.truncations[0];
    let kd = KernelData::compute(&kspec, k, normal_size(k)).map_err(err)?;
    let p = format!("{kspec},K={k}");
    rows.push(Measurement::new(&p, "dim N", kd.dim_n() as f64, Bound::AtLeast(1.0)));
    rows.push(Measurement::new(&p, "index dim N - dim N+", kd.index() as f64, Bound::Within(0.0, 0.0)));
    let mut worst: f64 = 0.0;
    for i in 0..cfg.sample.min(4) as u64 {
        let data = random_data(&kspec, k, cfg.seed, i);
        let rep = solve_with(&kspec, &data, &kd).map_err(err)?;
        for (d, v) in rep.defect.iter().zip(&kd.n_plus) {
            worst = worst.max((d - range_functional(&kspec, &data, v)).norm());
        }
        worst = worst.max(rep.defect_mismatch());
    }
    rows.push(Measurement::new(&p, "solvability defect vs range condition", worst, Bound::AtMost(tol_defect)));
    for idx in cfg.space_indices()? {
        let row = observed_index(&kspec, idx.s, &idx.phi, k).map_err(err)?;
        let q = format!("{p},s={},phi={}", idx.s, idx.phi);
        rows.push(Measurement::check(
            &q,
            "observed kernel and cokernel match dim N, dim N+",
            (row.kernel_dim, row.cokernel_dim) == (kd.dim_n(), kd.dim_n_plus()),
        ));
        rows.push(Measurement::new(&q, "observed index", row.index() as f64, Bound::Within(0.0, 0.0)));
    }
    Ok(rows)
}

pub fn run_apriori(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let spec = cfg.bvp_spec()?;
    let drop = cfg.param_f64("sigma_drop", 2.0)?;
    let tol_stab = cfg.tolerance("stability", 0.2);
    let mut rows = Vec::new();
    for idx in cfg.space_indices()? {
        let sigma = idx.s - drop;
        let name = format!("{spec},s={},phi={},sigma={sigma}", idx.s, idx.phi);
        let mut consts = Vec::new();
        for &k in &cfg.truncations {
            let (dn, _) = kernel_counts(&spec, k).map_err(err)?;
            let r = apriori_check(&spec, idx.s, &idx.phi, sigma, k, cfg.sample, cfg.seed).map_err(err)?;
            let p = format!("{name},K={k}");
            rows.push(Measurement::new(&p, "a priori constant", r.constant, Bound::Within(1e-6, 1e6)));
            rows.push(Measurement::check(&p, "lower-order term needed iff N is nontrivial", r.sigma_term_active() == (dn > 0)));
            if dn > 0 {
                rows.push(Measurement::new(&p, "sample elements meeting N", r.kernel_elements as f64, Bound::AtLeast(1.0)));
            }
            consts.push(r.constant);
        }
        rows.push(stability(&name, "a priori constant", &consts, tol_stab));
    }
    Ok(rows)
}

fn fredholm_rows(rows: &mut Vec<Measurement>, name: &str, r: &FredholmReport, expect: (usize, usize)) {
    rows.push(Measurement::check(name, "counts agree under X0, X1 and X_psi", r.consistent()));
    rows.push(Measurement::check(
        name,
        format!("kernel {} and codimension {}", expect.0, expect.1),
        r.forms.iter().all(|f| (f.kernel_dim, f.range_codim) == expect),
    ));
}

pub fn run_fredholm(cfg: &ExperimentConfig) -> Result<Vec<Measurement>> {
    let mut rows = Vec::new();
    let n = cfg.param_usize("pair_dim", 8)?;
    let psi = FunctionParameter::power(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let x = HilbertPair::diagonal(&[1.0, 1.0, 1.0], &[1.0, 4.0, 9.0]).map_err(err)?;
    let t = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0, 2.0]));
    let r = fredholm_interp_check(&x, &x, &t, &psi).map_err(err)?;
    fredholm_rows(&mut rows, "T=diag(0,1,2)", &r, (1, 1));

    let x = random_pair(&mut rng, n)?;
    let q = random_matrix(&mut rng, n, n).qr().q();
    let mut d = DMatrix::identity(n, n);
    d[(0, 0)] = 0.0;
    d[(1, 1)] = 0.0;
    let r = fredholm_interp_check(&x, &x, &(&q * d * q.transpose()), &psi).map_err(err)?;
    fredholm_rows(&mut rows, &format!("T=projection of rank {},n={n}", n - 2), &r, (2, 2));

    let y = random_pair(&mut rng, n - 1)?;
    let t = random_matrix(&mut rng, n - 1, n);
    let r = fredholm_interp_check(&x, &y, &t, &psi).map_err(err)?;
    fredholm_rows(&mut rows, &format!("T=random {}x{n}", n - 1), &r, (1, 0));
    rows.push(Measurement::new(format!("T=random {}x{n}", n - 1), "index under X_psi", r.forms[2].index() as f64, Bound::Within(1.0, 1.0)));

    if let Some(path) = cfg.params.get("operator_file") {
        let path = path.as_str().ok_or_else(|| anyhow!("operator_file must be a path"))?;
        let text = std::fs::read_to_string(path).map_err(|e| anyhow!("reading {path}: {e}"))?;
        // dim n, then gram0 and gram1 of X, gram0 and gram1 of Y, and T.
        let mut m = parse_matrices(&text, 5).map_err(err)?.into_iter();
        let mut next = || m.next().expect("five matrices");
        let x = HilbertPair::new(next(), next()).map_err(err)?;
        let y = HilbertPair::new(next(), next()).map_err(err)?;
        let r = fredholm_interp_check(&x, &y, &next(), &psi).map_err(err)?;
        let name = format!("T from {path}");
        rows.push(Measurement::check(&name, "counts agree under X0, X1 and X_psi", r.consistent()));
        let i0 = r.forms[0].index() as f64;
        rows.push(Measurement::new(&name, "index under X_psi", r.forms[2].index() as f64, Bound::Within(i0, i0)));
    }

    let spec = cfg.bvp_spec()?;
    let indices = cfg.space_indices()?;
    let first = indices.first().ok_or_else(|| anyhow!("fredholm needs at least one index"))?;
    for &k in &cfg.truncations {
        let m = normal_size(k);
        let p = projectors(&spec, first.s, &first.phi, k, m).map_err(err)?;
        let name = format!("{spec},K={k}");
        let (mut idem, mut kill, mut same) = (0.0f64, 0.0f64, true);
        for xi in -(k as i64)..=(k as i64) {
            let pm = p.p_matrix(xi);
            let qm = p.q_plus_matrix(xi);
            idem = idem.max((&pm * &pm - &pm).camax()).max((&qm * &qm - &qm).camax());
            for other in &indices[1..] {
                let o = projectors(&spec, other.s, &other.phi, k, m).map_err(err)?;
                same &= o.p_matrix(xi) == pm && o.q_plus_matrix(xi) == qm;
            }
        }
        for nb in p.kernels().n_basis() {
            let pn = p.apply_p(&nb).map_err(err)?;
            kill = kill.max(pn.max_abs_diff(&pn.scaled(Complex64::new(0.0, 0.0))));
        }
        rows.push(Measurement::new(&name, "projector idempotence defect", idem, Bound::AtMost(1e-10)));
        rows.push(Measurement::new(&name, "max |P n| over the N basis", kill, Bound::AtMost(1e-10)));
        rows.push(Measurement::check(&name, "projectors independent of (s, phi)", same));
        for idx in &indices {
            let row = observed_index(&spec, idx.s, &idx.phi, k).map_err(err)?;
            rows.push(Measurement::check(
                format!("{name},s={},phi={}", idx.s, idx.phi),
                "observed kernel and cokernel match dim N, dim N+",
                (row.kernel_dim, row.cokernel_dim) == (p.kernels().dim_n(), p.kernels().dim_n_plus()),
            ));
        }
    }
    Ok(rows)
}
