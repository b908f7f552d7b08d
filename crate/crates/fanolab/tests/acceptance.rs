//! Release acceptance suite: one criterion per test, each printing a
//! PASS/FAIL line with the measured quantity against its pinned tolerance.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use fanolab::dynamics::{
    backward_step, geodesic, krf_run, noncoercive_probe, ricci_iterate, FlowScheme,
};
use fanolab::functionals::{alpha_estimate, gibbs_measure, ma_measure};
use fanolab::grid::tv_distance;
use fanolab::lab;
use fanolab::model::{klt_mass_profile, ln_1p_exp, profile_saturates, ModelSpace};
use fanolab::sampling::Sampler;
use fanolab::solver::{ke_solve, ricci_inverse, Gauge, SolverConfig};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "[{}] criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}

fn sup_normalize(v: &[f64]) -> Vec<f64> {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter().map(|x| x - m).collect()
}

#[test]
fn criterion_01_ke_fixed_points() {
    let cfg = SolverConfig::default();
    let round = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
    let (phi, res) = ke_solve(&round, &cfg, Gauge::None).unwrap();
    let sup = phi.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let ri = ricci_inverse(&round, &vec![0.0; round.grid.len()], &cfg).unwrap();
    let ri_sup = ri.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let product = ModelSpace::product(10.0, 128).unwrap();
    let (phip, resp) = ke_solve(&product, &cfg, Gauge::None).unwrap();
    let supp = phip.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    verdict(
        "1 (KE fixed points)",
        res <= 1e-9 && sup <= 1e-9 && resp <= 1e-9 && supp <= 1e-9 && ri_sup <= 1e-9,
        &format!(
            "round tv={res:.2e} sup={sup:.2e}; product tv={resp:.2e} sup={supp:.2e}; R(0) sup={ri_sup:.2e} (tol 1e-9)"
        ),
    );
}

#[test]
fn criterion_02_conical_ke_oracle() {
    let m = ModelSpace::radial(0.5, 0.5, 14.0, 1024).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.residual_tol = 1e-10;
    let (phi, res) = ke_solve(&m, &cfg, Gauge::Even).unwrap();
    let oracle: Vec<f64> = m
        .grid
        .nodes
        .iter()
        .zip(&m.u0)
        .map(|(&t, &u0)| 2.0 * ln_1p_exp(0.5 * t) - u0)
        .collect();
    let sup = sup_diff(&phi.values, &sup_normalize(&oracle));

    let ma = ma_measure(&m, &phi.values).unwrap();
    let h = m.grid.spacing;
    let mut derr = 0.0_f64;
    for i in 1..m.grid.cells {
        let t = m.grid.nodes[i];
        let e = (0.5 * t).exp();
        let dens_oracle = 0.5 * e / ((1.0 + e) * (1.0 + e));
        derr = derr.max((ma.weights[i] / h - dens_oracle).abs());
    }
    verdict(
        "2 (conical KE oracle)",
        sup <= 1e-5 && derr <= 1e-5 && res <= 1e-9,
        &format!("sup|phi - oracle|={sup:.2e} (tol 1e-5), density err={derr:.2e} (tol 1e-5), tv={res:.2e}"),
    );
}

#[test]
fn criterion_03_exact_identity_suite() {
    let radial = ModelSpace::radial(0.5, 0.5, 12.0, 256).unwrap();
    let r1 = lab::verify_identities(&radial, 200, 2024).unwrap();
    let product = ModelSpace::product(6.0, 24).unwrap();
    let r2 = lab::verify_identities(&product, 200, 2024).unwrap();
    verdict(
        "3 (exact identities, 200 samples per model)",
        r1.passed() && r2.passed(),
        &format!(
            "radial worst margin={:.2e} ({}), product worst margin={:.2e} ({})",
            r1.worst_slack, r1.worst_sample, r2.worst_slack, r2.worst_sample
        ),
    );
}

#[test]
fn criterion_04_inequality_suite() {
    let radial = ModelSpace::radial(0.5, 0.5, 12.0, 256).unwrap();
    let round = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
    let product = ModelSpace::product(6.0, 24).unwrap();
    let mut all = Vec::new();
    all.push(lab::verify_ij_sandwich(&radial, 1000, 7).unwrap());
    all.push(lab::verify_ij_sandwich(&product, 1000, 7).unwrap());
    all.push(lab::verify_compen(&radial, 1000, 7).unwrap());
    all.push(lab::verify_compen(&product, 1000, 7).unwrap());
    all.push(lab::verify_pinsker(1000, 7).unwrap());
    all.push(lab::verify_holder_young(&round, 1000, 7).unwrap());
    all.push(lab::verify_legsci(&round, 1000, 7).unwrap());
    all.push(lab::verify_entropy_energy(&round, 0.25, 1000, 7).unwrap());
    all.push(lab::verify_entropy_energy(&radial, 0.25, 1000, 7).unwrap());
    let worst = all
        .iter()
        .map(|r| r.worst_slack)
        .fold(f64::INFINITY, f64::min);
    let pass = all.iter().all(|r| r.passed());
    let detail: Vec<String> = all
        .iter()
        .map(|r| format!("{}={:.1e}", r.suite, r.worst_slack))
        .collect();
    verdict(
        "4 (inequality suite, >=1000 samples each)",
        pass,
        &format!("worst slack {worst:.2e} (tol -1e-9): {}", detail.join(", ")),
    );
}

#[test]
fn criterion_05_quasi_triangle_apparatus() {
    let radial = ModelSpace::radial(0.5, 0.5, 12.0, 256).unwrap();
    let product = ModelSpace::product(6.0, 24).unwrap();
    let r1 = lab::verify_quasi_triangle(&radial, 2000, 11).unwrap();
    let r2 = lab::verify_quasi_triangle(&product, 2000, 11).unwrap();
    let hp = lab::verify_h_iterate(1.0, 10_000, 3).unwrap();
    let c1 = r1.constants["c_midpoint_family"];
    verdict(
        "5 (quasi-triangle: bp + compareI over 2000 triples, c1, h-iterate)",
        r1.passed() && r2.passed() && hp.passed() && (c1 - 0.5).abs() <= 1e-6,
        &format!(
            "n=1 slack={:.2e}, n=2 slack={:.2e}, c1={:.8}, c2_empirical={:.4}, h-iterate slack={:.2e}",
            r1.worst_slack, r2.worst_slack, c1, r2.constants["c_empirical_min"], hp.worst_slack
        ),
    );
}

#[test]
fn criterion_06_ricci_iteration() {
    let m = ModelSpace::radial(0.5, 0.5, 20.0, 1024).unwrap();
    let cfg = SolverConfig::default();
    let oracle: Vec<f64> = m
        .grid
        .nodes
        .iter()
        .zip(&m.u0)
        .map(|(&t, &u0)| 2.0 * ln_1p_exp(0.5 * t) - u0)
        .collect();
    let oracle_n = sup_normalize(&oracle);
    let mut sampler = Sampler::new(606);
    let mut worst_iters = 0usize;
    let mut worst_sup = 0.0_f64;
    let mut chain_ok = true;
    for _ in 0..20 {
        let start = sampler.radial_admissible_even(&m, 0.7).unwrap();
        let trace = ricci_iterate(&m, &start.values, 50, 1e-10, Gauge::Even, &cfg).unwrap();
        assert!(trace.failure.is_none());
        let converged = trace
            .records
            .last()
            .map(|r| r.flags.contains("converged"))
            .unwrap_or(false);
        chain_ok &= converged;
        worst_iters = worst_iters.max(trace.records.len() - 1);
        for w in trace.records.windows(2) {
            chain_ok &= w[1].report.mab <= w[0].report.mab + 1e-8;
        }
        chain_ok &= !trace.records.iter().any(|r| r.flags.contains("violation"));
        let limit = sup_normalize(&trace.final_phi);
        worst_sup = worst_sup.max(sup_diff(&limit, &oracle_n));
    }
    verdict(
        "6 (Ricci iteration, 20 seeded starts)",
        chain_ok && worst_iters <= 50 && worst_sup <= 1e-3,
        &format!(
            "worst iterations {worst_iters} (<=50), worst sup to oracle {worst_sup:.2e} (tol 1e-3), chain ok: {chain_ok}"
        ),
    );
}

#[test]
fn criterion_07_kahler_ricci_flow() {
    let started = std::time::Instant::now();
    let m = ModelSpace::radial(1.0, 1.0, 3.0, 48).unwrap();
    let cfg = SolverConfig::default();
    let (dt, t_end) = (0.01, 20.0);
    let mut sampler = Sampler::new(707);
    let mut worst_tv = 0.0_f64;
    let mut mono_ok = true;
    let mut diss_ok = true;
    for _ in 0..10 {
        let start = sampler.radial_positive(&m, 0.5, true).unwrap();
        let trace = krf_run(&m, &start.values, dt, t_end, FlowScheme::Explicit, &cfg).unwrap();
        assert!(trace.failure.is_none());
        mono_ok &= !trace.records.iter().any(|r| r.flags.contains("violation"));
        let first = trace.records.first().unwrap();
        let last = trace.records.last().unwrap();
        diss_ok &= last.report.ding - first.report.ding <= -last.dissipation_cum + 10.0 * dt;
        let final_ma = ma_measure(&m, &trace.final_phi).unwrap();
        worst_tv = worst_tv.max(tv_distance(&final_ma, &m.reference).unwrap());
    }
    // one backward step at dt = 1 equals one Ricci inverse
    let p0 = sampler.radial_positive(&m, 0.5, false).unwrap();
    let b = sup_normalize(&backward_step(&m, &p0.values, 1.0, &cfg).unwrap());
    let r = ricci_inverse(&m, &p0.values, &cfg).unwrap();
    let be_err = sup_diff(&b, &r.values);
    let secs = started.elapsed().as_secs_f64();
    verdict(
        "7 (Kahler-Ricci flow, 10 seeded starts)",
        mono_ok && diss_ok && worst_tv <= 1e-4 && be_err <= 1e-8 && secs <= 120.0,
        &format!(
            "final tv {worst_tv:.2e} (tol 1e-4), monotone {mono_ok}, dissipation {diss_ok}, backward(dt=1) vs R: {be_err:.2e} (tol 1e-8), runtime {secs:.1}s (<=120)"
        ),
    );
}

#[test]
fn criterion_08_geodesics() {
    let m = ModelSpace::radial(0.5, 0.5, 14.0, 2048).unwrap();
    let mut sampler = Sampler::new(808);
    let mut e_ok = true;
    let mut ding_ok = true;
    let mut worst_e = 0.0_f64;
    let mut worst_ding = f64::INFINITY;
    for _ in 0..50 {
        let a = sampler.radial_admissible(&m, 0.7).unwrap();
        let b = sampler.radial_admissible(&m, 0.7).unwrap();
        let g = geodesic(&m, &a.values, &b.values, 8).unwrap();
        let range = g
            .e_values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            - g.e_values.iter().cloned().fold(f64::INFINITY, f64::min);
        for w in g.e_values.windows(3) {
            let d2 = (w[2] - 2.0 * w[1] + w[0]).abs();
            worst_e = worst_e.max(d2 / range.max(1e-12));
            e_ok &= d2 <= 1e-6 * range.max(1e-12);
        }
        for w in g.ding_values.windows(3) {
            let d2 = w[2] - 2.0 * w[1] + w[0];
            worst_ding = worst_ding.min(d2);
            ding_ok &= d2 >= -1e-8;
        }
    }
    // KE-orbit geodesic stays KE in total variation
    let mo = ModelSpace::radial(0.5, 0.5, 24.0, 4096).unwrap();
    let trans = |s: f64| -> Vec<f64> {
        mo.grid
            .nodes
            .iter()
            .zip(&mo.u0)
            .map(|(&t, &u0)| 2.0 * ln_1p_exp(0.5 * (t + s)) - u0)
            .collect()
    };
    let g = geodesic(&mo, &trans(1.0), &trans(-1.0), 8).unwrap();
    let mut worst_orbit = 0.0_f64;
    for p in &g.family {
        let ma = ma_measure(&mo, &p.values).unwrap();
        let gm = gibbs_measure(&mo, &p.values);
        worst_orbit = worst_orbit.max(tv_distance(&ma, &gm).unwrap());
    }
    verdict(
        "8 (geodesics, 50 seeded + KE orbit)",
        e_ok && ding_ok && worst_orbit <= 1e-4,
        &format!(
            "E affinity rel {worst_e:.2e} (tol 1e-6), min Ding second diff {worst_ding:.2e} (tol -1e-8), orbit tv {worst_orbit:.2e} (tol 1e-4)"
        ),
    );
}

#[test]
fn criterion_09_coercivity_transfer() {
    let base = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
    let r = lab::verify_coercivity_transfer(&base, 0.5, 0.3, 300, 909, 100.0).unwrap();
    verdict(
        "9 (Moser-Trudinger transfer, lambda=1/2, delta=0.3, 300 samples)",
        r.passed(),
        &format!(
            "worst slack {:.2e} (tol -1e-9), p={:.2}, C={:.3}",
            r.worst_slack, r.constants["p"], r.constants["C_total"]
        ),
    );
}

#[test]
fn criterion_10_non_properness() {
    let m = ModelSpace::radial(0.5, 0.5, 24.0, 1536).unwrap();
    let rows = noncoercive_probe(&m, &[0.0, 1.0, 2.0, 4.0]).unwrap();
    let j_grows = rows[1].j < rows[2].j && rows[2].j < rows[3].j && rows[0].j < rows[1].j;
    let drift = rows[1..]
        .iter()
        .map(|r| (r.ding - rows[0].ding).abs().max((r.mab - rows[0].mab).abs()))
        .fold(0.0_f64, f64::max);

    let asym = ModelSpace::radial(0.4, 0.8, 12.0, 256).unwrap();
    let mut cfg = SolverConfig::default();
    cfg.max_newton_steps = 40;
    let nonconv = matches!(
        ke_solve(&asym, &cfg, Gauge::None),
        Err(fanolab::Error::Nonconvergence { residual, .. }) if residual > 1e-6
    );
    verdict(
        "10 (non-properness signature)",
        j_grows && drift <= 1e-3 && nonconv,
        &format!(
            "J = {:.3} < {:.3} < {:.3}, Ding/Mab drift {drift:.2e} (tol 1e-3), asym-cone nonconvergence: {nonconv}",
            rows[1].j, rows[2].j, rows[3].j
        ),
    );
}

#[test]
fn criterion_11_alpha_invariant() {
    let round = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
    let football = ModelSpace::radial(0.5, 0.5, 12.0, 256).unwrap();
    let (lo1, hi1) = alpha_estimate(&round, 8, 0.01).unwrap();
    let (lo2, hi2) = alpha_estimate(&football, 8, 0.01).unwrap();
    verdict(
        "11 (alpha-invariant brackets)",
        lo1 <= 0.5 && 0.5 <= hi1 && hi1 - lo1 <= 0.01 && lo2 <= 0.5 && 0.5 <= hi2 && hi2 - lo2 <= 0.01,
        &format!("round [{lo1:.4},{hi1:.4}], football [{lo2:.4},{hi2:.4}] (width tol 0.01)"),
    );
}

#[test]
fn criterion_12_klt_gate() {
    let cutoffs = [4.0, 8.0, 12.0];
    let pos1 = profile_saturates(&klt_mass_profile(1.0, 1.0, &cutoffs));
    let pos2 = profile_saturates(&klt_mass_profile(0.3, 0.7, &cutoffs));
    let zero = profile_saturates(&klt_mass_profile(0.0, 1.0, &cutoffs));
    let neg = profile_saturates(&klt_mass_profile(-0.2, 1.0, &cutoffs));
    verdict(
        "12 (klt dichotomy)",
        pos1 && pos2 && !zero && !neg,
        &format!("beta>0 saturates: {pos1},{pos2}; beta<=0 diverges: {},{}", !zero, !neg),
    );
}

#[test]
fn criterion_13_reproducibility() {
    // identical config + seed => byte-identical CSV/JSON bodies
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let config = |dir: &std::path::Path| -> fanolab::cli::RunConfig {
        fanolab::cli::parse_config(&format!(
            r#"{{
                "model": {{"kind": "radial", "beta0": 0.5, "beta_inf": 0.5, "t": 12.0, "n": 128}},
                "run": {{"kind": "iterate", "gauge": "even", "max_iter": 30, "tol": 1e-10}},
                "sampling": {{"seed": 42}},
                "output": {{"dir": "{}"}}
            }}"#,
            dir.display()
        ))
        .unwrap()
    };
    fanolab::cli::run_experiment(&config(dir1.path())).unwrap();
    fanolab::cli::run_experiment(&config(dir2.path())).unwrap();
    let mut identical = true;
    for name in ["trace.csv", "trace.json", "phi.csv", "model.json"] {
        let a = std::fs::read(dir1.path().join(name)).unwrap();
        let b = std::fs::read(dir2.path().join(name)).unwrap();
        identical &= a == b;
    }
    verdict(
        "13 (byte-identical reruns)",
        identical,
        "trace.csv, trace.json, phi.csv, model.json compared byte-for-byte",
    );
}
