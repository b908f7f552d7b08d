//! Ricci iteration, the normalized Kähler-Ricci flow, and weak geodesics.

use crate::error::{Error, Result};
use crate::functionals::{
    ding_mab, functional_i, functional_l, gibbs_measure, ma_measure_unchecked, FunctionalReport,
};
use crate::grid::{Normalization, Potential};
use crate::model::{ModelKind, ModelSpace};
use crate::solver::{ricci_inverse, solve_ma_pinned, thomas, Gauge, SolverConfig};

/// One record of an iteration or flow run.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub step: usize,
    pub time: f64,
    pub report: FunctionalReport,
    /// Total-variation distance of MA(phi) to the Gibbs measure of phi, i.e.
    /// the Kähler-Einstein residual of the current state.
    pub tv_residual: f64,
    /// I-distance to the previous state (0 at the first record).
    pub i_prev: f64,
    pub dissipation_cum: f64,
    pub c2_interior: f64,
    pub flags: String,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub failure: Option<String>,
    /// Final state of the run.
    pub final_phi: Vec<f64>,
}

impl Trace {
    pub const CSV_HEADER: &'static str =
        "step,time,E,J,I_prev,L,Ding,Mab,H,tv_residual,dissipation_cum,c2_interior,flags";

    pub fn csv_body(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let f = crate::report::fmt_float;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.step,
                f(r.time),
                f(r.report.e),
                f(r.report.j),
                f(r.i_prev),
                f(r.report.l),
                f(r.report.ding),
                f(r.report.mab),
                f(r.report.h),
                f(r.tv_residual),
                f(r.dissipation_cum),
                f(r.c2_interior),
                r.flags
            ));
        }
        out
    }
}

/// Interior C^2 monitor: largest discrete second derivative of u = u0 + phi
/// over nodes at distance at least `margin` from the boundary cutoff.
pub fn interior_c2(model: &ModelSpace, phi: &[f64], margin: f64) -> f64 {
    let h = model.grid.spacing;
    let n = model.grid.cells;
    let u = model.full_potential(phi);
    let inside = |t: f64| t.abs() <= model.grid.half_width - margin;
    let mut worst = 0.0_f64;
    match model.kind {
        ModelKind::Radial => {
            for i in 1..n {
                if inside(model.grid.nodes[i]) {
                    worst = worst.max((u[i + 1] - 2.0 * u[i] + u[i - 1]).abs() / (h * h));
                }
            }
        }
        ModelKind::Product => {
            let np = n + 1;
            for i in 1..n {
                for j in 1..n {
                    if inside(model.grid.nodes[i]) && inside(model.grid.nodes[j]) {
                        let dxx = (u[(i + 1) * np + j] - 2.0 * u[i * np + j]
                            + u[(i - 1) * np + j])
                            .abs();
                        let dyy = (u[i * np + j + 1] - 2.0 * u[i * np + j]
                            + u[i * np + j - 1])
                            .abs();
                        worst = worst.max(dxx.max(dyy) / (h * h));
                    }
                }
            }
        }
    }
    worst
}

fn record_state(
    model: &ModelSpace,
    phi: &[f64],
    step: usize,
    time: f64,
    i_prev: f64,
    diss: f64,
    flags: String,
) -> Result<TraceRecord> {
    let report = ding_mab(model, phi)?;
    let ma = ma_measure_unchecked(model, phi)?;
    let g = gibbs_measure(model, phi);
    let tv = crate::grid::tv_distance(&ma, &g)?;
    Ok(TraceRecord {
        step,
        time,
        report,
        tv_residual: tv,
        i_prev,
        dissipation_cum: diss,
        c2_interior: interior_c2(model, phi, model.grid.spacing * 2.0),
        flags,
    })
}

/// Ricci iteration phi_{j+1} = R(phi_j) until I(phi_{j+1}, phi_j) <= stop_tol.
/// Every step checks the monotone chain Mab(phi_{j+1}) <= Ding(phi_j) <=
/// Mab(phi_j) + 1e-8.
pub fn ricci_iterate(
    model: &ModelSpace,
    phi0: &[f64],
    max_iter: usize,
    stop_tol: f64,
    gauge: Gauge,
    cfg: &SolverConfig,
) -> Result<Trace> {
    model.check_admissible(phi0)?;
    let mut trace = Trace::default();
    let mut phi = phi0.to_vec();
    let mut i_prev = 0.0;
    for step in 0..=max_iter {
        let rec = record_state(model, &phi, step, step as f64, i_prev, 0.0, String::new())?;
        let (ding_cur, mab_cur) = (rec.report.ding, rec.report.mab);
        trace.records.push(rec);
        if step == max_iter {
            break;
        }
        let next = match ricci_inverse(model, &phi, cfg) {
            Ok(p) => {
                let v = if gauge == Gauge::Even {
                    model.symmetrize_even(&p.values)
                } else {
                    p.values
                };
                v
            }
            Err(e) => {
                trace.failure = Some(format!("solver failure at step {step}: {e}"));
                break;
            }
        };
        i_prev = functional_i(model, &next, &phi)?;
        let rep_next = ding_mab(model, &next)?;
        // Mab(phi_{j+1}) <= Ding(phi_j) <= Mab(phi_j): exact on radial grids,
        // where the inversion reproduces the Gibbs atoms; product grids pick
        // up the boundary-lump truncation slack, so the chain is recorded
        // there but enforced only up to that scale.
        let chain_tol = match model.kind {
            ModelKind::Radial => 1e-8,
            ModelKind::Product => {
                let ma_next = crate::functionals::ma_measure_unchecked(model, &next)?;
                1e-8 + ma_next.atoms.iter().map(|a| a.abs()).sum::<f64>()
            }
        };
        let chain_ok = rep_next.mab <= ding_cur + chain_tol && ding_cur <= mab_cur + chain_tol;
        if !chain_ok {
            let last = trace.records.last_mut().unwrap();
            last.flags = format!(
                "chain_violation:mab_next={:.3e},ding={:.3e},mab={:.3e}",
                rep_next.mab, ding_cur, mab_cur
            );
        } else if let Some(last) = trace.records.last_mut() {
            last.flags = "chain_ok".into();
        }
        phi = next;
        if i_prev <= stop_tol {
            let rec = record_state(
                model,
                &phi,
                step + 1,
                (step + 1) as f64,
                i_prev,
                0.0,
                "converged".into(),
            )?;
            trace.records.push(rec);
            break;
        }
    }
    trace.final_phi = phi;
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowScheme {
    /// Stabilized explicit step: the log-Monge-Ampère part advances through
    /// one implicit tridiagonal solve, the Gibbs part explicitly. First-order
    /// consistent with the normalized flow; unconditionally stable. (Plain
    /// forward Euler is unstable at every admissible resolution for the
    /// flow's stiff tails; see the guide.)
    Explicit,
    /// Backward Euler; one step at dt = 1 is exactly one Ricci inverse.
    Backward,
}

/// Normalized Kähler-Ricci flow d phi/dt = log(MA density / Gibbs density).
pub fn krf_run(
    model: &ModelSpace,
    phi0: &[f64],
    dt: f64,
    t_end: f64,
    scheme: FlowScheme,
    cfg: &SolverConfig,
) -> Result<Trace> {
    if model.kind != ModelKind::Radial {
        return Err(Error::WrongModelKind { expected: "radial" });
    }
    model.check_admissible(phi0)?;
    let steps = (t_end / dt).round() as usize;
    let n = model.grid.cells;
    let _h = model.grid.spacing;
    let _v = model.volume;
    let mut phi = phi0.to_vec();
    let mut trace = Trace::default();
    let mut diss = 0.0;
    let mut prev_ding = f64::INFINITY;
    let mut prev_mab = f64::INFINITY;
    let slack = 10.0 * dt * dt;

    // preconditions for the explicit scheme
    if scheme == FlowScheme::Explicit {
        let ma = ma_measure_unchecked(model, &phi)?;
        let min_mass = ma.weights[1..n]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_mass <= 0.0 {
            return Err(Error::NonPositiveMass { min_mass });
        }
        let g = gibbs_measure(model, &phi);
        let max_rhs = (1..n)
            .map(|i| (ma.weights[i].ln() - g.weights[i].ln()).abs())
            .fold(0.0_f64, f64::max);
        if dt * max_rhs > 0.5 {
            return Err(Error::FlowCfl {
                value: dt * max_rhs,
            });
        }
    }

    let mut phi_prev: Option<Vec<f64>> = None;
    for step in 0..=steps {
        let time = step as f64 * dt;
        let ma = ma_measure_unchecked(model, &phi)?;
        let g = gibbs_measure(model, &phi);
        let tvk = crate::grid::tv_distance(&ma, &g)?;
        let i_prev = match &phi_prev {
            Some(prev) => functional_i(model, &phi, prev)?,
            None => 0.0,
        };
        let rec = record_state(model, &phi, step, time, i_prev, diss, String::new())?;
        let (d_now, m_now) = (rec.report.ding, rec.report.mab);
        let mut flags = Vec::new();
        if step > 0 {
            if d_now <= prev_ding + slack {
                flags.push("ding_monotone");
            } else {
                flags.push("ding_violation");
            }
            if m_now <= prev_mab + slack {
                flags.push("mab_monotone");
            } else {
                flags.push("mab_violation");
            }
        }
        let mut rec = rec;
        rec.flags = flags.join(";");
        trace.records.push(rec);
        prev_ding = d_now;
        prev_mab = m_now;
        if step == steps {
            break;
        }
        diss += dt * tvk * tvk;
        phi_prev = Some(phi.clone());

        // numerical failures mid-run retain the partial trace
        let step_result: Result<()> = (|| {
            match scheme {
                FlowScheme::Explicit => {
                    let u = model.full_potential(&phi);
                    let mut lo = vec![0.0; n - 1];
                    let mut di = vec![0.0; n - 1];
                    let mut up = vec![0.0; n - 1];
                    let mut d = vec![0.0; n - 1];
                    for i in 1..n {
                        let raw = u[i + 1] - 2.0 * u[i] + u[i - 1];
                        if raw <= 0.0 {
                            return Err(Error::NonPositiveMass { min_mass: raw });
                        }
                        let rhs = (ma.weights[i].max(1e-300)).ln() - g.weights[i].ln();
                        let k = i - 1;
                        lo[k] = if k > 0 { -dt / raw } else { 0.0 };
                        di[k] = 1.0 + 2.0 * dt / raw;
                        up[k] = if k + 1 < n - 1 { -dt / raw } else { 0.0 };
                        d[k] = dt * rhs;
                    }
                    let delta = thomas(&lo, &di, &up, &d);
                    for i in 1..n {
                        phi[i] += delta[i - 1];
                    }
                    if cfg.convexity_repair {
                        let u = model.full_potential(&phi);
                        if crate::convex::convexity_residual(&u) > model.eps_conv {
                            phi = model.psh_envelope(&phi).values;
                        }
                    }
                }
                FlowScheme::Backward => {
                    phi = backward_step(model, &phi, dt, cfg)?;
                }
            }
            Ok(())
        })();
        if let Err(e) = step_result {
            trace.failure = Some(format!("flow failure at step {step}: {e}"));
            break;
        }
    }
    trace.final_phi = phi;
    Ok(trace)
}

/// One backward-Euler step: solve MA(phi) = e^{-[(1 - 1/dt) phi + phi_prev/dt]}
/// mu0 (normalized) as a fixed point of Monge-Ampère inversions. At dt = 1 the
/// exponent does not involve the unknown and the step is exactly one Ricci
/// inverse.
pub fn backward_step(
    model: &ModelSpace,
    phi_prev: &[f64],
    dt: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let a = 1.0 - 1.0 / dt;
    let mut phi = phi_prev.to_vec();
    for _ in 0..40 {
        let xi: Vec<f64> = phi
            .iter()
            .zip(phi_prev)
            .map(|(p, q)| a * p + q / dt)
            .collect();
        let target = crate::functionals::tilted_measure(model, &xi);
        let next = solve_ma_pinned(model, &target, cfg)?;
        let delta = next
            .values
            .iter()
            .zip(&phi)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0_f64, f64::max);
        phi = next.values;
        if a == 0.0 || delta < 1e-12 {
            break;
        }
    }
    Ok(phi)
}

/// A weak geodesic with exactly evaluated energy and Ding values.
#[derive(Debug)]
pub struct Geodesic {
    /// Grid resamples of the interior states (envelope-repaired), s = k/steps.
    pub family: Vec<Potential>,
    pub e_values: Vec<f64>,
    pub ding_values: Vec<f64>,
}

/// Legendre-linear weak geodesic between admissible radial endpoints. The
/// energy and Ding values are evaluated on the exact piecewise-linear dual
/// representation: E is affine in s to roundoff and Ding convex.
pub fn geodesic(
    model: &ModelSpace,
    phi_a: &[f64],
    phi_b: &[f64],
    steps: usize,
) -> Result<Geodesic> {
    if model.kind != ModelKind::Radial {
        return Err(Error::WrongModelKind { expected: "radial" });
    }
    model.check_admissible(phi_a)?;
    model.check_admissible(phi_b)?;
    let nodes = &model.grid.nodes;
    let h = model.grid.spacing;
    let v = model.volume;
    let ua = model.full_potential(phi_a);
    let ub = model.full_potential(phi_b);

    // merged dual breakpoints: all slopes of both endpoints
    let mut p: Vec<f64> = Vec::with_capacity(2 * model.grid.cells);
    for w in ua.windows(2) {
        p.push((w[1] - w[0]) / h);
    }
    for w in ub.windows(2) {
        p.push((w[1] - w[0]) / h);
    }
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    p.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let ca = crate::convex::conjugate_at(nodes, &ua, &p);
    let cb = crate::convex::conjugate_at(nodes, &ub, &p);

    let u0_at = |x: f64| -> f64 {
        // PL interpolation of u0 (exact pairing against the PL reference)
        let t0 = nodes[0];
        let k = (((x - t0) / h).floor() as isize).clamp(0, model.grid.cells as isize - 1) as usize;
        let lam = (x - nodes[k]) / h;
        model.u0[k] * (1.0 - lam) + model.u0[k + 1] * lam
    };

    let mut family = Vec::with_capacity(steps + 1);
    let mut e_values = Vec::with_capacity(steps + 1);
    let mut ding_values = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let s = k as f64 / steps as f64;
        let cs: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| (1.0 - s) * x + s * y).collect();
        let ueval = |q: f64| -> f64 {
            p.iter()
                .zip(&cs)
                .map(|(&pk, &ck)| q * pk - ck)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        // exact PL energy: pair phi^s against the kink measure of u^s and mu_ref
        let phi_nodes: Vec<f64> = nodes
            .iter()
            .zip(&model.u0)
            .map(|(&t, &u0)| ueval(t) - u0)
            .collect();
        let mut t1 = 0.0;
        let mut below = 0.0;
        let mut above = 0.0;
        for k2 in 0..p.len() - 1 {
            let dp = p[k2 + 1] - p[k2];
            if dp <= 0.0 {
                continue;
            }
            let x = (cs[k2 + 1] - cs[k2]) / dp;
            if x <= nodes[0] {
                below += dp / v;
            } else if x >= nodes[model.grid.cells] {
                above += dp / v;
            } else {
                t1 += (ueval(x) - u0_at(x)) * dp / v;
            }
        }
        // slope-range deficits sit at the ends together with off-grid kinks
        below += p[0].max(0.0) / v;
        above += (v - p[p.len() - 1]).max(0.0) / v;
        t1 += phi_nodes[0] * below + phi_nodes[model.grid.cells] * above;
        let t2 = model.pair(&phi_nodes, &model.reference);
        let e = 0.5 * (t1 + t2);
        let l = functional_l(model, &phi_nodes);
        e_values.push(e);
        ding_values.push(l - e);
        family.push(repair(model, phi_nodes));
    }
    Ok(Geodesic {
        family,
        e_values,
        ding_values,
    })
}

fn repair(model: &ModelSpace, phi: Vec<f64>) -> Potential {
    let u = model.full_potential(&phi);
    if crate::convex::convexity_residual(&u) > model.eps_conv {
        model.psh_envelope(&phi)
    } else {
        Potential::from_values(phi, Normalization::Free)
    }
}

/// One row of the non-properness probe.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ProbeRow {
    pub shift: f64,
    pub j: f64,
    pub ding: f64,
    pub mab: f64,
}

/// Translates of the conical Kähler-Einstein potential along the C* orbit:
/// J grows without bound while Ding and Mabuchi stay put (up to truncation).
pub fn noncoercive_probe(model: &ModelSpace, shifts: &[f64]) -> Result<Vec<ProbeRow>> {
    if model.kind != ModelKind::Radial {
        return Err(Error::WrongModelKind { expected: "radial" });
    }
    if (model.beta0 - model.beta_inf).abs() > 1e-12 {
        return Err(Error::WrongModelKind {
            expected: "two-equal-cone radial",
        });
    }
    let limit = model.grid.half_width - 2.0;
    let beta = model.beta;
    let mut rows = Vec::new();
    for &s in shifts {
        if s.abs() > limit {
            return Err(Error::ShiftOffGrid { shift: s, limit });
        }
        let phi: Vec<f64> = model
            .grid
            .nodes
            .iter()
            .zip(&model.u0)
            .map(|(&t, &u0)| 2.0 * crate::model::ln_1p_exp(beta * (t + s)) - u0)
            .collect();
        let phi = Potential::from_values(phi, Normalization::Free).sup_normalized();
        model.check_admissible(&phi.values)?;
        let rep = ding_mab(model, &phi.values)?;
        rows.push(ProbeRow {
            shift: s,
            j: rep.j,
            ding: rep.ding,
            mab: rep.mab,
        });
    }
    Ok(rows)
}
