//! Discrete Monge-Ampère solvers: prescribed-measure inversion, the Ricci
//! inverse operator, and the Kähler-Einstein fixed-point equation.
//!
//! Radial problems reduce to pinned tridiagonal systems (the measure
//! inversion is linear; the KE equation gets a damped Newton with the
//! rank-one normalization term kept in the residual but dropped from the
//! tridiagonal preconditioner). The KE system couples the interior mass
//! equations with the left slope-atom equation under a right-end pin, so
//! the boundary atoms converge too; the right atom equation then holds by
//! mass conservation. Product problems are solved as concave maximization
//! of E(phi) - <phi, target> by Newton-CG (the wedge Jacobian is symmetric).

use crate::error::{Error, Result};
use crate::functionals::{gibbs_measure, ma_measure_unchecked};
use crate::grid::{GridMeasure, Normalization, Potential};
use crate::model::{ModelKind, ModelSpace};
use crate::wedge2d;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_newton_steps: usize,
    /// Residual tolerance in total variation.
    pub residual_tol: f64,
    /// Armijo backtracking factor.
    pub damping_factor: f64,
    pub min_step: f64,
    pub convexity_repair: bool,
    /// Maximum node weight accepted in a target measure.
    pub concentration_cap: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_newton_steps: 60,
            residual_tol: 1e-10,
            damping_factor: 0.5,
            min_step: (2.0_f64).powi(-20),
            convexity_repair: true,
            concentration_cap: 0.5,
        }
    }
}

/// Thomas algorithm for a tridiagonal system (lo, di, up) x = d.
pub(crate) fn thomas(lo: &[f64], di: &[f64], up: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = up[0] / di[0];
    dp[0] = d[0] / di[0];
    for i in 1..n {
        let den = di[i] - lo[i] * cp[i - 1];
        cp[i] = up[i] / den;
        dp[i] = (d[i] - lo[i] * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

fn validate_target(model: &ModelSpace, target: &GridMeasure, cfg: &SolverConfig) -> Result<()> {
    target.check_probability(1e-8)?;
    let cap = cfg.concentration_cap;
    let mw = target.max_weight();
    if mw > cap {
        return Err(Error::ConcentrationCap {
            max_weight: mw,
            cap,
        });
    }
    if target.weights.len() != model.grid.len() {
        return Err(Error::GridMismatch(target.weights.len(), model.grid.len()));
    }
    Ok(())
}

/// Invert the Monge-Ampère operator: admissible pinned phi whose interior
/// masses match the target's.
pub fn solve_ma_pinned(
    model: &ModelSpace,
    target: &GridMeasure,
    cfg: &SolverConfig,
) -> Result<Potential> {
    validate_target(model, target, cfg)?;
    match model.kind {
        ModelKind::Radial => solve_ma_radial(model, target),
        ModelKind::Product => solve_ma_product(model, target, cfg),
    }
}

/// As `solve_ma_pinned`, sup-normalized output (the public contract).
pub fn solve_ma(model: &ModelSpace, target: &GridMeasure, cfg: &SolverConfig) -> Result<Potential> {
    Ok(solve_ma_pinned(model, target, cfg)?.sup_normalized())
}

fn solve_ma_radial(model: &ModelSpace, target: &GridMeasure) -> Result<Potential> {
    let n = model.grid.cells;
    let h = model.grid.spacing;
    let v = model.volume;
    // Double integration: the left atom fixes the boundary slope, the node
    // weights fix the slope increments, the left value fixes the gauge. The
    // right atom equation then holds by mass conservation, so the inversion
    // reproduces the target's atoms too (exact round trip).
    let mut slope = v * target.atoms[0];
    let mut u = vec![0.0; n + 1];
    u[0] = model.u0[0];
    for i in 0..n {
        if i > 0 {
            slope += v * target.weights[i];
        }
        u[i + 1] = u[i] + h * slope;
    }
    let phi: Vec<f64> = u.iter().zip(&model.u0).map(|(a, b)| a - b).collect();
    Ok(Potential::from_values(phi, Normalization::Pinned))
}

/// Interior residual in total variation (the mass equations the solvers drive).
fn interior_tv(model: &ModelSpace, a: &GridMeasure, b: &GridMeasure) -> f64 {
    let _ = model;
    0.5 * a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| (x - y).abs())
        .sum::<f64>()
}

fn solve_ma_product(
    model: &ModelSpace,
    target: &GridMeasure,
    cfg: &SolverConfig,
) -> Result<Potential> {
    let n = model.grid.cells;
    let np = n + 1;
    let mut phi = vec![0.0; np * np];
    let objective = |p: &[f64]| -> f64 {
        let mut s = crate::functionals::energy_unchecked(model, p);
        for i in 1..n {
            for j in 1..n {
                s -= p[i * np + j] * target.weights[i * np + j];
            }
        }
        s
    };
    // the concavity of the objective lives on the cone of nonnegative vertex
    // masses; accepted steps must stay there (Oliker-Prussner style)
    let min_mass = |m: &GridMeasure| -> f64 {
        let mut mn = f64::INFINITY;
        for i in 1..n {
            for j in 1..n {
                mn = mn.min(m.weights[i * np + j]);
            }
        }
        mn
    };
    let mut last_res = f64::INFINITY;
    for it in 0..cfg.max_newton_steps {
        let u = model.full_potential(&phi);
        let ma = wedge2d::wedge_measure(model, &u, &u);
        let res = interior_tv(model, &ma, target);
        if res <= cfg.residual_tol {
            return Ok(Potential::from_values(phi, Normalization::Pinned));
        }
        last_res = res;
        // gradient of the concave objective: MA - target on interior nodes
        let mut grad = vec![0.0; np * np];
        for i in 1..n {
            for j in 1..n {
                grad[i * np + j] = ma.weights[i * np + j] - target.weights[i * np + j];
            }
        }
        // Newton direction: (-J_MA) delta = -(grad)  =>  delta ascent direction
        let fans = wedge2d::Fans::new(model, &u);
        let ridge = 1e-12;
        let matvec = |x: &[f64]| -> Vec<f64> {
            let jx = wedge2d::ma_jacobian_apply(model, &fans, x);
            let mut out = vec![0.0; np * np];
            for i in 1..n {
                for j in 1..n {
                    out[i * np + j] = -jx[i * np + j] + ridge * x[i * np + j];
                }
            }
            out
        };
        let delta = cg_interior(np, n, matvec, &grad, 400, 1e-14);
        let base = objective(&phi);
        let slope: f64 = delta
            .iter()
            .zip(&grad)
            .map(|(d, g)| d * g)
            .sum::<f64>();
        // ascent direction; fall back to the gradient when CG left the cone
        let dir: Vec<f64> = if slope > 0.0 {
            delta
        } else {
            grad.iter().map(|g| g / res.max(1e-12)).collect()
        };
        let mut step = 1.0;
        let mut accepted = false;
        while step >= cfg.min_step {
            let cand: Vec<f64> = phi
                .iter()
                .zip(&dir)
                .map(|(p, d)| p + step * d)
                .collect();
            let uc = model.full_potential(&cand);
            let mc = wedge2d::wedge_measure(model, &uc, &uc);
            let in_cone = min_mass(&mc) >= -1e-13;
            if in_cone && objective(&cand) > base {
                phi = cand;
                accepted = true;
                break;
            }
            // near the optimum the objective gain underflows; accept on
            // residual decrease instead (quadratic phase)
            if in_cone && interior_tv(model, &mc, target) < 0.5 * res {
                phi = cand;
                accepted = true;
                break;
            }
            step *= cfg.damping_factor;
        }
        if !accepted {
            return Err(Error::Nonconvergence {
                residual: res,
                iterations: it,
            });
        }
    }
    let u = model.full_potential(&phi);
    let ma = wedge2d::wedge_measure(model, &u, &u);
    let res = interior_tv(model, &ma, target);
    if res <= cfg.residual_tol {
        Ok(Potential::from_values(phi, Normalization::Pinned))
    } else {
        Err(Error::Nonconvergence {
            residual: res.min(last_res),
            iterations: cfg.max_newton_steps,
        })
    }
}

/// Conjugate gradients on the pinned interior block.
fn cg_interior<F: Fn(&[f64]) -> Vec<f64>>(
    np: usize,
    n: usize,
    matvec: F,
    rhs: &[f64],
    max_iter: usize,
    tol: f64,
) -> Vec<f64> {
    let mut x = vec![0.0; np * np];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 1..n {
            for j in 1..n {
                s += a[i * np + j] * b[i * np + j];
            }
        }
        s
    };
    let mut rr = dot(&r, &r);
    let r0 = rr.sqrt().max(1e-300);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * r0 + 1e-300 {
            break;
        }
        let ap = matvec(&p);
        let denom = dot(&p, &ap);
        if denom.abs() < 1e-300 {
            break;
        }
        let alpha = rr / denom;
        for i in 1..n {
            for j in 1..n {
                let k = i * np + j;
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 1..n {
            for j in 1..n {
                let k = i * np + j;
                p[k] = r[k] + beta * p[k];
            }
        }
    }
    x
}

/// Ricci inverse operator: phi' with MA(phi') = mu_omega = e^{-phi+L(phi)} mu0.
/// Fixed points solve the Kähler-Einstein equation. Output is sup-normalized
/// and admissible; its Monge-Ampère image has finite entropy against mu0.
pub fn ricci_inverse(model: &ModelSpace, phi: &[f64], cfg: &SolverConfig) -> Result<Potential> {
    model.check_admissible(phi)?;
    let target = gibbs_measure(model, phi);
    Ok(solve_ma_pinned(model, &target, cfg)?.sup_normalized())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    Even,
    None,
}

/// One Newton step record: iteration index, residual, accepted damping.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NewtonStep {
    pub step: usize,
    pub residual: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Default)]
pub struct NewtonTrace {
    pub steps: Vec<NewtonStep>,
}

impl NewtonTrace {
    pub const CSV_HEADER: &'static str = "step,residual,damping";

    pub fn csv_body(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{}\n",
                s.step,
                crate::report::fmt_float(s.residual),
                crate::report::fmt_float(s.damping)
            ));
        }
        out
    }
}

/// Solve the Kähler-Einstein equation MA(phi) = e^{-phi+L(phi)} mu0 by full
/// Newton under the chosen gauge. Returns the sup-normalized potential and
/// the final total-variation residual (atoms included).
pub fn ke_solve(model: &ModelSpace, cfg: &SolverConfig, gauge: Gauge) -> Result<(Potential, f64)> {
    let (phi, res, _) = ke_solve_traced(model, cfg, gauge)?;
    Ok((phi, res))
}

/// As `ke_solve`, also returning the Newton trace (step, residual, damping).
pub fn ke_solve_traced(
    model: &ModelSpace,
    cfg: &SolverConfig,
    gauge: Gauge,
) -> Result<(Potential, f64, NewtonTrace)> {
    match model.kind {
        ModelKind::Radial => ke_solve_radial(model, cfg, gauge),
        ModelKind::Product => ke_solve_product(model, cfg),
    }
}

fn ke_residual(model: &ModelSpace, phi: &[f64]) -> Result<(GridMeasure, GridMeasure, f64)> {
    let ma = ma_measure_unchecked(model, phi)?;
    let g = gibbs_measure(model, phi);
    let tv = crate::grid::tv_distance(&ma, &g)?;
    Ok((ma, g, tv))
}

fn ke_solve_radial(
    model: &ModelSpace,
    cfg: &SolverConfig,
    gauge: Gauge,
) -> Result<(Potential, f64, NewtonTrace)> {
    let n = model.grid.cells;
    let h = model.grid.spacing;
    let v = model.volume;
    let mut phi = vec![0.0; n + 1];
    let mut residual = f64::INFINITY;
    let mut trace = NewtonTrace::default();
    for it in 0..cfg.max_newton_steps {
        let (ma, g, tv) = ke_residual(model, &phi)?;
        residual = tv;
        if tv <= cfg.residual_tol {
            return Ok((
                Potential::from_values(phi, Normalization::Pinned).sup_normalized(),
                tv,
                trace,
            ));
        }
        // unknowns phi_0..phi_{n-1}; gauge phi_n = 0.
        // row 0:   left atom equation  slopeL(u)/(hV)... = gibbs atom
        // rows i:  interior mass equations
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        let mut d = vec![0.0; n];
        di[0] = -1.0 / (h * v) + g.atoms[0];
        up[0] = 1.0 / (h * v);
        d[0] = -(ma.atoms[0] - g.atoms[0]);
        for i in 1..n {
            lo[i] = 1.0 / (h * v);
            di[i] = -2.0 / (h * v) + g.weights[i];
            up[i] = if i + 1 < n { 1.0 / (h * v) } else { 0.0 };
            d[i] = -(ma.weights[i] - g.weights[i]);
        }
        let dx = thomas(&lo, &di, &up, &d);
        let mut step = 1.0;
        let mut improved = false;
        while step >= cfg.min_step {
            let mut cand = phi.clone();
            for (c, dv) in cand.iter_mut().zip(&dx) {
                *c += step * dv;
            }
            if gauge == Gauge::Even {
                cand = model.symmetrize_even(&cand);
                let base = cand[n];
                for c in cand.iter_mut() {
                    *c -= base;
                }
            }
            if cfg.convexity_repair {
                let u = model.full_potential(&cand);
                if crate::convex::convexity_residual(&u) > model.eps_conv {
                    let rep = model.psh_envelope(&cand);
                    cand = rep.values;
                }
            }
            let (_, _, tv2) = ke_residual(model, &cand)?;
            if tv2 < residual * (1.0 - 1e-4 * step) {
                phi = cand;
                improved = true;
                trace.steps.push(NewtonStep {
                    step: it,
                    residual: tv,
                    damping: step,
                });
                break;
            }
            step *= cfg.damping_factor;
        }
        if !improved {
            return Err(Error::Nonconvergence {
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Nonconvergence {
        residual,
        iterations: cfg.max_newton_steps,
    })
}

fn ke_solve_product(model: &ModelSpace, cfg: &SolverConfig) -> Result<(Potential, f64, NewtonTrace)> {
    // Newton-CG on the convex Ding functional; gradient = gibbs - MA.
    let n = model.grid.cells;
    let np = n + 1;
    let mut phi = vec![0.0; np * np];
    let mut residual = f64::INFINITY;
    let mut trace = NewtonTrace::default();
    for it in 0..cfg.max_newton_steps {
        let (ma, g, tv) = ke_residual(model, &phi)?;
        residual = tv;
        if tv <= cfg.residual_tol {
            return Ok((
                Potential::from_values(phi, Normalization::Pinned).sup_normalized(),
                tv,
                trace,
            ));
        }
        let u = model.full_potential(&phi);
        let fans = wedge2d::Fans::new(model, &u);
        let gsum: f64 = g.weights.iter().sum();
        let matvec = |x: &[f64]| -> Vec<f64> {
            // Hess(Ding) x = (-J_MA) x + g.*x - g <g,x>/gsum-ish (rank-one kept)
            let jx = wedge2d::ma_jacobian_apply(model, &fans, x);
            let mut gx = 0.0;
            for i in 1..n {
                for j in 1..n {
                    gx += g.weights[i * np + j] * x[i * np + j];
                }
            }
            let mut out = vec![0.0; np * np];
            for i in 1..n {
                for j in 1..n {
                    let k = i * np + j;
                    out[k] = -jx[k] + g.weights[k] * x[k] - g.weights[k] * gx / gsum.max(1e-300)
                        + 1e-12 * x[k];
                }
            }
            out
        };
        let mut rhs = vec![0.0; np * np];
        for i in 1..n {
            for j in 1..n {
                let k = i * np + j;
                rhs[k] = ma.weights[k] - g.weights[k];
            }
        }
        let delta = cg_interior(np, n, matvec, &rhs, 400, 1e-14);
        let ding0 = crate::functionals::functional_l(model, &phi)
            - crate::functionals::energy_unchecked(model, &phi);
        let mut step = 1.0;
        let mut improved = false;
        while step >= cfg.min_step {
            let cand: Vec<f64> = phi
                .iter()
                .zip(&delta)
                .map(|(p, d)| p + step * d)
                .collect();
            let dingc = crate::functionals::functional_l(model, &cand)
                - crate::functionals::energy_unchecked(model, &cand);
            if dingc < ding0 || step >= 1.0 && residual < 1e-8 {
                phi = cand;
                improved = true;
                trace.steps.push(NewtonStep {
                    step: it,
                    residual: tv,
                    damping: step,
                });
                break;
            }
            step *= cfg.damping_factor;
        }
        if !improved {
            return Err(Error::Nonconvergence {
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Nonconvergence {
        residual,
        iterations: cfg.max_newton_steps,
    })
}
