//! Energy, entropy, and the Ding/Mabuchi functionals.
//!
//! All pairings include the boundary atoms, which is what closes the discrete
//! integration by parts: the identity suite (two-formula energy agreement,
//! E*(MA(phi)) = (I-J)(phi), Mab - Ding = relative entropy against the Gibbs
//! measure) holds to roundoff, not just to discretization order.

use crate::error::{Error, Result};
use crate::grid::GridMeasure;
use crate::model::{ModelKind, ModelSpace};
use crate::wedge2d;
use serde::Serialize;
use std::collections::BTreeMap;

/// Monge-Ampère measure MA(phi) = V^{-1} omega_phi^n of an admissible potential.
/// Product-grid measures whose negative-determinant clamp defect exceeds 1e-6
/// of the total mass are rejected (the signal of substantial non-convexity).
pub fn ma_measure(model: &ModelSpace, phi: &[f64]) -> Result<GridMeasure> {
    model.check_admissible(phi)?;
    let w = ma_raw(model, phi);
    let defect = w.negativity_defect();
    if defect > 1e-6 {
        return Err(Error::ClampDefect { defect });
    }
    Ok(w)
}

/// As `ma_measure` without the admissibility or clamp gates (solver internals).
pub fn ma_measure_unchecked(model: &ModelSpace, phi: &[f64]) -> Result<GridMeasure> {
    Ok(ma_raw(model, phi))
}

/// Raw signed Monge-Ampère evaluation. The wedge pairings are exact algebra
/// for arbitrary potentials; the gates above guard only measure semantics.
pub(crate) fn ma_raw(model: &ModelSpace, phi: &[f64]) -> GridMeasure {
    match model.kind {
        ModelKind::Radial => model.ma_radial(phi),
        ModelKind::Product => {
            let u = model.full_potential(phi);
            wedge2d::wedge_measure(model, &u, &u)
        }
    }
}

/// Polarized measure V^{-1} omega_phi^j ^ omega_psi^{n-j}.
pub fn mixed_measure(
    model: &ModelSpace,
    phi: &[f64],
    psi: &[f64],
    j: usize,
) -> Result<GridMeasure> {
    let n = match model.kind {
        ModelKind::Radial => 1,
        ModelKind::Product => 2,
    };
    if j > n {
        return Err(Error::InvalidConfig(format!(
            "mixed degree {j} out of range 0..={n}"
        )));
    }
    match model.kind {
        ModelKind::Radial => {
            let arg = if j == 0 { psi } else { phi };
            Ok(model.ma_radial(arg))
        }
        ModelKind::Product => {
            let up = model.full_potential(phi);
            let us = model.full_potential(psi);
            let (a, b) = match j {
                0 => (&us, &us),
                1 => (&up, &us),
                _ => (&up, &up),
            };
            Ok(wedge2d::wedge_measure(model, a, b))
        }
    }
}

/// Aubin-Mabuchi energy: E(phi) = (n+1)^{-1} sum_j <phi, omega_phi^j ^ omega_0^{n-j}>/V.
pub fn energy(model: &ModelSpace, phi: &[f64]) -> Result<f64> {
    model.check_admissible(phi)?;
    Ok(energy_unchecked(model, phi))
}

pub(crate) fn energy_unchecked(model: &ModelSpace, phi: &[f64]) -> f64 {
    match model.kind {
        ModelKind::Radial => {
            let ma = model.ma_radial(phi);
            0.5 * (model.pair(phi, &ma) + model.pair(phi, &model.reference))
        }
        ModelKind::Product => {
            let u = model.full_potential(phi);
            let m2 = wedge2d::wedge_measure(model, &u, &u);
            let m1 = wedge2d::wedge_measure(model, &u, &model.u0);
            (model.pair(phi, &m2) + model.pair(phi, &m1) + model.pair(phi, &model.reference))
                / 3.0
        }
    }
}

/// Both evaluations of the energy difference: the direct one and the
/// mixed-measure sum of equ-bis form. They agree to roundoff.
pub fn energy_bis_pair(model: &ModelSpace, phi: &[f64], psi: &[f64]) -> Result<(f64, f64)> {
    let direct = energy(model, phi)? - energy(model, psi)?;
    let n = match model.kind {
        ModelKind::Radial => 1,
        ModelKind::Product => 2,
    };
    let w: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
    let mut s = 0.0;
    for j in 0..=n {
        let m = mixed_measure(model, phi, psi, j)?;
        s += model.pair(&w, &m);
    }
    Ok((direct, s / (n + 1) as f64))
}

/// Symmetric I-functional: <phi - psi, MA(psi) - MA(phi)>.
pub fn functional_i(model: &ModelSpace, phi: &[f64], psi: &[f64]) -> Result<f64> {
    model.check_admissible(phi)?;
    model.check_admissible(psi)?;
    Ok(functional_i_raw(model, phi, psi))
}

pub(crate) fn functional_i_raw(model: &ModelSpace, phi: &[f64], psi: &[f64]) -> f64 {
    let ma_p = ma_raw(model, phi);
    let ma_s = ma_raw(model, psi);
    let w: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
    model.pair(&w, &ma_s) - model.pair(&w, &ma_p)
}

/// Gradient-form evaluation of I (second expression of the defining identity):
/// sum_j V^{-1} int d(phi-psi) ^ d^c(phi-psi) ^ omega_phi^j omega_psi^{n-1-j}.
pub fn functional_i_gradient_form(model: &ModelSpace, phi: &[f64], psi: &[f64]) -> Result<f64> {
    let w: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
    match model.kind {
        ModelKind::Radial => {
            let h = model.grid.spacing;
            let mut s = 0.0;
            for k in 0..model.grid.cells {
                let d = w[k + 1] - w[k];
                s += d * d;
            }
            Ok(s / (h * model.volume))
        }
        ModelKind::Product => {
            // int dw d^c w ^ omega_g = -<w, (wedge(u_phi, u_g) - wedge(u_psi, u_g))>
            let up = model.full_potential(phi);
            let us = model.full_potential(psi);
            let mut s = 0.0;
            for g in [&up, &us] {
                let a = wedge2d::wedge_measure(model, &up, g);
                let b = wedge2d::wedge_measure(model, &us, g);
                s -= model.pair(&w, &a) - model.pair(&w, &b);
            }
            Ok(s)
        }
    }
}

/// J-functional based at `base` (reference potential 0 when absent):
/// J_psi(phi) = E(psi) - E(phi) + <phi - psi, MA(psi)>.
pub fn functional_j(model: &ModelSpace, phi: &[f64], base: Option<&[f64]>) -> Result<f64> {
    model.check_admissible(phi)?;
    if let Some(b) = base {
        model.check_admissible(b)?;
    }
    Ok(functional_j_raw(model, phi, base))
}

pub(crate) fn functional_j_raw(model: &ModelSpace, phi: &[f64], base: Option<&[f64]>) -> f64 {
    let zero;
    let psi = match base {
        Some(b) => b,
        None => {
            zero = vec![0.0; phi.len()];
            &zero
        }
    };
    let w: Vec<f64> = phi.iter().zip(psi).map(|(a, b)| a - b).collect();
    let ma_s = ma_raw(model, psi);
    energy_unchecked(model, psi) - energy_unchecked(model, phi) + model.pair(&w, &ma_s)
}

/// L(phi) = -log <e^{-phi}, mu_0>.
pub fn functional_l(model: &ModelSpace, phi: &[f64]) -> f64 {
    let w: Vec<f64> = phi.iter().map(|v| (-v).exp()).collect();
    -model.pair(&w, &model.mu0).ln()
}

/// Gibbs measure mu_omega = e^{-phi + L(phi)} mu_0; probability by construction.
pub fn gibbs_measure(model: &ModelSpace, phi: &[f64]) -> GridMeasure {
    tilted_measure(model, phi)
}

/// Normalized tilt e^{-xi} mu_0 of the adapted measure by an arbitrary
/// exponent field (the Gibbs measure is the xi = phi case; the backward flow
/// step uses mixed exponents).
pub fn tilted_measure(model: &ModelSpace, xi: &[f64]) -> GridMeasure {
    let weights: Vec<f64> = model
        .mu0
        .weights
        .iter()
        .zip(xi)
        .map(|(m, p)| m * (-p).exp())
        .collect();
    let atoms = match model.kind {
        ModelKind::Radial => {
            let n = model.grid.cells;
            vec![
                model.mu0.atoms[0] * (-xi[0]).exp(),
                model.mu0.atoms[1] * (-xi[n]).exp(),
            ]
        }
        ModelKind::Product => {
            // pinned boundary: atoms scale by the mean boundary exponent per edge
            let n = model.grid.cells;
            let np = n + 1;
            let mean = |ix: &dyn Fn(usize) -> usize| -> f64 {
                (0..np).map(|k| xi[ix(k)]).sum::<f64>() / np as f64
            };
            vec![
                model.mu0.atoms[0] * (-mean(&|j| j)).exp(),
                model.mu0.atoms[1] * (-mean(&|j| n * np + j)).exp(),
                model.mu0.atoms[2] * (-mean(&|i| i * np)).exp(),
                model.mu0.atoms[3] * (-mean(&|i| i * np + n)).exp(),
            ]
        }
    };
    let mut g = GridMeasure { weights, atoms };
    let total = g.total_mass();
    for w in g.weights.iter_mut().chain(g.atoms.iter_mut()) {
        *w /= total;
    }
    g
}

/// Relative entropy H_mu(nu) with matched node and atom bins, and the
/// total-variation distance sup_A |nu(A) - mu(A)| = L1/2.
pub fn entropy_tv(nu: &GridMeasure, mu: &GridMeasure) -> Result<(f64, f64)> {
    if nu.weights.len() != mu.weights.len() || nu.atoms.len() != mu.atoms.len() {
        return Err(Error::GridMismatch(nu.weights.len(), mu.weights.len()));
    }
    let tv = crate::grid::tv_distance(nu, mu)?;
    let mut h = 0.0;
    let mut unmatched_atom = 0.0;
    for (loc, (&x, &y)) in nu
        .weights
        .iter()
        .zip(&mu.weights)
        .map(|p| (false, p))
        .chain(nu.atoms.iter().zip(&mu.atoms).map(|p| (true, p)))
    {
        if x > 0.0 {
            if y <= 0.0 {
                if loc {
                    unmatched_atom += x;
                    continue;
                }
                return Ok((f64::INFINITY, tv));
            }
            h += x * (x / y).ln();
        }
    }
    if unmatched_atom > 1e-4 {
        return Err(Error::AtomMass {
            mass: unmatched_atom,
        });
    }
    Ok((h, tv))
}

/// Values of every functional at one potential, with the exact-identity gaps.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub e: f64,
    pub j: f64,
    pub i_ref: f64,
    pub e_star: f64,
    pub l: f64,
    pub ding: f64,
    pub mab: f64,
    /// Relative entropy of MA(phi) with respect to mu_0.
    pub h: f64,
    pub gap_mab_ding: f64,
    pub residuals: BTreeMap<String, f64>,
}

impl FunctionalReport {
    pub fn residual_max(&self) -> f64 {
        self.residuals.values().fold(0.0_f64, |a, &b| a.max(b))
    }

    pub const CSV_HEADER: &'static str = "E,J,I_ref,Estar,L,Ding,Mab,H,gap,residual_max";

    pub fn csv_row(&self) -> String {
        [
            self.e,
            self.j,
            self.i_ref,
            self.e_star,
            self.l,
            self.ding,
            self.mab,
            self.h,
            self.gap_mab_ding,
            self.residual_max(),
        ]
        .iter()
        .map(|v| crate::report::fmt_float(*v))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Ding and Mabuchi functionals with the Chen-Tian-style decomposition and
/// the gap identity Mab - Ding = H_{mu_omega}(MA(phi)).
pub fn ding_mab(model: &ModelSpace, phi: &[f64]) -> Result<FunctionalReport> {
    let ma = ma_measure(model, phi)?;
    let zero = vec![0.0; phi.len()];
    let e = energy(model, phi)?;
    let j = functional_j(model, phi, None)?;
    let i_ref = functional_i(model, phi, &zero)?;
    let e_star = i_ref - j; // calibration identity E*(MA(phi)) = (I-J)(phi)
    let l = functional_l(model, phi);
    let ding = l - e;
    let (h, _) = entropy_tv(&ma, &model.mu0)?;
    let mab = h + j - i_ref;
    let gibbs = gibbs_measure(model, phi);
    let (h_gibbs, _) = entropy_tv(&ma, &gibbs)?;
    let gap = mab - ding;
    let mut residuals = BTreeMap::new();
    residuals.insert("chentian_gap".to_string(), (gap - h_gibbs).abs());
    Ok(FunctionalReport {
        e,
        j,
        i_ref,
        e_star,
        l,
        ding,
        mab,
        h,
        gap_mab_ding: gap,
        residuals,
    })
}

/// Energy of a probability measure: E*(mu) = (I - J)(phi_mu) at the
/// calibration potential. When no calibration is supplied the measure is
/// inverted with the Monge-Ampère solver. In debug builds the defining sup
/// form E(phi) - <phi, mu> <= E*(mu) is spot-checked over a fixed sample
/// universe (it is a theorem of the exact discrete concavity).
pub fn dual_energy(
    model: &ModelSpace,
    mu: &GridMeasure,
    calibration: Option<&[f64]>,
) -> Result<f64> {
    let owned;
    let phi = match calibration {
        Some(p) => p,
        None => {
            let cfg = crate::solver::SolverConfig::default();
            owned = crate::solver::solve_ma(model, mu, &cfg)?;
            &owned.values
        }
    };
    let zero = vec![0.0; phi.len()];
    let e_star = functional_i(model, phi, &zero)? - functional_j(model, phi, None)?;
    #[cfg(debug_assertions)]
    if model.kind == ModelKind::Radial {
        let mut sampler = crate::sampling::Sampler::new(0xE57A);
        for _ in 0..8 {
            let q = sampler.radial_admissible(model, 0.6)?;
            let lhs = energy_unchecked(model, &q.values) - model.pair(&q.values, mu);
            debug_assert!(
                lhs <= e_star + 1e-8,
                "sup form violated: {lhs} > {e_star}"
            );
        }
    }
    Ok(e_star)
}

/// Worst slack of the entropy Legendre duality <g,nu> - H(nu|mu) <= log<e^g,mu>
/// over `samples` random mixtures, plus the Gibbs attainment defect.
pub struct LegendreCheck {
    pub worst_slack: f64,
    pub gibbs_defect: f64,
}

pub fn entropy_legendre_check(
    model: &ModelSpace,
    g: &[f64],
    mu: &GridMeasure,
    samples: usize,
    seed: u64,
) -> Result<LegendreCheck> {
    let expg: Vec<f64> = g.iter().map(|v| v.exp()).collect();
    let log_z = model.pair(&expg, mu).ln();

    // Gibbs measure nu* proportional to e^g mu attains equality.
    let mut star = GridMeasure {
        weights: mu
            .weights
            .iter()
            .zip(g)
            .map(|(m, gv)| m * (gv - log_z).exp())
            .collect(),
        atoms: match model.kind {
            ModelKind::Radial => {
                let n = model.grid.cells;
                vec![
                    mu.atoms[0] * (g[0] - log_z).exp(),
                    mu.atoms[1] * (g[n] - log_z).exp(),
                ]
            }
            ModelKind::Product => mu.atoms.clone(), // pinned g: boundary factor e^{0}
        },
    };
    let total = star.total_mass();
    for w in star.weights.iter_mut().chain(star.atoms.iter_mut()) {
        *w /= total;
    }
    let (h_star, _) = entropy_tv(&star, mu)?;
    let gibbs_defect = (model.pair(g, &star) - h_star - log_z).abs();

    let mut sampler = crate::sampling::Sampler::new(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..samples {
        let nu = sampler.random_mixture(model, mu);
        let (h, _) = entropy_tv(&nu, mu)?;
        if h.is_finite() {
            let slack = log_z - (model.pair(g, &nu) - h);
            worst = worst.min(slack);
        }
    }
    Ok(LegendreCheck {
        worst_slack: worst,
        gibbs_defect,
    })
}

/// Bisection bracket for the radial alpha-invariant over the extremal family
/// phi_m(t) = -m log(1 + e^{-t}) and its mirror, m in (0, slope budget].
/// The bracket is an upper bound for the unrestricted invariant only over the
/// symmetric class.
pub fn alpha_estimate(model: &ModelSpace, m_steps: usize, tol: f64) -> Result<(f64, f64)> {
    if model.kind != ModelKind::Radial {
        return Err(Error::WrongModelKind { expected: "radial" });
    }
    let budget = model.axis_budget;
    let beta0 = model.beta0;
    let beta_inf = model.beta_inf;
    let cutoffs = [8.0_f64, 16.0, 24.0];
    let family: Vec<f64> = (1..=m_steps.max(1))
        .map(|k| budget * k as f64 / m_steps.max(1) as f64)
        .collect();

    let diverges = |alpha: f64| -> bool {
        for &m in &family {
            for mirror in [false, true] {
                let mut masses = [0.0_f64; 3];
                for (ci, &cut) in cutoffs.iter().enumerate() {
                    let cells = (cut * 32.0) as usize * 2;
                    let h = 2.0 * cut / cells as f64;
                    let mut acc = 0.0;
                    for k in 0..cells {
                        let a = -cut + h * k as f64;
                        // 4-point Gauss is plenty for the smooth integrand
                        for &(x, w) in &[
                            (-0.8611363115940526, 0.3478548451374538),
                            (-0.3399810435848563, 0.6521451548625461),
                            (0.3399810435848563, 0.6521451548625461),
                            (0.8611363115940526, 0.3478548451374538),
                        ] {
                            let s = a + 0.5 * h * (1.0 + x);
                            let t = if mirror { -s } else { s };
                            // -alpha*phi_m(t) = alpha * m * log(1+e^{-t})
                            let wfac = (alpha * m * crate::model::ln_1p_exp(-t)).exp();
                            let f0 = {
                                let sum = beta0 + beta_inf;
                                if s > 0.0 {
                                    ((beta0 - sum) * s - sum * (-s).exp().ln_1p()).exp()
                                } else {
                                    (beta0 * s - sum * s.exp().ln_1p()).exp()
                                }
                            };
                            acc += 0.5 * h * w * wfac * f0;
                        }
                    }
                    masses[ci] = acc;
                }
                let inc1 = masses[1] - masses[0];
                let inc2 = masses[2] - masses[1];
                if inc2 >= 1.001 * inc1 {
                    return true;
                }
            }
        }
        false
    };

    let (mut lo, mut hi) = (0.0_f64, 1.5_f64);
    while hi - lo > tol.min(0.008) {
        let mid = 0.5 * (lo + hi);
        if diverges(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Sampled Moser constant C_alpha = max over sup-normalized admissible samples
/// of log <e^{-alpha phi}, mu_0>; requires alpha below the certified bracket.
pub fn moser_constant(model: &ModelSpace, alpha: f64, samples: usize, seed: u64) -> Result<f64> {
    let (lo, _) = alpha_estimate(model, 8, 0.01)?;
    if alpha >= lo {
        return Err(Error::AlphaOutsideBracket { alpha, bracket: lo });
    }
    let mut sampler = crate::sampling::Sampler::new(seed);
    let mut c = 0.0_f64;
    for _ in 0..samples {
        let phi = sampler.radial_admissible(model, 0.8)?.sup_normalized();
        let w: Vec<f64> = phi.values.iter().map(|v| (-alpha * v).exp()).collect();
        c = c.max(model.pair(&w, &model.mu0).ln());
    }
    Ok(c)
}
