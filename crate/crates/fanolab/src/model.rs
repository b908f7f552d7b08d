//! Model spaces: the radial two-cone sphere and the torus-invariant product.
//!
//! Both reduce Kähler geometry to convex functions in log coordinates. The
//! radial reference potential is u0(t) = 2*beta*log(1+e^t) with slope budget
//! [0, 2*beta] and volume V = 2*beta; the adapted measure mu0 has density
//! f0(t) = c * e^{beta0 t} (1+e^t)^{-(beta0+beta_inf)}, realized on the grid
//! by exact hat-function integrals so that its total mass is 1 and, at
//! beta = 1, it coincides node-by-node with the discrete Monge-Ampère image
//! of u0. The product model is the beta = 1 geometry squared, with the n!
//! volume convention V = 2 * (axis budget)^2 = 8.

use crate::convex::{clamp_slopes, convexity_residual, lower_hull};
use crate::error::{Error, Result};
use crate::grid::{Dim, Grid, GridMeasure, Normalization, Potential};
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::function::beta::{beta, beta_reg};

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
const GL16: [(f64, f64); 16] = [
    (-0.9894009349916499, 0.027152459411754095),
    (-0.9445750230732326, 0.06225352393864789),
    (-0.8656312023878318, 0.09515851168249278),
    (-0.7554044083550030, 0.12462897125553387),
    (-0.6178762444026438, 0.14959598881657673),
    (-0.4580167776572274, 0.16915651939500254),
    (-0.2816035507792589, 0.18260341504492358),
    (-0.0950125098376374, 0.18945061045506850),
    (0.0950125098376374, 0.18945061045506850),
    (0.2816035507792589, 0.18260341504492358),
    (0.4580167776572274, 0.16915651939500254),
    (0.6178762444026438, 0.14959598881657673),
    (0.7554044083550030, 0.12462897125553387),
    (0.8656312023878318, 0.09515851168249278),
    (0.9445750230732326, 0.06225352393864789),
    (0.9894009349916499, 0.027152459411754095),
];

fn gauss_cell<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let xm = 0.5 * (a + b);
    let xr = 0.5 * (b - a);
    GL16.iter().map(|&(x, w)| w * f(xm + xr * x)).sum::<f64>() * xr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Radial,
    Product,
}

/// A discretized symmetry-reduced geometry with its reference data.
#[derive(Debug, Clone)]
pub struct ModelSpace {
    pub kind: ModelKind,
    pub grid: Grid,
    pub beta0: f64,
    pub beta_inf: f64,
    /// min(beta0, beta_inf); governs the radial slope budget.
    pub beta: f64,
    /// V = integral of omega_0^n: 2*beta radially, n! * budget^2 = 8 for the product.
    pub volume: f64,
    /// Per-axis slope budget: 2*beta radially, 2 per product axis.
    pub axis_budget: f64,
    /// Reference convex potential on nodes (flattened row-major in 2-D).
    pub u0: Vec<f64>,
    /// Per-axis reference potential (product model; equals u0 in 1-D).
    pub axis_u0: Vec<f64>,
    /// Adapted probability measure mu0.
    pub mu0: GridMeasure,
    /// Reference volume measure V^{-1} omega_0^n = MA(0).
    pub reference: GridMeasure,
    /// Analytic f0 density sampled at nodes (radial models).
    pub f0_nodes: Vec<f64>,
    /// Construction allowed despite a failing klt gate.
    pub diagnostics: bool,
    pub eps_conv: f64,
}

/// Unnormalized adapted density without the normalizing constant.
fn f0_raw(beta0: f64, beta_inf: f64, t: f64) -> f64 {
    // e^{beta0 t} (1+e^t)^{-(beta0+beta_inf)} computed stably on both tails
    let s = beta0 + beta_inf;
    if t > 0.0 {
        ((beta0 - s) * t - s * (-t).exp().ln_1p()).exp()
    } else {
        (beta0 * t - s * t.exp().ln_1p()).exp()
    }
}

impl ModelSpace {
    /// Round or conical two-cone-point sphere model.
    pub fn radial(beta0: f64, beta_inf: f64, half_width: f64, cells: usize) -> Result<Self> {
        Self::radial_with(beta0, beta_inf, half_width, cells, false)
    }

    /// As `radial`, with the klt gate disabled for divergence diagnostics.
    pub fn radial_diagnostics(
        beta0: f64,
        beta_inf: f64,
        half_width: f64,
        cells: usize,
    ) -> Result<Self> {
        Self::radial_with(beta0, beta_inf, half_width, cells, true)
    }

    fn radial_with(
        beta0: f64,
        beta_inf: f64,
        half_width: f64,
        cells: usize,
        diagnostics: bool,
    ) -> Result<Self> {
        if beta0.min(beta_inf) <= 0.0 && !diagnostics {
            return Err(Error::NonKlt { beta0, beta_inf });
        }
        let grid = Grid::new(Dim::One, half_width, cells)?;
        let beta = beta0.min(beta_inf);
        let volume = 2.0 * beta.max(f64::MIN_POSITIVE);
        let u0: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&t| 2.0 * beta * ln_1p_exp(t))
            .collect();

        let (mu0, f0_nodes) = if beta0.min(beta_inf) > 0.0 {
            radial_adapted_measure(&grid, beta0, beta_inf)
        } else {
            // diagnostics mode: no finite adapted measure; keep a zero placeholder
            (
                GridMeasure {
                    weights: vec![0.0; grid.len()],
                    atoms: vec![0.0, 0.0],
                },
                grid.nodes.iter().map(|&t| f0_raw(beta0, beta_inf, t)).collect(),
            )
        };

        let mut model = ModelSpace {
            kind: ModelKind::Radial,
            grid,
            beta0,
            beta_inf,
            beta,
            volume,
            axis_budget: 2.0 * beta,
            axis_u0: u0.clone(),
            u0,
            mu0,
            reference: GridMeasure {
                weights: vec![],
                atoms: vec![],
            },
            f0_nodes,
            diagnostics,
            eps_conv: crate::grid::EPS_CONV,
        };
        model.reference = model.ma_radial(&vec![0.0; model.grid.len()]);
        if beta0.min(beta_inf) > 0.0 {
            model.mu0.check_probability(1e-10)?;
            debug_assert!(convexity_residual(&model.u0) <= model.eps_conv);
        }
        Ok(model)
    }

    /// Torus-invariant product model (n = 2), the beta = 1 axis geometry squared.
    pub fn product(half_width: f64, cells: usize) -> Result<Self> {
        Self::product_with_budget(half_width, cells, 4_200_000)
    }

    pub fn product_with_budget(half_width: f64, cells: usize, budget: usize) -> Result<Self> {
        let nodes = (cells + 1) * (cells + 1);
        if nodes > budget {
            return Err(Error::ResourceGuard { nodes, budget });
        }
        let grid = Grid::new(Dim::Two, half_width, cells)?;
        let axis_u0: Vec<f64> = grid.nodes.iter().map(|&t| 2.0 * ln_1p_exp(t)).collect();
        let np = cells + 1;
        let mut u0 = vec![0.0; np * np];
        for i in 0..np {
            for j in 0..np {
                u0[i * np + j] = axis_u0[i] + axis_u0[j];
            }
        }
        let volume = 2.0 * 2.0 * 2.0; // n! * budget^2 with budget 2 per axis
        let mut model = ModelSpace {
            kind: ModelKind::Product,
            grid,
            beta0: 1.0,
            beta_inf: 1.0,
            beta: 1.0,
            volume,
            axis_budget: 2.0,
            u0,
            axis_u0,
            mu0: GridMeasure {
                weights: vec![],
                atoms: vec![],
            },
            reference: GridMeasure {
                weights: vec![],
                atoms: vec![],
            },
            f0_nodes: vec![],
            diagnostics: false,
            eps_conv: crate::grid::EPS_CONV,
        };
        let refm = crate::wedge2d::wedge_measure(&model, &model.u0, &model.u0);
        model.reference = refm;
        model.mu0 = model.reference.clone();
        model.mu0.check_probability(1e-10)?;
        Ok(model)
    }

    /// Full potential u = u0 + phi.
    pub fn full_potential(&self, phi: &[f64]) -> Vec<f64> {
        self.u0.iter().zip(phi).map(|(a, b)| a + b).collect()
    }

    /// Pair a node function with a measure, boundary atoms included.
    pub fn pair(&self, f: &[f64], mu: &GridMeasure) -> f64 {
        let mut s = 0.0;
        for (fv, w) in f.iter().zip(&mu.weights) {
            s += fv * w;
        }
        match self.kind {
            ModelKind::Radial => {
                s += f[0] * mu.atoms[0] + f[self.grid.cells] * mu.atoms[1];
            }
            ModelKind::Product => {
                let n = self.grid.cells;
                let np = n + 1;
                let edge_mean = |responder: &dyn Fn(usize) -> usize| -> f64 {
                    let mut acc = 0.0;
                    for k in 0..np {
                        acc += f[responder(k)];
                    }
                    acc / np as f64
                };
                let left = edge_mean(&|j| j); // i = 0 row-major: idx = 0*np + j
                let right = edge_mean(&|j| n * np + j);
                let bottom = edge_mean(&|i| i * np);
                let top = edge_mean(&|i| i * np + n);
                s += left * mu.atoms[0] + right * mu.atoms[1] + bottom * mu.atoms[2] + top * mu.atoms[3];
            }
        }
        s
    }

    /// Monge-Ampère measure of a radial potential: interior slope jumps plus
    /// slope-deficit atoms; total mass is 1 identically.
    pub(crate) fn ma_radial(&self, phi: &[f64]) -> GridMeasure {
        let n = self.grid.cells;
        let h = self.grid.spacing;
        let v = self.volume;
        let u: Vec<f64> = self.u0.iter().zip(phi).map(|(a, b)| a + b).collect();
        let mut weights = vec![0.0; n + 1];
        for i in 1..n {
            weights[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * v);
        }
        let slope_l = (u[1] - u[0]) / h;
        let slope_r = (u[n] - u[n - 1]) / h;
        GridMeasure {
            weights,
            atoms: vec![slope_l / v, (v - slope_r) / v],
        }
    }

    /// Admissibility: discrete convexity of u = u0 + phi within eps_conv and
    /// axis boundary slopes inside [0, axis budget].
    pub fn check_admissible(&self, phi: &[f64]) -> Result<()> {
        let u = self.full_potential(phi);
        let h = self.grid.spacing;
        let tol = self.eps_conv;
        match self.kind {
            ModelKind::Radial => {
                let res = convexity_residual(&u);
                if res > tol {
                    return Err(Error::Inadmissible { residual: res, tol });
                }
                let n = self.grid.cells;
                for slope in [(u[1] - u[0]) / h, (u[n] - u[n - 1]) / h] {
                    if slope < -1e-9 || slope > self.axis_budget + 1e-9 {
                        return Err(Error::SlopeBudget {
                            slope,
                            budget: self.axis_budget,
                        });
                    }
                }
            }
            ModelKind::Product => {
                let n = self.grid.cells;
                let np = n + 1;
                let mut worst = 0.0_f64;
                for i in 0..np {
                    for j in 1..n {
                        let d = u[i * np + j + 1] - 2.0 * u[i * np + j] + u[i * np + j - 1];
                        worst = worst.max(-d);
                        let d2 = u[(j + 1) * np + i] - 2.0 * u[j * np + i] + u[(j - 1) * np + i];
                        worst = worst.max(-d2);
                    }
                }
                if worst > tol {
                    return Err(Error::Inadmissible {
                        residual: worst,
                        tol,
                    });
                }
                for i in 0..np {
                    for (a, b) in [(u[i * np + 1], u[i * np]), (u[np + i], u[i])] {
                        let slope = (a - b) / h;
                        if slope < -1e-9 || slope > self.axis_budget + 1e-9 {
                            return Err(Error::SlopeBudget {
                                slope,
                                budget: self.axis_budget,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Even-symmetry gauge: phi(t) <- (phi(t) + phi(-t)) / 2 (radial), or the
    /// same applied per axis index (product). Preserves admissibility.
    pub fn symmetrize_even(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.grid.cells;
        match self.kind {
            ModelKind::Radial => (0..=n).map(|i| 0.5 * (phi[i] + phi[n - i])).collect(),
            ModelKind::Product => {
                let np = n + 1;
                let mut out = vec![0.0; np * np];
                for i in 0..np {
                    for j in 0..np {
                        out[i * np + j] =
                            0.5 * (phi[i * np + j] + phi[(n - i) * np + (n - j)]);
                    }
                }
                out
            }
        }
    }

    /// Largest admissible potential below g: convex envelope of u0 + g with
    /// slope clamps, minus u0. Radial grids use the exact lower hull; product
    /// grids the largest axis-convex minorant (alternating axis hulls).
    pub fn psh_envelope(&self, g: &[f64]) -> Potential {
        let h = self.grid.spacing;
        match self.kind {
            ModelKind::Radial => {
                let w: Vec<f64> = self.u0.iter().zip(g).map(|(a, b)| a + b).collect();
                let mut env = lower_hull(&self.grid.nodes, &w);
                clamp_slopes(&mut env, h, 0.0, self.axis_budget);
                let phi: Vec<f64> = env.iter().zip(&self.u0).map(|(e, u)| e - u).collect();
                Potential::from_values(phi, Normalization::Free)
            }
            ModelKind::Product => {
                let n = self.grid.cells;
                let np = n + 1;
                let mut w: Vec<f64> = self.u0.iter().zip(g).map(|(a, b)| a + b).collect();
                let x = &self.grid.nodes;
                for _ in 0..500 {
                    let mut changed = 0.0_f64;
                    for i in 0..np {
                        let row: Vec<f64> = (0..np).map(|j| w[i * np + j]).collect();
                        let mut hull = lower_hull(x, &row);
                        clamp_slopes(&mut hull, h, 0.0, self.axis_budget);
                        for j in 0..np {
                            changed = changed.max(w[i * np + j] - hull[j]);
                            w[i * np + j] = hull[j];
                        }
                    }
                    for j in 0..np {
                        let col: Vec<f64> = (0..np).map(|i| w[i * np + j]).collect();
                        let mut hull = lower_hull(x, &col);
                        clamp_slopes(&mut hull, h, 0.0, self.axis_budget);
                        for i in 0..np {
                            changed = changed.max(w[i * np + j] - hull[i]);
                            w[i * np + j] = hull[i];
                        }
                    }
                    if changed < 1e-14 {
                        break;
                    }
                }
                let phi: Vec<f64> = w.iter().zip(&self.u0).map(|(e, u)| e - u).collect();
                Potential::from_values(phi, Normalization::Free)
            }
        }
    }

    /// Discrete Legendre transform of a convex grid function onto a uniform
    /// slope grid covering the model's slope interval [0, budget]. The
    /// biconjugate reproduces convex inputs within one grid resolution times
    /// the budget.
    pub fn legendre_transform(&self, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let res = crate::convex::convexity_residual(u);
        if res > self.eps_conv {
            return Err(Error::NonConvexInput(res));
        }
        let m = 2 * self.grid.cells;
        let slopes: Vec<f64> = (0..=m)
            .map(|k| self.axis_budget * k as f64 / m as f64)
            .collect();
        let values = crate::convex::legendre(&self.grid.nodes, u, &slopes);
        Ok((slopes, values))
    }

    /// Provenance record: model parameters plus a checksum of the adapted
    /// measure weights.
    pub fn provenance(&self) -> ModelProvenance {
        let mut hasher = Sha256::new();
        for w in self.mu0.weights.iter().chain(self.mu0.atoms.iter()) {
            hasher.update(w.to_le_bytes());
        }
        ModelProvenance {
            kind: self.kind,
            beta0: self.beta0,
            beta_inf: self.beta_inf,
            t: self.grid.half_width,
            n: self.grid.cells,
            v: self.volume,
            f0_checksum: format!("{:x}", hasher.finalize()),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ModelProvenance {
    pub kind: ModelKind,
    pub beta0: f64,
    pub beta_inf: f64,
    pub t: f64,
    pub n: usize,
    pub v: f64,
    pub f0_checksum: String,
}

/// log(1 + e^t), stable on both tails.
pub fn ln_1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Adapted measure by exact hat-function integrals of f0, tails folded into
/// boundary atoms through the regularized incomplete Beta function.
fn radial_adapted_measure(grid: &Grid, beta0: f64, beta_inf: f64) -> (GridMeasure, Vec<f64>) {
    let n = grid.cells;
    let h = grid.spacing;
    let t = &grid.nodes;
    let c = 1.0 / beta(beta0, beta_inf);
    let f0 = |s: f64| c * f0_raw(beta0, beta_inf, s);

    let mut weights = vec![0.0; n + 1];
    for i in 1..n {
        let up = gauss_cell(|s| f0(s) * (s - t[i - 1]) / h, t[i - 1], t[i]);
        let dn = gauss_cell(|s| f0(s) * (t[i + 1] - s) / h, t[i], t[i + 1]);
        weights[i] = up + dn;
    }
    let sigma = |s: f64| 1.0 / (1.0 + (-s).exp());
    let tail_l = beta_reg(beta0, beta_inf, sigma(t[0]));
    let tail_r = 1.0 - beta_reg(beta0, beta_inf, sigma(t[n]));
    let ramp_l = gauss_cell(|s| f0(s) * (t[1] - s) / h, t[0], t[1]);
    let ramp_r = gauss_cell(|s| f0(s) * (s - t[n - 1]) / h, t[n - 1], t[n]);
    let f0_nodes = t.iter().map(|&s| f0(s)).collect();
    (
        GridMeasure {
            weights,
            atoms: vec![tail_l + ramp_l, tail_r + ramp_r],
        },
        f0_nodes,
    )
}

/// Unnormalized adapted-measure mass per cutoff T, for the klt dichotomy.
/// Bounded (saturating increments) iff min(beta0, beta_inf) > 0.
pub fn klt_mass_profile(beta0: f64, beta_inf: f64, cutoffs: &[f64]) -> Vec<f64> {
    cutoffs
        .iter()
        .map(|&cut| {
            let cells = (cut * 32.0).ceil() as usize * 2;
            let h = 2.0 * cut / cells as f64;
            let mut mass = 0.0;
            for k in 0..cells {
                let a = -cut + h * k as f64;
                mass += gauss_cell(|s| f0_raw(beta0, beta_inf, s), a, a + h);
            }
            mass
        })
        .collect()
}

/// Increment-ratio divergence test on a mass profile over increasing cutoffs.
/// Returns true when the profile saturates (bounded mass).
pub fn profile_saturates(masses: &[f64]) -> bool {
    assert!(masses.len() >= 3, "need at least three cutoffs");
    let k = masses.len();
    let inc1 = masses[k - 2] - masses[k - 3];
    let inc2 = masses[k - 1] - masses[k - 2];
    inc2 < 0.9 * inc1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tv_distance;

    #[test]
    fn round_model_reference_is_adapted_measure() {
        // beta = 1 makes mu0 the reference volume; hat integrals of f0 agree
        // with the slope jumps of u0 to quadrature precision.
        let m = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
        let d = tv_distance(&m.reference, &m.mu0).unwrap();
        assert!(d < 1e-12, "tv = {d:.3e}");
    }

    #[test]
    fn round_f0_equals_reference_density_formula() {
        // f0 = c e^t (1+e^t)^{-2} vs V^{-1} u0'' = sigma'(t): identical formulas at beta=1
        let m = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
        for (&t, &f) in m.grid.nodes.iter().zip(&m.f0_nodes) {
            let sigma_prime = {
                let e = (-t.abs()).exp();
                e / (1.0 + e).powi(2)
            };
            assert!((f - sigma_prime).abs() <= 1e-10, "t={t} f={f} s'={sigma_prime}");
        }
    }

    #[test]
    fn cone_model_tails() {
        // f0 ~ e^{0.5 t} at -inf and e^{-0.5 t} at +inf for the half-angle football
        let m = ModelSpace::radial(0.5, 0.5, 12.0, 256).unwrap();
        let t0 = m.grid.nodes[4];
        let t1 = m.grid.nodes[8];
        let ratio = m.f0_nodes[8] / m.f0_nodes[4];
        assert!((ratio.ln() - 0.5 * (t1 - t0)).abs() < 1e-3);
        let k = m.grid.cells;
        let ratio_r = m.f0_nodes[k - 4] / m.f0_nodes[k - 8];
        let tr = m.grid.nodes[k - 4] - m.grid.nodes[k - 8];
        assert!((ratio_r.ln() + 0.5 * tr).abs() < 1e-3);
    }

    #[test]
    fn klt_gate() {
        assert!(ModelSpace::radial(-0.1, 0.5, 8.0, 64).is_err());
        assert!(ModelSpace::radial_diagnostics(-0.1, 0.5, 8.0, 64).is_ok());
    }

    #[test]
    fn klt_profile_dichotomy() {
        let bounded = klt_mass_profile(1.0, 1.0, &[4.0, 8.0, 12.0]);
        assert!(bounded[0] < bounded[1] && bounded[1] < bounded[2]);
        assert!(profile_saturates(&bounded));
        // increments shrink by about e^{-4}
        let r = (bounded[2] - bounded[1]) / (bounded[1] - bounded[0]);
        assert!((r.ln() + 4.0).abs() < 0.15, "ratio {r}");

        let linear = klt_mass_profile(0.0, 1.0, &[4.0, 8.0, 12.0]);
        assert!(!profile_saturates(&linear));
        let rl = (linear[2] - linear[1]) / (linear[1] - linear[0]);
        assert!((rl - 1.0).abs() < 0.05, "linear ratio {rl}");

        let divergent = klt_mass_profile(-0.2, 1.0, &[4.0, 8.0, 12.0]);
        assert!(!profile_saturates(&divergent));
        let rd = (divergent[2] - divergent[1]) / (divergent[1] - divergent[0]);
        assert!((rd.ln() - 0.2 * 4.0).abs() < 0.1, "divergent ratio {rd}");
    }

    #[test]
    fn product_reference_is_probability() {
        let m = ModelSpace::product(6.0, 24).unwrap();
        m.reference.check_probability(1e-10).unwrap();
    }

    #[test]
    fn product_volume_convention() {
        // V = n! * (axis slope budget)^2 = 2 * 4, resolution-independent
        let a = ModelSpace::product(10.0, 64).unwrap();
        let b = ModelSpace::product(10.0, 128).unwrap();
        assert_eq!(a.volume, 8.0);
        assert!((a.volume - b.volume).abs() < 1e-12);
        // unnormalized discrete MA mass of u0 equals V
        assert!((a.reference.total_mass() * a.volume - 8.0).abs() < 1e-8);
    }

    #[test]
    fn envelope_radial_properties() {
        let m = ModelSpace::radial(1.0, 1.0, 8.0, 64).unwrap();
        // constants are admissible
        let g = vec![-0.3; m.grid.len()];
        let p = m.psh_envelope(&g);
        for v in &p.values {
            assert!((v + 0.3).abs() < 1e-12);
        }
        // idempotent
        let mut gr = vec![0.0; m.grid.len()];
        for (i, v) in gr.iter_mut().enumerate() {
            *v = 0.3 * ((i as f64) * 0.7).sin();
        }
        let e1 = m.psh_envelope(&gr);
        let e2 = m.psh_envelope(&e1.values);
        for (a, b) in e1.values.iter().zip(&e2.values) {
            assert!((a - b).abs() < 1e-11);
        }
        m.check_admissible(&e1.values).unwrap();
    }

    #[test]
    fn envelope_is_monotone_and_sup_contractive() {
        let m = ModelSpace::radial(0.5, 0.5, 8.0, 64).unwrap();
        let mut g1 = vec![0.0; m.grid.len()];
        let mut g2 = vec![0.0; m.grid.len()];
        for i in 0..g1.len() {
            g1[i] = 0.4 * ((i as f64) * 0.3).sin();
            g2[i] = g1[i] + 0.05 * ((i as f64) * 1.1).cos();
        }
        let e1 = m.psh_envelope(&g1);
        let e2 = m.psh_envelope(&g2);
        let sup_in = g1
            .iter()
            .zip(&g2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        let sup_out = e1
            .values
            .iter()
            .zip(&e2.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(sup_out <= sup_in + 1e-12);
        let g3: Vec<f64> = g1.iter().map(|v| v + 0.2).collect();
        let e3 = m.psh_envelope(&g3);
        for (a, b) in e3.values.iter().zip(&e1.values) {
            assert!(*a >= *b - 1e-12);
        }
    }

    #[test]
    fn legendre_transform_round_oracle() {
        // u0*(V/2) = -u0(0): the max sits at the symmetric node
        let m = ModelSpace::radial(1.0, 1.0, 12.0, 256).unwrap();
        let (slopes, vals) = m.legendre_transform(&m.u0).unwrap();
        let mid = slopes.len() / 2;
        assert!((slopes[mid] - m.volume / 2.0).abs() < 1e-12);
        assert!((vals[mid] + m.u0[m.grid.cells / 2]).abs() < 1e-10);
        // non-convex input rejected
        let mut bad = m.u0.clone();
        bad[40] += 1.0;
        assert!(m.legendre_transform(&bad).is_err());
        // biconjugation returns convex inputs within h * budget
        let back = crate::convex::legendre(&slopes, &vals, &m.grid.nodes);
        for (b, orig) in back.iter().zip(&m.u0) {
            assert!(*b <= *orig + 1e-12);
            assert!(*b >= *orig - m.grid.spacing * m.axis_budget - 1e-12);
        }
    }

    #[test]
    fn provenance_is_deterministic() {
        let a = ModelSpace::radial(0.5, 0.5, 8.0, 64).unwrap().provenance();
        let b = ModelSpace::radial(0.5, 0.5, 8.0, 64).unwrap().provenance();
        assert_eq!(a, b);
    }
}
