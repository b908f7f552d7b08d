//! Seeded random admissible potentials and measures.
//!
//! Radial samples are psh envelopes of band-limited random fields; product
//! samples are Monge-Ampère inversions of strictly positive random targets,
//! which keeps every vertex mass nonnegative. Structured families (kinks,
//! translates, scaled copies) stress the tails the way smooth fields do not.

use crate::error::Result;
use crate::grid::{GridMeasure, Potential};
use crate::model::{ModelKind, ModelSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub struct Sampler {
    rng: ChaCha20Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    fn normal(&mut self) -> f64 {
        // Box-Muller; two uniforms from the seeded stream
        let u1: f64 = self.rng.gen_range(1e-12..1.0);
        let u2: f64 = self.rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Band-limited pinned random field on the radial grid.
    fn radial_field(&mut self, model: &ModelSpace, amp: f64, kmax: usize) -> Vec<f64> {
        let t = &model.grid.nodes;
        let tt = model.grid.half_width;
        let mut g = vec![0.0; t.len()];
        for k in 1..=kmax {
            let (a, b) = (self.normal(), self.normal());
            for (gi, &ti) in g.iter_mut().zip(t) {
                let arg = std::f64::consts::PI * k as f64 * ti / (2.0 * tt);
                *gi += (a * arg.cos() + b * arg.sin()) / k as f64;
            }
        }
        let scale = amp / kmax as f64 * 3.0;
        for gi in g.iter_mut() {
            *gi *= scale;
        }
        // pin the endpoints by removing the linear interpolant
        let (g0, gn) = (g[0], g[t.len() - 1]);
        for (gi, &ti) in g.iter_mut().zip(t) {
            *gi -= g0 + (gn - g0) * (ti - t[0]) / (2.0 * tt);
        }
        g
    }

    /// Random admissible radial potential (pinned envelope of a random field).
    pub fn radial_admissible(&mut self, model: &ModelSpace, amp: f64) -> Result<Potential> {
        let g = self.radial_field(model, amp, 6);
        let p = model.psh_envelope(&g);
        model.check_admissible(&p.values)?;
        Ok(p)
    }

    /// Even-symmetric admissible radial potential.
    pub fn radial_admissible_even(&mut self, model: &ModelSpace, amp: f64) -> Result<Potential> {
        let p = self.radial_admissible(model, amp)?;
        let sym = model.symmetrize_even(&p.values);
        let mut rep = model.psh_envelope(&sym);
        model.check_admissible(&rep.values)?;
        rep.even_gauge = true;
        Ok(rep)
    }

    /// Admissible potential with strictly positive Monge-Ampère mass at every
    /// interior node (flow-ready start): one Monge-Ampère inversion of the
    /// Gibbs measure of a random admissible seed.
    pub fn radial_positive(&mut self, model: &ModelSpace, amp: f64, even: bool) -> Result<Potential> {
        let seed = if even {
            self.radial_admissible_even(model, amp)?
        } else {
            self.radial_admissible(model, amp)?
        };
        let target = crate::functionals::gibbs_measure(model, &seed.values);
        let cfg = crate::solver::SolverConfig::default();
        crate::solver::solve_ma_pinned(model, &target, &cfg)
    }

    /// Kink potential: piecewise linear with one interior slope jump.
    pub fn radial_kink(&mut self, model: &ModelSpace, position: f64, jump: f64) -> Potential {
        let t = &model.grid.nodes;
        let mut g: Vec<f64> = t.iter().map(|&ti| 0.5 * jump * (ti - position).abs()).collect();
        let g0 = g[0];
        let gn = g[t.len() - 1];
        for (gi, &ti) in g.iter_mut().zip(t) {
            *gi -= g0 + (gn - g0) * (ti - t[0]) / (2.0 * model.grid.half_width);
        }
        model.psh_envelope(&g)
    }

    /// Strictly positive random probability target on the product grid,
    /// blended with the reference measure.
    pub fn product_positive_target(&mut self, model: &ModelSpace, amp: f64) -> GridMeasure {
        let n = model.grid.cells;
        let np = n + 1;
        let t = &model.grid.nodes;
        let tt = model.grid.half_width;
        let mut field = vec![0.0; np * np];
        for kx in 1..=3usize {
            for ky in 1..=3usize {
                let a = self.normal() * amp / (kx * ky) as f64;
                for i in 0..np {
                    for j in 0..np {
                        let sx = (std::f64::consts::PI * kx as f64 * (t[i] + tt) / (2.0 * tt)).sin();
                        let sy = (std::f64::consts::PI * ky as f64 * (t[j] + tt) / (2.0 * tt)).sin();
                        field[i * np + j] += a * sx * sy;
                    }
                }
            }
        }
        // normalize by shifting the tilt so edge-layer masses move as little
        // as possible
        let interior_ref: f64 = model.reference.weights.iter().sum();
        let total: f64 = model
            .reference
            .weights
            .iter()
            .zip(&field)
            .map(|(w, f)| w * f.exp())
            .sum();
        let c = (total / interior_ref).ln();
        let weights: Vec<f64> = model
            .reference
            .weights
            .iter()
            .zip(&field)
            .map(|(w, f)| w * (f - c).exp())
            .collect();
        GridMeasure {
            weights,
            atoms: model.reference.atoms.clone(),
        }
    }

    /// Random admissible product potential via Monge-Ampère inversion. The
    /// solved state is shrunk toward the reference until every vertex mass
    /// and edge lump is nonnegative and the boundary slopes sit inside the
    /// budget, so entropy terms are well-posed downstream.
    pub fn product_admissible(&mut self, model: &ModelSpace, amp: f64) -> Result<Potential> {
        debug_assert_eq!(model.kind, ModelKind::Product);
        let target = self.product_positive_target(model, amp);
        let cfg = crate::solver::SolverConfig::default();
        let solved = crate::solver::solve_ma_pinned(model, &target, &cfg)?;
        let mut theta = 1.0;
        for _ in 0..30 {
            let cand: Vec<f64> = solved.values.iter().map(|v| theta * v).collect();
            let admissible = model.check_admissible(&cand).is_ok();
            if admissible {
                let ma = crate::functionals::ma_measure_unchecked(model, &cand)?;
                if ma.negativity_defect() <= 1e-13 {
                    return Ok(Potential::from_values(cand, crate::grid::Normalization::Pinned));
                }
            }
            theta *= 0.8;
        }
        Ok(Potential::zero(model.grid.len()))
    }

    /// Random probability measure absolutely continuous with respect to mu
    /// (a tilted copy; used by the entropy Legendre suite).
    pub fn random_mixture(&mut self, model: &ModelSpace, mu: &GridMeasure) -> GridMeasure {
        let amp = 0.8;
        let tilt: Vec<f64> = (0..mu.weights.len())
            .map(|i| (amp * ((i as f64 * 0.7).sin() * self.normal())).tanh())
            .collect();
        let mut weights: Vec<f64> = mu
            .weights
            .iter()
            .zip(&tilt)
            .map(|(w, t)| w * (1.0 + 0.9 * t))
            .collect();
        let mut atoms = mu.atoms.clone();
        let _ = model;
        let total = weights.iter().sum::<f64>() + atoms.iter().sum::<f64>();
        for w in weights.iter_mut().chain(atoms.iter_mut()) {
            *w /= total;
        }
        GridMeasure { weights, atoms }
    }

    /// Random probability vector pair on the same support (Pinsker suite).
    pub fn measure_pair(&mut self, len: usize) -> (Vec<f64>, Vec<f64>) {
        let mut a: Vec<f64> = (0..len).map(|_| self.rng.gen_range(1e-6..1.0)).collect();
        let mut b: Vec<f64> = (0..len).map(|_| self.rng.gen_range(1e-6..1.0)).collect();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        a.iter_mut().for_each(|x| *x /= sa);
        b.iter_mut().for_each(|x| *x /= sb);
        (a, b)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
}
