//! Orlicz weights, Luxembourg norms, and the Hölder-Young inequality.

use crate::error::{Error, Result};
use crate::grid::GridMeasure;
use crate::model::ModelSpace;

/// A convex nondecreasing weight vanishing only at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrliczWeight {
    /// chi(s) = (s+1) log(s+1) - s (the entropy weight).
    ChiEntropy,
    /// chi*(t) = e^t - t - 1 (conjugate of the entropy weight).
    ChiStarExp,
    /// s^p / p.
    Power(f64),
}

impl OrliczWeight {
    pub fn eval(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        match self {
            OrliczWeight::ChiEntropy => (s + 1.0) * s.ln_1p() - s,
            OrliczWeight::ChiStarExp => s.exp() - s - 1.0,
            OrliczWeight::Power(p) => s.powf(*p) / p,
        }
    }

    /// Conjugate weight under Legendre duality (power p pairs with power q,
    /// 1/p + 1/q = 1).
    pub fn conjugate(&self) -> OrliczWeight {
        match self {
            OrliczWeight::ChiEntropy => OrliczWeight::ChiStarExp,
            OrliczWeight::ChiStarExp => OrliczWeight::ChiEntropy,
            OrliczWeight::Power(p) => OrliczWeight::Power(p / (p - 1.0)),
        }
    }

    pub fn name(&self) -> String {
        match self {
            OrliczWeight::ChiEntropy => "chi_entropy".into(),
            OrliczWeight::ChiStarExp => "chi_star_exp".into(),
            OrliczWeight::Power(p) => format!("power_{p}"),
        }
    }

    fn is_conjugate_of(&self, other: &OrliczWeight) -> bool {
        match (self, other) {
            (OrliczWeight::ChiEntropy, OrliczWeight::ChiStarExp)
            | (OrliczWeight::ChiStarExp, OrliczWeight::ChiEntropy) => true,
            (OrliczWeight::Power(p), OrliczWeight::Power(q)) => {
                (1.0 / p + 1.0 / q - 1.0).abs() < 1e-12
            }
            _ => false,
        }
    }
}

/// Luxembourg norm: inf { lambda > 0 : <w(|f|/lambda), mu> <= 1 } by bisection
/// to relative 1e-8. Returns 0 iff f vanishes mu-a.e.
pub fn luxembourg_norm(
    model: &ModelSpace,
    f: &[f64],
    w: &OrliczWeight,
    mu: &GridMeasure,
) -> Result<f64> {
    let gauge = |lambda: f64| -> f64 {
        let vals: Vec<f64> = f.iter().map(|v| w.eval(v.abs() / lambda)).collect();
        model.pair(&vals, mu)
    };
    let sup = f.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if sup == 0.0 {
        return Ok(0.0);
    }
    // bracket: gauge is decreasing in lambda
    let mut hi = sup.max(1.0);
    while gauge(hi) > 1.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Nonconvergence {
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
    }
    let mut lo = hi;
    while gauge(lo) <= 1.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    for _ in 0..200 {
        if (hi - lo) <= 1e-8 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if gauge(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Slacks from one Hölder-Young verification.
#[derive(Debug, Clone)]
pub struct HolderYoungSlack {
    /// 2 ||f|| ||g|| - <|fg|, mu> (nonnegative when the inequality holds).
    pub product_slack: f64,
    /// 2 A ||g||_{L^{chi*}(mu)} - ||g||_{L^1(nu)} for nu = f mu, when f >= 0.
    pub density_slack: Option<f64>,
}

/// Verify <|fg|, mu> <= 2 ||f||_{L^chi} ||g||_{L^{chi*}} and, for nonnegative
/// f with <chi(f), mu> <= A (A >= 1), the absolutely-continuous bound
/// ||g||_{L^1(f mu)} <= 2 A ||g||_{L^{chi*}(mu)}.
pub fn holder_young_check(
    model: &ModelSpace,
    f: &[f64],
    g: &[f64],
    mu: &GridMeasure,
    w: &OrliczWeight,
    w_star: &OrliczWeight,
) -> Result<HolderYoungSlack> {
    if !w.is_conjugate_of(w_star) {
        return Err(Error::NonConjugatePair(w.name(), w_star.name()));
    }
    let nf = luxembourg_norm(model, f, w, mu)?;
    let ng = luxembourg_norm(model, g, w_star, mu)?;
    let fg: Vec<f64> = f.iter().zip(g).map(|(a, b)| (a * b).abs()).collect();
    let lhs = model.pair(&fg, mu);
    let product_slack = 2.0 * nf * ng - lhs;

    let density_slack = if f.iter().all(|v| *v >= 0.0) {
        let chif: Vec<f64> = f.iter().map(|v| w.eval(*v)).collect();
        let a = model.pair(&chif, mu).max(1.0);
        let gabs: Vec<f64> = g.iter().zip(f).map(|(x, d)| x.abs() * d).collect();
        let l1_nu = model.pair(&gabs, mu);
        Some(2.0 * a * ng - l1_nu)
    } else {
        None
    };
    Ok(HolderYoungSlack {
        product_slack,
        density_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpace;

    fn setup() -> ModelSpace {
        ModelSpace::radial(1.0, 1.0, 8.0, 64).unwrap()
    }

    #[test]
    fn weights_are_convex_nondecreasing_vanishing_at_zero() {
        for w in [
            OrliczWeight::ChiEntropy,
            OrliczWeight::ChiStarExp,
            OrliczWeight::Power(2.0),
            OrliczWeight::Power(3.0),
        ] {
            assert_eq!(w.eval(0.0), 0.0);
            let mut prev = 0.0;
            for k in 1..100 {
                let s = k as f64 * 0.07;
                let v = w.eval(s);
                assert!(v >= prev && v > 0.0, "{}: not increasing at {s}", w.name());
                let mid = w.eval(s - 0.035);
                assert!(mid <= 0.5 * (prev + v) + 1e-12, "{}: not convex at {s}", w.name());
                prev = v;
            }
            assert_eq!(w.conjugate().conjugate().name(), w.name());
        }
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let m = setup();
        let f = vec![0.0; m.grid.len()];
        let n = luxembourg_norm(&m, &f, &OrliczWeight::ChiStarExp, &m.mu0).unwrap();
        assert_eq!(n, 0.0);
    }

    #[test]
    fn power_norm_closed_form() {
        // gauge <(|f|/lambda)^p / p, mu> = 1  =>  lambda = ||f||_p p^{-1/p}
        let m = setup();
        let f: Vec<f64> = m.grid.nodes.iter().map(|t| 1.0 + 0.3 * t.sin()).collect();
        for p in [2.0, 3.0] {
            let n = luxembourg_norm(&m, &f, &OrliczWeight::Power(p), &m.mu0).unwrap();
            let fp: Vec<f64> = f.iter().map(|v| v.abs().powf(p)).collect();
            let lp = m.pair(&fp, &m.mu0).powf(1.0 / p);
            let oracle = lp * p.powf(-1.0 / p);
            assert!((n - oracle).abs() < 1e-6 * oracle, "p={p}: {n} vs {oracle}");
        }
    }

    #[test]
    fn exp_weight_constant_oracle() {
        // chi*(c/lambda) = 1 with f = c: e^x - x - 1 = 1 has root x* ~ 1.14619...
        let m = setup();
        let c = 0.8;
        let f = vec![c; m.grid.len()];
        let n = luxembourg_norm(&m, &f, &OrliczWeight::ChiStarExp, &m.mu0).unwrap();
        // solve e^x - x - 1 = 1 by bisection
        let (mut lo, mut hi) = (0.5, 2.0);
        for _ in 0..80 {
            let mid: f64 = 0.5 * (lo + hi);
            if mid.exp() - mid - 1.0 > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let oracle = c / lo;
        assert!((n - oracle).abs() < 1e-6, "{n} vs {oracle}");
    }

    #[test]
    fn holder_young_power_pair_is_cauchy_schwarz() {
        let m = setup();
        let f: Vec<f64> = m.grid.nodes.iter().map(|t| (0.7 * t).sin()).collect();
        let g: Vec<f64> = m.grid.nodes.iter().map(|t| (0.3 * t).cos()).collect();
        let s = holder_young_check(
            &m,
            &f,
            &g,
            &m.mu0,
            &OrliczWeight::Power(2.0),
            &OrliczWeight::Power(2.0),
        )
        .unwrap();
        assert!(s.product_slack >= -1e-9, "slack {}", s.product_slack);
        assert!(holder_young_check(
            &m,
            &f,
            &g,
            &m.mu0,
            &OrliczWeight::Power(2.0),
            &OrliczWeight::Power(3.0),
        )
        .is_err());
    }

    #[test]
    fn zero_factor_gives_zero_both_sides() {
        let m = setup();
        let f = vec![0.0; m.grid.len()];
        let g: Vec<f64> = m.grid.nodes.iter().map(|t| t.cos()).collect();
        let s = holder_young_check(
            &m,
            &f,
            &g,
            &m.mu0,
            &OrliczWeight::ChiEntropy,
            &OrliczWeight::ChiStarExp,
        )
        .unwrap();
        assert!(s.product_slack.abs() < 1e-12);
    }
}
