//! Property tests for the structural invariants of the library: envelope
//! behavior, measure normalization, entropy conventions, energy monotonicity
//! and concavity, and exponential integrability of admissible potentials.

use fanolab::functionals::{energy, entropy_tv, ma_measure};
use fanolab::grid::GridMeasure;
use fanolab::model::ModelSpace;
use proptest::prelude::*;

fn model() -> ModelSpace {
    ModelSpace::radial(0.5, 0.5, 8.0, 64).unwrap()
}

fn field(seed: u64, amp: f64, len: usize) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    (0..len)
        .map(|i| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let r = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
            amp * r * ((i as f64) * 0.37).sin()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_idempotent_monotone_contractive(seed in 0u64..1_000, amp in 0.05f64..0.8) {
        let m = model();
        let g1 = field(seed, amp, m.grid.len());
        let e1 = m.psh_envelope(&g1);
        // below the input and idempotent
        for (a, b) in e1.values.iter().zip(&g1) {
            prop_assert!(*a <= *b + 1e-12);
        }
        let e11 = m.psh_envelope(&e1.values);
        for (a, b) in e11.values.iter().zip(&e1.values) {
            prop_assert!((a - b).abs() < 1e-11);
        }
        // monotone and sup-contractive against a shifted field
        let g2: Vec<f64> = g1.iter().enumerate().map(|(i, v)| v + 0.1 * ((i as f64) * 0.11).cos()).collect();
        let e2 = m.psh_envelope(&g2);
        let sup_in = g1.iter().zip(&g2).map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
        let sup_out = e1.values.iter().zip(&e2.values).map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
        prop_assert!(sup_out <= sup_in + 1e-12);
        let g3: Vec<f64> = g1.iter().map(|v| v + 0.2).collect();
        let e3 = m.psh_envelope(&g3);
        for (hi, lo) in e3.values.iter().zip(&e1.values) {
            prop_assert!(*hi >= *lo - 1e-12);
        }
    }

    #[test]
    fn ma_is_probability_with_nonnegative_weights(seed in 0u64..1_000) {
        let m = model();
        let g = field(seed, 0.5, m.grid.len());
        let phi = m.psh_envelope(&g);
        let ma = ma_measure(&m, &phi.values).unwrap();
        prop_assert!((ma.total_mass() - 1.0).abs() < 1e-10);
        prop_assert!(ma.negativity_defect() < 1e-12);
    }

    #[test]
    fn energy_monotone_and_concave(seed in 0u64..500) {
        let m = model();
        let a = m.psh_envelope(&field(seed, 0.5, m.grid.len()));
        let b = m.psh_envelope(&field(seed.wrapping_add(77), 0.5, m.grid.len()));
        // monotonicity: phi <= psi nodewise => E(phi) <= E(psi)
        let lower: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x.min(*y)).collect();
        let lower = m.psh_envelope(&lower);
        let e_lower = energy(&m, &lower.values).unwrap();
        for other in [&a.values, &b.values] {
            prop_assert!(e_lower <= energy(&m, other).unwrap() + 1e-9);
        }
        // concavity on the admissible segment
        let ea = energy(&m, &a.values).unwrap();
        let eb = energy(&m, &b.values).unwrap();
        for t in [0.25, 0.5, 0.75] {
            let mix: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let em = energy(&m, &mix).unwrap();
            prop_assert!(em >= t * ea + (1.0 - t) * eb - 1e-9);
        }
    }

    #[test]
    fn entropy_conventions(seed in 0u64..1_000) {
        // H >= 2 tv^2 and tv = L1/2 on random pairs with matched support
        let mut sampler = fanolab::sampling::Sampler::new(seed);
        let (a, b) = sampler.measure_pair(32);
        let nu = GridMeasure { weights: a, atoms: vec![0.0, 0.0] };
        let mu = GridMeasure { weights: b, atoms: vec![0.0, 0.0] };
        let (h, tv) = entropy_tv(&nu, &mu).unwrap();
        prop_assert!(h >= 2.0 * tv * tv - 1e-12);
        let l1 = fanolab::grid::l1_distance(&nu, &mu).unwrap();
        prop_assert!((l1 - 2.0 * tv).abs() < 1e-14);
        // unmatched support gives infinite entropy
        let mut mu0 = mu.clone();
        mu0.weights[7] = 0.0;
        let (h_inf, _) = entropy_tv(&nu, &mu0).unwrap();
        prop_assert!(h_inf.is_infinite());
    }

    #[test]
    fn admissible_potentials_are_exponentially_integrable(seed in 0u64..500) {
        // zero-Lelong-number reflection: <e^{-p phi}, mu0> finite for all p
        let m = model();
        let g = field(seed, 0.6, m.grid.len());
        let phi = m.psh_envelope(&g).sup_normalized();
        for p in [1.0, 2.0, 4.0, 8.0] {
            let w: Vec<f64> = phi.values.iter().map(|v| (-p * v).exp()).collect();
            let val = m.pair(&w, &m.mu0);
            prop_assert!(val.is_finite() && val > 0.0);
        }
    }

    #[test]
    fn translation_rule_for_energy(seed in 0u64..500, c in -2.0f64..2.0) {
        let m = model();
        let phi = m.psh_envelope(&field(seed, 0.5, m.grid.len()));
        let shifted: Vec<f64> = phi.values.iter().map(|v| v + c).collect();
        let d = energy(&m, &shifted).unwrap() - energy(&m, &phi.values).unwrap();
        prop_assert!((d - c).abs() < 1e-10);
    }
}
