mod common;

use bgamp::device::{derivatives, BiasTuple};
use common::fd::{oracle_coefficients, ray_derivatives};
use common::{all_orders, random_bias, random_device};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ray_fit_differentiates_exactly_known_functions() {
    let d = ray_derivatives(f64::exp);
    for (k, v) in d.iter().enumerate() {
        assert!((v - 1.0).abs() < 1e-12, "exp order {k}: {v}");
    }
    let d = ray_derivatives(|s| 2.0 - 5.0 * s + 0.5 * s * s * s);
    assert!((d[1] + 5.0).abs() < 1e-12 && d[2].abs() < 1e-12 && (d[3] - 3.0).abs() < 1e-12);
}

#[test]
fn analytic_partials_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = (0.0f64, String::new());
    for _ in 0..2000 {
        let p = random_device(&mut rng);
        let [g, d, b] = random_bias(&mut rng, &p);
        let bias = BiasTuple::at(&p, g, d, b).unwrap();
        let set = derivatives(&p, &bias, 3).unwrap();
        let fd = oracle_coefficients(&p, [g, d, b]);
        for [i, j, k] in all_orders() {
            let an = set.coefficient(i, j, k);
            let excess = (an - fd[i][j][k]).abs() / (1e-6 * an.abs() + 1e-12);
            if excess > worst.0 {
                worst = (excess, format!("[{i},{j},{k}] an={an:e} fd={:e}", fd[i][j][k]));
            }
        }
    }
    assert!(worst.0 <= 1.0, "worst {}: {}", worst.0, worst.1);
}
