use adsb_relay::queue::{
    avg_requests, avg_requests_uniform, avg_wait, avg_wait_uniform, capacity, stability, sweep, CellDistribution,
    QueueError, QueueParams, ADSB_RATE_HZ, DEFAULT_MU,
};
use proptest::prelude::*;

/// Per-queue oracle: Pollaczek-Khinchine mean queue length for deterministic
/// service, plus Little's law for the sojourn.
fn pk_oracle(lambda: f64, p: &[f64], mu: f64) -> (f64, f64) {
    let mut n = 0.0;
    let mut t = 0.0;
    for &pk in p {
        let lk = lambda * pk;
        let rho = lk / mu;
        // E[S^2] = 1/mu^2 for constant service
        let lq = lk * lk / (mu * mu) / (2.0 * (1.0 - rho));
        let nk = lq + rho;
        n += nk;
        if lk > 0.0 {
            t += pk * nk / lk;
        } else {
            t += pk / mu;
        }
    }
    (n, t)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Random probability vector and a load giving `rho_max` in (0, 0.9].
fn stable_params() -> impl Strategy<Value = QueueParams> {
    (1usize..=100)
        .prop_flat_map(|k| (proptest::collection::vec(0.01f64..1.0, k), 0.01f64..=0.9))
        .prop_map(|(w, rho_max)| {
            let total: f64 = w.iter().sum();
            let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
            // absorb rounding so the sum is 1 to machine precision
            let rest: f64 = p[1..].iter().sum();
            p[0] = 1.0 - rest;
            let p_max = p.iter().copied().fold(0.0, f64::max);
            QueueParams::new(rho_max * DEFAULT_MU / p_max, p, DEFAULT_MU).unwrap()
        })
}

proptest! {
    #[test]
    fn littles_law(params in stable_params()) {
        let n = avg_requests(&params).unwrap();
        let t = avg_wait(&params).unwrap();
        prop_assert!(rel(n, params.lambda() * t) <= 1e-9);
    }

    #[test]
    fn matches_pollaczek_khinchine(params in stable_params()) {
        let (n, t) = pk_oracle(params.lambda(), params.p(), params.mu());
        prop_assert!(rel(avg_requests(&params).unwrap(), n) <= 1e-12);
        prop_assert!(rel(avg_wait(&params).unwrap(), t) <= 1e-12);
    }

    #[test]
    fn uniform_closed_form(k in 1usize..=100, rho in 0.0f64..0.95) {
        let lambda = rho * k as f64 * DEFAULT_MU;
        let params = QueueParams::uniform(k, lambda, DEFAULT_MU).unwrap();
        prop_assert!(rel(avg_requests(&params).unwrap(), avg_requests_uniform(k, lambda, DEFAULT_MU).unwrap()) <= 1e-12);
        prop_assert!(rel(avg_wait(&params).unwrap(), avg_wait_uniform(k, lambda, DEFAULT_MU).unwrap()) <= 1e-12);
    }

    #[test]
    fn more_load_means_more_waiting(k in 1usize..=20, a in 0.0f64..0.95, b in 0.0f64..0.95) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let kmu = k as f64 * DEFAULT_MU;
        prop_assert!(avg_requests_uniform(k, lo * kmu, DEFAULT_MU).unwrap() < avg_requests_uniform(k, hi * kmu, DEFAULT_MU).unwrap());
        prop_assert!(avg_wait_uniform(k, lo * kmu, DEFAULT_MU).unwrap() < avg_wait_uniform(k, hi * kmu, DEFAULT_MU).unwrap());
    }

    #[test]
    fn sojourn_never_below_service_time(params in stable_params()) {
        prop_assert!(avg_wait(&params).unwrap() * params.mu() >= 1.0 - 1e-12);
    }

    #[test]
    fn capacity_is_the_stability_edge(k in 1usize..=100) {
        let n = capacity(k, DEFAULT_MU, ADSB_RATE_HZ);
        let at = QueueParams::uniform(k, n as f64 * ADSB_RATE_HZ, DEFAULT_MU).unwrap();
        let above = QueueParams::uniform(k, (n + 1) as f64 * ADSB_RATE_HZ, DEFAULT_MU).unwrap();
        prop_assert!(stability(&at));
        prop_assert!(!stability(&above));
    }

    #[test]
    fn unstable_is_an_error(k in 1usize..=10, over in 1.0f64..3.0) {
        let lambda = over * k as f64 * DEFAULT_MU;
        let unstable = matches!(avg_requests_uniform(k, lambda, DEFAULT_MU), Err(QueueError::Unstable { .. }));
        prop_assert!(unstable);
    }
}

#[test]
fn sweep_rows_monotone_per_k() {
    let counts: Vec<u64> = (0..=40).map(|i| i * 500).collect();
    let rows = sweep(&[1, 2, 5], &counts, DEFAULT_MU, ADSB_RATE_HZ, CellDistribution::Uniform).unwrap();
    for k in [1, 2, 5] {
        let waits: Vec<f64> = rows.iter().filter(|r| r.k == k && r.stable).map(|r| r.norm_avg_wait.unwrap()).collect();
        assert!(waits.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn skewed_cells_saturate_first() {
    let skewed = CellDistribution::Zipf(1.0).probabilities(5);
    let p_max = skewed.iter().copied().fold(0.0, f64::max);
    let lambda = 0.95 * DEFAULT_MU / p_max;
    assert!(stability(&QueueParams::uniform(5, lambda, DEFAULT_MU).unwrap()));
    let params = QueueParams::new(lambda, skewed, DEFAULT_MU).unwrap();
    assert!(avg_wait(&params).unwrap() > avg_wait_uniform(5, lambda, DEFAULT_MU).unwrap());
}
