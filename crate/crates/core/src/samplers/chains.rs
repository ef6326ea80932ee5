use super::rng::NormalSource;
use crate::error::{Error, Result};
use crate::estimators::ChainTrace;

/// Autoregressive coefficient of the toy chain's x-marginal.
pub const TOY_RHO: f64 = 0.5;
/// Innovation variance of the toy chain's x-marginal, 1/4 + 1/8.
pub const TOY_INNOVATION_VARIANCE: f64 = 0.375;

/// One step of the x-marginal of the two-block toy Gibbs sampler
/// (`x | z ~ N(z, 1/4)`, `z | x ~ N(x/2, 1/8)`): `x/2 + N(0, 3/8)`.
pub fn toy_marginal_step<S: NormalSource + ?Sized>(x: f64, src: &mut S) -> f64 {
    x / 2.0 + TOY_INNOVATION_VARIANCE.sqrt() * src.standard_normal()
}

/// Run the toy chain for `burn_in + n` steps from `init_x`, keeping the last `n`.
pub fn toy_chain<S: NormalSource + ?Sized>(
    n: usize,
    burn_in: usize,
    init_x: f64,
    src: &mut S,
) -> Result<ChainTrace> {
    ar1_chain(TOY_RHO, TOY_INNOVATION_VARIANCE, n, burn_in, init_x, src)
}

/// `x_{i+1} = rho x_i + sqrt(tau2) g_i`, keeping the last `n` of `burn_in + n` steps.
pub fn ar1_chain<S: NormalSource + ?Sized>(
    rho: f64,
    tau2: f64,
    n: usize,
    burn_in: usize,
    init: f64,
    src: &mut S,
) -> Result<ChainTrace> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidRho(rho));
    }
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau2 must be > 0, got {tau2}")));
    }
    if !init.is_finite() {
        return Err(Error::InvalidParameter(format!("initial state {init} is not finite")));
    }
    if n == 0 {
        return Err(Error::EmptyTrace);
    }
    let sd = tau2.sqrt();
    let mut x = init;
    for _ in 0..burn_in {
        x = rho * x + sd * src.standard_normal();
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        x = rho * x + sd * src.standard_normal();
        values.push(x);
    }
    ChainTrace::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{batch_means_estimate, batch_schedule, ess, sample_autocovariance, ScheduleRule};
    use crate::samplers::RngStream;

    struct Zero;

    impl NormalSource for Zero {
        fn standard_normal(&mut self) -> f64 {
            0.0
        }
    }

    #[test]
    fn deterministic_part() {
        assert_eq!(toy_marginal_step(4.0, &mut Zero), 2.0);
        assert_eq!(toy_chain(1, 0, 4.0, &mut Zero).unwrap().values(), &[2.0]);
        assert_eq!(toy_chain(3, 1, 16.0, &mut Zero).unwrap().values(), &[4.0, 2.0, 1.0]);
    }

    #[test]
    fn toy_is_ar1_with_substituted_parameters() {
        let a = toy_chain(1000, 50, 0.3, &mut RngStream::new(9, 2)).unwrap();
        let b = ar1_chain(0.5, 0.375, 1000, 50, 0.3, &mut RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_rho() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(ar1_chain(1.0, 1.0, 10, 0, 0.0, &mut rng), Err(Error::InvalidRho(1.0)));
        assert_eq!(ar1_chain(-1.5, 1.0, 10, 0, 0.0, &mut rng), Err(Error::InvalidRho(-1.5)));
        assert!(ar1_chain(0.5, 0.0, 10, 0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn toy_autocovariances() {
        let n = 1_000_000;
        let mut rng = RngStream::new(123, 0);
        let init = rng.standard_normal() * 0.5f64.sqrt();
        let t = toy_chain(n, 0, init, &mut rng).unwrap();
        for h in 0..4 {
            let gamma = sample_autocovariance(&t, h).unwrap();
            let truth = 0.5f64.powi(h as i32 + 1);
            // For a Gaussian AR(1), n var(gamma_hat_h) -> sum_k (g_k^2 + g_{k+h} g_{k-h}),
            // which with g_k = 2^-(1+|k|) is at most 0.5^2 * (5/3) * 2 = 5/6.
            let se = (5.0 / 6.0 / n as f64).sqrt();
            assert!((gamma - truth).abs() < 4.0 * se, "lag {h}: {gamma} vs {truth}");
        }
        let var = sample_autocovariance(&t, 0).unwrap();
        let rho1 = sample_autocovariance(&t, 1).unwrap() / var;
        assert!((rho1 - 0.5).abs() < 0.005);
        assert!((var - 0.5).abs() < 0.005);
        // The chain mean has asymptotic variance 1.5 / n.
        assert!(t.mean().abs() < 4.0 * (1.5 / n as f64).sqrt());
    }

    #[test]
    fn toy_batch_means_near_truth() {
        let n = 500_000;
        let mut rng = RngStream::new(77, 0);
        let init = rng.standard_normal();
        let t = toy_chain(n, 1000, init, &mut rng).unwrap();
        let s = batch_schedule(n, ScheduleRule::SqrtN).unwrap();
        let est = batch_means_estimate(&t, &s).unwrap();
        let band = 4.0 * 1.5 * (2.0 / s.num_batches as f64).sqrt();
        assert!((est.sigma2_hat - 1.5).abs() < band, "{}", est.sigma2_hat);
    }

    #[test]
    fn white_noise_ess_near_n() {
        let n = 200_000;
        let mut rng = RngStream::new(31, 0);
        let t = ar1_chain(0.0, 2.0, n, 0, 0.0, &mut rng).unwrap();
        let s = batch_schedule(n, ScheduleRule::SqrtN).unwrap();
        let est = batch_means_estimate(&t, &s).unwrap();
        let ratio = ess(&t, est.sigma2_hat).unwrap() / n as f64;
        // relative spread of sigma2_hat is sqrt(2/a) ~ 0.06
        assert!((ratio - 1.0).abs() < 4.0 * (2.0 / s.num_batches as f64).sqrt(), "{ratio}");
    }
}
