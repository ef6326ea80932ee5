//! Two-block Gibbs sampler for the Bayesian lasso.
//!
//! Model: `Y ~ N_m(mu 1 + X beta, eta2 I)`, `beta ~ N_p(0, eta2 D_tau)`,
//! `tau_j ~ Exponential(rate = lambda^2 / 2)`. The intercept is handled by
//! centering `Y`; the columns of `X` are standardized on construction.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::rng::NormalSource;
use super::variates::{draw_inverse_gamma, draw_inverse_gaussian, PrecisionFactor};
use crate::error::{Error, Result};

/// Smallest |beta_j| used when forming the inverse-Gaussian mean.
const BETA_FLOOR: f64 = 1e-300;

/// Rate of the inverse-gamma draw for `eta2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaRateMode {
    /// `beta` integrated out: shape `(m-1)/2`, rate `(Y'Y - Y'X A^-1 X'Y)/2`.
    #[default]
    Blocked,
    /// Sequential scan using the current `beta`: shape `(m+p-1)/2`,
    /// rate `|Y - X beta|^2/2 + beta' D^-1 beta/2`.
    AsPrinted,
}

/// Parameterization of the inverse-Gaussian draw for `1/tau_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IgMeanMode {
    /// mean `sqrt(lambda^2 eta2 / beta_j^2)`, shape `lambda^2`
    #[default]
    Standard,
    /// mean `sqrt(lambda eta2 / beta_j^2)`, shape `lambda`
    AsPrinted,
}

macro_rules! text_enum {
    ($t:ty, $($variant:path => $text:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text),+ })
            }
        }

        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($variant),)+
                    _ => Err(Error::ConfigInvalid(format!("unknown mode `{s}`"))),
                }
            }
        }
    };
}

text_enum!(EtaRateMode, EtaRateMode::Blocked => "blocked", EtaRateMode::AsPrinted => "as-printed");
text_enum!(IgMeanMode, IgMeanMode::Standard => "standard", IgMeanMode::AsPrinted => "as-printed");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LassoModes {
    pub eta_rate: EtaRateMode,
    pub ig_mean: IgMeanMode,
}

/// How the design matrix was standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub convention: String,
    pub column_means: Vec<f64>,
    pub column_sds: Vec<f64>,
}

/// Regression data with cached Gram quantities.
#[derive(Debug, Clone)]
pub struct LassoData {
    x: DMatrix<f64>,
    y_tilde: DVector<f64>,
    lambda: f64,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    standardization: Standardization,
}

impl LassoData {
    /// Build from a response vector and a raw `m x p` design matrix.
    ///
    /// Columns are centered and scaled to unit sample standard deviation;
    /// the response is centered.
    pub fn new(y: Vec<f64>, mut x: DMatrix<f64>, lambda: f64) -> Result<Self> {
        let m = y.len();
        if x.nrows() != m {
            return Err(Error::DimensionMismatch(format!(
                "response has {m} rows, design matrix has {}",
                x.nrows()
            )));
        }
        if m < 2 || x.ncols() < 1 {
            return Err(Error::DimensionMismatch(format!(
                "need m >= 2 and p >= 1, got m = {m}, p = {}",
                x.ncols()
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data contain non-finite values".into()));
        }

        let mut means = Vec::with_capacity(x.ncols());
        let mut sds = Vec::with_capacity(x.ncols());
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let mean = col.iter().sum::<f64>() / m as f64;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / (m - 1) as f64).sqrt();
            if !(sd > 0.0) {
                return Err(Error::InvalidParameter(format!("column {j} of X is constant")));
            }
            col /= sd;
            means.push(mean);
            sds.push(sd);
        }

        let y_mean = y.iter().sum::<f64>() / m as f64;
        let y_tilde = DVector::from_iterator(m, y.iter().map(|v| v - y_mean));
        let xtx = x.tr_mul(&x);
        let xty = x.tr_mul(&y_tilde);
        let yty = y_tilde.norm_squared();
        Ok(Self {
            x,
            y_tilde,
            lambda,
            xtx,
            xty,
            yty,
            standardization: Standardization {
                convention: "center columns, scale to unit sample sd (divisor m-1)".into(),
                column_means: means,
                column_sds: sds,
            },
        })
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Standardized design matrix.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Centered response.
    pub fn y_tilde(&self) -> &DVector<f64> {
        &self.y_tilde
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }
}

/// Gibbs state `(beta, eta2, tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoState {
    pub beta: DVector<f64>,
    pub eta2: f64,
    pub tau: DVector<f64>,
}

impl LassoState {
    /// `beta ~ N_p(0, I)`, `eta2 ~ Exponential(1)`, `tau = 1`.
    pub fn initial<R: Rng + ?Sized>(p: usize, mut rng: &mut R) -> Self {
        let beta = DVector::from_fn(p, |_, _| rng.standard_normal());
        let eta2: f64 = Exp1.sample(rng);
        Self {
            beta,
            eta2: if eta2 > 0.0 { eta2 } else { f64::MIN_POSITIVE },
            tau: DVector::from_element(p, 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta2 > 0.0 && self.eta2.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("eta2 = {}", self.eta2)));
        }
        if let Some(j) = self.beta.iter().position(|b| !b.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("beta[{j}] = {}", self.beta[j])));
        }
        if let Some(j) = self.tau.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::NumericalBreakdown(format!("tau[{j}] = {}", self.tau[j])));
        }
        Ok(())
    }
}

/// One sweep: `(beta, eta2) | tau`, then each `1/tau_j | beta, eta2`.
pub fn lasso_gibbs_step<R: Rng + ?Sized>(
    state: &LassoState,
    data: &LassoData,
    modes: LassoModes,
    rng: &mut R,
) -> Result<LassoState> {
    let p = data.p();
    let m = data.m() as f64;
    if state.beta.len() != p || state.tau.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {} but data have p = {p}",
            state.beta.len()
        )));
    }

    let mut precision = data.xtx.clone();
    for j in 0..p {
        precision[(j, j)] += 1.0 / state.tau[j];
    }
    let factor = PrecisionFactor::new(precision).map_err(|e| match e {
        Error::NotPositiveDefinite => {
            Error::NumericalBreakdown("Cholesky factorization of A_tau failed".into())
        }
        other => other,
    })?;
    let mean = factor.solve(&data.xty);

    let (shape, rate) = match modes.eta_rate {
        EtaRateMode::Blocked => ((m - 1.0) / 2.0, 0.5 * (data.yty - data.xty.dot(&mean))),
        EtaRateMode::AsPrinted => {
            let resid = &data.y_tilde - &data.x * &state.beta;
            let penalty: f64 = state
                .beta
                .iter()
                .zip(state.tau.iter())
                .map(|(b, t)| b * b / t)
                .sum();
            ((m + p as f64 - 1.0) / 2.0, 0.5 * resid.norm_squared() + 0.5 * penalty)
        }
    };
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::NumericalBreakdown(format!("eta2 rate is {rate}")));
    }
    let eta2 = draw_inverse_gamma(shape, rate, rng)?;
    let beta = factor.sample(&mean, eta2, rng);

    let lambda = data.lambda;
    let (scale, ig_shape) = match modes.ig_mean {
        IgMeanMode::Standard => (lambda * eta2.sqrt(), lambda * lambda),
        IgMeanMode::AsPrinted => ((lambda * eta2).sqrt(), lambda),
    };
    let mut tau = DVector::zeros(p);
    for j in 0..p {
        let magnitude = beta[j].abs();
        if !magnitude.is_finite() {
            return Err(Error::NumericalBreakdown(format!("beta[{j}] = {}", beta[j])));
        }
        let clamped = magnitude < BETA_FLOOR;
        let mu = scale / magnitude.max(BETA_FLOOR);
        let inv = draw_inverse_gaussian(mu, ig_shape, rng).map_err(|e| {
            if clamped {
                Error::DegenerateBeta { index: j }
            } else {
                e
            }
        })?;
        tau[j] = 1.0 / inv;
    }

    let next = LassoState { beta, eta2, tau };
    next.validate()?;
    Ok(next)
}

/// `-(m/2) ln eta2 - |r|^2 / (2 eta2)` for a residual vector `r`.
pub fn gaussian_log_likelihood(eta2: f64, residual: &[f64]) -> f64 {
    let m = residual.len() as f64;
    let rss: f64 = residual.iter().map(|r| r * r).sum();
    -0.5 * m * eta2.ln() - rss / (2.0 * eta2)
}

/// Log-likelihood `-(m/2) ln eta2 - |Y~ - X beta|^2 / (2 eta2)`.
pub fn lasso_log_likelihood(state: &LassoState, data: &LassoData) -> f64 {
    let resid = &data.y_tilde - &data.x * &state.beta;
    gaussian_log_likelihood(state.eta2, resid.as_slice())
}

/// A running sampler emitting the log-likelihood after each sweep.
#[derive(Debug, Clone)]
pub struct LassoChain<'a> {
    data: &'a LassoData,
    modes: LassoModes,
    state: LassoState,
}

impl<'a> LassoChain<'a> {
    pub fn new(data: &'a LassoData, modes: LassoModes, init: LassoState) -> Result<Self> {
        if init.beta.len() != data.p() || init.tau.len() != data.p() {
            return Err(Error::DimensionMismatch("initial state dimension".into()));
        }
        init.validate()?;
        Ok(Self {
            data,
            modes,
            state: init,
        })
    }

    pub fn state(&self) -> &LassoState {
        &self.state
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        self.state = lasso_gibbs_step(&self.state, self.data, self.modes, rng)?;
        Ok(lasso_log_likelihood(&self.state, self.data))
    }

    /// Discard `burn_in` sweeps, then record up to `n` log-likelihood values.
    ///
    /// On failure the values produced so far are returned with the error.
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        n: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> (Vec<f64>, Option<Error>) {
        for _ in 0..burn_in {
            if let Err(e) = self.step(rng) {
                return (Vec::new(), Some(e));
            }
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            match self.step(rng) {
                Ok(v) => out.push(v),
                Err(e) => return (out, Some(e)),
            }
        }
        (out, None)
    }
}
