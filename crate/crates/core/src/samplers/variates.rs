use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Draw `X` with `1/X ~ Gamma(shape, rate)`.
pub fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse gamma needs shape > 0 and rate > 0, got ({shape}, {rate})"
        )));
    }
    let gamma = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::InvalidParameter(format!("inverse gamma: {e}")))?;
    let x = 1.0 / gamma.sample(rng);
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NumericalBreakdown(format!(
            "inverse gamma({shape}, {rate}) draw is {x}"
        )))
    }
}

/// Inverse-Gaussian draw with mean `mu` and shape `lambda`, by the
/// transformation-with-rejection method of Michael, Schucany and Haas.
///
/// The smaller root is formed as `mu / (1 + w/2 + sqrt(w + w^2/4))` with
/// `w = mu * y / lambda`, which stays accurate when `mu` is huge.
pub fn draw_inverse_gaussian<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse Gaussian needs mu > 0 and lambda > 0, got ({mu}, {lambda})"
        )));
    }
    let g: f64 = StandardNormal.sample(rng);
    let y = g * g;
    let w = mu * y / lambda;
    let root = if w == 0.0 {
        mu
    } else if w.is_finite() {
        let half = 0.5 * w;
        mu / (1.0 + half + half * (1.0 + 4.0 / w).sqrt())
    } else {
        // mu * y overflowed; the small root tends to lambda / y.
        lambda / y
    };
    let u: f64 = rng.random();
    let x = if u * (mu + root) <= mu {
        root
    } else {
        mu * (mu / root)
    };
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::NumericalBreakdown(format!(
            "inverse Gaussian({mu}, {lambda}) draw is {x}"
        )))
    }
}

/// Cholesky factor `L L^T` of a symmetric positive definite precision matrix.
#[derive(Debug, Clone)]
pub struct PrecisionFactor {
    chol: Cholesky<f64, Dyn>,
}

impl PrecisionFactor {
    pub fn new(precision: DMatrix<f64>) -> Result<Self> {
        if !precision.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "precision matrix is {}x{}",
                precision.nrows(),
                precision.ncols()
            )));
        }
        if precision.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let n = precision.nrows();
        for i in 0..n {
            for j in 0..i {
                let (x, y) = (precision[(i, j)], precision[(j, i)]);
                if (x - y).abs() > 1e-10 * x.abs().max(y.abs()).max(1.0) {
                    return Err(Error::NotPositiveDefinite);
                }
            }
        }
        let chol = Cholesky::new(precision).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// Solve `precision * x = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// Draw from `N(mean, scale * precision^-1)`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        mean: &DVector<f64>,
        scale: f64,
        rng: &mut R,
    ) -> DVector<f64> {
        let s = scale.sqrt();
        let g = DVector::from_fn(self.dim(), |_, _| { let z: f64 = StandardNormal.sample(rng); s * z });
        // L^T z = g gives cov(z) = (L L^T)^-1.
        let z = self
            .chol
            .l_dirty()
            .tr_solve_lower_triangular(&g)
            .expect("Cholesky factor has a positive diagonal");
        mean + z
    }
}

/// Draw from `N(A^-1 rhs, scale * A^-1)` for a precision matrix `A`.
pub fn draw_mvn_precision<R: Rng + ?Sized>(
    rhs: &DVector<f64>,
    precision: DMatrix<f64>,
    scale: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    if rhs.len() != precision.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs has length {} but precision is {}x{}",
            rhs.len(),
            precision.nrows(),
            precision.ncols()
        )));
    }
    let factor = PrecisionFactor::new(precision)?;
    let mean = factor.solve(rhs);
    Ok(factor.sample(&mean, scale, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{gauss_jordan_inverse, inverse_gamma_cdf, inverse_gaussian_cdf, quantile_by_bisection};
    use crate::samplers::RngStream;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn inverse_gamma_moments_and_median() {
        let mut rng = RngStream::new(1, 0);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| draw_inverse_gamma(3.0, 4.0, &mut rng).unwrap())
            .collect();
        let (m, _) = moments(&draws);
        // var = rate^2 / ((shape-1)^2 (shape-2)) = 4
        let se = (4.0f64 / 1e6).sqrt();
        assert!((m - 2.0).abs() < 3.0 * se, "mean {m}");
        let median = quantile_by_bisection(|x| inverse_gamma_cdf(x, 3.0, 4.0), 0.5, 0.0, 100.0);
        let below = draws.iter().filter(|&&x| x <= median).count() as f64 / 1e6;
        assert!((below - 0.5).abs() < 0.002, "P(X <= median) = {below}");
    }

    #[test]
    fn inverse_gaussian_moments_and_median() {
        let mut rng = RngStream::new(2, 0);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| draw_inverse_gaussian(2.0, 5.0, &mut rng).unwrap())
            .collect();
        let (m, v) = moments(&draws);
        assert!((m - 2.0).abs() < 3.0 * (1.6f64 / 1e6).sqrt(), "mean {m}");
        // fourth central moment = var^2 (3 + 15 mu / lambda)
        let var_se = ((1.6f64 * 1.6 * (3.0 + 6.0) - 1.6 * 1.6) / 1e6).sqrt();
        assert!((v - 1.6).abs() < 4.0 * var_se, "variance {v}");
        let median = quantile_by_bisection(|x| inverse_gaussian_cdf(x, 2.0, 5.0), 0.5, 0.0, 100.0);
        let below = draws.iter().filter(|&&x| x <= median).count() as f64 / 1e6;
        assert!((below - 0.5).abs() < 0.002, "P(X <= median) = {below}");
    }

    #[test]
    fn inverse_gaussian_huge_mean_is_finite() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..10_000 {
            let x = draw_inverse_gaussian(1e300, 0.5, &mut rng).unwrap();
            assert!(x.is_finite() && x > 0.0);
        }
    }

    #[test]
    fn invalid_parameters() {
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(draw_inverse_gamma(0.0, 1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(matches!(draw_inverse_gamma(1.0, -1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(matches!(draw_inverse_gaussian(0.0, 1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(matches!(draw_inverse_gaussian(-2.0, 1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(matches!(draw_inverse_gaussian(1.0, 0.0, &mut rng), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn mvn_rejects_non_pd() {
        let mut rng = RngStream::new(0, 0);
        let rhs = DVector::zeros(3);
        assert_eq!(
            draw_mvn_precision(&rhs, DMatrix::zeros(3, 3), 1.0, &mut rng).unwrap_err(),
            Error::NotPositiveDefinite
        );
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(draw_mvn_precision(&DVector::zeros(2), asym, 1.0, &mut rng).is_err());
    }

    #[test]
    fn mvn_identity_is_standard_normal() {
        let mut rng = RngStream::new(4, 0);
        let n = 100_000;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        let mut cross = 0.0;
        for _ in 0..n {
            let x = draw_mvn_precision(&DVector::zeros(2), DMatrix::identity(2, 2), 1.0, &mut rng).unwrap();
            for k in 0..2 {
                sum[k] += x[k];
                sq[k] += x[k] * x[k];
            }
            cross += x[0] * x[1];
        }
        let se = 1.0 / (n as f64).sqrt();
        for k in 0..2 {
            assert!((sum[k] / n as f64).abs() < 4.0 * se);
            assert!((sq[k] / n as f64 - 1.0).abs() < 4.0 * 2f64.sqrt() * se);
        }
        assert!((cross / n as f64).abs() < 4.0 * se);
    }

    #[test]
    fn mvn_covariance_matches_inverse() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, -0.8, 0.5, -0.8, 2.0];
        let rhs = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let rows: Vec<Vec<f64>> = a.chunks(3).map(|r| r.to_vec()).collect();
        let cov = gauss_jordan_inverse(&rows).unwrap();
        let mean: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| cov[i][j] * rhs[j]).sum())
            .collect();
        let precision = DMatrix::from_row_slice(3, 3, &a);
        let factor = PrecisionFactor::new(precision).unwrap();
        let m = factor.solve(&rhs);
        for i in 0..3 {
            assert!((m[i] - mean[i]).abs() < 1e-12);
        }
        let mut rng = RngStream::new(5, 0);
        let n = 100_000;
        let mut acc = [[0.0; 3]; 3];
        for _ in 0..n {
            let x = factor.sample(&m, 1.0, &mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let est = acc[i][j] / n as f64;
                let se = ((cov[i][i] * cov[j][j] + cov[i][j] * cov[i][j]) / n as f64).sqrt();
                assert!((est - cov[i][j]).abs() < 3.0 * se, "({i},{j}): {est} vs {}", cov[i][j]);
            }
        }
    }

    #[test]
    fn mvn_scalar_reduction() {
        // p = 1: mean rhs / a, variance scale / a.
        let (rhs, a, scale) = (3.0, 2.5, 0.7);
        let mut rng = RngStream::new(6, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                draw_mvn_precision(
                    &DVector::from_element(1, rhs),
                    DMatrix::from_element(1, 1, a),
                    scale,
                    &mut rng,
                )
                .unwrap()[0]
            })
            .collect();
        let (m, v) = moments(&xs);
        let var = scale / a;
        assert!((m - rhs / a).abs() < 4.0 * (var / n as f64).sqrt());
        assert!((v - var).abs() < 4.0 * var * (2.0 / n as f64).sqrt());
    }
}
