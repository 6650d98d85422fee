//! Sample statistics used by the ETH analysis: moments, a Kolmogorov-Smirnov
//! normality check, Freedman-Diaconis histograms and log-log slope fits.
//!
//! All reductions sort their input first so the floating-point result does
//! not depend on the order in which samples were pooled.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sorted(xs).iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (`n - 1` denominator).
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let v = sorted(xs);
    let mu = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    (sorted(xs).iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

pub fn normal_cdf(x: f64, mean: f64, std: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (std * std::f64::consts::SQRT_2))
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form converges fast for small lambda.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for k in 1..=50 {
            let j = (2 * k - 1) as f64;
            let term = (-(j * j) * pi2 / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-18 {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sf += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sf).clamp(0.0, 1.0)
    }
}

/// Sample mean/variance of a pooled set plus a two-sided Kolmogorov-Smirnov
/// test against the normal law with those fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of the mean.
    pub mean_stderr: f64,
    /// Standard error of the variance under normality, `var * sqrt(2/(n-1))`.
    pub variance_stderr: f64,
    pub ks_statistic: f64,
    /// Asymptotic KS p-value with Stephens' finite-n correction. Estimating
    /// the parameters from the same data makes it conservative.
    pub p_value: f64,
}

pub fn gaussian_fit(xs: &[f64]) -> Result<GaussianFit> {
    if xs.len() < 3 {
        return Err(Error::invalid(format!(
            "gaussian fit needs at least 3 samples, got {}",
            xs.len()
        )));
    }
    let v = sorted(xs);
    let n = v.len();
    let nf = n as f64;
    let mu = v.iter().sum::<f64>() / nf;
    let var = v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0);
    let std = var.sqrt();
    let mut d: f64 = 0.0;
    if std > 0.0 {
        for (i, &x) in v.iter().enumerate() {
            let f = normal_cdf(x, mu, std);
            d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
        }
    } else {
        d = 1.0;
    }
    let sq = nf.sqrt();
    let p_value = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
    Ok(GaussianFit {
        n,
        mean: mu,
        variance: var,
        mean_stderr: (var / nf).sqrt(),
        variance_stderr: var * (2.0 / (nf - 1.0)).sqrt(),
        ks_statistic: d,
        p_value,
    })
}

fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] * (1.0 - frac) + v[hi] * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Histogram with the Freedman-Diaconis bin width `2 IQR n^{-1/3}`.
pub fn freedman_diaconis(xs: &[f64]) -> Histogram {
    if xs.is_empty() {
        return Histogram {
            edges: vec![0.0, 0.0],
            counts: vec![0],
        };
    }
    let v = sorted(xs);
    let lo = v[0];
    let hi = v[v.len() - 1];
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let width = 2.0 * iqr / (v.len() as f64).cbrt();
    let bins = if width > 0.0 && hi > lo {
        (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
    } else {
        1
    };
    let step = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|k| lo + step * k as f64).collect();
    let mut counts = vec![0usize; bins];
    for &x in &v {
        let k = (((x - lo) / step) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

/// Least-squares line through `(log10 D, log10 variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Negative for variances that decay with `D`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl SlopeFit {
    pub fn magnitude(&self) -> f64 {
        self.slope.abs()
    }
}

pub fn slope_fit(points: &[(usize, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(d, v)) = points.iter().find(|&&(d, v)| !(v > 0.0) || d == 0) {
        return Err(Error::invalid(format!(
            "slope fit needs positive dimension and variance, got ({d}, {v})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(d, _)| (d as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| v.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs at least two distinct dimensions"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    #[test]
    fn slope_of_inverse_dimension() {
        let pts: Vec<(usize, f64)> = [70, 252, 924].iter().map(|&d| (d, 0.3 / d as f64)).collect();
        let fit = slope_fit(&pts).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.magnitude() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_constant() {
        let fit = slope_fit(&[(70, 0.2), (252, 0.2), (924, 0.2)]).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn slope_rejects_bad_input() {
        assert!(slope_fit(&[(70, 0.2), (252, 0.0), (924, 0.2)]).is_err());
        assert!(slope_fit(&[(70, 0.2), (252, -1.0), (924, 0.2)]).is_err());
        assert!(slope_fit(&[(70, 0.2), (252, 0.1)]).is_err());
    }

    #[test]
    fn kolmogorov_reference_values() {
        // P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 5e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-3);
        // both branches agree where they meet
        assert!((kolmogorov_sf(1.1799999) - kolmogorov_sf(1.18)).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_injected_gaussian() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let law = Normal::new(0.3, 0.05).unwrap();
        let xs: Vec<f64> = (0..5000).map(|_| law.sample(&mut rng)).collect();
        let fit = gaussian_fit(&xs).unwrap();
        assert!((fit.mean - 0.3).abs() < 3.0 * fit.mean_stderr);
        assert!((fit.variance - 0.0025).abs() < 3.0 * fit.variance_stderr);
        assert!(fit.p_value > 0.01, "{fit:?}");
    }

    #[test]
    fn uniform_samples_fail_normality() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let law = Uniform::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..20000).map(|_| law.sample(&mut rng)).collect();
        assert!(gaussian_fit(&xs).unwrap().p_value < 1e-6);
    }

    #[test]
    fn histogram_counts_everything() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let h = freedman_diaconis(&xs);
        assert_eq!(h.counts.iter().sum::<usize>(), 1000);
        assert_eq!(h.edges.len(), h.counts.len() + 1);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reductions_are_order_insensitive() {
        let xs = vec![1e16, 1.0, -1e16, 3.0, 0.5];
        let mut ys = xs.clone();
        ys.reverse();
        assert_eq!(mean(&xs).to_bits(), mean(&ys).to_bits());
        assert_eq!(sample_variance(&xs).to_bits(), sample_variance(&ys).to_bits());
    }
}
