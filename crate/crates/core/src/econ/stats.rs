use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// Pearson correlation; `None` for fewer than two points or a constant
/// series.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson needs paired samples");
    let (mx, my) = (mean(x)?, mean(y)?);
    if x.len() < 2 {
        return None;
    }
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sample quantile, linear interpolation between order statistics (the
/// default "type 7" rule).
pub fn quantile(x: &[f64], q: f64) -> Option<f64> {
    if x.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Two-sided p-value of a z statistic under the standard normal.
pub fn normal_p_value(z: f64) -> f64 {
    if !z.is_finite() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    let n = Normal::standard();
    2.0 * n.cdf(-z.abs())
}

/// Significance marker: `***` p<0.001, `**` p<0.01, `*` p<0.05, `+` p<0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else if p < 0.1 {
        "+"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Elasticity {
    /// `sqrt(1 + ybar^2) / ybar`.
    pub factor: f64,
    /// `factor * xbar * beta`, as a fraction (0.082 is 8.2%).
    pub elasticity: f64,
}

/// Elasticity at the means for an arsinh-transformed outcome.
pub fn elasticity_arsinh(ybar: f64, xbar: f64, beta: f64) -> Result<Elasticity> {
    if !(ybar.is_finite() && ybar > 0.0) {
        return Err(Error::Undefined(format!(
            "arsinh elasticity needs a positive outcome mean, got {ybar}"
        )));
    }
    let factor = (1.0 + ybar * ybar).sqrt() / ybar;
    Ok(Elasticity {
        factor,
        elasticity: factor * xbar * beta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub n: usize,
    pub x_mean: f64,
    pub y_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedScatter {
    pub bins: Vec<Bin>,
    /// Pearson correlation of the unbinned pairs.
    pub rho: Option<f64>,
    pub n: usize,
    pub warning: Option<String>,
}

/// Sorts pairs by `x` (ties by `y`), splits them into `n_bins` consecutive
/// groups whose sizes differ by at most one, and reports per-bin means. With
/// fewer points than bins everything lands in one bin.
pub fn binned_scatter(x: &[f64], y: &[f64], n_bins: usize) -> BinnedScatter {
    assert_eq!(x.len(), y.len(), "binned_scatter needs paired samples");
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (k, warning) = if n_bins == 0 || n < n_bins {
        (
            1.min(n),
            Some(format!("{n} points for {n_bins} bins; using a single bin")),
        )
    } else {
        (n_bins, None)
    };
    let mut bins = Vec::with_capacity(k);
    let mut start = 0;
    for b in 0..k {
        let size = n / k + usize::from(b < n % k);
        let chunk = &pairs[start..start + size];
        start += size;
        bins.push(Bin {
            n: size,
            x_mean: chunk.iter().map(|p| p.0).sum::<f64>() / size as f64,
            y_mean: chunk.iter().map(|p| p.1).sum::<f64>() / size as f64,
        });
    }
    BinnedScatter {
        bins,
        rho: pearson(x, y),
        n,
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elasticity_matches_worked_numbers() {
        let e = elasticity_arsinh(26.685, 1.023, 0.0801).unwrap();
        assert!((e.factor - 1.0007).abs() < 1e-4);
        assert!((e.elasticity * 100.0 - 8.2).abs() < 0.05);
        let e = elasticity_arsinh(26.685, 0.944, 0.0554).unwrap();
        assert!((e.elasticity * 100.0 - 5.2).abs() < 0.05);
        assert_eq!(elasticity_arsinh(3.0, 2.0, 0.0).unwrap().elasticity, 0.0);
        assert!(elasticity_arsinh(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0005), "***");
        assert_eq!(stars(0.005), "**");
        assert_eq!(stars(0.02), "*");
        assert_eq!(stars(0.07), "+");
        assert_eq!(stars(0.2), "");
        assert!((normal_p_value(1.959_963_984_540_054) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn bins_of_two() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let b = binned_scatter(&x, &x, 20);
        assert!(b.bins.iter().all(|b| b.n == 2));
        assert!(b.bins.iter().all(|b| b.x_mean == b.y_mean));
        assert!((b.rho.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uneven_bins_and_fallback() {
        let x: Vec<f64> = (0..45).map(f64::from).collect();
        let b = binned_scatter(&x, &x, 20);
        let sizes: Vec<usize> = b.bins.iter().map(|b| b.n).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 45);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let b = binned_scatter(&x[..5], &x[..5], 20);
        assert_eq!(b.bins.len(), 1);
        assert!(b.warning.is_some());
    }

    #[test]
    fn quantile_type7() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.5), Some(2.5));
        assert!((quantile(&x, 0.95).unwrap() - 3.85).abs() < 1e-12);
    }
}
