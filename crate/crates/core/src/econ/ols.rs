//! Least squares by Householder QR with heteroskedasticity-robust
//! covariance and optional absorbed group effects.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::stats::normal_p_value;
use crate::error::{Error, Result};

/// Columns whose component orthogonal to the preceding columns is smaller
/// than this fraction of their norm are treated as collinear.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SeType {
    /// White's estimator without small-sample scaling.
    #[serde(rename = "HC0")]
    Hc0,
    /// White's estimator scaled by `n / (n - p)`.
    #[default]
    #[serde(rename = "HC1")]
    Hc1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub se: Vec<f64>,
    pub p: Vec<f64>,
    /// `1 - SSR / SST` around the grand mean. With absorbed groups this is
    /// the R-squared of the equivalent dummy-variable fit.
    pub r_squared: f64,
    /// R-squared of the demeaned regression, when groups were absorbed.
    pub r_squared_within: Option<f64>,
    pub n_obs: usize,
    pub n_groups: usize,
    /// `n - p`, where `p` counts absorbed groups.
    pub df_resid: usize,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
}

impl OlsFit {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coef[i])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.se[i])
    }

    pub fn p_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.p[i])
    }
}

fn demean_by_group(v: &mut [f64], groups: &[usize], n_groups: usize) {
    let mut sum = vec![0.0; n_groups];
    let mut cnt = vec![0usize; n_groups];
    for (x, &g) in v.iter().zip(groups) {
        sum[g] += x;
        cnt[g] += 1;
    }
    for (x, &g) in v.iter_mut().zip(groups) {
        *x -= sum[g] / cnt[g] as f64;
    }
}

/// Dense relabelling of group ids to `0..G`.
pub fn group_codes<T: Ord + Clone>(labels: &[T]) -> (Vec<usize>, usize) {
    let uniq: std::collections::BTreeSet<T> = labels.iter().cloned().collect();
    let order: Vec<T> = uniq.into_iter().collect();
    let codes = labels
        .iter()
        .map(|l| order.binary_search(l).expect("label present"))
        .collect();
    (codes, order.len())
}

/// Fits `y = X b + e`. `x` is row-major with one row per observation; when
/// `groups` is given every column and `y` are demeaned within group and no
/// intercept should be included in `x`.
pub fn ols(
    y: &[f64],
    x: &[Vec<f64>],
    names: &[String],
    groups: Option<&[usize]>,
    se_type: SeType,
) -> Result<OlsFit> {
    let n = y.len();
    let k = names.len();
    if x.len() != n || x.iter().any(|r| r.len() != k) {
        return Err(Error::Internal(format!(
            "design has {} rows of width {:?}, expected {n} rows of width {k}",
            x.len(),
            x.first().map(Vec::len)
        )));
    }
    let (codes, g) = match groups {
        Some(gr) => {
            let (c, g) = group_codes(gr);
            (Some(c), g)
        }
        None => (None, 0),
    };
    let p = k + g;
    if k == 0 || n <= p {
        return Err(Error::TooFewObservations {
            n_obs: n,
            n_params: p,
        });
    }

    let mut xm = DMatrix::from_fn(n, k, |i, j| x[i][j]);
    let mut yv = DVector::from_column_slice(y);
    if let Some(c) = &codes {
        for j in 0..k {
            let mut col: Vec<f64> = xm.column(j).iter().copied().collect();
            demean_by_group(&mut col, c, g);
            xm.set_column(j, &DVector::from_vec(col));
        }
        demean_by_group(yv.as_mut_slice(), c, g);
    }

    let qr = xm.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = xm.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm {
            return Err(Error::RankDeficient {
                column: names[j].clone(),
            });
        }
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Internal("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Internal("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();

    let fitted_w = &xm * &beta;
    let resid = &yv - &fitted_w;
    let mut meat = DMatrix::zeros(k, k);
    for i in 0..n {
        let row = xm.row(i);
        let e2 = resid[i] * resid[i];
        meat += row.transpose() * row * e2;
    }
    let scale = match se_type {
        SeType::Hc0 => 1.0,
        SeType::Hc1 => n as f64 / (n - p) as f64,
    };
    let mut cov = &xtx_inv * meat * &xtx_inv * scale;
    // exact symmetry for downstream checks
    cov = (&cov + cov.transpose()) * 0.5;
    let se: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let pvals = (0..k)
        .map(|j| {
            if se[j] > 0.0 {
                normal_p_value(beta[j] / se[j])
            } else if beta[j] == 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect();

    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r2 = |ss: f64| if ss > 0.0 { (1.0 - ssr / ss).clamp(0.0, 1.0) } else { 1.0 };
    let r_squared_within = codes.as_ref().map(|_| r2(yv.iter().map(|v| v * v).sum()));
    let fitted: Vec<f64> = y.iter().zip(resid.iter()).map(|(a, e)| a - e).collect();

    Ok(OlsFit {
        names: names.to_vec(),
        coef: beta.iter().copied().collect(),
        cov,
        se,
        p: pvals,
        r_squared: r2(sst),
        r_squared_within,
        n_obs: n,
        n_groups: g,
        df_resid: n - p,
        residuals: resid.iter().copied().collect(),
        fitted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x).collect();
        let x: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
        let f = ols(&y, &x, &names(&["const", "x"]), None, SeType::Hc1).unwrap();
        assert!((f.coef[0] - 1.0).abs() < 1e-12);
        assert!((f.coef[1] - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.se.iter().all(|s| *s < 1e-10));
    }

    #[test]
    fn collinear_column_named() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let err = ols(&y, &x, &names(&["const", "a", "b"]), None, SeType::Hc1).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { ref column } if column == "b"), "{err}");
    }

    #[test]
    fn group_constant_column_is_rank_deficient() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![(i % 3) as f64, (i / 5) as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let groups: Vec<usize> = (0..10).map(|i| i / 5).collect();
        let err = ols(&y, &x, &names(&["a", "city_level"]), Some(&groups), SeType::Hc1).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { ref column } if column == "city_level"));
    }

    #[test]
    fn too_few_rows() {
        let x = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        assert!(matches!(
            ols(&[1.0, 2.0], &x, &names(&["c", "x"]), None, SeType::Hc1),
            Err(Error::TooFewObservations { .. })
        ));
    }
}
