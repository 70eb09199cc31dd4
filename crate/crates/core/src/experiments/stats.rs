use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    pub median: f64,
    /// One-sample K-S statistic against a normal with the sample's mean and
    /// std. `None` when the std is zero.
    pub ks_statistic: Option<f64>,
    /// Classical K-S p-value for that statistic, with the fitted parameters
    /// treated as known.
    pub ks_p_value: Option<f64>,
}

impl AggregateStats {
    /// Statistics of a single value: std 0, no normality test.
    pub fn single(x: f64) -> Self {
        AggregateStats {
            n: 1,
            mean: x,
            std: 0.0,
            median: x,
            ks_statistic: None,
            ks_p_value: None,
        }
    }
}

pub fn aggregate(values: &[f64]) -> Result<AggregateStats, ExperimentError> {
    let n = values.len();
    if n < 2 {
        return Err(ExperimentError::InsufficientRuns(n));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // summing in sorted order keeps the result independent of run order
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let (ks_statistic, ks_p_value) = if std > 0.0 {
        let d = ks_statistic_normal(&sorted, mean, std);
        (Some(d), Some((1.0 - ks_cdf(n, d)).clamp(0.0, 1.0)))
    } else {
        (None, None)
    };
    Ok(AggregateStats {
        n,
        mean,
        std,
        median,
        ks_statistic,
        ks_p_value,
    })
}

/// `sup |F_n − Φ|` for an ascending sample.
fn ks_statistic_normal(sorted: &[f64], mean: f64, std: f64) -> f64 {
    let normal = Normal::new(mean, std).expect("positive std");
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Exact `P(D_n < d)` by the Marsaglia–Tsang–Wang matrix method.
pub fn ks_cdf(n: usize, d: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 {
        return 1.0;
    }
    let nd = n as f64 * d;
    let k = nd.floor() as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nd;
    let mut mat = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                mat[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        mat[i * m] -= h.powi(i as i32 + 1);
        mat[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        mat[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    mat[i * m + j] /= g as f64;
                }
            }
        }
    }
    let (q, mut exp) = matrix_power(&mat, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s *= i as f64 / n as f64;
        if s < 1e-140 {
            s *= 1e140;
            exp -= 140;
        }
    }
    s * 10f64.powi(exp)
}

fn matrix_multiply(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                c[i * m + j] += aik * b[k * m + j];
            }
        }
    }
    c
}

/// `a^n` with a base-10 exponent kept aside to avoid overflow.
fn matrix_power(a: &[f64], m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), 0);
    }
    let (half, e) = matrix_power(a, m, n / 2);
    let mut out = matrix_multiply(&half, &half, m);
    let mut exp = 2 * e;
    if n % 2 == 1 {
        out = matrix_multiply(a, &out, m);
    }
    if out[(m / 2) * m + m / 2] > 1e140 {
        for x in &mut out {
            *x *= 1e-140;
        }
        exp += 140;
    }
    (out, exp)
}
