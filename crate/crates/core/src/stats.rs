//! Summary statistics and test helpers used by the experiment runners.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, Poisson, Discrete, DiscreteCDF};

use crate::rng::RandomStream;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `observed` counts against `expected` counts.
/// Adjacent cells are merged from the right until each expects at least 5.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], fitted_params: usize) -> ChiSquare {
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob;
        e += ex;
        if e >= 5.0 {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1 + fitted_params).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    ChiSquare { statistic, dof, p_value }
}

/// Goodness of fit of integer samples to Poisson(`mean`).
pub fn poisson_gof(samples: &[u64], mean: f64) -> ChiSquare {
    let pois = Poisson::new(mean.max(1e-12)).expect("positive mean");
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let n = samples.len() as f64;
    let mut observed = vec![0.0; max + 2];
    for &s in samples {
        observed[s as usize] += 1.0;
    }
    let mut expected: Vec<f64> = (0..=max).map(|k| n * pois.pmf(k as u64)).collect();
    expected.push(n * (1.0 - pois.cdf(max as u64)));
    chi_square_gof(&observed, &expected, 0)
}

/// Goodness of fit of positive integer samples to Geometric(`alpha`) on `{1, 2, ...}`.
pub fn geometric_gof(samples: &[u64], alpha: f64) -> ChiSquare {
    let max = samples.iter().copied().max().unwrap_or(1).max(1) as usize;
    let n = samples.len() as f64;
    let mut observed = vec![0.0; max + 1];
    for &s in samples {
        observed[s as usize - 1] += 1.0;
    }
    let mut expected: Vec<f64> = (1..=max)
        .map(|k| n * alpha * (1.0 - alpha).powi(k as i32 - 1))
        .collect();
    expected.push(n * (1.0 - alpha).powi(max as i32));
    chi_square_gof(&observed, &expected, 0)
}

/// Two-sample chi-square homogeneity test on integer samples.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> ChiSquare {
    let max = a.iter().chain(b).copied().max().unwrap_or(0) as usize;
    let mut ca = vec![0.0; max + 1];
    let mut cb = vec![0.0; max + 1];
    for &x in a {
        ca[x as usize] += 1.0;
    }
    for &x in b {
        cb[x as usize] += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    // Pool sparse categories until each pooled cell has at least 10 samples.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for k in 0..=max {
        x += ca[k];
        y += cb[k];
        if x + y >= 10.0 {
            cells.push((x, y));
            x = 0.0;
            y = 0.0;
        }
    }
    if x + y > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += x;
                last.1 += y;
            }
            None => cells.push((x, y)),
        }
    }
    let n = na + nb;
    let mut statistic = 0.0;
    for &(x, y) in &cells {
        let tot = x + y;
        let (ex, ey) = (tot * na / n, tot * nb / n);
        statistic += (x - ex).powi(2) / ex + (y - ey).powi(2) / ey;
    }
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic);
    ChiSquare { statistic, dof, p_value }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Percentile bootstrap interval for the mean of `xs`.
pub fn bootstrap_mean_ci(xs: &[f64], resamples: usize, level: f64, stream: &RandomStream) -> (f64, f64) {
    let mut rng = stream.clone();
    let n = xs.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| xs[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let lo = ((1.0 - level) / 2.0 * resamples as f64).floor() as usize;
    let hi = (((1.0 + level) / 2.0 * resamples as f64).ceil() as usize).min(resamples) - 1;
    (means[lo], means[hi])
}
