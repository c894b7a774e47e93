//! Goodness-of-fit tests and log-log regression.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Smallest expected count allowed in a chi-square cell before pooling.
pub const MIN_EXPECTED: f64 = 5.0;

fn chi_square_p(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    ChiSquared::new(df as f64)
        .map(|d| d.sf(stat))
        .unwrap_or(0.0)
}

/// Groups cells (given by expected weight, ascending) so each group reaches
/// `min_weight`. Returns a group id per input index.
fn pool(weights: &[f64], min_weight: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
    let mut group = vec![0; weights.len()];
    let mut gid = 0;
    let mut acc = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        group[i] = gid;
        acc += weights[i];
        let remaining: f64 = order[pos + 1..].iter().map(|&j| weights[j]).sum();
        if acc >= min_weight && remaining >= min_weight {
            gid += 1;
            acc = 0.0;
        }
    }
    group
}

/// Pearson goodness of fit of observed counts against exact probabilities.
/// Observations outside the support give p = 0.
pub fn chi_square_gof<K: Ord + Clone>(
    observed: &BTreeMap<K, u64>,
    probs: &BTreeMap<K, f64>,
) -> Result<TestOutcome> {
    let n: u64 = observed.values().sum();
    if n == 0 || probs.is_empty() {
        return Err(invalid("empty sample or law"));
    }
    if observed
        .keys()
        .any(|k| probs.get(k).map_or(true, |&p| p <= 0.0))
    {
        return Ok(TestOutcome {
            statistic: f64::INFINITY,
            df: probs.len().saturating_sub(1),
            p_value: 0.0,
        });
    }
    let keys: Vec<&K> = probs.keys().collect();
    let expected: Vec<f64> = keys.iter().map(|k| probs[*k] * n as f64).collect();
    let group = pool(&expected, MIN_EXPECTED);
    let ng = group.iter().max().map_or(0, |g| g + 1);
    let mut e = vec![0.0; ng];
    let mut o = vec![0.0; ng];
    for (i, k) in keys.iter().enumerate() {
        e[group[i]] += expected[i];
        o[group[i]] += *observed.get(*k).unwrap_or(&0) as f64;
    }
    let stat: f64 = (0..ng).map(|g| (o[g] - e[g]).powi(2) / e[g]).sum();
    let df = ng.saturating_sub(1);
    Ok(TestOutcome {
        statistic: stat,
        df,
        p_value: chi_square_p(stat, df),
    })
}

/// Chi-square test of homogeneity between two samples of a discrete law.
pub fn chi_square_two_sample<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
) -> Result<TestOutcome> {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    if na == 0 || nb == 0 {
        return Err(invalid("empty sample"));
    }
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let fa = na as f64 / (na + nb) as f64;
    let fb = 1.0 - fa;
    let pooled: Vec<f64> = keys
        .iter()
        .map(|k| (a.get(*k).unwrap_or(&0) + b.get(*k).unwrap_or(&0)) as f64)
        .collect();
    let weights: Vec<f64> = pooled.iter().map(|&c| c * fa.min(fb)).collect();
    let group = pool(&weights, MIN_EXPECTED);
    let ng = group.iter().max().map_or(0, |g| g + 1);
    let mut oa = vec![0.0; ng];
    let mut ob = vec![0.0; ng];
    for (i, k) in keys.iter().enumerate() {
        oa[group[i]] += *a.get(*k).unwrap_or(&0) as f64;
        ob[group[i]] += *b.get(*k).unwrap_or(&0) as f64;
    }
    let mut stat = 0.0;
    for g in 0..ng {
        let tot = oa[g] + ob[g];
        let (ea, eb) = (tot * fa, tot * fb);
        stat += (oa[g] - ea).powi(2) / ea + (ob[g] - eb).powi(2) / eb;
    }
    let df = ng.saturating_sub(1);
    Ok(TestOutcome {
        statistic: stat,
        df,
        p_value: chi_square_p(stat, df),
    })
}

/// Asymptotic Kolmogorov tail `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<TestOutcome> {
    if sample.is_empty() {
        return Err(invalid("empty sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(TestOutcome {
        statistic: d,
        df: 0,
        p_value: ks_p(d, n),
    })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("empty sample"));
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    Ok(TestOutcome {
        statistic: d,
        df: 0,
        p_value: ks_p(d, ne),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(invalid("need at least two paired points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("x values are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_stderr = if n > 2 {
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        r_squared: if syy > 0.0 { 1.0 - rss / syy } else { 1.0 },
    })
}

/// Slope of `ln y` against `ln x`.
pub fn exponent_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(invalid("log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Least squares `y = a + b1 x1 + b2 x2`; returns `(a, b1, b2)`.
pub fn plane_fit(x1: &[f64], x2: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = y.len();
    if n < 3 || x1.len() != n || x2.len() != n {
        return Err(invalid("need at least three points"));
    }
    let nf = n as f64;
    let m1 = x1.iter().sum::<f64>() / nf;
    let m2 = x2.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b, c) = (x1[i] - m1, x2[i] - m2, y[i] - my);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * c;
        s2y += b * c;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return Err(invalid("regressors are collinear"));
    }
    let b1 = (s1y * s22 - s2y * s12) / det;
    let b2 = (s2y * s11 - s1y * s12) / det;
    Ok((my - b1 * m1 - b2 * m2, b1, b2))
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Tallies a sample into counts.
pub fn tally<K: Ord, I: IntoIterator<Item = K>>(items: I) -> BTreeMap<K, u64> {
    let mut m = BTreeMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn pooling_reaches_minimum() {
        let w = [0.5, 1.0, 2.0, 10.0, 30.0, 0.2];
        let g = pool(&w, 5.0);
        let ng = g.iter().max().unwrap() + 1;
        for gid in 0..ng {
            let s: f64 = (0..w.len()).filter(|&i| g[i] == gid).map(|i| w[i]).sum();
            assert!(s >= 5.0, "group {gid} weight {s}");
        }
    }

    #[test]
    fn fair_die_passes() {
        let mut rng = RngStream::new(1, 0);
        let obs = tally((0..60_000).map(|_| rng.gen_range(0..6u32)));
        let probs: BTreeMap<u32, f64> = (0..6).map(|k| (k, 1.0 / 6.0)).collect();
        let r = chi_square_gof(&obs, &probs).unwrap();
        assert_eq!(r.df, 5);
        assert!(r.p_value > 0.001);
    }

    #[test]
    fn biased_die_fails() {
        let mut rng = RngStream::new(2, 0);
        let obs = tally((0..60_000).map(|_| rng.gen_range(0..6u32).min(rng.gen_range(0..6u32))));
        let probs: BTreeMap<u32, f64> = (0..6).map(|k| (k, 1.0 / 6.0)).collect();
        assert!(chi_square_gof(&obs, &probs).unwrap().p_value < 1e-6);
    }

    #[test]
    fn outside_support_is_rejected() {
        let obs = tally([1u32, 2, 7]);
        let probs: BTreeMap<u32, f64> = [(1, 0.5), (2, 0.5)].into_iter().collect();
        assert_eq!(chi_square_gof(&obs, &probs).unwrap().p_value, 0.0);
    }

    #[test]
    fn two_sample_same_law() {
        let mut rng = RngStream::new(3, 0);
        let a = tally((0..20_000).map(|_| rng.gen_range(0..10u32)));
        let b = tally((0..30_000).map(|_| rng.gen_range(0..10u32)));
        assert!(chi_square_two_sample(&a, &b).unwrap().p_value > 0.001);
    }

    #[test]
    fn ks_uniform() {
        let mut rng = RngStream::new(4, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>()).collect();
        let r = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.statistic < 0.015 && r.p_value > 0.001);
        let ys: Vec<f64> = (0..20_000).map(|_| rng.gen::<f64>().powi(2)).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.0098.
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn exact_power_law() {
        let xs = [2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.75)).collect();
        let f = exponent_fit(&xs, &ys).unwrap();
        assert!((f.slope - 0.75).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-10);
        let x1 = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let x2 = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let y: Vec<f64> = (0..6).map(|i| 0.5 + 2.0 * x1[i] - 0.7 * x2[i]).collect();
        let (a, b1, b2) = plane_fit(&x1, &x2, &y).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b1 - 2.0).abs() < 1e-12 && (b2 + 0.7).abs() < 1e-12);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
