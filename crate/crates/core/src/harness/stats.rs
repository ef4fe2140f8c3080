use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sample chi-square homogeneity test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Bins after pooling.
    pub bins: usize,
}

/// Minimum pooled count (both samples) per bin.
pub const MIN_POOLED: u64 = 10;

/// Compares two histograms over the same ordered bins. Adjacent bins are
/// merged until each holds at least [`MIN_POOLED`] observations in total.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareResult {
    assert_eq!(a.len(), b.len(), "histograms over different bins");
    let mut pooled: Vec<(u64, u64)> = Vec::new();
    let (mut ca, mut cb) = (0u64, 0u64);
    for (&x, &y) in a.iter().zip(b) {
        ca += x;
        cb += y;
        if ca + cb >= MIN_POOLED {
            pooled.push((ca, cb));
            ca = 0;
            cb = 0;
        }
    }
    if ca + cb > 0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => pooled.push((ca, cb)),
        }
    }
    let na: u64 = pooled.iter().map(|p| p.0).sum();
    let nb: u64 = pooled.iter().map(|p| p.1).sum();
    if pooled.len() < 2 || na == 0 || nb == 0 {
        return ChiSquareResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
            bins: pooled.len(),
        };
    }
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let statistic: f64 = pooled
        .iter()
        .map(|&(x, y)| {
            let d = ka * x as f64 - kb * y as f64;
            d * d / (x + y) as f64
        })
        .sum();
    let df = pooled.len() - 1;
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    ChiSquareResult {
        statistic,
        df,
        p_value: dist.sf(statistic),
        bins: pooled.len(),
    }
}

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

pub fn ks_uniform(values: &[f64]) -> KsResult {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let nf = n as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / nf - x).max(x - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let root = nf.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf((root + 0.12 + 0.11 / root) * d),
        samples: n,
    }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        let term = (-2.0 * j * j * lambda * lambda).exp();
        sum += if j as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
