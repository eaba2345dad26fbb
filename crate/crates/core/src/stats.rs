//! Small statistics used by calibration and the sweep reports, generic over
//! the float type.

use num_traits::Float;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary<F> {
    pub n: usize,
    pub mean: F,
    /// Sample standard deviation (n - 1 denominator); zero for n < 2.
    pub sd: F,
    pub min: F,
    pub max: F,
}

fn cast<F: Float>(x: f64) -> F {
    F::from(x).expect("f64 constant fits")
}

pub fn summarize<F: Float>(xs: &[F]) -> Option<Summary<F>> {
    if xs.is_empty() {
        return None;
    }
    let n = F::from(xs.len()).expect("length fits");
    let mean = xs.iter().fold(F::zero(), |a, &x| a + x) / n;
    let sd = if xs.len() < 2 {
        F::zero()
    } else {
        let ss = xs.iter().fold(F::zero(), |a, &x| a + (x - mean) * (x - mean));
        (ss / (n - F::one())).sqrt()
    };
    let min = xs.iter().copied().fold(F::infinity(), F::min);
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    Some(Summary {
        n: xs.len(),
        mean,
        sd,
        min,
        max,
    })
}

/// Histogram overlapping coefficient: the shared area of the two normalised
/// histograms over a common range split into `bins` equal cells.
pub fn overlap_coefficient<F: Float>(a: &[F], b: &[F], bins: usize) -> F {
    if a.is_empty() || b.is_empty() || bins == 0 {
        return F::zero();
    }
    let lo = a.iter().chain(b).copied().fold(F::infinity(), F::min);
    let hi = a.iter().chain(b).copied().fold(F::neg_infinity(), F::max);
    if hi <= lo {
        return F::one();
    }
    let width = (hi - lo) / F::from(bins).expect("bins fit");
    let hist = |xs: &[F]| {
        let mut h = vec![0usize; bins];
        for &x in xs {
            let i = ((x - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
            h[i] += 1;
        }
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    let (na, nb) = (
        F::from(a.len()).expect("fits"),
        F::from(b.len()).expect("fits"),
    );
    ha.iter()
        .zip(&hb)
        .fold(F::zero(), |acc, (&x, &y)| {
            let fx = F::from(x).expect("fits") / na;
            let fy = F::from(y).expect("fits") / nb;
            acc + fx.min(fy)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdFit<F> {
    pub threshold: F,
    pub hit: Summary<F>,
    pub miss: Summary<F>,
    pub overlap: F,
    /// Every hit sample is below every miss sample.
    pub disjoint: bool,
    /// Means differ by more than the pooled standard deviation.
    pub separated: bool,
}

/// Threshold between "fast" (hit) and "slow" (miss) samples: the middle of
/// the empty gap when the samples do not overlap, otherwise the midpoint of
/// the two means.
pub fn fit_threshold<F: Float>(hits: &[F], misses: &[F], bins: usize) -> Option<ThresholdFit<F>> {
    let hit = summarize(hits)?;
    let miss = summarize(misses)?;
    let half = cast::<F>(0.5);
    let disjoint = hit.max < miss.min;
    let threshold = if disjoint {
        (hit.max + miss.min) * half
    } else {
        (hit.mean + miss.mean) * half
    };
    let pooled = ((hit.sd * hit.sd + miss.sd * miss.sd) * half).sqrt();
    let separated = (miss.mean - hit.mean).abs() > pooled;
    Some(ThresholdFit {
        threshold,
        hit,
        miss,
        overlap: overlap_coefficient(hits, misses, bins),
        disjoint,
        separated,
    })
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval<F: Float>(k: u64, n: u64, z: F) -> (F, F) {
    if n == 0 {
        return (F::zero(), F::one());
    }
    let nf = F::from(n).expect("fits");
    let p = F::from(k).expect("fits") / nf;
    let z2 = z * z;
    let two = cast::<F>(2.0);
    let four = cast::<F>(4.0);
    let denom = F::one() + z2 / nf;
    let centre = (p + z2 / (two * nf)) / denom;
    let half = z * ((p * (F::one() - p) + z2 / (four * nf)) / nf).sqrt() / denom;
    ((centre - half).max(F::zero()), (centre + half).min(F::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = summarize(&[1.0f64, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - 1.290_994_448_7).abs() < 1e-9);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        assert!(summarize::<f64>(&[]).is_none());
        let s32 = summarize(&[2.0f32]).unwrap();
        assert_eq!(s32.sd, 0.0);
    }

    #[test]
    fn constant_samples_give_exact_midpoint() {
        let fit = fit_threshold(&[0.8f64; 10], &[1.8f64; 10], 60).unwrap();
        assert!((fit.threshold - 1.3).abs() < 1e-12);
        assert!(fit.disjoint);
        assert_eq!(fit.overlap, 0.0);
    }

    #[test]
    fn overlapping_uses_means() {
        let hits = [1.0f64, 2.0, 3.0];
        let misses = [2.5f64, 3.5, 4.5];
        let fit = fit_threshold(&hits, &misses, 3).unwrap();
        assert!(!fit.disjoint);
        assert!((fit.threshold - 2.75).abs() < 1e-12);
        assert!((fit.overlap - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_distributions_overlap_fully() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!((overlap_coefficient(&xs, &xs, 20) - 1.0).abs() < 1e-12);
        let fit = fit_threshold(&xs, &xs, 20).unwrap();
        assert!(!fit.separated);
    }

    #[test]
    fn wilson_matches_reference() {
        // 5/100 at 95%: (0.0215, 0.1118) to four places.
        let (lo, hi) = wilson_interval(5, 100, 1.959_964f64);
        assert!((lo - 0.0215).abs() < 1e-4, "{lo}");
        assert!((hi - 0.1118).abs() < 1e-4, "{hi}");
        assert_eq!(wilson_interval::<f64>(0, 0, 1.96), (0.0, 1.0));
        let (lo0, _) = wilson_interval(0, 50, 1.96f64);
        assert_eq!(lo0, 0.0);
    }
}
