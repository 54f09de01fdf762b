//! Sample statistics used to judge the experiments: moments, Kolmogorov
//! distance to the standard normal, log-linear fits, jackknife errors and a
//! chi-square goodness-of-fit test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Smallest sample accepted by [`ks_statistic`].
pub const KS_MIN_SAMPLES: usize = 8;

/// Default floor below which [`exp_fit`] drops points.
pub const FIT_FLOOR: f64 = 1e-12;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; 0 for fewer than two points.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Centers by the sample mean and scales by the sample standard deviation.
pub fn standardize(xs: &[f64]) -> Result<Vec<f64>> {
    let sd = variance(xs).sqrt();
    let m = mean(xs);
    // identical samples leave only rounding noise in the variance
    if !(sd > 16.0 * f64::EPSILON * m.abs().max(1.0)) || !sd.is_finite() {
        return Err(Error::Degenerate("sample variance is zero".into()));
    }
    Ok(xs.iter().map(|x| (x - m) / sd).collect())
}

/// `sup_s |F_n(s) - Phi(s)|` for the samples as given, evaluated on both
/// sides of every step.
pub fn ks_distance_to_normal(xs: &[f64]) -> Result<f64> {
    if xs.len() < KS_MIN_SAMPLES {
        return Err(Error::validation("samples", format!("need at least {KS_MIN_SAMPLES} samples")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("samples", "non-finite sample"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let phi = std_normal();
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = phi.cdf(x);
            ((i + 1) as f64 / n - c).max(c - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Kolmogorov distance between the standardized samples and the standard
/// normal (Lilliefors form: mean and variance are estimated).
pub fn ks_statistic(xs: &[f64]) -> Result<f64> {
    if xs.len() < KS_MIN_SAMPLES {
        return Err(Error::validation("samples", format!("need at least {KS_MIN_SAMPLES} samples")));
    }
    ks_distance_to_normal(&standardize(xs)?)
}

/// Result of a least-squares fit of `log value = intercept + slope * R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Points above the floor that entered the fit.
    pub points: usize,
}

/// Ordinary least squares on `(R, log value)`, skipping values at or below
/// `floor`.
pub fn exp_fit(table: &[(f64, f64)], floor: f64) -> Result<ExpFit> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|(r, v)| r.is_finite() && v.is_finite() && *v > floor)
        .map(|&(r, v)| (r, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "exp_fit needs 3 points above {floor:e}, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("exp_fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(ExpFit {
        slope,
        intercept,
        r2,
        points: pts.len(),
    })
}

/// Sample variance with its jackknife standard error.
pub fn jackknife_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 3 {
        return (variance(xs), 0.0);
    }
    let nf = n as f64;
    let m = mean(xs);
    // centered sums keep the leave-one-out updates stable
    let s2: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let loo: Vec<f64> = xs
        .iter()
        .map(|x| {
            let d = x - m;
            let m_i = -d / (nf - 1.0);
            let s2_i = s2 - d * d - (nf - 1.0) * m_i * m_i;
            s2_i / (nf - 2.0)
        })
        .collect();
    let lm = mean(&loo);
    let jk = (nf - 1.0) / nf * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>();
    (s2 / (nf - 1.0), jk.sqrt())
}

/// Pearson chi-square test of observed counts against cell probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Cells with zero expected probability must have zero counts; they are
/// dropped from the statistic.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() {
        return Err(Error::validation("probs", "length differs from observed"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::Degenerate("no observations".into()));
    }
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probs) {
        if p <= 0.0 {
            if o > 0 {
                return Err(Error::CheckFailed("count in a zero-probability cell".into()));
            }
            continue;
        }
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return Err(Error::Degenerate("chi-square needs two cells".into()));
    }
    let dof = cells - 1;
    let law = ChiSquared::new(dof as f64).map_err(|e| Error::Degenerate(e.to_string()))?;
    Ok(ChiSquareTest {
        statistic: stat,
        dof,
        p_value: 1.0 - law.cdf(stat),
    })
}

/// `values[k+1] <= values[k] + z * sqrt(se_k^2 + se_{k+1}^2)` for every
/// consecutive pair.
pub fn non_increasing_within(values: &[f64], stderrs: &[f64], z: f64) -> bool {
    values
        .windows(2)
        .zip(stderrs.windows(2))
        .all(|(v, s)| v[1] <= v[0] + z * s[0].hypot(s[1]))
}

/// Every consecutive step goes down by a strictly positive amount.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|v| v[1] < v[0])
}

/// Total-variation distance between two distributions on the same cells.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Integrated autocorrelation time by batch means:
/// `batch_len * Var(batch means) / Var(series)`.
pub fn batch_means_tau(series: &[f64], batches: usize) -> Option<f64> {
    let batches = batches.max(2);
    let len = series.len() / batches;
    if len < 2 {
        return None;
    }
    let var = variance(series);
    if var == 0.0 {
        return Some(1.0);
    }
    let means: Vec<f64> = series.chunks_exact(len).take(batches).map(mean).collect();
    Some((len as f64 * variance(&means) / var).max(1.0))
}

/// `Phi^{-1}(p)`.
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ks_of_quantiles_is_half_step() {
        for n in [8, 50, 1000] {
            let xs: Vec<f64> = (1..=n).map(|i| normal_quantile((i as f64 - 0.5) / n as f64)).collect();
            let d = ks_distance_to_normal(&xs).unwrap();
            assert!((d - 0.5 / n as f64).abs() < 1e-9, "{n}: {d}");
            // the standardized form is close to but not exactly the same
            assert!(ks_statistic(&xs).unwrap() < 1.0 / n as f64 + 0.01);
        }
    }

    #[test]
    fn ks_rejects_degenerate_input() {
        assert!(matches!(ks_statistic(&[3.0; 20]), Err(Error::Degenerate(_))));
        assert!(ks_statistic(&[1.0, 2.0]).unwrap_err().is_validation());
    }

    #[test]
    fn ks_on_true_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(ks_distance_to_normal(&xs).unwrap() < 0.01);
        assert!(ks_statistic(&xs).unwrap() < 0.01);
    }

    #[test]
    fn exp_fit_exact_and_noisy() {
        let table: Vec<(f64, f64)> = (1..=6).map(|r| (r as f64, 3.0 * (-0.7 * r as f64).exp())).collect();
        let fit = exp_fit(&table, FIT_FLOOR).unwrap();
        assert!((fit.slope + 0.7).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noisy: Vec<(f64, f64)> = (1..=8)
            .map(|r| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (r as f64, (-(r as f64)).exp() * (1.0 + 0.1 * z))
            })
            .collect();
        let fit = exp_fit(&noisy, FIT_FLOOR).unwrap();
        assert!((-1.2..=-0.8).contains(&fit.slope));
        assert!(fit.r2 > 0.9);
    }

    #[test]
    fn exp_fit_floor() {
        let table = [(1.0, 1e-13), (2.0, 0.0), (3.0, 1e-20), (4.0, 0.5)];
        assert!(matches!(exp_fit(&table, FIT_FLOOR), Err(Error::Degenerate(_))));
    }

    #[test]
    fn chi_square_detects_bias() {
        let fair = chi_square_gof(&[5020, 4980], &[0.5, 0.5]).unwrap();
        assert!(fair.passes(0.01));
        let biased = chi_square_gof(&[5500, 4500], &[0.5, 0.5]).unwrap();
        assert!(!biased.passes(0.01));
        assert!(chi_square_gof(&[1, 1], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn jackknife_matches_normal_theory() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (v, se) = jackknife_variance(&xs);
        assert!((v - 1.0).abs() < 0.1);
        // Var(s^2) = 2 sigma^4 / (n - 1) for normal data
        let expect = (2.0 / 3999.0f64).sqrt();
        assert!((se / expect - 1.0).abs() < 0.2, "{se} vs {expect}");
    }

    #[test]
    fn decreasing_helpers() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing(&[3.0, 3.0]));
        assert!(non_increasing_within(&[1.0, 1.05], &[0.03, 0.03], 2.0));
        assert!(!non_increasing_within(&[1.0, 1.2], &[0.03, 0.03], 2.0));
    }

    #[test]
    fn batch_means_on_iid_is_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let tau = batch_means_tau(&xs, 20).unwrap();
        assert!(tau < 3.0);
    }

    proptest! {
        #[test]
        fn ks_is_a_distance(xs in proptest::collection::vec(-10.0f64..10.0, 8..60)) {
            if let Ok(d) = ks_statistic(&xs) {
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }

        #[test]
        fn ks_invariant_under_affine_maps(xs in proptest::collection::vec(-5.0f64..5.0, 8..40), a in 0.1f64..10.0, b in -5.0f64..5.0) {
            if let (Ok(d1), Ok(d2)) = (ks_statistic(&xs), ks_statistic(&xs.iter().map(|x| a * x + b).collect::<Vec<_>>())) {
                prop_assert!((d1 - d2).abs() < 1e-9);
            }
        }

        #[test]
        fn variance_is_nonnegative(xs in proptest::collection::vec(-1e3f64..1e3, 0..50)) {
            prop_assert!(variance(&xs) >= 0.0);
            let (v, se) = jackknife_variance(&xs);
            prop_assert!(v >= 0.0 && se >= 0.0);
        }
    }
}
