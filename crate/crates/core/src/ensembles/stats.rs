//! Kolmogorov–Smirnov statistics and autocorrelation estimates.

/// Asymptotic KS coefficient `c(α) = sqrt(−ln(α/2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt()
}

/// Two-sample critical value `c(α) sqrt((n + m) / (n m))`.
pub fn ks_critical_two_sample(alpha: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt()
}

/// One-sample critical value `c(α) / sqrt(n)`.
pub fn ks_critical_one_sample(alpha: f64, n: usize) -> f64 {
    ks_coefficient(alpha) / (n as f64).sqrt()
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Two-sample statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// One-sample statistic against the uniform law on [0, 1).
pub fn ks_uniform(a: &[f64]) -> f64 {
    let s = sorted(a);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(k, &x)| {
            let x = x.clamp(0.0, 1.0);
            (x - k as f64 / n).max((k + 1) as f64 / n - x)
        })
        .fold(0.0, f64::max)
}

/// Integrated autocorrelation time with Sokal's self-consistent window
/// (`W ≥ 5 τ(W)`). Returns 1 for uncorrelated or constant series.
pub fn integrated_autocorrelation(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 1.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let c = series[..n - lag]
            .iter()
            .zip(&series[lag..])
            .map(|(a, b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / (n as f64 * var);
        tau += 2.0 * c;
        if lag as f64 >= 5.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_values() {
        assert!((ks_coefficient(0.05) - 1.358_1).abs() < 1e-4);
        assert!((ks_coefficient(0.01) - 1.627_6).abs() < 1e-4);
        assert!((ks_critical_two_sample(0.01, 2000, 2000) - 0.051_47).abs() < 1e-4);
    }

    #[test]
    fn two_sample_statistic() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        // brute force over all split points
        let a = [0.1, 0.5, 0.5, 0.9, 0.3];
        let b = [0.2, 0.5, 0.7];
        let mut want: f64 = 0.0;
        for &x in a.iter().chain(&b) {
            let fa = a.iter().filter(|&&v| v <= x).count() as f64 / a.len() as f64;
            let fb = b.iter().filter(|&&v| v <= x).count() as f64 / b.len() as f64;
            want = want.max((fa - fb).abs());
        }
        assert!((ks_two_sample(&a, &b) - want).abs() < 1e-15);
    }

    #[test]
    fn uniform_statistic() {
        let grid: Vec<f64> = (0..100).map(|k| (k as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&grid) - 0.005).abs() < 1e-12);
        assert!((ks_uniform(&[0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn autocorrelation_of_ar1() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let phi: f64 = 0.8;
        let mut x = 0.0;
        let s: Vec<f64> = (0..200_000)
            .map(|_| {
                x = phi * x + rng.random::<f64>() - 0.5;
                x
            })
            .collect();
        let want = (1.0 + phi) / (1.0 - phi);
        let got = integrated_autocorrelation(&s);
        assert!((got - want).abs() < 0.1 * want, "{got} vs {want}");
        let white: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        assert!(integrated_autocorrelation(&white) < 1.2);
    }
}
