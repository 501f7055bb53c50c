//! Small distribution and summary helpers.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn norm_logpdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

#[inline]
pub fn norm_pdf(z: f64) -> f64 {
    norm_logpdf(z).exp()
}

/// Log density of N(0, sd²).
#[inline]
pub fn norm_logpdf_sd(z: f64, sd: f64) -> f64 {
    let u = z / sd;
    -0.5 * u * u - LN_SQRT_2PI - sd.ln()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

pub fn norm_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

pub fn norm_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom").cdf(t)
}

/// Maps a t statistic to the normal scale, `z = Φ⁻¹(F_t(t))`, computed from
/// the lower tail so that large |t| keeps precision; clamped to ±`cap`.
pub fn t_to_z(t: f64, df: f64, cap: f64) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { 0.0 } else { cap.copysign(t) };
    }
    let lower = t_cdf(-t.abs(), df);
    let z = if lower <= 0.0 { -cap } else { norm_quantile(lower).max(-cap) };
    -z * t.signum()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// One-sample Kolmogorov–Smirnov statistic against N(0, 1).
pub fn ks_statistic_normal(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = norm_cdf(v);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS p-value with Stephens' small-sample correction.
pub fn ks_pvalue(d: f64, m: usize) -> f64 {
    let sm = (m as f64).sqrt();
    let lam = (sm + 0.12 + 0.11 / sm) * d;
    if lam < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lam * lam).exp();
        sum += if k as i64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Area under the ROC curve: `Pr(pos > neg) + ½·Pr(pos = neg)`.
pub fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&v| (v, true)).chain(neg.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // midranks over tie blocks
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += all[i..j].iter().filter(|e| e.1).count() as f64 * mid;
        i = j;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_matches_pairwise_count() {
        let pos = [0.9, 0.5, 0.5, 0.2];
        let neg = [0.5, 0.1, 0.3];
        let mut wins = 0.0;
        for p in pos {
            for n in neg {
                wins += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
        assert!((auc(&pos, &neg) - wins / 12.0).abs() < 1e-15);
        assert_eq!(auc(&[2.0, 3.0], &[0.0, 1.0]), 1.0);
        assert_eq!(auc(&[1.0], &[1.0]), 0.5);
    }

    #[test]
    fn t_to_z_tails() {
        assert!(t_to_z(0.0, 10.0, 8.2).abs() < 1e-12);
        assert_eq!(t_to_z(1e6, 5.0, 8.2), 8.2);
        assert_eq!(t_to_z(-1e6, 5.0, 8.2), -8.2);
        // large df: t ≈ z
        assert!((t_to_z(1.5, 1e7, 8.2) - 1.5).abs() < 1e-5);
        let z = t_to_z(2.0, 10.0, 8.2);
        assert!((norm_cdf(z) - t_cdf(2.0, 10.0)).abs() < 1e-10);
    }

    #[test]
    fn ks_pvalue_reference_points() {
        // Kolmogorov distribution: Q(1.628) ≈ 0.01, Q(1.358) ≈ 0.05
        let m = 1_000_000;
        assert!((ks_pvalue(1.628 / (m as f64).sqrt(), m) - 0.01).abs() < 5e-4);
        assert!((ks_pvalue(1.358 / (m as f64).sqrt(), m) - 0.05).abs() < 5e-4);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 0.5), 2.5);
        assert_eq!(quantile(&[1.0, 2.0], 1.0), 2.0);
    }
}
