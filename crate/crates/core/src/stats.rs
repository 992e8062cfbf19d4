//! Small descriptive statistics shared by refinement and evaluation.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Quantile with linear interpolation between order statistics
/// (position `q * (n - 1)` in the sorted sample). `None` for an empty sample.
pub fn quantile_linear(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Option<f64> {
    quantile_linear(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Half-width of the two-sided confidence interval for the mean using the
/// t distribution with n - 1 degrees of freedom.
pub fn t_confidence_half_width(values: &[f64], level: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let sd = sample_std(values);
    if sd == 0.0 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0);
    t * sd / (n as f64).sqrt()
}
