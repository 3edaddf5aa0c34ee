//! Small-sample summaries used by sweeps and the acceptance checks.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

pub fn stderr(x: &[f64]) -> f64 {
    match x.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => (variance(x) / n as f64).sqrt(),
    }
}

/// Half-width of the two-sided Student-t interval for the mean at `level`.
pub fn t_half_width(x: &[f64], level: f64) -> f64 {
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive dof");
    t.inverse_cdf(0.5 + level / 2.0) * stderr(x)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[order[k]] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    pearson(&ranks(x), &ranks(y))
}

/// One-sided p-value of Welch's test for `mean(a) > mean(b)`.
pub fn welch_greater_p(a: &[f64], b: &[f64]) -> f64 {
    let (va, vb) = (variance(a) / a.len() as f64, variance(b) / b.len() as f64);
    let se2 = va + vb;
    let diff = mean(a) - mean(b);
    if se2 == 0.0 {
        return if diff > 0.0 { 0.0 } else { 1.0 };
    }
    let dof = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
    let t = StudentsT::new(0.0, 1.0, dof).expect("positive dof");
    1.0 - t.cdf(diff / se2.sqrt())
}

/// One-sided p-value of the paired test for `mean(a - b) > 0`.
pub fn paired_greater_p(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let se = stderr(&d);
    let m = mean(&d);
    if se == 0.0 {
        return if m > 0.0 { 0.0 } else { 1.0 };
    }
    let t = StudentsT::new(0.0, 1.0, (d.len() - 1) as f64).expect("positive dof");
    1.0 - t.cdf(m / se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_interval_for_two_points() {
        // t_{0.975, 1} = 12.706204736...
        let h = t_half_width(&[0.0, 2.0], 0.95);
        assert!((h - 12.706_204_736_174_7).abs() < 1e-6);
    }

    #[test]
    fn spearman_handles_ties() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]) - 0.866_025_403_784_438_6).abs() < 1e-12);
    }
}
