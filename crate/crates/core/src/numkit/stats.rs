use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Combined sample size at or below which Mann–Whitney p-values are exact.
pub const EXACT_MW_LIMIT: usize = 12;

/// 1-based ranks with ties replaced by the mean of the ranks they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first group.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Mann–Whitney U test of `a` against `b`, two-sided.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("mann_whitney_u needs two non-empty groups"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("mann_whitney_u input".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let u = ranks[..n1].iter().sum::<f64>() - offset;
    let mean = (n1 * n2) as f64 / 2.0;
    let n = n1 + n2;

    if n <= EXACT_MW_LIMIT {
        // every assignment of the pooled midranks to group a is equally likely under H0
        let observed = (u - mean).abs();
        let (mut extreme, mut total) = (0u64, 0u64);
        for mask in 0u32..(1u32 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let r: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
            total += 1;
            if ((r - offset) - mean).abs() >= observed - 1e-9 {
                extreme += 1;
            }
        }
        return Ok(MannWhitney {
            u,
            p: (extreme as f64 / total as f64).min(1.0),
            exact: true,
        });
    }

    let mut ties = 0.0;
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let nf = n as f64;
    let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(MannWhitney { u, p, exact: false })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!("pearson: {} vs {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::degenerate("zero variance in correlation input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of midranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape(format!("spearman_rho: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::invalid("spearman_rho needs at least 3 points"));
    }
    pearson(&midranks(x), &midranks(y))
        .map_err(|_| Error::degenerate("spearman_rho: zero rank variance"))
}

/// Spearman ρ with a two-sided p-value from the t approximation
/// `t = ρ·sqrt((n-2)/(1-ρ²))` on n-2 degrees of freedom.
pub fn spearman_test(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let rho = spearman_rho(x, y)?;
    let df = (x.len() - 2) as f64;
    if rho.abs() >= 1.0 {
        return Ok((rho, 0.0));
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    Ok((rho, (2.0 * (1.0 - dist.cdf(t.abs()))).min(1.0)))
}

/// Area under the ROC curve: probability that a random positive scores above
/// a random negative, ties credited one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "roc_auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(s, _)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::degenerate("roc_auc needs both classes"));
    }
    let pooled: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    let ranks = midranks(&pooled);
    let np = pos.len() as f64;
    let u = ranks[..pos.len()].iter().sum::<f64>() - np * (np + 1.0) / 2.0;
    Ok(u / (np * neg.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn midranks_handle_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn mwu_examples() {
        assert_eq!(mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap().u, 0.0);
        assert_eq!(mann_whitney_u(&[1.0, 3.0], &[2.0, 4.0]).unwrap().u, 1.0);
        let t = mann_whitney_u(&[5.0, 5.0], &[5.0, 5.0]).unwrap();
        assert_eq!(t.u, 2.0);
        assert_eq!(t.p, 1.0);
        assert!(t.exact);
    }

    #[test]
    fn mwu_exact_complete_separation() {
        // 3 vs 3, complete separation: 2 of the 20 assignments are as extreme
        let t = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.u, 0.0);
        assert_abs_diff_eq!(t.p, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn mwu_normal_branch() {
        let a: Vec<f64> = (0..20).map(f64::from).collect();
        let b: Vec<f64> = (0..20).map(|i| f64::from(i) + 0.5).collect();
        let t = mann_whitney_u(&a, &b).unwrap();
        assert!(!t.exact);
        assert!(t.p > 0.5);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_abs_diff_eq!(spearman_rho(&[1., 2., 3.], &[10., 20., 30.]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spearman_rho(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spearman_rho(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(), 0.8, epsilon = 1e-12);
        assert!(spearman_rho(&[1., 1., 1.], &[1., 2., 3.]).is_err());
        assert!(spearman_rho(&[1., 2.], &[1., 2.]).is_err());
        assert!(spearman_rho(&[1., 2., 3.], &[1., 2.]).is_err());
    }

    #[test]
    fn spearman_p_values_match_published_pairs() {
        // n = 7 model rows; t-approximation p-values
        let p = |rho: f64| {
            let df = 5.0;
            let t = rho * (df / (1.0 - rho * rho)).sqrt();
            2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t))
        };
        assert_abs_diff_eq!(p(0.847), 0.016, epsilon = 0.0015);
        assert_abs_diff_eq!(p(0.198), 0.670, epsilon = 0.0015);
        assert_abs_diff_eq!(p(0.464), 0.294, epsilon = 0.0015);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.8, 0.6, 0.4, 0.2], &[true, false, true, false]).unwrap(), 0.75);
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
    }
}
