//! Summary statistics and a rank test for comparing solver campaigns.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_std(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => f64::NAN,
        1 => 0.0,
        n => {
            let m = mean(xs);
            (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
    }
}

/// One-sided Wilcoxon rank-sum (Mann-Whitney) p-value for the alternative
/// that `xs` tends to be smaller than `ys`.
///
/// The null distribution is the exact permutation distribution of the
/// midrank sum, so ties are handled without a normal approximation.
pub fn rank_sum_less(xs: &[f64], ys: &[f64]) -> f64 {
    let (n1, n) = (xs.len(), xs.len() + ys.len());
    if n1 == 0 || ys.is_empty() {
        return 1.0;
    }
    let mut pooled: Vec<(f64, bool)> = xs
        .iter()
        .map(|&x| (x, true))
        .chain(ys.iter().map(|&y| (y, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    // doubled midranks keep every rank an integer
    let mut ranks = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        ranks[i..=j].fill(i + j + 2);
        i = j + 1;
    }
    let observed: usize = (0..n).filter(|&k| pooled[k].1).map(|k| ranks[k]).sum();

    // ways[c][s]: subsets of size c with doubled rank sum s
    let total: usize = ranks.iter().sum();
    let mut ways = vec![vec![0.0f64; total + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in &ranks {
        for c in (1..=n1).rev() {
            let (lower, upper) = ways.split_at_mut(c);
            let (from, to) = (&lower[c - 1], &mut upper[0]);
            for s in (r..=total).rev() {
                to[s] += from[s - r];
            }
        }
    }
    let all: f64 = ways[n1].iter().sum();
    let at_most: f64 = ways[n1][..=observed].iter().sum();
    (at_most / all).min(1.0)
}
