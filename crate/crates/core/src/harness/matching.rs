use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub truth: Complex64,
    pub estimate: Complex64,
    pub error: f64,
}

/// Optimal injective assignment of analytic eigenvalues to estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComparison {
    /// In the order of the truth list.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_estimates: Vec<Complex64>,
    pub mean_error: f64,
    pub max_error: f64,
}

impl SpectrumComparison {
    pub fn total_error(&self) -> f64 {
        self.pairs.iter().map(|p| p.error).sum()
    }

    /// Mean of `|estimate| − |truth|` over the matched pairs.
    pub fn mean_modulus_deviation(&self) -> f64 {
        let n = self.pairs.len() as f64;
        self.pairs.iter().map(|p| p.estimate.norm() - p.truth.norm()).sum::<f64>() / n
    }
}

/// Matches every truth to a distinct estimate, minimizing the summed
/// absolute error. Inputs are put in lexicographic `(re, im)` order before
/// solving, so ties resolve the same way whatever the input order.
pub fn match_spectra(truth: &[Complex64], estimates: &[Complex64]) -> Result<SpectrumComparison> {
    if truth.is_empty() {
        return Err(Error::invalid("truth spectrum is empty"));
    }
    if estimates.len() < truth.len() {
        return Err(Error::invalid(format!(
            "{} estimates cannot cover {} true eigenvalues",
            estimates.len(),
            truth.len()
        )));
    }
    if truth.iter().chain(estimates).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("spectra contain non-finite values"));
    }
    let lex = |v: &[Complex64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].re.total_cmp(&v[b].re).then(v[a].im.total_cmp(&v[b].im)));
        idx
    };
    let ti = lex(truth);
    let ei = lex(estimates);
    let cost: Vec<Vec<f64>> = ti
        .iter()
        .map(|&t| ei.iter().map(|&e| (truth[t] - estimates[e]).norm()).collect())
        .collect();
    let assignment = hungarian(&cost);

    let mut chosen = vec![usize::MAX; truth.len()];
    for (row, &col) in assignment.iter().enumerate() {
        chosen[ti[row]] = ei[col];
    }
    let pairs: Vec<MatchedPair> = truth
        .iter()
        .zip(&chosen)
        .map(|(&t, &e)| MatchedPair { truth: t, estimate: estimates[e], error: (t - estimates[e]).norm() })
        .collect();
    let mut used = vec![false; estimates.len()];
    for &e in &chosen {
        used[e] = true;
    }
    let unmatched_estimates = estimates.iter().zip(&used).filter(|(_, &u)| !u).map(|(z, _)| *z).collect();
    let mean_error = pairs.iter().map(|p| p.error).sum::<f64>() / pairs.len() as f64;
    let max_error = pairs.iter().map(|p| p.error).fold(0.0, f64::max);
    Ok(SpectrumComparison { pairs, unmatched_estimates, mean_error, max_error })
}

/// Kuhn–Munkres with potentials for an `n × m` cost matrix, `n ≤ m`.
/// Returns the column assigned to each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn brute_force(truth: &[Complex64], est: &[Complex64]) -> f64 {
        fn go(k: usize, truth: &[Complex64], est: &[Complex64], used: &mut Vec<bool>) -> f64 {
            if k == truth.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..est.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min((truth[k] - est[j]).norm() + go(k + 1, truth, est, used));
                    used[j] = false;
                }
            }
            best
        }
        go(0, truth, est, &mut vec![false; est.len()])
    }

    #[test]
    fn permutation_is_undone() {
        let r = match_spectra(&[c(1.0, 0.0), c(0.0, 1.0)], &[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.pairs.iter().map(|p| p.error).collect::<Vec<_>>(), [0.0, 0.0]);
        assert!(r.unmatched_estimates.is_empty());
    }

    #[test]
    fn nearest_estimate_wins() {
        let r = match_spectra(&[c(1.0, 0.0)], &[c(0.9, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(r.pairs[0].estimate, c(0.9, 0.0));
        assert!((r.pairs[0].error - 0.1).abs() < 1e-15);
        assert_eq!(r.unmatched_estimates, vec![c(2.0, 0.0)]);
    }

    #[test]
    fn greedy_is_not_optimal_here() {
        // Greedy would give truth 0 its nearest estimate (0.4) and leave truth 1 far away.
        let truth = [c(0.0, 0.0), c(1.0, 0.0)];
        let est = [c(0.4, 0.0), c(-1.0, 0.0)];
        let r = match_spectra(&truth, &est).unwrap();
        assert!((r.total_error() - brute_force(&truth, &est)).abs() < 1e-12);
    }

    #[test]
    fn too_few_estimates() {
        assert!(match_spectra(&[c(0.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0)]).is_err());
        assert!(match_spectra(&[], &[c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn input_order_does_not_matter_under_ties() {
        let truth = [c(0.0, 0.0)];
        let a = match_spectra(&truth, &[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        let b = match_spectra(&truth, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(a.pairs, b.pairs);
    }

    fn points(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
        proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| c(a, b)), 1..=max)
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(truth in points(6), extra in points(3)) {
            let mut est: Vec<Complex64> = truth.iter().map(|z| z * c(0.9, 0.2) + c(0.1, -0.3)).collect();
            est.extend(extra);
            let r = match_spectra(&truth, &est).unwrap();
            prop_assert!((r.total_error() - brute_force(&truth, &est)).abs() < 1e-9);
            prop_assert_eq!(r.pairs.len(), truth.len());
            prop_assert_eq!(r.unmatched_estimates.len(), est.len() - truth.len());
        }
    }
}
