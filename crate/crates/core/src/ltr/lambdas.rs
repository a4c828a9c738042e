/// What multiplies each pair's logistic gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairWeight {
    /// `|ΔnDCG@k|` of swapping the pair in the current ranking (LambdaMART).
    DeltaNdcg,
    /// 1 for every pair: the gradient of the plain pairwise logistic cost.
    Unit,
}

pub const SIGMA: f64 = 1.0;

pub(crate) fn discount(position: usize, k: usize) -> f64 {
    if position < k {
        1.0 / ((position + 2) as f64).log2()
    } else {
        0.0
    }
}

/// Positions in the ranking by descending score; ties keep index order.
pub(crate) fn positions(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut pos = vec![0; scores.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    pos
}

/// Lambda gradients and second-order weights for one query.
///
/// For every pair with `label_i > label_j`, `ρ = 1 / (1 + exp(σ(s_i − s_j)))`
/// and `λ_i += ρ·w`, `λ_j −= ρ·w`, `h_i += ρ(1−ρ)·w`, `h_j += ρ(1−ρ)·w`.
/// Positive λ means "move this document up". Queries with uniform labels
/// get zeros. Gains are the labels themselves.
pub fn compute_lambdas(scores: &[f64], labels: &[u8], k: usize, weight: PairWeight) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let n = scores.len();
    let mut lambdas = vec![0.0; n];
    let mut hessians = vec![0.0; n];
    if labels.iter().all(|&l| l == labels[0]) {
        return (lambdas, hessians);
    }
    let pos = positions(scores);
    let mut sorted = labels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let ideal: f64 = sorted
        .iter()
        .enumerate()
        .map(|(p, &l)| f64::from(l) * discount(p, k))
        .sum();
    for i in 0..n {
        for j in 0..n {
            if labels[i] <= labels[j] {
                continue;
            }
            let w = match weight {
                PairWeight::Unit => 1.0,
                PairWeight::DeltaNdcg => {
                    if ideal == 0.0 {
                        0.0
                    } else {
                        let gain = f64::from(labels[i]) - f64::from(labels[j]);
                        (gain * (discount(pos[i], k) - discount(pos[j], k))).abs() / ideal
                    }
                }
            };
            if w == 0.0 {
                continue;
            }
            let rho = 1.0 / (1.0 + (SIGMA * (scores[i] - scores[j])).exp());
            let l = SIGMA * rho * w;
            let h = SIGMA * SIGMA * rho * (1.0 - rho) * w;
            lambdas[i] += l;
            lambdas[j] -= l;
            hessians[i] += h;
            hessians[j] += h;
        }
    }
    (lambdas, hessians)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saturated_correct_order_has_tiny_lambdas() {
        let (l, _) = compute_lambdas(&[50.0, 0.0, -1.0], &[1, 0, 0], 10, PairWeight::DeltaNdcg);
        assert!(l.iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn two_documents_equal_scores() {
        // the positive sits at position 1 by tie order: negative index 0
        let (l, h) = compute_lambdas(&[0.0, 0.0], &[0, 1], 10, PairWeight::DeltaNdcg);
        let delta = 1.0 - 1.0 / 3f64.log2();
        assert!((l[1] - 0.5 * delta).abs() < 1e-15);
        assert!((l[0] + 0.5 * delta).abs() < 1e-15);
        assert!((h[1] - 0.25 * delta).abs() < 1e-15);
        assert!(l[1] > 0.0);
    }

    #[test]
    fn uniform_labels_are_skipped() {
        let (l, h) = compute_lambdas(&[0.3, 0.1], &[1, 1], 10, PairWeight::DeltaNdcg);
        assert_eq!(l, vec![0.0, 0.0]);
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn lambdas_sum_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.random_range(2..30);
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.3))).collect();
            let (l, _) = compute_lambdas(&s, &y, 10, PairWeight::DeltaNdcg);
            assert!(l.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    fn pairwise_cost(s: &[f64], y: &[u8]) -> f64 {
        let mut c = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] > y[j] {
                    c += (1.0 + (-SIGMA * (s[i] - s[j])).exp()).ln();
                }
            }
        }
        c
    }

    #[test]
    fn graded_labels_without_zeros_still_get_gradients() {
        let (l, _) = compute_lambdas(&[0.0, 0.0, 0.0], &[1, 2, 1], 10, PairWeight::Unit);
        assert!(l[1] > 0.0 && l[0] < 0.0 && l[2] < 0.0);
        let (l, _) = compute_lambdas(&[0.0, 1.0], &[2, 1], 10, PairWeight::DeltaNdcg);
        assert!(l[0] > 0.0);
    }

    #[test]
    fn unit_weight_lambdas_are_the_negative_cost_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let s: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut y: Vec<u8> = (0..5).map(|_| u8::from(rng.random_bool(0.5))).collect();
            y[0] = 1;
            y[4] = 0;
            let (l, _) = compute_lambdas(&s, &y, 10, PairWeight::Unit);
            let eps = 1e-6;
            for d in 0..5 {
                let mut up = s.clone();
                let mut down = s.clone();
                up[d] += eps;
                down[d] -= eps;
                let fd = (pairwise_cost(&up, &y) - pairwise_cost(&down, &y)) / (2.0 * eps);
                assert!((l[d] + fd).abs() <= 1e-5, "doc {d}: {} vs {}", l[d], -fd);
            }
        }
    }
}
