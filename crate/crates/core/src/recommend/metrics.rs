use crate::error::{Error, Result};

/// Ranking by descending score; equal scores keep ascending index order.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn check(scores: &[f64], labels: &[bool]) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("prediction scores".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::Insufficient("no positive labels to evaluate".into()));
    }
    Ok(positives)
}

/// Running sum of fractions, kept as an exact rational while it stays small
/// so that short rankings give correctly rounded results.
struct FractionSum {
    exact: Option<(u128, u128)>,
    approx: f64,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl FractionSum {
    fn new() -> Self {
        FractionSum {
            exact: Some((0, 1)),
            approx: 0.0,
        }
    }

    fn add(&mut self, p: u128, q: u128) {
        self.approx += p as f64 / q as f64;
        self.exact = self.exact.and_then(|(n, d)| {
            let num = n.checked_mul(q)?.checked_add(p.checked_mul(d)?)?;
            let den = d.checked_mul(q)?;
            let g = gcd(num, den);
            Some((num / g, den / g))
        });
    }

    /// The sum divided by `by`.
    fn divided(&self, by: u128) -> f64 {
        const EXACT: u128 = 1 << 53;
        if let Some((n, d)) = self.exact {
            if let Some(den) = d.checked_mul(by) {
                let g = gcd(n, den);
                let (n, den) = (n / g, den / g);
                if n < EXACT && den < EXACT {
                    return n as f64 / den as f64;
                }
            }
        }
        self.approx / by as f64
    }
}

/// Area under the precision-recall curve as non-interpolated average
/// precision.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let positives = check(scores, labels)?;
    let mut hits = 0u128;
    let mut sum = FractionSum::new();
    for (rank, &i) in rank_order(scores).iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum.add(hits, rank as u128 + 1);
        }
    }
    Ok(sum.divided(positives as u128))
}

/// Best F1 over all score thresholds. Tied scores fall on the same side of
/// every threshold.
pub fn max_f1(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let positives = check(scores, labels)?;
    let order = rank_order(scores);
    let mut best = 0.0f64;
    let mut tp = 0usize;
    for (pos, &i) in order.iter().enumerate() {
        if labels[i] {
            tp += 1;
        }
        let boundary = order.get(pos + 1).is_none_or(|&next| scores[next] != scores[i]);
        if boundary && tp > 0 {
            let predicted = pos + 1;
            let f1 = 2.0 * tp as f64 / (predicted + positives) as f64;
            best = best.max(f1);
        }
    }
    Ok(best)
}
