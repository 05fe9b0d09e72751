//! Substring kernels `Σ_s num_s(x)·num_s(y)·λ_s`, evaluated in linear time
//! per pair with a suffix automaton of one side.
//!
//! Matching the other string through the automaton visits, for every end
//! position, the longest suffix that occurs in the indexed text; all shorter
//! suffixes are reached through suffix links. Each state stores its
//! occurrence count and the weighted sum accumulated along its link chain,
//! so every end position costs O(1) after the walk.

use rayon::prelude::*;

use super::{KernelMatrix, KernelSpec, StringKernelConfig, StringVariant};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

const NO_LINK: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SuffixAutomaton {
    len: Vec<usize>,
    link: Vec<usize>,
    next: Vec<Vec<(char, usize)>>,
    /// Number of end positions (occurrences) of the strings in each state.
    occ: Vec<f64>,
    /// States sorted by increasing `len`.
    by_len: Vec<usize>,
    text_len: usize,
}

impl SuffixAutomaton {
    pub fn new(text: &[char]) -> Self {
        let cap = 2 * text.len() + 1;
        let mut sa = SuffixAutomaton {
            len: Vec::with_capacity(cap),
            link: Vec::with_capacity(cap),
            next: Vec::with_capacity(cap),
            occ: Vec::with_capacity(cap),
            by_len: Vec::new(),
            text_len: text.len(),
        };
        sa.push_state(0, NO_LINK, Vec::new(), 0.0);
        let mut last = 0;
        for &c in text {
            let cur = sa.push_state(sa.len[last] + 1, NO_LINK, Vec::new(), 1.0);
            let mut p = last;
            while p != NO_LINK && sa.step(p, c).is_none() {
                sa.next[p].push((c, cur));
                p = sa.link[p];
            }
            if p == NO_LINK {
                sa.link[cur] = 0;
            } else {
                let q = sa.step(p, c).expect("transition exists");
                if sa.len[p] + 1 == sa.len[q] {
                    sa.link[cur] = q;
                } else {
                    let clone = sa.push_state(sa.len[p] + 1, sa.link[q], sa.next[q].clone(), 0.0);
                    while p != NO_LINK && sa.step(p, c) == Some(q) {
                        sa.set_step(p, c, clone);
                        p = sa.link[p];
                    }
                    sa.link[q] = clone;
                    sa.link[cur] = clone;
                }
            }
            last = cur;
        }
        let mut by_len: Vec<usize> = (0..sa.len.len()).collect();
        by_len.sort_by_key(|&s| sa.len[s]);
        for &s in by_len.iter().rev() {
            let l = sa.link[s];
            if l != NO_LINK {
                sa.occ[l] += sa.occ[s];
            }
        }
        sa.by_len = by_len;
        sa
    }

    fn push_state(&mut self, len: usize, link: usize, next: Vec<(char, usize)>, occ: f64) -> usize {
        self.len.push(len);
        self.link.push(link);
        self.next.push(next);
        self.occ.push(occ);
        self.len.len() - 1
    }

    fn step(&self, state: usize, c: char) -> Option<usize> {
        self.next[state].iter().find(|(k, _)| *k == c).map(|&(_, t)| t)
    }

    fn set_step(&mut self, state: usize, c: char, target: usize) {
        if let Some(slot) = self.next[state].iter_mut().find(|(k, _)| *k == c) {
            slot.1 = target;
        }
    }

    pub fn text_len(&self) -> usize {
        self.text_len
    }

    /// Number of occurrences of `pattern` in the indexed text.
    pub fn count(&self, pattern: &[char]) -> usize {
        if pattern.is_empty() {
            return 0;
        }
        let mut v = 0;
        for &c in pattern {
            match self.step(v, c) {
                Some(t) => v = t,
                None => return 0,
            }
        }
        self.occ[v] as usize
    }

    /// `acc[s] = Σ` over the link chain of `s` (root excluded) of
    /// `occ · weight(lengths held by the state)`.
    fn accumulate(&self, weight: &Weighting) -> Vec<f64> {
        let mut acc = vec![0.0; self.len.len()];
        for &s in &self.by_len {
            let l = self.link[s];
            if l == NO_LINK {
                continue;
            }
            acc[s] = acc[l] + self.occ[s] * weight.range(self.len[l] + 1, self.len[s]);
        }
        acc
    }

    /// `Σ_s num_s(indexed)·num_s(other)·w(|s|)`.
    fn match_sum(&self, other: &[char], weight: &Weighting, acc: &[f64]) -> f64 {
        let mut v = 0;
        let mut l = 0;
        let mut total = 0.0;
        for &c in other {
            while v != 0 && self.step(v, c).is_none() {
                v = self.link[v];
                l = self.len[v];
            }
            match self.step(v, c) {
                Some(t) => {
                    v = t;
                    l += 1;
                }
                None => {
                    v = 0;
                    l = 0;
                }
            }
            if l > 0 {
                let parent = self.link[v];
                total += acc[parent] + self.occ[v] * weight.range(self.len[parent] + 1, l);
            }
        }
        total
    }
}

/// Per-length substring weights. For exponential decay the weight of length
/// `L` is `lambda^(L − shift)`; the shift keeps long matches finite and
/// cancels under cosine normalization.
#[derive(Debug, Clone, Copy)]
struct Weighting {
    variant: StringVariant,
    shift: f64,
}

impl Weighting {
    /// `Σ_{L=a}^{b} w(L)` for `1 ≤ a ≤ b`.
    fn range(&self, a: usize, b: usize) -> f64 {
        if a > b {
            return 0.0;
        }
        match self.variant {
            StringVariant::Constant => (b - a + 1) as f64,
            StringVariant::Spectrum(p) => {
                if a <= p && p <= b {
                    1.0
                } else {
                    0.0
                }
            }
            StringVariant::ExpDecay(lambda) => {
                let count = (b - a + 1) as f64;
                if lambda == 1.0 {
                    return count;
                }
                if self.shift == 0.0 {
                    // Integer bases stay exact: λ^a · (λ^count − 1) / (λ − 1).
                    let count = count as i32;
                    return lambda.powi(a as i32) * (lambda.powi(count) - 1.0) / (lambda - 1.0);
                }
                let ln = lambda.ln();
                // λ^(b−shift) · (1 − λ^(−count)) / (1 − λ^(−1))
                ((b as f64 - self.shift) * ln).exp() * (-count * ln).exp_m1() / (-ln).exp_m1()
            }
        }
    }
}

fn chars(text: &str) -> Vec<char> {
    text.chars().collect()
}

/// Unnormalized kernel value of one pair.
pub fn string_kernel_pair(x: &str, y: &str, variant: StringVariant) -> f64 {
    let sa = SuffixAutomaton::new(&chars(x));
    let w = Weighting { variant, shift: 0.0 };
    let acc = sa.accumulate(&w);
    sa.match_sum(&chars(y), &w, &acc)
}

/// Kernel matrix over preprocessed documents.
pub fn string_kernel(texts: &[String], cfg: StringKernelConfig) -> Result<KernelMatrix> {
    if let StringVariant::ExpDecay(lambda) = cfg.variant {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("decay base must be >= 1, got {lambda}")));
        }
    }
    if let StringVariant::Spectrum(0) = cfg.variant {
        return Err(Error::invalid("substring length must be at least 1"));
    }
    let docs: Vec<Vec<char>> = texts.iter().map(|t| chars(t)).collect();
    let n = docs.len();
    let scaled = cfg.normalize && matches!(cfg.variant, StringVariant::ExpDecay(l) if l != 1.0);

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let sa = SuffixAutomaton::new(&docs[i]);
            let fixed = Weighting {
                variant: cfg.variant,
                shift: 0.0,
            };
            let fixed_acc = (!scaled).then(|| sa.accumulate(&fixed));
            (i..n)
                .map(|j| match &fixed_acc {
                    Some(acc) => sa.match_sum(&docs[j], &fixed, acc),
                    None => {
                        let w = Weighting {
                            variant: cfg.variant,
                            shift: (docs[i].len() + docs[j].len()) as f64 / 2.0,
                        };
                        let acc = sa.accumulate(&w);
                        sa.match_sum(&docs[j], &w, &acc)
                    }
                })
                .collect()
        })
        .collect();

    let mut raw = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            raw[(i, i + off)] = v;
            raw[(i + off, i)] = v;
        }
    }
    let spec = KernelSpec::String(cfg);
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "string kernel {spec} (enable normalization for long documents)"
        )));
    }
    if !cfg.normalize {
        return Ok(KernelMatrix::new(raw, spec.to_string()));
    }
    let empty: Vec<usize> = (0..n).filter(|&i| raw[(i, i)] <= 0.0).collect();
    if !empty.is_empty() {
        log::warn!(
            "string kernel {spec}: {} documents share no substrings with themselves",
            empty.len()
        );
    }
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let denom = (raw[(i, i)] * raw[(j, j)]).sqrt();
            let v = if denom > 0.0 { raw[(i, j)] / denom } else { 0.0 };
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(KernelMatrix::new(values, spec.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(x: &str, y: &str, variant: StringVariant) -> f64 {
        let x: Vec<char> = x.chars().collect();
        let y: Vec<char> = y.chars().collect();
        let mut total = 0.0;
        for a in 0..x.len() {
            for b in (a + 1)..=x.len() {
                for c in 0..y.len() {
                    for d in (c + 1)..=y.len() {
                        if x[a..b] == y[c..d] {
                            let l = b - a;
                            total += match variant {
                                StringVariant::Constant => 1.0,
                                StringVariant::Spectrum(p) => (l == p) as u8 as f64,
                                StringVariant::ExpDecay(lam) => lam.powi(l as i32),
                            };
                        }
                    }
                }
            }
        }
        total
    }

    #[test]
    fn worked_examples() {
        assert_eq!(string_kernel_pair("abab", "ab", StringVariant::Spectrum(2)), 2.0);
        assert_eq!(string_kernel_pair("aa", "aa", StringVariant::Constant), 5.0);
        assert_eq!(
            string_kernel_pair("abcab", "cab", StringVariant::ExpDecay(1.0)),
            string_kernel_pair("abcab", "cab", StringVariant::Constant)
        );
    }

    #[test]
    fn occurrence_counts() {
        let sa = SuffixAutomaton::new(&"abababa".chars().collect::<Vec<_>>());
        assert_eq!(sa.count(&['a', 'b', 'a']), 3);
        assert_eq!(sa.count(&['b']), 3);
        assert_eq!(sa.count(&['c']), 0);
    }

    #[test]
    fn matches_brute_force_on_samples() {
        let samples = ["", "a", "abc", "aabbaa", "cabcab", "bbbb", "acbacb"];
        for x in samples {
            for y in samples {
                for v in [
                    StringVariant::Constant,
                    StringVariant::Spectrum(1),
                    StringVariant::Spectrum(3),
                    StringVariant::ExpDecay(2.0),
                ] {
                    let fast = string_kernel_pair(x, y, v);
                    let slow = brute(x, y, v);
                    assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0), "{x} {y} {v:?}");
                }
            }
        }
    }

    #[test]
    fn normalized_matrix_and_empty_docs() {
        let docs: Vec<String> = ["abc", "abd", ""].iter().map(|s| s.to_string()).collect();
        let k = string_kernel(&docs, StringKernelConfig::new(StringVariant::Constant)).unwrap();
        assert_eq!(k.values[(2, 2)], 1.0);
        assert_eq!(k.values[(0, 2)], 0.0);
        let expected = brute("abc", "abd", StringVariant::Constant)
            / (brute("abc", "abc", StringVariant::Constant) * brute("abd", "abd", StringVariant::Constant)).sqrt();
        assert!((k.values[(0, 1)] - expected).abs() < 1e-15);
    }

    #[test]
    fn long_documents_stay_finite_when_normalized() {
        let long: String = "abcdefghij".repeat(200);
        let docs = vec![long.clone(), format!("{long}x"), "xyz".to_string()];
        let k = string_kernel(&docs, StringKernelConfig::new(StringVariant::ExpDecay(20.0))).unwrap();
        assert!(k.values.iter().all(|v| v.is_finite()));
        assert!(k.values[(0, 1)] > 0.0 && k.values[(0, 1)] <= 1.0);
        let raw = string_kernel(&docs, StringKernelConfig::raw(StringVariant::ExpDecay(20.0)));
        assert!(raw.is_err());
    }
}
