//! Unit-cost edit-distance alignment and phone error rate.

use super::CtcError;

/// One step of an alignment between a reference and a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    /// Reference and hypothesis symbols match.
    Match,
    /// Hypothesis symbol replaces the reference symbol.
    Substitute,
    /// Reference symbol missing from the hypothesis.
    Delete,
    /// Extra hypothesis symbol with no reference counterpart.
    Insert,
}

/// A minimal-cost alignment with its error counts and full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ops: Vec<AlignOp>,
}

impl Alignment {
    pub fn total_errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

/// Minimal edit-distance alignment with unit costs. When several traces are
/// minimal, the backtrace prefers substitution over deletion over insertion,
/// keeping traces reproducible across implementations.
pub fn levenshtein_align(reference: &[usize], hypothesis: &[usize]) -> Alignment {
    let n = reference.len();
    let m = hypothesis.len();
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for i in 0..=n {
        dist[i][0] = i;
    }
    for j in 0..=m {
        dist[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub_cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            dist[i][j] = (dist[i - 1][j - 1] + sub_cost)
                .min(dist[i - 1][j] + 1)
                .min(dist[i][j - 1] + 1);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let sub_cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if dist[i][j] == dist[i - 1][j - 1] + sub_cost {
                ops.push(if sub_cost == 0 {
                    AlignOp::Match
                } else {
                    AlignOp::Substitute
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[i][j] == dist[i - 1][j] + 1 {
            ops.push(AlignOp::Delete);
            i -= 1;
            continue;
        }
        ops.push(AlignOp::Insert);
        j -= 1;
    }
    ops.reverse();

    let substitutions = ops.iter().filter(|o| **o == AlignOp::Substitute).count();
    let deletions = ops.iter().filter(|o| **o == AlignOp::Delete).count();
    let insertions = ops.iter().filter(|o| **o == AlignOp::Insert).count();
    debug_assert_eq!(substitutions + deletions + insertions, dist[n][m]);
    Alignment {
        substitutions,
        insertions,
        deletions,
        ops,
    }
}

/// Phone error rate in percent: `100 * (S + I + D) / total reference length`.
/// Values above 100 are possible when hypotheses carry many insertions.
pub fn per<'a, I>(pairs: I) -> Result<f64, CtcError>
where
    I: IntoIterator<Item = (&'a [usize], &'a [usize])>,
{
    let mut errors = 0usize;
    let mut ref_len = 0usize;
    for (reference, hypothesis) in pairs {
        let a = levenshtein_align(reference, hypothesis);
        errors += a.total_errors();
        ref_len += reference.len();
    }
    if ref_len == 0 {
        return Err(CtcError::EmptyReference);
    }
    Ok(100.0 * errors as f64 / ref_len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences_align_clean() {
        let a = levenshtein_align(&[1, 2, 3], &[1, 2, 3]);
        assert_eq!(
            (a.substitutions, a.insertions, a.deletions),
            (0, 0, 0)
        );
        assert_eq!(a.ops, vec![AlignOp::Match; 3]);
    }

    #[test]
    fn single_deletion() {
        let a = levenshtein_align(&[1, 2, 3], &[1, 3]);
        assert_eq!((a.substitutions, a.insertions, a.deletions), (0, 0, 1));
    }

    #[test]
    fn insertion_into_empty_reference() {
        let a = levenshtein_align(&[], &[4]);
        assert_eq!((a.substitutions, a.insertions, a.deletions), (0, 1, 0));
        assert_eq!(a.ops, vec![AlignOp::Insert]);
    }

    #[test]
    fn backtrace_prefers_substitution() {
        // [1] vs [2]: one substitution, not delete+insert.
        let a = levenshtein_align(&[1], &[2]);
        assert_eq!(a.ops, vec![AlignOp::Substitute]);
    }

    #[test]
    fn per_values() {
        let r1: Vec<usize> = (1..=4).collect();
        let mut h1 = r1.clone();
        h1[0] = 9; // one substitution in a length-4 reference
        assert_eq!(per(vec![(r1.as_slice(), h1.as_slice())]).unwrap(), 25.0);

        let r = vec![1usize; 10];
        let h: Vec<usize> = (2..=13).map(|v| v % 3 + 2).collect(); // 12 hyp symbols, all wrong
        let score = per(vec![(r.as_slice(), h.as_slice())]).unwrap();
        assert_eq!(score, 120.0);

        let r2 = vec![1usize, 2];
        assert_eq!(per(vec![(r2.as_slice(), r2.as_slice())]).unwrap(), 0.0);

        let empty: Vec<(&[usize], &[usize])> = Vec::new();
        assert!(matches!(per(empty), Err(CtcError::EmptyReference)));
    }

    #[test]
    fn per_invariant_under_pair_order() {
        let a: Vec<usize> = vec![1, 2, 3];
        let b: Vec<usize> = vec![1, 3];
        let c: Vec<usize> = vec![2, 2, 2, 2];
        let d: Vec<usize> = vec![2, 1, 2];
        let fwd = per(vec![(a.as_slice(), b.as_slice()), (c.as_slice(), d.as_slice())]).unwrap();
        let rev = per(vec![(c.as_slice(), d.as_slice()), (a.as_slice(), b.as_slice())]).unwrap();
        assert_eq!(fwd.to_bits(), rev.to_bits());
    }
}
