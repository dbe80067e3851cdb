//! Independent oracles for the CTC loss and the edit-distance alignment:
//! exhaustive path enumeration for small grids, and a from-scratch edit
//! distance for random pairs.

use layerprobe_core::ctc::{ctc_forward_loss, levenshtein_align, CtcError, LogitGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Collapse a frame-level path (duplicates removed, blanks dropped).
fn collapse(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = usize::MAX;
    for &c in path {
        if c != prev && c != 0 {
            out.push(c);
        }
        prev = c;
    }
    out
}

/// Brute-force CTC likelihood: enumerate every class path of length T, sum
/// the probabilities of the ones that collapse to the target.
fn enumerate_loss(rows: &[Vec<f64>], target: &[usize]) -> Option<f64> {
    let t_len = rows.len();
    let n_classes = rows[0].len();
    let probs: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / z).collect()
        })
        .collect();

    let mut total = 0.0;
    let n_paths = n_classes.pow(t_len as u32);
    for code in 0..n_paths {
        let mut path = Vec::with_capacity(t_len);
        let mut rem = code;
        for _ in 0..t_len {
            path.push(rem % n_classes);
            rem /= n_classes;
        }
        if collapse(&path) == target {
            let mut p = 1.0;
            for (t, &c) in path.iter().enumerate() {
                p *= probs[t][c];
            }
            total += p;
        }
    }
    if total > 0.0 {
        Some(-total.ln())
    } else {
        None
    }
}

/// All target sequences over `1..=n_phones` up to the given length.
fn all_targets(n_phones: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for base in &frontier {
            for p in 1..=n_phones {
                let mut t = base.clone();
                t.push(p);
                out.push(t.clone());
                next.push(t);
            }
        }
        frontier = next;
    }
    out
}

#[test]
fn forward_loss_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n_phones in 1..=3usize {
        let n_classes = n_phones + 1;
        for t_len in 1..=6usize {
            let rows: Vec<Vec<f64>> = (0..t_len)
                .map(|_| (0..n_classes).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let grid = LogitGrid::from_rows(&rows).unwrap();
            for target in all_targets(n_phones, 3) {
                match (ctc_forward_loss(&grid, &target), enumerate_loss(&rows, &target)) {
                    (Ok(out), Some(expected)) => {
                        assert!(
                            (out.loss - expected).abs() < 1e-6,
                            "T={t_len} target {target:?}: {} vs {expected}",
                            out.loss
                        );
                    }
                    (Err(CtcError::InfeasibleTarget { .. }), None) => {}
                    (got, want) => panic!(
                        "T={t_len} target {target:?}: implementation {got:?}, oracle {want:?}"
                    ),
                }
            }
        }
    }
}

/// From-scratch minimal edit distance, no traceback, different recurrence
/// shape from the implementation.
fn oracle_edit_distance(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut curr = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            let del = prev[j + 1] + 1;
            let ins = curr[j] + 1;
            curr.push(sub.min(del).min(ins));
        }
        prev = curr;
    }
    prev[b.len()]
}

#[test]
fn alignment_counts_match_independent_edit_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..1000 {
        let ref_len = rng.random_range(0..=5);
        let hyp_len = rng.random_range(0..=5);
        let reference: Vec<usize> = (0..ref_len).map(|_| rng.random_range(1..=4)).collect();
        let hypothesis: Vec<usize> = (0..hyp_len).map(|_| rng.random_range(1..=4)).collect();
        let a = levenshtein_align(&reference, &hypothesis);
        assert_eq!(
            a.total_errors(),
            oracle_edit_distance(&reference, &hypothesis),
            "ref {reference:?} hyp {hypothesis:?}"
        );
    }
}

#[test]
fn exhaustive_short_pairs_match_oracle() {
    // Every pair of sequences over a 2-phone inventory with lengths <= 3.
    let mut seqs: Vec<Vec<usize>> = vec![Vec::new()];
    for len in 1..=3usize {
        let count = 2usize.pow(len as u32);
        for code in 0..count {
            let mut s = Vec::with_capacity(len);
            let mut rem = code;
            for _ in 0..len {
                s.push(rem % 2 + 1);
                rem /= 2;
            }
            seqs.push(s);
        }
    }
    for a in &seqs {
        for b in &seqs {
            let got = levenshtein_align(a, b).total_errors();
            assert_eq!(got, oracle_edit_distance(a, b), "{a:?} vs {b:?}");
        }
    }
}
