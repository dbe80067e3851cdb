//! Matched-pairs segment significance test between two recognition systems
//! sharing one set of references.
//!
//! Each utterance is cut into error segments bounded by reference positions
//! where both systems are correct and neither has an adjacent insertion; the
//! per-segment error-count differences feed a normal-approximation test.

use statrs::distribution::{ContinuousCDF, Normal};

use super::align::{levenshtein_align, AlignOp};
use super::CtcError;

/// How utterances are partitioned into matched segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    /// Error regions delimited by positions both systems got right with no
    /// adjacent insertions in either.
    #[default]
    BothCorrectBoundaries,
    /// One segment per utterance.
    PerUtterance,
}

/// One utterance's reference and the two hypotheses under comparison.
#[derive(Debug, Clone)]
pub struct MapssweCase {
    pub reference: Vec<usize>,
    pub hyp_a: Vec<usize>,
    pub hyp_b: Vec<usize>,
}

/// Test outcome: the W statistic, its two-sided p-value, and the per-segment
/// error differences (system A minus system B) that produced them.
#[derive(Debug, Clone)]
pub struct MapssweReport {
    pub w: f64,
    pub p: f64,
    pub n_segments: usize,
    pub segment_diffs: Vec<i64>,
}

/// Per-reference-position view of one alignment: error flags for each
/// position plus insertion counts in each of the `n + 1` gaps.
struct PositionErrors {
    correct: Vec<bool>,
    errors: Vec<usize>,
    ins_in_gap: Vec<usize>,
}

fn position_errors(reference: &[usize], hypothesis: &[usize]) -> PositionErrors {
    let n = reference.len();
    let mut correct = vec![false; n];
    let mut errors = vec![0usize; n];
    let mut ins_in_gap = vec![0usize; n + 1];
    let alignment = levenshtein_align(reference, hypothesis);
    let mut i = 0usize;
    for op in &alignment.ops {
        match op {
            AlignOp::Match => {
                correct[i] = true;
                i += 1;
            }
            AlignOp::Substitute | AlignOp::Delete => {
                errors[i] = 1;
                i += 1;
            }
            AlignOp::Insert => ins_in_gap[i] += 1,
        }
    }
    PositionErrors {
        correct,
        errors,
        ins_in_gap,
    }
}

/// Error-count pairs per segment of one utterance.
fn segment_errors(case: &MapssweCase, mode: SegmentMode) -> Vec<(usize, usize)> {
    let a = position_errors(&case.reference, &case.hyp_a);
    let b = position_errors(&case.reference, &case.hyp_b);
    let n = case.reference.len();

    if mode == SegmentMode::PerUtterance {
        let err_a: usize = a.errors.iter().sum::<usize>() + a.ins_in_gap.iter().sum::<usize>();
        let err_b: usize = b.errors.iter().sum::<usize>() + b.ins_in_gap.iter().sum::<usize>();
        return vec![(err_a, err_b)];
    }

    if n == 0 {
        let err_a = a.ins_in_gap[0];
        let err_b = b.ins_in_gap[0];
        if err_a + err_b > 0 {
            return vec![(err_a, err_b)];
        }
        return Vec::new();
    }

    let clean = |i: usize| -> bool {
        a.correct[i]
            && b.correct[i]
            && a.ins_in_gap[i] == 0
            && a.ins_in_gap[i + 1] == 0
            && b.ins_in_gap[i] == 0
            && b.ins_in_gap[i + 1] == 0
    };

    let mut segments = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..n {
        if clean(i) {
            if let Some(start) = run_start.take() {
                segments.push((start, i - 1));
            }
        } else if run_start.is_none() {
            run_start = Some(i);
        }
    }
    if let Some(start) = run_start {
        segments.push((start, n - 1));
    }

    segments
        .into_iter()
        .map(|(start, end)| {
            let count = |pe: &PositionErrors| -> usize {
                let pos: usize = pe.errors[start..=end].iter().sum();
                let gaps: usize = pe.ins_in_gap[start..=end + 1].iter().sum();
                pos + gaps
            };
            (count(&a), count(&b))
        })
        .collect()
}

/// Runs the matched-pairs test over a corpus. Identical systems return
/// `W = 0, p = 1`. Degenerate nonzero differences with zero variance are
/// reported with the sentinel `p = 0` and an infinite W carrying the sign of
/// the mean difference.
pub fn mapsswe_test(
    cases: &[MapssweCase],
    mode: SegmentMode,
) -> Result<MapssweReport, CtcError> {
    let mut diffs: Vec<i64> = Vec::new();
    for case in cases {
        for (err_a, err_b) in segment_errors(case, mode) {
            diffs.push(err_a as i64 - err_b as i64);
        }
    }
    let n = diffs.len();
    if n < 2 {
        return Err(CtcError::TooFewSegments(n));
    }
    if diffs.iter().all(|&z| z == 0) {
        return Ok(MapssweReport {
            w: 0.0,
            p: 1.0,
            n_segments: n,
            segment_diffs: diffs,
        });
    }
    let mean = diffs.iter().sum::<i64>() as f64 / n as f64;
    let var = diffs
        .iter()
        .map(|&z| {
            let d = z as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / (n as f64 - 1.0);
    let std = var.sqrt();
    if std == 0.0 {
        // All diffs equal and nonzero: no variance to test against.
        return Ok(MapssweReport {
            w: f64::INFINITY.copysign(mean),
            p: 0.0,
            n_segments: n,
            segment_diffs: diffs,
        });
    }
    let w = mean * (n as f64).sqrt() / std;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let p = 2.0 * normal.cdf(-w.abs());
    Ok(MapssweReport {
        w,
        p,
        n_segments: n,
        segment_diffs: diffs,
    })
}

/// Significance stars: `***` below 0.001, `*` below 0.05, empty otherwise.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
