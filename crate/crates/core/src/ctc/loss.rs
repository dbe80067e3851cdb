//! Log-space CTC forward loss with analytic logit gradients via the
//! forward-backward recursion over the blank-interleaved target.

use super::{CtcError, LogitGrid, BLANK};

/// Forward loss and its gradient with respect to every logit, flattened
/// frame-major like the grid payload.
#[derive(Debug, Clone)]
pub struct CtcLoss {
    pub loss: f64,
    pub grad: Vec<f64>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_softmax_rows(grid: &LogitGrid) -> Vec<Vec<f64>> {
    (0..grid.n_frames())
        .map(|t| {
            let row = grid.row(t);
            let z = log_sum_exp(row);
            row.iter().map(|v| v - z).collect()
        })
        .collect()
}

/// Smallest frame count that can emit `target`: its length plus one
/// separating blank per adjacent repeat.
fn min_frames(target: &[usize]) -> usize {
    let repeats = target.windows(2).filter(|w| w[0] == w[1]).count();
    target.len() + repeats
}

/// Negative log-likelihood of `target` under the grid, with gradients.
/// `target` holds phone classes (never the blank). An infeasible target
/// (more symbols than the frames can carry) is a distinct error rather than
/// an infinite loss.
pub fn ctc_forward_loss(grid: &LogitGrid, target: &[usize]) -> Result<CtcLoss, CtcError> {
    let t_len = grid.n_frames();
    let c = grid.n_classes();
    for &cls in target {
        if cls == BLANK || cls >= c {
            return Err(CtcError::BadTargetClass {
                class: cls,
                n_classes: c,
            });
        }
    }
    let needed = min_frames(target);
    if t_len < needed.max(1) {
        return Err(CtcError::InfeasibleTarget {
            needed: needed.max(1),
            have: t_len,
        });
    }

    // Blank-interleaved target: blank, t1, blank, t2, ..., blank.
    let s_len = 2 * target.len() + 1;
    let label = |s: usize| -> usize {
        if s % 2 == 0 {
            BLANK
        } else {
            target[s / 2]
        }
    };
    let can_skip = |s: usize| -> bool { s >= 2 && label(s) != BLANK && label(s) != label(s - 2) };

    let lp = log_softmax_rows(grid);

    let neg = f64::NEG_INFINITY;
    let mut alpha = vec![vec![neg; s_len]; t_len];
    alpha[0][0] = lp[0][BLANK];
    if s_len > 1 {
        alpha[0][1] = lp[0][label(1)];
    }
    for t in 1..t_len {
        for s in 0..s_len {
            let mut acc = alpha[t - 1][s];
            if s >= 1 {
                acc = log_sum_exp(&[acc, alpha[t - 1][s - 1]]);
            }
            if can_skip(s) {
                acc = log_sum_exp(&[acc, alpha[t - 1][s - 2]]);
            }
            if acc != neg {
                alpha[t][s] = acc + lp[t][label(s)];
            }
        }
    }
    let tail = if s_len >= 2 {
        log_sum_exp(&[alpha[t_len - 1][s_len - 1], alpha[t_len - 1][s_len - 2]])
    } else {
        alpha[t_len - 1][s_len - 1]
    };
    let log_z = tail;
    let loss = -log_z;

    // Backward pass; beta excludes the emission at its own frame.
    let mut beta = vec![vec![neg; s_len]; t_len];
    beta[t_len - 1][s_len - 1] = 0.0;
    if s_len >= 2 {
        beta[t_len - 1][s_len - 2] = 0.0;
    }
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let mut parts = vec![beta[t + 1][s] + lp[t + 1][label(s)]];
            if s + 1 < s_len {
                parts.push(beta[t + 1][s + 1] + lp[t + 1][label(s + 1)]);
            }
            if s + 2 < s_len && can_skip(s + 2) {
                parts.push(beta[t + 1][s + 2] + lp[t + 1][label(s + 2)]);
            }
            beta[t][s] = log_sum_exp(&parts);
        }
    }

    // grad(logit[t][c]) = softmax[t][c] - sum of state posteriors with label c.
    let mut grad = vec![0.0; t_len * c];
    for t in 0..t_len {
        let mut gamma = vec![0.0f64; c];
        for s in 0..s_len {
            let post = alpha[t][s] + beta[t][s] - log_z;
            if post > neg {
                gamma[label(s)] += post.exp();
            }
        }
        for cls in 0..c {
            grad[t * c + cls] = lp[t][cls].exp() - gamma[cls];
        }
    }

    Ok(CtcLoss { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[Vec<f64>]) -> LogitGrid {
        LogitGrid::from_rows(rows).unwrap()
    }

    #[test]
    fn single_frame_single_symbol() {
        // Logits chosen so softmax = (0.4 blank, 0.6 phone).
        let p_blank: f64 = 0.4;
        let p_a: f64 = 0.6;
        let g = grid(&[vec![p_blank.ln(), p_a.ln()]]);
        let out = ctc_forward_loss(&g, &[1]).unwrap();
        assert!((out.loss - (-p_a.ln())).abs() < 1e-12);
    }

    #[test]
    fn two_frames_single_symbol_path_sum() {
        // Feasible paths for target [a] over 2 frames: aa, a-, -a.
        let pb: f64 = 0.3;
        let pa: f64 = 0.7;
        let row = vec![pb.ln(), pa.ln()];
        let g = grid(&[row.clone(), row]);
        let out = ctc_forward_loss(&g, &[1]).unwrap();
        let brute = pa * pa + pa * pb + pb * pa;
        assert!((out.loss - (-brute.ln())).abs() < 1e-12);
    }

    #[test]
    fn infeasible_target_is_distinct_error() {
        let g = grid(&[vec![0.0, 0.0]]);
        assert!(matches!(
            ctc_forward_loss(&g, &[1, 1]),
            Err(CtcError::InfeasibleTarget { needed: 3, have: 1 })
        ));
    }

    #[test]
    fn repeated_symbols_need_separating_blank() {
        // Target [a, a] needs 3 frames minimum.
        assert_eq!(min_frames(&[1, 1]), 3);
        assert_eq!(min_frames(&[1, 2]), 2);
        assert_eq!(min_frames(&[]), 0);
    }

    #[test]
    fn empty_target_scores_all_blank_path() {
        let pb: f64 = 0.8;
        let pa: f64 = 0.2;
        let row = vec![pb.ln(), pa.ln()];
        let g = grid(&[row.clone(), row]);
        let out = ctc_forward_loss(&g, &[]).unwrap();
        assert!((out.loss - (-(pb * pb).ln())).abs() < 1e-12);
    }

    #[test]
    fn loss_is_nonnegative() {
        let g = grid(&[vec![2.0, -1.0, 0.5], vec![0.0, 3.0, 1.0], vec![1.0, 1.0, 1.0]]);
        let out = ctc_forward_loss(&g, &[2, 1]).unwrap();
        assert!(out.loss >= 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rows = vec![
            vec![0.3, -0.2, 0.9],
            vec![-0.5, 0.8, 0.1],
            vec![0.2, 0.4, -0.7],
            vec![0.0, -0.1, 0.6],
        ];
        let target = vec![2, 1];
        let base = grid(&rows);
        let out = ctc_forward_loss(&base, &target).unwrap();
        let h = 1e-6;
        for t in 0..rows.len() {
            for c in 0..3 {
                let mut plus = rows.clone();
                plus[t][c] += h;
                let mut minus = rows.clone();
                minus[t][c] -= h;
                let lp = ctc_forward_loss(&grid(&plus), &target).unwrap().loss;
                let lm = ctc_forward_loss(&grid(&minus), &target).unwrap().loss;
                let fd = (lp - lm) / (2.0 * h);
                let an = out.grad[t * 3 + c];
                assert!(
                    (fd - an).abs() < 1e-6,
                    "frame {t} class {c}: fd {fd} vs analytic {an}"
                );
            }
        }
    }
}
