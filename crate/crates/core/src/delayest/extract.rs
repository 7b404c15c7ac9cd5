use super::lasso::{fb_lasso, ls_estimate, FbOptions, SelectionEstimate};
use super::shift::{stack_shift_matrices, ShiftBlock};
use crate::channel::ReceivedFrame;
use crate::graph::FactorGraph;
use crate::txchain::DelayProfile;
use crate::{Error, Result, C64};

/// Per-user delay decision from per-RE selection estimates (`estimates[k]`
/// belongs to RE `k`).
///
/// A user's block magnitudes are averaged over its REs and the strongest
/// shift wins; ties resolve to the smaller delay.
pub fn extract_delays(
    estimates: &[SelectionEstimate],
    graph: &FactorGraph,
    max_delay: usize,
) -> Result<DelayProfile> {
    if estimates.len() != graph.num_res() {
        return Err(Error::Dimension(format!(
            "{} RE estimates for K={}",
            estimates.len(),
            graph.num_res()
        )));
    }
    let mut delays = Vec::with_capacity(graph.num_users());
    for user in 0..graph.num_users() {
        let mut avg = vec![0.0; max_delay + 1];
        let res = graph.res_of(user);
        for &re in res {
            let mags = estimates[re].user_magnitudes(user).ok_or_else(|| {
                Error::Dimension(format!("RE {re} estimate has no block for user {user}"))
            })?;
            if mags.len() != max_delay + 1 {
                return Err(Error::Dimension(format!(
                    "block of {} entries, expected D+1 = {}",
                    mags.len(),
                    max_delay + 1
                )));
            }
            avg.iter_mut().zip(&mags).for_each(|(a, m)| *a += m / res.len() as f64);
        }
        let best = avg
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > avg[best] { i } else { best });
        delays.push(best);
    }
    DelayProfile::new(delays, max_delay)
}

/// Mean absolute delay error in symbol periods.
pub fn delay_mae(estimated: &DelayProfile, truth: &DelayProfile) -> Result<f64> {
    if estimated.num_users() != truth.num_users() || truth.num_users() == 0 {
        return Err(Error::Dimension(format!(
            "profiles with {} and {} users",
            estimated.num_users(),
            truth.num_users()
        )));
    }
    let total: usize = estimated
        .delays()
        .iter()
        .zip(truth.delays())
        .map(|(a, b)| a.abs_diff(*b))
        .sum();
    Ok(total as f64 / truth.num_users() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayEstimator {
    Lasso(FbOptions),
    LeastSquares,
}

/// Estimates every user's delay from the first `S` samples of each RE.
///
/// `pilots_nonzero[j]` is user `j`'s nonzero pilot `s'` as known to the
/// receiver (unit-energy reference; the pilot power lands in the selection
/// vector). Returns the delay profile and the per-RE estimates.
pub fn estimate_delays(
    rx: &ReceivedFrame,
    pilots_nonzero: &[Vec<C64>],
    graph: &FactorGraph,
    max_delay: usize,
    estimator: &DelayEstimator,
) -> Result<(DelayProfile, Vec<SelectionEstimate>)> {
    if rx.num_res() != graph.num_res() || pilots_nonzero.len() != graph.num_users() {
        return Err(Error::Dimension("received frame or pilots disagree with the graph".into()));
    }
    let mut estimates = Vec::with_capacity(graph.num_res());
    for re in 0..graph.num_res() {
        let blocks = graph
            .users_on(re)
            .iter()
            .map(|&u| ShiftBlock::new(u, pilots_nonzero[u].clone(), max_delay))
            .collect();
        let t = stack_shift_matrices(blocks)?;
        let s = t.blocks()[0].rows();
        if rx.len() < s {
            return Err(Error::Dimension(format!("frame of {} samples shorter than S={s}", rx.len())));
        }
        let w = &rx.re(re)[..s];
        let est = match estimator {
            DelayEstimator::Lasso(opts) => fb_lasso(&t, w, opts)?,
            DelayEstimator::LeastSquares => ls_estimate(&t, w)?,
        };
        estimates.push(est.with_blocks(&t));
    }
    let profile = extract_delays(&estimates, graph, max_delay)?;
    Ok((profile, estimates))
}
