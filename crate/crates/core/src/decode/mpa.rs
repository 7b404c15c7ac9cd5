use super::metric_scale;
use super::problem::{ActiveContext, SampleLlrs};
use crate::codebook::bit_of;
use crate::{Error, Result};

pub const DEFAULT_MPA_ITERATIONS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct MpaOutput {
    /// Max-log symbol metrics per active user (sum of incoming RE messages).
    pub beliefs: Vec<Vec<f64>>,
    pub llrs: SampleLlrs,
}

/// Max-log message passing over the factor graph induced by the active users.
///
/// RE-to-user messages maximise the local metric
/// `-|y_k - sum h x|^2 / sigma^2` plus the other users' incoming messages over
/// their candidates; user-to-RE messages are the sum of the user's other
/// incoming messages. Flooding schedule, `iterations` rounds.
pub fn log_mpa(ctx: &ActiveContext, sigma2: f64, iterations: usize) -> Result<MpaOutput> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("log-MPA needs at least one iteration".into()));
    }
    ctx.validate()?;
    if ctx.users.is_empty() {
        return Ok(MpaOutput {
            beliefs: Vec::new(),
            llrs: SampleLlrs::empty(),
        });
    }
    let scale = metric_scale(sigma2);
    let users = &ctx.users;
    let incidence = ctx.re_incidence();

    // messages indexed [user][position in user's res][candidate]
    let zeros = |fill: f64| -> Vec<Vec<Vec<f64>>> {
        users
            .iter()
            .map(|u| vec![vec![fill; u.points.len()]; u.res.len()])
            .collect()
    };
    let mut to_re = zeros(0.0);
    let mut to_user = zeros(0.0);

    for _ in 0..iterations {
        for (re, edges) in incidence.iter().enumerate() {
            if edges.is_empty() {
                continue;
            }
            for &(i, pos) in edges {
                to_user[i][pos].iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
            }
            let mut choice = vec![0usize; edges.len()];
            'combos: loop {
                let mut r = ctx.y[re];
                let mut prior = 0.0;
                for (&(i, pos), &m) in edges.iter().zip(&choice) {
                    r -= users[i].points[m][pos];
                    prior += to_re[i][pos][m];
                }
                let total = -scale * r.norm_sqr() + prior;
                for (&(i, pos), &m) in edges.iter().zip(&choice) {
                    let v = total - to_re[i][pos][m];
                    let slot = &mut to_user[i][pos][m];
                    if v > *slot {
                        *slot = v;
                    }
                }
                let mut e = 0;
                loop {
                    if e == edges.len() {
                        break 'combos;
                    }
                    choice[e] += 1;
                    if choice[e] < users[edges[e].0].points.len() {
                        break;
                    }
                    choice[e] = 0;
                    e += 1;
                }
            }
        }
        for (i, u) in users.iter().enumerate() {
            for pos in 0..u.res.len() {
                let msg = &mut to_re[i][pos];
                for (m, slot) in msg.iter_mut().enumerate() {
                    *slot = (0..u.res.len())
                        .filter(|&p| p != pos)
                        .map(|p| to_user[i][p][m])
                        .sum();
                }
                let top = msg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if top.is_finite() {
                    msg.iter_mut().for_each(|v| *v -= top);
                }
            }
        }
    }

    let beliefs: Vec<Vec<f64>> = users
        .iter()
        .enumerate()
        .map(|(i, u)| {
            (0..u.points.len())
                .map(|m| (0..u.res.len()).map(|p| to_user[i][p][m]).sum())
                .collect()
        })
        .collect();
    let llrs = users
        .iter()
        .zip(&beliefs)
        .map(|(u, b)| {
            let nb = u.bits_per_symbol();
            (0..nb)
                .map(|bit| {
                    let mut best = [f64::NEG_INFINITY; 2];
                    for (m, &v) in b.iter().enumerate() {
                        let side = bit_of(m, bit, nb) as usize;
                        best[side] = best[side].max(v);
                    }
                    best[0] - best[1]
                })
                .collect()
        })
        .collect();
    Ok(MpaOutput {
        beliefs,
        llrs: SampleLlrs {
            users: users.iter().map(|u| u.user).collect(),
            llrs,
        },
    })
}
