use super::metric_scale;
use super::problem::{ActiveContext, SampleLlrs};
use crate::codebook::bit_of;
use crate::{Error, Result, C64};

/// Largest number of joint hypotheses [`map_oracle`] will enumerate.
pub const ORACLE_GUARD: u128 = 1 << 20;

/// Exhaustive max-log detector.
///
/// Scores every joint codeword choice with `-||y - sum_j x_j||^2 / sigma^2`
/// and reports, per bit, the best score with the bit at 0 minus the best
/// score with it at 1.
pub fn map_oracle(ctx: &ActiveContext, sigma2: f64) -> Result<SampleLlrs> {
    ctx.validate()?;
    if ctx.users.is_empty() {
        return Ok(SampleLlrs::empty());
    }
    let count = ctx.combinations();
    if count > ORACLE_GUARD {
        return Err(Error::TooManyCombinations {
            count,
            limit: ORACLE_GUARD,
        });
    }
    let scale = metric_scale(sigma2);
    let users = &ctx.users;
    let mut best: Vec<Vec<[f64; 2]>> = users
        .iter()
        .map(|u| vec![[f64::NEG_INFINITY; 2]; u.bits_per_symbol()])
        .collect();
    let mut choice = vec![0usize; users.len()];
    let mut residual = vec![C64::new(0.0, 0.0); ctx.y.len()];
    loop {
        residual.copy_from_slice(&ctx.y);
        for (u, &m) in users.iter().zip(&choice) {
            for (&re, p) in u.res.iter().zip(&u.points[m]) {
                residual[re] -= p;
            }
        }
        let gamma = -scale * residual.iter().map(|r| r.norm_sqr()).sum::<f64>();
        for ((u, &m), slots) in users.iter().zip(&choice).zip(best.iter_mut()) {
            let nb = u.bits_per_symbol();
            for (i, slot) in slots.iter_mut().enumerate() {
                let b = bit_of(m, i, nb) as usize;
                if gamma > slot[b] {
                    slot[b] = gamma;
                }
            }
        }
        // mixed-radix increment
        let mut pos = 0;
        loop {
            if pos == users.len() {
                return Ok(SampleLlrs {
                    users: users.iter().map(|u| u.user).collect(),
                    llrs: best
                        .iter()
                        .map(|slots| slots.iter().map(|s| s[0] - s[1]).collect())
                        .collect(),
                });
            }
            choice[pos] += 1;
            if choice[pos] < users[pos].points.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}
