use rand::Rng;

use super::problem::{ActiveContext, SampleLlrs};
use crate::random::{derive_seed, rng_from_seed};
use crate::{Error, Result, C64};

/// Parameters of the parallel MCMC detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McmcParams {
    /// Sampling iterations `N_s`.
    pub samples: usize,
    /// Parallel chains `N_2`.
    pub chains: usize,
    /// Temperature of the conditional draws.
    pub mixing: f64,
    pub seed: u64,
}

impl Default for McmcParams {
    fn default() -> Self {
        Self {
            samples: 15,
            chains: 4,
            mixing: 10.0,
            seed: 0,
        }
    }
}

impl McmcParams {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.chains == 0 {
            return Err(Error::InvalidParameter("MCMC needs N_s >= 1 and N_2 >= 1".into()));
        }
        if !(self.mixing > 0.0 && self.mixing.is_finite()) {
            return Err(Error::InvalidParameter(format!("mixing parameter {}", self.mixing)));
        }
        Ok(())
    }

    /// Same parameters with the seed of sample stream `n`.
    pub fn for_stream(&self, n: u64) -> Self {
        Self {
            seed: derive_seed(self.seed, &[n]),
            ..*self
        }
    }
}

/// Parallel-chain MCMC detector.
///
/// Each chain starts from uniformly random codewords and, for every
/// sampling iteration, sweeps the active users in order. User `j`'s
/// candidates are scored given the other users' current symbols,
/// `gamma_m = -||y - sum_{v != j} x_v - x_m||^2 / sigma^2` over all K REs, and
/// a new symbol is drawn with probability proportional to
/// `exp(gamma_m / mixing)`. After each sweep, for every user and bit, the
/// scores of the two states obtained by forcing that bit of the user's current
/// symbol to 0 and to 1 update running maxima; the LLR is the difference of
/// the two maxima.
pub fn mcmc_decode(ctx: &ActiveContext, sigma2: f64, params: &McmcParams) -> Result<SampleLlrs> {
    params.validate()?;
    ctx.validate()?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(
            "MCMC needs a positive noise variance; use log-MPA or the oracle at zero noise".into(),
        ));
    }
    if ctx.users.is_empty() {
        return Ok(SampleLlrs::empty());
    }
    let users = &ctx.users;
    let scale = 1.0 / sigma2;
    let mut best: Vec<Vec<[f64; 2]>> = users
        .iter()
        .map(|u| vec![[f64::NEG_INFINITY; 2]; u.bits_per_symbol()])
        .collect();

    let max_m = users.iter().map(|u| u.points.len()).max().unwrap_or(0);
    let mut gamma = vec![0.0; max_m];
    let mut weights = vec![0.0; max_m];
    let mut residual = vec![C64::new(0.0, 0.0); ctx.y.len()];

    for chain in 0..params.chains {
        let mut rng = rng_from_seed(derive_seed(params.seed, &[chain as u64]));
        let mut state: Vec<usize> = users.iter().map(|u| rng.random_range(0..u.points.len())).collect();

        // residual of the full current state
        residual.copy_from_slice(&ctx.y);
        for (u, &m) in users.iter().zip(&state) {
            for (&re, p) in u.res.iter().zip(&u.points[m]) {
                residual[re] -= p;
            }
        }

        for _ in 0..params.samples {
            for (j, u) in users.iter().enumerate() {
                // remove user j's current symbol
                for (&re, p) in u.res.iter().zip(&u.points[state[j]]) {
                    residual[re] += p;
                }
                let base: f64 = residual.iter().map(|r| r.norm_sqr()).sum();
                let own: f64 = u.res.iter().map(|&re| residual[re].norm_sqr()).sum();
                let m_count = u.points.len();
                for (m, g) in gamma[..m_count].iter_mut().enumerate() {
                    let local: f64 = u
                        .res
                        .iter()
                        .zip(&u.points[m])
                        .map(|(&re, p)| (residual[re] - p).norm_sqr())
                        .sum();
                    *g = -scale * (base - own + local);
                }

                let top = gamma[..m_count].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (w, g) in weights[..m_count].iter_mut().zip(&gamma[..m_count]) {
                    *w = ((g - top) / params.mixing).exp();
                    total += *w;
                }
                let mut pick = rng.random::<f64>() * total;
                let mut drawn = m_count - 1;
                for (m, w) in weights[..m_count].iter().enumerate() {
                    if pick < *w {
                        drawn = m;
                        break;
                    }
                    pick -= w;
                }
                state[j] = drawn;
                for (&re, p) in u.res.iter().zip(&u.points[drawn]) {
                    residual[re] -= p;
                }
            }

            // forced-bit metrics against the state reached by the sweep
            let total: f64 = residual.iter().map(|r| r.norm_sqr()).sum();
            for (j, u) in users.iter().enumerate() {
                let cur = state[j];
                let own_now: f64 = u.res.iter().map(|&re| residual[re].norm_sqr()).sum();
                let nb = u.bits_per_symbol();
                for (i, slot) in best[j].iter_mut().enumerate() {
                    let mask = 1 << (nb - 1 - i);
                    for b in 0..2 {
                        let forced = if b == 0 { cur & !mask } else { cur | mask };
                        let local: f64 = u
                            .res
                            .iter()
                            .zip(u.points[forced].iter().zip(&u.points[cur]))
                            .map(|(&re, (pf, pc))| (residual[re] + pc - pf).norm_sqr())
                            .sum();
                        let g = -scale * (total - own_now + local);
                        if g > slot[b] {
                            slot[b] = g;
                        }
                    }
                }
            }
        }
    }

    Ok(SampleLlrs {
        users: users.iter().map(|u| u.user).collect(),
        llrs: best
            .iter()
            .map(|slots| slots.iter().map(|s| s[0] - s[1]).collect())
            .collect(),
    })
}
