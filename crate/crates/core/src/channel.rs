//! Flat per-user, per-RE channels and the received superposition.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::FactorGraph;
use crate::random::complex_normal;
use crate::txchain::{delay_pad, DelayProfile};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Awgn,
    Rayleigh,
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(Self::Awgn),
            "rayleigh" => Ok(Self::Rayleigh),
            other => Err(Error::InvalidParameter(format!("unknown channel model '{other}'"))),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Awgn => "awgn",
            Self::Rayleigh => "rayleigh",
        })
    }
}

/// Noise variance for an SNR in dB at unit symbol energy.
pub fn noise_variance_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Channel coefficients `h[k][j]`, zero where user `j` does not use RE `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    model: ChannelModel,
    coefficients: Vec<Vec<C64>>,
    noise_variance: f64,
}

impl ChannelRealization {
    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn coefficient(&self, re: usize, user: usize) -> C64 {
        self.coefficients[re][user]
    }

    pub fn coefficients(&self) -> &[Vec<C64>] {
        &self.coefficients
    }

    /// Total complex noise variance per sample.
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

pub fn draw_channel<R: Rng + ?Sized>(
    model: ChannelModel,
    graph: &FactorGraph,
    sigma2: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance {sigma2}")));
    }
    let mut coefficients = vec![vec![C64::new(0.0, 0.0); graph.num_users()]; graph.num_res()];
    for (re, row) in coefficients.iter_mut().enumerate() {
        for &user in graph.users_on(re) {
            row[user] = match model {
                ChannelModel::Awgn => C64::new(1.0, 0.0),
                ChannelModel::Rayleigh => complex_normal(rng, 1.0),
            };
        }
    }
    Ok(ChannelRealization {
        model,
        coefficients,
        noise_variance: sigma2,
    })
}

/// Per-RE received vectors `w_k`, each of length `S + N + D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceivedFrame {
    #[serde(rename = "K")]
    k: usize,
    #[serde(with = "crate::serde_complex::vec2")]
    w: Vec<Vec<C64>>,
}

impl ReceivedFrame {
    pub fn new(w: Vec<Vec<C64>>) -> Result<Self> {
        if let Some(first) = w.first() {
            if w.iter().any(|v| v.len() != first.len()) {
                return Err(Error::Dimension("received vectors differ in length".into()));
            }
        }
        Ok(Self { k: w.len(), w })
    }

    pub fn num_res(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn re(&self, k: usize) -> &[C64] {
        &self.w[k]
    }

    /// The K-vector received at sample `n`.
    pub fn sample(&self, n: usize) -> Vec<C64> {
        self.w.iter().map(|v| v[n]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        Self::new(f.w)
    }
}

/// Superimposes the delayed, channel-weighted user signals on every RE and
/// adds circularly-symmetric Gaussian noise of the channel's variance.
///
/// `signals[j]` holds user `j`'s per-RE sequences as returned by
/// [`crate::txchain::assemble_frame`]; all sequences must share one length.
pub fn transmit<R: Rng + ?Sized>(
    signals: &[Vec<(usize, Vec<C64>)>],
    delays: &DelayProfile,
    channel: &ChannelRealization,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let k = channel.coefficients.len();
    let j = channel.coefficients.first().map_or(0, Vec::len);
    if signals.len() != j || delays.num_users() != j {
        return Err(Error::Dimension(format!(
            "{} user signals and {} delays for {j} users",
            signals.len(),
            delays.num_users()
        )));
    }
    let frame_len = signals
        .iter()
        .flatten()
        .map(|(_, s)| s.len())
        .next()
        .ok_or_else(|| Error::Dimension("no user signals".into()))?;
    let max_delay = delays.max_delay();
    let mut w = vec![vec![C64::new(0.0, 0.0); frame_len + max_delay]; k];
    for (user, seqs) in signals.iter().enumerate() {
        for (re, seq) in seqs {
            if *re >= k {
                return Err(Error::Dimension(format!("RE index {re} >= K={k}")));
            }
            if seq.len() != frame_len {
                return Err(Error::Dimension("user frames differ in length".into()));
            }
            let h = channel.coefficients[*re][user];
            let padded = delay_pad(seq, delays.delay(user), max_delay)?;
            for (acc, x) in w[*re].iter_mut().zip(padded) {
                *acc += h * x;
            }
        }
    }
    if channel.noise_variance > 0.0 {
        for v in &mut w {
            for x in v.iter_mut() {
                *x += complex_normal(rng, channel.noise_variance);
            }
        }
    }
    ReceivedFrame::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng_from_seed;

    fn base() -> FactorGraph {
        FactorGraph::build(4, 6, 2).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn awgn_coefficients_are_unit_on_support() {
        let g = base();
        let ch = draw_channel(ChannelModel::Awgn, &g, 0.1, &mut rng_from_seed(0)).unwrap();
        for re in 0..4 {
            for u in 0..6 {
                let expect = if g.occupied(re, u) { c(1.0, 0.0) } else { c(0.0, 0.0) };
                assert_eq!(ch.coefficient(re, u), expect);
            }
        }
    }

    #[test]
    fn rayleigh_unit_mean_power() {
        let g = base();
        let mut rng = rng_from_seed(1);
        let mut acc = 0.0;
        let mut count = 0usize;
        while count < 100_000 {
            let ch = draw_channel(ChannelModel::Rayleigh, &g, 0.1, &mut rng).unwrap();
            for re in 0..4 {
                for u in 0..6 {
                    if g.occupied(re, u) {
                        acc += ch.coefficient(re, u).norm_sqr();
                        count += 1;
                    } else {
                        assert_eq!(ch.coefficient(re, u), c(0.0, 0.0));
                    }
                }
            }
        }
        let mean = acc / count as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean |h|^2 = {mean}");
    }

    #[test]
    fn model_tags() {
        assert_eq!("AWGN".parse::<ChannelModel>().unwrap(), ChannelModel::Awgn);
        assert_eq!("rayleigh".parse::<ChannelModel>().unwrap(), ChannelModel::Rayleigh);
        assert!("rician".parse::<ChannelModel>().is_err());
    }

    /// Signals for the base graph where only `active` users transmit nonzero
    /// sequences.
    fn signals_with(active: &[(usize, Vec<C64>)], len: usize) -> Vec<Vec<(usize, Vec<C64>)>> {
        let g = base();
        (0..6)
            .map(|u| {
                let seq = active
                    .iter()
                    .find(|(a, _)| *a == u)
                    .map(|(_, s)| s.clone())
                    .unwrap_or_else(|| vec![c(0.0, 0.0); len]);
                g.res_of(u).iter().map(|&re| (re, seq.clone())).collect()
            })
            .collect()
    }

    #[test]
    fn single_user_noiseless_is_padded_frame() {
        let g = base();
        let ch = draw_channel(ChannelModel::Awgn, &g, 0.0, &mut rng_from_seed(0)).unwrap();
        let seq = vec![c(1.0, 0.5), c(-2.0, 0.0), c(0.0, 3.0)];
        let sig = signals_with(&[(0, seq.clone())], 3);
        let delays = DelayProfile::new(vec![0; 6], 2).unwrap();
        let rx = transmit(&sig, &delays, &ch, &mut rng_from_seed(1)).unwrap();
        assert_eq!(rx.re(0), delay_pad(&seq, 0, 2).unwrap().as_slice());
        assert_eq!(rx.re(1), delay_pad(&seq, 0, 2).unwrap().as_slice());
        assert!(rx.re(2).iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn two_users_superimpose_entrywise() {
        let g = base();
        let ch = draw_channel(ChannelModel::Rayleigh, &g, 0.0, &mut rng_from_seed(5)).unwrap();
        let s0 = vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)];
        let s1 = vec![c(0.5, 0.5), c(2.0, 0.0), c(0.0, -1.0)];
        // users 0 and 1 share RE 0
        let sig = signals_with(&[(0, s0.clone()), (1, s1.clone())], 3);
        let delays = DelayProfile::new(vec![1, 2, 0, 0, 0, 0], 2).unwrap();
        let rx = transmit(&sig, &delays, &ch, &mut rng_from_seed(1)).unwrap();
        let x0 = delay_pad(&s0, 1, 2).unwrap();
        let x1 = delay_pad(&s1, 2, 2).unwrap();
        for n in 0..5 {
            let expect = ch.coefficient(0, 0) * x0[n] + ch.coefficient(0, 1) * x1[n];
            assert!((rx.re(0)[n] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn common_delay_reduces_to_synchronous_model() {
        let g = base();
        let ch = draw_channel(ChannelModel::Awgn, &g, 0.0, &mut rng_from_seed(0)).unwrap();
        let seqs: Vec<(usize, Vec<C64>)> =
            (0..6).map(|u| (u, (0..4).map(|n| c((u * 4 + n) as f64, 1.0)).collect())).collect();
        let sig = signals_with(&seqs, 4);
        let shift = 2;
        let rx = transmit(&sig, &DelayProfile::new(vec![shift; 6], 3).unwrap(), &ch, &mut rng_from_seed(0)).unwrap();
        for re in 0..4 {
            for n in 0..4 {
                let sync: C64 = g.users_on(re).iter().map(|&u| seqs[u].1[n]).sum();
                assert_eq!(rx.re(re)[n + shift], sync);
            }
        }
    }

    #[test]
    fn linearity_noiseless() {
        let g = base();
        let ch = draw_channel(ChannelModel::Rayleigh, &g, 0.0, &mut rng_from_seed(2)).unwrap();
        let mut rng = rng_from_seed(3);
        let seqs: Vec<(usize, Vec<C64>)> =
            (0..6).map(|u| (u, (0..5).map(|_| complex_normal(&mut rng, 1.0)).collect())).collect();
        let alpha = c(0.3, -1.7);
        let scaled: Vec<(usize, Vec<C64>)> =
            seqs.iter().map(|(u, s)| (*u, s.iter().map(|x| alpha * x).collect())).collect();
        let delays = DelayProfile::new(vec![0, 1, 2, 3, 1, 0], 3).unwrap();
        let a = transmit(&signals_with(&seqs, 5), &delays, &ch, &mut rng).unwrap();
        let b = transmit(&signals_with(&scaled, 5), &delays, &ch, &mut rng).unwrap();
        for re in 0..4 {
            for (x, y) in a.re(re).iter().zip(b.re(re)) {
                assert!((alpha * x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_statistics() {
        let g = base();
        let sigma2 = 0.37;
        let ch = draw_channel(ChannelModel::Awgn, &g, sigma2, &mut rng_from_seed(0)).unwrap();
        let len = 25_000;
        let sig = signals_with(&[], len);
        let rx = transmit(&sig, &DelayProfile::zeros(6, 0), &ch, &mut rng_from_seed(11)).unwrap();
        let samples: Vec<C64> = (0..4).flat_map(|re| rx.re(re).to_vec()).collect();
        assert_eq!(samples.len(), 100_000);
        let var = samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / samples.len() as f64;
        assert!((var - sigma2).abs() < 0.02 * sigma2, "variance {var}");
    }

    /// Sample n of w_k contains user j exactly when d_j <= n < d_j + S + N.
    #[test]
    fn staggered_sample_composition() {
        let g = base();
        let ch = draw_channel(ChannelModel::Awgn, &g, 0.0, &mut rng_from_seed(0)).unwrap();
        let len = 4;
        // distinct powers of two per user make contributions identifiable
        let seqs: Vec<(usize, Vec<C64>)> = (0..6).map(|u| (u, vec![c((1u32 << u) as f64, 0.0); len])).collect();
        let delays = DelayProfile::new(vec![0, 2, 3, 1, 0, 3], 3).unwrap();
        let rx = transmit(&signals_with(&seqs, len), &delays, &ch, &mut rng_from_seed(0)).unwrap();
        for re in 0..4 {
            for n in 0..len + 3 {
                let mask = rx.re(re)[n].re as u32;
                for &u in g.users_on(re) {
                    let d = delays.delay(u);
                    let present = mask & (1 << u) != 0;
                    assert_eq!(present, d <= n && n < d + len, "re {re} n {n} user {u}");
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = base();
        let ch = draw_channel(ChannelModel::Awgn, &g, 0.0, &mut rng_from_seed(0)).unwrap();
        let mut sig = signals_with(&[], 3);
        sig[2][0].1.push(c(0.0, 0.0));
        assert!(transmit(&sig, &DelayProfile::zeros(6, 1), &ch, &mut rng_from_seed(0)).is_err());
        let sig = signals_with(&[], 3);
        assert!(transmit(&sig, &DelayProfile::zeros(5, 1), &ch, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn received_frame_json() {
        let rx = ReceivedFrame::new(vec![vec![c(1.0, 2.0)], vec![c(0.0, -1.0)]]).unwrap();
        let text = rx.to_json().unwrap();
        assert_eq!(text, r#"{"K":2,"w":[[[1.0,2.0]],[[0.0,-1.0]]]}"#);
        assert_eq!(ReceivedFrame::from_json(&text).unwrap(), rx);
        assert!(ReceivedFrame::new(vec![vec![c(0.0, 0.0)], vec![]]).is_err());
    }
}
