//! Transmit side: pilots, frames and integer delays.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::CodebookSet;
use crate::random::complex_normal;
use crate::{Error, Result, C64};

/// Zero-tailed pilot: `P` i.i.d. complex Gaussian symbols followed by `D` zeros.
///
/// Each real component has variance `1 / (2P)` before scaling, so the
/// expected pilot energy equals `energy`.
pub fn generate_pilot<R: Rng + ?Sized>(p: usize, d: usize, energy: f64, rng: &mut R) -> Result<Vec<C64>> {
    if p == 0 {
        return Err(Error::InvalidParameter("pilot needs P >= 1 nonzero symbols".into()));
    }
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::InvalidParameter(format!("pilot energy {energy}")));
    }
    let per_symbol = energy / p as f64;
    let mut pilot: Vec<C64> = (0..p).map(|_| complex_normal(rng, per_symbol)).collect();
    pilot.resize(p + d, C64::new(0.0, 0.0));
    Ok(pilot)
}

/// `d` leading zeros, the sequence, then `max_delay - d` trailing zeros.
pub fn delay_pad(column: &[C64], d: usize, max_delay: usize) -> Result<Vec<C64>> {
    if d > max_delay {
        return Err(Error::DelayOutOfRange { delay: d, max: max_delay });
    }
    let zero = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(column.len() + max_delay);
    out.resize(d, zero);
    out.extend_from_slice(column);
    out.resize(column.len() + max_delay, zero);
    Ok(out)
}

/// One user's frame: zero-tailed pilot followed by `N` data symbols, stored
/// as codebook indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFrame {
    #[serde(with = "crate::serde_complex::vec")]
    pub pilot: Vec<C64>,
    pub data_indices: Vec<usize>,
}

impl UserFrame {
    /// Checks the zero tail of length `max_delay` and that at least one
    /// pilot symbol precedes it.
    pub fn new(pilot: Vec<C64>, data_indices: Vec<usize>, max_delay: usize) -> Result<Self> {
        if pilot.len() <= max_delay {
            return Err(Error::InvalidParameter(format!(
                "pilot length {} must exceed the maximum delay {max_delay}",
                pilot.len()
            )));
        }
        if pilot[pilot.len() - max_delay..].iter().any(|c| *c != C64::new(0.0, 0.0)) {
            return Err(Error::InvalidParameter("pilot tail is not zero".into()));
        }
        Ok(Self { pilot, data_indices })
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot.len()
    }

    pub fn data_len(&self) -> usize {
        self.data_indices.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-RE scalar sequences `(re, pilot ++ data_k)` for every RE used by `user`.
///
/// The pilot is the same scalar sequence on every occupied RE; the data part
/// on RE `k` is the `k`-th component of each codeword.
pub fn assemble_frame(
    pilot: &[C64],
    data_codewords: &[Vec<C64>],
    codebooks: &CodebookSet,
    user: usize,
) -> Result<Vec<(usize, Vec<C64>)>> {
    let cb = codebooks.user(user);
    for cw in data_codewords {
        cb.index_of(cw)?;
    }
    Ok(codebooks
        .graph()
        .res_of(user)
        .iter()
        .map(|&re| {
            let mut seq = Vec::with_capacity(pilot.len() + data_codewords.len());
            seq.extend_from_slice(pilot);
            seq.extend(data_codewords.iter().map(|cw| cw[re]));
            (re, seq)
        })
        .collect())
}

impl UserFrame {
    /// [`assemble_frame`] for a frame holding codebook indices.
    pub fn assemble(&self, codebooks: &CodebookSet, user: usize) -> Result<Vec<(usize, Vec<C64>)>> {
        let cb = codebooks.user(user);
        let cws = self
            .data_indices
            .iter()
            .map(|&i| {
                if i < cb.size() {
                    Ok(cb.codeword(i).to_vec())
                } else {
                    Err(Error::NotACodeword { user })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        assemble_frame(&self.pilot, &cws, codebooks, user)
    }
}

/// Discrete per-user delays bounded by `max_delay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayProfile {
    delays: Vec<usize>,
    max_delay: usize,
    /// Symbol period in seconds; metadata only.
    symbol_period: f64,
}

impl DelayProfile {
    pub fn new(delays: Vec<usize>, max_delay: usize) -> Result<Self> {
        if let Some(&d) = delays.iter().find(|&&d| d > max_delay) {
            return Err(Error::DelayOutOfRange { delay: d, max: max_delay });
        }
        Ok(Self {
            delays,
            max_delay,
            symbol_period: 1.0,
        })
    }

    pub fn with_symbol_period(mut self, ts: f64) -> Self {
        self.symbol_period = ts;
        self
    }

    pub fn zeros(users: usize, max_delay: usize) -> Self {
        Self {
            delays: vec![0; users],
            max_delay,
            symbol_period: 1.0,
        }
    }

    /// Delays drawn uniformly from `{0, ..., max_delay}`.
    pub fn uniform<R: Rng + ?Sized>(users: usize, max_delay: usize, rng: &mut R) -> Self {
        Self {
            delays: (0..users).map(|_| rng.random_range(0..=max_delay)).collect(),
            max_delay,
            symbol_period: 1.0,
        }
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn delay(&self, user: usize) -> usize {
        self.delays[user]
    }

    pub fn max_delay(&self) -> usize {
        self.max_delay
    }

    pub fn num_users(&self) -> usize {
        self.delays.len()
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    /// Continuous delay `d_j * Ts` of a user, in seconds.
    pub fn delay_seconds(&self, user: usize) -> f64 {
        self.delays[user] as f64 * self.symbol_period
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FactorGraph;
    use crate::random::rng_from_seed;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn pilot_has_zero_tail() {
        let mut rng = rng_from_seed(1);
        let p = generate_pilot(4, 2, 1.0, &mut rng).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p[4], c(0.0));
        assert_eq!(p[5], c(0.0));
        assert!(p[..4].iter().all(|x| x.norm() > 0.0));
        assert!(generate_pilot(0, 2, 1.0, &mut rng).is_err());
    }

    #[test]
    fn pilot_energy_monte_carlo() {
        let mut rng = rng_from_seed(2);
        let trials = 100_000;
        for energy in [1.0, 5.0] {
            let mean: f64 = (0..trials)
                .map(|_| {
                    generate_pilot(14, 42, energy, &mut rng)
                        .unwrap()
                        .iter()
                        .map(|x| x.norm_sqr())
                        .sum::<f64>()
                })
                .sum::<f64>()
                / trials as f64;
            assert!((mean - energy).abs() < 0.01 * energy, "energy {energy}: mean {mean}");
        }
    }

    #[test]
    fn delay_padding() {
        let col = [c(1.0), c(2.0), c(3.0)];
        assert_eq!(delay_pad(&col, 0, 2).unwrap(), vec![c(1.0), c(2.0), c(3.0), c(0.0), c(0.0)]);
        assert_eq!(delay_pad(&col, 2, 2).unwrap(), vec![c(0.0), c(0.0), c(1.0), c(2.0), c(3.0)]);
        assert_eq!(delay_pad(&col, 1, 5).unwrap().len(), col.len() + 5);
        assert!(matches!(delay_pad(&col, 3, 2), Err(Error::DelayOutOfRange { delay: 3, max: 2 })));
    }

    /// The first S padded samples always contain the whole nonzero pilot.
    #[test]
    fn first_window_holds_entire_pilot() {
        let mut rng = rng_from_seed(3);
        let (p, d) = (5, 4);
        let pilot = generate_pilot(p, d, 1.0, &mut rng).unwrap();
        for delay in 0..=d {
            let padded = delay_pad(&pilot, delay, d).unwrap();
            assert_eq!(&padded[delay..delay + p], &pilot[..p]);
            assert!(delay + p <= p + d);
        }
    }

    #[test]
    fn assemble_places_pilot_and_codeword_components() {
        let g = FactorGraph::build(4, 6, 2).unwrap();
        let set = CodebookSet::default_for(&g, 4).unwrap();
        let pilot = vec![c(0.5), c(-0.5), c(0.0)];
        let cw = set.user(0).codeword(3).to_vec();
        let seqs = assemble_frame(&pilot, &[cw.clone()], &set, 0).unwrap();
        assert_eq!(seqs.len(), g.dv());
        assert_eq!(seqs[0], (0, vec![c(0.5), c(-0.5), c(0.0), cw[0]]));
        assert_eq!(seqs[1], (1, vec![c(0.5), c(-0.5), c(0.0), cw[1]]));

        // a codeword of another user is rejected
        let foreign = set.user(5).codeword(0).to_vec();
        assert!(assemble_frame(&pilot, &[foreign], &set, 0).is_err());
    }

    #[test]
    fn assembled_data_is_from_user_constellation() {
        let g = FactorGraph::build(4, 6, 2).unwrap();
        let set = CodebookSet::default_for(&g, 4).unwrap();
        let mut rng = rng_from_seed(9);
        for user in 0..6 {
            let pilot = generate_pilot(3, 1, 1.0, &mut rng).unwrap();
            let idx: Vec<usize> = (0..20).map(|_| rng.random_range(0..4)).collect();
            let frame = UserFrame::new(pilot, idx, 1).unwrap();
            for (re, seq) in frame.assemble(&set, user).unwrap() {
                let constellation: Vec<C64> = set.user(user).codewords().iter().map(|cw| cw[re]).collect();
                for x in &seq[frame.pilot_len()..] {
                    assert!(constellation.iter().any(|p| (p - x).norm() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn frame_json_shape() {
        let f = UserFrame::new(vec![c(1.0), C64::new(0.0, -2.0), c(0.0)], vec![3, 1], 1).unwrap();
        let text = f.to_json().unwrap();
        assert_eq!(text, r#"{"pilot":[[1.0,0.0],[0.0,-2.0],[0.0,0.0]],"data_indices":[3,1]}"#);
        assert_eq!(UserFrame::from_json(&text).unwrap(), f);
        assert!(UserFrame::new(vec![c(1.0), c(1.0)], vec![], 1).is_err());
    }

    #[test]
    fn delay_profile_bounds() {
        assert!(DelayProfile::new(vec![0, 3], 2).is_err());
        let p = DelayProfile::new(vec![0, 2], 2).unwrap().with_symbol_period(1e-3);
        assert!((p.delay_seconds(1) - 2e-3).abs() < 1e-15);
        let mut rng = rng_from_seed(4);
        let u = DelayProfile::uniform(1000, 7, &mut rng);
        assert!(u.delays().iter().all(|&d| d <= 7));
        assert!(u.delays().contains(&0) && u.delays().contains(&7));
    }
}
