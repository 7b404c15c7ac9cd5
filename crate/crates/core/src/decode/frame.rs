use std::fmt::Write as _;

use super::align::{AlignmentSchedule, Phase};
use super::mcmc::{mcmc_decode, McmcParams};
use super::mpa::log_mpa;
use super::oracle::map_oracle;
use super::problem::{ActiveContext, SampleLlrs};
use crate::channel::{ChannelRealization, ReceivedFrame};
use crate::codebook::CodebookSet;
use crate::{Error, Result, C64};

/// Per-sample multiuser detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detector {
    LogMpa { iterations: usize },
    /// The seed of every sample stream is derived from the parameters' seed
    /// and the sample index.
    Mcmc(McmcParams),
    MapOracle,
}

impl Detector {
    pub fn detect(&self, ctx: &ActiveContext, sigma2: f64, stream: u64) -> Result<SampleLlrs> {
        match self {
            Detector::LogMpa { iterations } => Ok(log_mpa(ctx, sigma2, *iterations)?.llrs),
            Detector::Mcmc(p) => mcmc_decode(ctx, sigma2, &p.for_stream(stream)),
            Detector::MapOracle => map_oracle(ctx, sigma2),
        }
    }
}

/// Data-bit LLRs, `llrs[user][symbol][bit]`, symbol counted from the start of
/// the data part.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrTable {
    llrs: Vec<Vec<Vec<f64>>>,
}

impl LlrTable {
    pub fn new(users: usize, symbols: usize, bits: usize) -> Self {
        Self {
            llrs: vec![vec![vec![0.0; bits]; symbols]; users],
        }
    }

    pub fn num_users(&self) -> usize {
        self.llrs.len()
    }

    pub fn user(&self, j: usize) -> &[Vec<f64>] {
        &self.llrs[j]
    }

    pub fn get(&self, user: usize, symbol: usize, bit: usize) -> f64 {
        self.llrs[user][symbol][bit]
    }

    pub fn set_symbol(&mut self, user: usize, symbol: usize, llrs: &[f64]) {
        self.llrs[user][symbol].copy_from_slice(llrs);
    }

    pub fn all_finite(&self) -> bool {
        self.llrs.iter().flatten().flatten().all(|v| v.is_finite())
    }

    /// `user,symbol,bit,llr` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("user,symbol,bit,llr\n");
        for (j, syms) in self.llrs.iter().enumerate() {
            for (s, bits) in syms.iter().enumerate() {
                for (b, v) in bits.iter().enumerate() {
                    let _ = writeln!(out, "{j},{s},{b},{v:.12e}");
                }
            }
        }
        out
    }
}

/// Hard decisions per user as one bit stream, bit 0 where the LLR is
/// non-negative.
pub fn llrs_to_bits(table: &LlrTable) -> Vec<Vec<u8>> {
    table
        .llrs
        .iter()
        .map(|syms| syms.iter().flatten().map(|&v| u8::from(v < 0.0)).collect())
        .collect()
}

/// Detects every data symbol of the frame at the sample the schedule assigns
/// to it.
///
/// `pilots[j]` is user `j`'s full transmitted pilot (length `S`, energy
/// included). Pilot symbols present in a sample are cancelled before
/// detection.
pub fn decode_frame(
    rx: &ReceivedFrame,
    schedule: &AlignmentSchedule,
    pilots: &[Vec<C64>],
    codebooks: &CodebookSet,
    channel: &ChannelRealization,
    detector: &Detector,
) -> Result<LlrTable> {
    let graph = codebooks.graph();
    let s = schedule.pilot_len();
    if rx.num_res() != graph.num_res() || schedule.len() > rx.len() {
        return Err(Error::Dimension(format!(
            "received frame {}x{} does not cover a schedule of {} samples on K={}",
            rx.num_res(),
            rx.len(),
            schedule.len(),
            graph.num_res()
        )));
    }
    if pilots.len() != graph.num_users() || pilots.iter().any(|p| p.len() != s) {
        return Err(Error::Dimension(format!("expected {} pilots of length {s}", graph.num_users())));
    }
    let sigma2 = channel.noise_variance();
    let mut table = LlrTable::new(graph.num_users(), schedule.data_len(), codebooks.bits_per_symbol());
    let mut data_users = Vec::new();
    for (n, entries) in schedule.iter() {
        if !entries.iter().any(|e| e.phase == Phase::Data) {
            continue;
        }
        let mut y = rx.sample(n);
        data_users.clear();
        for e in entries {
            match e.phase {
                Phase::Pilot => {
                    for &re in graph.res_of(e.user) {
                        y[re] -= channel.coefficient(re, e.user) * pilots[e.user][e.symbol];
                    }
                }
                Phase::Data => data_users.push(e.user),
            }
        }
        let ctx = ActiveContext::from_codebooks(y, &data_users, codebooks, channel);
        let out = detector.detect(&ctx, sigma2, n as u64)?;
        for (e, llrs) in entries.iter().filter(|e| e.phase == Phase::Data).zip(&out.llrs) {
            table.set_symbol(e.user, e.symbol - s, llrs);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, transmit, ChannelModel};
    use crate::codebook::index_to_bits;
    use crate::decode::align::align;
    use crate::graph::FactorGraph;
    use crate::random::rng_from_seed;
    use crate::txchain::{generate_pilot, DelayProfile, UserFrame};
    use rand::Rng;

    struct Setup {
        set: CodebookSet,
        frames: Vec<UserFrame>,
        rx: ReceivedFrame,
        channel: ChannelRealization,
        delays: DelayProfile,
    }

    fn setup(s: usize, d: usize, n: usize, sigma2: f64, delays: Option<Vec<usize>>, seed: u64) -> Setup {
        let g = FactorGraph::build(4, 6, 2).unwrap();
        let set = CodebookSet::default_for(&g, 4).unwrap();
        let mut rng = rng_from_seed(seed);
        let delays = match delays {
            Some(v) => DelayProfile::new(v, d).unwrap(),
            None => DelayProfile::uniform(6, d, &mut rng),
        };
        let frames: Vec<UserFrame> = (0..6)
            .map(|_| {
                let pilot = generate_pilot(s - d, d, 1.0, &mut rng).unwrap();
                let data = (0..n).map(|_| rng.random_range(0..4)).collect();
                UserFrame::new(pilot, data, d).unwrap()
            })
            .collect();
        let channel = draw_channel(ChannelModel::Rayleigh, &g, sigma2, &mut rng).unwrap();
        let signals: Vec<_> = frames.iter().enumerate().map(|(j, f)| f.assemble(&set, j).unwrap()).collect();
        let rx = transmit(&signals, &delays, &channel, &mut rng).unwrap();
        Setup {
            set,
            frames,
            rx,
            channel,
            delays,
        }
    }

    fn errors(table: &LlrTable, frames: &[UserFrame]) -> usize {
        let bits = llrs_to_bits(table);
        frames
            .iter()
            .zip(&bits)
            .map(|(f, b)| {
                let truth: Vec<u8> = f.data_indices.iter().flat_map(|&i| index_to_bits(i, 2)).collect();
                truth.iter().zip(b).filter(|(a, b)| a != b).count()
            })
            .sum()
    }

    #[test]
    fn synchronous_frame_matches_per_sample_detection() {
        let (s, d, n) = (12, 4, 10);
        let st = setup(s, d, n, 0.3, Some(vec![0; 6]), 3);
        let sched = align(&st.delays, s, n, st.set.graph());
        let pilots: Vec<_> = st.frames.iter().map(|f| f.pilot.clone()).collect();
        let det = Detector::LogMpa { iterations: 6 };
        let table = decode_frame(&st.rx, &sched, &pilots, &st.set, &st.channel, &det).unwrap();
        for i in 0..n {
            let ctx = ActiveContext::from_codebooks(st.rx.sample(s + i), &[0, 1, 2, 3, 4, 5], &st.set, &st.channel);
            let direct = log_mpa(&ctx, 0.3, 6).unwrap().llrs;
            for j in 0..6 {
                assert_eq!(table.user(j)[i], direct.llrs[j]);
            }
        }
        assert!(table.all_finite());
    }

    #[test]
    fn noiseless_asynchronous_frame_decodes_without_errors() {
        let (s, d, n) = (14, 6, 20);
        for seed in 0..3 {
            let st = setup(s, d, n, 0.0, None, 100 + seed);
            let sched = align(&st.delays, s, n, st.set.graph());
            let pilots: Vec<_> = st.frames.iter().map(|f| f.pilot.clone()).collect();
            let table = decode_frame(&st.rx, &sched, &pilots, &st.set, &st.channel, &Detector::MapOracle).unwrap();
            assert_eq!(errors(&table, &st.frames), 0);
        }
    }

    #[test]
    fn mcmc_frame_replays() {
        let (s, d, n) = (10, 3, 6);
        let st = setup(s, d, n, 0.2, None, 8);
        let sched = align(&st.delays, s, n, st.set.graph());
        let pilots: Vec<_> = st.frames.iter().map(|f| f.pilot.clone()).collect();
        let det = Detector::Mcmc(McmcParams { seed: 4, ..McmcParams::default() });
        let a = decode_frame(&st.rx, &sched, &pilots, &st.set, &st.channel, &det).unwrap();
        let b = decode_frame(&st.rx, &sched, &pilots, &st.set, &st.channel, &det).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn bits_follow_llr_signs() {
        let mut t = LlrTable::new(1, 2, 2);
        t.set_symbol(0, 0, &[3.6, 0.0]);
        t.set_symbol(0, 1, &[-1.0, -0.0]);
        assert_eq!(llrs_to_bits(&t), vec![vec![0, 0, 1, 0]]);
        assert!(t.to_csv().starts_with("user,symbol,bit,llr\n0,0,0,3.6"));
    }
}
