use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::config::{EstimatorKind, ExperimentConfig};
use crate::channel::{draw_channel, noise_variance_from_snr_db, transmit};
use crate::codebook::{index_to_bits, CodebookSet};
use crate::decode::{align, decode_frame, llrs_to_bits};
use crate::delayest::{delay_mae, estimate_delays, DelayEstimator};
use crate::graph::FactorGraph;
use crate::random::{derive_seed, rng_from_seed};
use crate::txchain::{generate_pilot, DelayProfile, UserFrame};
use crate::{Error, Result, C64};

/// Outcome of one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub snr_db: f64,
    pub pilot_energy: f64,
    pub trial: usize,
    pub mae: Option<f64>,
    /// All users' delays recovered exactly.
    pub exact: Option<bool>,
    pub ber: Option<f64>,
    /// Mean solver iterations over the REs.
    pub iterations: Option<f64>,
    pub wall_time: f64,
}

/// Everything drawn for one trial before the channel noise.
struct TrialDraw {
    delays: DelayProfile,
    /// Unit-energy nonzero pilots, as known to the receiver.
    pilots: Vec<Vec<C64>>,
    data: Vec<Vec<usize>>,
}

/// Seed of trial `trial`. Shared by every grid point so that points differ
/// only in SNR and pilot energy (common random numbers).
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[trial as u64])
}

fn setup(cfg: &ExperimentConfig) -> Result<CodebookSet> {
    cfg.validate()?;
    let graph = FactorGraph::build(cfg.system.k, cfg.system.j, cfg.system.dv)?;
    CodebookSet::default_for(&graph, cfg.system.m)
}

/// Runs one frame: draws delays, pilots and data, transmits over the
/// configured channel and, depending on `with_data`, estimates delays only or
/// also decodes the data part.
fn run_trial(
    cfg: &ExperimentConfig,
    codebooks: &CodebookSet,
    snr_db: f64,
    energy: f64,
    trial: usize,
    with_data: bool,
) -> Result<TrialResult> {
    let start = Instant::now();
    let graph = codebooks.graph();
    let users = graph.num_users();
    let frame = cfg.frame;
    let p = frame.pilot_nonzero();
    let seed = trial_seed(cfg.seed, trial);
    let mut rng = rng_from_seed(seed);

    let draw = {
        let delays = DelayProfile::uniform(users, frame.d, &mut rng);
        let pilots = (0..users)
            .map(|_| generate_pilot(p, 0, 1.0, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let data = (0..users)
            .map(|_| (0..frame.n).map(|_| rng.random_range(0..codebooks.size())).collect())
            .collect();
        TrialDraw { delays, pilots, data }
    };
    let sigma2 = noise_variance_from_snr_db(snr_db);
    let channel = draw_channel(cfg.channel, graph, sigma2, &mut rng)?;

    let tx_delays = match cfg.estimator {
        EstimatorKind::Synchronous => DelayProfile::zeros(users, frame.d),
        _ => draw.delays.clone(),
    };
    let amp = energy.sqrt();
    let frames = (0..users)
        .map(|j| {
            let mut pilot: Vec<C64> = draw.pilots[j].iter().map(|v| v * amp).collect();
            pilot.resize(frame.s, C64::new(0.0, 0.0));
            let data = if with_data { draw.data[j].clone() } else { Vec::new() };
            UserFrame::new(pilot, data, frame.d)
        })
        .collect::<Result<Vec<_>>>()?;
    let signals = frames
        .iter()
        .enumerate()
        .map(|(j, f)| f.assemble(codebooks, j))
        .collect::<Result<Vec<_>>>()?;
    let mut noise_rng = rng_from_seed(derive_seed(seed, &[1]));
    let rx = transmit(&signals, &tx_delays, &channel, &mut noise_rng)?;

    let mut result = TrialResult {
        snr_db,
        pilot_energy: energy,
        trial,
        mae: None,
        exact: None,
        ber: None,
        iterations: None,
        wall_time: 0.0,
    };
    let rx_delays = match cfg.estimator {
        EstimatorKind::Lasso | EstimatorKind::LeastSquares => {
            let estimator = match cfg.estimator {
                EstimatorKind::Lasso => DelayEstimator::Lasso(cfg.solver.options(sigma2.sqrt())),
                _ => DelayEstimator::LeastSquares,
            };
            let (est, diag) = estimate_delays(&rx, &draw.pilots, graph, frame.d, &estimator)?;
            let mae = delay_mae(&est, &tx_delays)?;
            result.mae = Some(mae);
            result.exact = Some(est.delays() == tx_delays.delays());
            result.iterations = Some(diag.iter().map(|e| e.iterations as f64).sum::<f64>() / diag.len() as f64);
            est
        }
        EstimatorKind::Genie | EstimatorKind::Synchronous => tx_delays.clone(),
    };

    if with_data {
        let schedule = align(&rx_delays, frame.s, frame.n, graph);
        let pilots: Vec<Vec<C64>> = frames.iter().map(|f| f.pilot.clone()).collect();
        let detector = cfg.detector.detector(derive_seed(seed, &[2]));
        let table = decode_frame(&rx, &schedule, &pilots, codebooks, &channel, &detector)?;
        let decided = llrs_to_bits(&table);
        let nb = codebooks.bits_per_symbol();
        let mut errors = 0usize;
        let mut total = 0usize;
        for (truth, got) in draw.data.iter().zip(&decided) {
            let bits: Vec<u8> = truth.iter().flat_map(|&i| index_to_bits(i, nb)).collect();
            errors += bits.iter().zip(got).filter(|(a, b)| a != b).count();
            total += bits.len();
        }
        result.ber = Some(if total == 0 { 0.0 } else { errors as f64 / total as f64 });
    }
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

fn grid(cfg: &ExperimentConfig) -> Vec<(f64, f64, usize)> {
    let mut out = Vec::with_capacity(cfg.snr_db.len() * cfg.pilot_energy.len() * cfg.trials);
    for &snr in &cfg.snr_db {
        for &e in &cfg.pilot_energy {
            for t in 0..cfg.trials {
                out.push((snr, e, t));
            }
        }
    }
    out
}

/// Delay-estimation sweep over `snr_db x pilot_energy`.
pub fn run_mae_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    if !cfg.estimator.estimates() {
        return Err(Error::Config(
            "the MAE experiment needs estimator lasso or least_squares".into(),
        ));
    }
    let codebooks = setup(cfg)?;
    grid(cfg)
        .into_par_iter()
        .map(|(snr, e, t)| run_trial(cfg, &codebooks, snr, e, t, false))
        .collect()
}

/// Bit-error-rate sweep over `snr_db x pilot_energy`.
pub fn run_ber_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    let codebooks = setup(cfg)?;
    grid(cfg)
        .into_par_iter()
        .map(|(snr, e, t)| run_trial(cfg, &codebooks, snr, e, t, true))
        .collect()
}
