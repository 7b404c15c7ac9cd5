//! Empirical checks of the recovery theory for shift dictionaries.
//!
//! Gram-matrix structure, Gershgorin containment, exhaustive restricted
//! isometry constants, the closed-form RIP failure bound and Monte-Carlo
//! checks of the two Gaussian concentration bounds behind it.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delayest::{stack_shift_matrices, Dictionary, ShiftBlock};
use crate::random::{complex_normal, derive_seed, rng_from_seed};
use crate::txchain::generate_pilot;
use crate::{Error, Result, C64};

/// Tolerance on eigenvalue-to-disc distance in [`gershgorin_check`].
pub const GERSHGORIN_TOL: f64 = 1e-9;
/// Largest number of column subsets [`rip_delta_exhaustive`] will enumerate.
pub const RIP_SUBSET_GUARD: u128 = 1_000_000;

const HERMITIAN_TOL: f64 = 1e-12;

/// `G = T^H T` and its summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GramReport {
    pub gram: DMatrix<C64>,
    /// `max_i |g_ii - 1|`.
    pub diag_deviation: f64,
    /// `max_{i != l} |g_il|`.
    pub max_offdiag: f64,
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
    pub eig_min: f64,
    pub eig_max: f64,
}

pub fn gram<T: Dictionary + ?Sized>(t: &T) -> GramReport {
    let dense = t.to_dense();
    let g = dense.adjoint() * &dense;
    let n = g.nrows();
    let centers: Vec<f64> = (0..n).map(|i| g[(i, i)].re).collect();
    let radii = disc_radii(&g);
    let mut max_offdiag: f64 = 0.0;
    for i in 0..n {
        for l in 0..n {
            if i != l {
                max_offdiag = max_offdiag.max(g[(i, l)].norm());
            }
        }
    }
    let diag_deviation = centers.iter().fold(0.0f64, |m, c| m.max((c - 1.0).abs()));
    let (eig_min, eig_max) = if n == 0 {
        (0.0, 0.0)
    } else {
        hermitian_extremes(&g)
    };
    GramReport {
        gram: g,
        diag_deviation,
        max_offdiag,
        centers,
        radii,
        eig_min,
        eig_max,
    }
}

impl GramReport {
    /// `max |G - G^H|`.
    pub fn hermitian_error(&self) -> f64 {
        hermitian_error(&self.gram)
    }
}

fn hermitian_error(g: &DMatrix<C64>) -> f64 {
    (g - g.adjoint()).iter().fold(0.0f64, |m, v| m.max(v.norm()))
}

fn disc_radii(g: &DMatrix<C64>) -> Vec<f64> {
    (0..g.nrows())
        .map(|i| (0..g.ncols()).filter(|&l| l != i).map(|l| g[(i, l)].norm()).sum())
        .collect()
}

fn hermitian_extremes(g: &DMatrix<C64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    (eig.min(), eig.max())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GershgorinReport {
    pub eigenvalues: Vec<C64>,
    /// Disc centres `g_ii` (complex for a general matrix).
    pub centers: Vec<C64>,
    pub radii: Vec<f64>,
    /// Largest distance from an eigenvalue to the union of discs (0 inside).
    pub worst_excess: f64,
    pub contained: bool,
}

/// Eigenvalues of `g` and its Gershgorin discs; `contained` when every
/// eigenvalue lies in the union of discs up to [`GERSHGORIN_TOL`].
pub fn gershgorin_check(g: &DMatrix<C64>) -> Result<GershgorinReport> {
    if !g.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", g.nrows(), g.ncols())));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let n = g.nrows();
    let eigenvalues: Vec<C64> = if n == 0 {
        Vec::new()
    } else if hermitian_error(g) <= HERMITIAN_TOL {
        SymmetricEigen::new(g.clone())
            .eigenvalues
            .iter()
            .map(|&v| C64::new(v, 0.0))
            .collect()
    } else {
        g.clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::InvalidParameter("Schur form is not triangular".into()))?
            .iter()
            .copied()
            .collect()
    };
    let centers: Vec<C64> = (0..n).map(|i| g[(i, i)]).collect();
    let radii = disc_radii(g);
    let worst_excess = eigenvalues
        .iter()
        .map(|ev| {
            centers
                .iter()
                .zip(&radii)
                .map(|(c, r)| ((ev - c).norm() - r).max(0.0))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    Ok(GershgorinReport {
        eigenvalues,
        centers,
        radii,
        worst_excess,
        contained: worst_excess <= GERSHGORIN_TOL,
    })
}

/// Empirical restricted isometry constant at one sparsity level.
#[derive(Debug, Clone, PartialEq)]
pub struct RipEstimate {
    pub sparsity: usize,
    pub delta_hat: f64,
    pub subsets: u128,
    pub target: Option<f64>,
}

impl RipEstimate {
    pub fn with_target(mut self, delta: f64) -> Self {
        self.target = Some(delta);
        self
    }

    /// `delta_hat <= target`, when a target is set.
    pub fn passes(&self) -> Option<bool> {
        self.target.map(|d| self.delta_hat <= d)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// Worst `max(|lambda_max - 1|, |1 - lambda_min|)` over the Gram matrices of
/// every `sparsity`-column submatrix of `t`.
pub fn rip_delta_exhaustive<T: Dictionary + ?Sized>(t: &T, sparsity: usize) -> Result<RipEstimate> {
    let cols = t.cols();
    if sparsity == 0 || sparsity > cols {
        return Err(Error::InvalidParameter(format!("sparsity {sparsity} for {cols} columns")));
    }
    let subsets = binomial(cols, sparsity);
    if subsets > RIP_SUBSET_GUARD {
        return Err(Error::TooManyCombinations {
            count: subsets,
            limit: RIP_SUBSET_GUARD,
        });
    }
    let dense = t.to_dense();
    let g = dense.adjoint() * &dense;
    let mut idx: Vec<usize> = (0..sparsity).collect();
    let mut delta_hat: f64 = 0.0;
    loop {
        let sub = DMatrix::from_fn(sparsity, sparsity, |a, b| g[(idx[a], idx[b])]);
        let (lo, hi) = hermitian_extremes(&sub);
        delta_hat = delta_hat.max((hi - 1.0).abs()).max((1.0 - lo).abs());

        // next combination in lexicographic order
        let mut i = sparsity;
        loop {
            if i == 0 {
                return Ok(RipEstimate {
                    sparsity,
                    delta_hat,
                    subsets,
                    target: None,
                });
            }
            i -= 1;
            if idx[i] < cols - sparsity + i {
                break;
            }
        }
        idx[i] += 1;
        for l in i + 1..sparsity {
            idx[l] = idx[l - 1] + 1;
        }
    }
}

/// Closed-form probability that the stacked shift dictionary fails the RIP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremBound {
    /// Unclamped `(4 eta (eta+1)(P-1) + 2 eta^2) exp(-P delta^2 / (45 (S-1)^2))`.
    pub raw: f64,
    /// `c1`, reported at `delta^2 / 90`.
    pub c1: f64,
    /// `c2 = sqrt((delta^2 - 45 c1) / 45)`.
    pub c2: f64,
}

impl TheoremBound {
    /// Probability bound clamped to 1.
    pub fn value(&self) -> f64 {
        self.raw.min(1.0)
    }

    pub fn is_vacuous(&self) -> bool {
        self.raw >= 1.0
    }
}

pub fn theorem1_bound(p: usize, eta: usize, sparsity: usize, delta: f64) -> Result<TheoremBound> {
    if p < 2 || eta == 0 {
        return Err(Error::InvalidParameter(format!("P = {p}, eta = {eta}")));
    }
    if sparsity < 2 {
        return Err(Error::InvalidParameter("the bound needs sparsity >= 2".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 1)")));
    }
    let (pf, e, s1) = (p as f64, eta as f64, (sparsity - 1) as f64);
    let coeff = 4.0 * e * (e + 1.0) * (pf - 1.0) + 2.0 * e * e;
    let raw = coeff * (-pf * delta * delta / (45.0 * s1 * s1)).exp();
    let c1 = delta * delta / 90.0;
    let c2 = ((delta * delta - 45.0 * c1) / 45.0).sqrt();
    Ok(TheoremBound { raw, c1, c2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    /// `|sum |z_i|^2 - 2 P sigma^2| >= 4 sigma^2 sqrt(2 P t)`, bound `2 e^{-t}`.
    Lemma3,
    /// `|sum conj(z_i) w_i| >= t`, bound `4 exp(-t^2 / (16 sigma^2 (2 P sigma^2 + t/4)))`.
    Lemma4,
}

impl Lemma {
    pub fn bound(&self, p: usize, sigma2: f64, t: f64) -> f64 {
        match self {
            Lemma::Lemma3 => 2.0 * (-t).exp(),
            Lemma::Lemma4 => {
                4.0 * (-t * t / (16.0 * sigma2 * (2.0 * p as f64 * sigma2 + t / 4.0))).exp()
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Lemma::Lemma3 => "lemma3",
            Lemma::Lemma4 => "lemma4",
        }
    }
}

/// Monte-Carlo estimate of a tail probability against its analytic bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub empirical: f64,
    pub bound: f64,
    /// `3 sqrt(b (1 - b) / trials)` with `b` the bound clamped to `[0, 1]`.
    pub margin: f64,
    pub trials: usize,
}

impl TailReport {
    pub fn violated(&self) -> bool {
        self.empirical > self.bound + self.margin
    }
}

/// Minimum Monte-Carlo size accepted by [`lemma_tail_mc`].
pub const MIN_TAIL_TRIALS: usize = 10_000;

/// Draws the lemma's statistic `trials` times with i.i.d. complex Gaussians of
/// variance `sigma2` per real component.
pub fn lemma_tail_mc(
    lemma: Lemma,
    p: usize,
    sigma2: f64,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<TailReport> {
    if trials < MIN_TAIL_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "{trials} trials; at least {MIN_TAIL_TRIALS} required"
        )));
    }
    if p == 0 || !(sigma2 > 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("P = {p}, sigma2 = {sigma2}, t = {t}")));
    }
    let pf = p as f64;
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(seed, &[trial as u64]));
            let hit = match lemma {
                Lemma::Lemma3 => {
                    let energy: f64 = (0..p).map(|_| complex_normal(&mut rng, 2.0 * sigma2).norm_sqr()).sum();
                    (energy - 2.0 * pf * sigma2).abs() >= 4.0 * sigma2 * (2.0 * pf * t).sqrt()
                }
                Lemma::Lemma4 => {
                    let mut acc = C64::new(0.0, 0.0);
                    for _ in 0..p {
                        let z = complex_normal(&mut rng, 2.0 * sigma2);
                        let w = complex_normal(&mut rng, 2.0 * sigma2);
                        acc += z.conj() * w;
                    }
                    acc.norm() >= t
                }
            };
            usize::from(hit)
        })
        .sum();
    let bound = lemma.bound(p, sigma2, t);
    let b = bound.clamp(0.0, 1.0);
    Ok(TailReport {
        empirical: hits as f64 / trials as f64,
        bound,
        margin: 3.0 * (b * (1.0 - b) / trials as f64).sqrt(),
        trials,
    })
}

/// Stacked shift dictionary of `eta` users with fresh unit-energy pilots.
pub fn random_dictionary(p: usize, eta: usize, max_delay: usize, seed: u64) -> Result<DMatrix<C64>> {
    let mut rng = rng_from_seed(seed);
    let blocks = (0..eta)
        .map(|u| {
            let pilot = generate_pilot(p, 0, 1.0, &mut rng)?;
            Ok(ShiftBlock::new(u, pilot, max_delay))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_shift_matrices(blocks)?.to_dense())
}

/// Frequency of `delta_hat > delta` over random dictionaries.
pub fn rip_failure_rate(
    p: usize,
    eta: usize,
    max_delay: usize,
    sparsity: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("no trials".into()));
    }
    let fails = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let t = random_dictionary(p, eta, max_delay, derive_seed(seed, &[trial as u64]))?;
            Ok(usize::from(rip_delta_exhaustive(&t, sparsity)?.delta_hat > delta))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fails.iter().sum::<usize>() as f64 / trials as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GershgorinSweep {
    pub matrices: usize,
    /// Gram matrices are `cols x cols`, built from `rows x cols` Gaussian draws.
    pub rows: usize,
    pub cols: usize,
    /// Also test this many non-Hermitian Gaussian matrices.
    #[serde(default)]
    pub general: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSweep {
    pub p: usize,
    pub thresholds: Vec<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipSweep {
    pub eta: usize,
    pub max_delay: usize,
    pub sparsity: usize,
    pub delta: f64,
    pub pilot_lengths: Vec<usize>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSweep {
    pub p: usize,
    pub draws: usize,
}

/// Configuration of the `ripcheck` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipCheckConfig {
    pub seed: u64,
    pub gershgorin: GershgorinSweep,
    pub gram_diagonal: DiagonalSweep,
    pub lemma3: TailSweep,
    pub lemma4: TailSweep,
    pub rip: RipSweep,
}

impl Default for RipCheckConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            gershgorin: GershgorinSweep {
                matrices: 100,
                rows: 12,
                cols: 8,
                general: 100,
            },
            gram_diagonal: DiagonalSweep { p: 14, draws: 10_000 },
            lemma3: TailSweep {
                p: 100,
                thresholds: vec![1.0, 2.0, 4.0],
                trials: 100_000,
            },
            lemma4: TailSweep {
                p: 100,
                thresholds: vec![0.5, 0.6376, 0.8],
                trials: 100_000,
            },
            rip: RipSweep {
                eta: 3,
                max_delay: 1,
                sparsity: 2,
                delta: 0.5,
                pilot_lengths: vec![100, 1000, 2500, 3000, 5000],
                trials: 200,
            },
        }
    }
}

impl RipCheckConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Vacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }
}

/// One row of the ripcheck report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    /// `key=value` pairs.
    pub params: Vec<(String, String)>,
    pub empirical: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

fn row(check: &str, params: &[(&str, String)], empirical: f64, bound: f64, verdict: Verdict) -> CheckRow {
    CheckRow {
        check: check.into(),
        params: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        empirical,
        bound,
        verdict,
    }
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs every check of the configuration, in a fixed order.
pub fn run_ripcheck(cfg: &RipCheckConfig) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();

    let g = &cfg.gershgorin;
    let hermitian = (0..g.matrices)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, &[1, i as u64]));
            let a = DMatrix::from_fn(g.rows, g.cols, |_, _| complex_normal(&mut rng, 1.0 / g.rows as f64));
            gershgorin_check(&(a.adjoint() * &a))
        })
        .collect::<Result<Vec<_>>>()?;
    let misses = hermitian.iter().filter(|r| !r.contained).count();
    rows.push(row(
        "gershgorin_gram",
        &[("matrices", g.matrices.to_string()), ("size", g.cols.to_string())],
        misses as f64,
        0.0,
        pass_if(misses == 0),
    ));
    if g.general > 0 {
        let general = (0..g.general)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from_seed(derive_seed(cfg.seed, &[2, i as u64]));
                gershgorin_check(&DMatrix::from_fn(g.cols, g.cols, |_, _| complex_normal(&mut rng, 1.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        let misses = general.iter().filter(|r| !r.contained).count();
        rows.push(row(
            "gershgorin_general",
            &[("matrices", g.general.to_string()), ("size", g.cols.to_string())],
            misses as f64,
            0.0,
            pass_if(misses == 0),
        ));
    }

    let d = &cfg.gram_diagonal;
    let mean = (0..d.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, &[3, i as u64]));
            generate_pilot(d.p, 0, 1.0, &mut rng).map(|s| s.iter().map(|v| v.norm_sqr()).sum::<f64>())
        })
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum::<f64>()
        / d.draws.max(1) as f64;
    rows.push(row(
        "gram_diagonal_mean",
        &[("p", d.p.to_string()), ("draws", d.draws.to_string()), ("tolerance", "0.02".into())],
        mean,
        1.0,
        pass_if((mean - 1.0).abs() <= 0.02),
    ));

    for (lemma, sweep, stream) in [(Lemma::Lemma3, &cfg.lemma3, 4u64), (Lemma::Lemma4, &cfg.lemma4, 5)] {
        let sigma2 = 1.0 / (2.0 * sweep.p as f64);
        for (i, &t) in sweep.thresholds.iter().enumerate() {
            let rep = lemma_tail_mc(lemma, sweep.p, sigma2, t, sweep.trials, derive_seed(cfg.seed, &[stream, i as u64]))?;
            rows.push(row(
                lemma.name(),
                &[
                    ("p", sweep.p.to_string()),
                    ("t", t.to_string()),
                    ("trials", sweep.trials.to_string()),
                ],
                rep.empirical,
                rep.bound,
                pass_if(!rep.violated()),
            ));
        }
    }

    let r = &cfg.rip;
    for (i, &p) in r.pilot_lengths.iter().enumerate() {
        let bound = theorem1_bound(p, r.eta, r.sparsity, r.delta)?;
        let rate = rip_failure_rate(p, r.eta, r.max_delay, r.sparsity, r.delta, r.trials, derive_seed(cfg.seed, &[6, i as u64]))?;
        let verdict = if bound.is_vacuous() {
            Verdict::Vacuous
        } else {
            let b = bound.value();
            pass_if(rate <= b + 3.0 * (b * (1.0 - b) / r.trials as f64).sqrt())
        };
        rows.push(row(
            "rip_failure",
            &[
                ("p", p.to_string()),
                ("eta", r.eta.to_string()),
                ("d", r.max_delay.to_string()),
                ("sparsity", r.sparsity.to_string()),
                ("delta", r.delta.to_string()),
                ("trials", r.trials.to_string()),
            ],
            rate,
            bound.raw,
            verdict,
        ));
    }
    Ok(rows)
}

/// `check,params,empirical,bound,verdict` with `params` as `;`-joined
/// `key=value` pairs.
pub fn ripcheck_csv(rows: &[CheckRow]) -> String {
    let mut out = String::from("check,params,empirical,bound,verdict\n");
    for r in rows {
        let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(
            out,
            "{},{},{:.9e},{:.9e},{}",
            r.check,
            params.join(";"),
            r.empirical,
            r.bound,
            r.verdict.as_str()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delayest::shift_matrix;

    fn real(rows: &[&[f64]]) -> DMatrix<C64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| C64::new(rows[i][j], 0.0))
    }

    #[test]
    fn orthonormal_columns_give_identity_gram() {
        let t = real(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        let r = gram(&t);
        assert_eq!(r.gram, DMatrix::identity(2, 2));
        assert_eq!(r.diag_deviation, 0.0);
        assert_eq!(r.max_offdiag, 0.0);
        assert!((r.eig_min - 1.0).abs() < 1e-12 && (r.eig_max - 1.0).abs() < 1e-12);
        for s in 1..=2 {
            assert!(rip_delta_exhaustive(&t, s).unwrap().delta_hat < 1e-12);
        }
        let single = gram(&real(&[&[1.0]]));
        assert_eq!(single.gram, real(&[&[1.0]]));
    }

    #[test]
    fn shift_block_gram_has_constant_diagonal() {
        let mut rng = rng_from_seed(1);
        let pilot = generate_pilot(9, 0, 1.0, &mut rng).unwrap();
        let energy: f64 = pilot.iter().map(|v| v.norm_sqr()).sum();
        let r = gram(&shift_matrix(&pilot, 5));
        assert_eq!(r.centers.len(), 6);
        for c in &r.centers {
            assert!((c - energy).abs() < 1e-12);
        }
        assert!(r.hermitian_error() <= 1e-12);
    }

    #[test]
    fn two_by_two_boundary_case() {
        let g = real(&[&[1.0, 0.3], &[0.3, 1.0]]);
        let rep = gershgorin_check(&g).unwrap();
        let mut ev: Vec<f64> = rep.eigenvalues.iter().map(|v| v.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.7).abs() < 1e-12 && (ev[1] - 1.3).abs() < 1e-12);
        assert_eq!(rep.radii, vec![0.3, 0.3]);
        assert!(rep.contained);
    }

    #[test]
    fn diagonal_matrix_eigenvalues_sit_at_centres() {
        let g = real(&[&[2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 0.5]]);
        let rep = gershgorin_check(&g).unwrap();
        assert!(rep.radii.iter().all(|&r| r == 0.0));
        assert!(rep.contained);
        assert_eq!(rep.worst_excess, 0.0);
    }

    #[test]
    fn general_matrices_use_complex_eigenvalues() {
        // rotation: eigenvalues +-i, discs centred 0 radius 1
        let g = real(&[&[0.0, -1.0], &[1.0, 0.0]]);
        let rep = gershgorin_check(&g).unwrap();
        for ev in &rep.eigenvalues {
            assert!((ev.norm() - 1.0).abs() < 1e-12);
        }
        assert!(rep.contained);
        assert!(gershgorin_check(&DMatrix::<C64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn random_gram_matrices_are_contained() {
        let mut rng = rng_from_seed(7);
        for _ in 0..100 {
            let a = DMatrix::from_fn(10, 6, |_, _| complex_normal(&mut rng, 0.1));
            assert!(gershgorin_check(&(a.adjoint() * &a)).unwrap().contained);
        }
    }

    #[test]
    fn single_column_rip_constant_is_norm_deviation() {
        let t = DMatrix::from_fn(3, 2, |i, j| C64::new(if i == j { 1.0 + j as f64 * 0.5 } else { 0.1 }, 0.0));
        let want = (0..2)
            .map(|j| (t.column(j).norm_squared() - 1.0).abs())
            .fold(0.0f64, f64::max);
        let est = rip_delta_exhaustive(&t, 1).unwrap();
        assert!((est.delta_hat - want).abs() < 1e-12);
    }

    #[test]
    fn subset_count_and_monotonicity() {
        let t = random_dictionary(50, 2, 3, 11).unwrap();
        assert_eq!(t.ncols(), 8);
        let e2 = rip_delta_exhaustive(&t, 2).unwrap();
        assert_eq!(e2.subsets, 28);
        let mut prev = 0.0;
        for s in 1..=8 {
            let e = rip_delta_exhaustive(&t, s).unwrap();
            assert!(e.delta_hat >= prev - 1e-12);
            prev = e.delta_hat;
        }
        assert_eq!(e2.clone().with_target(10.0).passes(), Some(true));
        assert_eq!(e2.passes(), None);
        assert!(matches!(
            rip_delta_exhaustive(&DMatrix::<C64>::zeros(40, 40), 6),
            Err(Error::TooManyCombinations { .. })
        ));
    }

    #[test]
    fn theorem_bound_examples() {
        let b = theorem1_bound(1000, 3, 2, 0.5).unwrap();
        let direct = 47_970.0 * (-1000.0 * 0.25 / 45.0f64).exp();
        assert!((b.raw - direct).abs() < 1e-9 * direct);
        assert!((b.raw - 185.5).abs() < 0.5);
        assert_eq!(b.value(), 1.0);
        assert!(b.is_vacuous());

        let b = theorem1_bound(10_000, 3, 2, 0.5).unwrap();
        assert!((b.raw / 3.6e-19 - 1.0).abs() < 0.05, "{}", b.raw);
        assert!((b.c1 - 0.25 / 90.0).abs() < 1e-15);
        assert!((b.c2 - (0.25f64 / 90.0).sqrt()).abs() < 1e-15);

        assert!(theorem1_bound(1000, 3, 1, 0.5).is_err());
        assert!(theorem1_bound(1000, 3, 2, 1.0).is_err());
    }

    #[test]
    fn theorem_bound_non_increasing_in_p() {
        let mut prev = f64::INFINITY;
        let mut p = 100usize;
        while p <= 1_000_000 {
            let v = theorem1_bound(p, 3, 2, 0.5).unwrap().value();
            assert!(v <= prev);
            prev = v;
            p = p * 5 / 4;
        }
    }

    #[test]
    fn lemma_tails_respect_bounds() {
        let sigma2 = 1.0 / 200.0;
        let vac = lemma_tail_mc(Lemma::Lemma3, 100, sigma2, 0.0, 10_000, 1).unwrap();
        assert_eq!(vac.bound, 2.0);
        assert!(!vac.violated());

        let l3 = lemma_tail_mc(Lemma::Lemma3, 100, sigma2, 4.0, 20_000, 2).unwrap();
        assert!((l3.bound - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!(!l3.violated());

        let l4 = lemma_tail_mc(Lemma::Lemma4, 100, sigma2, 0.6376, 20_000, 3).unwrap();
        assert!((l4.bound - 0.05).abs() < 1e-3, "{}", l4.bound);
        assert!(!l4.violated());

        assert!(lemma_tail_mc(Lemma::Lemma3, 100, sigma2, 1.0, 9_999, 1).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = vec![row("lemma3", &[("p", "100".into()), ("t", "4".into())], 0.01, 0.0366, Verdict::Pass)];
        assert_eq!(
            ripcheck_csv(&rows),
            "check,params,empirical,bound,verdict\nlemma3,p=100;t=4,1.000000000e-2,3.660000000e-2,pass\n"
        );
    }
}
