use nalgebra::DVector;

use super::operator::Dictionary;
use super::shift::ShiftMatrix;
use crate::{Error, Result, C64};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 500;

/// Complex soft thresholding: the prox of `alpha * ||.||_1` on `C^n`.
///
/// Magnitudes at or below `alpha` go to zero; larger entries shrink by
/// `alpha` with their phase kept.
pub fn soft_threshold(v: &[C64], alpha: f64) -> Vec<C64> {
    v.iter().map(|&x| shrink(x, alpha)).collect()
}

#[inline]
fn shrink(x: C64, alpha: f64) -> C64 {
    let m = x.norm();
    if m <= alpha {
        C64::new(0.0, 0.0)
    } else {
        x * (1.0 - alpha / m)
    }
}

fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn norm1(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm()).sum()
}

fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

/// Squared largest singular value of `t`, by power iteration on `T^H T`.
pub fn spectral_norm_sq<T: Dictionary + ?Sized>(t: &T) -> f64 {
    let n = t.cols();
    if n == 0 {
        return 0.0;
    }
    // a fixed, non-symmetric start vector avoids landing orthogonal to the
    // top singular vector of structured matrices
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0))
        .collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut tv = vec![C64::new(0.0, 0.0); t.rows()];
    let mut g = vec![C64::new(0.0, 0.0); n];
    let mut estimate = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        t.apply(&v, &mut tv);
        t.apply_adjoint(&tv, &mut g);
        let ng = norm2(&g);
        if ng == 0.0 {
            return 0.0;
        }
        let prev = estimate;
        estimate = ng;
        v.iter_mut().zip(&g).for_each(|(x, gi)| *x = gi / ng);
        if (estimate - prev).abs() <= POWER_TOL * estimate {
            break;
        }
    }
    estimate
}

/// Options of the constant-step forward-backward LASSO solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbOptions {
    /// Regularisation weight.
    pub lambda: f64,
    /// Noise standard deviation; the l1 weight is `lambda * sigma`.
    pub sigma: f64,
    /// Relaxation `mu`, must lie strictly inside `(0, 3/2)`.
    pub step_scale: f64,
    pub stop_tol: f64,
    pub max_iters: usize,
}

impl Default for FbOptions {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            sigma: 1.0,
            step_scale: 1.0,
            stop_tol: 1e-6,
            max_iters: 10_000,
        }
    }
}

impl FbOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {}", self.lambda));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {}", self.sigma));
        }
        if !(self.step_scale > 0.0 && self.step_scale < 1.5) {
            return bad(format!("step scale {} outside (0, 3/2)", self.step_scale));
        }
        if !(self.stop_tol > 0.0) {
            return bad(format!("stop tolerance {}", self.stop_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters = 0".into());
        }
        Ok(())
    }

    pub fn l1_weight(&self) -> f64 {
        self.lambda * self.sigma
    }
}

/// Recovered selection vector of one RE plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionEstimate {
    pub qhat: Vec<C64>,
    /// Block owners in column order; empty for non-dictionary problems.
    pub users: Vec<usize>,
    /// Columns per user block (`D + 1`); equals `qhat.len()` when unblocked.
    pub block_len: usize,
    pub iterations: usize,
    pub final_objective: f64,
    /// `||x_n - x_{n-1}||` at exit.
    pub final_step: f64,
    pub converged: bool,
    /// Step normaliser `beta = ||T||_2^2`.
    pub lipschitz: f64,
}

impl SelectionEstimate {
    /// Entry magnitudes of block `b`.
    pub fn block_magnitudes(&self, b: usize) -> Vec<f64> {
        self.qhat[b * self.block_len..(b + 1) * self.block_len]
            .iter()
            .map(|x| x.norm())
            .collect()
    }

    /// Magnitudes of the block owned by `user`, if present.
    pub fn user_magnitudes(&self, user: usize) -> Option<Vec<f64>> {
        self.users
            .iter()
            .position(|&u| u == user)
            .map(|b| self.block_magnitudes(b))
    }
}

/// `1/2 ||T x - w||^2 + lambda sigma ||x||_1`
pub fn lasso_objective<T: Dictionary + ?Sized>(t: &T, w: &[C64], x: &[C64], l1_weight: f64) -> f64 {
    let mut r = vec![C64::new(0.0, 0.0); t.rows()];
    t.apply(x, &mut r);
    let fit: f64 = r.iter().zip(w).map(|(a, b)| (a - b).norm_sqr()).sum();
    0.5 * fit + l1_weight * norm1(x)
}

/// `||x - prox(x - beta^-1 T^H (T x - w))||`, zero exactly at a LASSO minimiser.
pub fn fixed_point_residual<T: Dictionary + ?Sized>(
    t: &T,
    w: &[C64],
    x: &[C64],
    l1_weight: f64,
    beta: f64,
) -> f64 {
    let mut r = vec![C64::new(0.0, 0.0); t.rows()];
    t.apply(x, &mut r);
    r.iter_mut().zip(w).for_each(|(a, b)| *a -= b);
    let mut g = vec![C64::new(0.0, 0.0); t.cols()];
    t.apply_adjoint(&r, &mut g);
    x.iter()
        .zip(&g)
        .map(|(&xi, &gi)| (xi - shrink(xi - gi / beta, l1_weight / beta)).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Solves `min_q 1/2 ||T q - w||^2 + lambda sigma ||q||_1` over complex `q`
/// with the constant-step forward-backward iteration
///
/// `x_{n+1} = x_n + mu (prox_{lambda sigma / beta}(x_n - T^H(T x_n - w) / beta) - x_n)`
///
/// from `x_0 = 0`, stopping when `||x_{n+1} - x_n|| <= stop_tol`.
pub fn fb_lasso<T: Dictionary + ?Sized>(t: &T, w: &[C64], opts: &FbOptions) -> Result<SelectionEstimate> {
    solve(t, w, opts, None)
}

/// [`fb_lasso`] that also returns the objective at every iterate `x_0..x_n`.
pub fn fb_lasso_traced<T: Dictionary + ?Sized>(
    t: &T,
    w: &[C64],
    opts: &FbOptions,
) -> Result<(SelectionEstimate, Vec<f64>)> {
    let mut trace = Vec::new();
    let est = solve(t, w, opts, Some(&mut trace))?;
    Ok((est, trace))
}

fn check_inputs<T: Dictionary + ?Sized>(t: &T, w: &[C64]) -> Result<()> {
    if w.len() != t.rows() {
        return Err(Error::Dimension(format!(
            "observation has {} samples, dictionary has {} rows",
            w.len(),
            t.rows()
        )));
    }
    if !all_finite(w) {
        return Err(Error::NonFinite("observation"));
    }
    if !t.all_finite() {
        return Err(Error::NonFinite("dictionary"));
    }
    Ok(())
}

fn solve<T: Dictionary + ?Sized>(
    t: &T,
    w: &[C64],
    opts: &FbOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SelectionEstimate> {
    opts.validate()?;
    check_inputs(t, w)?;
    let beta = spectral_norm_sq(t);
    if !(beta > 0.0) {
        return Err(Error::ZeroOperator);
    }
    let (m, n) = (t.rows(), t.cols());
    let l1 = opts.l1_weight();
    let thresh = l1 / beta;
    let mu = opts.step_scale;

    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut r = vec![C64::new(0.0, 0.0); m];
    let mut g = vec![C64::new(0.0, 0.0); n];
    let mut iterations = 0;
    let mut final_step = f64::INFINITY;
    let mut converged = false;

    while iterations < opts.max_iters {
        t.apply(&x, &mut r);
        r.iter_mut().zip(w).for_each(|(a, b)| *a -= b);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(0.5 * r.iter().map(|v| v.norm_sqr()).sum::<f64>() + l1 * norm1(&x));
        }
        t.apply_adjoint(&r, &mut g);
        let mut step_sq = 0.0;
        for (xi, gi) in x.iter_mut().zip(&g) {
            let p = shrink(*xi - gi / beta, thresh);
            let delta = mu * (p - *xi);
            *xi += delta;
            step_sq += delta.norm_sqr();
        }
        iterations += 1;
        final_step = step_sq.sqrt();
        if final_step <= opts.stop_tol {
            converged = true;
            break;
        }
    }

    let final_objective = lasso_objective(t, w, &x, l1);
    if let Some(tr) = trace {
        tr.push(final_objective);
    }
    Ok(SelectionEstimate {
        qhat: x,
        users: Vec::new(),
        block_len: n,
        iterations,
        final_objective,
        final_step,
        converged,
        lipschitz: beta,
    })
}

/// Minimum-norm least-squares solution `T^+ w` via the SVD.
pub fn ls_estimate<T: Dictionary + ?Sized>(t: &T, w: &[C64]) -> Result<SelectionEstimate> {
    check_inputs(t, w)?;
    let dense = t.to_dense();
    let dim = dense.nrows().max(dense.ncols());
    let svd = dense.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::ZeroOperator);
    }
    let eps = smax * 1e-12 * dim as f64;
    let b = DVector::from_column_slice(w);
    let q = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let qhat: Vec<C64> = q.iter().copied().collect();
    let final_objective = lasso_objective(t, w, &qhat, 0.0);
    Ok(SelectionEstimate {
        block_len: qhat.len(),
        qhat,
        users: Vec::new(),
        iterations: 0,
        final_objective,
        final_step: 0.0,
        converged: true,
        lipschitz: smax * smax,
    })
}

impl SelectionEstimate {
    pub(crate) fn with_blocks(mut self, t: &ShiftMatrix) -> Self {
        self.users = t.users();
        self.block_len = t.block_len();
        self
    }
}

/// Solver diagnostics as CSV: `re_index,iterations,final_objective,converged`.
pub fn diagnostics_csv(estimates: &[SelectionEstimate]) -> String {
    let mut out = String::from("re_index,iterations,final_objective,converged\n");
    for (k, e) in estimates.iter().enumerate() {
        out.push_str(&format!("{k},{},{:.12e},{}\n", e.iterations, e.final_objective, e.converged));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delayest::shift::{stack_shift_matrices, ShiftBlock};
    use crate::random::{complex_normal, rng_from_seed};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn opts(lambda: f64, sigma: f64) -> FbOptions {
        FbOptions {
            lambda,
            sigma,
            ..FbOptions::default()
        }
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(&[c(3.0)], 1.0), vec![c(2.0)]);
        assert_eq!(soft_threshold(&[c(0.5)], 1.0), vec![c(0.0)]);
        let theta = std::f64::consts::FRAC_PI_3;
        let out = soft_threshold(&[C64::from_polar(4.0, theta)], 1.0)[0];
        assert!((out - C64::from_polar(3.0, theta)).norm() < 1e-12);
        // boundary goes to zero
        assert_eq!(soft_threshold(&[c(-1.0)], 1.0), vec![c(0.0)]);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = rng_from_seed(11);
        for _ in 0..5 {
            let blocks: Vec<ShiftBlock> = (0..3)
                .map(|u| ShiftBlock::new(u, (0..14).map(|_| complex_normal(&mut rng, 1.0 / 14.0)).collect(), 42))
                .collect();
            let t = stack_shift_matrices(blocks).unwrap();
            let svd_top = t.to_dense().singular_values().max();
            let beta = spectral_norm_sq(&t);
            assert!((beta - svd_top * svd_top).abs() <= 1e-6 * beta, "{beta} vs {}", svd_top * svd_top);
        }
    }

    #[test]
    fn orthonormal_design_equals_soft_threshold() {
        let t = DMatrix::<C64>::identity(2, 2);
        let est = fb_lasso(&t, &[c(3.0), c(0.1)], &opts(1.0, 1.0)).unwrap();
        assert!((est.qhat[0] - c(2.0)).norm() < 1e-6);
        assert!(est.qhat[1].norm() < 1e-6);
    }

    #[test]
    fn unregularised_square_system_inverts() {
        let t = DMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), C64::new(0.0, 1.0), c(3.0)]);
        let truth = [C64::new(1.0, -1.0), c(0.5)];
        let mut w = vec![c(0.0); 2];
        t.apply(&truth, &mut w);
        let o = FbOptions {
            lambda: 0.0,
            stop_tol: 1e-12,
            max_iters: 100_000,
            ..FbOptions::default()
        };
        let est = fb_lasso(&t, &w, &o).unwrap();
        assert!(est.converged);
        for (a, b) in est.qhat.iter().zip(&truth) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_observation_stops_at_once() {
        let t = DMatrix::<C64>::identity(3, 3);
        let est = fb_lasso(&t, &[c(0.0); 3], &FbOptions::default()).unwrap();
        assert_eq!(est.iterations, 1);
        assert!(est.qhat.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = DMatrix::<C64>::identity(2, 2);
        assert!(matches!(
            fb_lasso(&t, &[c(f64::NAN), c(0.0)], &FbOptions::default()),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            fb_lasso(&DMatrix::<C64>::zeros(2, 3), &[c(1.0), c(0.0)], &FbOptions::default()),
            Err(Error::ZeroOperator)
        ));
        assert!(fb_lasso(&t, &[c(1.0)], &FbOptions::default()).is_err());
        let bad = FbOptions {
            step_scale: 1.5,
            ..FbOptions::default()
        };
        assert!(fb_lasso(&t, &[c(1.0), c(0.0)], &bad).is_err());
    }

    #[test]
    fn least_squares_examples() {
        let t = DMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(1.0), c(3.0)]);
        let est = ls_estimate(&t, &[c(3.0), c(4.0)]).unwrap();
        assert!((est.qhat[0] - c(1.0)).norm() < 1e-10);
        assert!((est.qhat[1] - c(1.0)).norm() < 1e-10);

        let wide = DMatrix::from_row_slice(1, 2, &[c(1.0), c(1.0)]);
        let est = ls_estimate(&wide, &[c(2.0)]).unwrap();
        assert!((est.qhat[0] - c(1.0)).norm() < 1e-10);
        assert!((est.qhat[1] - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn least_squares_normal_equations() {
        let mut rng = rng_from_seed(5);
        let t = DMatrix::from_fn(8, 5, |_, _| complex_normal(&mut rng, 1.0));
        let w: Vec<C64> = (0..8).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let est = ls_estimate(&t, &w).unwrap();
        let mut r = vec![c(0.0); 8];
        t.apply(&est.qhat, &mut r);
        r.iter_mut().zip(&w).for_each(|(a, b)| *a -= b);
        let mut g = vec![c(0.0); 5];
        t.apply_adjoint(&r, &mut g);
        assert!(norm2(&g) < 1e-8);
    }

    #[test]
    fn diagnostics_csv_rows() {
        let t = DMatrix::<C64>::identity(2, 2);
        let e = fb_lasso(&t, &[c(0.0); 2], &FbOptions::default()).unwrap();
        let csv = diagnostics_csv(&[e.clone(), e]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "re_index,iterations,final_objective,converged");
        assert_eq!(lines[1], "0,1,0.000000000000e0,true");
        assert_eq!(lines.len(), 3);
    }

    fn random_problem(seed: u64) -> (crate::delayest::ShiftMatrix, Vec<C64>) {
        let mut rng = rng_from_seed(seed);
        let (p, d) = (8, 5);
        let blocks: Vec<ShiftBlock> = (0..3)
            .map(|u| ShiftBlock::new(u, (0..p).map(|_| complex_normal(&mut rng, 1.0 / p as f64)).collect(), d))
            .collect();
        let t = stack_shift_matrices(blocks).unwrap();
        let w: Vec<C64> = (0..p + d).map(|_| complex_normal(&mut rng, 0.3)).collect();
        (t, w)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn objective_never_increases(seed in any::<u64>(), lambda in 0.01f64..2.0) {
            let (t, w) = random_problem(seed);
            let o = FbOptions { lambda, sigma: 0.5, ..FbOptions::default() };
            let (_, trace) = fb_lasso_traced(&t, &w, &o).unwrap();
            for pair in trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-10, "{} -> {}", pair[0], pair[1]);
            }
        }

        #[test]
        fn returns_a_fixed_point(seed in any::<u64>(), lambda in 0.05f64..2.0) {
            let (t, w) = random_problem(seed);
            let o = FbOptions { lambda, sigma: 0.5, ..FbOptions::default() };
            let est = fb_lasso(&t, &w, &o).unwrap();
            prop_assert!(est.converged);
            let res = fixed_point_residual(&t, &w, &est.qhat, o.l1_weight(), est.lipschitz);
            prop_assert!(res <= 10.0 * o.stop_tol, "residual {res}");
        }

        #[test]
        fn no_worse_than_least_squares_on_lasso_objective(seed in any::<u64>(), lambda in 0.05f64..2.0) {
            let (t, w) = random_problem(seed);
            let o = FbOptions { lambda, sigma: 0.5, ..FbOptions::default() };
            let est = fb_lasso(&t, &w, &o).unwrap();
            let ls = ls_estimate(&t, &w).unwrap();
            let reference = lasso_objective(&t, &w, &ls.qhat, o.l1_weight());
            prop_assert!(est.final_objective <= reference + 1e-9);
        }
    }
}
