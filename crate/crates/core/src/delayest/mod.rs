//! Delay estimation by sparse recovery over shifted-pilot dictionaries.
//!
//! For resource element `k` the first `S` received samples obey
//! `w'_k = T_k q_k + z'_k`, where `T_k` stacks one Toeplitz block of shifted
//! pilots per user on that RE and `q_k` is nonzero only at each user's true
//! delay. [`fb_lasso`] recovers `q_k`; [`extract_delays`] averages block
//! magnitudes across a user's REs and picks the strongest shift.

mod extract;
mod lasso;
mod operator;
mod shift;

pub use extract::{delay_mae, estimate_delays, extract_delays, DelayEstimator};
pub use lasso::{
    diagnostics_csv, fb_lasso, fb_lasso_traced, fixed_point_residual, lasso_objective, ls_estimate,
    soft_threshold, spectral_norm_sq, FbOptions, SelectionEstimate,
};
pub use operator::Dictionary;
pub use shift::{shift_matrix, stack_shift_matrices, ShiftBlock, ShiftMatrix};
