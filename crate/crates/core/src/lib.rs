#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod estimators;
pub mod geometry;
pub mod kernels;
pub mod mc;
pub mod pde;
pub mod verify;

/// Decimal with 17 significant digits, as written to every CSV artifact.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}
