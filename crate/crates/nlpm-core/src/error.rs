use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Param {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("field has {got} samples but grid has {want}")]
    GridMismatch { want: usize, got: usize },
    #[error("negative value {value} at cell {index}")]
    Negative { index: usize, value: f64 },
    #[error("time step {dt} exceeds the stability limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite value at cell {index}")]
    NotFinite { index: usize },
    #[error("monotonicity lost at cell {index}: drop {drop}")]
    Monotonicity { index: usize, drop: f64 },
    #[error("precondition failed: {0}")]
    Precondition(&'static str),
    #[error("not enough data: {0}")]
    Insufficient(&'static str),
    #[error("infeasible: constraint `{0}` cannot be met")]
    Infeasible(&'static str),
}

pub(crate) fn check_param(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Param { name, value, reason })
    }
}
