//! Order-preserving data-parallel map with a sequential fallback.
//!
//! Without the `parallel` feature every [`Mode`] runs sequentially.

use std::str::FromStr;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    Sequential,
    #[default]
    Parallel,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" | "seq" => Ok(Mode::Sequential),
            "parallel" | "par" => Ok(Mode::Parallel),
            _ => Err(format!("unknown execution mode `{s}`")),
        }
    }
}

/// `items.iter().map(f)` with results in input order.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(mode: Mode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        Mode::Parallel if items.len() > 1 => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(_mode: Mode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Sizes the global worker pool. Only the first call has an effect.
#[cfg(feature = "parallel")]
pub fn set_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn set_threads(_n: usize) {}
