//! Indexed map over `0..n`, data parallel when the `parallel` feature is on.
//! Results are written by index, so output order never depends on
//! scheduling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool; sequential when built without `parallel`.
    #[default]
    Threads,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Threads
    }
}

pub fn map_indexed<T, F>(n: usize, mode: Parallelism, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..n).map(f).collect()
}

pub fn try_map_indexed<T, E, F>(n: usize, mode: Parallelism, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, mode, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        for mode in [Parallelism::Sequential, Parallelism::Threads] {
            let v = map_indexed(1000, mode, |i| i * i);
            assert!(v.iter().enumerate().all(|(i, x)| *x == i * i));
        }
    }

    #[test]
    fn first_error_by_index_wins() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(
                100,
                Parallelism::Threads,
                |i| if i % 7 == 3 { Err(i) } else { Ok(i) },
            );
        assert_eq!(r, Err(3));
    }
}
