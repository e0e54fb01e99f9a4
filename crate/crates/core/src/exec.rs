//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] runs on the rayon
//! pool; without it every mode runs sequentially. Results are always in input
//! order, so the mode never changes outputs.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
            }
            _ => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}
