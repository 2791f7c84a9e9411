//! Fan-out of independent trials.
//!
//! With the `parallel` feature (on by default) trials run on the rayon
//! pool; without it, or with [`Exec::Sequential`], they run in order on the
//! calling thread. Each trial derives its own generator from the trial
//! index, so results do not depend on the execution mode.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// `Parallel` when the crate was built with rayon support.
    pub fn available() -> Exec {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// `f(0), f(1), ..., f(trials - 1)` in trial order.
pub fn map_trials<T, F>(trials: u64, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(f).collect()
        }
        _ => (0..trials).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: u64| i * i + 1;
        assert_eq!(
            map_trials(50, Exec::Sequential, f),
            map_trials(50, Exec::Parallel, f)
        );
    }
}
