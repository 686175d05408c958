//! Replicate fan-out.
//!
//! With the `parallel` feature (default) replicates run on the rayon pool;
//! without it they run in a plain loop. Results always come back ordered by
//! replicate index, so any reduction over them is schedule-independent.

/// Evaluates `f(0), f(1), ..., f(reps - 1)`.
#[cfg(feature = "parallel")]
pub fn map_replicates<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..reps as u64).into_par_iter().map(f).collect()
}

/// Evaluates `f(0), f(1), ..., f(reps - 1)`.
#[cfg(not(feature = "parallel"))]
pub fn map_replicates<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_replicates_sequential(reps, f)
}

/// Sequential evaluation regardless of features.
pub fn map_replicates_sequential<T, F>(reps: usize, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..reps as u64).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_by_index() {
        let par = map_replicates(1000, |i| i * i);
        let seq = map_replicates_sequential(1000, |i| i * i);
        assert_eq!(par, seq);
    }
}
