//! Replica-parallel Monte Carlo driver.
//!
//! Replicas are keyed by index; each gets its own noise stream, so results
//! do not depend on scheduling or thread count. With the `parallel` feature
//! (default) the map runs on rayon; without it, sequentially. The sequential
//! path stays available either way so the two can be benchmarked against
//! each other.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over replica indices `0..n`, in parallel when the `parallel`
/// feature is enabled. Output order is by replica index either way.
pub fn map_replicas<T: Send>(n: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_replicas_sequential(n, f)
    }
}

/// Sequential fallback; identical output to [`map_replicas`].
pub fn map_replicas_sequential<T>(n: usize, f: impl Fn(u64) -> T) -> Vec<T> {
    (0..n as u64).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let par = map_replicas(257, |i| i * i + 1);
        let seq = map_replicas_sequential(257, |i| i * i + 1);
        assert_eq!(par, seq);
    }
}
