//! Replicate runner. Replicate `r` always draws from stream `r` of the given
//! seed, and results come back in replicate order, so output does not depend
//! on the number of worker threads.

use rayon::prelude::*;

use crate::rng::RngStream;

pub fn run_replicates<T, F>(seed: u64, reps: usize, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut RngStream) -> T + Sync + Send,
{
    let body = || {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(seed, r as u64);
                f(r, &mut rng)
            })
            .collect()
    };
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(body),
        None => body(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn thread_count_does_not_matter() {
        let f = |r: usize, rng: &mut RngStream| (r, rng.gen::<u64>());
        let a = run_replicates(9, 200, Some(1), f);
        let b = run_replicates(9, 200, Some(4), f);
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, x)| x.0 == i));
    }
}
