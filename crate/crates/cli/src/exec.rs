//! Thread pool executor for per-mode work.

use num_complex::Complex64;
use rayon::prelude::*;
use shellnls_core::propagator::ModeExecutor;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SHELLNLS_THREADS";

pub struct Threaded {
    pool: rayon::ThreadPool,
}

impl Threaded {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()?;
        Ok(Self { pool })
    }

    /// Pool sized by `SHELLNLS_THREADS`, else the available parallelism.
    pub fn from_env() -> Result<Self, rayon::ThreadPoolBuildError> {
        Self::new(threads_from(std::env::var(THREADS_ENV).ok().as_deref()))
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

/// Worker count for a raw `SHELLNLS_THREADS` value; unset, empty, zero or
/// malformed values fall back to the machine's parallelism.
pub fn threads_from(raw: Option<&str>) -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match raw.and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => avail,
    }
}

impl ModeExecutor for Threaded {
    fn for_each_chunk(
        &self,
        data: &mut [Complex64],
        chunk: usize,
        out: &mut [Complex64],
        f: &(dyn Fn(usize, &mut [Complex64], &mut Complex64) + Sync),
    ) {
        self.pool.install(|| {
            if chunk == 0 {
                out.par_iter_mut()
                    .enumerate()
                    .for_each(|(i, o)| f(i, &mut [], o));
            } else {
                data.par_chunks_mut(chunk)
                    .zip(out.par_iter_mut())
                    .enumerate()
                    .for_each(|(i, (c, o))| f(i, c, o));
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use shellnls_core::propagator::Sequential;

    #[test]
    fn env_parsing() {
        assert_eq!(threads_from(Some("3")), 3);
        assert!(threads_from(Some("0")) >= 1);
        assert!(threads_from(Some("many")) >= 1);
        assert!(threads_from(None) >= 1);
    }

    #[test]
    fn matches_sequential() {
        let f = |i: usize, c: &mut [Complex64], o: &mut Complex64| {
            for (j, z) in c.iter_mut().enumerate() {
                *z += Complex64::new(i as f64, j as f64);
            }
            *o = c.iter().sum();
        };
        let mut a = vec![Complex64::new(1.0, 0.0); 60];
        let mut b = a.clone();
        let (mut oa, mut ob) = (
            vec![Complex64::default(); 12],
            vec![Complex64::default(); 12],
        );
        Threaded::new(4)
            .unwrap()
            .for_each_chunk(&mut a, 5, &mut oa, &f);
        Sequential.for_each_chunk(&mut b, 5, &mut ob, &f);
        assert_eq!(a, b);
        assert_eq!(oa, ob);
    }
}
