//! Order-preserving map, on the rayon pool when enabled.

/// `f` over `xs`, results in input order. Runs in parallel only when the
/// `parallel` feature is compiled in and `parallel` is set.
pub fn map<T, R, F>(xs: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && xs.len() > 1 {
        use rayon::prelude::*;
        return xs.par_iter().map(f).collect();
    }
    let _ = parallel;
    xs.iter().map(f).collect()
}
