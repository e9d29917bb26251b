use rayon::prelude::*;

use crate::{CliError, CliResult};

/// Maps `f` over `items` on a pool of `threads` workers, results in input
/// order.
pub fn map_ordered<T, R, F>(threads: usize, items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}
