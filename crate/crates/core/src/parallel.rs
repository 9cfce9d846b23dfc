//! Thread-pool scoping for the `cores` setting.

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `cores` threads, or on the ambient rayon
/// pool when `cores == 0`.
pub fn with_cores<T: Send>(cores: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if cores == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cores)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {cores} worker threads: {e}")))?;
    Ok(pool.install(f))
}
