use crate::error::{Error, Result};

/// Environment variable overriding the default thread budget.
pub const THREADS_ENV: &str = "CLIPMINE_THREADS";

/// Runs `f` on a dedicated pool of `threads` workers; `0` means rayon's default.
pub fn with_thread_budget<R, F>(threads: usize, f: F) -> Result<R>
where
    F: FnOnce() -> R + Send,
    R: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("config.threads", e.to_string()))?;
    Ok(pool.install(f))
}
