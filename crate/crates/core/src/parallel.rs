//! Order-preserving worker pools.
//!
//! Streams are consumed in fixed-size blocks; each block is mapped in parallel
//! and results come back in input order, so output never depends on the
//! number of workers.

use std::io::BufRead;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const BLOCK_LINES: usize = 4096;

/// Runs `f` inside a dedicated pool of `threads` workers (0 = rayon default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Feeds `input` to `f` in blocks of [`BLOCK_LINES`] lines, skipping blank ones.
pub fn for_each_block<R, F>(input: R, mut f: F) -> Result<()>
where
    R: BufRead,
    F: FnMut(&[String]) -> Result<()>,
{
    let mut block = Vec::with_capacity(BLOCK_LINES);
    for line in input.lines() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        block.push(line.to_string());
        if block.len() == BLOCK_LINES {
            f(&block)?;
            block.clear();
        }
    }
    if !block.is_empty() {
        f(&block)?;
    }
    Ok(())
}
