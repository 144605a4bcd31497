//! Per-thread count of engine forward passes.
//!
//! Lets tests reconcile a run's query accounting against the number of
//! network evaluations that actually happened (each gradient call performs
//! exactly one forward pass). Counters are thread-local, so accounting
//! tests must run the audited work on a single thread.

use std::cell::Cell;

thread_local! {
    static FORWARD_PASSES: Cell<u64> = const { Cell::new(0) };
}

pub(crate) fn record_forward() {
    FORWARD_PASSES.with(|c| c.set(c.get() + 1));
}

/// Forward passes performed on this thread since the last [`reset`].
pub fn forward_passes() -> u64 {
    FORWARD_PASSES.with(|c| c.get())
}

pub fn reset() {
    FORWARD_PASSES.with(|c| c.set(0));
}
