//! Experiment driver: synthetic sessions, training, evaluation, controller
//! runs and reports, all keyed by a configuration hash.

pub mod commands;
pub mod config;
pub mod report;

/// Stable error category for a failure chain: the core error kind if one
/// is present, `io` for bare I/O failures, otherwise `other`.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| {
            e.downcast_ref::<teleop_core::Error>()
                .map(teleop_core::Error::kind)
                .or_else(|| e.downcast_ref::<std::io::Error>().map(|_| "io"))
        })
        .unwrap_or("other")
}
