use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Run metadata. Everything nondeterministic lives here so the rest of a
/// report is reproducible byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub generated_at_unix: u64,
    pub wall_time_s: f64,
    pub tool_version: &'static str,
}

impl Meta {
    pub fn finish(start: Instant) -> Self {
        Self {
            generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            wall_time_s: start.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Serialize `value` as pretty JSON to `path`, or to stdout when `None`.
pub fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// `x` when finite, otherwise `None` (serialized as null).
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
