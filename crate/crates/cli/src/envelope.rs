use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

/// JSON report wrapper. The echoed configuration and command line are enough
/// to regenerate the results; the worker count is left out because it never
/// changes them.
#[derive(Serialize)]
pub struct ReportEnvelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: String,
    pub config: &'a C,
    pub results: &'a R,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl<'a, C: Serialize, R: Serialize> ReportEnvelope<'a, C, R> {
    pub fn new(
        command_line: String,
        config: &'a C,
        results: &'a R,
        started: Option<Instant>,
    ) -> Self {
        ReportEnvelope {
            tool: "eprsim",
            version: env!("CARGO_PKG_VERSION"),
            command_line,
            config,
            results,
            duration_ms: started.map(|s| s.elapsed().as_millis() as u64),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `text` to `path`, or to standard output when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
