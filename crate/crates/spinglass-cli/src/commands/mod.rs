pub mod dynamics;
pub mod railway;
pub mod solve;

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::manifest::{self, RunManifest};
use crate::FormatKind;

/// Deliver a result: canonical JSON (or the prepared text rendering) to
/// stdout, or to `--output` with the manifest as a sibling file.
pub fn emit<T: Serialize>(
    format: FormatKind,
    output: Option<&Path>,
    value: &T,
    text: String,
    run: RunManifest,
) -> Result<(), CliError> {
    let body = match format {
        FormatKind::Json => manifest::to_canonical_json(value),
        FormatKind::Text => text,
    };
    match output {
        Some(path) => manifest::write_result(path, &body, run),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
