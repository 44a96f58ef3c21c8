//! CSV emission. One header row per file; numeric cells use the shortest
//! representation that parses back to the same value, so repeated runs with
//! identical inputs produce bit-identical files.

use crate::CliError;
use std::io::Write;
use std::path::Path;

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let mut buf = String::with_capacity(rows.len() * 24 + header.len() + 1);
    buf.push_str(header);
    buf.push('\n');
    for row in rows {
        buf.push_str(row);
        buf.push('\n');
    }
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::validation(format!("creating {}: {e}", path.display())))?;
    file.write_all(buf.as_bytes())
        .map_err(|e| CliError::validation(format!("writing {}: {e}", path.display())))?;
    Ok(())
}
