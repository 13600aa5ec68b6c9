use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ecd_core::bounds::{write_csv, write_json_lines, BoundReport};

use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the CSV table to `path` (extension forced to `.csv`) and the JSON
/// lines next to it (`.jsonl`); without a path the CSV goes to stdout.
/// Returns the files written.
pub fn write_reports(reports: &[BoundReport], path: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    match path {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(reports, &mut lock)?;
            lock.flush()?;
            Ok(vec![])
        }
        Some(p) => {
            let csv = p.with_extension("csv");
            let jsonl = p.with_extension("jsonl");
            let mut w = create(&csv)?;
            write_csv(reports, &mut w)?;
            w.flush()?;
            let mut w = create(&jsonl)?;
            write_json_lines(reports, &mut w)?;
            w.flush()?;
            Ok(vec![csv, jsonl])
        }
    }
}

pub fn write_json(value: &impl serde::Serialize, path: Option<&Path>, pretty: bool) -> Result<(), CliError> {
    let text = if pretty { serde_json::to_string_pretty(value) } else { serde_json::to_string(value) }
        .map_err(ecd_core::EcdError::from)?;
    match path {
        None => println!("{text}"),
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{text}")?;
            w.flush()?;
        }
    }
    Ok(())
}
