use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// One JSON object per line.
    Records,
    /// CSV with a header row.
    Csv,
}

/// Writes `rows` to stdout in the selected format.
pub fn emit<T: Serialize>(format: Format, rows: &[T]) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    write_rows(format, rows, &mut out)?;
    out.flush()
}

pub fn write_rows<T: Serialize, W: Write>(format: Format, rows: &[T], w: &mut W) -> std::io::Result<()> {
    match format {
        Format::Records => {
            for r in rows {
                serde_json::to_writer(&mut *w, r)?;
                writeln!(w)?;
            }
        }
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            for r in rows {
                cw.serialize(r).map_err(std::io::Error::other)?;
            }
            cw.flush()?;
        }
    }
    Ok(())
}
