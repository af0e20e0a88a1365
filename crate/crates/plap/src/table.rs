//! CSV output. Floats are written with 17 significant digits in scientific
//! notation, which round-trips every `f64` exactly.

use std::io::Write;

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Formats an optional value; `None` becomes an empty field.
pub fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub struct Table<W: Write> {
    writer: csv::Writer<W>,
    columns: usize,
}

impl<W: Write> Table<W> {
    pub fn new<S: AsRef<str>>(sink: W, header: &[S]) -> csv::Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(sink);
        writer.write_record(header.iter().map(|h| h.as_ref()))?;
        Ok(Table {
            writer,
            columns: header.len(),
        })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> csv::Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        self.writer.write_record(fields.iter().map(|f| f.as_ref()))
    }

    pub fn finish(self) -> std::io::Result<W> {
        self.writer.into_inner().map_err(|e| e.into_error())
    }
}
