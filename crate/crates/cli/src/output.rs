use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

/// Writes records of one type as JSON lines or as CSV with a header row.
pub struct Sink {
    inner: SinkKind,
}

enum SinkKind {
    Jsonl(Box<dyn Write>),
    Csv(Box<csv::Writer<Box<dyn Write>>>),
}

impl Sink {
    pub fn open(path: Option<&Path>, format: Format) -> Result<Self, CliError> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", p.display()))
            })?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        let inner = match format {
            Format::Jsonl => SinkKind::Jsonl(w),
            Format::Csv => SinkKind::Csv(Box::new(csv::Writer::from_writer(w))),
        };
        Ok(Self { inner })
    }

    pub fn write<R: Serialize>(&mut self, record: &R) -> Result<(), CliError> {
        match &mut self.inner {
            SinkKind::Jsonl(w) => {
                // Absent optional fields are left out rather than written as null.
                let mut value = serde_json::to_value(record)
                    .map_err(|e| CliError::Config(format!("output: {e}")))?;
                if let serde_json::Value::Object(map) = &mut value {
                    map.retain(|_, v| !v.is_null());
                }
                serde_json::to_writer(&mut *w, &value)
                    .map_err(|e| CliError::Config(format!("output: {e}")))?;
                w.write_all(b"\n")?;
            }
            SinkKind::Csv(w) => w.serialize(record)?,
        }
        Ok(())
    }

    pub fn finish(self) -> Result<(), CliError> {
        match self.inner {
            SinkKind::Jsonl(mut w) => w.flush()?,
            SinkKind::Csv(mut w) => w.flush()?,
        }
        Ok(())
    }
}
