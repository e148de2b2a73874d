use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Resolved configuration embedded in every artifact.
#[derive(Serialize)]
pub struct RunConfig<'a, A: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub mask: Value,
    pub args: &'a A,
}

impl<'a, A: Serialize> RunConfig<'a, A> {
    pub fn new(command: &'static str, mask: Value, args: &'a A) -> Self {
        Self {
            tool: "refinekit",
            version: refinekit::VERSION,
            command,
            mask,
            args,
        }
    }
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    config: &'a C,
    result: &'a R,
}

pub fn write_json<C: Serialize, R: Serialize>(path: Option<&Path>, config: &C, result: &R) -> Result<()> {
    let mut w = open(path)?;
    serde_json::to_writer_pretty(&mut w, &Envelope { config, result })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// CSV writer whose first lines are `#` comments carrying the config.
pub struct Csv {
    w: Box<dyn Write>,
}

impl Csv {
    pub fn create<C: Serialize>(path: Option<&Path>, config: &C, header: &[String]) -> Result<Self> {
        let mut w = open(path)?;
        writeln!(w, "# refinekit {}", refinekit::VERSION)?;
        writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
        writeln!(w, "{}", header.join(","))?;
        Ok(Self { w })
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) -> Result<()> {
        let line: Vec<String> = cells.into_iter().collect();
        writeln!(self.w, "{}", line.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}
