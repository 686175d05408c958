use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::Context;
use serde::Serialize;

use crate::{Format, Global};

#[derive(Serialize)]
struct Envelope<'a, F: Serialize, R: Serialize> {
    schema: String,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    flags: Flags<'a, F>,
    result: R,
}

#[derive(Serialize)]
struct Flags<'a, F: Serialize> {
    #[serde(flatten)]
    global: &'a Global,
    #[serde(flatten)]
    command: &'a F,
}

/// A finished command: metadata plus a JSON payload and a CSV body.
pub struct Report<'a, F: Serialize> {
    pub command: &'a str,
    pub seed: Option<u64>,
    pub flags: &'a F,
}

impl<F: Serialize> Report<'_, F> {
    fn schema(&self) -> String {
        format!("horton.{}/1", self.command)
    }

    /// Writes `result` as JSON, or `csv` preceded by `#` metadata lines.
    pub fn emit<R: Serialize>(&self, global: &Global, result: &R, csv: impl FnOnce() -> String) -> anyhow::Result<()> {
        let flags = Flags { global, command: self.flags };
        let text = match global.format {
            Format::Json => {
                let env = Envelope {
                    schema: self.schema(),
                    version: env!("CARGO_PKG_VERSION"),
                    command: self.command,
                    seed: self.seed,
                    flags,
                    result,
                };
                let mut s = serde_json::to_string_pretty(&env)?;
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = format!(
                    "# schema: {}\n# version: {}\n# command: {}\n",
                    self.schema(),
                    env!("CARGO_PKG_VERSION"),
                    self.command
                );
                if let Some(seed) = self.seed {
                    s.push_str(&format!("# seed: {seed}\n"));
                }
                s.push_str(&format!("# flags: {}\n", serde_json::to_string(&flags)?));
                s.push_str(&csv());
                s
            }
        };
        match &global.out {
            Some(path) => {
                let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(f);
                w.write_all(text.as_bytes())
                    .and_then(|_| w.flush())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            None => io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Uses `seed` or draws one, reporting a drawn seed on standard error.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}
