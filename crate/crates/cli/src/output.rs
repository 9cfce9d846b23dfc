use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ergm_core::io::to_json_string;
use serde::Serialize;

use crate::cli::CommonArgs;
use crate::error::CliResult;

pub const MANIFEST: &str = "manifest.json";

/// Output directory of one run. Every artifact records the seed, the core
/// count and the manifest name; the manifest lists the artifacts.
pub struct Output {
    dir: PathBuf,
    seed: u64,
    cores: usize,
    files: Vec<String>,
    started: SystemTime,
    clock: Instant,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'static str,
    seed: u64,
    cores: usize,
    result: &'a T,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: Vec<String>,
    seed: u64,
    cores: usize,
    config: serde_json::Value,
    outputs: &'a [String],
    started_unix: f64,
    elapsed_seconds: f64,
}

impl Output {
    pub fn new(common: &CommonArgs) -> CliResult<Self> {
        std::fs::create_dir_all(&common.out)?;
        Ok(Self {
            dir: common.out.clone(),
            seed: common.seed,
            cores: common.cores,
            files: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `key=value` pairs written at the top of text artifacts.
    pub fn comments(&self) -> Vec<(String, String)> {
        vec![
            ("manifest".into(), MANIFEST.into()),
            ("seed".into(), self.seed.to_string()),
            ("cores".into(), self.cores.to_string()),
        ]
    }

    /// Creates `name` and registers it as an output.
    pub fn create(&mut self, name: &str) -> CliResult<File> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        self.files.push(name.to_string());
        Ok(File::create(path)?)
    }

    /// Registers files written by someone else into the directory.
    pub fn register(&mut self, names: impl IntoIterator<Item = String>) {
        self.files.extend(names);
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = to_json_string(&Envelope { manifest: MANIFEST, seed: self.seed, cores: self.cores, result: value })?;
        let mut f = self.create(name)?;
        writeln!(f, "{text}")?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> CliResult<()> {
        let header: Vec<String> = self.comments().iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut f = self.create(name)?;
        writeln!(f, "# {}", header.join(" "))?;
        f.write_all(body.as_bytes())?;
        Ok(())
    }

    /// Writes an SVG document with the header as XML comments after the root tag.
    pub fn svg(&mut self, name: &str, body: &str) -> CliResult<()> {
        let (head, rest) = body.split_once('\n').unwrap_or((body, ""));
        let mut f = self.create(name)?;
        writeln!(f, "{head}")?;
        for (k, v) in self.comments() {
            writeln!(f, "<!-- {k}={v} -->")?;
        }
        f.write_all(rest.as_bytes())?;
        Ok(())
    }

    pub fn finish<C: Serialize>(self, command: &str, config: &C) -> CliResult<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().collect(),
            seed: self.seed,
            cores: self.cores,
            config: serde_json::to_value(config).map_err(ergm_core::Error::from)?,
            outputs: &self.files,
            started_unix: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
        };
        let text = to_json_string(&manifest)?;
        std::fs::write(self.dir.join(MANIFEST), format!("{text}\n"))?;
        Ok(())
    }
}
