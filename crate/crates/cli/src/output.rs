//! Byte-stable writers: CSV tables, 16-bit PGM maps, atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hitchsim_core::scan::IntensityMap;

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `# `-prefixed copy of `text`, one comment line per line.
pub fn comment_block(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

/// Comma-separated table with a metadata comment block and one header row.
pub fn csv_document<I>(metadata: &str, header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = comment_block(metadata);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Binary 16-bit graymap, one row per z sample. White (65535) is no light,
/// black (0) the map maximum.
pub fn pgm(map: &IntensityMap) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", map.cols, map.rows);
    let mut out = Vec::with_capacity(header.len() + 2 * map.data.len());
    out.extend_from_slice(header.as_bytes());
    let max = map.max();
    for &v in &map.data {
        let level = if max > 0.0 {
            (65535.0 * (v / max).clamp(0.0, 1.0)).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&(65535 - level).to_be_bytes());
    }
    out
}

/// Output directory whose files appear only once completely written.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutDir {
            root: root.into(),
            written: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
        fs::create_dir_all(&self.root).map_err(|e| io(e, &self.root))?;
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.{}.tmp", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &target)
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(&tmp);
            return Err(io(e, &target));
        }
        self.written.push(target);
        Ok(())
    }
}
