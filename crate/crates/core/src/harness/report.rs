//! Output files: JSON summaries, CSV tables, gnuplot data and the hashed
//! manifest. Every file is written to a temporary name and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ethstats::EthStatistics;
use crate::stats::{freedman_diaconis, Histogram};

use super::config::{hex_digest, RunConfig};
use super::sweep::RunReport;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const SUMMARY_NAME: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Recomputes each file's hash and returns the paths that no longer match.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for f in &self.files {
            let path = dir.join(&f.path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if hex_digest(&bytes) != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}

/// Single writer for one output directory.
#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.write_atomic(name, bytes)?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            sha256: hex_digest(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes the manifest listing every file written so far.
    pub fn finish(mut self) -> Result<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            schema: 1,
            files: self.entries,
        };
        let text = to_json(&manifest);
        let dir = self.dir;
        let tmp = dir.join(format!(".{MANIFEST_NAME}.tmp"));
        let target = dir.join(MANIFEST_NAME);
        fs::write(&tmp, text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
        Ok(manifest)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Header plus rows, comma separated, LF line endings.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// `kind,value` rows with `kind` in {diag, offdiag}.
pub fn samples_csv(stats: &EthStatistics) -> String {
    let rows = stats
        .diag_samples
        .iter()
        .map(|&x| vec!["diag".to_string(), num(x)])
        .chain(
            stats
                .offdiag_samples
                .iter()
                .map(|&x| vec!["offdiag".to_string(), num(x)]),
        );
    csv_table(&["kind", "value"], rows)
}

pub fn histogram_csv(h: &Histogram) -> String {
    let rows = h
        .counts
        .iter()
        .enumerate()
        .map(|(k, &c)| vec![num(h.edges[k]), num(h.edges[k + 1]), c.to_string()]);
    csv_table(&["lower", "upper", "count"], rows)
}

const SCALING_COLUMNS: [&str; 11] = [
    "n_modes",
    "dim",
    "realizations",
    "var_diag",
    "var_offdiag",
    "variance_ratio",
    "diag_mean",
    "observable_mean",
    "rms_bare",
    "rms_corrected",
    "rms_right_left",
];

fn scaling_rows(report: &RunReport) -> Vec<Vec<String>> {
    report
        .sizes
        .iter()
        .map(|s| {
            vec![
                s.n_modes.to_string(),
                s.dim.to_string(),
                s.used_indices.len().to_string(),
                num(s.stats.var_diag),
                num(s.stats.var_offdiag),
                num(s.variance_ratio),
                num(s.stats.diag_mean),
                num(s.stats.observable_mean),
                num(s.stats.rms_bare_offdiag),
                num(s.stats.rms_corrected_offdiag),
                num(s.rms_right_left),
            ]
        })
        .collect()
}

/// Per-size variances and RMS values, one row per size.
pub fn scaling_csv(report: &RunReport) -> String {
    csv_table(&SCALING_COLUMNS, scaling_rows(report))
}

/// Same content as [`scaling_csv`], whitespace separated with a `#` header.
pub fn scaling_dat(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# model={} window={}", report.model, report.window);
    let _ = writeln!(out, "# {}", SCALING_COLUMNS.join(" "));
    for row in scaling_rows(report) {
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Writes the scaling tables for an existing report.
pub fn write_scaling(report: &RunReport, w: &mut OutputWriter) -> Result<()> {
    w.write("scaling.csv", scaling_csv(report).as_bytes())?;
    w.write("scaling.dat", scaling_dat(report).as_bytes())
}

/// Writes the full output set of a sweep and its manifest.
pub fn write_run(report: &RunReport, config: &RunConfig, dir: &Path) -> Result<Manifest> {
    let mut w = OutputWriter::new(dir)?;
    let mut canon = config.clone();
    canon.output_dir = None;
    canon.parallelism = 0;
    w.write("config.toml", canon.to_toml().as_bytes())?;
    w.write(SUMMARY_NAME, to_json(report).as_bytes())?;
    for s in &report.sizes {
        let tag = format!("n{:02}", s.n_modes);
        w.write(&format!("samples_{tag}.csv"), samples_csv(&s.stats).as_bytes())?;
        w.write(
            &format!("histogram_{tag}_diag.csv"),
            histogram_csv(&freedman_diaconis(&s.stats.diag_samples)).as_bytes(),
        )?;
        w.write(
            &format!("histogram_{tag}_offdiag.csv"),
            histogram_csv(&freedman_diaconis(&s.stats.offdiag_samples)).as_bytes(),
        )?;
    }
    write_scaling(report, &mut w)?;
    w.finish()
}

pub fn load_report(dir: &Path) -> Result<RunReport> {
    let path = dir.join(SUMMARY_NAME);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
