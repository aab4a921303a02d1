//! CSV ingestion and emission plus the run manifest. All file formats use
//! headers, UTF-8, and `.` as the decimal separator.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use collrisk_core::{from_pmf, ClaimSample, DistortionFunction, LatticeDistribution};

/// Read a PMF CSV (`x,prob`).
pub fn read_pmf(path: &Path) -> Result<LatticeDistribution> {
    let rows = read_csv(path, &["x", "prob"])?;
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    Ok(from_pmf(&pairs)?)
}

/// Write a PMF CSV (`x,prob`).
pub fn write_pmf(d: &LatticeDistribution, path: &Path, manifest: &mut Manifest) -> Result<()> {
    let mut out = String::from("x,prob\n");
    for (x, q) in d.support() {
        writeln!(out, "{x},{q}").expect("string write");
    }
    write_file(path, &out, d.len(), manifest)
}

/// Read a claims CSV (`claim`), inferring the grid step when none is given:
/// the float gcd of the positive values, or 1 when every claim is zero.
pub fn read_claims(path: &Path, step: Option<f64>) -> Result<ClaimSample> {
    let rows = read_csv(path, &["claim"])?;
    let values: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    if values.is_empty() {
        bail!("{}: no claims", path.display());
    }
    let step = match step {
        Some(h) => h,
        None => infer_step(&values),
    };
    Ok(ClaimSample::new(values, step)?)
}

/// Float gcd with a relative cutoff; claim grids come from monetary units so
/// the values are exact multiples up to text-format rounding.
fn infer_step(values: &[f64]) -> f64 {
    let mut g = 0.0f64;
    for &v in values {
        if v > 0.0 {
            g = float_gcd(g, v);
        }
    }
    if g > 0.0 {
        g
    } else {
        1.0
    }
}

fn float_gcd(a: f64, b: f64) -> f64 {
    let (mut a, mut b) = (a.max(b), a.min(b));
    if b == 0.0 {
        return a;
    }
    let tol = 1e-9 * a.max(b);
    while b > tol {
        let r = a % b;
        a = b;
        b = if r > tol && (b - r) > tol { r } else { 0.0 };
    }
    a
}

/// Read a distortion knot table (`t,g`).
pub fn read_distortion(path: &Path) -> Result<DistortionFunction> {
    let rows = read_csv(path, &["t", "g"])?;
    let knots: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    Ok(DistortionFunction::piecewise_linear(knots)?)
}

fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let first = lines.next().with_context(|| format!("{}: empty file", path.display()))?;
    let found: Vec<&str> = first.split(',').map(str::trim).collect();
    if found != header {
        bail!("{}: expected header {:?}, found {:?}", path.display(), header.join(","), first);
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            bail!("{}:{}: expected {} fields", path.display(), lineno + 2, header.len());
        }
        let row = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .with_context(|| format!("{}:{}: bad number {f:?}", path.display(), lineno + 2))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reproducibility record for one command invocation: the resolved
/// configuration (reusable via `--config manifest.txt`), the code version,
/// timing, and every emitted file with its row count.
pub struct Manifest {
    command: String,
    entries: Vec<(String, String)>,
    files: Vec<(PathBuf, usize)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            entries: Vec::new(),
            files: Vec::new(),
            started: Instant::now(),
        }
    }

    /// Echo one resolved configuration value.
    pub fn record(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn record_file(&mut self, path: &Path, rows: usize) {
        self.files.push((path.to_path_buf(), rows));
    }

    /// Write `manifest.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "# collrisk run manifest").expect("string write");
        writeln!(out, "version={}", env!("CARGO_PKG_VERSION")).expect("string write");
        writeln!(out, "command={}", self.command).expect("string write");
        for (key, value) in &self.entries {
            writeln!(out, "{key}={value}").expect("string write");
        }
        writeln!(out, "timing_ms={}", self.started.elapsed().as_millis()).expect("string write");
        for (path, rows) in &self.files {
            writeln!(out, "file={} rows={rows}", path.display()).expect("string write");
        }
        let path = dir.join("manifest.txt");
        std::fs::write(&path, out)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(())
    }
}

/// Write a text file and log it in the manifest with its data row count.
pub fn write_file(path: &Path, content: &str, rows: usize, manifest: &mut Manifest) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))?;
    manifest.record_file(path, rows);
    Ok(())
}
