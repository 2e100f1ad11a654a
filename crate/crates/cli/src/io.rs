//! File formats: the binary column-major matrix, plain-text vectors, the
//! sparse solution format, and append-only run records.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use elnet_core::data::{read_csv_matrix, read_libsvm, read_vector, Dataset};
use elnet_core::nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Binary matrix layout: two little-endian `u64` dimensions `(m, n)`
/// followed by `m * n` little-endian `f64` entries in column-major order.
pub fn write_matrix_bin(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(a.nrows() as u64).to_le_bytes())?;
    w.write_all(&(a.ncols() as u64).to_le_bytes())?;
    // DMatrix stores column-major already
    for v in a.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_bin(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    );
    let mut dims = [0u8; 16];
    r.read_exact(&mut dims)?;
    let m = u64::from_le_bytes(dims[..8].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(dims[8..].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; m * n * 8];
    r.read_exact(&mut buf)
        .with_context(|| format!("{}: truncated matrix body", path.display()))?;
    let values = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_iterator(m, n, values))
}

pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|j| format!("{:.16e}", a[(i, j)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// One value per line, 17 significant digits.
pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v.iter() {
        writeln!(w, "{x:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

/// Sparse solution format: one `index value` pair per line, 1-based indices,
/// 17 significant digits.
pub fn write_solution(path: &Path, coefficients: &[(usize, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for &(j, v) in coefficients {
        writeln!(w, "{} {:.16e}", j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
pub fn read_solution(path: &Path) -> Result<Vec<(usize, f64)>> {
    use std::io::BufRead;
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((idx, val)) = line.split_once(' ') else {
            bail!("{}:{}: expected `index value`", path.display(), lineno + 1);
        };
        let idx: usize = idx.parse()?;
        if idx == 0 {
            bail!("{}:{}: indices are 1-based", path.display(), lineno + 1);
        }
        out.push((idx - 1, val.trim().parse::<f64>()?));
    }
    Ok(out)
}

/// How the design/response pair reaches a command.
pub enum DataSource {
    /// Directory produced by `gen` (`A.bin` + `b.txt` + `meta.json`).
    Dir(PathBuf),
    /// Explicit matrix file (`.bin` or `.csv`) plus response file.
    Files { a: PathBuf, b: PathBuf },
    /// LIBSVM-format file holding both.
    Libsvm(PathBuf),
}

impl DataSource {
    pub fn from_flags(
        data: &Option<PathBuf>,
        a: &Option<PathBuf>,
        b: &Option<PathBuf>,
        libsvm: &Option<PathBuf>,
    ) -> Result<Self> {
        match (data, a, b, libsvm) {
            (Some(d), None, None, None) => Ok(DataSource::Dir(d.clone())),
            (None, Some(a), Some(b), None) => Ok(DataSource::Files {
                a: a.clone(),
                b: b.clone(),
            }),
            (None, None, None, Some(p)) => Ok(DataSource::Libsvm(p.clone())),
            _ => bail!("give exactly one of --data DIR, --a FILE --b FILE, or --libsvm FILE"),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Dir(dir) => {
                let a = read_matrix_bin(&dir.join("A.bin"))?;
                let b = read_vector(dir.join("b.txt"))?;
                if b.len() != a.nrows() {
                    bail!("{}: A.bin and b.txt disagree on the row count", dir.display());
                }
                let provenance = std::fs::read_to_string(dir.join("provenance.txt"))
                    .map(|s| s.trim().to_string())
                    .unwrap_or_else(|_| format!("dir({})", dir.display()));
                Ok(Dataset {
                    a,
                    b,
                    truth: None,
                    provenance,
                })
            }
            DataSource::Files { a, b } => {
                let mat = if a.extension().is_some_and(|e| e == "csv") {
                    read_csv_matrix(a)?
                } else {
                    read_matrix_bin(a)?
                };
                let vec = read_vector(b)?;
                if vec.len() != mat.nrows() {
                    bail!("{} and {} disagree on the row count", a.display(), b.display());
                }
                Ok(Dataset {
                    a: mat,
                    b: vec,
                    truth: None,
                    provenance: format!("files({}, {})", a.display(), b.display()),
                })
            }
            DataSource::Libsvm(path) => Ok(read_libsvm(path)?),
        }
    }
}

/// One append-only record per command invocation.
#[derive(Serialize)]
pub struct RunRecord {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub dataset: String,
    pub wall_seconds: f64,
    pub phases: Vec<(String, f64)>,
    pub iterations: serde_json::Value,
    pub outputs: Vec<String>,
}

impl RunRecord {
    pub fn append(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("run_records.jsonl");
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        writeln!(f, "{}", serde_json::to_string(self)?)?;
        Ok(())
    }
}

/// Wall-clock phase tracker feeding the run record.
pub struct Phases {
    start: Instant,
    last: Instant,
    entries: Vec<(String, f64)>,
}

impl Phases {
    pub fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            entries: Vec::new(),
        }
    }

    pub fn mark(&mut self, name: &str) {
        let now = Instant::now();
        self.entries
            .push((name.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }

    pub fn finish(self) -> (f64, Vec<(String, f64)>) {
        (self.start.elapsed().as_secs_f64(), self.entries)
    }
}
