use std::fs;
use std::path::{Path, PathBuf};

use super::HarnessError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

/// Writes a CSV file through a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
pub fn write_csv_atomic<S: AsRef<str>>(
    path: &Path,
    header: &[S],
    rows: &[Vec<String>],
) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(tmp.as_file());
        let csv_err = |e: csv::Error| HarnessError::Csv { path: path.display().to_string(), message: e.to_string() };
        w.write_record(header.iter().map(|h| h.as_ref())).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(path))?;
    }
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| HarnessError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

/// `(cell, key, value)` rows describing every parameter of an experiment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String, String)>,
}

impl Manifest {
    pub fn push(&mut self, cell: impl Into<String>, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((cell.into(), key.into(), value.into()));
    }

    /// Values recorded for `cell`, in insertion order.
    pub fn cell(&self, cell: &str) -> Vec<(&str, &str)> {
        self.entries.iter().filter(|e| e.0 == cell).map(|e| (e.1.as_str(), e.2.as_str())).collect()
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let file = fs::File::open(path).map_err(io_err(path))?;
        let mut r = csv::Reader::from_reader(file);
        let mut m = Manifest::default();
        for rec in r.records() {
            let rec = rec.map_err(|e| HarnessError::Csv { path: path.display().to_string(), message: e.to_string() })?;
            if rec.len() != 3 {
                return Err(HarnessError::Csv {
                    path: path.display().to_string(),
                    message: format!("expected 3 columns (cell,key,value), got {}", rec.len()),
                });
            }
            m.push(&rec[0], &rec[1], &rec[2]);
        }
        Ok(m)
    }
}

/// `<root>/<experiment>/` holding one CSV per cell and `manifest.csv`.
#[derive(Debug, Clone)]
pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path, experiment: &str) -> Result<Self, HarnessError> {
        let dir = root.join(experiment);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_cell<S: AsRef<str>>(
        &self,
        cell: &str,
        header: &[S],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join(format!("{cell}.csv"));
        write_csv_atomic(&path, header, rows)?;
        Ok(path)
    }

    pub fn write_manifest(&self, manifest: &Manifest) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join("manifest.csv");
        let rows: Vec<Vec<String>> =
            manifest.entries.iter().map(|(c, k, v)| vec![c.clone(), k.clone(), v.clone()]).collect();
        write_csv_atomic(&path, &["cell", "key", "value"], &rows)?;
        Ok(path)
    }
}
