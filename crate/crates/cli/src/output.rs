//! Artifact writers. Files are written to a temporary sibling and renamed into place,
//! so a failed run never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use solitons_core::functionals::EnergyReport;
use solitons_core::ground_state::SolveReport;
use solitons_core::{Params, RadialField, RadialGrid};

pub const OUT_DIR_VAR: &str = "SOLITON_OUT_DIR";

/// Where an artifact goes: an explicit path (relative paths resolve under
/// `SOLITON_OUT_DIR` when set), `$SOLITON_OUT_DIR/<command>.<ext>`, or stdout.
pub fn resolve_target(out: Option<&Path>, command: &str, ext: &str) -> Option<PathBuf> {
    let root = std::env::var_os(OUT_DIR_VAR).map(PathBuf::from);
    match (out, root) {
        (Some(p), Some(root)) if p.is_relative() => Some(root.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(root)) => Some(root.join(format!("{command}.{ext}"))),
        (None, None) => None,
    }
}

pub fn emit(target: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match target {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
        Some(path) => write_atomic(path, bytes),
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("write: cannot create directory {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("write: cannot create a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("write: cannot rename into {}", path.display()))?;
    Ok(())
}

/// Reals as written in tables: 17 significant digits.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV table with trailing `# ...` annotation lines.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    notes: Vec<String>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self {
            writer,
            notes: Vec::new(),
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        let mut bytes = self.writer.into_inner().context("csv: flush failed")?;
        for n in self.notes {
            for line in n.lines() {
                bytes.extend_from_slice(format!("# {line}\n").as_bytes());
            }
        }
        Ok(bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldValues {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
}

/// The JSON document written for one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub command: String,
    pub params: Params,
    pub grid: GridSpec,
    pub values: FieldValues,
    pub energy: EnergyReport,
    pub iterations: usize,
    pub converged: bool,
    pub positivity: bool,
}

impl SolutionDocument {
    pub fn new(command: &str, report: &SolveReport) -> Self {
        let grid = report.u.grid();
        Self {
            command: command.into(),
            params: report.params,
            grid: GridSpec {
                n: grid.n(),
                r_max: grid.r_max(),
            },
            values: FieldValues {
                r: grid.nodes().collect(),
                u: report.u.values().to_vec(),
                phi: report.phi.values().to_vec(),
            },
            energy: report.energy,
            iterations: report.iterations,
            converged: report.converged,
            positivity: report.positivity,
        }
    }

    /// Rebuilds `u` and `phi` on the recorded grid.
    pub fn fields(&self) -> Result<(RadialField, RadialField)> {
        let grid = RadialGrid::new(self.grid.n, self.grid.r_max)?;
        Ok((
            RadialField::new(grid, self.values.u.clone())?,
            RadialField::new(grid, self.values.phi.clone())?,
        ))
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut t = Table::new(&["r", "u", "phi"])?;
        for ((r, u), phi) in self.values.r.iter().zip(&self.values.u).zip(&self.values.phi) {
            t.row([real(*r), real(*u), real(*phi)])?;
        }
        let e = &self.energy;
        t.note(format!("action = {}", real(e.action)));
        t.note(format!("nehari = {}", real(e.nehari)));
        t.note(format!("pohozaev = {}", real(e.pohozaev)));
        t.note(format!("gradient_norm = {}", real(e.gradient_norm)));
        t.note(format!("converged = {}", self.converged));
        t.into_bytes()
    }
}

pub fn read_solution(path: &Path) -> Result<SolutionDocument> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("read_solution: cannot read {}", path.display()))?;
    let doc: SolutionDocument = serde_json::from_str(&text)
        .with_context(|| format!("read_solution: malformed document {}", path.display()))?;
    if doc.values.u.len() != doc.grid.n + 1 || doc.values.phi.len() != doc.grid.n + 1 {
        bail!("read_solution: field length does not match grid n = {}", doc.grid.n);
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_appends_notes_after_rows() {
        let mut t = Table::new(&["c", "energy"]).unwrap();
        t.row([real(4.0), real(-0.5)]).unwrap();
        t.note("order = 1");
        let s = String::from_utf8(t.into_bytes().unwrap()).unwrap();
        assert_eq!(
            s,
            "c,energy\n4.0000000000000000e0,-5.0000000000000000e-1\n# order = 1\n"
        );
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
