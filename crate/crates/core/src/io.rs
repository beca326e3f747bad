//! CSV and JSON artifacts. Floats carry 17 significant digits so that a
//! round trip through text is exact.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::radial::{Evolution, NormSample};
use crate::scalar::Real;
use crate::singular::SingularSolutionTable;
use crate::threshold::ScanReport;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated text with a header row and `\n` line endings.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for c in cells {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
            first = false;
        }
        self.text.push('\n');
    }

    pub fn floats(&mut self, xs: &[f64]) {
        self.row(xs.iter().map(|&x| float(x)));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn table_csv<T: Real>(table: &SingularSolutionTable<T>) -> Csv {
    let mut csv = Csv::new(&["r", "u_star", "du_star"]);
    for i in 0..table.len() {
        csv.floats(&[table.r[i].as_f64(), table.u[i].as_f64(), table.du[i].as_f64()]);
    }
    csv
}

pub fn field_csv<T: Real>(ev: &Evolution<T>) -> Csv {
    let mut csv = Csv::new(&["t", "r", "u"]);
    let r = ev.initial.grid.nodes();
    for (t, v) in &ev.snapshots {
        for (ri, ui) in r.iter().zip(v) {
            csv.floats(&[t.as_f64(), ri.as_f64(), ui.as_f64()]);
        }
    }
    csv
}

pub fn norm_series_csv(series: &[NormSample]) -> Csv {
    let mut csv = Csv::new(&["t", "sup_norm", "l1ul_norm", "f_mass_inner"]);
    for s in series {
        csv.floats(&[s.t, s.sup_norm, s.l1ul_norm, s.f_mass_inner]);
    }
    csv
}

pub fn scan_csv(report: &ScanReport) -> Csv {
    let mut csv = Csv::new(&["amplitude", "classification", "t_detect", "cap", "sup_final", "reaction_mass_final"]);
    for row in report.rows() {
        csv.row([
            float(row.amplitude),
            row.classification.to_string(),
            row.t_detect.map(float).unwrap_or_default(),
            float(row.cap),
            float(row.sup_final),
            float(row.reaction_mass_final),
        ]);
    }
    csv
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize infallibly");
    s.push('\n');
    s
}

/// Files written under a `.partial` name and renamed by [`ArtifactSet::commit`].
/// Dropping the set without committing leaves the partial files in place.
#[derive(Debug)]
pub struct ArtifactSet {
    dir: PathBuf,
    pending: Vec<PathBuf>,
}

impl ArtifactSet {
    pub fn new(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, pending: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> io::Result<PathBuf> {
        let path = self.dir.join(format!("{name}.partial"));
        fs::write(&path, contents)?;
        self.pending.push(path.clone());
        Ok(path)
    }

    /// Renames every pending file to its final name.
    pub fn commit(mut self) -> io::Result<Vec<PathBuf>> {
        let mut out = Vec::with_capacity(self.pending.len());
        for p in self.pending.drain(..) {
            let fin = p.with_extension("");
            fs::rename(&p, &fin)?;
            out.push(fin);
        }
        Ok(out)
    }
}
