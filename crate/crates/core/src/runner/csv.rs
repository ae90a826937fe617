use std::fs;
use std::io::Write;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::sim::Trajectory;

/// One CSV output held in memory until every table of a run is ready.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// File stem appended to the output prefix.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| num(x)).collect());
    }

    /// Prepend a constant column.
    pub fn tagged(mut self, column: &str, value: &str) -> Self {
        self.header.insert(0, column.to_string());
        for r in &mut self.rows {
            r.insert(0, value.to_string());
        }
        self
    }

    pub fn render(&self, manifest: &[String]) -> String {
        let mut s = String::new();
        for line in manifest {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(&self.header.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip decimal form; exponent notation outside [1e-4, 1e15).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "t_ns", "I_M_mA", "I_S_mA", "Q_M", "Q_S", "phi_M_rad", "phi_S_rad", "N_M", "N_S", "dT_M_K",
];

pub fn trajectory_table(name: &str, traj: &Trajectory) -> CsvTable {
    let mut t = CsvTable::new(name, &TRAJECTORY_HEADER);
    for k in 0..traj.len() {
        let (m, s) = (&traj.master[k], &traj.slave[k]);
        t.push_nums(&[
            traj.time(k) * 1e9,
            traj.i_master[k] * 1e3,
            traj.i_slave[k] * 1e3,
            m.q,
            s.q,
            m.phi,
            s.phi,
            m.n,
            s.n,
            m.dt,
        ]);
    }
    t
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Write `<prefix><name>.csv` for every table. If any write fails, files
/// already written by this call are removed.
pub fn write_tables(prefix: &str, tables: &[CsvTable], manifest: &[String]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(tables.len());
    for t in tables {
        let path = PathBuf::from(format!("{prefix}{}.csv", t.name));
        let res = fs::File::create(&path).and_then(|mut f| {
            f.write_all(t.render(manifest).as_bytes())?;
            f.sync_all()
        });
        if let Err(e) = res {
            let _ = fs::remove_file(&path);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(io_error(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}
