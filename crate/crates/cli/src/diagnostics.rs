//! Diagnostics table and file-backed sink.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aggf_core::coupled::{DiagnosticsRecord, Sink, State};

use crate::snapshot::write_snapshot;

/// Column order of the diagnostics table. Stable output format.
pub const COLUMNS: [&str; 12] = [
    "t",
    "e_kin",
    "e_free",
    "e_total",
    "grad_mu_sq",
    "visc_diss",
    "mass",
    "phi_min",
    "phi_max",
    "separation",
    "cfl",
    "energy_residual",
];

pub fn header() -> String {
    COLUMNS.join(",")
}

pub fn format_row(d: &DiagnosticsRecord) -> String {
    let v = [
        d.t,
        d.e_kin,
        d.e_free,
        d.e_total,
        d.grad_mu_sq,
        d.visc_diss,
        d.mass,
        d.phi_min,
        d.phi_max,
        d.separation,
        d.cfl,
        d.energy_residual,
    ];
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Running invariant checks over a diagnostics stream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamAudit {
    pub mass0: f64,
    pub steps: usize,
    pub max_mass_drift: f64,
    pub max_energy_increase: f64,
    pub max_abs_residual: f64,
    pub max_abs_phi: f64,
    pub first_energy_violation: Option<usize>,
}

impl StreamAudit {
    pub fn new(mass0: f64) -> Self {
        Self {
            mass0,
            steps: 0,
            max_mass_drift: 0.0,
            max_energy_increase: 0.0,
            max_abs_residual: 0.0,
            max_abs_phi: 0.0,
            first_energy_violation: None,
        }
    }

    pub fn push(&mut self, step: usize, d: &DiagnosticsRecord, energy_tol: f64) {
        self.steps += 1;
        self.max_mass_drift = self.max_mass_drift.max((d.mass - self.mass0).abs());
        self.max_energy_increase = self.max_energy_increase.max(d.energy_change);
        self.max_abs_residual = self.max_abs_residual.max(d.energy_residual.abs());
        self.max_abs_phi = self.max_abs_phi.max(d.phi_max.abs()).max(d.phi_min.abs());
        if d.energy_change > energy_tol && self.first_energy_violation.is_none() {
            self.first_energy_violation = Some(step);
        }
    }
}

/// Writes `diagnostics.csv` and `snapshot_NNNNNN.aggf` files into a directory.
pub struct FileSink {
    table: BufWriter<File>,
    dir: PathBuf,
    pub audit: StreamAudit,
    energy_tol: f64,
}

impl FileSink {
    pub fn create(dir: &Path, mass0: f64, energy_tol: f64) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut table = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(table, "{}", header())?;
        Ok(Self {
            table,
            dir: dir.to_path_buf(),
            audit: StreamAudit::new(mass0),
            energy_tol,
        })
    }

    pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
        dir.join(format!("snapshot_{step:06}.aggf"))
    }

    pub fn finish(mut self) -> std::io::Result<StreamAudit> {
        self.table.flush()?;
        Ok(self.audit)
    }
}

impl Sink for FileSink {
    fn record(&mut self, step: usize, diag: &DiagnosticsRecord) -> std::io::Result<()> {
        self.audit.push(step, diag, self.energy_tol);
        writeln!(self.table, "{}", format_row(diag))
    }

    fn snapshot(&mut self, step: usize, state: &State) -> std::io::Result<()> {
        write_snapshot(state, &Self::snapshot_path(&self.dir, step)).map_err(|e| match e {
            crate::snapshot::SnapshotError::Io(io) => io,
            other => std::io::Error::other(other.to_string()),
        })
    }
}
