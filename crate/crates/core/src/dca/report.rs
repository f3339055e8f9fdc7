use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::heatmap::render_heatmap;
use super::sweep::{sweep_cell, CellRecord, SweepConfig};
use crate::error::{Error, Result};
use crate::optimizer::ProblemDefinition;

/// Square matrix over the design variables; `None` marks a masked entry
/// (the diagonal, and any cell whose sweep did not keep enough points).
pub type MaskedMatrix = Vec<Vec<Option<f64>>>;

/// Guard in the denominator of the asymmetry index.
pub const ASYMMETRY_EPS: f64 = 1e-12;

/// Design coupling matrix `J_x` and objective sensitivity matrix `J_Ψ`.
///
/// Rows index the re-optimized variable A, columns the perturbed variable B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub variables: Vec<String>,
    pub config: SweepConfig,
    pub j_x: MaskedMatrix,
    pub j_psi: MaskedMatrix,
    /// Off-diagonal cells in row-major order.
    pub cells: Vec<CellRecord>,
}

#[derive(Serialize)]
struct NamedMatrix<'a> {
    rows: &'a str,
    columns: &'a str,
    values: &'a MaskedMatrix,
    mask: Vec<Vec<bool>>,
}

fn mask_of(m: &MaskedMatrix) -> Vec<Vec<bool>> {
    m.iter().map(|r| r.iter().map(Option::is_none).collect()).collect()
}

impl CouplingReport {
    /// Build a report from already-swept cells (row-major, off-diagonal).
    pub fn from_cells(variables: Vec<String>, config: SweepConfig, cells: Vec<CellRecord>) -> Self {
        let n = variables.len();
        let mut j_x = vec![vec![None; n]; n];
        let mut j_psi = vec![vec![None; n]; n];
        for c in &cells {
            if let Some((jx, jp)) = c.entries(config.norm) {
                j_x[c.optimized][c.perturbed] = Some(jx);
                j_psi[c.optimized][c.perturbed] = Some(jp);
            }
        }
        CouplingReport {
            variables,
            config,
            j_x,
            j_psi,
            cells,
        }
    }

    /// Construct directly from matrices, for encoded or hand-built inputs.
    /// Diagonal entries are masked regardless of what is passed.
    pub fn from_matrices(variables: Vec<String>, j_x: Vec<Vec<f64>>, j_psi: Vec<Vec<f64>>) -> Result<Self> {
        let n = variables.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if n == 0 || !square(&j_x) || !square(&j_psi) {
            return Err(Error::invalid("matrices must be square and match the variable list"));
        }
        let wrap = |m: Vec<Vec<f64>>| -> Result<MaskedMatrix> {
            m.into_iter()
                .enumerate()
                .map(|(i, r)| {
                    r.into_iter()
                        .enumerate()
                        .map(|(j, v)| {
                            if i == j {
                                Ok(None)
                            } else if v.is_finite() && v >= 0.0 {
                                Ok(Some(v))
                            } else {
                                Err(Error::invalid(format!("entry ({i}, {j}) = {v} must be finite and nonnegative")))
                            }
                        })
                        .collect()
                })
                .collect()
        };
        Ok(CouplingReport {
            variables,
            config: SweepConfig::default(),
            j_x: wrap(j_x)?,
            j_psi: wrap(j_psi)?,
            cells: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn jx(&self, a: usize, b: usize) -> Option<f64> {
        self.j_x[a][b]
    }

    pub fn jpsi(&self, a: usize, b: usize) -> Option<f64> {
        self.j_psi[a][b]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Largest unmasked `J_x` entry (0 when all are masked).
    pub fn max_jx(&self) -> f64 {
        self.j_x.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(*v))
    }

    pub fn cell(&self, a: usize, b: usize) -> Option<&CellRecord> {
        self.cells.iter().find(|c| c.optimized == a && c.perturbed == b)
    }

    /// The same report under a reordering of variables; `order[k]` is the
    /// old index of new variable `k`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = self.dim();
        let mut inverse = vec![0; n];
        for (k, &old) in order.iter().enumerate() {
            inverse[old] = k;
        }
        let perm = |m: &MaskedMatrix| -> MaskedMatrix {
            (0..n).map(|i| (0..n).map(|j| m[order[i]][order[j]]).collect()).collect()
        };
        let mut cells: Vec<CellRecord> = self
            .cells
            .iter()
            .map(|c| CellRecord {
                optimized: inverse[c.optimized],
                perturbed: inverse[c.perturbed],
                ..c.clone()
            })
            .collect();
        cells.sort_by_key(|c| (c.optimized, c.perturbed));
        CouplingReport {
            variables: order.iter().map(|&i| self.variables[i].clone()).collect(),
            config: self.config.clone(),
            j_x: perm(&self.j_x),
            j_psi: perm(&self.j_psi),
            cells,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            format: &'a str,
            variables: &'a [String],
            config: &'a SweepConfig,
            j_x: NamedMatrix<'a>,
            j_psi: NamedMatrix<'a>,
            cells: &'a [CellRecord],
        }
        fn named(m: &MaskedMatrix) -> NamedMatrix<'_> {
            NamedMatrix {
                rows: "optimized",
                columns: "perturbed",
                values: m,
                mask: mask_of(m),
            }
        }
        let out = Out {
            format: REPORT_FORMAT,
            variables: &self.variables,
            config: &self.config,
            j_x: named(&self.j_x),
            j_psi: named(&self.j_psi),
            cells: &self.cells,
        };
        serde_json::to_string_pretty(&out).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct In {
            variables: Vec<String>,
            config: SweepConfig,
            j_x: InMatrix,
            j_psi: InMatrix,
            #[serde(default)]
            cells: Vec<CellRecord>,
        }
        #[derive(Deserialize)]
        struct InMatrix {
            values: MaskedMatrix,
        }
        let r: In = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "coupling report".into(),
            source,
        })?;
        let n = r.variables.len();
        for m in [&r.j_x.values, &r.j_psi.values] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::invalid("report matrices do not match the variable list"));
            }
        }
        Ok(CouplingReport {
            variables: r.variables,
            config: r.config,
            j_x: r.j_x.values,
            j_psi: r.j_psi.values,
            cells: r.cells,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    /// One matrix as CSV: a header of variable names, one row per
    /// optimized variable, empty fields for masked entries.
    pub fn matrix_csv(&self, which: Matrix) -> Result<String> {
        let m = match which {
            Matrix::Coupling => &self.j_x,
            Matrix::Sensitivity => &self.j_psi,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |source| Error::Csv {
            context: "matrix export".into(),
            source,
        };
        let mut header = vec!["optimized\\perturbed".to_string()];
        header.extend(self.variables.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (name, row) in self.variables.iter().zip(m) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.map(|x| format!("{x:?}")).unwrap_or_default()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    /// Write `report.json`, `j_x.csv`, `j_psi.csv`, `j_x.svg`, `j_psi.svg`
    /// into `dir`; returns the written paths.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("report.json", self.to_json()),
            ("j_x.csv", self.matrix_csv(Matrix::Coupling)?),
            ("j_psi.csv", self.matrix_csv(Matrix::Sensitivity)?),
            ("j_x.svg", render_heatmap("Design coupling J_x (rows: optimized, columns: perturbed)", &self.variables, &self.j_x)),
            ("j_psi.svg", render_heatmap("Objective sensitivity J_psi (rows: optimized, columns: perturbed)", &self.variables, &self.j_psi)),
        ];
        let mut written = Vec::new();
        for (name, content) in files {
            let p = dir.join(name);
            std::fs::write(&p, content).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}

pub const REPORT_FORMAT: &str = "couplekit.coupling.v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Matrix {
    Coupling,
    Sensitivity,
}

/// Sweep every ordered off-diagonal pair. Cells run in parallel; the
/// result does not depend on scheduling.
pub fn coupling_matrices(problem: &ProblemDefinition, config: &SweepConfig) -> Result<CouplingReport> {
    config.validate()?;
    let n = problem.space.dim();
    if n < 2 {
        return Err(Error::invalid("coupling analysis needs at least two variables"));
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let cells = pairs
        .into_par_iter()
        .map(|(a, b)| sweep_cell(problem, a, b, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingReport::from_cells(problem.space.names(), config.clone(), cells))
}

/// `|J_x(A,B) − J_x(B,A)| / max(J_x(A,B), J_x(B,A), ε)`; masked where either
/// entry is.
pub fn asymmetry_index(report: &CouplingReport) -> MaskedMatrix {
    let n = report.dim();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| match (report.jx(a, b), report.jx(b, a)) {
                    (Some(ab), Some(ba)) => {
                        // min/max ordering makes the index exactly symmetric
                        let (lo, hi) = (ab.min(ba), ab.max(ba));
                        Some((hi - lo) / hi.max(ASYMMETRY_EPS))
                    }
                    _ => None,
                })
                .collect()
        })
        .collect()
}
