//! Influential-subset selection from the two matrices.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dca::CouplingReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMode {
    /// Top-k objective sensitivity.
    SensitivityOnly,
    /// Most sensitive variable, then greedily the most strongly coupled.
    CouplingAware,
}

impl FromStr for SubsetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sensitivity_only" | "sensitivity-only" => Ok(SubsetMode::SensitivityOnly),
            "coupling_aware" | "coupling-aware" => Ok(SubsetMode::CouplingAware),
            _ => Err(Error::invalid(format!(
                "unknown subset mode `{s}` (expected sensitivity_only or coupling_aware)"
            ))),
        }
    }
}

impl fmt::Display for SubsetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubsetMode::SensitivityOnly => "sensitivity_only",
            SubsetMode::CouplingAware => "coupling_aware",
        })
    }
}

/// How a column of `J_Ψ` is reduced to one sensitivity score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityScore {
    #[default]
    ColumnMax,
    ColumnMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStep {
    pub step: usize,
    pub candidate: String,
    pub sensitivity: f64,
    /// Strongest coupling to the already-chosen set (coupling-aware steps
    /// after the first).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    pub chosen: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection {
    pub mode: SubsetMode,
    pub score: SensitivityScore,
    /// Chosen variable names in selection order.
    pub chosen: Vec<String>,
    /// Sensitivity score of every variable, in report order.
    pub sensitivities: Vec<f64>,
    pub trace: Vec<SubsetStep>,
}

impl SubsetSelection {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("selection serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Sensitivity of each perturbed variable B over the rows of `J_Ψ`.
pub fn sensitivity_scores(report: &CouplingReport, score: SensitivityScore) -> Vec<f64> {
    let n = report.dim();
    (0..n)
        .map(|b| {
            let col: Vec<f64> = (0..n).filter_map(|a| report.jpsi(a, b)).collect();
            if col.is_empty() {
                return 0.0;
            }
            match score {
                SensitivityScore::ColumnMax => col.iter().fold(0.0f64, |m, v| m.max(*v)),
                SensitivityScore::ColumnMean => col.iter().sum::<f64>() / col.len() as f64,
            }
        })
        .collect()
}

pub fn select_subset(report: &CouplingReport, k: usize, mode: SubsetMode) -> Result<SubsetSelection> {
    select_subset_with(report, k, mode, SensitivityScore::ColumnMax)
}

pub fn select_subset_with(
    report: &CouplingReport,
    k: usize,
    mode: SubsetMode,
    score: SensitivityScore,
) -> Result<SubsetSelection> {
    let n = report.dim();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k must satisfy 1 <= k <= {n}, got {k}")));
    }
    let names = &report.variables;
    let sens = sensitivity_scores(report, score);
    // higher sensitivity first, then lower index
    let by_sensitivity = |a: &usize, b: &usize| sens[*b].total_cmp(&sens[*a]).then(a.cmp(b));
    let mut trace = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(k);

    match mode {
        SubsetMode::SensitivityOnly => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(by_sensitivity);
            chosen.extend(&order[..k]);
            for (rank, &i) in order.iter().enumerate() {
                trace.push(SubsetStep {
                    step: rank,
                    candidate: names[i].clone(),
                    sensitivity: sens[i],
                    coupling: None,
                    chosen: rank < k,
                });
            }
        }
        SubsetMode::CouplingAware => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(by_sensitivity);
            let first = order[0];
            chosen.push(first);
            for &i in &order {
                trace.push(SubsetStep {
                    step: 0,
                    candidate: names[i].clone(),
                    sensitivity: sens[i],
                    coupling: None,
                    chosen: i == first,
                });
            }
            let jx = |a: usize, b: usize| report.jx(a, b).unwrap_or(0.0);
            for step in 1..k {
                let coupling = |c: usize| {
                    chosen
                        .iter()
                        .map(|&s| jx(s, c).max(jx(c, s)))
                        .fold(0.0f64, f64::max)
                };
                let candidates: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                let best = *candidates
                    .iter()
                    .max_by(|a, b| {
                        coupling(**a)
                            .total_cmp(&coupling(**b))
                            .then(by_sensitivity(a, b).reverse())
                    })
                    .expect("k <= n leaves a candidate");
                for &c in &candidates {
                    trace.push(SubsetStep {
                        step,
                        candidate: names[c].clone(),
                        sensitivity: sens[c],
                        coupling: Some(coupling(c)),
                        chosen: c == best,
                    });
                }
                chosen.push(best);
            }
        }
    }
    Ok(SubsetSelection {
        mode,
        score,
        chosen: chosen.iter().map(|&i| names[i].clone()).collect(),
        sensitivities: sens,
        trace,
    })
}
