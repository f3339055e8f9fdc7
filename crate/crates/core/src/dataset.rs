//! Tabular training data and output standardization.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::DesignSpace;

/// Columns whose sample standard deviation falls below this are rejected.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Objective,
    Constraint,
    Auxiliary,
}

/// Affine z-score map of one output channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    pub const IDENTITY: Standardization = Standardization { mean: 0.0, std: 1.0 };

    pub fn apply(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    /// Fit to a column using the sample (n - 1) standard deviation.
    pub fn fit(name: &str, column: &[f64]) -> Result<Self> {
        let n = column.len();
        if n < 2 {
            return Err(Error::DegenerateChannel(name.to_string()));
        }
        let mean = column.iter().sum::<f64>() / n as f64;
        let var = column.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        if !(std > DEGENERATE_STD) {
            return Err(Error::DegenerateChannel(name.to_string()));
        }
        Ok(Standardization { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputChannel {
    pub name: String,
    pub kind: ChannelKind,
    pub standardization: Standardization,
}

/// Input/output samples, one row per evaluated design.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        input_names: Vec<String>,
        output_names: Vec<String>,
        inputs: Vec<Vec<f64>>,
        outputs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::invalid(format!(
                "{} input rows but {} output rows",
                inputs.len(),
                outputs.len()
            )));
        }
        for row in &inputs {
            if row.len() != input_names.len() {
                return Err(Error::invalid("input row width does not match header"));
            }
        }
        for row in &outputs {
            if row.len() != output_names.len() {
                return Err(Error::invalid("output row width does not match header"));
            }
        }
        let ds = Dataset {
            input_names,
            output_names,
            inputs,
            outputs,
        };
        if ds.inputs.iter().chain(&ds.outputs).flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(ds)
    }

    /// Inputs only, e.g. a fresh design of experiments.
    pub fn inputs_only(input_names: Vec<String>, inputs: Vec<Vec<f64>>) -> Result<Self> {
        let n = inputs.len();
        Self::new(input_names, Vec::new(), inputs, vec![Vec::new(); n])
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn output_index(&self, name: &str) -> Result<usize> {
        self.output_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    pub fn output_column(&self, index: usize) -> Vec<f64> {
        self.outputs.iter().map(|r| r[index]).collect()
    }

    /// Rows mapped into the unit hypercube of `space`. Input columns must
    /// match the space's variable order.
    pub fn normalized_inputs(&self, space: &DesignSpace) -> Result<Vec<Vec<f64>>> {
        if self.input_names != space.names() {
            return Err(Error::invalid(
                "dataset input columns do not match the design space variable order",
            ));
        }
        self.inputs.iter().map(|x| space.normalize(x)).collect()
    }

    /// Read a CSV whose header lists the design variables of `space`
    /// followed by output channels. Rows with a non-finite or unparsable
    /// value are dropped; the count of dropped rows is returned alongside.
    pub fn read_csv<R: Read>(reader: R, space: &DesignSpace) -> Result<(Self, usize)> {
        let ctx = |source| Error::Csv {
            context: "dataset".into(),
            source,
        };
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header: Vec<String> = rdr.headers().map_err(ctx)?.iter().map(str::to_string).collect();
        let names = space.names();
        let mut input_cols = Vec::with_capacity(names.len());
        for name in &names {
            let col = header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::invalid(format!("dataset is missing input column `{name}`")))?;
            input_cols.push(col);
        }
        let output_cols: Vec<usize> = (0..header.len()).filter(|c| !input_cols.contains(c)).collect();
        let output_names = output_cols.iter().map(|&c| header[c].clone()).collect();

        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        let mut rejected = 0usize;
        for record in rdr.records() {
            let record = record.map_err(ctx)?;
            let parse = |c: usize| -> Option<f64> {
                record.get(c)?.trim().parse::<f64>().ok().filter(|v| v.is_finite())
            };
            let x: Option<Vec<f64>> = input_cols.iter().map(|&c| parse(c)).collect();
            let y: Option<Vec<f64>> = output_cols.iter().map(|&c| parse(c)).collect();
            match (x, y) {
                (Some(x), Some(y)) => {
                    inputs.push(x);
                    outputs.push(y);
                }
                _ => rejected += 1,
            }
        }
        Ok((Dataset::new(names, output_names, inputs, outputs)?, rejected))
    }

    pub fn load_csv(path: impl AsRef<Path>, space: &DesignSpace) -> Result<(Self, usize)> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, space).map_err(|e| match e {
            Error::Csv { source, .. } => Error::Csv {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let ctx = |source| Error::Csv {
            context: "dataset".into(),
            source,
        };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.input_names.iter().chain(&self.output_names))
            .map_err(ctx)?;
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            w.write_record(x.iter().chain(y).map(|v| format_float(*v)))
                .map_err(ctx)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Keep only the named output columns, in the given order.
    pub fn select_outputs(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.output_index(n))
            .collect::<Result<Vec<_>>>()?;
        let outputs = self
            .outputs
            .iter()
            .map(|row| idx.iter().map(|&i| row[i]).collect())
            .collect();
        Dataset::new(self.input_names.clone(), names.to_vec(), self.inputs.clone(), outputs)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Z-score every output column. Fails on the first constant column.
pub fn standardize_outputs(ds: &Dataset) -> Result<(Dataset, Vec<Standardization>)> {
    let scales = (0..ds.output_names.len())
        .map(|j| Standardization::fit(&ds.output_names[j], &ds.output_column(j)))
        .collect::<Result<Vec<_>>>()?;
    let outputs = ds
        .outputs
        .iter()
        .map(|row| row.iter().zip(&scales).map(|(y, s)| s.apply(*y)).collect())
        .collect();
    let out = Dataset {
        outputs,
        ..ds.clone()
    };
    Ok((out, scales))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{DesignVariable, Role};

    fn one_dim(outputs: Vec<f64>) -> Dataset {
        let n = outputs.len();
        Dataset::new(
            vec!["x".into()],
            vec!["y".into()],
            (0..n).map(|i| vec![i as f64]).collect(),
            outputs.into_iter().map(|y| vec![y]).collect(),
        )
        .unwrap()
    }

    fn moments(col: &[f64]) -> (f64, f64) {
        let n = col.len() as f64;
        let m = col.iter().sum::<f64>() / n;
        let v = col.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn z_score_of_one_two_three() {
        let (std, scales) = standardize_outputs(&one_dim(vec![1.0, 2.0, 3.0])).unwrap();
        let (m, s) = moments(&std.output_column(0));
        assert!(m.abs() < 1e-10 && (s - 1.0).abs() < 1e-10);
        assert_eq!(scales[0], Standardization { mean: 2.0, std: 1.0 });
    }

    #[test]
    fn standardizing_twice_is_a_no_op() {
        let (once, _) = standardize_outputs(&one_dim(vec![0.3, -1.2, 4.0, 2.5, 0.0])).unwrap();
        let (twice, _) = standardize_outputs(&once).unwrap();
        for (a, b) in once.output_column(0).iter().zip(twice.output_column(0)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_column_is_degenerate() {
        let err = standardize_outputs(&one_dim(vec![10.0, 10.0, 10.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateChannel(ref n) if n == "y"));
    }

    #[test]
    fn csv_ingestion_rejects_non_finite_rows() {
        let space = DesignSpace::new(vec![
            DesignVariable::new("a", 0.0, 1.0, 0.5, Role::Plant),
            DesignVariable::new("b", 0.0, 1.0, 0.5, Role::Control),
        ])
        .unwrap();
        let text = "b,a,out\n0.1,0.2,1.0\nNaN,0.2,1.0\n0.3,0.4,inf\n0.5,0.6,2.5\n0.7,,1\n";
        let (ds, rejected) = Dataset::read_csv(text.as_bytes(), &space).unwrap();
        assert_eq!(rejected, 3);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.input_names, vec!["a", "b"]);
        assert_eq!(ds.inputs[0], vec![0.2, 0.1]);
        assert_eq!(ds.output_names, vec!["out"]);
    }

    #[test]
    fn csv_missing_input_column() {
        let space =
            DesignSpace::new(vec![DesignVariable::new("a", 0.0, 1.0, 0.5, Role::Plant)]).unwrap();
        assert!(Dataset::read_csv("x,y\n1,2\n".as_bytes(), &space).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let space =
            DesignSpace::new(vec![DesignVariable::new("a", 0.0, 1.0, 0.5, Role::Plant)]).unwrap();
        let ds = Dataset::new(
            vec!["a".into()],
            vec!["y".into()],
            vec![vec![0.1 + 0.2], vec![1.0 / 3.0]],
            vec![vec![1e-300], vec![-7.25e12]],
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let (back, rejected) = Dataset::read_csv(buf.as_slice(), &space).unwrap();
        assert_eq!(rejected, 0);
        assert_eq!(back, ds);
    }
}
