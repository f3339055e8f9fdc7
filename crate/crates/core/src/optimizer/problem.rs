use std::collections::BTreeMap;
use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::Standardization;
use crate::error::{Error, Result};
use crate::sgp::{FitcModel, ModelArtifact};
use crate::space::DesignSpace;

/// A smooth response over the unit hypercube, evaluated in the channel's
/// standardized units.
pub trait ResponseModel: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, u: &[f64]) -> Result<f64>;
    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>>;
    /// Map from model units to the standardized units of `value`.
    fn standardization(&self) -> Standardization;
}

impl ResponseModel for FitcModel {
    fn dim(&self) -> usize {
        FitcModel::dim(self)
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        self.predict_mean(u)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.predict_gradient(u)
    }

    fn standardization(&self) -> Standardization {
        FitcModel::standardization(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "<=", alias = "le")]
    AtMost,
    #[serde(rename = ">=", alias = "ge")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub channel: String,
    pub limit: f64,
    #[serde(default = "at_most")]
    pub direction: Direction,
}

fn at_most() -> Direction {
    Direction::AtMost
}

impl Constraint {
    pub fn at_most(channel: impl Into<String>, limit: f64) -> Self {
        Constraint {
            channel: channel.into(),
            limit,
            direction: Direction::AtMost,
        }
    }

    pub fn at_least(channel: impl Into<String>, limit: f64) -> Self {
        Constraint {
            channel: channel.into(),
            limit,
            direction: Direction::AtLeast,
        }
    }
}

/// Objective and inequality constraints over surrogate channels, bound to
/// a design space.
#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    pub space: DesignSpace,
    pub objective: String,
    pub constraints: Vec<Constraint>,
    pub surrogates: BTreeMap<String, Arc<dyn ResponseModel>>,
}

/// Value of a constraint in standardized units together with its gradient;
/// feasible when `value <= 0`.
#[derive(Debug, Clone)]
pub struct ConstraintValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Objective and constraints of a design, in model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objective: f64,
    pub constraints: Vec<f64>,
    /// Largest standardized constraint violation (0 when feasible).
    pub max_violation: f64,
}

impl ProblemDefinition {
    pub fn new(
        space: DesignSpace,
        objective: impl Into<String>,
        constraints: Vec<Constraint>,
        surrogates: BTreeMap<String, Arc<dyn ResponseModel>>,
    ) -> Result<Self> {
        let p = ProblemDefinition {
            space,
            objective: objective.into(),
            constraints,
            surrogates,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let names = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.channel));
        for name in names {
            let model = self
                .surrogates
                .get(name)
                .ok_or_else(|| Error::UnknownChannel(name.clone()))?;
            if model.dim() != self.space.dim() {
                return Err(Error::invalid(format!(
                    "surrogate `{name}` has input dimension {}, design space has {}",
                    model.dim(),
                    self.space.dim()
                )));
            }
        }
        if let Some(c) = self.constraints.iter().find(|c| !c.limit.is_finite()) {
            return Err(Error::invalid(format!("constraint on `{}` has a non-finite limit", c.channel)));
        }
        Ok(())
    }

    fn model(&self, name: &str) -> &dyn ResponseModel {
        self.surrogates[name].as_ref()
    }

    pub fn objective_model(&self) -> &dyn ResponseModel {
        self.model(&self.objective)
    }

    /// Objective in standardized units with gradient over the full
    /// normalized point.
    pub fn objective_standardized(&self, u: &[f64]) -> Result<(f64, Vec<f64>)> {
        let m = self.objective_model();
        Ok((m.value(u)?, m.gradient(u)?))
    }

    pub fn constraint_values(&self, u: &[f64]) -> Result<Vec<ConstraintValue>> {
        self.constraints
            .iter()
            .map(|c| {
                let m = self.model(&c.channel);
                let limit = m.standardization().apply(c.limit);
                let sign = match c.direction {
                    Direction::AtMost => 1.0,
                    Direction::AtLeast => -1.0,
                };
                let value = sign * (m.value(u)? - limit);
                let gradient = m.gradient(u)?.into_iter().map(|g| sign * g).collect();
                Ok(ConstraintValue { value, gradient })
            })
            .collect()
    }

    pub fn max_violation(&self, u: &[f64]) -> Result<f64> {
        Ok(self
            .constraint_values(u)?
            .iter()
            .fold(0.0f64, |m, c| m.max(c.value)))
    }

    /// Objective and constraint channels at a normalized point, in model units.
    pub fn evaluate_normalized(&self, u: &[f64]) -> Result<Evaluation> {
        let obj = self.objective_model();
        let objective = obj.standardization().invert(obj.value(u)?);
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let m = self.model(&c.channel);
                Ok(m.standardization().invert(m.value(u)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Evaluation {
            objective,
            constraints,
            max_violation: self.max_violation(u)?,
        })
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.evaluate_normalized(&self.space.normalize(x)?)
    }

    /// Same problem over a reordered design space; `order[k]` is the old
    /// index of new variable `k`. Every surrogate is wrapped accordingly.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let space = self.space.permuted(order)?;
        let surrogates = self
            .surrogates
            .iter()
            .map(|(k, m)| {
                let wrapped: Arc<dyn ResponseModel> = Arc::new(Permuted {
                    inner: m.clone(),
                    order: order.to_vec(),
                });
                (k.clone(), wrapped)
            })
            .collect();
        ProblemDefinition::new(space, self.objective.clone(), self.constraints.clone(), surrogates)
    }

    /// Load a problem file. Paths inside it are resolved relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = ProblemFile::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.resolve(base)
    }
}

#[derive(Debug)]
struct Permuted {
    inner: Arc<dyn ResponseModel>,
    order: Vec<usize>,
}

impl Permuted {
    fn original(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (k, &old) in self.order.iter().enumerate() {
            out[old] = u[k];
        }
        out
    }
}

impl ResponseModel for Permuted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        self.inner.value(&self.original(u))
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let g = self.inner.gradient(&self.original(u))?;
        Ok(self.order.iter().map(|&old| g[old]).collect())
    }

    fn standardization(&self) -> Standardization {
        self.inner.standardization()
    }
}

/// On-disk problem definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    /// Path to the design space JSON.
    pub space: PathBuf,
    pub objective: String,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    pub model_files: BTreeMap<String, PathBuf>,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("problem file serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, base: &Path) -> Result<ProblemDefinition> {
        let space = DesignSpace::load(base.join(&self.space))?;
        let mut surrogates: BTreeMap<String, Arc<dyn ResponseModel>> = BTreeMap::new();
        for (channel, file) in &self.model_files {
            let artifact = ModelArtifact::load(base.join(file))?;
            if artifact.input_names != space.names() {
                return Err(Error::invalid(format!(
                    "model for `{channel}` was trained on inputs {:?}, design space has {:?}",
                    artifact.input_names,
                    space.names()
                )));
            }
            surrogates.insert(channel.clone(), Arc::new(artifact.into_model()?));
        }
        ProblemDefinition::new(space, self.objective.clone(), self.constraints.clone(), surrogates)
    }
}
