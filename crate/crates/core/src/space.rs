//! Design variables, bounds, and the map between model units and the unit
//! hypercube.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking a point against its box.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Plant,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub nominal: f64,
    pub role: Role,
}

impl DesignVariable {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, nominal: f64, role: Role) -> Self {
        DesignVariable {
            name: name.into(),
            lower,
            upper,
            nominal,
            role,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.nominal.is_finite()) {
            return Err(Error::invalid(format!(
                "variable `{}` has non-finite bounds or nominal",
                self.name
            )));
        }
        if self.lower >= self.upper {
            return Err(Error::invalid(format!(
                "variable `{}` has lower bound {} >= upper bound {}",
                self.name, self.lower, self.upper
            )));
        }
        if self.nominal < self.lower || self.nominal > self.upper {
            return Err(Error::BoundsViolation {
                variable: self.name.clone(),
                value: self.nominal,
                lower: self.lower,
                upper: self.upper,
            });
        }
        Ok(())
    }
}

/// An ordered set of design variables plus constant parameters that are fed
/// to the surrogate but never varied.
///
/// The order of `variables` is the index order used by every matrix and
/// report downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceFile", into = "SpaceFile")]
pub struct DesignSpace {
    variables: Vec<DesignVariable>,
    fixed_parameters: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    variables: Vec<DesignVariable>,
    #[serde(default)]
    fixed_parameters: BTreeMap<String, f64>,
}

impl TryFrom<SpaceFile> for DesignSpace {
    type Error = Error;

    fn try_from(file: SpaceFile) -> Result<Self> {
        DesignSpace::with_fixed(file.variables, file.fixed_parameters)
    }
}

impl From<DesignSpace> for SpaceFile {
    fn from(space: DesignSpace) -> Self {
        SpaceFile {
            variables: space.variables,
            fixed_parameters: space.fixed_parameters,
        }
    }
}

impl DesignSpace {
    pub fn new(variables: Vec<DesignVariable>) -> Result<Self> {
        Self::with_fixed(variables, BTreeMap::new())
    }

    pub fn with_fixed(
        variables: Vec<DesignVariable>,
        fixed_parameters: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::invalid("a design space needs at least one variable"));
        }
        let mut seen = HashSet::new();
        for v in &variables {
            v.validate()?;
            if !seen.insert(v.name.as_str()) {
                return Err(Error::invalid(format!("duplicate variable name `{}`", v.name)));
            }
        }
        for (k, v) in &fixed_parameters {
            if !v.is_finite() {
                return Err(Error::invalid(format!("fixed parameter `{k}` is not finite")));
            }
        }
        Ok(DesignSpace {
            variables,
            fixed_parameters,
        })
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[DesignVariable] {
        &self.variables
    }

    pub fn variable(&self, index: usize) -> &DesignVariable {
        &self.variables[index]
    }

    pub fn fixed_parameters(&self) -> &BTreeMap<String, f64> {
        &self.fixed_parameters
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn nominal(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.nominal).collect()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.upper).collect()
    }

    /// Nominal point in the unit hypercube.
    pub fn nominal_normalized(&self) -> Vec<f64> {
        self.variables
            .iter()
            .map(|v| self.normalize_component(v, v.nominal))
            .collect()
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::invalid(format!(
                "point has {len} components, design space has {}",
                self.dim()
            )));
        }
        Ok(())
    }

    fn normalize_component(&self, v: &DesignVariable, x: f64) -> f64 {
        ((x - v.lower) / v.width()).clamp(0.0, 1.0)
    }

    /// Map a point in model units onto `[0, 1]^N`.
    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.variables
            .iter()
            .zip(x)
            .map(|(v, &xi)| {
                let tol = BOUND_TOL * v.width().max(v.lower.abs()).max(v.upper.abs()).max(1.0);
                if !xi.is_finite() || xi < v.lower - tol || xi > v.upper + tol {
                    return Err(Error::BoundsViolation {
                        variable: v.name.clone(),
                        value: xi,
                        lower: v.lower,
                        upper: v.upper,
                    });
                }
                Ok(self.normalize_component(v, xi))
            })
            .collect()
    }

    /// Inverse of [`normalize`](Self::normalize).
    pub fn denormalize(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u.len())?;
        u.iter()
            .enumerate()
            .map(|(i, &ui)| {
                if !ui.is_finite() || !(-BOUND_TOL..=1.0 + BOUND_TOL).contains(&ui) {
                    return Err(Error::Domain { index: i, value: ui });
                }
                Ok(self.denormalize_component(i, ui.clamp(0.0, 1.0)))
            })
            .collect()
    }

    /// Unchecked single-component inverse map. `u` must lie in `[0, 1]`.
    pub fn denormalize_component(&self, index: usize, u: f64) -> f64 {
        let v = &self.variables[index];
        if u == 1.0 {
            v.upper
        } else {
            v.lower + u * v.width()
        }
    }

    /// A copy of the space with the variables reordered so that new index
    /// `k` holds old variable `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.dim() {
            return Err(Error::invalid("permutation length does not match dimension"));
        }
        let variables = order
            .iter()
            .map(|&i| {
                self.variables
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("permutation index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_fixed(variables, self.fixed_parameters.clone())
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

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "design space".into(),
            source,
        })?;
        Self::try_from(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design space serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}
