//! Sequential decomposition from a coupling matrix.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dca::CouplingReport;
use crate::error::{Error, Result};
use crate::space::DesignSpace;
use crate::util::invariant_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Mutual coupling needed to share a stage, relative to the largest entry.
    pub tau_group: f64,
    /// Coupling needed for an influence edge, relative to the largest entry.
    pub tau_influence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau_group: 0.5,
            tau_influence: 0.25,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("tau_group", self.tau_group), ("tau_influence", self.tau_influence)] {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {t}")));
            }
        }
        Ok(())
    }
}

/// One recorded decision. Every entry carries the matrix values and the
/// absolute threshold it was compared against, so a plan can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TraceEntry {
    /// `J_x(to, from) >= threshold` makes `from` an influence on `to`.
    Edge {
        from: String,
        to: String,
        entry: f64,
        threshold: f64,
        kept: bool,
    },
    /// Both directions at least `threshold`: the pair shares a stage.
    Mutual {
        a: String,
        b: String,
        a_given_b: f64,
        b_given_a: f64,
        threshold: f64,
        grouped: bool,
    },
    /// Net influence of a group across its boundary.
    NetInfluence {
        group: Vec<String>,
        outgoing: f64,
        incoming: f64,
        net: f64,
    },
    /// Final position of a group.
    Order { position: usize, group: Vec<String>, net: f64 },
}

/// Ordered stages of variable groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequencePlan {
    pub stages: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default)]
    pub trace: Vec<TraceEntry>,
}

impl SequencePlan {
    /// A plan given directly as stages, with no derivation trace.
    pub fn from_stages<S: AsRef<str>>(stages: &[Vec<S>]) -> Self {
        SequencePlan {
            stages: stages
                .iter()
                .map(|s| s.iter().map(|v| v.as_ref().to_string()).collect())
                .collect(),
            thresholds: None,
            trace: Vec::new(),
        }
    }

    /// Everything optimized at once.
    pub fn simultaneous(space: &DesignSpace) -> Self {
        SequencePlan::from_stages(&[space.names()])
    }

    /// Resolve names to indices and check the stages are disjoint.
    pub fn resolve(&self, space: &DesignSpace) -> Result<Vec<Vec<usize>>> {
        if self.stages.is_empty() || self.stages.iter().any(Vec::is_empty) {
            return Err(Error::invalid("a plan needs at least one stage and no empty stages"));
        }
        let mut seen = vec![false; space.dim()];
        self.stages
            .iter()
            .map(|stage| {
                stage
                    .iter()
                    .map(|name| {
                        let i = space.index_of(name)?;
                        if std::mem::replace(&mut seen[i], true) {
                            return Err(Error::invalid(format!("variable `{name}` appears in more than one stage")));
                        }
                        Ok(i)
                    })
                    .collect()
            })
            .collect()
    }

    /// `[{a}, {b, c}]`-style summary.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.stages.iter().map(|s| format!("{{{}}}", s.join(", "))).collect();
        format!("[{}]", parts.join(", "))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "sequence plan".into(),
            source,
        })
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

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

/// Group mutually strong pairs, then order groups by net influence
/// (outgoing minus incoming edge weight across the group boundary),
/// breaking ties by the smallest member index.
pub fn build_sequence(report: &CouplingReport, thresholds: Thresholds) -> Result<SequencePlan> {
    thresholds.validate()?;
    let n = report.dim();
    if n == 0 {
        return Err(Error::invalid("empty coupling report"));
    }
    let names = &report.variables;
    let max = report.max_jx();
    let t_inf = thresholds.tau_influence * max;
    let t_grp = thresholds.tau_group * max;
    // masked entries carry no coupling
    let j = |a: usize, b: usize| report.jx(a, b).unwrap_or(0.0);
    // with an all-zero matrix nothing can be an edge
    let strong = |v: f64, t: f64| max > 0.0 && v >= t;
    let mut trace = Vec::new();

    // influence edges B -> A
    let mut edge = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let kept = strong(j(a, b), t_inf);
            edge[a][b] = kept;
            trace.push(TraceEntry::Edge {
                from: names[b].clone(),
                to: names[a].clone(),
                entry: j(a, b),
                threshold: t_inf,
                kept,
            });
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in a + 1..n {
            let grouped = strong(j(a, b), t_grp) && strong(j(b, a), t_grp);
            trace.push(TraceEntry::Mutual {
                a: names[a].clone(),
                b: names[b].clone(),
                a_given_b: j(a, b),
                b_given_a: j(b, a),
                threshold: t_grp,
                grouped,
            });
            if grouped {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| find(&mut parent, g[0]) == r) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }

    let mut scored: Vec<(f64, Vec<usize>)> = groups
        .into_iter()
        .map(|g| {
            let inside = |k: usize| g.contains(&k);
            let mut out = Vec::new();
            let mut inc = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    if a != b && edge[a][b] {
                        if inside(b) && !inside(a) {
                            out.push(j(a, b));
                        } else if inside(a) && !inside(b) {
                            inc.push(j(a, b));
                        }
                    }
                }
            }
            let (outgoing, incoming) = (invariant_sum(&mut out), invariant_sum(&mut inc));
            let net = outgoing - incoming;
            trace.push(TraceEntry::NetInfluence {
                group: g.iter().map(|&i| names[i].clone()).collect(),
                outgoing,
                incoming,
                net,
            });
            (net, g)
        })
        .collect();
    scored.sort_by(|(na, ga), (nb, gb)| nb.total_cmp(na).then(ga[0].cmp(&gb[0])));

    let stages: Vec<Vec<String>> = scored
        .iter()
        .map(|(_, g)| g.iter().map(|&i| names[i].clone()).collect())
        .collect();
    for (position, ((net, _), group)) in scored.iter().zip(&stages).enumerate() {
        trace.push(TraceEntry::Order {
            position,
            group: group.clone(),
            net: *net,
        });
    }
    Ok(SequencePlan {
        stages,
        thresholds: Some(thresholds),
        trace,
    })
}
