//! Command-line front end. Every artifact-producing command writes a run
//! manifest next to its outputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::{fowt_response, fowt_space, RESPONSE_LABEL};
use crate::dataset::Dataset;
use crate::dca::{coupling_matrices, InfeasiblePolicy, Scheme, SweepConfig};
use crate::error::{Error, Result};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::optimizer::{
    minimize_multistart, Constraint, Direction, OptimizationResult, OptimizationSpec, ProblemDefinition, ProblemFile,
    DCA_STARTS, FULL_STARTS,
};
use crate::sampling::latin_hypercube;
use crate::sgp::{default_inducing_count, exact_equivalence_gap, fit_channel, FitConfig, ModelArtifact};
use crate::space::DesignSpace;
use crate::strategy::{
    build_sequence, compare_strategies_with, run_sequence_with, select_subset_with, CompareOptions, SensitivityScore,
    SequencePlan, SubsetMode, SubsetSelection, Thresholds,
};
use crate::util::derive_seed;

/// Environment variable capping the worker count (0 = automatic).
pub const THREADS_ENV: &str = "COUPLEKIT_THREADS";

/// Largest training set for which `--m N` triggers the exact-GP self-check.
const SELF_CHECK_MAX_N: usize = 50;
const SELF_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "couplekit", version, about = "Surrogate-based design coupling analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Latin hypercube sample of a design space.
    Sample {
        space: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the eight-variable platform design space.
    FowtSpace {
        #[arg(long)]
        out: PathBuf,
    },
    /// Append the synthetic platform response channels to sampled inputs.
    SynthEval {
        space: PathBuf,
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one sparse GP per output channel.
    Train {
        space: PathBuf,
        data: PathBuf,
        /// Comma-separated channel names (default: every output column).
        #[arg(long, value_delimiter = ',')]
        channels: Vec<String>,
        /// Inducing points per channel (default: min(N, max(50, ceil(N/5)))).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write problem.json minimizing this channel.
        #[arg(long)]
        objective: Option<String>,
        /// Constraint as `channel<=limit` or `channel>=limit` (repeatable).
        #[arg(long = "constraint")]
        constraints: Vec<String>,
    },
    /// Coupling and objective-sensitivity matrices by perturbation sweeps.
    Dca {
        problem: PathBuf,
        #[arg(long, default_value_t = 11)]
        ns: usize,
        #[arg(long, default_value = "rms")]
        norm: String,
        #[arg(long, default_value = "central")]
        scheme: String,
        #[arg(long, default_value = "exclude")]
        infeasible: String,
        #[arg(long, default_value_t = DCA_STARTS)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Staged optimization plan from a coupling report.
    Plan {
        report: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tau_group: f64,
        #[arg(long, default_value_t = 0.25)]
        tau_influence: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Influential variable subset from a coupling report.
    Subset {
        report: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "coupling_aware")]
        mode: String,
        /// Column reduction of J_psi: column_max or column_mean.
        #[arg(long, default_value = "column_max")]
        score: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a staged plan.
    RunSequence {
        problem: PathBuf,
        plan: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = FULL_STARTS)]
        starts: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize a set of free variables with everything else at nominal.
    Optimize {
        problem: PathBuf,
        /// Comma-separated free variables (default: all).
        #[arg(long, value_delimiter = ',')]
        free: Vec<String>,
        #[arg(long, default_value_t = FULL_STARTS)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare baseline, simultaneous, plans, subsets, and random sequences.
    Compare {
        problem: PathBuf,
        #[arg(long, value_delimiter = ',')]
        plans: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        subsets: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = FULL_STARTS)]
        starts: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
}

fn error_line(kind: &str, message: impl Into<String>) -> String {
    let message: String = message.into();
    serde_json::to_string(&ErrorLine {
        error: kind,
        message: message.replace('\n', " "),
    })
    .expect("error line serializes")
}

/// Run with the process arguments and exit.
pub fn main() -> ! {
    std::process::exit(run(std::env::args_os()))
}

/// Run with explicit arguments (the first is the program name) and return
/// the exit code: 0 on success, 2 on validation errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let rendered = e.to_string();
                    let first = rendered
                        .lines()
                        .find(|l| !l.trim().is_empty())
                        .unwrap_or("invalid arguments")
                        .trim_start_matches("error: ")
                        .to_string();
                    eprintln!("{}", error_line("argument", first));
                    2
                }
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{}", error_line(e.kind(), e.to_string()));
        return 2;
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), e.to_string()));
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a nonnegative integer, got `{value}`")))?;
    if n > 0 {
        // fails harmlessly if a pool already exists in this process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_constraint(s: &str) -> Result<Constraint> {
    for (op, dir) in [("<=", Direction::AtMost), (">=", Direction::AtLeast)] {
        if let Some((ch, lim)) = s.split_once(op) {
            let limit: f64 = lim
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("constraint `{s}` has a non-numeric limit")))?;
            return Ok(Constraint {
                channel: ch.trim().to_string(),
                limit,
                direction: dir,
            });
        }
    }
    Err(Error::invalid(format!("constraint `{s}` must look like channel<=limit or channel>=limit")))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Sample { space, n, seed, out } => cmd_sample(&space, n, seed, &out),
        Command::FowtSpace { out } => {
            let mut m = RunManifest::new("fowt-space");
            write_text(&out, &fowt_space().to_json())?;
            m.output(&out)?;
            m.save(manifest_path_for(&out))
        }
        Command::SynthEval { space, data, out } => cmd_synth_eval(&space, &data, &out),
        Command::Train {
            space,
            data,
            channels,
            m,
            seed,
            out,
            objective,
            constraints,
        } => cmd_train(&space, &data, channels, m, seed, &out, objective, &constraints),
        Command::Dca {
            problem,
            ns,
            norm,
            scheme,
            infeasible,
            starts,
            seed,
            out,
        } => {
            let config = SweepConfig {
                n_sweep: ns,
                norm: norm.parse()?,
                scheme: match scheme.as_str() {
                    "central" => Scheme::Central,
                    "forward" => Scheme::Forward,
                    _ => return Err(Error::invalid(format!("unknown scheme `{scheme}` (expected central or forward)"))),
                },
                infeasible: match infeasible.as_str() {
                    "exclude" => InfeasiblePolicy::Exclude,
                    "fail" => InfeasiblePolicy::Fail,
                    _ => return Err(Error::invalid(format!("unknown infeasible policy `{infeasible}` (expected exclude or fail)"))),
                },
                n_starts: starts,
                seed,
            };
            cmd_dca(&problem, config, &out)
        }
        Command::Plan {
            report,
            tau_group,
            tau_influence,
            out,
        } => {
            let mut m = RunManifest::new("plan");
            let r = crate::dca::CouplingReport::load(&report)?;
            m.input(&report)?;
            let t = Thresholds { tau_group, tau_influence };
            let plan = m.phase("plan", || build_sequence(&r, t))?;
            m.config(t);
            write_text(&out, &plan.to_json())?;
            m.output(&out)?;
            m.save(manifest_path_for(&out))
        }
        Command::Subset {
            report,
            k,
            mode,
            score,
            out,
        } => {
            let mut m = RunManifest::new("subset");
            let r = crate::dca::CouplingReport::load(&report)?;
            m.input(&report)?;
            let mode: SubsetMode = mode.parse()?;
            let score = match score.as_str() {
                "column_max" => SensitivityScore::ColumnMax,
                "column_mean" => SensitivityScore::ColumnMean,
                _ => return Err(Error::invalid(format!("unknown score `{score}` (expected column_max or column_mean)"))),
            };
            let sel = m.phase("select", || select_subset_with(&r, k, mode, score))?;
            m.config(serde_json::json!({ "k": k, "mode": mode, "score": score }));
            write_text(&out, &sel.to_json())?;
            m.output(&out)?;
            m.save(manifest_path_for(&out))
        }
        Command::RunSequence {
            problem,
            plan,
            seed,
            starts,
            out,
        } => {
            let mut m = RunManifest::new("run-sequence");
            let p = load_problem(&problem, &mut m)?;
            let sp = SequencePlan::load(&plan)?;
            m.input(&plan)?;
            m.seed("seed", seed);
            m.config(serde_json::json!({ "starts": starts }));
            let outcome = m.phase("run", || run_sequence_with(&p, &sp, seed, starts))?;
            let stages: Vec<_> = outcome
                .stages
                .iter()
                .map(|s| {
                    serde_json::json!({
                        "stage": s.stage,
                        "variables": s.variables,
                        "seed": s.seed,
                        "result": ResultFile::new(&p, &s.result),
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "plan": sp.stages,
                "result": ResultFile::new(&p, &outcome.result),
                "stages": stages,
            });
            emit(&doc, out.as_deref(), m)
        }
        Command::Optimize {
            problem,
            free,
            starts,
            seed,
            out,
        } => {
            let mut m = RunManifest::new("optimize");
            let p = load_problem(&problem, &mut m)?;
            let spec = if free.is_empty() {
                OptimizationSpec::all_free(&p)?
            } else {
                let refs: Vec<&str> = free.iter().map(String::as_str).collect();
                OptimizationSpec::by_names(&p, &refs)?
            };
            m.seed("seed", seed);
            m.config(serde_json::json!({ "starts": starts, "free": free }));
            let r = m.phase("optimize", || minimize_multistart(&p, &spec, starts, seed))?;
            emit(&ResultFile::new(&p, &r), out.as_deref(), m)
        }
        Command::Compare {
            problem,
            plans,
            subsets,
            random,
            seed,
            starts,
            out,
        } => {
            let mut m = RunManifest::new("compare");
            let p = load_problem(&problem, &mut m)?;
            let mut loaded_plans = Vec::new();
            for path in &plans {
                loaded_plans.push(SequencePlan::load(path)?);
                m.input(path)?;
            }
            let mut loaded_subsets = Vec::new();
            for path in &subsets {
                loaded_subsets.push(SubsetSelection::load(path)?.chosen);
                m.input(path)?;
            }
            m.seed("seed", seed);
            m.config(serde_json::json!({ "random": random, "starts": starts }));
            let opts = CompareOptions {
                n_random: random,
                seed,
                n_starts: starts,
            };
            let table = m.phase("compare", || compare_strategies_with(&p, &loaded_plans, &loaded_subsets, &opts))?;
            if table.random_capped {
                m.notes.push(format!(
                    "requested {random} random sequences; capped at {} distinct",
                    table.random.as_ref().map_or(0, |s| s.count)
                ));
            }
            write_text(&out, &table.to_csv()?)?;
            m.output(&out)?;
            m.save(manifest_path_for(&out))
        }
    }
}

fn cmd_sample(space: &Path, n: usize, seed: u64, out: &Path) -> Result<()> {
    let mut m = RunManifest::new("sample");
    let s = DesignSpace::load(space)?;
    m.input(space)?;
    m.seed("seed", seed);
    m.config(serde_json::json!({ "n": n }));
    let ds = m.phase("sample", || latin_hypercube(&s, n, seed))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    ds.save_csv(out)?;
    m.output(out)?;
    m.save(manifest_path_for(out))
}

fn cmd_synth_eval(space: &Path, data: &Path, out: &Path) -> Result<()> {
    let mut m = RunManifest::new("synth-eval");
    let s = DesignSpace::load(space)?;
    m.input(space)?;
    if s.names() != fowt_space().names() {
        return Err(Error::invalid("synth-eval needs the eight-variable platform design space"));
    }
    let (ds, rejected) = Dataset::load_csv(data, &s)?;
    m.input(data)?;
    let outputs = ds.inputs.iter().map(|x| fowt_response(&s, x).to_vec()).collect();
    let names = vec![crate::bench::MASS.into(), crate::bench::PITCH.into(), crate::bench::ACCEL.into()];
    let full = Dataset::new(ds.input_names, names, ds.inputs, outputs)?;
    full.save_csv(out)?;
    m.output(out)?;
    m.config(serde_json::json!({ "response": RESPONSE_LABEL, "rejected_rows": rejected }));
    m.notes.push(format!("output channels come from a {RESPONSE_LABEL} response surface, not a physics model"));
    m.save(manifest_path_for(out))
}

#[derive(Serialize)]
struct SelfCheck {
    max_gap: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ChannelReport {
    channel: String,
    file: String,
    n: usize,
    m: usize,
    seed: u64,
    log_marginal_likelihood: f64,
    iterations: usize,
    jitter: f64,
    signal_variance: f64,
    length_scale: f64,
    noise_variance: f64,
    output_mean: f64,
    output_std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_gp_self_check: Option<SelfCheck>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    space_path: &Path,
    data: &Path,
    channels: Vec<String>,
    m: Option<usize>,
    seed: u64,
    out: &Path,
    objective: Option<String>,
    constraints: &[String],
) -> Result<()> {
    let mut manifest = RunManifest::new("train");
    let space = DesignSpace::load(space_path)?;
    manifest.input(space_path)?;
    let (ds, rejected) = Dataset::load_csv(data, &space)?;
    manifest.input(data)?;
    let channels = if channels.is_empty() { ds.output_names.clone() } else { channels };
    for c in &channels {
        ds.output_index(c)?;
    }
    let constraints = constraints.iter().map(|c| parse_constraint(c)).collect::<Result<Vec<_>>>()?;
    if let Some(o) = &objective {
        for name in std::iter::once(o).chain(constraints.iter().map(|c| &c.channel)) {
            if !channels.contains(name) {
                return Err(Error::UnknownChannel(name.clone()));
            }
        }
    }
    let n = ds.len();
    let m = m.unwrap_or_else(|| default_inducing_count(n));
    if m == 0 || m > n {
        return Err(Error::invalid(format!("--m must satisfy 1 <= m <= N (m = {m}, N = {n})")));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let config = FitConfig::default();
    manifest.seed("seed", seed);
    manifest.config(serde_json::json!({ "channels": channels, "m": m, "fit": config, "rejected_rows": rejected }));

    let models = manifest.phase("fit", || {
        channels
            .par_iter()
            .map(|c| fit_channel(&ds, &space, c, m, derive_seed(seed, c), &config).map(|model| (c.clone(), model)))
            .collect::<Result<Vec<_>>>()
    })?;

    let x = ds.normalized_inputs(&space)?;
    let mut reports = Vec::new();
    let mut model_files = BTreeMap::new();
    for (c, model) in &models {
        let self_check = if m == n && n <= SELF_CHECK_MAX_N {
            let s = model.standardization();
            let y: Vec<f64> = ds.output_column(ds.output_index(c)?).iter().map(|v| s.apply(*v)).collect();
            let probe_ds = latin_hypercube(&space, 20, derive_seed(seed, "self-check"))?;
            let mut probe = x.clone();
            probe.extend(probe_ds.normalized_inputs(&space)?);
            let gap = exact_equivalence_gap(model, &x, &y, &probe)?;
            Some(SelfCheck {
                max_gap: gap,
                tolerance: SELF_CHECK_TOL,
                pass: gap <= SELF_CHECK_TOL,
            })
        } else {
            None
        };
        let file = format!("{c}.json");
        let path = out.join(&file);
        ModelArtifact::from_model(model, c, &space.names()).save(&path)?;
        manifest.output(&path)?;
        model_files.insert(c.clone(), PathBuf::from(&file));
        let k = model.kernel();
        let s = model.standardization();
        let summary = model.summary();
        reports.push(ChannelReport {
            channel: c.clone(),
            file,
            n: summary.n,
            m: summary.m,
            seed: summary.seed,
            log_marginal_likelihood: summary.log_marginal_likelihood,
            iterations: summary.iterations,
            jitter: summary.jitter,
            signal_variance: k.signal_variance(),
            length_scale: k.length_scale(),
            noise_variance: k.noise_variance(),
            output_mean: s.mean,
            output_std: s.std,
            exact_gp_self_check: self_check,
        });
    }
    let report_path = out.join("training_report.json");
    let report = serde_json::json!({ "rejected_rows": rejected, "channels": reports });
    write_text(&report_path, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))?;
    manifest.output(&report_path)?;

    let space_copy = out.join("space.json");
    space.save(&space_copy)?;
    manifest.output(&space_copy)?;
    if let Some(objective) = objective {
        let pf = ProblemFile {
            space: PathBuf::from("space.json"),
            objective,
            constraints,
            model_files,
        };
        let pp = out.join("problem.json");
        pf.save(&pp)?;
        manifest.output(&pp)?;
    }
    manifest.save(out.join("manifest.json"))
}

fn load_problem(path: &Path, m: &mut RunManifest) -> Result<ProblemDefinition> {
    let file = ProblemFile::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    m.input(path)?;
    m.input(base.join(&file.space))?;
    for f in file.model_files.values() {
        m.input(base.join(f))?;
    }
    file.resolve(base)
}

fn cmd_dca(problem: &Path, config: SweepConfig, out: &Path) -> Result<()> {
    config.validate()?;
    let mut m = RunManifest::new("dca");
    let p = load_problem(problem, &mut m)?;
    m.seed("seed", config.seed);
    m.config(&config);
    let report = m.phase("sweep", || coupling_matrices(&p, &config))?;
    for path in report.save(out)? {
        m.output(path)?;
    }
    m.save(out.join("manifest.json"))
}

#[derive(Serialize)]
struct NamedValue {
    name: String,
    value: f64,
}

#[derive(Serialize)]
struct ResultFile {
    x: Vec<NamedValue>,
    objective: f64,
    objective_channel: String,
    status: crate::optimizer::Status,
    feasible: bool,
    max_violation: f64,
    constraints: Vec<NamedValue>,
    iterations: usize,
}

impl ResultFile {
    fn new(p: &ProblemDefinition, r: &OptimizationResult) -> Self {
        let constraints = p
            .evaluate_normalized(&r.x_normalized)
            .map(|e| {
                p.constraints
                    .iter()
                    .zip(e.constraints)
                    .map(|(c, v)| NamedValue {
                        name: c.channel.clone(),
                        value: v,
                    })
                    .collect()
            })
            .unwrap_or_default();
        ResultFile {
            x: p.space
                .names()
                .into_iter()
                .zip(&r.x)
                .map(|(name, &value)| NamedValue { name, value })
                .collect(),
            objective: r.objective,
            objective_channel: p.objective.clone(),
            status: r.status,
            feasible: r.feasible,
            max_violation: r.max_violation,
            constraints,
            iterations: r.iterations,
        }
    }
}

fn emit(doc: &impl Serialize, out: Option<&Path>, mut m: RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("result serializes") + "\n";
    match out {
        Some(path) => {
            write_text(path, &text)?;
            m.output(path)?;
            m.save(manifest_path_for(path))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Assemble a problem from in-memory artifacts, without a problem file.
pub fn problem_from_artifacts(
    space: DesignSpace,
    objective: &str,
    constraints: Vec<Constraint>,
    artifacts: Vec<ModelArtifact>,
) -> Result<ProblemDefinition> {
    let mut surrogates: BTreeMap<String, Arc<dyn crate::optimizer::ResponseModel>> = BTreeMap::new();
    for a in artifacts {
        let name = a.channel.clone();
        surrogates.insert(name, Arc::new(a.into_model()?));
    }
    ProblemDefinition::new(space, objective, constraints, surrogates)
}
