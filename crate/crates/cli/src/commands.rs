use std::io::Write;
use std::path::{Path, PathBuf};

use bnscore_core::consistency::{check_dirichlet, check_normal_wishart};
use bnscore_core::discrete::{log_score_bde, log_score_bde_ratio};
use bnscore_core::elicitation::{discrete_prior_from_network, gaussian_prior_from_network};
use bnscore_core::gaussian::{log_score_bge, log_score_bge_sequential};
use bnscore_core::search::{hill_climb, BdeScorer, BgeScorer, FamilyScorer, SearchResult};
use bnscore_core::{covered_reversal_sequence, independence_equivalent, Dag, SearchConfig, StructurePrior};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::csv_io::{load_continuous_csv, load_discrete_csv, DeclaredScheme};
use crate::docs::{read_json, DagDoc, NetworkDoc, PriorDoc, PriorNetwork, ScoringPrior};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Discrete,
    Gaussian,
}

impl Model {
    fn name(self) -> &'static str {
        match self {
            Model::Discrete => "discrete",
            Model::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Score { data: PathBuf, dag: PathBuf, prior: PathBuf, model: Option<Model> },
    Learn {
        data: PathBuf,
        prior: PathBuf,
        /// Per-arc log prior; 0 is the uniform structure prior.
        alpha_arc: f64,
        restarts: usize,
        seed: u64,
        max_parents: usize,
        trace: Option<PathBuf>,
    },
    Equiv { dag1: PathBuf, dag2: PathBuf },
    PriorBuild { network: PathBuf, ess: Option<f64>, a_mu: Option<f64>, a_w: Option<f64> },
    CheckConsistency { prior: PathBuf, points: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out: Option<PathBuf>,
    pub max_states: usize,
}

/// A finished command: the JSON report plus, for `learn`, the trace as JSON lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: Value,
    pub trace: Option<(PathBuf, Vec<Value>)>,
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn load_prior(path: &Path, max_states: usize) -> Result<ScoringPrior> {
    read_json::<PriorDoc>(path)?.to_prior(max_states)
}

fn load_dag(path: &Path) -> Result<Dag> {
    read_json::<DagDoc>(path)?.to_dag()
}

fn aligned(dag: &Dag, names: &[String]) -> Result<Dag> {
    let mut want = names.to_vec();
    let mut have = dag.names().to_vec();
    want.sort();
    have.sort();
    if want != have {
        return Err(CliError::Schema(format!(
            "DAG variables [{}] differ from prior variables [{}]",
            dag.names().join(", "),
            names.join(", ")
        )));
    }
    Ok(dag.aligned_to(names)?)
}

fn families<S: FamilyScorer>(dag: &Dag, scorer: &S) -> Result<Vec<Value>> {
    let names = dag.names();
    (0..dag.n())
        .map(|i| {
            let v = scorer.family_score(i, dag.parents(i))?;
            Ok(json!({
                "node": names[i],
                "parents": dag.parents(i).iter().map(|&p| &names[p]).collect::<Vec<_>>(),
                "log_score": sig12(v),
            }))
        })
        .collect()
}

fn score(data: &Path, dag: &Path, prior: &Path, model: Option<Model>, max_states: usize) -> Result<Value> {
    let prior = load_prior(prior, max_states)?;
    if let Some(m) = model {
        if m.name() != prior.model() {
            return Err(CliError::Config(format!(
                "--model {} given but the prior is for {} data",
                m.name(),
                prior.model()
            )));
        }
    }
    let dag = aligned(&load_dag(dag)?, prior.names())?;
    match &prior {
        ScoringPrior::Dirichlet { names, states, prior } => {
            let declared = DeclaredScheme {
                names,
                cardinalities: prior.scheme().cardinalities(),
                states: states.as_deref(),
            };
            let data = load_discrete_csv(data, Some(declared), max_states)?;
            let family = log_score_bde(&dag, &data, prior)?;
            let ratio = log_score_bde_ratio(&dag, &data, prior)?;
            Ok(json!({
                "command": "score",
                "model": "discrete",
                "cases": data.m(),
                "log_score": sig12(family),
                "forms": { "family": sig12(family), "ratio": sig12(ratio) },
                "difference": sig12(family - ratio),
                "families": families(&dag, &BdeScorer::new(prior, &data)?)?,
            }))
        }
        ScoringPrior::NormalWishart { names, prior } => {
            let data = load_continuous_csv(data)?;
            let data = bnscore_core::GaussianDataset::new(
                names.clone(),
                reorder_rows(&data, names)?,
            )?;
            let ratio = log_score_bge(&dag, &data, prior)?;
            let sequential = log_score_bge_sequential(&dag, &data, prior)?;
            Ok(json!({
                "command": "score",
                "model": "gaussian",
                "cases": data.m(),
                "log_score": sig12(ratio),
                "forms": { "ratio": sig12(ratio), "sequential": sig12(sequential) },
                "difference": sig12(ratio - sequential),
                "families": families(&dag, &BgeScorer::new(prior, &data)?)?,
            }))
        }
    }
}

/// Rows of `data` with columns in the order of `names`.
fn reorder_rows(data: &bnscore_core::GaussianDataset, names: &[String]) -> Result<Vec<Vec<f64>>> {
    if data.n() != names.len() {
        return Err(CliError::Schema(format!(
            "data has {} columns, prior has {} variables",
            data.n(),
            names.len()
        )));
    }
    let cols = names
        .iter()
        .map(|n| {
            data.names()
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| CliError::Schema(format!("column `{n}` not found in data")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(data.rows().take(data.m()).map(|r| cols.iter().map(|&c| r[c]).collect()).collect())
}

#[derive(Serialize)]
struct MoveDoc<'a> {
    kind: &'a str,
    from: &'a str,
    to: &'a str,
}

fn search_report(model: &str, found: &SearchResult, config: &SearchConfig, alpha_arc: f64) -> (Value, Vec<Value>) {
    let names = found.dag.names();
    let trace: Vec<Value> = found
        .trace
        .iter()
        .map(|t| {
            let mv = t.mv.map(|m| MoveDoc { kind: m.kind.name(), from: &names[m.arc.from], to: &names[m.arc.to] });
            json!({ "step": t.step, "move": mv, "score": sig12(t.score) })
        })
        .collect();
    let body = json!({
        "command": "learn",
        "model": model,
        "seed": config.seed,
        "restarts": config.restarts,
        "max_parents": config.max_parents,
        "alpha_arc": alpha_arc,
        "dag": DagDoc::from_dag(&found.dag),
        "log_posterior": sig12(found.score),
        "best_restart": found.restart,
        "climb_scores": found.climb_scores.iter().map(|&s| sig12(s)).collect::<Vec<_>>(),
        "trace": trace,
    });
    (body, trace)
}

#[allow(clippy::too_many_arguments)]
fn learn(
    data: &Path,
    prior: &Path,
    alpha_arc: f64,
    restarts: usize,
    seed: u64,
    max_parents: usize,
    trace: Option<&Path>,
    max_states: usize,
) -> Result<Report> {
    let prior = load_prior(prior, max_states)?;
    let sprior = if alpha_arc == 0.0 { StructurePrior::Uniform } else { StructurePrior::arc_penalty(alpha_arc)? };
    let config = SearchConfig { max_parents, restarts, seed, ..SearchConfig::default() };
    let found = match &prior {
        ScoringPrior::Dirichlet { names, states, prior } => {
            let declared = DeclaredScheme {
                names,
                cardinalities: prior.scheme().cardinalities(),
                states: states.as_deref(),
            };
            let data = load_discrete_csv(data, Some(declared), max_states)?;
            let scorer = BdeScorer::new(prior, &data)?;
            hill_climb(&scorer, &sprior, &config)?
        }
        ScoringPrior::NormalWishart { names, prior } => {
            let raw = load_continuous_csv(data)?;
            let data = bnscore_core::GaussianDataset::new(names.clone(), reorder_rows(&raw, names)?)?;
            let scorer = BgeScorer::new(prior, &data)?;
            hill_climb(&scorer, &sprior, &config)?
        }
    };
    let (body, lines) = search_report(prior.model(), &found, &config, alpha_arc);
    Ok(Report { body, trace: trace.map(|p| (p.to_path_buf(), lines)) })
}

fn equiv(dag1: &Path, dag2: &Path) -> Result<Value> {
    let a = load_dag(dag1)?;
    let b = aligned(&load_dag(dag2)?, a.names())?;
    let names = a.names();
    let equivalent = independence_equivalent(&a, &b)?;
    let reversals = if equivalent {
        covered_reversal_sequence(&a, &b)?
            .map(|seq| seq.iter().map(|r| [names[r.from].clone(), names[r.to].clone()]).collect::<Vec<_>>())
    } else {
        None
    };
    Ok(json!({ "command": "equiv", "equivalent": equivalent, "reversals": reversals }))
}

fn prior_build(network: &Path, ess: Option<f64>, a_mu: Option<f64>, a_w: Option<f64>, max_states: usize) -> Result<Value> {
    let net = read_json::<NetworkDoc>(network)?.to_network(max_states)?;
    let prior = match net {
        PriorNetwork::Discrete { states, net } => {
            let alpha = ess.ok_or_else(|| CliError::Config("a discrete network needs --ess".into()))?;
            if a_mu.is_some() || a_w.is_some() {
                return Err(CliError::Config("--amu/--aw apply to Gaussian networks only".into()));
            }
            ScoringPrior::Dirichlet {
                names: net.dag().names().to_vec(),
                states,
                prior: discrete_prior_from_network(&net, alpha)?,
            }
        }
        PriorNetwork::Gaussian(net) => {
            let (Some(a_mu), Some(a_w)) = (a_mu, a_w) else {
                return Err(CliError::Config("a Gaussian network needs --amu and --aw".into()));
            };
            if ess.is_some() {
                return Err(CliError::Config("--ess applies to discrete networks only".into()));
            }
            ScoringPrior::NormalWishart {
                names: net.dag().names().to_vec(),
                prior: gaussian_prior_from_network(&net, a_mu, a_w)?,
            }
        }
    };
    Ok(serde_json::to_value(PriorDoc::from_prior(&prior)).expect("prior documents serialize"))
}

fn check_consistency(prior: &Path, points: usize, seed: u64, max_states: usize) -> Result<Value> {
    if points == 0 {
        return Err(CliError::Config("--points must be at least 1".into()));
    }
    let prior = load_prior(prior, max_states)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kind, rep) = match &prior {
        ScoringPrior::Dirichlet { prior, .. } => ("dirichlet", check_dirichlet(prior, points, &mut rng)?),
        ScoringPrior::NormalWishart { prior, .. } => ("normal-wishart", check_normal_wishart(prior, points, &mut rng)?),
    };
    Ok(json!({
        "command": "check-consistency",
        "prior": kind,
        "points": points,
        "seed": seed,
        "max_identity_deviation": sig12(rep.max_identity_deviation),
        "max_factorization_defect": sig12(rep.max_factorization_defect),
        "max_deviation": sig12(rep.max_identity_deviation.max(rep.max_factorization_defect)),
    }))
}

pub fn run_command(cfg: &RunConfig) -> Result<Report> {
    let body = match &cfg.command {
        Command::Score { data, dag, prior, model } => score(data, dag, prior, *model, cfg.max_states)?,
        Command::Learn { data, prior, alpha_arc, restarts, seed, max_parents, trace } => {
            return learn(data, prior, *alpha_arc, *restarts, *seed, *max_parents, trace.as_deref(), cfg.max_states)
        }
        Command::Equiv { dag1, dag2 } => equiv(dag1, dag2)?,
        Command::PriorBuild { network, ess, a_mu, a_w } => prior_build(network, *ess, *a_mu, *a_w, cfg.max_states)?,
        Command::CheckConsistency { prior, points, seed } => check_consistency(prior, *points, *seed, cfg.max_states)?,
    };
    Ok(Report { body, trace: None })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Runs the command and writes its output; returns the process exit code.
/// Errors go to stderr as `{"error": {...}}`.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = run_command(cfg).and_then(|report| {
        let mut text = serde_json::to_string_pretty(&report.body).expect("reports serialize");
        text.push('\n');
        if let Some((path, lines)) = &report.trace {
            let body: String = lines.iter().map(|l| format!("{l}\n")).collect();
            write_file(path, &body)?;
        }
        match &cfg.out {
            Some(path) => write_file(path, &text),
            None => stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            1
        }
    }
}
