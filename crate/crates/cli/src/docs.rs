//! JSON documents for DAGs, scoring priors and prior networks.
//!
//! Arcs are `[from, to]` name pairs. Per-node coefficient lists and CPT
//! parent configurations follow the parents in variable-list order.

use std::collections::BTreeSet;
use std::path::Path;

use bnscore_core::elicitation::{DiscretePriorNetwork, GaussianPriorNetwork};
use bnscore_core::transforms::JointDiscreteParams;
use bnscore_core::{Dag, DirichletJointPrior, DiscreteScheme, NormalWishartPrior};
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagDoc {
    pub variables: Vec<String>,
    #[serde(default)]
    pub arcs: Vec<[String; 2]>,
}

impl DagDoc {
    pub fn from_dag(dag: &Dag) -> Self {
        let names = dag.names();
        Self {
            variables: names.to_vec(),
            arcs: dag.arcs().iter().map(|a| [names[a.from].clone(), names[a.to].clone()]).collect(),
        }
    }

    pub fn to_dag(&self) -> Result<Dag> {
        check_unique(&self.variables)?;
        let pairs: Vec<(&str, &str)> = self.arcs.iter().map(|[a, b]| (a.as_str(), b.as_str())).collect();
        Ok(Dag::from_named_arcs(self.variables.clone(), &pairs)?)
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(CliError::Schema(format!("variable `{n}` listed twice")));
        }
    }
    Ok(())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(CliError::Schema(format!("{what}: {got} entries for {want} variables")));
    }
    Ok(())
}

fn check_states(states: &Option<Vec<Vec<String>>>, cards: &[usize]) -> Result<()> {
    if let Some(states) = states {
        check_len("states", states.len(), cards.len())?;
        for (i, (labels, &r)) in states.iter().zip(cards).enumerate() {
            if labels.len() != r {
                return Err(CliError::Schema(format!(
                    "variable {i} has {} state labels but cardinality {r}",
                    labels.len()
                )));
            }
            check_unique(labels)?;
        }
    }
    Ok(())
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    check_len(what, rows.len(), n)?;
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Schema(format!("{what} must be {n} x {n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Scoring prior as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorDoc {
    Dirichlet {
        variables: Vec<String>,
        cardinalities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        states: Option<Vec<Vec<String>>>,
        alpha: f64,
        /// Row-major over the variables, last one fastest.
        joint: Vec<f64>,
    },
    NormalWishart {
        variables: Vec<String>,
        mu0: Vec<f64>,
        a_mu: f64,
        t0: Vec<Vec<f64>>,
        a_w: f64,
    },
}

/// A validated scoring prior with its variable names.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoringPrior {
    Dirichlet { names: Vec<String>, states: Option<Vec<Vec<String>>>, prior: DirichletJointPrior },
    NormalWishart { names: Vec<String>, prior: NormalWishartPrior },
}

impl ScoringPrior {
    pub fn names(&self) -> &[String] {
        match self {
            ScoringPrior::Dirichlet { names, .. } | ScoringPrior::NormalWishart { names, .. } => names,
        }
    }

    pub fn model(&self) -> &'static str {
        match self {
            ScoringPrior::Dirichlet { .. } => "discrete",
            ScoringPrior::NormalWishart { .. } => "gaussian",
        }
    }
}

impl PriorDoc {
    pub fn to_prior(&self, max_states: usize) -> Result<ScoringPrior> {
        match self {
            PriorDoc::Dirichlet { variables, cardinalities, states, alpha, joint } => {
                check_unique(variables)?;
                check_len("cardinalities", cardinalities.len(), variables.len())?;
                check_states(states, cardinalities)?;
                let scheme = DiscreteScheme::with_max_states(cardinalities.clone(), max_states)?;
                let joint = JointDiscreteParams::new(scheme, joint.clone())?;
                Ok(ScoringPrior::Dirichlet {
                    names: variables.clone(),
                    states: states.clone(),
                    prior: DirichletJointPrior::new(*alpha, joint)?,
                })
            }
            PriorDoc::NormalWishart { variables, mu0, a_mu, t0, a_w } => {
                check_unique(variables)?;
                let n = variables.len();
                check_len("mu0", mu0.len(), n)?;
                let prior = NormalWishartPrior::new(DVector::from_column_slice(mu0), *a_mu, matrix(t0, n, "t0")?, *a_w)?;
                Ok(ScoringPrior::NormalWishart { names: variables.clone(), prior })
            }
        }
    }

    pub fn from_prior(prior: &ScoringPrior) -> Self {
        match prior {
            ScoringPrior::Dirichlet { names, states, prior } => PriorDoc::Dirichlet {
                variables: names.clone(),
                cardinalities: prior.scheme().cardinalities().to_vec(),
                states: states.clone(),
                alpha: prior.alpha(),
                joint: prior.joint().table().to_vec(),
            },
            ScoringPrior::NormalWishart { names, prior } => {
                let n = prior.n();
                PriorDoc::NormalWishart {
                    variables: names.clone(),
                    mu0: prior.mu0().iter().copied().collect(),
                    a_mu: prior.a_mu(),
                    t0: (0..n).map(|i| (0..n).map(|j| prior.t0()[(i, j)]).collect()).collect(),
                    a_w: prior.a_w(),
                }
            }
        }
    }
}

/// Prior network as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NetworkDoc {
    Discrete {
        variables: Vec<String>,
        cardinalities: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        states: Option<Vec<Vec<String>>>,
        #[serde(default)]
        arcs: Vec<[String; 2]>,
        /// One table per variable: rows are parent configurations (first
        /// parent most significant), columns the variable's states.
        cpts: Vec<Vec<f64>>,
    },
    Gaussian {
        variables: Vec<String>,
        #[serde(default)]
        arcs: Vec<[String; 2]>,
        intercepts: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
        variances: Vec<f64>,
    },
}

pub enum PriorNetwork {
    Discrete { states: Option<Vec<Vec<String>>>, net: DiscretePriorNetwork },
    Gaussian(GaussianPriorNetwork),
}

impl NetworkDoc {
    pub fn to_network(&self, max_states: usize) -> Result<PriorNetwork> {
        match self {
            NetworkDoc::Discrete { variables, cardinalities, states, arcs, cpts } => {
                let dag = DagDoc { variables: variables.clone(), arcs: arcs.clone() }.to_dag()?;
                check_len("cardinalities", cardinalities.len(), variables.len())?;
                check_states(states, cardinalities)?;
                let scheme = DiscreteScheme::with_max_states(cardinalities.clone(), max_states)?;
                let net = DiscretePriorNetwork::new(dag, scheme, cpts.clone())?;
                Ok(PriorNetwork::Discrete { states: states.clone(), net })
            }
            NetworkDoc::Gaussian { variables, arcs, intercepts, coefficients, variances } => {
                let dag = DagDoc { variables: variables.clone(), arcs: arcs.clone() }.to_dag()?;
                Ok(PriorNetwork::Gaussian(GaussianPriorNetwork::new(
                    dag,
                    intercepts.clone(),
                    coefficients.clone(),
                    variances.clone(),
                )?))
            }
        }
    }
}
