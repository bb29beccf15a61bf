//! Dirichlet joint prior, subset marginal likelihoods and the BDe score.

use statrs::function::gamma::ln_gamma;

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::transforms::{ConditionalDiscreteParams, DiscreteScheme, JointDiscreteParams};

/// Complete discrete sample; `rows` is row-major `m x n` state codes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDataset {
    names: Vec<String>,
    scheme: DiscreteScheme,
    rows: Vec<usize>,
}

impl DiscreteDataset {
    pub fn new(names: Vec<String>, scheme: DiscreteScheme, rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = scheme.n();
        if names.len() != n {
            return Err(Error::usage(format!("{} names for {n} variables", names.len())));
        }
        let mut flat = Vec::with_capacity(rows.len() * n);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::usage(format!("row {l} has {} cells, expected {n}", row.len())));
            }
            for (i, &x) in row.iter().enumerate() {
                if x >= scheme.card(i) {
                    return Err(Error::usage(format!(
                        "row {l}, variable `{}`: state {x} outside 0..{}",
                        names[i],
                        scheme.card(i)
                    )));
                }
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { names, scheme, rows: flat })
    }

    pub fn empty(names: Vec<String>, scheme: DiscreteScheme) -> Result<Self> {
        Self::new(names, scheme, Vec::new())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn scheme(&self) -> &DiscreteScheme {
        &self.scheme
    }

    pub fn n(&self) -> usize {
        self.scheme.n()
    }

    pub fn m(&self) -> usize {
        if self.n() == 0 {
            0
        } else {
            self.rows.len() / self.n()
        }
    }

    pub fn row(&self, l: usize) -> &[usize] {
        let n = self.n();
        &self.rows[l * n..(l + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.rows.chunks(self.n().max(1))
    }

    /// The first `len` cases.
    pub fn prefix(&self, len: usize) -> Self {
        let len = len.min(self.m());
        Self {
            names: self.names.clone(),
            scheme: self.scheme.clone(),
            rows: self.rows[..len * self.n()].to_vec(),
        }
    }

    /// Cases `start..`.
    pub fn suffix(&self, start: usize) -> Self {
        let start = start.min(self.m());
        Self {
            names: self.names.clone(),
            scheme: self.scheme.clone(),
            rows: self.rows[start * self.n()..].to_vec(),
        }
    }

    /// Counts of each configuration of `vars` (mixed radix, first most significant).
    pub fn subset_counts(&self, vars: &[usize]) -> Vec<u64> {
        let mut out = vec![0u64; self.scheme.configs_of(vars)];
        for row in self.rows() {
            out[self.scheme.sub_index(vars, row)] += 1;
        }
        out
    }
}

/// Counts `N_ijk` of one family, stored at `j * r + k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    child_card: usize,
    counts: Vec<u64>,
}

impl CountTable {
    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn parent_configs(&self) -> usize {
        self.counts.len() / self.child_card
    }

    pub fn n_ijk(&self, j: usize, k: usize) -> u64 {
        self.counts[j * self.child_card + k]
    }

    pub fn n_ij(&self, j: usize) -> u64 {
        self.row(j).iter().sum()
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.counts[j * self.child_card..(j + 1) * self.child_card]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Hyperparameters `alpha_ijk` of one family, laid out like [`CountTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyAlpha {
    child_card: usize,
    alpha: Vec<f64>,
}

impl FamilyAlpha {
    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn parent_configs(&self) -> usize {
        self.alpha.len() / self.child_card
    }

    pub fn alpha_ijk(&self, j: usize, k: usize) -> f64 {
        self.alpha[j * self.child_card + k]
    }

    pub fn alpha_ij(&self, j: usize) -> f64 {
        self.row(j).iter().sum()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.alpha[j * self.child_card..(j + 1) * self.child_card]
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }
}

fn family_vars(n: usize, node: usize, parents: &[usize]) -> Result<Vec<usize>> {
    if node >= n {
        return Err(Error::usage(format!("node {node} out of range for {n} variables")));
    }
    let mut vars = parents.to_vec();
    vars.sort_unstable();
    vars.dedup();
    if vars.len() != parents.len() {
        return Err(Error::usage("parent set contains duplicates"));
    }
    if let Some(&p) = vars.iter().find(|&&p| p >= n) {
        return Err(Error::usage(format!("parent {p} out of range for {n} variables")));
    }
    if vars.contains(&node) {
        return Err(Error::usage(format!("node {node} listed among its own parents")));
    }
    vars.push(node);
    Ok(vars)
}

/// Exact family counts; parent configurations are mixed radix over the sorted parents.
pub fn counts(data: &DiscreteDataset, node: usize, parents: &[usize]) -> Result<CountTable> {
    let vars = family_vars(data.n(), node, parents)?;
    Ok(CountTable { child_card: data.scheme.card(node), counts: data.subset_counts(&vars) })
}

/// Dirichlet prior over joint parameters: effective sample size plus the
/// prior joint distribution `p(x_1..x_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletJointPrior {
    alpha: f64,
    joint: JointDiscreteParams,
}

impl DirichletJointPrior {
    pub fn new(alpha: f64, joint: JointDiscreteParams) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("effective sample size must be positive, got {alpha}")));
        }
        Ok(Self { alpha, joint })
    }

    /// Uniform prior joint with the given effective sample size.
    pub fn uniform(scheme: DiscreteScheme, alpha: f64) -> Result<Self> {
        Self::new(alpha, JointDiscreteParams::uniform(scheme))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn joint(&self) -> &JointDiscreteParams {
        &self.joint
    }

    pub fn scheme(&self) -> &DiscreteScheme {
        self.joint.scheme()
    }

    /// `alpha * p(y)` for each configuration `y` of `vars`.
    pub fn subset_alpha(&self, vars: &[usize]) -> Vec<f64> {
        self.joint.marginal(vars).into_iter().map(|p| self.alpha * p).collect()
    }

    /// `alpha_ijk = alpha * p(x_i = k, Pa_i = j)`.
    pub fn alpha_family(&self, node: usize, parents: &[usize]) -> Result<FamilyAlpha> {
        let vars = family_vars(self.scheme().n(), node, parents)?;
        Ok(FamilyAlpha { child_card: self.scheme().card(node), alpha: self.subset_alpha(&vars) })
    }

    /// Dirichlet after observing `data`: hyperparameters gain the full-configuration counts.
    pub fn posterior(&self, data: &DiscreteDataset) -> Result<Self> {
        check_scheme(self.scheme(), data.scheme())?;
        let all: Vec<usize> = (0..data.n()).collect();
        let n = data.subset_counts(&all);
        let alpha = self.alpha + data.m() as f64;
        let table = self
            .joint
            .table()
            .iter()
            .zip(&n)
            .map(|(p, &c)| (self.alpha * p + c as f64) / alpha)
            .collect();
        Self::new(alpha, JointDiscreteParams::normalized(self.scheme().clone(), table)?)
    }

    /// Log Dirichlet density of joint parameters `theta`.
    pub fn log_density_joint(&self, theta: &JointDiscreteParams) -> Result<f64> {
        check_scheme(self.scheme(), theta.scheme())?;
        let mut total = ln_gamma(self.alpha);
        for (&p, &t) in self.joint.table().iter().zip(theta.table()) {
            let a = self.alpha * p;
            total += (a - 1.0) * t.ln() - ln_gamma(a);
        }
        Ok(total)
    }
}

fn check_scheme(a: &DiscreteScheme, b: &DiscreteScheme) -> Result<()> {
    if a != b {
        return Err(Error::usage(format!(
            "cardinalities {:?} and {:?} disagree",
            a.cardinalities(),
            b.cardinalities()
        )));
    }
    Ok(())
}

fn check_aligned(dag: &Dag, data: &DiscreteDataset, prior: &DirichletJointPrior) -> Result<()> {
    if dag.names() != data.names() {
        return Err(Error::usage("DAG and dataset variables differ"));
    }
    check_scheme(prior.scheme(), data.scheme())
}

/// Log marginal likelihood of the data restricted to `subset`; zero for the empty set.
pub fn log_marginal_subset_discrete(
    prior: &DirichletJointPrior,
    data: &DiscreteDataset,
    subset: &[usize],
) -> Result<f64> {
    check_scheme(prior.scheme(), data.scheme())?;
    if subset.is_empty() {
        return Ok(0.0);
    }
    let mut vars = subset.to_vec();
    vars.sort_unstable();
    vars.dedup();
    if let Some(&v) = vars.iter().find(|&&v| v >= data.n()) {
        return Err(Error::usage(format!("subset variable {v} out of range")));
    }
    let m = data.m() as f64;
    let alpha = prior.subset_alpha(&vars);
    let n = data.subset_counts(&vars);
    let mut total = ln_gamma(prior.alpha()) - ln_gamma(prior.alpha() + m);
    for (&a, &c) in alpha.iter().zip(&n) {
        if c > 0 {
            total += ln_gamma(a + c as f64) - ln_gamma(a);
        }
    }
    Ok(total)
}

/// One family's BDe term.
pub fn family_score_bde(
    prior: &DirichletJointPrior,
    data: &DiscreteDataset,
    node: usize,
    parents: &[usize],
) -> Result<f64> {
    let alpha = prior.alpha_family(node, parents)?;
    let n = counts(data, node, parents)?;
    let mut total = 0.0;
    for j in 0..alpha.parent_configs() {
        let n_ij = n.n_ij(j);
        if n_ij == 0 {
            continue;
        }
        let a_ij = alpha.alpha_ij(j);
        total += ln_gamma(a_ij) - ln_gamma(a_ij + n_ij as f64);
        for (&a, &c) in alpha.row(j).iter().zip(n.row(j)) {
            if c > 0 {
                total += ln_gamma(a + c as f64) - ln_gamma(a);
            }
        }
    }
    Ok(total)
}

/// `log p(D | dag)` as a sum of per-family Gamma-ratio terms.
pub fn log_score_bde(dag: &Dag, data: &DiscreteDataset, prior: &DirichletJointPrior) -> Result<f64> {
    check_aligned(dag, data, prior)?;
    (0..dag.n()).map(|i| family_score_bde(prior, data, i, dag.parents(i))).sum()
}

/// `log p(D | dag)` as a sum of subset-marginal ratios.
pub fn log_score_bde_ratio(
    dag: &Dag,
    data: &DiscreteDataset,
    prior: &DirichletJointPrior,
) -> Result<f64> {
    check_aligned(dag, data, prior)?;
    let mut total = 0.0;
    for i in 0..dag.n() {
        let parents = dag.parents(i);
        let mut family = parents.to_vec();
        family.push(i);
        total += log_marginal_subset_discrete(prior, data, &family)?
            - log_marginal_subset_discrete(prior, data, parents)?;
    }
    Ok(total)
}

/// `log p(case | prefix, dag)`: product of posterior-mean conditionals at the case.
pub fn log_sequential_predictive(
    dag: &Dag,
    prefix: &DiscreteDataset,
    case: &[usize],
    prior: &DirichletJointPrior,
) -> Result<f64> {
    check_aligned(dag, prefix, prior)?;
    let scheme = prior.scheme();
    if case.len() != dag.n() || case.iter().enumerate().any(|(i, &x)| x >= scheme.card(i)) {
        return Err(Error::usage(format!("case {case:?} does not fit the scheme")));
    }
    let mut total = 0.0;
    for i in 0..dag.n() {
        let parents = dag.parents(i);
        let alpha = prior.alpha_family(i, parents)?;
        let n = counts(prefix, i, parents)?;
        let j = scheme.sub_index(parents, case);
        let k = case[i];
        let num = alpha.alpha_ijk(j, k) + n.n_ijk(j, k) as f64;
        let den = alpha.alpha_ij(j) + n.n_ij(j) as f64;
        total += (num / den).ln();
    }
    Ok(total)
}

/// Log density of conditional parameters under the factored product of
/// local Dirichlet distributions whose hyperparameters are marginals of
/// `alpha * p(x)` along `c`'s order.
pub fn log_prior_density_conditionals(
    prior: &DirichletJointPrior,
    c: &ConditionalDiscreteParams,
) -> Result<f64> {
    check_scheme(prior.scheme(), c.scheme())?;
    let order = c.order();
    let mut total = 0.0;
    for (k, table) in c.tables().iter().enumerate() {
        let r = prior.scheme().card(order[k]);
        let alpha = prior.subset_alpha(&order[..=k]);
        for (a_row, t_row) in alpha.chunks(r).zip(table.chunks(r)) {
            let a_sum: f64 = a_row.iter().sum();
            total += ln_gamma(a_sum);
            for (&a, &t) in a_row.iter().zip(t_row) {
                total += (a - 1.0) * t.ln() - ln_gamma(a);
            }
        }
    }
    Ok(total)
}
