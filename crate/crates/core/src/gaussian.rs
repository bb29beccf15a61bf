//! Normal-Wishart prior, conjugate updates and the BGe score.
//!
//! The Wishart component is parameterized by its scale matrix `T` with
//! density proportional to `|W|^((a_w - n - 1)/2) exp(-tr(T W)/2)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::linalg::{self, submatrix};
use crate::transforms::{self, JointGaussianParams, RegressionParams};

/// Complete real-valued sample, row-major `m x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDataset {
    names: Vec<String>,
    rows: Vec<f64>,
}

impl GaussianDataset {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = names.len();
        let mut flat = Vec::with_capacity(rows.len() * n);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::usage(format!("row {l} has {} cells, expected {n}", row.len())));
            }
            if let Some(i) = row.iter().position(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("row {l}, variable `{}` is not finite", names[i])));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { names, rows: flat })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn m(&self) -> usize {
        if self.n() == 0 {
            0
        } else {
            self.rows.len() / self.n()
        }
    }

    pub fn row(&self, l: usize) -> &[f64] {
        &self.rows[l * self.n()..(l + 1) * self.n()]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks(self.n().max(1))
    }

    pub fn prefix(&self, len: usize) -> Self {
        let len = len.min(self.m());
        Self { names: self.names.clone(), rows: self.rows[..len * self.n()].to_vec() }
    }

    pub fn suffix(&self, start: usize) -> Self {
        let start = start.min(self.m());
        Self { names: self.names.clone(), rows: self.rows[start * self.n()..].to_vec() }
    }
}

/// Case count, sample mean and scatter matrix about the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSufficientStats {
    pub m: usize,
    pub mean: DVector<f64>,
    pub scatter: DMatrix<f64>,
}

/// Two-pass mean and scatter; the empty sample gives zeros.
pub fn sufficient_stats(data: &GaussianDataset) -> GaussianSufficientStats {
    let n = data.n();
    let m = data.m();
    let mut mean = DVector::zeros(n);
    for row in data.rows().take(m) {
        for (i, &x) in row.iter().enumerate() {
            mean[i] += x;
        }
    }
    if m > 0 {
        mean /= m as f64;
    }
    let mut scatter = DMatrix::zeros(n, n);
    for row in data.rows().take(m) {
        for a in 0..n {
            let da = row[a] - mean[a];
            for b in 0..=a {
                scatter[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            scatter[(b, a)] = scatter[(a, b)];
        }
    }
    GaussianSufficientStats { m, mean, scatter }
}

/// `(mu0, a_mu, T0, a_w)`: `mu | W ~ N(mu0, a_mu W)`, `W ~ Wishart(a_w, T0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalWishartPrior {
    mu0: DVector<f64>,
    a_mu: f64,
    t0: DMatrix<f64>,
    a_w: f64,
}

impl NormalWishartPrior {
    pub fn new(mu0: DVector<f64>, a_mu: f64, t0: DMatrix<f64>, a_w: f64) -> Result<Self> {
        let n = mu0.len();
        if t0.nrows() != n || t0.ncols() != n {
            return Err(Error::usage("scale matrix and mean dimensions disagree"));
        }
        if !(a_mu > 0.0) || !a_mu.is_finite() {
            return Err(Error::Domain(format!("a_mu must be positive, got {a_mu}")));
        }
        if !(a_w > n as f64 - 1.0) || !a_w.is_finite() {
            return Err(Error::Domain(format!("a_w must exceed n - 1 = {}, got {a_w}", n as f64 - 1.0)));
        }
        if mu0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("prior mean is not finite".into()));
        }
        linalg::check_spd(&t0, "scale matrix T0")?;
        Ok(Self { mu0, a_mu, t0, a_w })
    }

    pub fn n(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn a_mu(&self) -> f64 {
        self.a_mu
    }

    pub fn t0(&self) -> &DMatrix<f64> {
        &self.t0
    }

    pub fn a_w(&self) -> f64 {
        self.a_w
    }

    /// Log normal-Wishart density at joint parameters `(mu, W)`.
    pub fn log_density(&self, g: &JointGaussianParams) -> Result<f64> {
        let n = self.n();
        if g.n() != n {
            return Err(Error::usage("parameter dimension differs from the prior"));
        }
        let w = g.precision();
        let log_det_w = linalg::log_det_spd(w)?;
        let d = g.mean() - &self.mu0;
        let quad = (d.transpose() * w * &d)[(0, 0)];
        let nf = n as f64;
        let log_normal =
            0.5 * nf * (self.a_mu / (2.0 * PI)).ln() + 0.5 * log_det_w - 0.5 * self.a_mu * quad;
        let trace = (&self.t0 * w).trace();
        let log_wishart = log_wishart_norm(n, self.a_w, &self.t0)?
            + 0.5 * (self.a_w - nf - 1.0) * log_det_w
            - 0.5 * trace;
        Ok(log_normal + log_wishart)
    }
}

/// Log of the Wishart normalizing constant for scale `t` and `a_w` degrees of freedom.
pub(crate) fn log_wishart_norm(n: usize, a_w: f64, t: &DMatrix<f64>) -> Result<f64> {
    let nf = n as f64;
    Ok(0.5 * a_w * linalg::log_det_spd(t)?
        - 0.5 * a_w * nf * 2f64.ln()
        - 0.25 * nf * (nf - 1.0) * PI.ln()
        - log_c(n, a_w)?)
}

/// Conjugate update of all four hyperparameters by the sample statistics.
pub fn posterior_update(
    prior: &NormalWishartPrior,
    stats: &GaussianSufficientStats,
) -> Result<NormalWishartPrior> {
    if stats.mean.len() != prior.n() {
        return Err(Error::usage("statistics dimension differs from the prior"));
    }
    if stats.m == 0 {
        return Ok(prior.clone());
    }
    let m = stats.m as f64;
    let a_mu = prior.a_mu + m;
    let mu = (&prior.mu0 * prior.a_mu + &stats.mean * m) / a_mu;
    let d = &prior.mu0 - &stats.mean;
    let mut t = &prior.t0 + &stats.scatter + (&d * d.transpose()) * (prior.a_mu * m / a_mu);
    symmetrize(&mut t);
    linalg::ldl(&t)?;
    Ok(NormalWishartPrior { mu0: mu, a_mu, t0: t, a_w: prior.a_w + m })
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// `log c(l, alpha) = sum_{i=1..l} log Gamma((alpha + 1 - i) / 2)`.
pub fn log_c(l: usize, alpha: f64) -> Result<f64> {
    if !(alpha > l as f64 - 1.0) {
        return Err(Error::Domain(format!("need alpha > {}, got {alpha}", l as f64 - 1.0)));
    }
    Ok((1..=l).map(|i| ln_gamma((alpha + 1.0 - i as f64) / 2.0)).sum())
}

/// Prior together with the full-data posterior scale, ready for repeated
/// subset marginals over one dataset.
#[derive(Debug, Clone)]
pub struct BgeTerms {
    prior: NormalWishartPrior,
    m: usize,
    t_m: DMatrix<f64>,
}

impl BgeTerms {
    pub fn new(prior: &NormalWishartPrior, stats: &GaussianSufficientStats) -> Result<Self> {
        let post = posterior_update(prior, stats)?;
        Ok(Self { prior: prior.clone(), m: stats.m, t_m: post.t0 })
    }

    pub fn n(&self) -> usize {
        self.prior.n()
    }

    /// Log marginal likelihood of the data restricted to `subset`.
    pub fn log_marginal_subset(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() || self.m == 0 {
            return Ok(0.0);
        }
        let n = self.n();
        let mut vars = subset.to_vec();
        vars.sort_unstable();
        vars.dedup();
        if let Some(&v) = vars.iter().find(|&&v| v >= n) {
            return Err(Error::usage(format!("subset variable {v} out of range")));
        }
        let l = vars.len() as f64;
        let m = self.m as f64;
        let a_mu = self.prior.a_mu;
        let a_wy = self.prior.a_w - n as f64 + l;
        let log_det_t0 = linalg::log_det_spd(&submatrix(&self.prior.t0, &vars))?;
        let log_det_tm = linalg::log_det_spd(&submatrix(&self.t_m, &vars))?;
        Ok(-0.5 * l * m * PI.ln() + 0.5 * l * (a_mu / (a_mu + m)).ln()
            + log_c(vars.len(), a_wy + m)?
            - log_c(vars.len(), a_wy)?
            + 0.5 * a_wy * log_det_t0
            - 0.5 * (a_wy + m) * log_det_tm)
    }

    pub fn family_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        if parents.contains(&node) {
            return Err(Error::usage(format!("node {node} listed among its own parents")));
        }
        let mut family = parents.to_vec();
        family.push(node);
        Ok(self.log_marginal_subset(&family)? - self.log_marginal_subset(parents)?)
    }
}

fn check_aligned(data: &GaussianDataset, prior: &NormalWishartPrior) -> Result<()> {
    if data.n() != prior.n() {
        return Err(Error::usage(format!(
            "dataset has {} variables, prior has {}",
            data.n(),
            prior.n()
        )));
    }
    Ok(())
}

/// Log marginal likelihood of `data` restricted to `subset`; zero for the empty set.
pub fn log_marginal_subset_gaussian(
    prior: &NormalWishartPrior,
    data: &GaussianDataset,
    subset: &[usize],
) -> Result<f64> {
    check_aligned(data, prior)?;
    BgeTerms::new(prior, &sufficient_stats(data))?.log_marginal_subset(subset)
}

/// BGe score: sum over nodes of family-to-parents subset marginal ratios.
pub fn log_score_bge(dag: &Dag, data: &GaussianDataset, prior: &NormalWishartPrior) -> Result<f64> {
    check_aligned(data, prior)?;
    if dag.names() != data.names() {
        return Err(Error::usage("DAG and dataset variables differ"));
    }
    let terms = BgeTerms::new(prior, &sufficient_stats(data))?;
    (0..dag.n()).map(|i| terms.family_score(i, dag.parents(i))).sum()
}

/// `log p(case | prefix, dag)`: the one-case score under the posterior given the prefix.
pub fn log_sequential_predictive_gaussian(
    dag: &Dag,
    prefix: &GaussianDataset,
    case: &[f64],
    prior: &NormalWishartPrior,
) -> Result<f64> {
    check_aligned(prefix, prior)?;
    let post = posterior_update(prior, &sufficient_stats(prefix))?;
    let single = GaussianDataset::new(prefix.names().to_vec(), vec![case.to_vec()])?;
    log_score_bge(dag, &single, &post)
}

/// The BGe score accumulated one case at a time, each case scored under
/// the posterior given the cases before it.
pub fn log_score_bge_sequential(
    dag: &Dag,
    data: &GaussianDataset,
    prior: &NormalWishartPrior,
) -> Result<f64> {
    check_aligned(data, prior)?;
    let mut post = prior.clone();
    let mut total = 0.0;
    for l in 0..data.m() {
        let case = GaussianDataset { names: data.names.clone(), rows: data.row(l).to_vec() };
        total += log_score_bge(dag, &case, &post)?;
        post = posterior_update(&post, &sufficient_stats(&case))?;
    }
    Ok(total)
}

/// Normal-Wishart density of regression parameters via `(mu, W)` plus the
/// log-Jacobians of the coordinate change.
pub fn log_nw_density_regression(prior: &NormalWishartPrior, r: &RegressionParams) -> Result<f64> {
    let g = transforms::regression_to_joint(r);
    Ok(prior.log_density(&g)? + transforms::log_jacobian_gaussian(r.variances()))
}

/// Per-node log factors of the normal-Wishart density in regression coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFactors {
    /// Wishart normalizing constant shared by all nodes.
    pub constant: f64,
    /// `log p(m_k | v_k, b_k)` for each position.
    pub normal: Vec<f64>,
    /// Wishart-plus-Jacobian factor of `(v_k, b_k)` for each position.
    pub wishart: Vec<f64>,
}

impl NodeFactors {
    pub fn total(&self) -> f64 {
        self.constant + self.normal.iter().sum::<f64>() + self.wishart.iter().sum::<f64>()
    }
}

/// The same density assembled node by node from `(m_k, v_k, b_k)` alone.
///
/// Normal part: `m_k ~ N(m0_k, a_mu / v_k)` with `m0_k` the prior mean pushed
/// through the regression. Wishart part: `W = sum_k u_k u_k' / v_k` with
/// `u_k = e_k - b_k`, so `|W|` and `tr(T W)` split across positions.
pub fn nw_node_factors(prior: &NormalWishartPrior, r: &RegressionParams) -> Result<NodeFactors> {
    let n = prior.n();
    if r.n() != n {
        return Err(Error::usage("parameter dimension differs from the prior"));
    }
    let order = r.order();
    let mu0: Vec<f64> = order.iter().map(|&v| prior.mu0[v]).collect();
    let t = DMatrix::from_fn(n, n, |a, b| prior.t0[(order[a], order[b])]);
    let nf = n as f64;
    let mut normal = Vec::with_capacity(n);
    let mut wishart = Vec::with_capacity(n);
    for k in 0..n {
        let b = &r.coefficients()[k];
        let v = r.variances()[k];
        let m0 = mu0[k] - (0..k).map(|p| b[p] * mu0[p]).sum::<f64>();
        let dm = r.intercepts()[k] - m0;
        normal.push(0.5 * (prior.a_mu / (2.0 * PI * v)).ln() - prior.a_mu * dm * dm / (2.0 * v));

        let mut u = DVector::zeros(n);
        u[k] = 1.0;
        for p in 0..k {
            u[p] = -b[p];
        }
        let quad = (u.transpose() * &t * &u)[(0, 0)];
        wishart.push(
            -0.5 * (prior.a_w - nf - 1.0) * v.ln() - quad / (2.0 * v) - (k + 2) as f64 * v.ln(),
        );
    }
    Ok(NodeFactors { constant: log_wishart_norm(n, prior.a_w, &prior.t0)?, normal, wishart })
}
