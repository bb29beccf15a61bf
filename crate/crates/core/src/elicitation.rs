//! Scoring priors built from an assessed prior Bayesian network.

use nalgebra::{DMatrix, DVector};

use crate::dag::Dag;
use crate::discrete::DirichletJointPrior;
use crate::error::{Error, Result};
use crate::gaussian::NormalWishartPrior;
use crate::transforms::{DiscreteScheme, JointDiscreteParams};

/// Discrete prior network. `cpts[i][j * r_i + k]` is `p(x_i = k | Pa_i = j)`
/// with `j` mixed radix over the sorted parents, first most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePriorNetwork {
    dag: Dag,
    scheme: DiscreteScheme,
    cpts: Vec<Vec<f64>>,
}

impl DiscretePriorNetwork {
    pub fn new(dag: Dag, scheme: DiscreteScheme, cpts: Vec<Vec<f64>>) -> Result<Self> {
        if dag.n() != scheme.n() || cpts.len() != scheme.n() {
            return Err(Error::usage("network DAG, cardinalities and CPTs disagree in size"));
        }
        for (i, cpt) in cpts.iter().enumerate() {
            let r = scheme.card(i);
            let q = scheme.configs_of(dag.parents(i));
            if cpt.len() != q * r {
                return Err(Error::usage(format!(
                    "CPT of `{}` has {} entries, expected {q} rows of {r}",
                    dag.names()[i],
                    cpt.len()
                )));
            }
            for (j, row) in cpt.chunks(r).enumerate() {
                if let Some(k) = row.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
                    return Err(Error::Positivity(format!(
                        "CPT of `{}`, row {j}, state {k} is {}",
                        dag.names()[i],
                        row[k]
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-10 {
                    return Err(Error::Domain(format!(
                        "CPT of `{}`, row {j} sums to {s}",
                        dag.names()[i]
                    )));
                }
            }
        }
        Ok(Self { dag, scheme, cpts })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn scheme(&self) -> &DiscreteScheme {
        &self.scheme
    }

    pub fn cpts(&self) -> &[Vec<f64>] {
        &self.cpts
    }

    /// `p(x)` for a full configuration.
    pub fn probability(&self, config: &[usize]) -> f64 {
        (0..self.dag.n())
            .map(|i| {
                let j = self.scheme.sub_index(self.dag.parents(i), config);
                self.cpts[i][j * self.scheme.card(i) + config[i]]
            })
            .product()
    }
}

/// Joint table by enumerating every configuration, scaled by `alpha`.
pub fn discrete_prior_from_network(
    net: &DiscretePriorNetwork,
    alpha: f64,
) -> Result<DirichletJointPrior> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("effective sample size must be positive, got {alpha}")));
    }
    let scheme = net.scheme.clone();
    let mut config = vec![0; scheme.n()];
    let table = (0..scheme.state_count())
        .map(|idx| {
            scheme.decode(idx, &mut config);
            net.probability(&config)
        })
        .collect();
    DirichletJointPrior::new(alpha, JointDiscreteParams::normalized(scheme, table)?)
}

/// Linear-Gaussian prior network; `coefficients[i]` is aligned with `dag.parents(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPriorNetwork {
    dag: Dag,
    intercepts: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl GaussianPriorNetwork {
    pub fn new(
        dag: Dag,
        intercepts: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        let n = dag.n();
        if intercepts.len() != n || coefficients.len() != n || variances.len() != n {
            return Err(Error::usage("network parameter lengths disagree with the DAG"));
        }
        for i in 0..n {
            if coefficients[i].len() != dag.parents(i).len() {
                return Err(Error::usage(format!(
                    "`{}` has {} parents but {} coefficients",
                    dag.names()[i],
                    dag.parents(i).len(),
                    coefficients[i].len()
                )));
            }
            if !(variances[i] > 0.0) || !variances[i].is_finite() {
                return Err(Error::Domain(format!(
                    "variance of `{}` is {}",
                    dag.names()[i],
                    variances[i]
                )));
            }
        }
        Ok(Self { dag, intercepts, coefficients, variances })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Mean and covariance of the network, propagated in topological order.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dag.n();
        let mut mean = DVector::zeros(n);
        let mut cov = DMatrix::zeros(n, n);
        let mut done: Vec<usize> = Vec::with_capacity(n);
        for i in self.dag.topological_order() {
            let pa = self.dag.parents(i);
            let b = &self.coefficients[i];
            mean[i] = self.intercepts[i] + pa.iter().zip(b).map(|(&p, c)| c * mean[p]).sum::<f64>();
            for &j in &done {
                let c: f64 = pa.iter().zip(b).map(|(&p, w)| w * cov[(p, j)]).sum();
                cov[(i, j)] = c;
                cov[(j, i)] = c;
            }
            let mut var = self.variances[i];
            for (a, &p) in pa.iter().enumerate() {
                for (c, &q) in pa.iter().enumerate() {
                    var += b[a] * b[c] * cov[(p, q)];
                }
            }
            cov[(i, i)] = var;
            done.push(i);
        }
        (mean, cov)
    }
}

/// `mu0 = E[x]`, `T0 = a_mu (a_w - n - 1) / (a_mu + 1) * Cov[x]`.
pub fn gaussian_prior_from_network(
    net: &GaussianPriorNetwork,
    a_mu: f64,
    a_w: f64,
) -> Result<NormalWishartPrior> {
    let n = net.dag.n() as f64;
    if !(a_mu > 0.0) {
        return Err(Error::Domain(format!("a_mu must be positive, got {a_mu}")));
    }
    if !(a_w > n + 1.0) {
        return Err(Error::Domain(format!(
            "a_w must exceed n + 1 = {} for the prior moments to exist, got {a_w}",
            n + 1.0
        )));
    }
    let (mean, cov) = net.moments();
    let t0 = cov * (a_mu * (a_w - n - 1.0) / (a_mu + 1.0));
    NormalWishartPrior::new(mean, a_mu, t0, a_w)
}

/// Mean and covariance of one observation implied by a normal-Wishart prior.
pub fn implied_moments(prior: &NormalWishartPrior) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = prior.n() as f64;
    if !(prior.a_w() > n + 1.0) {
        return Err(Error::Domain(format!(
            "covariance undefined unless a_w > {}, got {}",
            n + 1.0,
            prior.a_w()
        )));
    }
    let scale = (prior.a_mu() + 1.0) / prior.a_mu() / (prior.a_w() - n - 1.0);
    Ok((prior.mu0().clone(), prior.t0() * scale))
}
