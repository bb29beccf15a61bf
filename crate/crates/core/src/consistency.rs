//! Numerical checks that Dirichlet and normal-Wishart joint priors factor
//! into independent per-node (and per-row) pieces after the change of
//! variables, plus a non-Dirichlet prior that must fail the same check.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::discrete::{log_prior_density_conditionals, DirichletJointPrior};
use crate::error::{Error, Result};
use crate::gaussian::{log_nw_density_regression, nw_node_factors, NormalWishartPrior};
use crate::transforms::{
    conditionals_to_joint, log_jacobian_discrete, ConditionalDiscreteParams, DiscreteScheme,
    JointDiscreteParams, RegressionParams,
};

/// Largest mixed second difference of `log_f` over pairs of blocks.
///
/// For blocks `s != t` this is
/// `f(a) - f(a[s<-b]) - f(a[t<-b]) + f(a[s,t<-b])`, which vanishes for every
/// `a`, `b` exactly when `f` is a sum of per-block terms.
pub fn factorization_defect<F>(log_f: F, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64>
where
    F: Fn(&[Vec<f64>]) -> Result<f64>,
{
    if a.len() != b.len() {
        return Err(Error::usage("points have different block counts"));
    }
    let base = log_f(a)?;
    let mut swapped = Vec::with_capacity(a.len());
    for s in 0..a.len() {
        let mut x = a.to_vec();
        x[s] = b[s].clone();
        swapped.push(log_f(&x)?);
    }
    let mut worst: f64 = 0.0;
    for s in 0..a.len() {
        for t in s + 1..a.len() {
            let mut x = a.to_vec();
            x[s] = b[s].clone();
            x[t] = b[t].clone();
            let d = base - swapped[s] - swapped[t] + log_f(&x)?;
            worst = worst.max(d.abs());
        }
    }
    Ok(worst)
}

/// Conditional rows (one per position and predecessor configuration) as blocks.
pub fn conditional_blocks(c: &ConditionalDiscreteParams) -> Vec<Vec<f64>> {
    let cards = c.position_cards();
    c.tables()
        .iter()
        .zip(&cards)
        .flat_map(|(t, &r)| t.chunks(r).map(<[f64]>::to_vec))
        .collect()
}

/// Inverse of [`conditional_blocks`] for the scheme and order of `like`.
pub fn conditionals_from_blocks(
    like: &ConditionalDiscreteParams,
    blocks: &[Vec<f64>],
) -> Result<ConditionalDiscreteParams> {
    let mut tables = Vec::with_capacity(like.tables().len());
    let mut it = blocks.iter();
    for t in like.tables() {
        let r = like.scheme().card(like.order()[tables.len()]);
        let mut table = Vec::with_capacity(t.len());
        for _ in 0..t.len() / r {
            let row = it.next().ok_or_else(|| Error::usage("too few blocks"))?;
            table.extend_from_slice(row);
        }
        tables.push(table);
    }
    ConditionalDiscreteParams::new(like.scheme().clone(), like.order().to_vec(), tables)
}

/// `(m_k, v_k, b_k...)` for each position as blocks.
pub fn regression_blocks(r: &RegressionParams) -> Vec<Vec<f64>> {
    (0..r.n())
        .map(|k| {
            let mut v = vec![r.intercepts()[k], r.variances()[k]];
            v.extend_from_slice(&r.coefficients()[k]);
            v
        })
        .collect()
}

pub fn regression_from_blocks(order: &[usize], blocks: &[Vec<f64>]) -> Result<RegressionParams> {
    let intercepts = blocks.iter().map(|b| b[0]).collect();
    let variances = blocks.iter().map(|b| b[1]).collect();
    let coefficients = blocks.iter().map(|b| b[2..].to_vec()).collect();
    RegressionParams::new(order.to_vec(), intercepts, coefficients, variances)
}

pub fn random_order<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Conditional rows drawn away from the simplex boundary.
pub fn random_conditionals<R: Rng + ?Sized>(
    scheme: &DiscreteScheme,
    order: &[usize],
    rng: &mut R,
) -> Result<ConditionalDiscreteParams> {
    let mut tables = Vec::with_capacity(order.len());
    let mut preds = 1;
    for &var in order {
        let r = scheme.card(var);
        let mut t = Vec::with_capacity(preds * r);
        for _ in 0..preds {
            let w: Vec<f64> = (0..r).map(|_| 0.05 + rng.random::<f64>()).collect();
            let s: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / s).collect();
            // make the row sum to one to the last bit
            let head: f64 = row[..r - 1].iter().sum();
            row[r - 1] = 1.0 - head;
            t.extend(row);
        }
        tables.push(t);
        preds *= r;
    }
    ConditionalDiscreteParams::new(scheme.clone(), order.to_vec(), tables)
}

/// Intercepts and coefficients in `[-1, 1)`, variances in `[e^-1, e)`.
pub fn random_regression<R: Rng + ?Sized>(order: &[usize], rng: &mut R) -> Result<RegressionParams> {
    let n = order.len();
    let intercepts = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let coefficients = (0..n)
        .map(|k| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let variances = (0..n).map(|_| rng.random_range(-1.0f64..1.0).exp()).collect();
    RegressionParams::new(order.to_vec(), intercepts, coefficients, variances)
}

/// Worst deviations seen over a batch of random points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    pub points: usize,
    /// `|joint route - factored route|`.
    pub max_identity_deviation: f64,
    /// Largest [`factorization_defect`] of the joint route.
    pub max_factorization_defect: f64,
}

/// Joint Dirichlet density pushed through the Jacobian versus the factored
/// product of local Dirichlets, at `points` random orders and parameters.
pub fn check_dirichlet<R: Rng + ?Sized>(
    prior: &DirichletJointPrior,
    points: usize,
    rng: &mut R,
) -> Result<ConsistencyReport> {
    let scheme = prior.scheme();
    let mut report = ConsistencyReport { points, max_identity_deviation: 0.0, max_factorization_defect: 0.0 };
    for _ in 0..points {
        let order = random_order(scheme.n(), rng);
        let c = random_conditionals(scheme, &order, rng)?;
        let routed = |c: &ConditionalDiscreteParams| -> Result<f64> {
            Ok(prior.log_density_joint(&conditionals_to_joint(c))? + log_jacobian_discrete(c))
        };
        let factored = log_prior_density_conditionals(prior, &c)?;
        let dev = (routed(&c)? - factored).abs();
        report.max_identity_deviation = report.max_identity_deviation.max(dev);

        let other = random_conditionals(scheme, &order, rng)?;
        let defect = factorization_defect(
            |blocks| routed(&conditionals_from_blocks(&c, blocks)?),
            &conditional_blocks(&c),
            &conditional_blocks(&other),
        )?;
        report.max_factorization_defect = report.max_factorization_defect.max(defect);
    }
    Ok(report)
}

/// The prior `1 / (theta_x (1 - theta_x))` on the joint of two binary
/// variables, with `theta_x = p(X = 0)` and `X` the first variable. It is a
/// proper density (uniform in the `X -> Y` coordinates) that is not Dirichlet.
pub fn counterexample_log_density(theta: &JointDiscreteParams) -> Result<f64> {
    if theta.scheme().cardinalities() != [2, 2] {
        return Err(Error::usage("the counterexample is defined for two binary variables"));
    }
    let t = theta.table();
    let theta_x = t[0] + t[1];
    Ok(-(theta_x.ln() + (1.0 - theta_x).ln()))
}

/// Factorization defects of the counterexample prior expressed in the
/// `Y -> X` coordinates, one per random pair of points.
pub fn counterexample_defects<R: Rng + ?Sized>(points: usize, rng: &mut R) -> Result<Vec<f64>> {
    let scheme = DiscreteScheme::new(vec![2, 2])?;
    let order = [1, 0];
    (0..points)
        .map(|_| {
            let a = random_conditionals(&scheme, &order, rng)?;
            let b = random_conditionals(&scheme, &order, rng)?;
            factorization_defect(
                |blocks| {
                    let c = conditionals_from_blocks(&a, blocks)?;
                    Ok(counterexample_log_density(&conditionals_to_joint(&c))? + log_jacobian_discrete(&c))
                },
                &conditional_blocks(&a),
                &conditional_blocks(&b),
            )
        })
        .collect()
}

/// Normal-Wishart density via `(mu, W)` versus the per-node factored form.
pub fn check_normal_wishart<R: Rng + ?Sized>(
    prior: &NormalWishartPrior,
    points: usize,
    rng: &mut R,
) -> Result<ConsistencyReport> {
    let n = prior.n();
    let mut report = ConsistencyReport { points, max_identity_deviation: 0.0, max_factorization_defect: 0.0 };
    for _ in 0..points {
        let order = random_order(n, rng);
        let r = random_regression(&order, rng)?;
        let joint = log_nw_density_regression(prior, &r)?;
        let factored = nw_node_factors(prior, &r)?.total();
        report.max_identity_deviation = report.max_identity_deviation.max((joint - factored).abs());

        let other = random_regression(&order, rng)?;
        let defect = factorization_defect(
            |blocks| log_nw_density_regression(prior, &regression_from_blocks(&order, blocks)?),
            &regression_blocks(&r),
            &regression_blocks(&other),
        )?;
        report.max_factorization_defect = report.max_factorization_defect.max(defect);
    }
    Ok(report)
}
