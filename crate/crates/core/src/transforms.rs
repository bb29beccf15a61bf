//! Coordinate changes between complete-structure conditional parameters and
//! order-free joint parameters, with their log-Jacobians.
//!
//! Orders are permutations of variable indices: `order[k]` is the variable at
//! position `k`. Conditional tables and regression coefficients are indexed
//! by position; joint parameters are indexed by variable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Smallest admissible probability and factorization pivot.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Default cap on the number of joint configurations.
pub const DEFAULT_MAX_STATES: usize = 1 << 20;

/// Cardinalities of discrete variables; the joint table is dense row-major
/// (last variable varies fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteScheme {
    cards: Vec<usize>,
    strides: Vec<usize>,
    states: usize,
}

impl DiscreteScheme {
    pub fn new(cards: Vec<usize>) -> Result<Self> {
        Self::with_max_states(cards, DEFAULT_MAX_STATES)
    }

    pub fn with_max_states(cards: Vec<usize>, max_states: usize) -> Result<Self> {
        if let Some(i) = cards.iter().position(|&r| r < 2) {
            return Err(Error::Domain(format!(
                "variable {i} has cardinality {}, need at least 2",
                cards[i]
            )));
        }
        let states = cards
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
            .unwrap_or(u128::MAX);
        if states > max_states as u128 {
            return Err(Error::Capacity { states, cap: max_states });
        }
        let mut strides = vec![1; cards.len()];
        for i in (0..cards.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * cards[i + 1];
        }
        Ok(Self { cards, strides, states: states as usize })
    }

    pub fn n(&self) -> usize {
        self.cards.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn card(&self, var: usize) -> usize {
        self.cards[var]
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn index_of(&self, config: &[usize]) -> usize {
        config.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn decode(&self, mut index: usize, out: &mut [usize]) {
        for (i, &s) in self.strides.iter().enumerate() {
            out[i] = index / s;
            index %= s;
        }
    }

    /// Number of configurations of `vars`.
    pub fn configs_of(&self, vars: &[usize]) -> usize {
        vars.iter().map(|&v| self.cards[v]).product()
    }

    /// Mixed-radix index of the values of `vars` (first listed is most significant).
    pub fn sub_index(&self, vars: &[usize], config: &[usize]) -> usize {
        vars.iter().fold(0, |acc, &v| acc * self.cards[v] + config[v])
    }

    /// Sums `table` (indexed by full configuration) down to `vars`.
    pub fn marginalize(&self, table: &[f64], vars: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.configs_of(vars)];
        let mut config = vec![0; self.n()];
        for (idx, &p) in table.iter().enumerate() {
            self.decode(idx, &mut config);
            out[self.sub_index(vars, &config)] += p;
        }
        out
    }
}

/// Strictly positive probability table over every joint configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDiscreteParams {
    scheme: DiscreteScheme,
    table: Vec<f64>,
}

impl JointDiscreteParams {
    pub fn new(scheme: DiscreteScheme, table: Vec<f64>) -> Result<Self> {
        if table.len() != scheme.state_count() {
            return Err(Error::usage(format!(
                "joint table has {} entries, scheme needs {}",
                table.len(),
                scheme.state_count()
            )));
        }
        if let Some(i) = table.iter().position(|&p| !(p >= POSITIVITY_TOL) || !p.is_finite()) {
            return Err(Error::Positivity(format!("joint entry {i} is {}", table[i])));
        }
        let total = neumaier_sum(&table);
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("joint table sums to {total}")));
        }
        Ok(Self { scheme, table })
    }

    /// Scales positive weights to sum to one.
    pub fn normalized(scheme: DiscreteScheme, weights: Vec<f64>) -> Result<Self> {
        let total = neumaier_sum(&weights);
        let table = weights.iter().map(|w| w / total).collect();
        Self::new(scheme, table)
    }

    pub fn uniform(scheme: DiscreteScheme) -> Self {
        let p = 1.0 / scheme.state_count() as f64;
        let table = vec![p; scheme.state_count()];
        Self { scheme, table }
    }

    pub fn scheme(&self) -> &DiscreteScheme {
        &self.scheme
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        self.scheme.marginalize(&self.table, vars)
    }
}

/// Conditional tables of a complete structure in a given order.
///
/// `tables[k][j * r + x]` is the probability that the variable at position
/// `k` takes value `x` given predecessor configuration `j` (mixed radix over
/// positions `0..k`, position 0 most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDiscreteParams {
    scheme: DiscreteScheme,
    order: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl ConditionalDiscreteParams {
    pub fn new(scheme: DiscreteScheme, order: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        check_permutation(&order, scheme.n())?;
        if tables.len() != order.len() {
            return Err(Error::usage("one conditional table per position is required"));
        }
        let mut preds = 1usize;
        for (k, t) in tables.iter().enumerate() {
            let r = scheme.card(order[k]);
            if t.len() != preds * r {
                return Err(Error::usage(format!(
                    "table at position {k} has {} entries, expected {}",
                    t.len(),
                    preds * r
                )));
            }
            for (j, row) in t.chunks(r).enumerate() {
                if let Some(x) = row.iter().position(|&p| !(p >= POSITIVITY_TOL) || !p.is_finite()) {
                    return Err(Error::Positivity(format!(
                        "conditional at position {k}, row {j}, value {x} is {}",
                        row[x]
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::Domain(format!(
                        "conditional at position {k}, row {j} sums to {s}"
                    )));
                }
            }
            preds *= r;
        }
        Ok(Self { scheme, order, tables })
    }

    pub fn scheme(&self) -> &DiscreteScheme {
        &self.scheme
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    /// Cardinality of the variable at each position.
    pub fn position_cards(&self) -> Vec<usize> {
        self.order.iter().map(|&v| self.scheme.card(v)).collect()
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::usage(format!("order has {} entries for {n} variables", order.len())));
    }
    for &v in order {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::usage(format!("{order:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

/// Product of conditionals along the order, one entry per joint configuration.
pub fn conditionals_to_joint(c: &ConditionalDiscreteParams) -> JointDiscreteParams {
    let scheme = c.scheme.clone();
    let mut table = vec![0.0; scheme.state_count()];
    let mut config = vec![0; scheme.n()];
    for (idx, slot) in table.iter_mut().enumerate() {
        scheme.decode(idx, &mut config);
        let mut prob = 1.0;
        let mut pred = 0usize;
        for (k, &var) in c.order.iter().enumerate() {
            let r = scheme.card(var);
            prob *= c.tables[k][pred * r + config[var]];
            pred = pred * r + config[var];
        }
        *slot = prob;
    }
    JointDiscreteParams { scheme, table }
}

/// Conditionals in `order` obtained by marginalizing and dividing.
pub fn joint_to_conditionals(
    j: &JointDiscreteParams,
    order: &[usize],
) -> Result<ConditionalDiscreteParams> {
    let scheme = &j.scheme;
    check_permutation(order, scheme.n())?;
    let mut tables = Vec::with_capacity(order.len());
    let mut prev = vec![1.0];
    for k in 0..order.len() {
        let r = scheme.card(order[k]);
        let marg = j.marginal(&order[..=k]);
        let mut t = vec![0.0; marg.len()];
        for (pred, &denom) in prev.iter().enumerate() {
            if !(denom > 0.0) {
                return Err(Error::Positivity(format!(
                    "marginal of predecessor configuration {pred} at position {k} is zero"
                )));
            }
            for x in 0..r {
                t[pred * r + x] = marg[pred * r + x] / denom;
            }
        }
        tables.push(t);
        prev = marg;
    }
    ConditionalDiscreteParams::new(scheme.clone(), order.to_vec(), tables)
}

/// `log |dTheta_U / dTheta_c|` for the conditional parameterization `c`.
///
/// Each conditional at position `k < n-1` contributes its log with weight
/// `prod_{j>k} r_j - 1`.
pub fn log_jacobian_discrete(c: &ConditionalDiscreteParams) -> f64 {
    let cards = c.position_cards();
    let n = cards.len();
    let mut total = 0.0;
    for k in 0..n.saturating_sub(1) {
        let weight = cards[k + 1..].iter().product::<usize>() as f64 - 1.0;
        let logs: f64 = c.tables[k].iter().map(|p| p.ln()).sum();
        total += weight * logs;
    }
    total
}

/// Linear-regression parameters of a complete Gaussian structure.
///
/// `coefficients[k][p]` (for `p < k`) weights the variable at position `p`
/// in the regression of the variable at position `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionParams {
    order: Vec<usize>,
    intercepts: Vec<f64>,
    coefficients: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

impl RegressionParams {
    pub fn new(
        order: Vec<usize>,
        intercepts: Vec<f64>,
        coefficients: Vec<Vec<f64>>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        let n = order.len();
        check_permutation(&order, n)?;
        if intercepts.len() != n || variances.len() != n || coefficients.len() != n {
            return Err(Error::usage("regression parameter lengths disagree with the order"));
        }
        for (k, b) in coefficients.iter().enumerate() {
            if b.len() != k {
                return Err(Error::usage(format!(
                    "position {k} needs {k} coefficients, got {}",
                    b.len()
                )));
            }
        }
        if let Some(k) = variances.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!(
                "conditional variance at position {k} is {}",
                variances[k]
            )));
        }
        let finite = intercepts.iter().chain(coefficients.iter().flatten()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::Domain("non-finite regression parameter".into()));
        }
        Ok(Self { order, intercepts, coefficients, variances })
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
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
}

/// Mean vector and precision matrix of a multivariate normal.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussianParams {
    mean: DVector<f64>,
    precision: DMatrix<f64>,
}

impl JointGaussianParams {
    pub fn new(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self> {
        if precision.nrows() != mean.len() {
            return Err(Error::usage("mean and precision dimensions disagree"));
        }
        linalg::check_spd(&precision, "precision matrix")?;
        Ok(Self { mean, precision })
    }

    pub fn n(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }
}

/// Mean recursion plus the precision recursion built up position by position,
/// then permuted back to variable indexing.
pub fn regression_to_joint(r: &RegressionParams) -> JointGaussianParams {
    let n = r.n();
    let mut mu_pos = vec![0.0; n];
    for k in 0..n {
        let b = &r.coefficients[k];
        mu_pos[k] = r.intercepts[k] + (0..k).map(|p| b[p] * mu_pos[p]).sum::<f64>();
    }
    let mut w = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let b = &r.coefficients[k];
        let v = r.variances[k];
        for p in 0..k {
            for q in 0..k {
                w[(p, q)] += b[p] * b[q] / v;
            }
            w[(p, k)] = -b[p] / v;
            w[(k, p)] = -b[p] / v;
        }
        w[(k, k)] = 1.0 / v;
    }
    let mut mean = DVector::zeros(n);
    let mut precision = DMatrix::zeros(n, n);
    for a in 0..n {
        mean[r.order[a]] = mu_pos[a];
        for b in 0..n {
            precision[(r.order[a], r.order[b])] = w[(a, b)];
        }
    }
    JointGaussianParams { mean, precision }
}

/// Regression parameters reproducing `g` in `order`.
///
/// Peels positions off from the last one: the current diagonal pivot gives
/// `1/v`, its column gives `-b/v`, and the Schur complement carries on.
pub fn joint_to_regression(g: &JointGaussianParams, order: &[usize]) -> Result<RegressionParams> {
    let n = g.n();
    check_permutation(order, n)?;
    let mut w = DMatrix::from_fn(n, n, |a, b| g.precision[(order[a], order[b])]);
    let mut variances = vec![0.0; n];
    let mut coefficients: Vec<Vec<f64>> = (0..n).map(|k| vec![0.0; k]).collect();
    for k in (0..n).rev() {
        let d = w[(k, k)];
        if !(d > POSITIVITY_TOL) {
            return Err(Error::NotPositiveDefinite { index: order[k], pivot: d });
        }
        variances[k] = 1.0 / d;
        for p in 0..k {
            coefficients[k][p] = -w[(p, k)] / d;
        }
        for p in 0..k {
            for q in 0..k {
                w[(p, q)] -= w[(p, k)] * w[(k, q)] / d;
            }
        }
    }
    let mu_pos: Vec<f64> = order.iter().map(|&v| g.mean[v]).collect();
    let intercepts = (0..n)
        .map(|k| mu_pos[k] - (0..k).map(|p| coefficients[k][p] * mu_pos[p]).sum::<f64>())
        .collect();
    RegressionParams::new(order.to_vec(), intercepts, coefficients, variances)
}

/// `log |dW / d(v, B)| = -sum_k (k+1) log v_k` with `k` the 1-based position.
pub fn log_jacobian_gaussian(variances: &[f64]) -> f64 {
    debug_assert!(variances.iter().all(|&v| v > 0.0));
    variances
        .iter()
        .enumerate()
        .map(|(k, v)| -((k + 2) as f64) * v.ln())
        .sum()
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_indexing() {
        let s = DiscreteScheme::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.state_count(), 12);
        assert_eq!(s.index_of(&[1, 2, 1]), 11);
        let mut c = vec![0; 3];
        s.decode(7, &mut c);
        assert_eq!(c, vec![1, 0, 1]);
        assert_eq!(s.sub_index(&[2, 0], &[1, 2, 1]), 3);
        assert!(matches!(DiscreteScheme::new(vec![2, 1]), Err(Error::Domain(_))));
        assert!(matches!(
            DiscreteScheme::with_max_states(vec![4; 11], 1 << 20),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn single_variable_passes_through() {
        let s = DiscreteScheme::new(vec![3]).unwrap();
        let c = ConditionalDiscreteParams::new(s, vec![0], vec![vec![0.2, 0.3, 0.5]]).unwrap();
        let j = conditionals_to_joint(&c);
        assert_eq!(j.table(), &[0.2, 0.3, 0.5]);
        assert_eq!(log_jacobian_discrete(&c), 0.0);
    }

    #[test]
    fn uniform_binary_pair() {
        let s = DiscreteScheme::new(vec![2, 2]).unwrap();
        let c = ConditionalDiscreteParams::new(
            s.clone(),
            vec![0, 1],
            vec![vec![0.5, 0.5], vec![0.5; 4]],
        )
        .unwrap();
        let j = conditionals_to_joint(&c);
        assert!(j.table().iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!((log_jacobian_discrete(&c) - 0.25f64.ln()).abs() < 1e-15);

        let back = joint_to_conditionals(&JointDiscreteParams::uniform(s), &[1, 0]).unwrap();
        assert_eq!(back.tables()[0], vec![0.5, 0.5]);
        assert_eq!(back.tables()[1], vec![0.5; 4]);
    }

    #[test]
    fn joint_validation() {
        let s = DiscreteScheme::new(vec![2]).unwrap();
        assert!(matches!(
            JointDiscreteParams::new(s.clone(), vec![1.0, 0.0]),
            Err(Error::Positivity(_))
        ));
        assert!(JointDiscreteParams::new(s.clone(), vec![0.5, 0.6]).is_err());
        assert!(JointDiscreteParams::new(s, vec![1.0]).is_err());
    }

    #[test]
    fn gaussian_small_cases() {
        let r = RegressionParams::new(vec![0], vec![0.0], vec![vec![]], vec![2.0]).unwrap();
        let g = regression_to_joint(&r);
        assert_eq!(g.mean()[0], 0.0);
        assert_eq!(g.precision()[(0, 0)], 0.5);

        let r = RegressionParams::new(
            vec![0, 1],
            vec![1.5, -2.0],
            vec![vec![], vec![0.0]],
            vec![1.0, 1.0],
        )
        .unwrap();
        let g = regression_to_joint(&r);
        assert_eq!(g.mean().as_slice(), &[1.5, -2.0]);
        assert_eq!(g.precision(), &DMatrix::identity(2, 2));

        let id = JointGaussianParams::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap();
        let back = joint_to_regression(&id, &[2, 0, 1]).unwrap();
        assert_eq!(back.variances(), &[1.0, 1.0, 1.0]);
        assert!(back.coefficients().iter().flatten().all(|&b| b == 0.0));
        assert!(back.intercepts().iter().all(|&m| m == 0.0));

        assert_eq!(log_jacobian_gaussian(&[1.0]), 0.0);
        assert!((log_jacobian_gaussian(&[1.0, 2.0]) + 3.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_validation() {
        assert!(matches!(
            RegressionParams::new(vec![0], vec![0.0], vec![vec![]], vec![0.0]),
            Err(Error::Domain(_))
        ));
        assert!(RegressionParams::new(vec![0, 0], vec![0.0; 2], vec![vec![], vec![0.0]], vec![1.0; 2]).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(JointGaussianParams::new(DVector::zeros(2), bad).is_err());
    }
}
