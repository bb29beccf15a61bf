//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the code paths it is used to check: Jacobians come
//! from central differences, marginal likelihoods from urn products and
//! numerical quadrature, moments from matrix inversion.

#![allow(dead_code)]

use bnscore_core::dag::{Arc, Dag};
use bnscore_core::discrete::{DirichletJointPrior, DiscreteDataset};
use bnscore_core::gaussian::{GaussianDataset, NormalWishartPrior};
use bnscore_core::transforms::{DiscreteScheme, JointDiscreteParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// `log |det J|` of `f` at `x` by central differences.
pub fn fd_log_abs_det<F>(f: F, x: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x.len();
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[c] += h;
        minus[c] -= h;
        let (fp, fm) = (f(&plus), f(&minus));
        assert_eq!(fp.len(), dim, "map must be square");
        for r in 0..dim {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac.determinant().abs().ln()
}

/// Random positive joint table.
pub fn random_joint(scheme: &DiscreteScheme, rng: &mut impl Rng) -> JointDiscreteParams {
    let w = (0..scheme.state_count()).map(|_| 0.1 + rng.random::<f64>()).collect();
    JointDiscreteParams::normalized(scheme.clone(), w).unwrap()
}

pub fn random_discrete_prior(scheme: &DiscreteScheme, rng: &mut impl Rng) -> DirichletJointPrior {
    let alpha = 0.5 + 9.5 * rng.random::<f64>();
    DirichletJointPrior::new(alpha, random_joint(scheme, rng)).unwrap()
}

/// Rows drawn from a random joint table (so variables are dependent).
pub fn random_discrete_data(scheme: &DiscreteScheme, m: usize, rng: &mut impl Rng) -> DiscreteDataset {
    let joint = random_joint(scheme, rng);
    let mut rows = Vec::with_capacity(m);
    let mut cfg = vec![0; scheme.n()];
    for _ in 0..m {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = scheme.state_count() - 1;
        for (i, p) in joint.table().iter().enumerate() {
            acc += p;
            if u < acc {
                idx = i;
                break;
            }
        }
        scheme.decode(idx, &mut cfg);
        rows.push(cfg.clone());
    }
    DiscreteDataset::new(Dag::default_names(scheme.n()), scheme.clone(), rows).unwrap()
}

pub fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

pub fn random_gaussian_prior(n: usize, rng: &mut impl Rng) -> NormalWishartPrior {
    let mu0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let a_mu = 0.5 + 4.0 * rng.random::<f64>();
    let a_w = n as f64 + 1.0 + 5.0 * rng.random::<f64>();
    NormalWishartPrior::new(mu0, a_mu, random_spd(n, rng), a_w).unwrap()
}

/// Correlated Gaussian rows: x = L z + shift.
pub fn random_gaussian_data(n: usize, m: usize, rng: &mut impl Rng) -> GaussianDataset {
    let l = DMatrix::from_fn(n, n, |r, c| if c <= r { rng.random_range(-1.0..1.0) } else { 0.0 })
        + DMatrix::identity(n, n);
    let shift = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let rows = (0..m)
        .map(|_| {
            let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
            (&l * z + &shift).iter().copied().collect()
        })
        .collect();
    GaussianDataset::new(Dag::default_names(n), rows).unwrap()
}

pub fn random_dag(n: usize, rng: &mut impl Rng) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    order.shuffle(rng);
    let mut arcs = Vec::new();
    for b in 0..n {
        for a in 0..b {
            if rng.random_bool(0.5) {
                arcs.push(Arc::new(order[a], order[b]));
            }
        }
    }
    Dag::from_arcs(Dag::default_names(n), &arcs).unwrap()
}

/// Complete DAG following `order`.
pub fn complete_dag(order: &[usize]) -> Dag {
    let mut arcs = Vec::new();
    for b in 0..order.len() {
        for a in 0..b {
            arcs.push(Arc::new(order[a], order[b]));
        }
    }
    Dag::from_arcs(Dag::default_names(order.len()), &arcs).unwrap()
}

/// Pólya-urn log probability of the sequence of `vars`-configurations:
/// `prod_l (a_y + N_y) / (sum a + l)`, with `a_y` obtained by summing the
/// prior joint over the remaining variables by brute force.
pub fn polya_log_marginal(prior: &DirichletJointPrior, data: &DiscreteDataset, vars: &[usize]) -> f64 {
    if vars.is_empty() {
        return 0.0;
    }
    let scheme = prior.scheme();
    let key = |cfg: &[usize]| vars.iter().map(|&v| cfg[v]).collect::<Vec<_>>();
    let mut alpha: std::collections::HashMap<Vec<usize>, f64> = Default::default();
    let mut cfg = vec![0; scheme.n()];
    for (idx, p) in prior.joint().table().iter().enumerate() {
        scheme.decode(idx, &mut cfg);
        *alpha.entry(key(&cfg)).or_default() += prior.alpha() * p;
    }
    let mut total = 0.0;
    let mut seen: std::collections::HashMap<Vec<usize>, f64> = Default::default();
    for (l, row) in data.rows().take(data.m()).enumerate() {
        let k = key(row);
        let n = seen.entry(k.clone()).or_default();
        total += ((alpha[&k] + *n) / (prior.alpha() + l as f64)).ln();
        *n += 1.0;
    }
    total
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15): keeps bisecting the interval
/// with the largest error estimate until the summed estimate falls below
/// `tol` relative to the total.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..5000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= tol * total.abs() {
            break;
        }
        let worst = (0..parts.len()).max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3)).unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// `log p(x_1..x_m)` for one variable under `mu | w ~ N(mu0, a_mu w)`,
/// `w ~ Gamma(a_w / 2, rate t0 / 2)`, by 2-D quadrature over `(mu, log w)`.
pub fn normal_gamma_log_marginal_quadrature(xs: &[f64], mu0: f64, a_mu: f64, t0: f64, a_w: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let m = xs.len() as f64;
    let log_joint = |mu: f64, u: f64| -> f64 {
        let w = u.exp();
        let log_gamma_pdf = 0.5 * a_w * (0.5 * t0).ln() - ln_gamma(0.5 * a_w) + (0.5 * a_w - 1.0) * u
            - 0.5 * t0 * w;
        let log_prior_mu = 0.5 * (a_mu * w / (2.0 * std::f64::consts::PI)).ln()
            - 0.5 * a_mu * w * (mu - mu0).powi(2);
        let log_lik: f64 = xs
            .iter()
            .map(|x| 0.5 * (w / (2.0 * std::f64::consts::PI)).ln() - 0.5 * w * (x - mu).powi(2))
            .sum();
        // d w = w d u
        log_gamma_pdf + log_prior_mu + log_lik + u
    };
    let xbar = xs.iter().sum::<f64>() / m;
    let mu_c = (a_mu * mu0 + m * xbar) / (a_mu + m);
    let spread: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum::<f64>()
        + a_mu * m / (a_mu + m) * (mu0 - xbar).powi(2)
        + t0;
    let u_peak = ((a_w + m) / spread).ln();
    let reference = log_joint(mu_c, u_peak);
    let inner = |u: f64| {
        let sd = 1.0 / ((a_mu + m) * u.exp()).sqrt();
        let f = |mu: f64| (log_joint(mu, u) - reference).exp();
        integrate(&f, mu_c - 14.0 * sd, mu_c + 14.0 * sd, 1e-12)
    };
    let outer = integrate(&inner, u_peak - 60.0, u_peak + 6.0, 1e-12);
    outer.ln() + reference
}
