//! Posterior over structures, exhaustive enumeration for small `n`, and
//! greedy hill climbing over single-arc moves with a family-score cache.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dag::{Arc, Dag};
use crate::discrete::{self, DirichletJointPrior, DiscreteDataset};
use crate::error::{Error, Result};
use crate::gaussian::{self, BgeTerms, GaussianDataset, NormalWishartPrior};

/// Largest `n` accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION_NODES: usize = 5;

/// Log prior over structures, up to an additive constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StructurePrior {
    Uniform,
    /// Adds `kappa` (≤ 0) per arc.
    ArcPenalty { kappa: f64 },
}

impl StructurePrior {
    pub fn arc_penalty(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa > 0.0 {
            return Err(Error::Domain(format!("per-arc log penalty must be finite and <= 0, got {kappa}")));
        }
        Ok(StructurePrior::ArcPenalty { kappa })
    }

    fn per_arc(&self) -> f64 {
        match *self {
            StructurePrior::Uniform => 0.0,
            StructurePrior::ArcPenalty { kappa } => kappa,
        }
    }

    pub fn log_prior(&self, dag: &Dag) -> f64 {
        self.per_arc() * dag.arc_count() as f64
    }
}

/// A decomposable score: the total is the sum of per-family terms.
pub trait FamilyScorer {
    fn names(&self) -> &[String];
    fn family_score(&self, node: usize, parents: &[usize]) -> Result<f64>;
}

/// BDe family terms over a discrete dataset.
#[derive(Debug, Clone, Copy)]
pub struct BdeScorer<'a> {
    prior: &'a DirichletJointPrior,
    data: &'a DiscreteDataset,
}

impl<'a> BdeScorer<'a> {
    pub fn new(prior: &'a DirichletJointPrior, data: &'a DiscreteDataset) -> Result<Self> {
        if prior.scheme() != data.scheme() {
            return Err(Error::usage("prior and data cardinalities disagree"));
        }
        Ok(Self { prior, data })
    }
}

impl FamilyScorer for BdeScorer<'_> {
    fn names(&self) -> &[String] {
        self.data.names()
    }

    fn family_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        discrete::family_score_bde(self.prior, self.data, node, parents)
    }
}

/// BGe family terms; sufficient statistics are computed once.
#[derive(Debug, Clone)]
pub struct BgeScorer {
    names: Vec<String>,
    terms: BgeTerms,
}

impl BgeScorer {
    pub fn new(prior: &NormalWishartPrior, data: &GaussianDataset) -> Result<Self> {
        if prior.n() != data.n() {
            return Err(Error::usage("prior and data dimensions disagree"));
        }
        let terms = BgeTerms::new(prior, &gaussian::sufficient_stats(data))?;
        Ok(Self { names: data.names().to_vec(), terms })
    }
}

impl FamilyScorer for BgeScorer {
    fn names(&self) -> &[String] {
        &self.names
    }

    fn family_score(&self, node: usize, parents: &[usize]) -> Result<f64> {
        self.terms.family_score(node, parents)
    }
}

/// One cached family term.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyScore {
    pub node: usize,
    pub parents: Vec<usize>,
    pub value: f64,
}

/// Memoizes family terms keyed by `(node, sorted parents)`.
pub struct FamilyCache<'s, S: ?Sized> {
    scorer: &'s S,
    map: HashMap<(usize, Vec<usize>), f64>,
    hits: usize,
}

impl<'s, S: FamilyScorer + ?Sized> FamilyCache<'s, S> {
    pub fn new(scorer: &'s S) -> Self {
        Self { scorer, map: HashMap::new(), hits: 0 }
    }

    pub fn family(&mut self, node: usize, parents: &[usize]) -> Result<f64> {
        let mut key = parents.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.map.get(&(node, key.clone())) {
            self.hits += 1;
            return Ok(v);
        }
        let v = self.scorer.family_score(node, &key)?;
        if !v.is_finite() {
            return Err(Error::Domain(format!("family score of node {node} is {v}")));
        }
        self.map.insert((node, key), v);
        Ok(v)
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Cached entries sorted by node then parent set.
    pub fn entries(&self) -> Vec<FamilyScore> {
        let mut out: Vec<FamilyScore> = self
            .map
            .iter()
            .map(|((node, parents), &value)| FamilyScore { node: *node, parents: parents.clone(), value })
            .collect();
        out.sort_by(|a, b| (a.node, &a.parents).cmp(&(b.node, &b.parents)));
        out
    }

    pub fn log_score(&mut self, dag: &Dag) -> Result<f64> {
        check_names(dag, self.scorer)?;
        (0..dag.n()).map(|i| self.family(i, dag.parents(i))).sum()
    }
}

fn check_names<S: FamilyScorer + ?Sized>(dag: &Dag, scorer: &S) -> Result<()> {
    if dag.names() != scorer.names() {
        return Err(Error::usage("DAG and dataset variables differ"));
    }
    Ok(())
}

/// Marginal likelihood term of any decomposable scorer.
pub fn log_score<S: FamilyScorer + ?Sized>(dag: &Dag, scorer: &S) -> Result<f64> {
    check_names(dag, scorer)?;
    (0..dag.n()).map(|i| scorer.family_score(i, dag.parents(i))).sum()
}

/// Unnormalized `log p(dag) + log p(D | dag)`.
pub fn log_posterior<S: FamilyScorer + ?Sized>(
    dag: &Dag,
    scorer: &S,
    sprior: &StructurePrior,
) -> Result<f64> {
    Ok(sprior.log_prior(dag) + log_score(dag, scorer)?)
}

/// Normalizes log posteriors into probabilities.
pub fn normalize_log_posteriors(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Every labeled DAG on `n` nodes named `X0..`.
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>> {
    enumerate_dags_named(&Dag::default_names(n))
}

/// Every labeled DAG over `names`, in a fixed order: each unordered pair
/// `i < j` takes one of none / `i -> j` / `j -> i`, counted base 3.
pub fn enumerate_dags_named(names: &[String]) -> Result<Vec<Dag>> {
    let n = names.len();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::Capacity { states: n as u128, cap: MAX_ENUMERATION_NODES });
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut parents = vec![Vec::new(); n];
        for &(i, j) in &pairs {
            match code % 3 {
                1 => parents[j].push(i),
                2 => parents[i].push(j),
                _ => {}
            }
            code /= 3;
        }
        if let Ok(d) = Dag::new(names.to_vec(), parents) {
            out.push(d);
        }
    }
    Ok(out)
}

/// Partitions `dags` into independence-equivalence classes (indices into
/// `dags`), classes ordered by first member.
pub fn group_by_equivalence(dags: &[Dag]) -> Result<Vec<Vec<usize>>> {
    type Key = (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize, usize)>);
    let Some(first) = dags.first() else {
        return Ok(Vec::new());
    };
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, d) in dags.iter().enumerate() {
        let d = d.aligned_to(first.names())?;
        let key = (d.skeleton(), d.v_structures());
        let slot = *index.entry(key).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[slot].push(i);
    }
    Ok(classes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

impl MoveKind {
    pub fn name(self) -> &'static str {
        match self {
            MoveKind::Add => "add",
            MoveKind::Delete => "delete",
            MoveKind::Reverse => "reverse",
        }
    }
}

/// A single-arc edit; ordering is `(kind, from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub arc: Arc,
}

impl Move {
    pub fn apply(&self, dag: &Dag) -> Result<Dag> {
        match self.kind {
            MoveKind::Add => dag.with_arc(self.arc),
            MoveKind::Delete => dag.without_arc(self.arc),
            MoveKind::Reverse => dag.with_reversed(self.arc),
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.name(), self.arc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub max_parents: usize,
    /// Number of climbs; the first starts from the empty graph.
    pub restarts: usize,
    pub seed: u64,
    /// Minimum gain for a move to be accepted.
    pub tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { max_parents: 5, restarts: 1, seed: 0, tolerance: 1e-12 }
    }
}

/// One accepted step; step 0 is the starting graph and has no move.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub mv: Option<Move>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub dag: Dag,
    /// Log posterior (structure prior plus marginal likelihood).
    pub score: f64,
    /// Trace of the climb that produced `dag`.
    pub trace: Vec<TraceStep>,
    /// Which climb produced `dag` (0 is the empty-graph start).
    pub restart: usize,
    /// Final score of every climb, in order.
    pub climb_scores: Vec<f64>,
}

/// Greedy best-improvement search over add/delete/reverse moves.
///
/// Ties between equal gains go to the smallest `(kind, from, to)`. Climbs
/// after the first start from random DAGs drawn from a ChaCha8 stream
/// seeded with `config.seed`; the best climb wins, earlier on ties.
pub fn hill_climb<S: FamilyScorer + ?Sized>(
    scorer: &S,
    sprior: &StructurePrior,
    config: &SearchConfig,
) -> Result<SearchResult> {
    if config.restarts == 0 {
        return Err(Error::Domain("at least one climb is required".into()));
    }
    let names = scorer.names().to_vec();
    let mut cache = FamilyCache::new(scorer);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<SearchResult> = None;
    let mut climb_scores = Vec::with_capacity(config.restarts);
    for restart in 0..config.restarts {
        let start = if restart == 0 {
            Dag::empty(names.clone())?
        } else {
            random_dag(&names, config.max_parents, &mut rng)?
        };
        let (dag, score, trace) = climb(start, &mut cache, sprior, config)?;
        climb_scores.push(score);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(SearchResult { dag, score, trace, restart, climb_scores: Vec::new() });
        }
    }
    let mut best = best.expect("at least one climb ran");
    best.climb_scores = climb_scores;
    Ok(best)
}

/// Random order, then each forward pair becomes an arc with probability 1/2
/// while the child has room under `max_parents`.
pub fn random_dag<R: Rng + ?Sized>(names: &[String], max_parents: usize, rng: &mut R) -> Result<Dag> {
    let n = names.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut parents = vec![Vec::new(); n];
    for b in 0..n {
        for a in 0..b {
            if parents[order[b]].len() < max_parents && rng.random_bool(0.5) {
                parents[order[b]].push(order[a]);
            }
        }
    }
    Dag::new(names.to_vec(), parents)
}

fn candidate_moves(dag: &Dag, max_parents: usize) -> Vec<Move> {
    let n = dag.n();
    let mut moves = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from != to
                && !dag.adjacent(from, to)
                && dag.parents(to).len() < max_parents
                && !dag.reaches(to, from)
            {
                moves.push(Move { kind: MoveKind::Add, arc: Arc::new(from, to) });
            }
        }
    }
    let arcs = dag.arcs();
    moves.extend(arcs.iter().map(|&arc| Move { kind: MoveKind::Delete, arc }));
    for &arc in &arcs {
        if dag.parents(arc.from).len() < max_parents && dag.with_reversed(arc).is_ok() {
            moves.push(Move { kind: MoveKind::Reverse, arc });
        }
    }
    moves
}

/// Score change of `mv`, touching only the families of the arc's endpoints.
fn move_delta<S: FamilyScorer + ?Sized>(
    dag: &Dag,
    mv: Move,
    cache: &mut FamilyCache<'_, S>,
    sprior: &StructurePrior,
) -> Result<f64> {
    let Arc { from, to } = mv.arc;
    let with = |pa: &[usize], extra: usize| {
        let mut v = pa.to_vec();
        v.push(extra);
        v
    };
    let without = |pa: &[usize], gone: usize| pa.iter().copied().filter(|&p| p != gone).collect::<Vec<_>>();
    let old_to = cache.family(to, dag.parents(to))?;
    Ok(match mv.kind {
        MoveKind::Add => cache.family(to, &with(dag.parents(to), from))? - old_to + sprior.per_arc(),
        MoveKind::Delete => cache.family(to, &without(dag.parents(to), from))? - old_to - sprior.per_arc(),
        MoveKind::Reverse => {
            let old_from = cache.family(from, dag.parents(from))?;
            cache.family(to, &without(dag.parents(to), from))? - old_to
                + cache.family(from, &with(dag.parents(from), to))?
                - old_from
        }
    })
}

fn climb<S: FamilyScorer + ?Sized>(
    start: Dag,
    cache: &mut FamilyCache<'_, S>,
    sprior: &StructurePrior,
    config: &SearchConfig,
) -> Result<(Dag, f64, Vec<TraceStep>)> {
    let mut dag = start;
    let mut score = sprior.log_prior(&dag) + cache.log_score(&dag)?;
    let mut trace = vec![TraceStep { step: 0, mv: None, score }];
    loop {
        let mut best: Option<(f64, Move)> = None;
        for mv in candidate_moves(&dag, config.max_parents) {
            let delta = move_delta(&dag, mv, cache, sprior)?;
            if best.is_none_or(|(d, _)| delta > d) {
                best = Some((delta, mv));
            }
        }
        match best {
            Some((delta, mv)) if delta > config.tolerance => {
                dag = mv.apply(&dag)?;
                score += delta;
                trace.push(TraceStep { step: trace.len(), mv: Some(mv), score });
            }
            _ => break,
        }
    }
    // re-sum so the reported value does not carry accumulated rounding
    let score = sprior.log_prior(&dag) + cache.log_score(&dag)?;
    if let Some(last) = trace.last_mut() {
        last.score = score;
    }
    Ok((dag, score, trace))
}

/// Convenience: BDe log posterior.
pub fn log_posterior_discrete(
    dag: &Dag,
    data: &DiscreteDataset,
    prior: &DirichletJointPrior,
    sprior: &StructurePrior,
) -> Result<f64> {
    log_posterior(dag, &BdeScorer::new(prior, data)?, sprior)
}

/// Convenience: BGe log posterior.
pub fn log_posterior_gaussian(
    dag: &Dag,
    data: &GaussianDataset,
    prior: &NormalWishartPrior,
    sprior: &StructurePrior,
) -> Result<f64> {
    log_posterior(dag, &BgeScorer::new(prior, data)?, sprior)
}
