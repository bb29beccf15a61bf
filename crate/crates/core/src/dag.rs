//! Directed acyclic graphs over named variables, independence equivalence,
//! and covered-arc reversals.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// A directed arc `from -> to` between node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
}

impl Arc {
    pub fn new(from: usize, to: usize) -> Self {
        Self { from, to }
    }

    pub fn reversed(self) -> Self {
        Self::new(self.to, self.from)
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// A DAG over `n` named variables stored as sorted parent lists.
///
/// Construction validates acyclicity, index bounds and name uniqueness, so
/// every `Dag` value is a valid structure. Equality and hashing are
/// structural (names plus parent sets).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<Vec<usize>>,
}

impl Dag {
    pub fn new(names: Vec<String>, mut parents: Vec<Vec<usize>>) -> Result<Self> {
        let n = names.len();
        if parents.len() != n {
            return Err(Error::usage(format!(
                "{} parent lists given for {} variables",
                parents.len(),
                n
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::usage(format!("duplicate variable name `{name}`")));
            }
        }
        for (i, pa) in parents.iter_mut().enumerate() {
            pa.sort_unstable();
            pa.dedup();
            if let Some(&bad) = pa.iter().find(|&&p| p >= n) {
                return Err(Error::usage(format!("parent index {bad} out of range for node {i}")));
            }
            if pa.binary_search(&i).is_ok() {
                return Err(Error::Cycle(vec![i]));
            }
        }
        topological_order_of(&parents)?;
        Ok(Self { names, parents })
    }

    /// Graph with no arcs.
    pub fn empty(names: Vec<String>) -> Result<Self> {
        let n = names.len();
        Self::new(names, vec![Vec::new(); n])
    }

    pub fn from_arcs(names: Vec<String>, arcs: &[Arc]) -> Result<Self> {
        let n = names.len();
        let mut parents = vec![Vec::new(); n];
        for a in arcs {
            if a.from >= n || a.to >= n {
                return Err(Error::usage(format!("arc {a} out of range for {n} variables")));
            }
            if a.from == a.to {
                return Err(Error::Cycle(vec![a.from]));
            }
            parents[a.to].push(a.from);
        }
        Self::new(names, parents)
    }

    /// Builds a DAG from arcs given as `(from, to)` variable names.
    pub fn from_named_arcs<S: AsRef<str>>(names: Vec<String>, arcs: &[(S, S)]) -> Result<Self> {
        let index: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::usage(format!("arc mentions unknown variable `{s}`")))
        };
        let arcs = arcs
            .iter()
            .map(|(a, b)| Ok(Arc::new(lookup(a.as_ref())?, lookup(b.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_arcs(names, &arcs)
    }

    /// Default variable names `X0..X{n-1}`.
    pub fn default_names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("X{i}")).collect()
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    /// Sorted parent indices of `node`.
    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn parent_sets(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        to < self.n() && self.parents[to].binary_search(&from).is_ok()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_arc(a, b) || self.has_arc(b, a)
    }

    /// All arcs sorted by `(from, to)`.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs: Vec<Arc> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(to, pa)| pa.iter().map(move |&from| Arc::new(from, to)))
            .collect();
        arcs.sort_unstable();
        arcs
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn topological_order(&self) -> Vec<usize> {
        topological_order_of(&self.parents).expect("Dag invariant: acyclic")
    }

    /// Whether a directed path `from ~> to` exists (a node reaches itself).
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let children = self.children();
        let mut seen = vec![false; self.n()];
        let mut stack = vec![from];
        while let Some(u) = stack.pop() {
            if u == to {
                return true;
            }
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            stack.extend(children[u].iter().copied().filter(|&c| !seen[c]));
        }
        false
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n()];
        for (to, pa) in self.parents.iter().enumerate() {
            for &from in pa {
                ch[from].push(to);
            }
        }
        ch
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::usage(format!("node index {i} out of range for {} variables", self.n())));
        }
        Ok(())
    }

    fn require_arc(&self, arc: Arc) -> Result<()> {
        self.check_node(arc.from)?;
        self.check_node(arc.to)?;
        if !self.has_arc(arc.from, arc.to) {
            return Err(Error::usage(format!("arc {arc} is not present")));
        }
        Ok(())
    }

    /// Copy with `arc` added. Fails if already adjacent or a cycle would form.
    pub fn with_arc(&self, arc: Arc) -> Result<Self> {
        self.check_node(arc.from)?;
        self.check_node(arc.to)?;
        if arc.from == arc.to {
            return Err(Error::Cycle(vec![arc.from]));
        }
        if self.adjacent(arc.from, arc.to) {
            return Err(Error::usage(format!("nodes of {arc} are already adjacent")));
        }
        if self.reaches(arc.to, arc.from) {
            return Err(Error::Cycle(vec![arc.from, arc.to]));
        }
        let mut next = self.clone();
        let pa = &mut next.parents[arc.to];
        let pos = pa.binary_search(&arc.from).unwrap_err();
        pa.insert(pos, arc.from);
        Ok(next)
    }

    pub fn without_arc(&self, arc: Arc) -> Result<Self> {
        self.require_arc(arc)?;
        let mut next = self.clone();
        next.parents[arc.to].retain(|&p| p != arc.from);
        Ok(next)
    }

    /// Copy with `arc` turned around. Fails if the reversal creates a cycle.
    pub fn with_reversed(&self, arc: Arc) -> Result<Self> {
        self.without_arc(arc)?.with_arc(arc.reversed())
    }

    /// Unordered adjacent pairs `(min, max)`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.arcs()
            .into_iter()
            .map(|a| (a.from.min(a.to), a.from.max(a.to)))
            .collect()
    }

    /// Triples `(i, j, k)` with `i -> j <- k`, `i < k` and `i`, `k` non-adjacent.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for (j, pa) in self.parents.iter().enumerate() {
            for (a, &i) in pa.iter().enumerate() {
                for &k in &pa[a + 1..] {
                    if !self.adjacent(i, k) {
                        out.insert((i, j, k));
                    }
                }
            }
        }
        out
    }

    /// An arc is covered when `Pa(to) \ {from} == Pa(from)`.
    pub fn is_covered(&self, arc: Arc) -> Result<bool> {
        self.require_arc(arc)?;
        let rest = self.parents[arc.to].iter().filter(|&&p| p != arc.from);
        Ok(rest.eq(self.parents[arc.from].iter()))
    }

    pub fn covered_arcs(&self) -> Vec<Arc> {
        self.arcs()
            .into_iter()
            .filter(|&a| self.is_covered(a).unwrap_or(false))
            .collect()
    }

    /// Re-expresses this DAG with variables listed in the order of `names`.
    pub fn aligned_to(&self, names: &[String]) -> Result<Self> {
        if names == self.names.as_slice() {
            return Ok(self.clone());
        }
        if names.len() != self.n() {
            return Err(Error::usage("DAGs are over different variable sets"));
        }
        let perm = names
            .iter()
            .map(|s| {
                self.index_of(s)
                    .ok_or_else(|| Error::usage(format!("variable `{s}` missing from DAG")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut new_index = vec![0; self.n()];
        for (new, &old) in perm.iter().enumerate() {
            new_index[old] = new;
        }
        let parents = perm
            .iter()
            .map(|&old| self.parents[old].iter().map(|&p| new_index[p]).collect())
            .collect();
        Self::new(names.to_vec(), parents)
    }
}

/// Kahn's algorithm, picking the lowest ready index first.
pub fn topological_order_of(parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children = vec![Vec::new(); n];
    for (to, pa) in parents.iter().enumerate() {
        for &from in pa {
            children[from].push(to);
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop_first() {
        order.push(u);
        for &c in &children[u] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).filter(|&i| indegree[i] > 0).collect();
        return Err(Error::Cycle(stuck));
    }
    Ok(order)
}

pub fn topological_order(dag: &Dag) -> Vec<usize> {
    dag.topological_order()
}

/// Same skeleton and same v-structures.
pub fn independence_equivalent(d1: &Dag, d2: &Dag) -> Result<bool> {
    let d2 = d2.aligned_to(d1.names())?;
    Ok(d1.skeleton() == d2.skeleton() && d1.v_structures() == d2.v_structures())
}

/// Breadth-first search over covered-arc reversals from `d1` to `d2`.
///
/// Returns the arcs to reverse, each as it appears in the graph at its turn,
/// or `None` when `d2` is unreachable. Reversals never change the skeleton,
/// so differing skeletons short-circuit to `None`.
pub fn covered_reversal_sequence(d1: &Dag, d2: &Dag) -> Result<Option<Vec<Arc>>> {
    let target = d2.aligned_to(d1.names())?;
    if d1 == &target {
        return Ok(Some(Vec::new()));
    }
    if d1.skeleton() != target.skeleton() {
        return Ok(None);
    }
    let mut prev: HashMap<Vec<Vec<usize>>, Option<(Vec<Vec<usize>>, Arc)>> = HashMap::new();
    prev.insert(d1.parents.clone(), None);
    let mut queue = VecDeque::from([d1.clone()]);
    while let Some(cur) = queue.pop_front() {
        for arc in cur.covered_arcs() {
            let next = cur
                .with_reversed(arc)
                .expect("reversing a covered arc keeps the graph acyclic");
            if prev.contains_key(&next.parents) {
                continue;
            }
            prev.insert(next.parents.clone(), Some((cur.parents.clone(), arc)));
            if next == target {
                let mut path = Vec::new();
                let mut key = next.parents;
                while let Some(Some((p, a))) = prev.get(&key) {
                    path.push(*a);
                    key = p.clone();
                }
                path.reverse();
                return Ok(Some(path));
            }
            queue.push_back(next);
        }
    }
    Ok(None)
}
