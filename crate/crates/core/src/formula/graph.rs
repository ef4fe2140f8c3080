use super::Clause;

/// Variable interaction graph: two variables are adjacent when some clause
/// contains both.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedGraph {
    adjacency: Vec<Vec<usize>>,
}

impl InducedGraph {
    pub fn from_clauses<'a>(n: usize, clauses: impl Iterator<Item = &'a Clause>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for c in clauses {
            let lits = c.literals();
            for (i, a) in lits.iter().enumerate() {
                for b in &lits[i + 1..] {
                    adjacency[a.var()].push(b.var());
                    adjacency[b.var()].push(a.var());
                }
            }
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        InducedGraph { adjacency }
    }

    pub fn neighbors(&self, var: usize) -> &[usize] {
        &self.adjacency[var]
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_isolated(&self, var: usize) -> bool {
        self.adjacency[var].is_empty()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Connected components over the variables that occur in some clause.
///
/// Each component is sorted ascending; the list is sorted by size
/// descending, then lexicographically. A variable occurring only in unit
/// clauses forms a singleton component.
pub fn components_of_clauses<'a>(n: usize, clauses: impl Iterator<Item = &'a Clause>) -> Vec<Vec<usize>> {
    let mut sets = DisjointSets::new(n);
    let mut present = vec![false; n];
    for c in clauses {
        let mut vars = c.vars();
        if let Some(first) = vars.next() {
            present[first] = true;
            for v in vars {
                present[v] = true;
                sets.union(first, v);
            }
        }
    }
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in (0..n).filter(|&v| present[v]) {
        let root = sets.find(v);
        by_root[root].push(v);
    }
    let mut comps: Vec<Vec<usize>> = by_root.into_iter().filter(|c| !c.is_empty()).collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    comps
}

/// Connected components of a formula's induced graph (isolated variables omitted).
pub fn connected_components(formula: &super::Formula) -> Vec<Vec<usize>> {
    components_of_clauses(formula.num_vars(), formula.clauses().iter())
}
