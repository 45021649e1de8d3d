use std::collections::BTreeSet;

use rand::Rng;

use crate::election::{content_lines, ParseError, ParseErrorKind};

/// Bipartite graph with `k` vertices per side: `1..=k` on the left,
/// `k+1..=2k` on the right. Edges are `(i, j)` with `i <= k < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    k: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, String> {
        if k == 0 {
            return Err("k must be at least 1".into());
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if !(1..=k).contains(&i) || !(k + 1..=2 * k).contains(&j) {
                return Err(format!("edge ({i}, {j}) outside 1..={k} x {}..={}", k + 1, 2 * k));
            }
            if !set.insert((i, j)) {
                return Err(format!("duplicate edge ({i}, {j})"));
            }
        }
        Ok(BipartiteGraph { k, edges: set })
    }

    pub fn complete(k: usize) -> Self {
        let edges = (1..=k).flat_map(|i| (k + 1..=2 * k).map(move |j| (i, j)));
        BipartiteGraph::new(k, edges).unwrap()
    }

    /// Every graph on `k` vertices per side, indexed by edge bitmask.
    pub fn all(k: usize) -> impl Iterator<Item = BipartiteGraph> {
        let slots: Vec<(usize, usize)> = (1..=k)
            .flat_map(|i| (k + 1..=2 * k).map(move |j| (i, j)))
            .collect();
        (0u64..1 << slots.len()).map(move |mask| {
            let edges = slots
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, e)| *e);
            BipartiteGraph::new(k, edges).unwrap()
        })
    }

    pub fn random<R: Rng + ?Sized>(k: usize, density: f64, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        for i in 1..=k {
            for j in k + 1..=2 * k {
                if rng.random_bool(density) {
                    edges.push((i, j));
                }
            }
        }
        BipartiteGraph::new(k, edges).unwrap()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("k {}\n", self.k);
        for (i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    /// Parses `k <int>` followed by one `i j` edge per line.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = content_lines(text);
        let err = |line: usize, msg: String| ParseError::new(line, ParseErrorKind::Other(msg));
        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing `k <int>` line".into()))?;
        let k: usize = header
            .strip_prefix('k')
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| err(hline, "expected `k <int>`".into()))?;
        let mut edges = Vec::new();
        let mut last = hline;
        for (lineno, line) in lines {
            last = lineno;
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| err(lineno, format!("bad vertex {t:?}"))))
                .collect::<Result<_, _>>()?;
            let [i, j] = nums[..] else {
                return Err(err(lineno, "expected `i j`".into()));
            };
            edges.push((i, j));
        }
        BipartiteGraph::new(k, edges).map_err(|e| err(last, e))
    }
}
