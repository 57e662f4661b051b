use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

const ROW_TOL: f64 = 1e-12;

/// A time-homogeneous finite Markov chain.
///
/// `states[i]` is the value of the (possibly multi-dimensional) exogenous
/// state at index `i`; `transition` is stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain", into = "RawChain")]
pub struct MarkovChain {
    states: Vec<Vec<f64>>,
    transition: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawChain {
    states: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
}

impl TryFrom<RawChain> for MarkovChain {
    type Error = Error;
    fn try_from(raw: RawChain) -> Result<Self> {
        MarkovChain::new(raw.states, raw.transition)
    }
}

impl From<MarkovChain> for RawChain {
    fn from(c: MarkovChain) -> Self {
        let transition = (0..c.len()).map(|i| c.row(i).to_vec()).collect();
        RawChain {
            states: c.states,
            transition,
        }
    }
}

impl MarkovChain {
    pub fn new(states: Vec<Vec<f64>>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::param("states", "a chain needs at least one state"));
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) {
            return Err(Error::param("states", "state vectors differ in dimension"));
        }
        if transition.len() != n || transition.iter().any(|r| r.len() != n) {
            return Err(Error::param("transition", format!("expected a {n}x{n} matrix")));
        }
        for (i, row) in transition.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(Self {
            states,
            transition: transition.into_iter().flatten().collect(),
        })
    }

    /// Builds a chain from rows that are only approximately normalised; each
    /// row is divided by its sum.
    pub(crate) fn from_unnormalized(states: Vec<Vec<f64>>, mut rows: Vec<Vec<f64>>) -> Result<Self> {
        for row in rows.iter_mut() {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|p| *p /= sum);
            }
        }
        Self::new(states, rows)
    }

    /// One state, staying put forever.
    pub fn degenerate(state: Vec<f64>) -> Self {
        Self {
            states: vec![state],
            transition: vec![1.0],
        }
    }

    /// Chain whose rows are all equal to `probs` (an i.i.d. process).
    pub fn iid(states: Vec<Vec<f64>>, probs: &[f64]) -> Result<Self> {
        let rows = vec![probs.to_vec(); states.len()];
        Self::new(states, rows)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i]
    }

    /// Values of one coordinate across all states.
    pub fn coordinate(&self, d: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[d]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.transition[i * n..(i + 1) * n]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.transition[i * self.len() + j]
    }

    pub fn sparse_rows(&self) -> SparseRows {
        SparseRows::from_chain(self)
    }

    pub(crate) fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, _)| j)
    }

    fn reach(&self, start: usize, forward: bool) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            for (j, s) in seen.iter_mut().enumerate() {
                let p = if forward { self.prob(i, j) } else { self.prob(j, i) };
                if p > 0.0 && !*s {
                    *s = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// States that either cannot be reached from state 0 or cannot reach it.
    pub fn non_communicating(&self) -> Vec<usize> {
        let fwd = self.reach(0, true);
        let bwd = self.reach(0, false);
        (0..self.len()).filter(|&i| !(fwd[i] && bwd[i])).collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.non_communicating().is_empty()
    }

    /// Restricts the chain to the closed communicating class reached from
    /// `start`. Returns the reduced chain and the retained original indices.
    pub fn recurrent_class(&self, start: usize) -> (MarkovChain, Vec<usize>) {
        use petgraph::algo::condensation;
        use petgraph::graph::DiGraph;
        use petgraph::visit::EdgeRef;

        let n = self.len();
        let mut g = DiGraph::<usize, ()>::with_capacity(n, 0);
        let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
        for i in 0..n {
            for j in self.successors(i) {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
        let cond = condensation(g, true);
        let comp_of = {
            let mut c = vec![0; n];
            for idx in cond.node_indices() {
                for &i in &cond[idx] {
                    c[i] = idx.index();
                }
            }
            c
        };
        // Walk out-edges of the condensation until a closed component is hit.
        let mut comp = petgraph::graph::NodeIndex::new(comp_of[start]);
        while let Some(e) = cond.edges(comp).next() {
            comp = e.target();
        }
        let mut keep = cond[comp].clone();
        keep.sort_unstable();
        let states = keep.iter().map(|&i| self.states[i].clone()).collect();
        let rows = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| self.prob(i, j)).collect())
            .collect();
        let chain = MarkovChain::from_unnormalized(states, rows)
            .expect("closed class of a stochastic matrix is stochastic");
        (chain, keep)
    }
}

/// Compressed rows of a transition matrix (only strictly positive entries).
#[derive(Debug, Clone)]
pub struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_chain(chain: &MarkovChain) -> Self {
        let rows = (0..chain.len())
            .map(|i| {
                chain
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(j, &p)| (j, p))
                    .collect()
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Stationary law of an irreducible chain: the left Perron vector of the
/// transition matrix, normalised to sum to one.
pub fn stationary_distribution(chain: &MarkovChain) -> Result<Vec<f64>> {
    let bad = chain.non_communicating();
    if !bad.is_empty() {
        return Err(Error::Reducible { unreachable: bad });
    }
    let n = chain.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    // (Phi^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] = chain.prob(i, j);
        }
        a[(i, i)] -= 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("singular stationary system".into()))?;
    let mut pi: Vec<f64> = sol.iter().map(|&p| p.max(0.0)).collect();
    // A few power steps clean up rounding in the solve.
    for _ in 0..3 {
        let mut next = vec![0.0; n];
        for (i, &pi_i) in pi.iter().enumerate() {
            if pi_i == 0.0 {
                continue;
            }
            for (j, &p) in chain.row(i).iter().enumerate() {
                next[j] += pi_i * p;
            }
        }
        let s: f64 = next.iter().sum();
        pi = next.into_iter().map(|p| p / s).collect();
    }
    Ok(pi)
}
