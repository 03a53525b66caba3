//! Power-iteration ranking over small dense-indexed graphs.
//!
//! Graphs are given as adjacency lists over node indices `0..n`, one list of
//! distinct successors per node. Both the whole-KB popularity table and the
//! per-request disambiguation graph go through these routines.

/// PageRank with uniform teleport. Mass sitting on dangling nodes is spread
/// uniformly over all nodes on every iteration, so the vector stays a
/// probability distribution.
pub fn pagerank(successors: &[Vec<usize>], damping: f64, iterations: usize) -> Vec<f64> {
    let n = successors.len();
    if n == 0 {
        return Vec::new();
    }
    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        let dangling: f64 = successors
            .iter()
            .zip(&rank)
            .filter(|(succ, _)| succ.is_empty())
            .map(|(_, r)| r)
            .sum();
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|x| *x = base);
        for (u, succ) in successors.iter().enumerate() {
            if succ.is_empty() {
                continue;
            }
            let share = damping * rank[u] / succ.len() as f64;
            for &v in succ {
                next[v] += share;
            }
        }
        std::mem::swap(&mut rank, &mut next);
    }
    rank
}

/// Hub and authority vectors, L1-normalised after every half step.
#[derive(Debug, Clone)]
pub struct Hits<'g> {
    successors: &'g [Vec<usize>],
    predecessors: Vec<Vec<usize>>,
    pub hub: Vec<f64>,
    pub authority: Vec<f64>,
}

impl<'g> Hits<'g> {
    pub fn new(successors: &'g [Vec<usize>]) -> Self {
        let n = successors.len();
        let mut predecessors = vec![Vec::new(); n];
        for (u, succ) in successors.iter().enumerate() {
            for &v in succ {
                predecessors[v].push(u);
            }
        }
        let init = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Hits {
            successors,
            predecessors,
            hub: vec![init; n],
            authority: vec![init; n],
        }
    }

    /// One round: authorities from the current hubs, then hubs from the new
    /// authorities. A vector whose update sums to zero (edgeless graph) keeps
    /// its previous value.
    pub fn step(&mut self) {
        let authority: Vec<f64> = self
            .predecessors
            .iter()
            .map(|preds| preds.iter().map(|&u| self.hub[u]).sum())
            .collect();
        if let Some(a) = l1_normalized(authority) {
            self.authority = a;
        }
        let hub: Vec<f64> = self
            .successors
            .iter()
            .map(|succ| succ.iter().map(|&v| self.authority[v]).sum())
            .collect();
        if let Some(h) = l1_normalized(hub) {
            self.hub = h;
        }
    }

    pub fn run(mut self, iterations: usize) -> (Vec<f64>, Vec<f64>) {
        for _ in 0..iterations {
            self.step();
        }
        (self.hub, self.authority)
    }
}

fn l1_normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if total <= 0.0 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= total);
    Some(v)
}
