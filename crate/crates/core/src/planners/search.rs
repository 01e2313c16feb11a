//! Generic UCT search over a fixed, indexed action set.

use crate::rng::CounterRng;

/// A deterministic sequential decision problem.
pub trait SearchProblem {
    type State: Clone;

    fn num_actions(&self) -> usize;

    /// Successor state, step reward, and whether the successor is terminal.
    fn step(&self, state: &Self::State, action: usize) -> (Self::State, f64, bool);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub iterations: u64,
    pub uct_c: f64,
    /// Maximum depth in actions, rollouts included.
    pub horizon: usize,
    pub discount: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub n: u64,
    /// Sum of discounted returns from the edge into this node onwards.
    pub value_sum: f64,
    pub children: Vec<Option<usize>>,
    /// Reward of the edge into this node.
    pub reward: f64,
    pub terminal: bool,
    pub depth: usize,
    pub state: S,
}

impl<S> Node<S> {
    pub fn mean(&self) -> f64 {
        self.value_sum / self.n as f64
    }
}

/// UCT choice: the lowest-index unvisited child if any, otherwise the
/// argmax of `mean + c * sqrt(ln n_parent / n_child)`, ties to the lowest
/// index. `children` holds `(visits, mean)` for visited children.
pub fn uct_select(parent_n: u64, children: &[Option<(u64, f64)>], c: f64) -> usize {
    if let Some(i) = children
        .iter()
        .position(|ch| ch.is_none_or(|(n, _)| n == 0))
    {
        return i;
    }
    let ln = (parent_n as f64).ln();
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, ch) in children.iter().enumerate() {
        let (n, mean) = ch.unwrap();
        let score = mean + c * (ln / n as f64).sqrt();
        if score > best.0 {
            best = (score, i);
        }
    }
    best.1
}

#[derive(Debug, Clone)]
pub struct SearchTree<S> {
    nodes: Vec<Node<S>>,
}

impl<S> SearchTree<S> {
    pub fn root(&self) -> &Node<S> {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &Node<S> {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node<S>] {
        &self.nodes
    }

    /// Visit counts of the root children (0 when unexpanded).
    pub fn root_visits(&self) -> Vec<u64> {
        self.root()
            .children
            .iter()
            .map(|c| c.map_or(0, |i| self.nodes[i].n))
            .collect()
    }

    /// Mean return of each root child, if visited.
    pub fn root_means(&self) -> Vec<Option<f64>> {
        self.root()
            .children
            .iter()
            .map(|c| c.map(|i| self.nodes[i].mean()))
            .collect()
    }

    /// Most visited root child; ties go to the lowest index.
    pub fn best_action(&self) -> usize {
        let visits = self.root_visits();
        let mut best = 0;
        for (i, v) in visits.iter().enumerate() {
            if *v > visits[best] {
                best = i;
            }
        }
        best
    }
}

fn rollout<P: SearchProblem>(
    problem: &P,
    mut state: P::State,
    depth: usize,
    p: &SearchParams,
    rng: &mut CounterRng,
) -> f64 {
    let mut ret = 0.0;
    let mut scale = 1.0;
    for _ in depth..p.horizon {
        let (next, r, terminal) = problem.step(&state, rng.below(problem.num_actions()));
        ret += scale * r;
        if terminal {
            break;
        }
        scale *= p.discount;
        state = next;
    }
    ret
}

/// Runs UCT from `root`. The root starts with one visit, so every expanded
/// non-terminal node below the horizon satisfies `n = 1 + sum(children n)`.
/// Rollouts choose uniformly random actions from a stream keyed by
/// (seed, node id, iteration).
pub fn search<P: SearchProblem>(
    problem: &P,
    root: P::State,
    p: &SearchParams,
) -> SearchTree<P::State> {
    let k = problem.num_actions();
    let mut nodes = vec![Node {
        n: 1,
        value_sum: 0.0,
        children: vec![None; k],
        reward: 0.0,
        terminal: false,
        depth: 0,
        state: root,
    }];
    let mut path = Vec::with_capacity(p.horizon + 1);
    for it in 0..p.iterations {
        path.clear();
        path.push(0);
        let mut cur = 0;
        let mut future = 0.0;
        loop {
            let node = &nodes[cur];
            if node.terminal || node.depth >= p.horizon {
                break;
            }
            if let Some(a) = node.children.iter().position(Option::is_none) {
                let (state, reward, terminal) = problem.step(&node.state, a);
                let depth = node.depth + 1;
                let id = nodes.len();
                if !terminal && depth < p.horizon {
                    let mut rng = CounterRng::keyed(p.seed, &[id as u64, it]);
                    future = rollout(problem, state.clone(), depth, p, &mut rng);
                }
                nodes.push(Node {
                    n: 0,
                    value_sum: 0.0,
                    children: vec![None; k],
                    reward,
                    terminal,
                    depth,
                    state,
                });
                nodes[cur].children[a] = Some(id);
                path.push(id);
                break;
            }
            let stats: Vec<Option<(u64, f64)>> = node
                .children
                .iter()
                .map(|c| c.map(|i| (nodes[i].n, nodes[i].mean())))
                .collect();
            cur = node.children[uct_select(node.n, &stats, p.uct_c)].unwrap();
            path.push(cur);
        }
        let mut g = future;
        for &id in path.iter().rev() {
            let node = &mut nodes[id];
            if id != 0 {
                g = node.reward + p.discount * g;
            }
            node.n += 1;
            node.value_sum += g;
        }
    }
    SearchTree { nodes }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Depth-1 bandit with fixed rewards.
    struct Bandit(Vec<f64>);

    impl SearchProblem for Bandit {
        type State = ();
        fn num_actions(&self) -> usize {
            self.0.len()
        }
        fn step(&self, _: &(), a: usize) -> ((), f64, bool) {
            ((), self.0[a], true)
        }
    }

    fn params(iterations: u64) -> SearchParams {
        SearchParams {
            iterations,
            uct_c: 1.0,
            horizon: 5,
            discount: 0.95,
            seed: 3,
        }
    }

    #[test]
    fn uct_examples() {
        assert_eq!(
            uct_select(10, &[Some((5, 1.0)), None, Some((2, 1.2))], 1.0),
            1
        );
        assert_eq!(uct_select(10, &[Some((5, 1.0)), Some((2, 1.2))], 1.0), 1);
        assert_eq!(uct_select(9, &[Some((3, 0.5)); 3], 1.0), 0);
    }

    #[test]
    fn bandit_prefers_best_arm() {
        let tree = search(&Bandit(vec![0.1, 0.9, 0.5]), (), &params(300));
        assert_eq!(tree.best_action(), 1);
        let means = tree.root_means();
        assert!((means[1].unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn root_visits_add_up() {
        let tree = search(&Bandit(vec![0.0, 1.0]), (), &params(50));
        assert_eq!(tree.root().n, 1 + tree.root_visits().iter().sum::<u64>());
        assert_eq!(tree.root().n, 51);
    }

    #[test]
    fn single_action_is_chosen() {
        let tree = search(&Bandit(vec![-1.0]), (), &params(10));
        assert_eq!(tree.best_action(), 0);
    }
}
